#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "epac/epac.hpp"
#include "epac/model.hpp"

namespace epac {

/// Everything a run depends on. Parsed from a plain-text file of
/// `key = value` lines ('#' starts a comment):
///
///   system         named system or potential spec (below)
///   betas          comma-separated inverse temperatures
///   mass           particle mass
///   scheme         A | B
///   route          sampled | oracle | analytic
///   beads          path beads (0: 64 / 256 / 1024 by temperature)
///   sweeps, burn_in, block_size, seed, threads
///   constant_mode  oracle_pin | harmonic_ti
///   fit_degree, grid_points, source_points, source_sigmas, curve_points,
///   replicas
///   t_max, dt      correlation time grid
///   output         output directory
///   pin_zero       true | false (shift curve minima to zero)
///
/// Potential specs:
///   poly: [a1, a2, ..., aK]       sum_k a_k q^k (fractions allowed)
///   morse: {De, a}                De (1 - e^{a q})^2
///   tilt: {base, f, c}            base(q) + f q + c, base any spec
/// Named systems: harmonic, asym-harmonic(f), paper-quartic,
/// paper-symmetric, morse-hcl.
struct RunConfig {
  std::string system = "paper-quartic";
  std::vector<double> betas{0.1, 1.0, 10.0, 100.0};
  double mass = 1.0;
  Scheme scheme = Scheme::B;
  GeneratingSource route = GeneratingSource::sampled;
  /// 0 selects default_beads(beta).
  int beads = 0;
  long sweeps = 20000;
  long burn_in = 2000;
  long block_size = 500;
  std::uint64_t seed = 20240501;
  unsigned threads = 0;
  ConstantMode constant_mode = ConstantMode::oracle_pin;
  int fit_degree = 4;
  int grid_points = 21;
  int source_points = 41;
  double source_sigmas = 4.0;
  int curve_points = 81;
  int replicas = 32;
  double t_max = 20.0;
  double dt = 0.05;
  std::string output = "epac-out";
  bool pin_zero = false;

  /// Resolved potential of `system`.
  PotentialModel potential() const;
  /// One `key = value` line per setting in fixed order; parsing it back
  /// yields the same configuration.
  std::string canonical() const;
  /// First 16 hex digits of SHA-256 over canonical().
  std::string hash() const;
  /// Pipeline settings at one temperature.
  PipelineOptions pipeline(double beta) const;
};

/// Throws ConfigError with the offending line on any syntax or range
/// problem.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Potential spec or named system.
PotentialModel parse_potential(std::string_view spec);

/// Rows of one CSV file; values are written with round-trip precision.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
};

std::string format_number(double value);

/// Writes `# key: value` metadata (plus config hash, seed and the units
/// note), the header and rows, through a temporary file renamed into place.
void write_csv(const std::filesystem::path& path, const RunConfig& cfg, const CsvTable& table,
               const std::map<std::string, std::string>& metadata = {});

}  // namespace epac

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epac/model.hpp"
#include "epac/oracle.hpp"
#include "epac/sampler.hpp"
#include "epac/transform.hpp"

namespace epac {

/// C(t) = (1 / 2 m w) coth(beta w / 2) cos(w t) - i (1 / 2 m w) sin(w t) + Q_min^2
/// with w = params.omega (kind = epac).
CorrelationSeries epac_autocorrelation(const EpacParameters& params, const ThermoState& ts,
                                       std::span<const double> times);

/// (1/2) m omega^2 Q^2 + f Q + (1/beta) log(2 sinh(beta omega / 2)).
double harmonic_standard_effective_potential(double omega, double f, const ThermoState& ts, double q);

/// Exact effective classical potential of the same oscillator:
/// (1/2) m omega^2 q^2 + f q + (1/beta) log(sinh(h) / h), h = beta omega / 2.
double harmonic_centroid_potential(double omega, double f, const ThermoState& ts, double q);

enum class Scheme { A, B };
std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& text);

/// Settings of one pipeline run (potential -> w -> V -> parameters).
struct PipelineOptions {
  /// sampled: path-integral table; oracle: exact tilted Hamiltonian;
  /// analytic: closed forms (quadratic potentials only).
  GeneratingSource route = GeneratingSource::sampled;
  PathEnsembleConfig ensemble;
  CentroidTableOptions table;
  /// Centroid grid points of sampled tables.
  int grid_points = 21;
  /// Source window: node count and half-width in units of sqrt(w'').
  int source_points = 41;
  double source_sigmas = 4.0;
  /// Q nodes of the reported curve.
  int curve_points = 81;
  /// Force-noise replicas for error propagation (sampled route).
  int replicas = 32;
  /// Provenance recorded in the result.
  std::string config_hash;
};

/// Where the numbers came from.
struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  /// Streams used: grid index i for mean forces, offsets for TI nodes and
  /// replicas (see the sampler and transform modules).
  std::string streams;
  GeneratingSource route = GeneratingSource::analytic;
};

struct SchemeResult {
  Scheme scheme = Scheme::B;
  /// Parameters of the input potential in its own coordinate q.
  EpacParameters params;
  /// V_beta(Q) of the input potential.
  EffectivePotentialCurve curve;
  /// Generating function that was transformed: w of the input (scheme A)
  /// or of the symmetric part in x = q + shift (scheme B).
  GeneratingFunctionTable generating;
  SourceWindow window;
  /// Sampled route only, with the symmetry family used for replica refits.
  std::optional<CentroidPotentialTable> table;
  FitFamily family = FitFamily::full;
  /// Scheme B bookkeeping: x = q + shift, V(q) = Ubar(x) + slope x (+ const
  /// inside Ubar).
  double shift = 0.0;
  double slope = 0.0;
  /// Scheme B: symmetric-part curve Ubar_beta(X) and X_min.
  std::optional<EffectivePotentialCurve> symmetric_curve;
  double x_min = 0.0;
  Provenance provenance;
};

/// Scheme A runs the pipeline on p itself. Scheme B decomposes
/// p(q) = Ubar(x) + slope x with x = q + shift, runs the pipeline on Ubar,
/// tilts by slope x, and maps back: Q_min = X_min - shift, omega = omega_bar,
/// omega_s from Ubar at X = 0. Throws NonQuartic for scheme B inputs that are
/// neither quadratic nor quartic.
SchemeResult run_scheme(Scheme scheme, const Polynomial& p, const ThermoState& ts, const PipelineOptions& opts = {});

/// Replica standard deviation of V_beta at each q (sampled scheme results;
/// zeros otherwise). NaN where fewer than two replicas reach q.
std::vector<double> curve_errors(const SchemeResult& result, std::span<const double> q, int replicas,
                                 std::uint64_t seed);

/// Quartic expansion of the symmetric curve, Ubar(X) ~ C + (1/2) m w_s^2 X^2
/// + (1/4) lambda X^4, and the implied curvature at X_min.
struct FrequencyEnhancement {
  double omega_bar = 0.0;
  double omega_s = 0.0;
  double omega_bar_err = 0.0;
  double omega_s_err = 0.0;
  double lambda = 0.0;
  double x_min = 0.0;
  /// sqrt(omega_s^2 + 3 lambda X_min^2 / m).
  double omega_predicted = 0.0;
  /// omega_bar - omega_s.
  double margin = 0.0;
  /// margin >= -3 sqrt(omega_bar_err^2 + omega_s_err^2).
  bool enhanced = false;
};

/// Requires a scheme B result. The quartic is fitted by least squares to
/// Ubar on |X| <= 1.1 |X_min| (or 1.1 sigma_Q when X_min ~ 0); throws
/// FitRejected if lambda < 0 beyond round-off.
FrequencyEnhancement frequency_enhancement_check(const SchemeResult& result_b);

}  // namespace epac

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "epac/model.hpp"
#include "epac/variational.hpp"

namespace epac {

/// Orthonormal real normal modes of a closed P-bead path.
///
/// Mode vectors are stored in FFTW half-complex order: index 0 is the
/// centroid mode (u_0 = sqrt(P) q_c), indices 1..P/2 are cosine modes
/// (P/2 the alternating mode) and P-n holds the sine partner of mode n.
/// With q = C^T u the matrix C is orthogonal, so the Gaussian path measure
/// factorizes and the spring action is 1/2 sum_j kappa_j u_j^2.
class NormalModes {
 public:
  explicit NormalModes(int beads);
  ~NormalModes();
  NormalModes(NormalModes&&) noexcept;
  NormalModes& operator=(NormalModes&&) noexcept;
  NormalModes(const NormalModes&) = delete;
  NormalModes& operator=(const NormalModes&) = delete;

  int beads() const { return beads_; }

  /// q = C^T u.
  void to_beads(std::span<const double> u, std::span<double> q);
  /// out = C g (projects a bead-space gradient onto the modes).
  void to_modes(std::span<const double> g, std::span<double> out);

  /// kappa_j = (4 m / tau) sin^2(pi n_j / P), the ring-polymer spring
  /// constants of each mode (kappa_0 = 0).
  std::vector<double> spring_constants(double mass, double tau) const;

  /// Matsubara index n_j of storage slot j.
  int mode_index(int j) const { return j <= beads_ / 2 ? j : beads_ - j; }

 private:
  struct Plans;
  int beads_;
  std::vector<double> scale_;
  std::unique_ptr<Plans> plans_;
};

/// Monte Carlo settings for one constrained-centroid ensemble. A sweep is
/// one hybrid Monte Carlo trajectory, which moves every non-centroid mode.
struct PathEnsembleConfig {
  int beads = 64;
  long sweeps = 20000;
  long burn_in = 2000;
  long block_size = 500;
  std::uint64_t seed = 20240501;
  /// Initial leapfrog step in units of the accelerated mode period / 2 pi;
  /// tuned during burn-in.
  double step_scale = 0.6;
  /// Worker threads for table builds (0 = hardware concurrency).
  unsigned threads = 0;

  /// Throws InvalidArgument unless beads >= 2 and even, sweeps > burn_in
  /// and block_size divides sweeps - burn_in with at least two blocks.
  void validate() const;
};

/// Bead counts that keep the primitive-action error below the statistical
/// error at the benchmark temperatures: 64 for beta <= 1, 256 up to 10,
/// 1024 beyond.
int default_beads(double beta);

struct MeanForce {
  double force = 0.0;
  double err = 0.0;
  /// Production acceptance rate and the tuned leapfrog step.
  double acceptance = 0.0;
  double step = 0.0;
};

/// dV^c/dq_c = < (1/P) sum_k V'(q_k) > over paths whose centroid is pinned
/// at q_c. `stream` selects the independent random stream (the grid index
/// in table builds). Throws NonConfiningPotential for anything but a
/// confining polynomial and AcceptanceOutOfRange if tuning cannot bring the
/// production acceptance into [0.2, 0.8].
MeanForce centroid_mean_force(const PotentialModel& p, const ThermoState& ts, double q_c,
                              const PathEnsembleConfig& cfg, std::uint64_t stream = 0);

/// How the additive constant of V^c (lost by mean-force integration) is set.
/// Both modes fix it through the partition function, requiring
/// sqrt(m / 2 pi beta) * integral of exp(-beta V^c) to equal Z.
enum class ConstantMode {
  /// Z from the exact spectral oracle (closed form for harmonic potentials).
  oracle_pin,
  /// Z from thermodynamic integration against a harmonic reference with the
  /// same bead discretization.
  harmonic_ti,
};
std::string to_string(ConstantMode mode);
ConstantMode parse_constant_mode(const std::string& text);

struct CentroidTableOptions {
  ConstantMode constant_mode = ConstantMode::oracle_pin;
  /// Starting polynomial degree of the V^c fit; raised in steps of two (up
  /// to 12, while the grid has at least three more points than parameters)
  /// until the residual test passes with a confining fit.
  int fit_degree = 4;
  /// Sample only q_c >= 0 for even potentials on grids symmetric about 0
  /// and mirror the forces.
  bool use_parity = true;
  /// Lambda nodes (Gauss-Legendre) for harmonic_ti.
  int ti_nodes = 8;
  /// Fit V^c as the variational reference plus a polynomial correction
  /// (false: the polynomial alone).
  bool variational_reference = true;
};

/// Sampled effective classical potential on a centroid grid.
struct CentroidPotentialTable {
  std::vector<double> grid;
  std::vector<double> forces;
  std::vector<double> force_err;
  std::vector<double> values;
  std::vector<double> std_err;
  /// Fitted V^c(q) = reference(q) + sum_k fit[k] q^k. Only the powers
  /// allowed by the input's symmetry are nonzero in `fit`; `reference` is
  /// null when the polynomial stands alone.
  std::vector<double> fit;
  std::shared_ptr<const VariationalReference> reference;
  int fit_degree = 0;
  /// Largest |force residual| / err of the accepted fit.
  double fit_max_pull = 0.0;
  ConstantMode constant_mode = ConstantMode::oracle_pin;
  /// log Z used to pin the constant.
  double log_partition = 0.0;
  /// Statistical error of log Z (zero for oracle pins).
  double log_partition_err = 0.0;
  double beta = 0.0;
  double mass = 0.0;
  int beads = 0;
  double min_acceptance = 0.0;
  double max_acceptance = 0.0;

  double fit_value(double q) const;
  double fit_slope(double q) const;
  double fit_curvature(double q) const;
  /// Bracket for minimum searches on the fitted potential: the grid widened
  /// by half its span on each side.
  std::pair<double, double> search_bracket() const;
};

/// Symmetry class of the fitted V^c; decides which powers the fit may use.
enum class FitFamily { even, even_plus_linear, full };
FitFamily fit_family(const PotentialModel& p);

/// 'points' centroid positions symmetric about the classical minimum, wide
/// enough that beta (V - V_min) >= 50 at both ends even when V is tilted by
/// -J q for any |J| <= source_reach.
std::vector<double> default_centroid_grid(const PotentialModel& p, const ThermoState& ts, int points = 21,
                                          double source_reach = 0.0);

/// Mean forces on every grid point (parallel over points, stream = index),
/// integrated outward from the centre node by end-corrected trapezoids,
/// fitted, and pinned. Throws FitRejected if no confining fit passes the
/// residual test (every |residual| <= 3 err) and InvalidArgument for
/// unusable grids.
CentroidPotentialTable build_centroid_table(const PotentialModel& p, const ThermoState& ts,
                                            std::span<const double> grid, const PathEnsembleConfig& cfg,
                                            const CentroidTableOptions& opts = {});

/// Refits a table's forces after replacing them (error propagation by
/// replicas); keeps the grid, errors and the pinned partition function.
CentroidPotentialTable refit_table(const CentroidPotentialTable& base, std::span<const double> forces,
                                   FitFamily family, int fit_degree);

/// log Z_P of the P-bead primitive-action path integral for the harmonic
/// potential (1/2) m omega^2 q^2; tends to -log(2 sinh(beta omega / 2)).
double discrete_harmonic_log_partition(const ThermoState& ts, double omega, int beads);

struct LogPartitionEstimate {
  double value = 0.0;
  double err = 0.0;
};

/// log Z of the P-bead path integral by thermodynamic integration from the
/// harmonic reference that matches V at its minimum.
LogPartitionEstimate thermodynamic_log_partition(const PotentialModel& p, const ThermoState& ts,
                                                 const PathEnsembleConfig& cfg, int nodes = 8);

}  // namespace epac

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epac/model.hpp"
#include "epac/oracle.hpp"
#include "epac/sampler.hpp"

namespace epac {

/// Values with first and second derivatives on a strictly increasing grid,
/// interpolated by quintic Hermite polynomials (C^2, exact for quintics).
struct HermiteSamples {
  std::vector<double> x;
  std::vector<double> f;
  std::vector<double> df;
  std::vector<double> d2f;

  std::size_t size() const { return x.size(); }
  double lo() const { return x.front(); }
  double hi() const { return x.back(); }
  double value(double at) const;
  double slope(double at) const;
  double curvature(double at) const;
  /// Throws InvalidArgument unless sizes agree, there are >= 3 nodes and x
  /// is strictly increasing.
  void validate() const;
};

/// Nonnegative second differences of the node values (slack tol * scale,
/// scale = 1 + max|f|) and nonnegative nodal second derivatives.
bool is_convex(const HermiteSamples& s, double tol);

enum class GeneratingSource { sampled, oracle, analytic };
std::string to_string(GeneratingSource source);

/// w(J) = (1/beta) log of the source-coupled partition function on a J grid
/// (x = J, f = w, df = <q>_J, d2f = Kubo susceptibility).
struct GeneratingFunctionTable {
  HermiteSamples w;
  GeneratingSource source = GeneratingSource::analytic;
  double beta = 0.0;
  double mass = 0.0;
};

/// V(Q) on a Q grid (x = Q, f = V, df = J*(Q), d2f = 1 / w''(J*)).
struct EffectivePotentialCurve {
  HermiteSamples v;
  double beta = 0.0;
  double mass = 0.0;
};

/// Response at one source value; the three generating-function routes share
/// this signature.
using ResponseFn = std::function<TiltedResponse(double)>;

/// Tabulates a response function on a J grid.
GeneratingFunctionTable tabulate(const ResponseFn& response, std::span<const double> sources, GeneratingSource kind,
                                 const ThermoState& ts);

/// Centroid integral of a sampled table's fitted V^c. Throws
/// IntegrandNotLocalized when <q>_J leaves the sampled grid.
ResponseFn sampled_response(const CentroidPotentialTable& table);
/// Exact source-tilted Hamiltonian.
ResponseFn oracle_response(const PotentialModel& p, const ThermoState& ts);
/// Closed form for V = (1/2) m omega^2 q^2 + f q:
/// w = (J - f)^2 / (2 m omega^2) - (1/beta) log(2 sinh(beta omega / 2)).
ResponseFn harmonic_response(double omega, double f, const ThermoState& ts);

/// w on `sources` from the fitted table.
GeneratingFunctionTable generating_function(const CentroidPotentialTable& table, std::span<const double> sources);

struct SourceWindow {
  std::vector<double> sources;
  /// Q range the window's slopes cover.
  double q_lo = 0.0;
  double q_hi = 0.0;
  /// Target that was requested: centre +- sigmas * sqrt(w''(centre)).
  double target_lo = 0.0;
  double target_hi = 0.0;
  /// True when the response could not be evaluated far enough out and the
  /// window stops short of the target.
  bool clipped = false;
};

/// J grid (uniform on each side of `centre`) widened until w' covers
/// w'(centre) +- sigmas * sqrt(w''(centre)); `must_include` values are kept
/// inside the grid. A response that throws IntegrandNotLocalized ends the
/// widening on that side (clipped = true).
SourceWindow plan_source_window(const ResponseFn& response, double centre, int points = 41, double sigmas = 4.0,
                                std::span<const double> must_include = {});

/// V(Q) = J* Q - w(J*) with w'(J*) = Q.
struct LegendrePoint {
  double value = 0.0;
  double source = 0.0;
};
/// Throws QOutOfRange if Q lies outside [w'(J_lo), w'(J_hi)].
LegendrePoint legendre_point(const HermiteSamples& w, double q);

/// Legendre transform onto `q_grid` (root-find of w'(J) = Q per point).
EffectivePotentialCurve legendre_transform(const GeneratingFunctionTable& g, std::span<const double> q_grid);
/// Inverse transform, w(J) = sup_Q { J Q - V(Q) }, for the involution check.
GeneratingFunctionTable inverse_legendre_transform(const EffectivePotentialCurve& c, std::span<const double> sources,
                                                   GeneratingSource kind);

/// Evenly spaced grid of n points on [lo, hi].
std::vector<double> linspace(double lo, double hi, int n);

/// Largest J Q - w(J) - V(Q) over all node pairs (<= 0 up to round-off for
/// a correct transform).
double fenchel_violation(const GeneratingFunctionTable& g, const EffectivePotentialCurve& c);

/// EPAC parameters of V_beta(Q) + tilt * Q (tilt = 0 for the plain curve).
struct EpacParameters {
  double beta = 0.0;
  double mass = 0.0;
  double tilt = 0.0;
  /// Primary route: Q_min = w'(-tilt), omega = 1 / sqrt(m w''(-tilt)).
  double q_min = 0.0;
  double omega = 0.0;
  /// Curve route: Brent minimum of V + tilt Q and Richardson V''.
  double q_min_curve = 0.0;
  double omega_curve = 0.0;
  /// Quadratic least squares of V over Q_min +- sigma_Q / 2.
  double omega_local_fit = 0.0;
  /// V_beta(Q_min) + tilt Q_min = -w(-tilt).
  double e0 = 0.0;
  /// sqrt(w''(-tilt)), the width used by the local fit and window planning.
  double sigma_q = 0.0;
  /// Frequency of the untilted curve at its own minimum, 1 / sqrt(m w''(0)).
  std::optional<double> omega_s;
  /// One standard error of each estimate (zero for exact inputs).
  double q_min_err = 0.0;
  double omega_err = 0.0;
  double e0_err = 0.0;
  double omega_s_err = 0.0;
};

/// Throws NonConvexAtOrigin if w''(-tilt) <= 0 and InvalidArgument if -tilt
/// is not interior to the J grid.
EpacParameters extract_parameters(const GeneratingFunctionTable& g, double tilt = 0.0);

/// Relative disagreement of the two extraction routes, max over Q_min
/// (relative to max(|Q_min|, sigma_Q)) and omega.
double route_disagreement(const EpacParameters& p);

/// E0 estimate V_beta(Q_min) (meaningful at large beta).
double ground_state_energy(const GeneratingFunctionTable& g, double tilt = 0.0);

/// Force-noise replicas of a sampled table: forces + err * N(0, 1) from
/// stream (seed, offset + r), refitted at the table's degree and repinned.
std::vector<CentroidPotentialTable> replica_tables(const CentroidPotentialTable& table, FitFamily family, int count,
                                                   std::uint64_t seed);

}  // namespace epac

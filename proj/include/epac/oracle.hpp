#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "epac/model.hpp"

namespace epac {

struct GridMeta {
  double q_lo = 0.0;
  double q_hi = 0.0;
  int points = 0;
  /// Largest eigenvalue change between the final grid and the coarser grid it was checked against.
  double eigen_change = 0.0;
  /// Largest |psi_0| at either boundary point (normalized on the grid).
  double boundary_amplitude = 0.0;
};

/// Bound-state spectrum of H = p^2/2m + V(q).
struct Spectrum {
  std::vector<double> energies;
  Eigen::MatrixXd q_elements;          ///< <m|q|n>, symmetric
  std::vector<double> q2_diagonal;     ///< <n|q^2|n> from the grid directly
  GridMeta grid;

  int size() const { return static_cast<int>(energies.size()); }
};

struct SpectrumOptions {
  /// Eigenvalue agreement required under grid doubling.
  double tolerance = 1e-8;
  /// Keep matrix elements (set false for energies only).
  bool matrix_elements = true;
};

/// Lowest `n_states` eigenpairs on a sinc-DVR grid, converged under spacing
/// halving. Throws UnboundedSpectrumRequest when a Morse request reaches the
/// continuum and NotConverged when halving keeps changing eigenvalues.
Spectrum solve_bound_states(const PotentialModel& p, const ThermoState& ts, int n_states,
                            const SpectrumOptions& opts = {});

/// Grows the state count until exp(-beta (E_max - E_0)) < truncation.
Spectrum solve_thermal_spectrum(const PotentialModel& p, const ThermoState& ts, double truncation = 1e-10,
                                const SpectrumOptions& opts = {});

/// Normalized Boltzmann weights, computed relative to E_0. Throws
/// TruncationTooSevere if the top retained state is not negligible.
std::vector<double> boltzmann_weights(const Spectrum& s, double beta, double truncation = 1e-10);

double thermal_expectation_q(const Spectrum& s, double beta);
/// <q^2> by direct thermal trace of the grid diagonal.
double thermal_expectation_q2(const Spectrum& s, double beta);

enum class SeriesKind { exact, epac };
std::string to_string(SeriesKind kind);

struct CorrelationSeries {
  std::vector<double> times;
  std::vector<std::complex<double>> values;
  double beta = 0.0;
  SeriesKind kind = SeriesKind::exact;
};

/// C(t) = sum_{n,m} p_n exp(-i (E_m - E_n) t) |q_mn|^2.
CorrelationSeries exact_autocorrelation(const Spectrum& s, double beta, std::span<const double> times);

/// w(J) = (1/beta) log Tr exp(-beta (H - J q)).
double tilted_generating_function(const PotentialModel& p, const ThermoState& ts, double source,
                                  int n_states = 0);

/// w(J) with its first two source derivatives: <q> of the tilted ensemble
/// and the Kubo (imaginary-time integrated) position susceptibility.
struct TiltedResponse {
  double value = 0.0;
  double slope = 0.0;
  double curvature = 0.0;
};
TiltedResponse tilted_response(const PotentialModel& p, const ThermoState& ts, double source);

/// log Z = log Tr exp(-beta H). Closed form for potentials of degree <= 2,
/// otherwise beta * w(0) from the spectrum.
double exact_log_partition(const PotentialModel& p, const ThermoState& ts);

/// log(2 sinh(x)) for x > 0 without overflow.
double log_two_sinh(double x);

/// Evenly spaced time grid [t0, t0 + dt, ..., <= t1].
std::vector<double> uniform_times(double t0, double t1, double dt);

}  // namespace epac

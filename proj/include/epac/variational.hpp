#pragma once

#include <span>
#include <vector>

namespace epac {

/// Variational (Feynman-Kleinert) approximation to the effective classical
/// potential of a polynomial V:
///
///   W(q) = (1/beta) log( sinh(beta Omega/2) / (beta Omega/2) )
///          + V_a2(q) - (m/2) Omega^2 a2,
///
/// where V_a2 is V smeared by a Gaussian of variance a2, and Omega(q), a2(q)
/// solve m Omega^2 = V''_a2(q) with
/// a2 = [ (beta Omega/2) coth(beta Omega/2) - 1 ] / (beta m Omega^2).
/// Exact for harmonic potentials and tends to V as beta -> 0. It serves as
/// the smooth reference that sampled centroid tables are fitted against:
/// the quantum correction V^c - V depends on Omega(q), which no low-order
/// polynomial follows at low temperature.
class VariationalReference {
 public:
  /// `coeffs` are a_0..a_K of V. Where V''_a2 <= 0 the frequency is clamped
  /// to zero (classical-limit width a2 = beta / 12 m).
  VariationalReference(std::vector<double> coeffs, double beta, double mass);

  struct Point {
    double value = 0.0;
    /// dW/dq; equals the smeared force V'_a2(q) because W is stationary in
    /// Omega.
    double slope = 0.0;
    double width2 = 0.0;
    double omega2 = 0.0;
  };
  Point at(double q) const;

  double value(double q) const { return at(q).value; }
  double slope(double q) const { return at(q).slope; }
  /// d^2 W / dq^2 by central difference of the analytic slope.
  double curvature(double q) const;

  std::span<const double> coeffs() const { return derivs_.front(); }

 private:
  /// Gaussian-smeared d-th derivative of V at q.
  double smeared(int d, double q, double a2) const;
  double width_for(double omega2) const;

  std::vector<std::vector<double>> derivs_;  // derivs_[d] = coefficients of V^(d)
  double beta_;
  double mass_;
};

}  // namespace epac

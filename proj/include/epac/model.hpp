#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace epac {

/// Exact rational used for potential coefficients. Values read from
/// fractions or decimal literals stay exact until evaluation.
using Rational = boost::multiprecision::cpp_rational;

Rational parse_rational(const std::string& text);
double to_double(const Rational& r);
std::string to_string(const Rational& r);

/// Inverse temperature and mass in natural units (hbar = k_B = 1).
struct ThermoState {
  double beta = 1.0;
  double mass = 1.0;

  ThermoState() = default;
  ThermoState(double beta, double mass);
};

/// a_0 + a_1 q + ... + a_K q^K. The constant is kept so that shifted forms
/// (125/64 + x^2/8 + x^4/100) are representable.
struct Polynomial {
  std::vector<Rational> coeffs;

  int degree() const;
  Rational coefficient(int k) const;
  bool is_even() const;
  std::vector<double> as_doubles() const;
};

/// V(q) = depth (1 - exp(range q))^2.
struct Morse {
  double depth = 0.0;
  double range = 0.0;
};

struct PotentialModel;

/// base(q) + slope q + offset.
struct Tilted {
  std::shared_ptr<const PotentialModel> base;
  Rational slope;
  Rational offset;
};

struct PotentialModel {
  std::variant<Polynomial, Morse, Tilted> form;
};

PotentialModel make_polynomial(std::vector<Rational> coeffs);
PotentialModel make_morse(double depth, double range);
PotentialModel make_tilted(PotentialModel base, Rational slope, Rational offset);

double evaluate(const PotentialModel& p, double q);
double derivative(const PotentialModel& p, double q);
double second_derivative(const PotentialModel& p, double q);

/// Collapses polynomial and tilted-over-polynomial forms to a single
/// polynomial; empty for anything involving a Morse term.
std::optional<Polynomial> as_polynomial(const PotentialModel& p);

/// Even leading degree with positive leading coefficient. Morse is never
/// confining in the path-integral sense.
bool is_confining(const PotentialModel& p);

/// Location of the global minimum of a confining polynomial.
double polynomial_minimum(const Polynomial& p);

std::string describe(const PotentialModel& p);

/// V(q) = symmetric_part(x) + slope x + offset with x = q + shift.
/// symmetric_part holds only the x^2 and x^4 terms.
struct LinearDecomposition {
  Rational shift;
  Polynomial symmetric_part;
  Rational slope;
  Rational offset;

  /// Polynomial in x equal to symmetric_part + offset (no linear term).
  PotentialModel symmetric_potential() const;
  /// Tilted{symmetric_part, slope, offset}, the potential in x.
  PotentialModel shifted_potential() const;
  /// Back to the original polynomial in q.
  Polynomial recompose() const;
};

LinearDecomposition decompose_linear(const Polynomial& p);

/// Fourth-order Taylor polynomial of depth (1 - e^{range q})^2 about q = 0.
Polynomial morse_taylor4(double depth, double range);

/// Number of bound Morse levels, floor(lambda - 1/2) with
/// lambda = sqrt(2 m D_e) / a.
int morse_bound_state_count(const Morse& m, double mass);

}  // namespace epac

#include "epac/model.hpp"

#include <cmath>
#include <sstream>

#include "epac/errors.hpp"

namespace epac {

namespace {

Rational rational_from_decimal(const std::string& text) {
  std::string mantissa = text;
  long exponent = 0;
  if (auto e = mantissa.find_first_of("eE"); e != std::string::npos) {
    exponent = std::stol(mantissa.substr(e + 1));
    mantissa = mantissa.substr(0, e);
  }
  bool negative = false;
  if (!mantissa.empty() && (mantissa[0] == '-' || mantissa[0] == '+')) {
    negative = mantissa[0] == '-';
    mantissa.erase(0, 1);
  }
  std::string digits;
  long decimals = 0;
  bool seen_point = false;
  for (char c : mantissa) {
    if (c == '.') {
      if (seen_point) raise(ErrorKind::InvalidArgument, "malformed number '" + text + "'");
      seen_point = true;
    } else if (c >= '0' && c <= '9') {
      digits.push_back(c);
      if (seen_point) ++decimals;
    } else {
      raise(ErrorKind::InvalidArgument, "malformed number '" + text + "'");
    }
  }
  if (digits.empty()) raise(ErrorKind::InvalidArgument, "malformed number '" + text + "'");
  boost::multiprecision::cpp_int num(digits);
  boost::multiprecision::cpp_int den = 1;
  long shift = exponent - decimals;
  boost::multiprecision::cpp_int ten = 10;
  if (shift >= 0) {
    num *= boost::multiprecision::pow(ten, static_cast<unsigned>(shift));
  } else {
    den = boost::multiprecision::pow(ten, static_cast<unsigned>(-shift));
  }
  Rational r(num, den);
  return negative ? Rational(-r) : r;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double horner(const std::vector<double>& c, double q) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * q + *it;
  return acc;
}

Polynomial trimmed(Polynomial p) {
  while (!p.coeffs.empty() && p.coeffs.back() == 0) p.coeffs.pop_back();
  return p;
}

}  // namespace

Rational parse_rational(const std::string& raw) {
  std::string text = trim(raw);
  if (auto slash = text.find('/'); slash != std::string::npos) {
    Rational num = rational_from_decimal(trim(text.substr(0, slash)));
    Rational den = rational_from_decimal(trim(text.substr(slash + 1)));
    if (den == 0) raise(ErrorKind::InvalidArgument, "zero denominator in '" + text + "'");
    return num / den;
  }
  return rational_from_decimal(text);
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

std::string to_string(const Rational& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

ThermoState::ThermoState(double beta_, double mass_) : beta(beta_), mass(mass_) {
  if (!(beta > 0.0) || !std::isfinite(beta)) raise(ErrorKind::InvalidArgument, "beta must be positive");
  if (!(mass > 0.0) || !std::isfinite(mass)) raise(ErrorKind::InvalidArgument, "mass must be positive");
}

int Polynomial::degree() const {
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 0; --k)
    if (coeffs[k] != 0) return k;
  return 0;
}

Rational Polynomial::coefficient(int k) const {
  return k >= 0 && k < static_cast<int>(coeffs.size()) ? coeffs[k] : Rational(0);
}

bool Polynomial::is_even() const {
  for (std::size_t k = 1; k < coeffs.size(); k += 2)
    if (coeffs[k] != 0) return false;
  return true;
}

std::vector<double> Polynomial::as_doubles() const {
  std::vector<double> out;
  out.reserve(coeffs.size());
  for (const auto& c : coeffs) out.push_back(to_double(c));
  return out;
}

PotentialModel make_polynomial(std::vector<Rational> coeffs) {
  return PotentialModel{trimmed(Polynomial{std::move(coeffs)})};
}

PotentialModel make_morse(double depth, double range) { return PotentialModel{Morse{depth, range}}; }

PotentialModel make_tilted(PotentialModel base, Rational slope, Rational offset) {
  return PotentialModel{
      Tilted{std::make_shared<const PotentialModel>(std::move(base)), std::move(slope), std::move(offset)}};
}

double evaluate(const PotentialModel& p, double q) {
  return std::visit(
      [q](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Polynomial>) {
          return horner(v.as_doubles(), q);
        } else if constexpr (std::is_same_v<T, Morse>) {
          double s = 1.0 - std::exp(v.range * q);
          return v.depth * s * s;
        } else {
          return evaluate(*v.base, q) + to_double(v.slope) * q + to_double(v.offset);
        }
      },
      p.form);
}

double derivative(const PotentialModel& p, double q) {
  return std::visit(
      [q](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Polynomial>) {
          auto c = v.as_doubles();
          double acc = 0.0;
          for (int k = static_cast<int>(c.size()) - 1; k >= 1; --k) acc = acc * q + k * c[k];
          return acc;
        } else if constexpr (std::is_same_v<T, Morse>) {
          double e = std::exp(v.range * q);
          return -2.0 * v.depth * v.range * e * (1.0 - e);
        } else {
          return derivative(*v.base, q) + to_double(v.slope);
        }
      },
      p.form);
}

double second_derivative(const PotentialModel& p, double q) {
  return std::visit(
      [q](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Polynomial>) {
          auto c = v.as_doubles();
          double acc = 0.0;
          for (int k = static_cast<int>(c.size()) - 1; k >= 2; --k) acc = acc * q + k * (k - 1) * c[k];
          return acc;
        } else if constexpr (std::is_same_v<T, Morse>) {
          double e = std::exp(v.range * q);
          return 2.0 * v.depth * v.range * v.range * e * (2.0 * e - 1.0);
        } else {
          return second_derivative(*v.base, q);
        }
      },
      p.form);
}

std::optional<Polynomial> as_polynomial(const PotentialModel& p) {
  if (const auto* poly = std::get_if<Polynomial>(&p.form)) return *poly;
  if (const auto* tilt = std::get_if<Tilted>(&p.form)) {
    auto base = as_polynomial(*tilt->base);
    if (!base) return std::nullopt;
    if (base->coeffs.size() < 2) base->coeffs.resize(2);
    base->coeffs[0] += tilt->offset;
    base->coeffs[1] += tilt->slope;
    return trimmed(*base);
  }
  return std::nullopt;
}

bool is_confining(const PotentialModel& p) {
  auto poly = as_polynomial(p);
  if (!poly) return false;
  int d = poly->degree();
  return d >= 2 && d % 2 == 0 && poly->coefficient(d) > 0;
}

double polynomial_minimum(const Polynomial& p) {
  auto c = p.as_doubles();
  auto value = [&](double q) { return horner(c, q); };
  auto slope = [&](double q) {
    double acc = 0.0;
    for (int k = static_cast<int>(c.size()) - 1; k >= 1; --k) acc = acc * q + k * c[k];
    return acc;
  };
  // Bracket all stationary points: |q| beyond 1 + max|a_k/a_K| holds none.
  int d = p.degree();
  double bound = 1.0;
  for (int k = 0; k < d; ++k) bound = std::max(bound, 1.0 + std::abs(c[k] / c[d]));
  const int n = 4000;
  double best_q = 0.0, best_v = value(0.0);
  double prev_q = -bound, prev_s = slope(prev_q);
  for (int i = 1; i <= n; ++i) {
    double q = -bound + 2.0 * bound * i / n;
    double s = slope(q);
    if (prev_s < 0.0 && s >= 0.0) {
      double lo = prev_q, hi = q;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        double mid = 0.5 * (lo + hi);
        (slope(mid) < 0.0 ? lo : hi) = mid;
      }
      double qm = 0.5 * (lo + hi);
      if (value(qm) < best_v) {
        best_v = value(qm);
        best_q = qm;
      }
    }
    prev_q = q;
    prev_s = s;
  }
  return best_q;
}

std::string describe(const PotentialModel& p) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        std::ostringstream os;
        if constexpr (std::is_same_v<T, Polynomial>) {
          os << "poly: [";
          for (std::size_t k = 1; k < std::max<std::size_t>(v.coeffs.size(), 2); ++k) {
            if (k > 1) os << ", ";
            os << to_string(v.coefficient(static_cast<int>(k)));
          }
          os << "]";
          if (v.coefficient(0) != 0) os << " + " << to_string(v.coefficient(0));
        } else if constexpr (std::is_same_v<T, Morse>) {
          os.precision(17);
          os << "morse: {" << v.depth << ", " << v.range << "}";
        } else {
          os << "tilt: {" << describe(*v.base) << ", " << to_string(v.slope) << ", " << to_string(v.offset) << "}";
        }
        return os.str();
      },
      p.form);
}

PotentialModel LinearDecomposition::symmetric_potential() const {
  Polynomial sym = symmetric_part;
  if (sym.coeffs.empty()) sym.coeffs.resize(1);
  sym.coeffs[0] += offset;
  return PotentialModel{trimmed(sym)};
}

PotentialModel LinearDecomposition::shifted_potential() const {
  return make_tilted(PotentialModel{symmetric_part}, slope, offset);
}

Polynomial LinearDecomposition::recompose() const {
  // Substitute x = q + shift into symmetric_part(x) + slope x + offset.
  Polynomial in_x = symmetric_part;
  in_x.coeffs.resize(std::max<std::size_t>(in_x.coeffs.size(), 2));
  in_x.coeffs[0] += offset;
  in_x.coeffs[1] += slope;
  std::vector<Rational> out(in_x.coeffs.size());
  for (std::size_t k = 0; k < in_x.coeffs.size(); ++k) {
    // (q + s)^k = sum_j C(k, j) q^j s^(k-j)
    Rational binom = 1;
    for (std::size_t j = 0; j <= k; ++j) {
      Rational s_pow = 1;
      for (std::size_t i = 0; i < k - j; ++i) s_pow *= shift;
      out[j] += in_x.coeffs[k] * binom * s_pow;
      binom = binom * Rational(static_cast<long>(k - j)) / Rational(static_cast<long>(j + 1));
    }
  }
  return trimmed(Polynomial{out});
}

LinearDecomposition decompose_linear(const Polynomial& p) {
  if (p.degree() != 4) raise(ErrorKind::NonQuartic, "decompose_linear needs a degree-4 polynomial");
  const Rational& a4 = p.coeffs[4];
  if (a4 <= 0) raise(ErrorKind::InvalidArgument, "quartic coefficient must be positive");
  const Rational s = p.coefficient(3) / (4 * a4);
  // Coefficients of V(x - s) in powers of x.
  std::vector<Rational> shifted(5);
  for (int k = 0; k <= 4; ++k) {
    Rational binom = 1;
    for (int j = 0; j <= k; ++j) {
      Rational pow_term = 1;
      for (int i = 0; i < k - j; ++i) pow_term *= -s;
      shifted[j] += p.coefficient(k) * binom * pow_term;
      binom = binom * Rational(k - j) / Rational(j + 1);
    }
  }
  LinearDecomposition d;
  d.shift = s;
  d.offset = shifted[0];
  d.slope = shifted[1];
  d.symmetric_part = trimmed(Polynomial{{Rational(0), Rational(0), shifted[2], Rational(0), shifted[4]}});
  return d;
}

Polynomial morse_taylor4(double depth, double range) {
  Rational d(depth), a(range);
  Rational a2 = a * a;
  return trimmed(Polynomial{{Rational(0), Rational(0), d * a2, d * a2 * a, Rational(7, 12) * d * a2 * a2}});
}

int morse_bound_state_count(const Morse& m, double mass) {
  double lambda = std::sqrt(2.0 * mass * m.depth) / m.range;
  return static_cast<int>(std::floor(lambda - 0.5));
}

}  // namespace epac

#include "epac/centroid_integral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "epac/errors.hpp"

namespace epac {

namespace {

// Integrand cut-off: exp(-40) ~ 4e-18 of the peak.
constexpr double kDecay = 40.0;
constexpr int kScan = 4000;

double horner(std::span<const double> c, double q) {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * q + c[k];
  return acc;
}

/// Global minimum of f on [lo, hi]: dense scan, then Brent in the best cell.
/// Returns the minimizer, the minimum and the scan cell width.
struct Minimum {
  double q = 0.0;
  double value = 0.0;
  double cell = 0.0;
  bool at_edge = false;
};

template <class F>
Minimum scan_minimum(F&& f, double lo, double hi) {
  int best = 0;
  double best_value = f(lo);
  for (int i = 1; i <= kScan; ++i) {
    const double v = f(lo + (hi - lo) * i / kScan);
    if (v < best_value) best_value = v, best = i;
  }
  Minimum m;
  m.cell = (hi - lo) / kScan;
  const double centre = lo + m.cell * best;
  auto [q_star, f_star] = boost::math::tools::brent_find_minima(f, centre - m.cell, centre + m.cell, 52);
  if (f(centre) < f_star) q_star = centre, f_star = f(centre);
  m.q = q_star;
  m.value = f_star;
  m.at_edge = best == 0 || best == kScan;
  return m;
}

/// Moments of exp(-beta (f - f*)) about the minimizer, integrated between
/// the points where the exponent drops below -kDecay.
template <class F>
TiltedResponse integrate_density(F&& f, const Minimum& m, double beta, double mass) {
  auto exponent = [&](double q) { return -beta * (f(q) - m.value); };
  auto edge = [&](int dir) {
    double step = std::max(m.cell, 1e-6 * (1.0 + std::abs(m.q)));
    double q = m.q;
    for (int it = 0; it < 200; ++it) {
      q += dir * step;
      if (exponent(q) < -kDecay) return q;
      step *= 1.3;
    }
    raise(ErrorKind::IntegrandNotLocalized, "integrand does not decay within the search range");
  };
  const double lo = edge(-1), hi = edge(+1);

  // Rounding in f(q) ~ eps |f| is amplified to a relative integrand error
  // ~ beta eps |f|; asking for less than that floor only drives the
  // adaptive rule to its maximum depth.
  const double scale = std::max({std::abs(m.value), std::abs(f(lo)), std::abs(f(hi)), 1.0});
  const double tol = std::max(1e-14, 32.0 * std::numeric_limits<double>::epsilon() * beta * scale);

  using boost::math::quadrature::gauss_kronrod;
  auto moment = [&](int k) {
    auto g = [&](double q) {
      const double d = q - m.q;
      return std::pow(d, k) * std::exp(exponent(q));
    };
    return gauss_kronrod<double, 61>::integrate(g, lo, m.q, 15, tol) +
           gauss_kronrod<double, 61>::integrate(g, m.q, hi, 15, tol);
  };
  const double i0 = moment(0), i1 = moment(1), i2 = moment(2);
  const double mean_offset = i1 / i0;

  TiltedResponse r;
  r.value = (0.5 * std::log(mass / (2.0 * std::numbers::pi * beta)) - beta * m.value + std::log(i0)) / beta;
  r.slope = m.q + mean_offset;
  r.curvature = beta * std::max(i2 / i0 - mean_offset * mean_offset, 0.0);
  return r;
}

}  // namespace

TiltedResponse centroid_generating_function(std::span<const double> coeffs, double beta, double mass, double source) {
  std::vector<double> f(coeffs.begin(), coeffs.end());
  while (!f.empty() && f.back() == 0.0) f.pop_back();
  const int degree = static_cast<int>(f.size()) - 1;
  if (degree < 2 || degree % 2 != 0 || !(f.back() > 0.0))
    raise(ErrorKind::IntegrandNotLocalized, "centroid potential does not confine (degree " + std::to_string(degree) +
                                                ", leading coefficient " +
                                                std::to_string(f.empty() ? 0.0 : f.back()) + ")");
  if (f.size() < 2) f.resize(2, 0.0);
  f[1] -= source;

  // Every stationary point of f lies inside the Cauchy bound of f'.
  double bound = 0.0;
  const double lead = degree * f.back();
  for (int k = 1; k < degree; ++k) bound = std::max(bound, std::abs(k * f[k] / lead));
  bound += 1.0;

  auto tilted = [&](double q) { return horner(f, q); };
  return integrate_density(tilted, scan_minimum(tilted, -bound, bound), beta, mass);
}

TiltedResponse centroid_generating_function(const std::function<double(double)>& potential, double lo, double hi,
                                            double beta, double mass, double source) {
  if (!(hi > lo)) raise(ErrorKind::InvalidArgument, "centroid integral needs lo < hi");
  auto tilted = [&](double q) { return potential(q) - source * q; };
  const Minimum m = scan_minimum(tilted, lo, hi);
  if (m.at_edge)
    raise(ErrorKind::IntegrandNotLocalized, "minimum of the tilted centroid potential lies at the edge of [" +
                                                std::to_string(lo) + ", " + std::to_string(hi) + "] for J = " +
                                                std::to_string(source));
  return integrate_density(tilted, m, beta, mass);
}

}  // namespace epac

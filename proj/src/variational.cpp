#include "epac/variational.hpp"

#include <cmath>

#include <boost/math/tools/roots.hpp>

#include "epac/errors.hpp"

namespace epac {

namespace {

double horner(std::span<const double> c, double q) {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * q + c[k];
  return acc;
}

/// log(sinh(h) / h) for h >= 0 without overflow or cancellation.
double log_sinhc(double h) {
  if (h < 1e-4) return h * h / 6.0;
  if (h > 20.0) return h - std::log(2.0 * h) + std::log1p(-std::exp(-2.0 * h));
  return std::log(std::sinh(h) / h);
}

}  // namespace

VariationalReference::VariationalReference(std::vector<double> coeffs, double beta, double mass)
    : beta_(beta), mass_(mass) {
  if (!(beta > 0.0) || !(mass > 0.0)) raise(ErrorKind::InvalidArgument, "variational reference needs beta, m > 0");
  while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
  if (coeffs.empty()) coeffs.push_back(0.0);
  derivs_.push_back(std::move(coeffs));
  while (derivs_.back().size() > 1) {
    const auto& prev = derivs_.back();
    std::vector<double> next(prev.size() - 1);
    for (std::size_t k = 1; k < prev.size(); ++k) next[k - 1] = static_cast<double>(k) * prev[k];
    derivs_.push_back(std::move(next));
  }
}

double VariationalReference::smeared(int d, double q, double a2) const {
  // sum_k V^(d+2k)(q) a2^k / (2^k k!)
  double acc = 0.0, factor = 1.0;
  for (int k = 0; d + 2 * k < static_cast<int>(derivs_.size()); ++k) {
    acc += factor * horner(derivs_[d + 2 * k], q);
    factor *= a2 / (2.0 * (k + 1));
  }
  return acc;
}

double VariationalReference::width_for(double omega2) const {
  const double classical = beta_ / (12.0 * mass_);
  if (omega2 <= 0.0) return classical;
  const double h = 0.5 * beta_ * std::sqrt(omega2);
  if (h < 1e-3) return classical * (1.0 - h * h / 15.0);
  return (h / std::tanh(h) - 1.0) / (beta_ * mass_ * omega2);
}

VariationalReference::Point VariationalReference::at(double q) const {
  // a2 - width(Omega^2(a2)) is negative at a2 = 0 and non-negative at the
  // classical width beta/12m (width never exceeds it), so a root is
  // bracketed.
  auto omega2_at = [&](double a2) { return smeared(2, q, a2) / mass_; };
  auto residual = [&](double a2) { return a2 - width_for(omega2_at(a2)); };
  const double hi = beta_ / (12.0 * mass_);
  double a2 = hi;
  const double r_lo = residual(0.0), r_hi = residual(hi);
  if (r_lo >= 0.0) {
    a2 = 0.0;
  } else if (r_hi > 0.0) {
    boost::uintmax_t iterations = 100;
    auto [lo_root, hi_root] = boost::math::tools::toms748_solve(
        residual, 0.0, hi, r_lo, r_hi, boost::math::tools::eps_tolerance<double>(50), iterations);
    a2 = 0.5 * (lo_root + hi_root);
  }
  Point p;
  p.width2 = a2;
  p.omega2 = std::max(omega2_at(a2), 0.0);
  const double h = 0.5 * beta_ * std::sqrt(p.omega2);
  p.value = log_sinhc(h) / beta_ + smeared(0, q, a2) - 0.5 * mass_ * p.omega2 * a2;
  p.slope = smeared(1, q, a2);
  return p;
}

double VariationalReference::curvature(double q) const {
  const double h = 1e-4 * (1.0 + std::abs(q));
  return (slope(q + h) - slope(q - h)) / (2.0 * h);
}

}  // namespace epac

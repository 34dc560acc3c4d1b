#include "epac/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "epac/centroid_integral.hpp"
#include "epac/errors.hpp"
#include "epac/rng.hpp"

namespace epac {

namespace {

// Replica streams sit above the grid-point and TI streams of the sampler.
constexpr std::uint64_t kReplicaStreamOffset = 2'000'000;
constexpr int kMaxWidening = 40;
constexpr double kWidening = 1.5;

/// Segment index i with x[i] <= at <= x[i+1].
std::size_t segment(const HermiteSamples& s, double at) {
  const double slack = 1e-12 * (s.hi() - s.lo());
  if (!(at >= s.lo() - slack && at <= s.hi() + slack))
    raise(ErrorKind::InvalidArgument, "Hermite evaluation at " + std::to_string(at) + " outside [" +
                                          std::to_string(s.lo()) + ", " + std::to_string(s.hi()) + "]");
  auto it = std::upper_bound(s.x.begin(), s.x.end(), at);
  const auto i = static_cast<std::size_t>(std::distance(s.x.begin(), it));
  return std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, s.size() - 2);
}

/// Coefficients of the quintic in t = (at - x_i) / h on segment i.
struct Quintic {
  double c[6];
  double h;
};

Quintic quintic(const HermiteSamples& s, std::size_t i) {
  Quintic q;
  q.h = s.x[i + 1] - s.x[i];
  const double h = q.h;
  q.c[0] = s.f[i];
  q.c[1] = h * s.df[i];
  q.c[2] = 0.5 * h * h * s.d2f[i];
  const double a = s.f[i + 1] - (q.c[0] + q.c[1] + q.c[2]);
  const double b = h * s.df[i + 1] - (q.c[1] + 2.0 * q.c[2]);
  const double c = h * h * s.d2f[i + 1] - 2.0 * q.c[2];
  q.c[3] = 10.0 * a - 4.0 * b + 0.5 * c;
  q.c[4] = -15.0 * a + 7.0 * b - c;
  q.c[5] = 6.0 * a - 3.0 * b + 0.5 * c;
  return q;
}

double eval_quintic(const Quintic& q, double t, int derivative) {
  double acc = 0.0;
  for (int k = 5; k >= derivative; --k) {
    double coeff = q.c[k];
    for (int d = 0; d < derivative; ++d) coeff *= static_cast<double>(k - d);
    acc = acc * t + coeff;
  }
  return acc / std::pow(q.h, derivative);
}

double hermite(const HermiteSamples& s, double at, int derivative) {
  const std::size_t i = segment(s, at);
  const Quintic q = quintic(s, i);
  return eval_quintic(q, (at - s.x[i]) / q.h, derivative);
}

}  // namespace

// ---------------------------------------------------------------------------
// Hermite samples

double HermiteSamples::value(double at) const { return hermite(*this, at, 0); }
double HermiteSamples::slope(double at) const { return hermite(*this, at, 1); }
double HermiteSamples::curvature(double at) const { return hermite(*this, at, 2); }

void HermiteSamples::validate() const {
  if (x.size() < 3) raise(ErrorKind::InvalidArgument, "tables need at least three nodes");
  if (f.size() != x.size() || df.size() != x.size() || d2f.size() != x.size())
    raise(ErrorKind::InvalidArgument, "table columns differ in length");
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) raise(ErrorKind::InvalidArgument, "table grid must be strictly increasing");
}

bool is_convex(const HermiteSamples& s, double tol) {
  double scale = 1.0;
  for (double v : s.f) scale = std::max(scale, 1.0 + std::abs(v));
  for (double c : s.d2f)
    if (c < -tol * scale) return false;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    // Divided second difference, valid on non-uniform grids.
    const double left = (s.f[i] - s.f[i - 1]) / (s.x[i] - s.x[i - 1]);
    const double right = (s.f[i + 1] - s.f[i]) / (s.x[i + 1] - s.x[i]);
    if (right - left < -tol * scale) return false;
  }
  return true;
}

std::string to_string(GeneratingSource source) {
  switch (source) {
    case GeneratingSource::sampled:
      return "sampled";
    case GeneratingSource::oracle:
      return "oracle";
    case GeneratingSource::analytic:
      return "analytic";
  }
  return "unknown";
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 2) raise(ErrorKind::InvalidArgument, "linspace needs at least two points");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return out;
}

// ---------------------------------------------------------------------------
// Generating functions

GeneratingFunctionTable tabulate(const ResponseFn& response, std::span<const double> sources, GeneratingSource kind,
                                 const ThermoState& ts) {
  GeneratingFunctionTable g;
  g.source = kind;
  g.beta = ts.beta;
  g.mass = ts.mass;
  g.w.x.assign(sources.begin(), sources.end());
  for (double j : sources) {
    const TiltedResponse r = response(j);
    g.w.f.push_back(r.value);
    g.w.df.push_back(r.slope);
    g.w.d2f.push_back(r.curvature);
  }
  g.w.validate();
  return g;
}

ResponseFn sampled_response(const CentroidPotentialTable& table) {
  auto shared = std::make_shared<const CentroidPotentialTable>(table);
  return [shared](double source) {
    const auto [lo, hi] = shared->search_bracket();
    auto r = centroid_generating_function([&](double q) { return shared->fit_value(q); }, lo, hi, shared->beta,
                                          shared->mass, source);
    // Beyond the sampled grid the fit is an extrapolation.
    if (r.slope < shared->grid.front() || r.slope > shared->grid.back())
      raise(ErrorKind::IntegrandNotLocalized, "J = " + std::to_string(source) + " drives <q> = " +
                                                  std::to_string(r.slope) + " beyond the sampled centroid grid");
    return r;
  };
}

ResponseFn oracle_response(const PotentialModel& p, const ThermoState& ts) {
  return [p, ts](double source) { return tilted_response(p, ts, source); };
}

ResponseFn harmonic_response(double omega, double f, const ThermoState& ts) {
  if (!(omega > 0.0)) raise(ErrorKind::InvalidArgument, "harmonic frequency must be positive");
  const double k = ts.mass * omega * omega;
  const double free = -log_two_sinh(0.5 * ts.beta * omega) / ts.beta;
  return [k, f, free](double source) {
    TiltedResponse r;
    r.value = (source - f) * (source - f) / (2.0 * k) + free;
    r.slope = (source - f) / k;
    r.curvature = 1.0 / k;
    return r;
  };
}

GeneratingFunctionTable generating_function(const CentroidPotentialTable& table, std::span<const double> sources) {
  return tabulate(sampled_response(table), sources, GeneratingSource::sampled, ThermoState(table.beta, table.mass));
}

SourceWindow plan_source_window(const ResponseFn& response, double centre, int points, double sigmas,
                                std::span<const double> must_include) {
  if (points < 5 || points % 2 == 0) raise(ErrorKind::InvalidArgument, "source window needs an odd count >= 5");
  const TiltedResponse r0 = response(centre);
  if (!(r0.curvature > 0.0)) raise(ErrorKind::NonConvexAtOrigin, "w'' <= 0 at the window centre");
  const double sigma = std::sqrt(r0.curvature);
  SourceWindow out;
  out.target_lo = r0.slope - sigmas * sigma;
  out.target_hi = r0.slope + sigmas * sigma;

  auto widen = [&](int dir) {
    double needed = 0.0;
    for (double m : must_include)
      if ((m - centre) * dir > 0.0) needed = std::max(needed, 1.05 * std::abs(m - centre));
    const double target = dir > 0 ? out.target_hi : out.target_lo;
    double ok = 0.0, failed = 0.0;
    double reach = std::max(sigmas / sigma, needed);
    for (int it = 0; it < kMaxWidening; ++it) {
      try {
        const TiltedResponse r = response(centre + dir * reach);
        ok = reach;
        if ((r.slope - target) * dir >= 0.0 && reach >= needed) return reach;
        reach *= kWidening;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::IntegrandNotLocalized) throw;
        failed = reach;
        break;
      }
    }
    if (failed == 0.0) raise(ErrorKind::NotConverged, "source window did not reach its Q target");
    if (ok == 0.0) ok = failed;
    // Bisect towards the largest evaluable reach.
    double good = ok < failed ? ok : 0.0, bad = failed;
    for (int it = 0; it < 12; ++it) {
      const double mid = 0.5 * (good + bad);
      try {
        response(centre + dir * mid);
        good = mid;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::IntegrandNotLocalized) throw;
        bad = mid;
      }
    }
    if (good <= 0.0 || good < needed)
      raise(ErrorKind::IntegrandNotLocalized, "generating function cannot be evaluated at the required sources");
    out.clipped = true;
    return good;
  };
  const double below = widen(-1), above = widen(+1);

  const int half = (points - 1) / 2;
  for (int i = 0; i < points; ++i) {
    const int k = i - half;
    out.sources.push_back(k < 0 ? centre + below * k / half : centre + above * k / half);
  }
  out.q_lo = response(out.sources.front()).slope;
  out.q_hi = response(out.sources.back()).slope;
  return out;
}

// ---------------------------------------------------------------------------
// Legendre transforms

LegendrePoint legendre_point(const HermiteSamples& w, double q) {
  const double s_lo = w.df.front(), s_hi = w.df.back();
  const double slack = 1e-12 * (1.0 + s_hi - s_lo);
  if (q < s_lo && q >= s_lo - slack) q = s_lo;
  if (q > s_hi && q <= s_hi + slack) q = s_hi;
  if (!(q >= s_lo && q <= s_hi))
    raise(ErrorKind::QOutOfRange, "Q = " + std::to_string(q) + " outside the slope range [" + std::to_string(s_lo) +
                                      ", " + std::to_string(s_hi) + "] of the source grid");
  // Nodal slopes are monotone for convex input; bracket by segment first.
  std::size_t i = 0;
  while (i + 2 < w.size() && w.df[i + 1] < q) ++i;
  double a = w.x[i], b = w.x[i + 1];
  auto g = [&](double j) { return w.slope(j) - q; };
  double ga = g(a), gb = g(b);
  double source;
  if (ga == 0.0) {
    source = a;
  } else if (gb == 0.0) {
    source = b;
  } else if (ga * gb > 0.0) {
    // Interpolant overshoot inside the segment; fall back to the nearer end.
    source = std::abs(ga) < std::abs(gb) ? a : b;
  } else {
    boost::uintmax_t iterations = 200;
    auto [lo, hi] = boost::math::tools::toms748_solve(g, a, b, ga, gb,
                                                      boost::math::tools::eps_tolerance<double>(52), iterations);
    source = 0.5 * (lo + hi);
  }
  return {source * q - w.value(source), source};
}

EffectivePotentialCurve legendre_transform(const GeneratingFunctionTable& g, std::span<const double> q_grid) {
  g.w.validate();
  EffectivePotentialCurve c;
  c.beta = g.beta;
  c.mass = g.mass;
  c.v.x.assign(q_grid.begin(), q_grid.end());
  for (double q : q_grid) {
    const LegendrePoint p = legendre_point(g.w, q);
    const double w2 = g.w.curvature(p.source);
    if (!(w2 > 0.0)) raise(ErrorKind::NonConvexAtOrigin, "w'' <= 0 at J = " + std::to_string(p.source));
    c.v.f.push_back(p.value);
    c.v.df.push_back(p.source);
    c.v.d2f.push_back(1.0 / w2);
  }
  c.v.validate();
  return c;
}

GeneratingFunctionTable inverse_legendre_transform(const EffectivePotentialCurve& c, std::span<const double> sources,
                                                   GeneratingSource kind) {
  c.v.validate();
  GeneratingFunctionTable g;
  g.source = kind;
  g.beta = c.beta;
  g.mass = c.mass;
  g.w.x.assign(sources.begin(), sources.end());
  for (double j : sources) {
    const LegendrePoint p = legendre_point(c.v, j);
    const double v2 = c.v.curvature(p.source);
    if (!(v2 > 0.0)) raise(ErrorKind::NonConvexAtOrigin, "V'' <= 0 at Q = " + std::to_string(p.source));
    g.w.f.push_back(p.value);
    g.w.df.push_back(p.source);
    g.w.d2f.push_back(1.0 / v2);
  }
  g.w.validate();
  return g;
}

double fenchel_violation(const GeneratingFunctionTable& g, const EffectivePotentialCurve& c) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.w.size(); ++i)
    for (std::size_t k = 0; k < c.v.size(); ++k)
      worst = std::max(worst, g.w.x[i] * c.v.x[k] - g.w.f[i] - c.v.f[k]);
  return worst;
}

// ---------------------------------------------------------------------------
// Parameters

EpacParameters extract_parameters(const GeneratingFunctionTable& g, double tilt) {
  g.w.validate();
  const HermiteSamples& w = g.w;
  const double j0 = -tilt;
  if (!(j0 > w.lo() && j0 < w.hi()))
    raise(ErrorKind::InvalidArgument, "source " + std::to_string(j0) + " is not interior to the J grid");
  EpacParameters p;
  p.beta = g.beta;
  p.mass = g.mass;
  p.tilt = tilt;
  const double w2 = w.curvature(j0);
  if (!(w2 > 0.0)) raise(ErrorKind::NonConvexAtOrigin, "w'' = " + std::to_string(w2) + " at the extraction source");
  p.q_min = w.slope(j0);
  p.omega = 1.0 / std::sqrt(g.mass * w2);
  p.e0 = -w.value(j0);
  p.sigma_q = std::sqrt(w2);
  if (w.lo() < 0.0 && w.hi() > 0.0) {
    const double c0 = w.curvature(0.0);
    if (c0 > 0.0) p.omega_s = 1.0 / std::sqrt(g.mass * c0);
  }

  // Curve route: minimize V(Q) + tilt Q over the covered Q range, where it
  // is convex and therefore unimodal.
  auto curve = [&](double q) { return legendre_point(w, q).value + tilt * q; };
  const double q_lo = w.df.front(), q_hi = w.df.back();
  const auto [q_star, v_star] = boost::math::tools::brent_find_minima(curve, q_lo, q_hi, 52);
  p.q_min_curve = q_star;
  // The interpolant is C^2, so its third derivative jumps at nodes and a
  // stencil centred on one picks up an O(h) error: extrapolate out the h
  // and h^2 terms from steps h, h/2, h/4.
  const double h = std::min(2e-3 * p.sigma_q, 0.25 * std::min(q_star - q_lo, q_hi - q_star));
  auto second = [&](double step) {
    return (curve(q_star + step) - 2.0 * v_star + curve(q_star - step)) / (step * step);
  };
  const double v2 = (8.0 * second(0.25 * h) - 6.0 * second(0.5 * h) + second(h)) / 3.0;
  p.omega_curve = v2 > 0.0 ? std::sqrt(v2 / g.mass) : 0.0;

  // Secondary: quadratic least squares over Q_min +- sigma_Q / 2.
  const double a = std::max(q_lo, p.q_min - 0.5 * p.sigma_q);
  const double b = std::min(q_hi, p.q_min + 0.5 * p.sigma_q);
  constexpr int kFitPoints = 21;
  Eigen::MatrixXd design(kFitPoints, 3);
  Eigen::VectorXd rhs(kFitPoints);
  for (int i = 0; i < kFitPoints; ++i) {
    const double q = a + (b - a) * i / (kFitPoints - 1);
    const double d = q - p.q_min;
    design(i, 0) = 1.0;
    design(i, 1) = d;
    design(i, 2) = d * d;
    rhs(i) = curve(q);
  }
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(rhs);
  p.omega_local_fit = coef(2) > 0.0 ? std::sqrt(2.0 * coef(2) / g.mass) : 0.0;
  return p;
}

double route_disagreement(const EpacParameters& p) {
  const double q_scale = std::max(std::abs(p.q_min), p.sigma_q);
  return std::max(std::abs(p.q_min - p.q_min_curve) / q_scale, std::abs(p.omega - p.omega_curve) / p.omega);
}

double ground_state_energy(const GeneratingFunctionTable& g, double tilt) { return -g.w.value(-tilt); }

// ---------------------------------------------------------------------------
// Error propagation

std::vector<CentroidPotentialTable> replica_tables(const CentroidPotentialTable& table, FitFamily family, int count,
                                                   std::uint64_t seed) {
  std::vector<CentroidPotentialTable> out;
  out.reserve(static_cast<std::size_t>(count));
  const std::size_t n = table.grid.size();
  for (int r = 0; r < count; ++r) {
    StreamRng rng(seed, kReplicaStreamOffset + static_cast<std::uint64_t>(r));
    std::vector<double> forces(n);
    for (std::size_t i = 0; i < n; ++i) forces[i] = table.forces[i] + table.force_err[i] * rng.normal();
    // Parity-mirrored tables stay antisymmetric.
    if (family == FitFamily::even && std::abs(table.grid.front() + table.grid.back()) <= 1e-12)
      for (std::size_t i = 0; i < n / 2; ++i) forces[i] = -forces[n - 1 - i];
    out.push_back(refit_table(table, forces, family, table.fit_degree));
  }
  return out;
}

}  // namespace epac

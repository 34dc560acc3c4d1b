#include "epac/epac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <complex>

#include <Eigen/Dense>

#include "epac/errors.hpp"
#include "epac/stats.hpp"

namespace epac {

namespace {

/// Result of one pass potential -> w -> parameters at a given tilt.
struct Stage {
  GeneratingFunctionTable g;
  SourceWindow window;
  EpacParameters params;
  std::optional<CentroidPotentialTable> table;
  FitFamily family = FitFamily::full;
};

ResponseFn analytic_response(const Polynomial& p, const ThermoState& ts) {
  if (p.degree() != 2 || !(p.coefficient(2) > 0))
    raise(ErrorKind::InvalidArgument, "the analytic route needs a confining quadratic potential");
  const double a0 = to_double(p.coefficient(0));
  const double f = to_double(p.coefficient(1));
  const double omega = std::sqrt(2.0 * to_double(p.coefficient(2)) / ts.mass);
  auto base = harmonic_response(omega, f, ts);
  return [base, a0](double j) {
    auto r = base(j);
    r.value -= a0;
    return r;
  };
}

double spread(std::span<const double> values) { return values.size() < 2 ? 0.0 : mean_std(values).std; }

Stage run_stage(const Polynomial& poly, const ThermoState& ts, double tilt, const PipelineOptions& opts) {
  const PotentialModel model = make_polynomial(poly.coeffs);
  const double centre = -tilt;
  std::vector<double> keep;
  if (centre != 0.0) keep.push_back(0.0);

  Stage s;
  ResponseFn response;
  switch (opts.route) {
    case GeneratingSource::analytic:
      response = analytic_response(poly, ts);
      break;
    case GeneratingSource::oracle:
      response = oracle_response(model, ts);
      break;
    case GeneratingSource::sampled: {
      const double reach = std::max(std::abs(centre), keep.empty() ? 0.0 : std::abs(keep.front()));
      const auto grid = default_centroid_grid(model, ts, opts.grid_points, reach);
      s.table = build_centroid_table(model, ts, grid, opts.ensemble, opts.table);
      s.family = fit_family(model);
      response = sampled_response(*s.table);
      break;
    }
  }
  s.window = plan_source_window(response, centre, opts.source_points, opts.source_sigmas, keep);
  s.g = tabulate(response, s.window.sources, opts.route, ts);
  s.params = extract_parameters(s.g, tilt);

  if (s.table && opts.replicas > 1) {
    const auto reps = replica_tables(*s.table, s.family, opts.replicas, opts.ensemble.seed);
    std::vector<double> q, omega, e0, omega_s;
    for (const auto& rep : reps) {
      auto r = sampled_response(rep);
      const auto at = r(centre);
      q.push_back(at.slope);
      omega.push_back(1.0 / std::sqrt(ts.mass * at.curvature));
      e0.push_back(-at.value);
      if (s.params.omega_s) omega_s.push_back(1.0 / std::sqrt(ts.mass * r(0.0).curvature));
    }
    s.params.q_min_err = spread(q);
    s.params.omega_err = spread(omega);
    s.params.e0_err = spread(e0);
    s.params.omega_s_err = spread(omega_s);
  }
  return s;
}

/// p(q) = Ubar(x) + slope x with x = q + shift; Ubar even and holding the
/// constant.
struct SchemeSplit {
  double shift = 0.0;
  double slope = 0.0;
  Polynomial symmetric;
};

SchemeSplit split(const Polynomial& p) {
  SchemeSplit out;
  if (p.degree() == 2) {
    out.slope = to_double(p.coefficient(1));
    out.symmetric = Polynomial{{p.coefficient(0), Rational(0), p.coefficient(2)}};
    return out;
  }
  const LinearDecomposition d = decompose_linear(p);
  out.shift = to_double(d.shift);
  out.slope = to_double(d.slope);
  auto sym = as_polynomial(d.symmetric_potential());
  out.symmetric = *sym;
  return out;
}

std::vector<double> curve_grid(const SourceWindow& w, int points) { return linspace(w.q_lo, w.q_hi, points); }

}  // namespace

CorrelationSeries epac_autocorrelation(const EpacParameters& params, const ThermoState& ts,
                                       std::span<const double> times) {
  if (!(params.omega > 0.0)) raise(ErrorKind::InvalidArgument, "EPAC frequency must be positive");
  CorrelationSeries c;
  c.kind = SeriesKind::epac;
  c.beta = ts.beta;
  c.times.assign(times.begin(), times.end());
  const double w = params.omega;
  const double amp = 1.0 / (2.0 * ts.mass * w);
  const double thermal = amp / std::tanh(0.5 * ts.beta * w);
  const double offset = params.q_min * params.q_min;
  for (double t : times)
    c.values.emplace_back(thermal * std::cos(w * t) + offset, -amp * std::sin(w * t));
  return c;
}

double harmonic_standard_effective_potential(double omega, double f, const ThermoState& ts, double q) {
  if (!(omega > 0.0)) raise(ErrorKind::InvalidArgument, "harmonic frequency must be positive");
  return 0.5 * ts.mass * omega * omega * q * q + f * q + log_two_sinh(0.5 * ts.beta * omega) / ts.beta;
}

double harmonic_centroid_potential(double omega, double f, const ThermoState& ts, double q) {
  if (!(omega > 0.0)) raise(ErrorKind::InvalidArgument, "harmonic frequency must be positive");
  const double h = 0.5 * ts.beta * omega;
  // log(sinh h / h) = log(2 sinh h) - log(2 h).
  return 0.5 * ts.mass * omega * omega * q * q + f * q + (log_two_sinh(h) - std::log(2.0 * h)) / ts.beta;
}

std::string to_string(Scheme scheme) { return scheme == Scheme::A ? "A" : "B"; }

Scheme parse_scheme(const std::string& text) {
  if (text == "A" || text == "a") return Scheme::A;
  if (text == "B" || text == "b") return Scheme::B;
  raise(ErrorKind::InvalidArgument, "unknown scheme '" + text + "' (expected A or B)");
}

SchemeResult run_scheme(Scheme scheme, const Polynomial& p, const ThermoState& ts, const PipelineOptions& opts) {
  SchemeResult out;
  out.scheme = scheme;
  out.provenance.config_hash = opts.config_hash;
  out.provenance.seed = opts.ensemble.seed;
  out.provenance.route = opts.route;
  if (opts.route == GeneratingSource::sampled)
    out.provenance.streams = "mean forces: grid index; TI nodes: 1000000 + node; replicas: 2000000 + replica";

  if (scheme == Scheme::A) {
    Stage s = run_stage(p, ts, 0.0, opts);
    out.params = s.params;
    out.generating = std::move(s.g);
    out.window = s.window;
    out.table = std::move(s.table);
    out.family = s.family;
    const auto q = curve_grid(out.window, opts.curve_points);
    out.curve = legendre_transform(out.generating, q);
    return out;
  }

  const SchemeSplit sp = split(p);
  Stage s = run_stage(sp.symmetric, ts, sp.slope, opts);
  out.shift = sp.shift;
  out.slope = sp.slope;
  out.x_min = s.params.q_min;
  out.window = s.window;
  out.table = std::move(s.table);
  out.family = s.family;
  out.generating = std::move(s.g);

  const auto x = curve_grid(out.window, opts.curve_points);
  EffectivePotentialCurve sym = legendre_transform(out.generating, x);
  EffectivePotentialCurve curve;
  curve.beta = sym.beta;
  curve.mass = sym.mass;
  for (std::size_t i = 0; i < sym.v.size(); ++i) {
    curve.v.x.push_back(sym.v.x[i] - sp.shift);
    curve.v.f.push_back(sym.v.f[i] + sp.slope * sym.v.x[i]);
    curve.v.df.push_back(sym.v.df[i] + sp.slope);
    curve.v.d2f.push_back(sym.v.d2f[i]);
  }
  out.curve = std::move(curve);
  out.symmetric_curve = std::move(sym);

  out.params = s.params;
  out.params.q_min = s.params.q_min - sp.shift;
  out.params.q_min_curve = s.params.q_min_curve - sp.shift;
  return out;
}

std::vector<double> curve_errors(const SchemeResult& result, std::span<const double> q, int replicas,
                                 std::uint64_t seed) {
  std::vector<double> err(q.size(), 0.0);
  if (!result.table || replicas < 2 || q.empty()) return err;
  const bool b = result.scheme == Scheme::B;
  std::vector<double> x(q.begin(), q.end());
  if (b)
    for (double& v : x) v += result.shift;

  // Sources needed for these points, padded by one node each side.
  const auto& w = result.generating.w;
  double j_lo = w.hi(), j_hi = w.lo();
  for (double v : x) {
    const double j = legendre_point(w, v).source;
    j_lo = std::min(j_lo, j);
    j_hi = std::max(j_hi, j);
  }
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(w.size());
  std::ptrdiff_t first = std::upper_bound(w.x.begin(), w.x.end(), j_lo) - w.x.begin() - 2;
  std::ptrdiff_t last = std::lower_bound(w.x.begin(), w.x.end(), j_hi) - w.x.begin() + 1;
  first = std::max<std::ptrdiff_t>(first, 0);
  last = std::min(last, n - 1);
  while (last - first < 2) (first > 0 ? --first : ++last);
  const std::vector<double> sources(w.x.begin() + first, w.x.begin() + last + 1);
  // Points at the end of the curve sit on the last node's slope, which a
  // replica may not reach; let replicas extend one spacing past the window
  // where their table supports it.
  std::vector<double> beyond;
  if (first == 0) beyond.push_back(2.0 * w.x[0] - w.x[1]);
  if (last == n - 1) beyond.push_back(2.0 * w.x[n - 1] - w.x[n - 2]);

  const ThermoState ts(result.generating.beta, result.generating.mass);
  auto recoverable = [](const Error& e) {
    return e.kind() == ErrorKind::IntegrandNotLocalized || e.kind() == ErrorKind::QOutOfRange;
  };
  std::vector<std::vector<double>> samples(q.size());
  for (const auto& rep : replica_tables(*result.table, result.family, replicas, seed)) {
    const ResponseFn response = sampled_response(rep);
    std::vector<double> at = sources;
    for (double j : beyond) {
      try {
        response(j);
        at.push_back(j);
      } catch (const Error& e) {
        if (!recoverable(e)) throw;
      }
    }
    std::sort(at.begin(), at.end());
    GeneratingFunctionTable g;
    try {
      g = tabulate(response, at, GeneratingSource::sampled, ts);
    } catch (const Error& e) {
      // A replica whose table cannot support the window adds no sample.
      if (!recoverable(e)) throw;
      continue;
    }
    for (std::size_t k = 0; k < q.size(); ++k) {
      try {
        samples[k].push_back(legendre_point(g.w, x[k]).value);
      } catch (const Error& e) {
        if (!recoverable(e)) throw;
      }
    }
  }
  for (std::size_t k = 0; k < q.size(); ++k)
    err[k] = samples[k].size() < 2 ? std::numeric_limits<double>::quiet_NaN() : spread(samples[k]);
  return err;
}

FrequencyEnhancement frequency_enhancement_check(const SchemeResult& result_b) {
  if (result_b.scheme != Scheme::B || !result_b.symmetric_curve)
    raise(ErrorKind::InvalidArgument, "frequency enhancement needs a scheme B result");
  const EpacParameters& p = result_b.params;
  if (!p.omega_s) raise(ErrorKind::InvalidArgument, "scheme B result lacks the symmetric frequency");
  const double mass = result_b.generating.mass;
  const auto& w = result_b.generating.w;

  FrequencyEnhancement fe;
  fe.omega_bar = p.omega;
  fe.omega_s = *p.omega_s;
  fe.omega_bar_err = p.omega_err;
  fe.omega_s_err = p.omega_s_err;
  fe.x_min = result_b.x_min;

  // Ubar(X) - (1/2) m w_s^2 X^2 = C + (1/4) lambda X^4 on 0 <= X <= reach.
  const double reach = std::min(1.1 * std::max(std::abs(fe.x_min), p.sigma_q), w.df.back());
  constexpr int kPoints = 21;
  Eigen::MatrixXd design(kPoints, 2);
  Eigen::VectorXd rhs(kPoints);
  const double k_s = mass * fe.omega_s * fe.omega_s;
  for (int i = 0; i < kPoints; ++i) {
    const double x = reach * i / (kPoints - 1);
    design(i, 0) = 1.0;
    design(i, 1) = 0.25 * x * x * x * x;
    rhs(i) = legendre_point(w, x).value - 0.5 * k_s * x * x;
  }
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(rhs);
  fe.lambda = coef(1);
  const double scale = 1e-9 * (1.0 + std::abs(coef(0)));
  if (fe.lambda < -scale / std::pow(reach, 4))
    raise(ErrorKind::FitRejected, "quartic expansion of the symmetric curve has lambda = " +
                                      std::to_string(fe.lambda) + " < 0");
  fe.lambda = std::max(fe.lambda, 0.0);
  fe.omega_predicted = std::sqrt(fe.omega_s * fe.omega_s + 3.0 * fe.lambda * fe.x_min * fe.x_min / mass);
  fe.margin = fe.omega_bar - fe.omega_s;
  fe.enhanced = fe.margin >= -3.0 * std::hypot(fe.omega_bar_err, fe.omega_s_err) - 1e-12 * fe.omega_s;
  return fe;
}

}  // namespace epac

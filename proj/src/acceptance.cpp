#include "epac/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <random>
#include <tuple>

#include <fmt/format.h>

#include "epac/config.hpp"
#include "epac/epac.hpp"
#include "epac/errors.hpp"
#include "epac/oracle.hpp"

namespace epac {

namespace {

constexpr double kBenchmarkBetas[] = {0.1, 1.0, 10.0, 100.0};

Polynomial polynomial_of(const std::string& system) { return *as_polynomial(parse_potential(system)); }

Polynomial harmonic_poly(double omega, double f = 0.0) {
  return Polynomial{{Rational(0), Rational(f), Rational(omega) * Rational(omega) / 2}};
}

/// Collects the comparisons of one criterion.
class Ledger {
 public:
  void check(bool ok, const std::string& line, bool known = false) {
    details_.push_back(fmt::format("{} {}", ok ? "ok  " : (known ? "KNOWN" : "FAIL"), line));
    if (!ok) (known ? known_ : failed_) = true;
  }
  void note(const std::string& line) { details_.push_back("     " + line); }
  CriterionStatus status() const {
    if (failed_) return CriterionStatus::fail;
    if (known_) return CriterionStatus::known_failure;
    return CriterionStatus::pass;
  }
  std::vector<std::string> take() { return std::move(details_); }

 private:
  std::vector<std::string> details_;
  bool failed_ = false;
  bool known_ = false;
};

class Suite {
 public:
  explicit Suite(const AcceptanceOptions& o) : opts_(o) {}

  std::vector<double> sampled_betas() const {
    std::vector<double> out;
    for (double b : kBenchmarkBetas)
      if (!(opts_.quick && b >= 100.0)) out.push_back(b);
    return out;
  }

  PipelineOptions sampled_options(double beta) const {
    PipelineOptions o;
    o.route = GeneratingSource::sampled;
    o.ensemble.beads = default_beads(beta);
    o.ensemble.sweeps = opts_.sweeps;
    o.ensemble.burn_in = opts_.burn_in;
    o.ensemble.block_size = opts_.block_size;
    o.ensemble.seed = opts_.seed;
    o.ensemble.threads = opts_.threads;
    o.replicas = opts_.replicas;
    o.config_hash = "acceptance";
    return o;
  }

  const SchemeResult& run(const std::string& system, double beta, Scheme scheme, GeneratingSource route) {
    auto key = std::make_tuple(system, beta, scheme, route);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    PipelineOptions o = sampled_options(beta);
    o.route = route;
    auto r = run_scheme(scheme, polynomial_of(system), ThermoState(beta, 1.0), o);
    return cache_.emplace(key, std::move(r)).first->second;
  }
  const SchemeResult& sampled(const std::string& system, double beta, Scheme scheme) {
    return run(system, beta, scheme, GeneratingSource::sampled);
  }
  const SchemeResult& oracle(const std::string& system, double beta, Scheme scheme) {
    return run(system, beta, scheme, GeneratingSource::oracle);
  }

  const Spectrum& spectrum(const std::string& system, double beta) {
    auto key = std::make_pair(system, beta);
    auto it = spectra_.find(key);
    if (it != spectra_.end()) return it->second;
    return spectra_.emplace(key, solve_thermal_spectrum(parse_potential(system), ThermoState(beta, 1.0)))
        .first->second;
  }

  std::vector<std::pair<std::string, const SchemeResult*>> all_results() const {
    std::vector<std::pair<std::string, const SchemeResult*>> out;
    for (const auto& [k, v] : cache_)
      out.emplace_back(fmt::format("{} beta={:g} scheme {} {}", std::get<0>(k), std::get<1>(k),
                                   to_string(std::get<2>(k)), to_string(std::get<3>(k))),
                       &v);
    return out;
  }

  std::vector<double> times() const { return uniform_times(0.0, 20.0, 0.05); }

  const AcceptanceOptions& options() const { return opts_; }

  std::vector<ComparisonRow>* rows = nullptr;

 private:
  AcceptanceOptions opts_;
  std::map<std::tuple<std::string, double, Scheme, GeneratingSource>, SchemeResult> cache_;
  std::map<std::pair<std::string, double>, Spectrum> spectra_;
};

double max_abs_diff(const CorrelationSeries& a, const CorrelationSeries& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  return worst;
}

/// Half the peak-to-peak range of Re C over [t0, t0 + width].
double envelope(const CorrelationSeries& c, double t0, double width) {
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    if (c.times[i] < t0 - 1e-12 || c.times[i] > t0 + width + 1e-12) continue;
    lo = std::min(lo, c.values[i].real());
    hi = std::max(hi, c.values[i].real());
  }
  return 0.5 * (hi - lo);
}

// ---------------------------------------------------------------------------

void criterion_1(Suite& s, Ledger& l) {
  const auto times = s.times();
  double worst_epac = 0.0, worst_oracle = 0.0;
  for (double beta : {0.1, 1.0, 10.0}) {
    for (double omega : {0.5, 1.0, 2.0}) {
      const ThermoState ts(beta, 1.0);
      PipelineOptions o;
      o.route = GeneratingSource::analytic;
      auto r = run_scheme(Scheme::A, harmonic_poly(omega), ts, o);
      auto epac = epac_autocorrelation(r.params, ts, times);
      CorrelationSeries closed = epac;
      const double amp = 1.0 / (2.0 * omega);
      for (std::size_t i = 0; i < times.size(); ++i)
        closed.values[i] = {amp / std::tanh(0.5 * beta * omega) * std::cos(omega * times[i]),
                            -amp * std::sin(omega * times[i])};
      SpectrumOptions tight;
      tight.tolerance = 1e-11;
      auto spectrum =
          solve_thermal_spectrum(make_polynomial(harmonic_poly(omega).coeffs), ts, 1e-12, tight);
      auto exact = exact_autocorrelation(spectrum, beta, times);
      worst_epac = std::max(worst_epac, max_abs_diff(epac, closed));
      worst_oracle = std::max(worst_oracle, max_abs_diff(exact, closed));
    }
  }
  l.check(worst_epac <= 1e-12, fmt::format("analytic EPAC vs closed form: max |dC| = {:.2e} (tol 1e-12)", worst_epac));
  l.check(worst_oracle <= 1e-8, fmt::format("oracle C(t) vs closed form: max |dC| = {:.2e} (tol 1e-8)", worst_oracle));
}

void criterion_2(Suite& s, Ledger& l) {
  const double f = 0.3;
  const Rational fr(3, 10);
  const Polynomial p{{Rational(0), fr, Rational(1, 2)}};
  for (Scheme scheme : {Scheme::A, Scheme::B}) {
    PipelineOptions o;
    o.route = GeneratingSource::analytic;
    auto r = run_scheme(scheme, p, ThermoState(100.0, 1.0), o);
    l.check(std::abs(r.params.q_min + f) <= 1e-10 && std::abs(r.params.omega - 1.0) <= 1e-10 &&
                std::abs(r.params.e0 - 0.455) <= 1e-10,
            fmt::format("analytic scheme {} at beta=100: Q_min = {:.12f}, omega = {:.12f}, E0 = {:.12f} "
                        "(-0.3, 1, 0.455; tol 1e-10)",
                        to_string(scheme), r.params.q_min, r.params.omega, r.params.e0));
  }

  const double beta = 10.0;
  const auto& r = s.sampled("asym-harmonic(0.3)", beta, Scheme::B);
  const auto& p2 = r.params;
  // Quadrature floor: exact-noise (harmonic) tables carry near-zero errors.
  const double floor = 1e-8;
  l.check(std::abs(p2.q_min + f) <= 3.0 * p2.q_min_err + floor,
          fmt::format("sampled beta=10: Q_min = {:.9f} +- {:.1e} vs -0.3 (3 sigma + {:.0e})", p2.q_min, p2.q_min_err,
                      floor));
  l.check(p2.q_min_err <= 0.01, fmt::format("sampled sigma(Q_min) = {:.1e} (<= 0.01)", p2.q_min_err));
  l.check(std::abs(p2.omega - 1.0) <= 3.0 * p2.omega_err + floor,
          fmt::format("sampled beta=10: omega = {:.9f} +- {:.1e} vs 1", p2.omega, p2.omega_err));
  const double e0_beta = -0.5 * f * f + log_two_sinh(0.5 * beta) / beta;
  l.check(std::abs(p2.e0 - e0_beta) <= 3.0 * p2.e0_err + floor,
          fmt::format("sampled beta=10: E0 = {:.9f} +- {:.1e} vs finite-beta exact {:.9f} (0.455 - {:.1e})", p2.e0,
                      p2.e0_err, e0_beta, 0.455 - e0_beta));
}

void criterion_3(Suite& s, Ledger& l) {
  {
    const double beta = 100.0;
    const auto& r = s.sampled("harmonic", beta, Scheme::A);
    const double vc0 = r.table->fit_value(0.0);
    const double exact_vc0 = harmonic_centroid_potential(1.0, 0.0, ThermoState(beta, 1.0), 0.0);
    l.check(std::abs(vc0 - 0.5) <= 0.01,
            fmt::format("sampled V^c(0) at beta=100 = {:.6f} vs 0.5 (tol 0.01); the exact harmonic value is "
                        "(1/beta) log(sinh(beta/2)/(beta/2)) = {:.6f}",
                        vc0, exact_vc0),
            true);
    l.check(std::abs(vc0 - exact_vc0) <= 1e-6,
            fmt::format("sampled V^c(0) at beta=100 matches the exact centroid potential: |{:.8f} - {:.8f}| <= 1e-6",
                        vc0, exact_vc0));
    const double v0 = r.curve.v.value(0.0);
    l.check(std::abs(v0 - 0.5) <= 0.01, fmt::format("transformed V_beta(0) at beta=100 = {:.8f} vs 0.5 (tol 0.01)", v0));
  }
  {
    const double beta = 0.01;
    const auto& r = s.sampled("harmonic", beta, Scheme::A);
    const auto& t = *r.table;
    double q_star = t.grid.front(), v_star = t.fit_value(q_star);
    for (int i = 0; i <= 4000; ++i) {
      const double q = t.grid.front() + (t.grid.back() - t.grid.front()) * i / 4000.0;
      if (t.fit_value(q) < v_star) v_star = t.fit_value(q), q_star = q;
    }
    l.check(std::abs(q_star) <= 0.01 && std::abs(v_star) <= 0.01,
            fmt::format("beta=0.01: V^c minimum at q = {:.4f} with value {:.6f} (both within 0.01 of 0)", q_star,
                        v_star));
    const double v0 = r.curve.v.value(0.0);
    l.check(v0 < -2.0, fmt::format("beta=0.01: V_beta(0) = {:.4f} < -2", v0));
  }
}

void criterion_4(Suite& s, Ledger& l) {
  // Closed forms: V_f(Q) - V_0(Q) - f Q and w_f(J) - w_0(J - f).
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> pick(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const double f = pick(gen), j = pick(gen), beta = 0.5 + 5.0 * (pick(gen) + 1.0);
    const ThermoState ts(beta, 1.0);
    worst = std::max(worst, std::abs(harmonic_response(1.0, f, ts)(j).value - harmonic_response(1.0, 0.0, ts)(j - f).value));
    worst = std::max(worst, std::abs(harmonic_standard_effective_potential(1.0, f, ts, j) -
                                     harmonic_standard_effective_potential(1.0, 0.0, ts, j) - f * j));
  }
  // Exact tilted Hamiltonian through the numerical transform, tabulated on
  // source grids related by the same shift (J <-> J + 5/4).
  {
    const ThermoState ts(10.0, 1.0);
    const auto j = linspace(-2.0, 3.0, 41);
    std::vector<double> j_shift;
    for (double v : j) j_shift.push_back(v + 1.25);
    const auto gq = tabulate(oracle_response(parse_potential("paper-quartic"), ts), j, GeneratingSource::oracle, ts);
    const auto gs =
        tabulate(oracle_response(parse_potential("paper-symmetric"), ts), j_shift, GeneratingSource::oracle, ts);
    const auto q = linspace(-1.0, 0.6, 15);
    std::vector<double> x;
    for (double v : q) x.push_back(v + 2.5);
    const auto a = legendre_transform(gq, q);
    const auto u = legendre_transform(gs, x);
    for (std::size_t i = 0; i < q.size(); ++i)
      worst = std::max(worst, std::abs(a.v.f[i] - (u.v.f[i] - 1.25 * x[i])));
  }
  l.check(worst <= 1e-9, fmt::format("analytic and oracle decoupling: max deviation {:.2e} (tol 1e-9)", worst));

  const auto& a = s.sampled("paper-quartic", 10.0, Scheme::A);
  const auto& u = s.sampled("paper-symmetric", 10.0, Scheme::A);
  const double lo = std::max(a.curve.v.lo(), u.curve.v.lo() - 2.5);
  const double hi = std::min(a.curve.v.hi(), u.curve.v.hi() - 2.5);
  const double pad = 0.1 * (hi - lo);
  const auto q = linspace(lo + pad, hi - pad, 15);
  std::vector<double> x;
  for (double v : q) x.push_back(v + 2.5);
  const auto ea = curve_errors(a, q, s.options().replicas, s.options().seed);
  const auto eu = curve_errors(u, x, s.options().replicas, s.options().seed);
  int bad = 0;
  double worst_pull = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double d = a.curve.v.value(q[i]) - (u.curve.v.value(x[i]) - 1.25 * x[i]);
    const double sigma = std::hypot(ea[i], eu[i]);
    const double pull = std::abs(d) / sigma;
    worst_pull = std::max(worst_pull, pull);
    if (!(pull <= 3.0)) ++bad;
    l.note(fmt::format("Q = {:+.3f}: V - Ubar + (5/4) x = {:+.2e} +- {:.1e}", q[i], d, sigma));
  }
  l.check(bad == 0, fmt::format("sampled decoupling at beta=10 on 15 points in [{:.2f}, {:.2f}]: worst |d|/sigma = {:.2f} "
                                "(tol 3)",
                                q.front(), q.back(), worst_pull));
}

void criterion_5(Suite& s, Ledger& l) {
  for (double beta : s.sampled_betas()) {
    const auto& a = s.sampled("paper-quartic", beta, Scheme::A).params;
    const auto& b = s.sampled("paper-quartic", beta, Scheme::B).params;
    const double sq = std::hypot(a.q_min_err, b.q_min_err), sw = std::hypot(a.omega_err, b.omega_err);
    const double dq = std::abs(a.q_min - b.q_min), dw = std::abs(a.omega - b.omega);
    l.check(dq <= 3.0 * sq && 3.0 * sq <= 0.02,
            fmt::format("beta={:g}: Q_min A {:.5f} B {:.5f}, |d| = {:.1e} vs 3 sigma = {:.1e} (3 sigma <= 0.02)", beta,
                        a.q_min, b.q_min, dq, 3.0 * sq));
    l.check(dw <= 3.0 * sw && 3.0 * sw <= 0.02,
            fmt::format("beta={:g}: omega A {:.5f} B {:.5f}, |d| = {:.1e} vs 3 sigma = {:.1e} (3 sigma <= 0.02)", beta,
                        a.omega, b.omega, dw, 3.0 * sw));
  }
  if (s.options().quick) l.note("quick: beta=100 sampling skipped");
}

void criterion_6(Suite& s, Ledger& l) {
  auto add_row = [&](ComparisonRow row) {
    if (s.rows) s.rows->push_back(std::move(row));
  };
  for (double beta : s.sampled_betas()) {
    const auto& r = s.sampled("paper-quartic", beta, Scheme::B);
    const auto& spec = s.spectrum("paper-quartic", beta);
    const ThermoState ts(beta, 1.0);

    const double q_exact = thermal_expectation_q(spec, beta);
    const double dq = std::abs(r.params.q_min - q_exact);
    l.check(dq <= 0.01, fmt::format("beta={:g}: Q_min = {:.5f} +- {:.1e} vs <q> = {:.5f} (tol 0.01)", beta,
                                    r.params.q_min, r.params.q_min_err, q_exact));
    add_row({beta, "Q_min vs <q>", r.params.q_min, r.params.q_min_err, q_exact, dq, 0.01, true, dq <= 0.01});

    const double c0_epac = epac_autocorrelation(r.params, ts, std::vector<double>{0.0}).values[0].real();
    const double c0 = thermal_expectation_q2(spec, beta);
    const double rel = std::abs(c0_epac - c0) / c0;
    const double tol = beta < 1.0 ? 0.05 : 0.02;
    l.check(rel <= tol, fmt::format("beta={:g}: C_epac(0) = {:.5f} vs C(0) = {:.5f}, relative {:.2f}% (tol {:.0f}%)",
                                    beta, c0_epac, c0, 100.0 * rel, 100.0 * tol));
    add_row({beta, "C(0) relative", c0_epac, 0.0, c0, rel, tol, true, rel <= tol});

    // Information only: omega against the exact-route value, omega_s, and
    // the free energy against the oracle ground state.
    const auto& o = s.oracle("paper-quartic", beta, Scheme::B).params;
    add_row({beta, "omega vs exact-route omega", r.params.omega, r.params.omega_err, o.omega,
             std::abs(r.params.omega - o.omega), 0.0, false, true});
    if (r.params.omega_s && o.omega_s)
      add_row({beta, "omega_s vs exact-route omega_s", *r.params.omega_s, r.params.omega_s_err, *o.omega_s,
               std::abs(*r.params.omega_s - *o.omega_s), 0.0, false, true});
    add_row({beta, "E0 vs oracle ground state", r.params.e0, r.params.e0_err, spec.energies[0],
             std::abs(r.params.e0 - spec.energies[0]), 0.0, false, true});
  }
  if (s.options().quick) l.note("quick: beta=100 sampling skipped");
}

void criterion_7(Suite& s, Ledger& l) {
  // Judged on the exact generating function: the beta=10 and beta=100
  // margins differ by ~4e-4, below what sampling resolves.
  double prev = -INFINITY;
  bool monotone = true, positive = true;
  std::string margins;
  for (double beta : kBenchmarkBetas) {
    const auto fe = frequency_enhancement_check(s.oracle("paper-quartic", beta, Scheme::B));
    positive = positive && fe.margin > 0.0;
    monotone = monotone && fe.margin > prev;
    prev = fe.margin;
    margins += fmt::format(" beta={:g}: {:.5f}", beta, fe.margin);
    l.note(fmt::format("oracle beta={:g}: omega_bar = {:.5f}, omega_s = {:.5f}, lambda = {:.5f}, quartic estimate "
                       "{:.5f}",
                       beta, fe.omega_bar, fe.omega_s, fe.lambda, fe.omega_predicted));
  }
  l.check(positive, "oracle route: omega_bar > omega_s at every beta");
  l.check(monotone, "oracle route: margin shrinks monotonically as beta decreases;" + margins);

  for (double beta : s.sampled_betas()) {
    const auto fe = frequency_enhancement_check(s.sampled("paper-quartic", beta, Scheme::B));
    l.check(fe.enhanced, fmt::format("sampled beta={:g}: omega_bar - omega_s = {:.5f} +- {:.1e} (>= -3 sigma)", beta,
                                     fe.margin, std::hypot(fe.omega_bar_err, fe.omega_s_err)));
  }
}

void criterion_8(Suite& s, Ledger& l) {
  const auto times = s.times();
  {
    const double beta = 10.0;
    const auto& r = s.sampled("paper-quartic", beta, Scheme::B);
    const auto& spec = s.spectrum("paper-quartic", beta);
    auto epac = epac_autocorrelation(r.params, ThermoState(beta, 1.0), times);
    auto exact = exact_autocorrelation(spec, beta, times);
    double mean = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) mean += std::abs(epac.values[i].real() - exact.values[i].real());
    mean /= static_cast<double>(times.size());
    const double c0 = exact.values[0].real();
    l.check(mean <= 0.05 * c0, fmt::format("beta=10: mean |Re dC| over [0, 20] = {:.4f} vs 0.05 C(0) = {:.4f}", mean,
                                           0.05 * c0));
  }
  {
    const double beta = 0.1;
    const auto& r = s.sampled("paper-quartic", beta, Scheme::B);
    const auto& spec = s.spectrum("paper-quartic", beta);
    auto epac = epac_autocorrelation(r.params, ThermoState(beta, 1.0), times);
    auto exact = exact_autocorrelation(spec, beta, times);
    const double period = 2.0 * std::numbers::pi / r.params.omega;
    const double last = times.back() - period;
    const double exact_decay = 1.0 - envelope(exact, last, period) / envelope(exact, 0.0, period);
    const double epac_decay = 1.0 - envelope(epac, last, period) / envelope(epac, 0.0, period);
    l.check(exact_decay >= 0.5, fmt::format("beta=0.1: exact envelope decays by {:.1f}% (>= 50%)", 100.0 * exact_decay));
    l.check(std::abs(epac_decay) <= 0.01, fmt::format("beta=0.1: EPAC envelope changes by {:.2f}% (<= 1%)", 100.0 * epac_decay));
  }
}

void criterion_9(Suite& s, Ledger& l) {
  // Every table produced so far (plus the oracle runs below).
  for (double beta : kBenchmarkBetas) s.oracle("paper-quartic", beta, Scheme::A);
  s.oracle("paper-symmetric", 10.0, Scheme::A);
  int tables = 0, nonconvex = 0, route_bad = 0;
  double worst_route = 0.0;
  std::string worst_label;
  for (const auto& [label, r] : s.all_results()) {
    ++tables;
    if (!is_convex(r->generating.w, 1e-9) || !is_convex(r->curve.v, 1e-9)) ++nonconvex;
    if (r->symmetric_curve && !is_convex(r->symmetric_curve->v, 1e-9)) ++nonconvex;
    const double d = route_disagreement(r->params);
    if (d > worst_route) worst_route = d, worst_label = label;
    if (!(d <= 1e-6)) ++route_bad;
  }
  l.check(nonconvex == 0, fmt::format("convexity of w and V on {} pipeline results (tol 1e-9 scale): {} violations",
                                      tables, nonconvex));
  l.check(route_bad == 0,
          fmt::format("dual extraction routes agree: worst relative disagreement {:.1e} ({}; tol 1e-6)", worst_route,
                      worst_label));

  {
    const ThermoState ts(2.0, 1.0);
    auto g = tabulate(oracle_response(parse_potential("paper-quartic"), ts), linspace(-2.0, 2.0, 61),
                      GeneratingSource::oracle, ts);
    auto c = legendre_transform(g, linspace(g.w.df.front(), g.w.df.back(), 81));
    auto interior = linspace(-1.5, 1.5, 13);
    auto back = inverse_legendre_transform(c, interior, GeneratingSource::oracle);
    double worst = 0.0;
    for (std::size_t i = 0; i < interior.size(); ++i)
      worst = std::max(worst, std::abs(back.w.f[i] - g.w.value(interior[i])));
    l.check(worst <= 1e-8, fmt::format("Legendre involution: max |w** - w| = {:.1e} (tol 1e-8)", worst));
  }
  {
    std::vector<double> times;
    for (double t : linspace(-10.0, 10.0, 41)) times.push_back(t);
    const auto& r = s.oracle("paper-quartic", 10.0, Scheme::B);
    auto epac = epac_autocorrelation(r.params, ThermoState(10.0, 1.0), times);
    auto exact = exact_autocorrelation(s.spectrum("paper-quartic", 10.0), 10.0, times);
    double worst = 0.0;
    for (const auto* c : {&epac, &exact})
      for (std::size_t i = 0; i < times.size(); ++i)
        worst = std::max(worst, std::abs(c->values[i] - std::conj(c->values[times.size() - 1 - i])));
    l.check(worst <= 1e-12, fmt::format("C(-t) = C(t)*: max deviation {:.1e} (tol 1e-12)", worst));
  }
  {
    const auto sym = parse_potential("paper-symmetric");
    const ThermoState ts(1.0, 1.0);
    PathEnsembleConfig cfg;
    cfg.beads = 32;
    cfg.sweeps = 2000;
    cfg.burn_in = 500;
    cfg.block_size = 250;
    cfg.seed = s.options().seed;
    auto grid = default_centroid_grid(sym, ts, 9);
    auto body = [&](unsigned threads, std::uint64_t seed) {
      auto c = cfg;
      c.threads = threads;
      c.seed = seed;
      auto t = build_centroid_table(sym, ts, grid, c);
      std::string text;
      for (std::size_t i = 0; i < t.grid.size(); ++i)
        text += format_number(t.grid[i]) + "," + format_number(t.forces[i]) + "," + format_number(t.force_err[i]) +
                "," + format_number(t.values[i]) + "\n";
      return text;
    };
    const std::string one = body(1, cfg.seed), three = body(3, cfg.seed), other = body(1, cfg.seed + 1);
    l.check(one == three && one != other,
            "seed reproducibility: table CSV bodies byte-identical for 1 and 3 threads, different for another seed");
  }
}

void criterion_10(Suite&, Ledger& l) {
  const ThermoState ts(1.0, 1.0);
  auto morse = solve_bound_states(make_morse(12.5, 0.2), ts, 2);
  // E_n = w (n + 1/2) - [w (n + 1/2)]^2 / (4 De), w = a sqrt(2 De / m) = 1.
  const double e0 = 0.5 - 0.25 / 50.0, e1 = 1.5 - 2.25 / 50.0;
  l.check(std::abs(morse.energies[0] - e0) <= 1e-6 && std::abs(morse.energies[1] - e1) <= 1e-6,
          fmt::format("Morse E0 = {:.9f} (0.495), E1 = {:.9f} (1.455), tol 1e-6", morse.energies[0],
                      morse.energies[1]));
  auto quartic = solve_bound_states(parse_potential("paper-quartic"), ts, 1);
  const double d = std::abs(quartic.energies[0] - morse.energies[0]);
  l.check(d <= 0.002, fmt::format("quartic E0 = {:.6f} vs Morse E0 = {:.6f}: |d| = {:.4f} (tol 0.002)",
                                  quartic.energies[0], morse.energies[0], d));
}

struct Criterion {
  int id;
  const char* title;
  void (*run)(Suite&, Ledger&);
};

constexpr Criterion kCriteria[] = {
    {1, "harmonic exactness", criterion_1},
    {2, "asymmetric harmonic", criterion_2},
    {3, "harmonic effective-potential limits", criterion_3},
    {4, "decoupling of linear terms", criterion_4},
    {5, "scheme A/B agreement", criterion_5},
    {6, "static observables vs oracle", criterion_6},
    {7, "frequency enhancement", criterion_7},
    {8, "low-temperature dynamics", criterion_8},
    {9, "property suites", criterion_9},
    {10, "Morse oracle", criterion_10},
};

}  // namespace

std::string to_string(CriterionStatus status) {
  switch (status) {
    case CriterionStatus::pass:
      return "PASS";
    case CriterionStatus::fail:
      return "FAIL";
    case CriterionStatus::known_failure:
      return "FAIL (known)";
    case CriterionStatus::skipped:
      return "SKIP";
  }
  return "?";
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& report,
                                            std::vector<ComparisonRow>* rows) {
  Suite suite(opts);
  suite.rows = rows;
  std::vector<CriterionResult> out;
  for (const auto& c : kCriteria) {
    CriterionResult r;
    r.id = c.id;
    r.title = c.title;
    if (!opts.only.empty() && std::find(opts.only.begin(), opts.only.end(), c.id) == opts.only.end()) {
      r.status = CriterionStatus::skipped;
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      Ledger ledger;
      try {
        c.run(suite, ledger);
        r.status = ledger.status();
      } catch (const std::exception& e) {
        ledger.check(false, std::string("exception: ") + e.what());
        r.status = CriterionStatus::fail;
      }
      r.details = ledger.take();
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    if (report) report(r);
    out.push_back(std::move(r));
  }
  return out;
}

bool acceptance_ok(const std::vector<CriterionResult>& results, bool allow_known_failures) {
  for (const auto& r : results) {
    if (r.status == CriterionStatus::fail) return false;
    if (r.status == CriterionStatus::known_failure && !allow_known_failures) return false;
  }
  return true;
}

}  // namespace epac

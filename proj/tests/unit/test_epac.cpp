#include <doctest.h>

#include <cmath>
#include <complex>

#include "epac/epac.hpp"
#include "epac/errors.hpp"
#include "epac/oracle.hpp"
#include "epac/variational.hpp"

using namespace epac;

namespace {

Polynomial paper_quartic() {
  return Polynomial{{Rational(0), Rational(0), Rational(1, 2), Rational(1, 10), Rational(1, 100)}};
}

Polynomial asym_harmonic(const Rational& f) { return Polynomial{{Rational(0), f, Rational(1, 2)}}; }

PipelineOptions route(GeneratingSource source) {
  PipelineOptions o;
  o.route = source;
  return o;
}

PipelineOptions quick_sampled(int beads) {
  PipelineOptions o;
  o.route = GeneratingSource::sampled;
  o.ensemble.beads = beads;
  o.ensemble.sweeps = 6000;
  o.ensemble.burn_in = 1000;
  o.ensemble.block_size = 250;
  o.replicas = 16;
  return o;
}

}  // namespace

TEST_CASE("EPAC correlation of harmonic parameters is the exact correlation") {
  const auto times = uniform_times(0.0, 10.0, 0.5);
  for (double beta : {0.1, 1.0, 10.0}) {
    for (double omega : {0.5, 2.0}) {
      const ThermoState ts(beta, 1.0);
      EpacParameters p;
      p.omega = omega;
      auto epac = epac_autocorrelation(p, ts, times);
      CHECK(epac.kind == SeriesKind::epac);
      const Rational k = Rational(omega) * Rational(omega) / 2;
      SpectrumOptions tight;
      tight.tolerance = 1e-11;
      auto spectrum = solve_thermal_spectrum(make_polynomial({Rational(0), Rational(0), k}), ts, 1e-12, tight);
      auto exact = exact_autocorrelation(spectrum, beta, times);
      for (std::size_t i = 0; i < times.size(); ++i) CHECK(std::abs(epac.values[i] - exact.values[i]) <= 1e-8);
    }
  }
}

TEST_CASE("EPAC correlation structure") {
  const ThermoState ts(2.0, 1.5);
  EpacParameters p;
  p.omega = 0.8;
  p.q_min = -0.3;
  std::vector<double> times{-3.0, -1.0, 0.0, 1.0, 3.0};
  auto c = epac_autocorrelation(p, ts, times);
  const double amp = 1.0 / (2.0 * 1.5 * 0.8);
  // t = 0: thermal width plus Q_min^2, purely real.
  CHECK(c.values[2].real() == doctest::Approx(amp / std::tanh(0.8) + 0.09).epsilon(1e-14));
  CHECK(c.values[2].imag() == 0.0);
  CHECK(c.values[2].real() - 0.09 > 0.0);
  // C(-t) = C(t)^*.
  for (int i = 0; i < 2; ++i) {
    CHECK(c.values[i].real() == c.values[4 - i].real());
    CHECK(c.values[i].imag() == -c.values[4 - i].imag());
  }
  // Asymmetric harmonic: the constant is f^2 / (m^2 omega^4).
  const double f = 0.3;
  EpacParameters a;
  a.omega = 1.0;
  a.q_min = -f;
  auto ca = epac_autocorrelation(a, ThermoState(1.0, 1.0), std::vector<double>{0.0, std::numbers::pi / 2.0});
  CHECK(ca.values[1].real() == doctest::Approx(f * f).epsilon(1e-14));

  EpacParameters bad;
  CHECK_THROWS_AS(epac_autocorrelation(bad, ts, times), Error);
}

TEST_CASE("harmonic closed forms") {
  CHECK(harmonic_standard_effective_potential(1.0, 0.0, ThermoState(1.0, 1.0), 0.0) ==
        doctest::Approx(0.04132).epsilon(1e-4));
  CHECK(harmonic_standard_effective_potential(1.0, 0.0, ThermoState(5.0, 1.0), 0.0) ==
        doctest::Approx(0.49864).epsilon(1e-5));
  // Minimum at -f / (m omega^2) with value -f^2 / (2 m omega^2) + (1/beta) log(2 sinh(beta omega / 2)).
  const ThermoState ts(3.0, 2.0);
  const double omega = 0.7, f = 0.4;
  const double q_star = -f / (ts.mass * omega * omega);
  const double v_star = harmonic_standard_effective_potential(omega, f, ts, q_star);
  CHECK(v_star == doctest::Approx(-f * f / (2.0 * ts.mass * omega * omega) +
                                  std::log(2.0 * std::sinh(0.5 * ts.beta * omega)) / ts.beta)
                      .epsilon(1e-14));
  CHECK(harmonic_standard_effective_potential(omega, f, ts, q_star + 0.1) > v_star);

  // The harmonic centroid potential is the variational one (exact there).
  VariationalReference ref({0.0, f, 0.5 * ts.mass * omega * omega}, ts.beta, ts.mass);
  for (double q : {-1.0, 0.0, 2.0})
    CHECK(harmonic_centroid_potential(omega, f, ts, q) == doctest::Approx(ref.value(q)).epsilon(1e-12));
  // beta = 100: (1/beta) log(sinh(50) / 50), below the ground-state energy.
  CHECK(harmonic_centroid_potential(1.0, 0.0, ThermoState(100.0, 1.0), 0.0) ==
        doctest::Approx(0.45396).epsilon(1e-4));
}

TEST_CASE("schemes agree exactly on the analytic harmonic-plus-linear input") {
  const ThermoState ts(100.0, 1.0);
  auto a = run_scheme(Scheme::A, asym_harmonic(Rational(3, 10)), ts, route(GeneratingSource::analytic));
  auto b = run_scheme(Scheme::B, asym_harmonic(Rational(3, 10)), ts, route(GeneratingSource::analytic));
  for (const auto* r : {&a, &b}) {
    CHECK(r->params.q_min == doctest::Approx(-0.3).epsilon(1e-12));
    CHECK(r->params.omega == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(r->params.e0 - 0.455) <= 1e-10);
    CHECK(route_disagreement(r->params) <= 1e-6);
    CHECK(is_convex(r->curve.v, 1e-9));
  }
  CHECK(a.params.q_min == doctest::Approx(b.params.q_min).epsilon(1e-12));
  CHECK(a.params.omega == doctest::Approx(b.params.omega).epsilon(1e-12));
  for (double q : {-1.0, -0.3, 0.5})
    CHECK(a.curve.v.value(q) == doctest::Approx(b.curve.v.value(q)).epsilon(1e-10));

  // Harmonic limit of the enhancement check: lambda = 0, omega_bar = omega_s.
  auto fe = frequency_enhancement_check(b);
  CHECK(std::abs(fe.lambda) <= 1e-8);
  CHECK(fe.omega_bar == doctest::Approx(fe.omega_s).epsilon(1e-12));
  CHECK(fe.omega_predicted == doctest::Approx(fe.omega_bar).epsilon(1e-8));
  CHECK(fe.enhanced);
  CHECK_THROWS_AS(frequency_enhancement_check(a), Error);
}

TEST_CASE("oracle-route schemes on the quartic benchmark") {
  const double expected_q[] = {-0.337597, -0.150148};
  const double expected_w[] = {0.910691, 0.966281};
  double margin_prev = 0.0;
  int k = 0;
  for (double beta : {1.0, 10.0}) {
    const ThermoState ts(beta, 1.0);
    auto a = run_scheme(Scheme::A, paper_quartic(), ts, route(GeneratingSource::oracle));
    auto b = run_scheme(Scheme::B, paper_quartic(), ts, route(GeneratingSource::oracle));
    CHECK(b.shift == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(b.slope == doctest::Approx(-1.25).epsilon(1e-15));
    CHECK(b.x_min - b.shift == doctest::Approx(b.params.q_min).epsilon(1e-14));
    CHECK(a.params.q_min == doctest::Approx(expected_q[k]).epsilon(1e-5));
    CHECK(b.params.q_min == doctest::Approx(expected_q[k]).epsilon(1e-5));
    CHECK(a.params.omega == doctest::Approx(expected_w[k]).epsilon(1e-5));
    CHECK(b.params.omega == doctest::Approx(a.params.omega).epsilon(1e-7));
    CHECK(route_disagreement(a.params) <= 1e-6);
    CHECK(route_disagreement(b.params) <= 1e-6);
    // Both schemes describe the same curve.
    for (double q : {-0.8, -0.15, 0.5})
      CHECK(a.curve.v.value(q) == doctest::Approx(b.curve.v.value(q)).epsilon(1e-7));
    CHECK(b.provenance.route == GeneratingSource::oracle);

    auto fe = frequency_enhancement_check(b);
    CHECK(fe.enhanced);
    CHECK(fe.lambda > 0.0);
    CHECK(fe.margin > margin_prev);
    // The fourth-order expansion captures most of the enhancement.
    CHECK(std::abs(fe.omega_predicted - fe.omega_bar) <= 0.05 * fe.omega_bar);
    margin_prev = fe.margin;
    CHECK(curve_errors(b, std::vector<double>{0.0}, 8, 1).front() == 0.0);
    ++k;
  }
}

TEST_CASE("sampled schemes agree within their errors") {
  const ThermoState ts(10.0, 1.0);
  auto opts = quick_sampled(128);
  auto a = run_scheme(Scheme::A, paper_quartic(), ts, opts);
  auto b = run_scheme(Scheme::B, paper_quartic(), ts, opts);
  REQUIRE(a.table.has_value());
  REQUIRE(b.table.has_value());
  CHECK(b.family == FitFamily::even);
  CHECK(a.params.q_min_err > 0.0);
  CHECK(b.params.q_min_err > 0.0);
  CHECK(b.params.q_min_err <= 0.01);
  const double q_sigma = std::hypot(a.params.q_min_err, b.params.q_min_err);
  const double w_sigma = std::hypot(a.params.omega_err, b.params.omega_err);
  CHECK(std::abs(a.params.q_min - b.params.q_min) <= 3.0 * q_sigma);
  CHECK(std::abs(a.params.omega - b.params.omega) <= 3.0 * w_sigma);
  // 128 beads leave a bead bias of a few 1e-4 in Q_min.
  CHECK(std::abs(b.params.q_min - (-0.150148)) <= 0.01);
  CHECK(route_disagreement(b.params) <= 1e-6);
  CHECK(b.provenance.streams.find("replicas") != std::string::npos);

  std::vector<double> q{-0.5, 0.0};
  auto err = curve_errors(b, q, 8, 3);
  REQUIRE(err.size() == 2);
  CHECK(err[0] > 0.0);
  CHECK(err[1] > 0.0);
  // A single point at the end of the curve still gets a padded source
  // subset. The upper end is where the window was clipped at the sampled
  // grid: replicas may not reach it, and then the error is unknown (NaN),
  // never a false zero.
  auto lo = curve_errors(b, std::vector<double>{b.curve.v.lo()}, 8, 3);
  REQUIRE(lo.size() == 1);
  CHECK(lo[0] > 0.0);
  auto hi = curve_errors(b, std::vector<double>{b.curve.v.hi()}, 8, 3);
  REQUIRE(hi.size() == 1);
  CHECK((hi[0] > 0.0 || std::isnan(hi[0])));
}

TEST_CASE("scheme parsing") {
  CHECK(parse_scheme("A") == Scheme::A);
  CHECK(parse_scheme("b") == Scheme::B);
  CHECK(to_string(Scheme::B) == "B");
  CHECK_THROWS_AS(parse_scheme("C"), Error);
  CHECK_THROWS_AS(run_scheme(Scheme::B, Polynomial{{Rational(0), Rational(0), Rational(1), Rational(1)}},
                             ThermoState(1.0, 1.0), route(GeneratingSource::oracle)),
                  Error);
}

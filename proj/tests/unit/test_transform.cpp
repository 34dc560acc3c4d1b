#include <doctest.h>

#include <cmath>
#include <random>

#include "epac/errors.hpp"
#include "epac/oracle.hpp"
#include "epac/sampler.hpp"
#include "epac/stats.hpp"
#include "epac/transform.hpp"

using namespace epac;

namespace {

double harmonic_free(double beta, double omega) { return std::log(2.0 * std::sinh(0.5 * beta * omega)) / beta; }

GeneratingFunctionTable harmonic_table(double beta, double omega, double f, double lo = -3.0, double hi = 3.0) {
  const ThermoState ts(beta, 1.0);
  auto sources = linspace(lo, hi, 41);
  return tabulate(harmonic_response(omega, f, ts), sources, GeneratingSource::analytic, ts);
}

PotentialModel paper_quartic() {
  return make_polynomial({Rational(0), Rational(0), Rational(1, 2), Rational(1, 10), Rational(1, 100)});
}

PotentialModel symmetric_quartic() {
  return make_polynomial({Rational(125, 64), Rational(0), Rational(1, 8), Rational(0), Rational(1, 100)});
}

}  // namespace

TEST_CASE("quintic Hermite interpolation is exact for quintics") {
  auto p = [](double x) { return 1.0 - 2.0 * x + 0.5 * x * x * x - 0.1 * std::pow(x, 5); };
  auto dp = [](double x) { return -2.0 + 1.5 * x * x - 0.5 * std::pow(x, 4); };
  auto d2p = [](double x) { return 3.0 * x - 2.0 * x * x * x; };
  HermiteSamples s;
  for (double x : {-2.0, -0.7, 0.1, 1.5, 3.0}) {
    s.x.push_back(x);
    s.f.push_back(p(x));
    s.df.push_back(dp(x));
    s.d2f.push_back(d2p(x));
  }
  s.validate();
  for (double x : {-1.9, -0.3, 0.0, 1.0, 2.99}) {
    CHECK(s.value(x) == doctest::Approx(p(x)).epsilon(1e-12));
    CHECK(s.slope(x) == doctest::Approx(dp(x)).epsilon(1e-11));
    CHECK(s.curvature(x) == doctest::Approx(d2p(x)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(s.value(3.5), Error);
  s.x[2] = s.x[1];
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("harmonic generating function") {
  const ThermoState ts(1.0, 1.0);
  auto r = harmonic_response(1.0, 0.0, ts)(1.0);
  CHECK(r.value == doctest::Approx(0.45868).epsilon(1e-5));
  CHECK(r.slope == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.curvature == doctest::Approx(1.0).epsilon(1e-15));
  // The closed form agrees with the oracle.
  auto oracle = tilted_response(make_polynomial({Rational(0), Rational(0), Rational(1, 2)}), ts, 1.0);
  CHECK(oracle.value == doctest::Approx(r.value).epsilon(1e-9));
}

TEST_CASE("sampled generating function of an exact harmonic table") {
  // The harmonic V^c is exact, so the centroid quadrature must reproduce w.
  const ThermoState ts(1.0, 1.0);
  const auto harmonic = make_polynomial({Rational(0), Rational(0), Rational(1, 2)});
  PathEnsembleConfig cfg;
  cfg.beads = 16;
  cfg.sweeps = 2000;
  cfg.burn_in = 500;
  cfg.block_size = 100;
  auto grid = default_centroid_grid(harmonic, ts, 11);
  auto table = build_centroid_table(harmonic, ts, grid, cfg);
  std::vector<double> sources{-1.0, 0.0, 1.0};
  auto g = generating_function(table, sources);
  CHECK(g.source == GeneratingSource::sampled);
  // Discrete-bead constant: log Z is pinned by the oracle, so w is exact.
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const double j = sources[i];
    CHECK(g.w.f[i] == doctest::Approx(0.5 * j * j - harmonic_free(1.0, 1.0)).epsilon(1e-8));
    CHECK(g.w.df[i] == doctest::Approx(j).epsilon(1e-8));
    CHECK(g.w.d2f[i] == doctest::Approx(1.0).epsilon(1e-7));
  }

  // Constant shift of V^c shifts w by -C exactly.
  auto shifted = table;
  shifted.fit[0] += 0.7;
  auto gs = generating_function(shifted, sources);
  for (std::size_t i = 0; i < sources.size(); ++i) CHECK(gs.w.f[i] - g.w.f[i] == doctest::Approx(-0.7).epsilon(1e-12));
}

TEST_CASE("Legendre transform of the harmonic generating function") {
  for (double beta : {0.5, 1.0, 5.0}) {
    auto g = harmonic_table(beta, 1.0, 0.0);
    auto q = linspace(-2.5, 2.5, 21);
    auto c = legendre_transform(g, q);
    for (std::size_t i = 0; i < q.size(); ++i) {
      CHECK(c.v.f[i] == doctest::Approx(0.5 * q[i] * q[i] + harmonic_free(beta, 1.0)).epsilon(1e-12));
      CHECK(c.v.df[i] == doctest::Approx(q[i]).epsilon(1e-12));
      CHECK(c.v.d2f[i] == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(is_convex(c.v, 1e-9));
    CHECK(fenchel_violation(g, c) <= 1e-9);
  }
  // V at the origin: (1/beta) log(2 sinh(beta / 2)).
  auto c1 = legendre_transform(harmonic_table(1.0, 1.0, 0.0), std::vector<double>{-1.0, 0.0, 1.0});
  CHECK(c1.v.f[1] == doctest::Approx(0.04132).epsilon(1e-4));
  auto c5 = legendre_transform(harmonic_table(5.0, 1.0, 0.0), std::vector<double>{-1.0, 0.0, 1.0});
  CHECK(c5.v.f[1] == doctest::Approx(0.49864).epsilon(1e-5));

  auto g = harmonic_table(1.0, 1.0, 0.0);
  try {
    legendre_point(g.w, 3.5);
    FAIL("expected QOutOfRange");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::QOutOfRange);
  }
}

TEST_CASE("linear terms decouple at the transform level") {
  // For V = U + f q, w_V(J) = w_U(J - f) and V_beta(Q) = U_beta(Q) + f Q.
  const ThermoState ts(3.0, 1.0);
  const auto u = paper_quartic();
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> pick(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double f = pick(gen), j = pick(gen);
    const Rational fr(f);
    auto wu = tilted_response(u, ts, j - f);
    auto wv = tilted_response(make_tilted(u, fr, Rational(0)), ts, j);
    CHECK(std::abs(wu.value - wv.value) <= 1e-9);
  }

  const double f = 0.4;
  auto sources = linspace(-2.0, 2.0, 41);
  std::vector<double> shifted;
  for (double j : sources) shifted.push_back(j + f);
  auto gu = tabulate(oracle_response(u, ts), sources, GeneratingSource::oracle, ts);
  auto gv = tabulate(oracle_response(make_tilted(u, Rational(2, 5), Rational(0)), ts), shifted,
                     GeneratingSource::oracle, ts);
  auto q = linspace(-1.0, 1.0, 15);
  auto cu = legendre_transform(gu, q);
  auto cv = legendre_transform(gv, q);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs(cv.v.f[i] - (cu.v.f[i] + f * q[i])) <= 1e-9);
}

TEST_CASE("double Legendre transform is an involution") {
  const ThermoState ts(2.0, 1.0);
  auto g = tabulate(oracle_response(paper_quartic(), ts), linspace(-2.0, 2.0, 61), GeneratingSource::oracle, ts);
  CHECK(is_convex(g.w, 1e-9));
  auto q = linspace(g.w.df.front(), g.w.df.back(), 81);
  auto c = legendre_transform(g, q);
  CHECK(is_convex(c.v, 1e-9));
  CHECK(fenchel_violation(g, c) <= 1e-9 * (1.0 + std::abs(g.w.f.front())));
  auto interior = linspace(-1.5, 1.5, 13);
  auto back = inverse_legendre_transform(c, interior, GeneratingSource::oracle);
  for (std::size_t i = 0; i < interior.size(); ++i) {
    CHECK(std::abs(back.w.f[i] - g.w.value(interior[i])) <= 1e-8);
    CHECK(std::abs(back.w.df[i] - g.w.slope(interior[i])) <= 1e-8);
  }
  // Stationarity duality: dV/dQ = J*(Q).
  for (double qq : linspace(q[5], q[75], 9)) {
    const double h = 1e-5;
    const double fd = (legendre_point(g.w, qq + h).value - legendre_point(g.w, qq - h).value) / (2.0 * h);
    CHECK(fd == doctest::Approx(legendre_point(g.w, qq).source).epsilon(1e-8));
  }
}

TEST_CASE("parameter extraction") {
  for (double beta : {0.1, 1.0, 100.0}) {
    auto p = extract_parameters(harmonic_table(beta, 1.0, 0.0));
    CHECK(std::abs(p.q_min) <= 1e-12);
    CHECK(p.omega == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(route_disagreement(p) <= 1e-6);
    CHECK(p.omega_local_fit == doctest::Approx(1.0).epsilon(1e-9));
    REQUIRE(p.omega_s.has_value());
    CHECK(*p.omega_s == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Asymmetric harmonic, f = 0.3.
  auto pa = extract_parameters(harmonic_table(100.0, 1.0, 0.3));
  CHECK(pa.q_min == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(pa.omega == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pa.e0 == doctest::Approx(0.455).epsilon(1e-12));
  CHECK(route_disagreement(pa) <= 1e-6);
  // Equivalent tilted extraction on the symmetric table.
  auto pt = extract_parameters(harmonic_table(100.0, 1.0, 0.0), 0.3);
  CHECK(pt.q_min == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(pt.e0 == doctest::Approx(0.455).epsilon(1e-12));

  // Harmonic ground state.
  CHECK(ground_state_energy(harmonic_table(100.0, 1.0, 0.0)) == doctest::Approx(0.5).epsilon(1e-4));

  // Quartic benchmark against the oracle position expectation.
  const ThermoState ts10(10.0, 1.0);
  auto g10 = tabulate(oracle_response(paper_quartic(), ts10), linspace(-3.0, 3.0, 41), GeneratingSource::oracle, ts10);
  auto p10 = extract_parameters(g10);
  CHECK(std::abs(p10.q_min - (-0.150148)) <= 0.01);
  CHECK(p10.omega == doctest::Approx(0.966281).epsilon(1e-5));
  CHECK(route_disagreement(p10) <= 1e-6);
  CHECK(std::abs(p10.omega_local_fit - p10.omega) <= 0.01);

  // Minimum on a node of a wide, coarse table: the curve route must not
  // inherit the third-derivative jump of the interpolant there.
  auto gs = tabulate(oracle_response(symmetric_quartic(), ts10), linspace(-14.0, 14.0, 41), GeneratingSource::oracle,
                     ts10);
  auto ps = extract_parameters(gs);
  CHECK(std::abs(ps.q_min) <= 1e-12);
  CHECK(route_disagreement(ps) <= 1e-6);

  const ThermoState ts100(100.0, 1.0);
  auto g100 =
      tabulate(oracle_response(paper_quartic(), ts100), linspace(-3.0, 3.0, 41), GeneratingSource::oracle, ts100);
  CHECK(std::abs(ground_state_energy(g100) - 0.4938) <= 0.01);

  // Failure modes.
  auto bad = harmonic_table(1.0, 1.0, 0.0);
  CHECK_THROWS_AS(extract_parameters(bad, 5.0), Error);
  for (auto& c : bad.w.d2f) c = -1.0;
  try {
    extract_parameters(bad);
    FAIL("expected NonConvexAtOrigin");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonConvexAtOrigin);
  }
}

TEST_CASE("source window planning") {
  const ThermoState ts(10.0, 1.0);
  auto response = oracle_response(paper_quartic(), ts);
  std::vector<double> keep{0.0};
  auto win = plan_source_window(response, 0.5, 41, 4.0, keep);
  REQUIRE(win.sources.size() == 41);
  CHECK(win.sources[20] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(win.sources.front() < 0.0);
  CHECK_FALSE(win.clipped);
  CHECK(win.q_lo <= win.target_lo);
  CHECK(win.q_hi >= win.target_hi);

  // A response that cannot be evaluated beyond |J| = 1 clips the window.
  auto limited = [&](double j) {
    if (std::abs(j) > 1.0) raise(ErrorKind::IntegrandNotLocalized, "outside");
    return response(j);
  };
  auto clipped = plan_source_window(limited, 0.0, 21, 40.0);
  CHECK(clipped.clipped);
  CHECK(clipped.sources.back() <= 1.0);
  CHECK(clipped.sources.back() >= 0.99);
}

TEST_CASE("sampled generating function agrees with the oracle") {
  const ThermoState ts(10.0, 1.0);
  const auto u = symmetric_quartic();
  PathEnsembleConfig cfg;
  cfg.beads = 128;
  cfg.sweeps = 6000;
  cfg.burn_in = 1000;
  cfg.block_size = 250;
  auto grid = default_centroid_grid(u, ts, 21, 1.25);
  auto table = build_centroid_table(u, ts, grid, cfg);
  auto sources = linspace(-1.25, 1.25, 11);
  auto g = generating_function(table, sources);
  CHECK(is_convex(g.w, 1e-9));

  auto replicas = replica_tables(table, fit_family(u), 16, 7);
  REQUIRE(replicas.size() == 16);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    std::vector<double> values, slopes;
    for (const auto& r : replicas) {
      auto w = sampled_response(r)(sources[i]);
      values.push_back(w.value);
      slopes.push_back(w.slope);
    }
    const double value_err = mean_std(values).std, slope_err = mean_std(slopes).std;
    auto exact = tilted_response(u, ts, sources[i]);
    // Bead discretisation (128 beads) adds a few 1e-4.
    CHECK(std::abs(g.w.f[i] - exact.value) <= 3.0 * value_err + 5e-4);
    CHECK(std::abs(g.w.df[i] - exact.slope) <= 3.0 * slope_err + 5e-4);
  }
  // Replicas are reproducible.
  auto again = replica_tables(table, fit_family(u), 2, 7);
  CHECK(again[1].fit == replicas[1].fit);
}

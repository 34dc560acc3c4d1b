#include <doctest.h>

#include <cmath>

#include "epac/centroid_integral.hpp"
#include "epac/errors.hpp"
#include "epac/oracle.hpp"
#include "epac/variational.hpp"

using namespace epac;

namespace {

const std::vector<double> kQuartic{0.0, 0.0, 0.5, 0.1, 0.01};

PotentialModel quartic_model() {
  return make_polynomial({Rational(0), Rational(0), Rational(1, 2), Rational(1, 10), Rational(1, 100)});
}

}  // namespace

TEST_CASE("variational reference is exact for the harmonic oscillator") {
  const double mass = 1.3, omega = 0.7;
  const double k = mass * omega * omega;
  for (double beta : {0.1, 2.0, 100.0}) {
    VariationalReference ref({0.0, 0.0, 0.5 * k}, beta, mass);
    const double h = 0.5 * beta * omega;
    const double offset = std::log(std::sinh(h) / h) / beta;
    for (double q : {-2.0, 0.0, 0.5}) {
      auto p = ref.at(q);
      CHECK(p.value == doctest::Approx(0.5 * k * q * q + offset).epsilon(1e-12));
      CHECK(p.slope == doctest::Approx(k * q).epsilon(1e-12));
      CHECK(p.omega2 == doctest::Approx(omega * omega).epsilon(1e-12));
    }
  }
  // beta = 2, omega = m = 1: (1/2) log sinh 1.
  VariationalReference unit({0.0, 0.0, 0.5}, 2.0, 1.0);
  CHECK(unit.value(0.0) == doctest::Approx(0.0807196808).epsilon(1e-9));
}

TEST_CASE("variational reference tends to the classical potential") {
  const double beta = 1e-3;
  VariationalReference ref(kQuartic, beta, 1.0);
  for (double q : {-3.0, 0.0, 1.5}) {
    const double v = 0.5 * q * q + 0.1 * q * q * q + 0.01 * q * q * q * q;
    const double v2 = 1.0 + 0.6 * q + 0.12 * q * q;
    // Wigner-Kirkwood: V + (beta / 24 m) V'' + O(beta^2).
    CHECK(std::abs(ref.value(q) - (v + beta / 24.0 * v2)) <= 1e-7);
  }
}

TEST_CASE("variational slope is the derivative of the value") {
  for (double beta : {0.1, 10.0}) {
    VariationalReference ref(kQuartic, beta, 1.0);
    for (double q : {-4.0, -1.0, 0.3, 2.0}) {
      const double h = 1e-5;
      const double fd = (ref.value(q + h) - ref.value(q - h)) / (2.0 * h);
      CHECK(ref.slope(q) == doctest::Approx(fd).epsilon(1e-7));
      const double fd2 = (ref.value(q + h) - 2.0 * ref.value(q) + ref.value(q - h)) / (h * h);
      CHECK(ref.curvature(q) == doctest::Approx(fd2).epsilon(1e-3));
    }
  }
}

TEST_CASE("variational free energy bounds the exact one from above") {
  // Jensen-Peierls: exp(-beta W) under-weights, so w_W(0) <= (1/beta) log Z.
  for (double beta : {0.1, 1.0, 10.0}) {
    const ThermoState ts(beta, 1.0);
    VariationalReference ref(kQuartic, beta, 1.0);
    auto w = centroid_generating_function([&](double q) { return ref.value(q); }, -20.0, 20.0, beta, 1.0, 0.0);
    const double exact = exact_log_partition(quartic_model(), ts) / beta;
    CHECK(w.value <= exact + 1e-12);
    // ... and the bound is tight for this weakly anharmonic well.
    CHECK(exact - w.value <= 2e-3);
  }
}

TEST_CASE("centroid integral overloads agree") {
  for (double beta : {0.1, 1.0, 100.0}) {
    for (double j : {-0.5, 0.0, 1.0}) {
      auto poly = centroid_generating_function(kQuartic, beta, 1.0, j);
      auto call = centroid_generating_function(
          [](double q) { return 0.5 * q * q + 0.1 * q * q * q + 0.01 * q * q * q * q; }, -30.0, 30.0, beta, 1.0, j);
      CHECK(call.value == doctest::Approx(poly.value).epsilon(1e-12));
      CHECK(call.slope == doctest::Approx(poly.slope).epsilon(1e-10));
      CHECK(call.curvature == doctest::Approx(poly.curvature).epsilon(1e-8));
    }
  }
  // Harmonic: w(J) - w(0) = J^2 / (2 m omega^2) and w'' = 1 / (m omega^2).
  auto w0 = centroid_generating_function(std::vector<double>{0.0, 0.0, 0.5}, 2.0, 1.0, 0.0);
  auto w1 = centroid_generating_function(std::vector<double>{0.0, 0.0, 0.5}, 2.0, 1.0, 0.8);
  CHECK(w1.value - w0.value == doctest::Approx(0.32).epsilon(1e-12));
  CHECK(w1.curvature == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("centroid integral refuses unlocalized integrands") {
  CHECK_THROWS_AS(centroid_generating_function(std::vector<double>{0.0, 0.0, 0.0, 1.0}, 1.0, 1.0, 0.0), Error);
  // Minimum outside the search bracket.
  try {
    centroid_generating_function([](double q) { return 0.5 * (q - 5.0) * (q - 5.0); }, -1.0, 1.0, 1.0, 1.0, 0.0);
    FAIL("expected IntegrandNotLocalized");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::IntegrandNotLocalized);
  }
}

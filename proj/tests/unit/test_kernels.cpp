#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "epac/kernels.hpp"

using namespace epac::kernels;

namespace {

std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

}  // namespace

TEST_CASE("scalar potential kernel matches direct evaluation") {
  std::mt19937_64 gen(3);
  auto coeffs = std::vector<double>{0.3, -1.25, 0.125, 0.0, 0.01};
  auto q = random_vector(gen, 37, -4.0, 4.0);
  std::vector<double> slope(q.size());
  auto sums = scalar_table().potential(coeffs, q, slope);
  double sv = 0, sd = 0, sdd = 0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    double x = q[k];
    double v = 0.3 - 1.25 * x + 0.125 * x * x + 0.01 * std::pow(x, 4);
    double d = -1.25 + 0.25 * x + 0.04 * std::pow(x, 3);
    double dd = 0.25 + 0.12 * x * x;
    CHECK(slope[k] == doctest::Approx(d).epsilon(1e-13));
    sv += v, sd += d, sdd += dd;
  }
  CHECK(sums.value == doctest::Approx(sv).epsilon(1e-13));
  CHECK(sums.slope == doctest::Approx(sd).epsilon(1e-13));
  CHECK(sums.curvature == doctest::Approx(sdd).epsilon(1e-13));
}

TEST_CASE("every compiled potential kernel agrees with the scalar reference") {
  std::mt19937_64 gen(5);
  for (std::size_t n : {1u, 3u, 4u, 17u, 64u, 1023u}) {
    auto coeffs = random_vector(gen, 7, -1.0, 1.0);
    auto q = random_vector(gen, n, -3.0, 3.0);
    std::vector<double> ref_slope(n), slope(n);
    auto ref = scalar_table().potential(coeffs, q, ref_slope);
    for (const auto* table : available_tables()) {
      CAPTURE(table->name);
      auto got = table->potential(coeffs, q, slope);
      double scale = 0;
      for (std::size_t k = 0; k < n; ++k) scale = std::max(scale, std::abs(ref_slope[k]));
      for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(slope[k] - ref_slope[k]) <= 1e-13 * (1 + scale));
      CHECK(got.value == doctest::Approx(ref.value).epsilon(1e-12));
      CHECK(got.slope == doctest::Approx(ref.slope).epsilon(1e-12));
      CHECK(got.curvature == doctest::Approx(ref.curvature).epsilon(1e-12));
    }
  }
}

TEST_CASE("phasor kernels match direct trigonometric sums") {
  std::mt19937_64 gen(9);
  for (std::size_t pairs : {1u, 5u, 8u, 203u}) {
    auto amp = random_vector(gen, pairs, 0.0, 1.0);
    auto freq = random_vector(gen, pairs, -6.0, 6.0);
    const double t0 = -3.0, dt = 0.05;
    const std::size_t nt = 301;
    double total = 0;
    for (double a : amp) total += a;
    for (const auto* table : available_tables()) {
      CAPTURE(table->name);
      std::vector<double> re(nt), im(nt);
      table->phasor_sum(amp, freq, t0, dt, re, im);
      for (std::size_t k = 0; k < nt; ++k) {
        std::complex<double> direct{0, 0};
        double t = t0 + dt * static_cast<double>(k);
        for (std::size_t j = 0; j < pairs; ++j) direct += amp[j] * std::polar(1.0, -freq[j] * t);
        CHECK(std::abs(re[k] - direct.real()) <= 1e-13 * total);
        CHECK(std::abs(im[k] - direct.imag()) <= 1e-13 * total);
      }
    }
  }
}

TEST_CASE("active table is one of the available tables") {
  bool found = false;
  for (const auto* t : available_tables()) found |= (t == &active());
  CHECK(found);
  MESSAGE("active kernels: " << active().name);
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "epac/errors.hpp"
#include "epac/model.hpp"

using namespace epac;

namespace {

Polynomial paper_quartic() {
  return Polynomial{{Rational(0), Rational(0), Rational(1, 2), Rational(1, 10), Rational(1, 100)}};
}

}  // namespace

TEST_CASE("parse_rational keeps decimal and fraction literals exact") {
  CHECK(parse_rational("1/2") == Rational(1, 2));
  CHECK(parse_rational(" -5/4 ") == Rational(-5, 4));
  CHECK(parse_rational("0.01") == Rational(1, 100));
  CHECK(parse_rational("12.5") == Rational(25, 2));
  CHECK(parse_rational("2e-3") == Rational(1, 500));
  CHECK_THROWS_AS(parse_rational("1/0"), Error);
  CHECK_THROWS_AS(parse_rational("abc"), Error);
}

TEST_CASE("evaluate on the benchmark potentials") {
  CHECK(evaluate(PotentialModel{paper_quartic()}, 1.0) == doctest::Approx(0.61).epsilon(1e-15));
  CHECK(evaluate(make_morse(12.5, 0.2), 0.0) == 0.0);

  auto dec = decompose_linear(paper_quartic());
  CHECK(evaluate(dec.shifted_potential(), 0.0) == doctest::Approx(125.0 / 64.0).epsilon(1e-15));
}

TEST_CASE("analytic derivatives agree with central differences") {
  std::vector<PotentialModel> models{PotentialModel{paper_quartic()}, make_morse(12.5, 0.2),
                                     make_tilted(PotentialModel{paper_quartic()}, Rational(-5, 4), Rational(3))};
  for (const auto& p : models) {
    for (double q : {-1.7, -0.3, 0.0, 0.4, 2.2}) {
      const double h = 1e-5;
      double fd1 = (evaluate(p, q + h) - evaluate(p, q - h)) / (2 * h);
      double fd2 = (derivative(p, q + h) - derivative(p, q - h)) / (2 * h);
      CHECK(derivative(p, q) == doctest::Approx(fd1).epsilon(1e-8));
      CHECK(second_derivative(p, q) == doctest::Approx(fd2).epsilon(1e-8));
    }
  }
}

TEST_CASE("tilted evaluation is base plus linear term") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> pick(-5.0, 5.0);
  auto base = PotentialModel{paper_quartic()};
  auto tilted = make_tilted(base, Rational(-5, 4), Rational(1, 8));
  for (int i = 0; i < 200; ++i) {
    double q = pick(gen);
    double expect = evaluate(base, q) - 1.25 * q + 0.125;
    CHECK(std::abs(evaluate(tilted, q) - expect) <= 1e-14 * std::max(1.0, std::abs(expect)));
  }
}

TEST_CASE("decompose_linear reproduces the shifted benchmark form") {
  auto d = decompose_linear(paper_quartic());
  CHECK(d.shift == Rational(5, 2));
  CHECK(d.offset == Rational(125, 64));
  CHECK(d.slope == Rational(-5, 4));
  CHECK(d.symmetric_part.coefficient(2) == Rational(1, 8));
  CHECK(d.symmetric_part.coefficient(4) == Rational(1, 100));
  CHECK(d.symmetric_part.is_even());
  CHECK(d.recompose().coeffs == paper_quartic().coeffs);
}

TEST_CASE("decompose_linear on an already depressed quartic") {
  Polynomial p{{Rational(0), Rational(3, 7), Rational(1), Rational(0), Rational(1, 5)}};
  auto d = decompose_linear(p);
  CHECK(d.shift == 0);
  CHECK(d.slope == Rational(3, 7));
  CHECK(d.offset == 0);
  CHECK(d.symmetric_part.coefficient(2) == Rational(1));
  CHECK(d.symmetric_part.coefficient(4) == Rational(1, 5));
}

TEST_CASE("decompose_linear matches a symbolic expansion") {
  // (x-1)^2 + 0.4 (x-1)^3 + 0.1 (x-1)^4 expanded with a CAS.
  Polynomial p{{Rational(0), Rational(0), Rational(1), parse_rational("0.4"), parse_rational("0.1")}};
  auto d = decompose_linear(p);
  CHECK(d.shift == 1);
  CHECK(d.offset == Rational(7, 10));
  CHECK(d.slope == Rational(-6, 5));
  CHECK(d.symmetric_part.coefficient(2) == Rational(2, 5));
  CHECK(d.symmetric_part.coefficient(4) == Rational(1, 10));
  CHECK(d.recompose().coeffs == p.coeffs);
}

TEST_CASE("decompose_linear recomposes random quartics exactly") {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> num(-40, 40), den(1, 30);
  for (int trial = 0; trial < 50; ++trial) {
    Polynomial p{{Rational(num(gen), den(gen)), Rational(num(gen), den(gen)), Rational(num(gen), den(gen)),
                  Rational(num(gen), den(gen)), Rational(1 + std::abs(num(gen)), den(gen))}};
    auto d = decompose_linear(p);
    CHECK(d.symmetric_part.coefficient(3) == 0);
    CHECK(d.symmetric_part.coefficient(1) == 0);
    CHECK(d.recompose().coeffs == p.coeffs);
  }
}

TEST_CASE("decompose_linear rejects other degrees") {
  Polynomial cubic{{Rational(0), Rational(1), Rational(1), Rational(1)}};
  CHECK_THROWS_AS(decompose_linear(cubic), Error);
  try {
    decompose_linear(cubic);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonQuartic);
  }
}

TEST_CASE("morse_taylor4 coefficients") {
  auto t = morse_taylor4(12.5, 0.2);
  CHECK(to_double(t.coefficient(2)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(to_double(t.coefficient(3)) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(to_double(t.coefficient(4)) == doctest::Approx(7.0 / 600.0).epsilon(1e-15));

  auto flat = morse_taylor4(12.5, 0.0);
  CHECK(flat.degree() == 0);
  CHECK(flat.coefficient(2) == 0);
}

TEST_CASE("morse_taylor4 quartic matches a fourth finite difference") {
  auto morse = make_morse(12.5, 0.2);
  const double h = 0.05;
  double d4 = (evaluate(morse, 2 * h) - 4 * evaluate(morse, h) + 6 * evaluate(morse, 0) - 4 * evaluate(morse, -h) +
               evaluate(morse, -2 * h)) /
              std::pow(h, 4);
  double quartic = to_double(morse_taylor4(12.5, 0.2).coefficient(4));
  CHECK(d4 / 24.0 == doctest::Approx(quartic).epsilon(1e-6));
}

TEST_CASE("morse_taylor4 error is fifth order") {
  const double depth = 12.5, a = 0.2;
  auto morse = make_morse(depth, a);
  auto taylor = PotentialModel{morse_taylor4(depth, a)};
  for (int i = -20; i <= 20; ++i) {
    double q = 0.1 / a * i / 20.0;
    double bound = 2.0 * std::abs(depth * std::pow(a * q, 5));
    CHECK(std::abs(evaluate(taylor, q) - evaluate(morse, q)) <= bound + 1e-15);
  }
}

TEST_CASE("confinement classification") {
  CHECK(is_confining(PotentialModel{paper_quartic()}));
  CHECK_FALSE(is_confining(make_morse(12.5, 0.2)));
  CHECK_FALSE(is_confining(make_polynomial({Rational(0), Rational(0), Rational(1), Rational(1)})));
  CHECK_FALSE(is_confining(make_polynomial({Rational(0), Rational(0), Rational(1), Rational(0), Rational(-1)})));
  CHECK(is_confining(make_tilted(PotentialModel{paper_quartic()}, Rational(3), Rational(0))));
  CHECK(morse_bound_state_count(Morse{12.5, 0.2}, 1.0) == 24);
}

TEST_CASE("polynomial minimum") {
  CHECK(polynomial_minimum(paper_quartic()) == doctest::Approx(0.0).epsilon(1e-12));
  auto d = decompose_linear(paper_quartic());
  auto shifted = as_polynomial(d.shifted_potential());
  REQUIRE(shifted);
  CHECK(polynomial_minimum(*shifted) == doctest::Approx(2.5).epsilon(1e-10));
}

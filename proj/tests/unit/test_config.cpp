#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "epac/config.hpp"
#include "epac/errors.hpp"

using namespace epac;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("potential specs") {
  CHECK(evaluate(parse_potential("poly: [0, 1/2, 1/10, 1/100]"), 1.0) == doctest::Approx(0.61).epsilon(1e-15));
  CHECK(evaluate(parse_potential("paper-quartic"), 1.0) == doctest::Approx(0.61).epsilon(1e-15));
  CHECK(evaluate(parse_potential("morse: {12.5, 0.2}"), 0.0) == 0.0);
  CHECK(evaluate(parse_potential("morse-hcl"), 0.3) == doctest::Approx(evaluate(make_morse(12.5, 0.2), 0.3)));
  // The symmetric benchmark written as a tilted polynomial.
  auto sym = parse_potential("tilt: {poly: [0, 1/8, 0, 1/100], 0, 125/64}");
  CHECK(evaluate(sym, 0.0) == doctest::Approx(125.0 / 64.0).epsilon(1e-15));
  CHECK(evaluate(sym, 1.3) == doctest::Approx(evaluate(parse_potential("paper-symmetric"), 1.3)).epsilon(1e-15));
  auto asym = parse_potential("asym-harmonic(0.3)");
  CHECK(evaluate(asym, 2.0) == doctest::Approx(2.6).epsilon(1e-15));
  CHECK(derivative(parse_potential("harmonic"), 0.7) == doctest::Approx(0.7).epsilon(1e-15));
  // The paper's Eq. (30) decomposes into the symmetric benchmark.
  auto poly = as_polynomial(parse_potential("tilt: {poly: [-5/4, 1/8, 0, 1/100], 0, 125/64}"));
  REQUIRE(poly.has_value());
  CHECK(poly->coefficient(1) == Rational(-5, 4));

  for (const char* bad : {"poly: [1, 2", "poly: []", "morse: {-1, 0.2}", "tilt: {harmonic, 1}", "quartic",
                          "poly: [1, x]", "harmonic extra"})
    CHECK(kind_of([&] { parse_potential(bad); }) == ErrorKind::ConfigError);
}

TEST_CASE("config files") {
  auto c = parse_config(
      "# benchmark\n"
      "system = paper-quartic\n"
      "betas = 1, 10   # two temperatures\n"
      "scheme = A\n"
      "route = oracle\n"
      "sweeps = 4000\n"
      "burn_in = 1000\n"
      "block_size = 500\n"
      "seed = 7\n"
      "pin_zero = true\n");
  CHECK(c.betas == std::vector<double>{1.0, 10.0});
  CHECK(c.scheme == Scheme::A);
  CHECK(c.route == GeneratingSource::oracle);
  CHECK(c.seed == 7);
  CHECK(c.pin_zero);
  auto o = c.pipeline(10.0);
  CHECK(o.ensemble.beads == default_beads(10.0));
  CHECK(o.ensemble.sweeps == 4000);
  CHECK(o.config_hash == c.hash());

  // Canonical text round-trips and fixes the hash.
  auto again = parse_config(c.canonical());
  CHECK(again.canonical() == c.canonical());
  CHECK(again.hash() == c.hash());
  CHECK(c.hash().size() == 16);
  auto other = c;
  other.seed = 8;
  CHECK(other.hash() != c.hash());
  auto threads = c;
  threads.threads = 3;
  CHECK(threads.hash() == c.hash());

  for (const char* bad : {"betas = 1, -2\n", "colour = blue\n", "sweeps = 1000\n", "scheme = C\n", "beads = 3\n",
                          "route = guessed\n", "system = poly: [1, 2\n", "mass\n", "seed = many\n"})
    CHECK(kind_of([&] { parse_config(bad); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { load_config("/nonexistent/epac.conf"); }) == ErrorKind::ConfigError);
}

TEST_CASE("CSV output") {
  const auto dir = std::filesystem::temp_directory_path() / "epac_config_test";
  std::filesystem::remove_all(dir);
  RunConfig cfg;
  CsvTable t{{"q", "v"}, {}};
  t.add_row({format_number(0.1), format_number(1.0 / 3.0)});
  CHECK_THROWS_AS(t.add_row({"1"}), Error);
  write_csv(dir / "sub" / "curve.csv", cfg, t, {{"beta", "10"}});
  std::ifstream in(dir / "sub" / "curve.csv");
  std::stringstream text;
  text << in.rdbuf();
  const std::string body = text.str();
  CHECK(body.find("# config_hash: " + cfg.hash()) == 0);
  CHECK(body.find("# units: hbar=kB=1") != std::string::npos);
  CHECK(body.find("# beta: 10") != std::string::npos);
  CHECK(body.find("q,v\n0.1,0.3333333333333333\n") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "sub" / "curve.csv.tmp"));
  // Round-trip precision.
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
  std::filesystem::remove_all(dir);
}

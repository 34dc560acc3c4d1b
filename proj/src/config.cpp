#include "epac/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <openssl/evp.h>

#include "epac/errors.hpp"

namespace epac {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void config_error(const std::string& what) { raise(ErrorKind::ConfigError, what); }

/// Recursive-descent reader for potential specs.
class SpecParser {
 public:
  explicit SpecParser(std::string_view text) : text_(text) {}

  PotentialModel parse() {
    PotentialModel p = spec();
    skip();
    if (pos_ != text_.size()) fail("trailing characters");
    return p;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    config_error("potential spec '" + std::string(text_) + "': " + what + " at offset " + std::to_string(pos_));
  }
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  std::string word() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '-' ||
                                   text_[pos_] == '_'))
      ++pos_;
    if (start == pos_) fail("expected a name");
    return std::string(text_.substr(start, pos_ - start));
  }
  Rational number() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::string_view("+-0123456789./eE ").find(text_[pos_]) != std::string_view::npos)
      ++pos_;
    const std::string token = trim(text_.substr(start, pos_ - start));
    if (token.empty()) fail("expected a number");
    try {
      return parse_rational(token);
    } catch (const Error&) {
      fail("bad number '" + token + "'");
    }
  }
  PotentialModel spec() {
    const std::string name = word();
    if (accept(':')) {
      if (name == "poly") {
        std::vector<Rational> c{Rational(0)};
        expect('[');
        do c.push_back(number());
        while (accept(','));
        expect(']');
        return make_polynomial(std::move(c));
      }
      if (name == "morse") {
        expect('{');
        const Rational depth = number();
        expect(',');
        const Rational range = number();
        expect('}');
        if (!(depth > 0)) fail("Morse depth must be positive");
        return make_morse(to_double(depth), to_double(range));
      }
      if (name == "tilt") {
        expect('{');
        PotentialModel base = spec();
        expect(',');
        const Rational f = number();
        expect(',');
        const Rational c = number();
        expect('}');
        return make_tilted(std::move(base), f, c);
      }
      fail("unknown potential kind '" + name + "'");
    }
    if (name == "harmonic") return make_polynomial({Rational(0), Rational(0), Rational(1, 2)});
    if (name == "asym-harmonic") {
      expect('(');
      const Rational f = number();
      expect(')');
      return make_polynomial({Rational(0), f, Rational(1, 2)});
    }
    if (name == "paper-quartic")
      return make_polynomial({Rational(0), Rational(0), Rational(1, 2), Rational(1, 10), Rational(1, 100)});
    if (name == "paper-symmetric")
      return make_polynomial({Rational(125, 64), Rational(0), Rational(1, 8), Rational(0), Rational(1, 100)});
    if (name == "morse-hcl") return make_morse(12.5, 0.2);
    fail("unknown system '" + name + "'");
  }
};

template <class T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    config_error("'" + key + "' needs an integer, got '" + value + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    return to_double(parse_rational(value));
  } catch (const Error&) {
    config_error("'" + key + "' needs a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "yes" || value == "1") return true;
  if (value == "false" || value == "no" || value == "0") return false;
  config_error("'" + key + "' needs true or false, got '" + value + "'");
}

GeneratingSource parse_route(const std::string& value) {
  if (value == "sampled") return GeneratingSource::sampled;
  if (value == "oracle") return GeneratingSource::oracle;
  if (value == "analytic") return GeneratingSource::analytic;
  config_error("unknown route '" + value + "' (sampled, oracle or analytic)");
}

void validate(const RunConfig& c) {
  if (c.betas.empty()) config_error("'betas' is empty");
  for (double b : c.betas)
    if (!(b > 0.0)) config_error("every beta must be positive");
  if (!(c.mass > 0.0)) config_error("'mass' must be positive");
  if (c.beads != 0 && (c.beads < 2 || c.beads % 2 != 0)) config_error("'beads' must be 0 or an even number >= 2");
  if (c.sweeps <= c.burn_in || c.block_size <= 0 || (c.sweeps - c.burn_in) % c.block_size != 0 ||
      (c.sweeps - c.burn_in) / c.block_size < 2)
    config_error("'sweeps - burn_in' must be a multiple of 'block_size' with at least two blocks");
  if (c.grid_points < 9) config_error("'grid_points' must be at least 9");
  if (c.source_points < 5 || c.source_points % 2 == 0) config_error("'source_points' must be odd and >= 5");
  if (!(c.source_sigmas > 0.0)) config_error("'source_sigmas' must be positive");
  if (c.curve_points < 3) config_error("'curve_points' must be at least 3");
  if (c.replicas < 0) config_error("'replicas' must be nonnegative");
  if (!(c.dt > 0.0) || !(c.t_max > 0.0)) config_error("'t_max' and 'dt' must be positive");
  if (c.fit_degree < 2 || c.fit_degree % 2 != 0) config_error("'fit_degree' must be even and >= 2");
  parse_potential(c.system);
}

}  // namespace

PotentialModel parse_potential(std::string_view spec) { return SpecParser(spec).parse(); }

PotentialModel RunConfig::potential() const { return parse_potential(system); }

std::string RunConfig::canonical() const {
  std::string betas_text;
  for (std::size_t i = 0; i < betas.size(); ++i) betas_text += (i ? ", " : "") + format_number(betas[i]);
  std::ostringstream os;
  os << "system = " << system << '\n'
     << "betas = " << betas_text << '\n'
     << "mass = " << format_number(mass) << '\n'
     << "scheme = " << to_string(scheme) << '\n'
     << "route = " << to_string(route) << '\n'
     << "beads = " << beads << '\n'
     << "sweeps = " << sweeps << '\n'
     << "burn_in = " << burn_in << '\n'
     << "block_size = " << block_size << '\n'
     << "seed = " << seed << '\n'
     << "constant_mode = " << to_string(constant_mode) << '\n'
     << "fit_degree = " << fit_degree << '\n'
     << "grid_points = " << grid_points << '\n'
     << "source_points = " << source_points << '\n'
     << "source_sigmas = " << format_number(source_sigmas) << '\n'
     << "curve_points = " << curve_points << '\n'
     << "replicas = " << replicas << '\n'
     << "t_max = " << format_number(t_max) << '\n'
     << "dt = " << format_number(dt) << '\n'
     << "pin_zero = " << (pin_zero ? "true" : "false") << '\n';
  // threads and output do not change results and stay out of the hash.
  return os.str();
}

std::string RunConfig::hash() const {
  const std::string text = canonical();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    raise(ErrorKind::InvalidArgument, "SHA-256 failed");
  std::string hex;
  for (unsigned int i = 0; i < 8 && i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

PipelineOptions RunConfig::pipeline(double beta) const {
  PipelineOptions o;
  o.route = route;
  o.ensemble.beads = beads > 0 ? beads : default_beads(beta);
  o.ensemble.sweeps = sweeps;
  o.ensemble.burn_in = burn_in;
  o.ensemble.block_size = block_size;
  o.ensemble.seed = seed;
  o.ensemble.threads = threads;
  o.table.constant_mode = constant_mode;
  o.table.fit_degree = fit_degree;
  o.grid_points = grid_points;
  o.source_points = source_points;
  o.source_sigmas = source_sigmas;
  o.curve_points = curve_points;
  o.replicas = replicas;
  o.config_hash = hash();
  return o;
}

RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_error("line " + std::to_string(number) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) config_error("line " + std::to_string(number) + ": empty value for '" + key + "'");
    try {
      if (key == "system" || key == "potential") {
        c.system = value;
      } else if (key == "betas" || key == "beta") {
        c.betas.clear();
        std::istringstream list(value);
        std::string item;
        while (std::getline(list, item, ',')) c.betas.push_back(parse_real(key, trim(item)));
      } else if (key == "mass") {
        c.mass = parse_real(key, value);
      } else if (key == "scheme") {
        c.scheme = parse_scheme(value);
      } else if (key == "route") {
        c.route = parse_route(value);
      } else if (key == "beads") {
        c.beads = parse_integer<int>(key, value);
      } else if (key == "sweeps") {
        c.sweeps = parse_integer<long>(key, value);
      } else if (key == "burn_in") {
        c.burn_in = parse_integer<long>(key, value);
      } else if (key == "block_size") {
        c.block_size = parse_integer<long>(key, value);
      } else if (key == "seed") {
        c.seed = parse_integer<std::uint64_t>(key, value);
      } else if (key == "threads") {
        c.threads = parse_integer<unsigned>(key, value);
      } else if (key == "constant_mode") {
        c.constant_mode = parse_constant_mode(value);
      } else if (key == "fit_degree") {
        c.fit_degree = parse_integer<int>(key, value);
      } else if (key == "grid_points") {
        c.grid_points = parse_integer<int>(key, value);
      } else if (key == "source_points") {
        c.source_points = parse_integer<int>(key, value);
      } else if (key == "source_sigmas") {
        c.source_sigmas = parse_real(key, value);
      } else if (key == "curve_points") {
        c.curve_points = parse_integer<int>(key, value);
      } else if (key == "replicas") {
        c.replicas = parse_integer<int>(key, value);
      } else if (key == "t_max") {
        c.t_max = parse_real(key, value);
      } else if (key == "dt") {
        c.dt = parse_real(key, value);
      } else if (key == "output") {
        c.output = value;
      } else if (key == "pin_zero") {
        c.pin_zero = parse_bool(key, value);
      } else {
        config_error("unknown key '" + key + "'");
      }
    } catch (const Error& e) {
      std::string what = e.what();
      if (e.kind() == ErrorKind::ConfigError) what.erase(0, what.find(": ") + 2);
      config_error("line " + std::to_string(number) + ": " + what);
    }
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size()) raise(ErrorKind::InvalidArgument, "CSV row width differs from the header");
  rows.push_back(std::move(row));
}

std::string format_number(double value) { return fmt::format("{}", value); }

void write_csv(const std::filesystem::path& path, const RunConfig& cfg, const CsvTable& table,
               const std::map<std::string, std::string>& metadata) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::InvalidArgument, "cannot write '" + tmp.string() + "'");
    out << "# config_hash: " << cfg.hash() << '\n';
    out << "# seed: " << cfg.seed << '\n';
    out << "# units: hbar=kB=1\n";
    out << "# system: " << cfg.system << '\n';
    for (const auto& [k, v] : metadata) out << "# " << k << ": " << v << '\n';
    out << "# written: " << fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", std::chrono::floor<std::chrono::seconds>(
                                                                   std::chrono::system_clock::now()))
        << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << '\n';
    }
    if (!out) raise(ErrorKind::InvalidArgument, "write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace epac

// Command-line front end: effective-potential curves, correlation functions,
// oracle spectra and the acceptance matrix, all driven by one config file.
//
// Exit codes: 0 success, 1 acceptance or runtime failure, 2 config error.
#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>

#include "epac/acceptance.hpp"
#include "epac/config.hpp"
#include "epac/epac.hpp"
#include "epac/errors.hpp"
#include "epac/oracle.hpp"

namespace fs = std::filesystem;
using namespace epac;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

/// Settings shared by every subcommand; anything given on the command line
/// overrides the config file.
struct CommonArgs {
  std::string config;
  std::optional<std::string> system, betas, route, scheme, out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<long> sweeps;
  std::optional<int> beads;
  bool pin_zero = false;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config, "config file (key = value lines)")->check(CLI::ExistingFile);
    app->add_option("--system", system, "named system or potential spec");
    app->add_option("--betas", betas, "comma-separated inverse temperatures");
    app->add_option("--route", route, "sampled | oracle | analytic");
    app->add_option("--scheme", scheme, "A | B");
    app->add_option("-o,--out", out, "output directory");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--threads", threads, "worker threads (0: all cores)");
    app->add_option("--sweeps", sweeps, "sweeps per centroid point");
    app->add_option("--beads", beads, "path beads (0: by temperature)");
    app->add_flag("--pin-zero", pin_zero, "shift curve minima to zero");
  }

  RunConfig resolve() const {
    std::string text;
    if (!config.empty()) {
      std::ifstream in(config);
      if (!in) raise(ErrorKind::ConfigError, "cannot read config file '" + config + "'");
      std::stringstream buffer;
      buffer << in.rdbuf();
      text = buffer.str() + "\n";
    }
    auto line = [&](const char* key, const std::string& value) { text += fmt::format("{} = {}\n", key, value); };
    if (system) line("system", *system);
    if (betas) line("betas", *betas);
    if (route) line("route", *route);
    if (scheme) line("scheme", *scheme);
    if (out) line("output", *out);
    if (seed) line("seed", std::to_string(*seed));
    if (threads) line("threads", std::to_string(*threads));
    if (sweeps) line("sweeps", std::to_string(*sweeps));
    if (beads) line("beads", std::to_string(*beads));
    if (pin_zero) line("pin_zero", "true");
    return parse_config(text);
  }
};

std::string beta_tag(double beta) { return fmt::format("beta{:g}", beta); }

Polynomial require_polynomial(const RunConfig& cfg, const char* command) {
  auto p = as_polynomial(cfg.potential());
  if (!p)
    raise(ErrorKind::ConfigError,
          fmt::format("{} needs a polynomial potential; '{}' is oracle-only (use the spectrum command)", command,
                      cfg.system));
  return *p;
}

ThermoState thermo(const RunConfig& cfg, double beta) { return ThermoState(beta, cfg.mass); }

std::map<std::string, std::string> run_metadata(const RunConfig& cfg, double beta) {
  return {{"beta", format_number(beta)},
          {"scheme", to_string(cfg.scheme)},
          {"route", to_string(cfg.route)},
          {"mass", format_number(cfg.mass)}};
}

void add_summary_row(CsvTable& summary, const RunConfig& cfg, double beta, const SchemeResult& r) {
  const auto& p = r.params;
  summary.add_row({cfg.system, format_number(beta), to_string(r.scheme), to_string(r.provenance.route),
                   format_number(p.q_min), format_number(p.q_min_err), format_number(p.omega),
                   format_number(p.omega_err), p.omega_s ? format_number(*p.omega_s) : "",
                   p.omega_s ? format_number(p.omega_s_err) : "", format_number(p.e0), format_number(p.e0_err),
                   format_number(p.sigma_q), format_number(route_disagreement(p)),
                   r.table ? std::to_string(r.table->beads) : "", r.table ? std::to_string(r.table->fit_degree) : ""});
}

CsvTable summary_table() {
  return CsvTable{{"system", "beta", "scheme", "route", "q_min", "q_min_err", "omega", "omega_err", "omega_s",
                   "omega_s_err", "e0", "e0_err", "sigma_q", "route_disagreement", "beads", "fit_degree"},
                  {}};
}

/// V^c on a dense grid: the fitted table (sampled route) or the closed form
/// (quadratic potentials on the analytic route). Empty otherwise.
std::optional<CsvTable> centroid_curve(const RunConfig& cfg, const Polynomial& poly, double beta,
                                       const SchemeResult& r) {
  std::vector<double> q;
  std::function<double(double)> vc;
  if (r.table) {
    const auto [lo, hi] = std::pair{r.table->grid.front(), r.table->grid.back()};
    q = linspace(lo, hi, 201);
    vc = [&t = *r.table](double x) { return t.fit_value(x); };
  } else if (r.provenance.route == GeneratingSource::analytic) {
    const double f = to_double(poly.coefficient(1));
    const double omega = std::sqrt(2.0 * to_double(poly.coefficient(2)) / cfg.mass);
    const double c = to_double(poly.coefficient(0));
    q = linspace(r.curve.v.lo(), r.curve.v.hi(), 201);
    const ThermoState ts = thermo(cfg, beta);
    vc = [=](double x) { return c + harmonic_centroid_potential(omega, f, ts, x); };
  } else {
    return std::nullopt;
  }
  std::vector<double> values;
  for (double x : q) values.push_back(vc(x));
  const double shift = cfg.pin_zero ? *std::min_element(values.begin(), values.end()) : 0.0;
  CsvTable t{{"q", "vc"}, {}};
  for (std::size_t i = 0; i < q.size(); ++i) t.add_row({format_number(q[i]), format_number(values[i] - shift)});
  return t;
}

CsvTable effective_curve(const RunConfig& cfg, const SchemeResult& r) {
  const auto& v = r.curve.v;
  std::vector<double> err(v.size(), 0.0);
  if (r.table) err = curve_errors(r, v.x, cfg.replicas, cfg.seed);
  const double shift = cfg.pin_zero ? v.value(r.params.q_min) : 0.0;
  CsvTable t{{"q", "v", "dv", "d2v", "v_err"}, {}};
  for (std::size_t i = 0; i < v.size(); ++i)
    t.add_row({format_number(v.x[i]), format_number(v.f[i] - shift), format_number(v.df[i]),
               format_number(v.d2f[i]), format_number(err[i])});
  return t;
}

/// Output files of one command, written together once every beta is done.
struct PendingFiles {
  std::vector<std::tuple<fs::path, CsvTable, std::map<std::string, std::string>>> files;

  void add(fs::path path, CsvTable table, std::map<std::string, std::string> meta = {}) {
    files.emplace_back(std::move(path), std::move(table), std::move(meta));
  }
  void write(const RunConfig& cfg) const {
    fs::create_directories(cfg.output);
    for (const auto& [path, table, meta] : files) write_csv(fs::path(cfg.output) / path, cfg, table, meta);
  }
};

int cmd_effpot(const RunConfig& cfg) {
  const Polynomial poly = require_polynomial(cfg, "effpot");
  PendingFiles out;
  CsvTable summary = summary_table();
  for (double beta : cfg.betas) {
    const auto r = run_scheme(cfg.scheme, poly, thermo(cfg, beta), cfg.pipeline(beta));
    auto meta = run_metadata(cfg, beta);
    meta["pin_zero"] = cfg.pin_zero ? "true" : "false";
    if (auto vc = centroid_curve(cfg, poly, beta, r)) {
      meta["curve"] = "centroid potential V^c";
      out.add(fmt::format("vc_{}.csv", beta_tag(beta)), std::move(*vc), meta);
    }
    meta["curve"] = "effective potential V_beta";
    out.add(fmt::format("vbeta_{}.csv", beta_tag(beta)), effective_curve(cfg, r), meta);
    add_summary_row(summary, cfg, beta, r);
    fmt::print("beta={:g}: Q_min = {:.6f} +- {:.1e}, omega = {:.6f} +- {:.1e}\n", beta, r.params.q_min,
               r.params.q_min_err, r.params.omega, r.params.omega_err);
  }
  out.add("summary.csv", std::move(summary));
  out.write(cfg);
  return 0;
}

CsvTable series_table(const CorrelationSeries& c) {
  CsvTable t{{"t", "re", "im", "kind", "beta"}, {}};
  const std::string kind = to_string(c.kind), beta = format_number(c.beta);
  for (std::size_t i = 0; i < c.times.size(); ++i)
    t.add_row({format_number(c.times[i]), format_number(c.values[i].real()), format_number(c.values[i].imag()), kind,
               beta});
  return t;
}

int cmd_correlate(const RunConfig& cfg) {
  const Polynomial poly = require_polynomial(cfg, "correlate");
  const auto times = uniform_times(0.0, cfg.t_max, cfg.dt);
  PendingFiles out;
  CsvTable summary = summary_table();
  for (double beta : cfg.betas) {
    const ThermoState ts = thermo(cfg, beta);
    const auto r = run_scheme(cfg.scheme, poly, ts, cfg.pipeline(beta));
    const auto epac = epac_autocorrelation(r.params, ts, times);
    const auto exact = exact_autocorrelation(solve_thermal_spectrum(cfg.potential(), ts), beta, times);
    const auto meta = run_metadata(cfg, beta);
    out.add(fmt::format("corr_epac_{}.csv", beta_tag(beta)), series_table(epac), meta);
    out.add(fmt::format("corr_exact_{}.csv", beta_tag(beta)), series_table(exact), meta);
    CsvTable overlay{{"t", "epac_re", "epac_im", "exact_re", "exact_im", "diff_re", "diff_im"}, {}};
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const auto d = epac.values[i] - exact.values[i];
      worst = std::max(worst, std::abs(d));
      overlay.add_row({format_number(times[i]), format_number(epac.values[i].real()),
                       format_number(epac.values[i].imag()), format_number(exact.values[i].real()),
                       format_number(exact.values[i].imag()), format_number(d.real()), format_number(d.imag())});
    }
    out.add(fmt::format("corr_overlay_{}.csv", beta_tag(beta)), std::move(overlay), meta);
    add_summary_row(summary, cfg, beta, r);
    fmt::print("beta={:g}: omega = {:.6f}, C(0) EPAC {:.6f} exact {:.6f}, max |dC| = {:.3e}\n", beta, r.params.omega,
               epac.values[0].real(), exact.values[0].real(), worst);
  }
  out.add("summary.csv", std::move(summary));
  out.write(cfg);
  return 0;
}

int cmd_spectrum(const RunConfig& cfg, int states) {
  const auto p = cfg.potential();
  const auto levels = solve_bound_states(p, thermo(cfg, cfg.betas.front()), states);
  CsvTable spectrum{{"n", "energy"}, {}};
  for (int n = 0; n < levels.size(); ++n) spectrum.add_row({std::to_string(n), format_number(levels.energies[n])});
  CsvTable thermal{{"beta", "q", "q2", "free_energy"}, {}};
  for (double beta : cfg.betas) {
    const ThermoState ts = thermo(cfg, beta);
    const auto s = solve_thermal_spectrum(p, ts);
    thermal.add_row({format_number(beta), format_number(thermal_expectation_q(s, beta)),
                     format_number(thermal_expectation_q2(s, beta)),
                     format_number(-exact_log_partition(p, ts) / beta)});
  }
  PendingFiles out;
  out.add("spectrum.csv", std::move(spectrum));
  out.add("thermal.csv", std::move(thermal));
  out.write(cfg);
  for (int n = 0; n < levels.size(); ++n) fmt::print("E{} = {:.10f}\n", n, levels.energies[n]);
  return 0;
}

int cmd_verify(const RunConfig& cfg, bool quick, bool allow_known) {
  AcceptanceOptions opts;
  opts.quick = quick;
  opts.seed = cfg.seed;
  opts.threads = cfg.threads;
  opts.sweeps = cfg.sweeps;
  opts.burn_in = cfg.burn_in;
  opts.block_size = cfg.block_size;
  opts.replicas = cfg.replicas;
  std::vector<ComparisonRow> rows;
  std::string log;
  auto results = run_acceptance(
      opts,
      [&](const CriterionResult& r) {
        std::string text = fmt::format("[{}] {} {} ({:.1f} s)\n", to_string(r.status), r.id, r.title, r.seconds);
        for (const auto& line : r.details) text += "        " + line + "\n";
        fmt::print("{}", text);
        std::fflush(stdout);
        log += text;
      },
      &rows);

  const fs::path out(cfg.output);
  fs::create_directories(out);
  CsvTable report{{"beta", "metric", "epac", "epac_err", "oracle", "deviation", "tolerance", "verdict"}, {}};
  for (const auto& row : rows)
    report.add_row({format_number(row.beta), row.metric, format_number(row.epac), format_number(row.epac_err),
                    format_number(row.oracle), format_number(row.deviation),
                    row.judged ? format_number(row.tolerance) : "", row.judged ? (row.pass ? "pass" : "fail") : "info"});
  write_csv(out / "report.csv", cfg, report, {{"quick", quick ? "true" : "false"}});
  CsvTable criteria{{"id", "title", "status", "seconds"}, {}};
  for (const auto& r : results)
    criteria.add_row({std::to_string(r.id), r.title, to_string(r.status), fmt::format("{:.1f}", r.seconds)});
  write_csv(out / "criteria.csv", cfg, criteria, {{"quick", quick ? "true" : "false"}});
  {
    std::ofstream f(out / "acceptance.txt");
    f << log;
  }

  const bool ok = acceptance_ok(results, allow_known);
  fmt::print("verify: {}\n", ok ? "all criteria passed" : "acceptance failure");
  return ok ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective-potential analytic continuation (EPAC) toolkit"};
  app.require_subcommand(1);

  CommonArgs effpot_args, correlate_args, spectrum_args, verify_args;
  auto* effpot = app.add_subcommand("effpot", "centroid and effective potential curves per beta");
  effpot_args.attach(effpot);
  auto* correlate = app.add_subcommand("correlate", "EPAC and exact position autocorrelation functions");
  correlate_args.attach(correlate);
  int states = 10;
  auto* spectrum = app.add_subcommand("spectrum", "oracle energy levels and thermal moments");
  spectrum_args.attach(spectrum);
  spectrum->add_option("--states", states, "number of levels")->check(CLI::PositiveNumber);
  bool quick = false, allow_known = false;
  auto* verify = app.add_subcommand("verify", "run the acceptance matrix and write the comparison report");
  verify_args.attach(verify);
  verify->add_flag("--quick", quick, "skip sampling at beta = 100");
  verify->add_flag("--allow-known-failures", allow_known, "exit 0 when only documented failures remain");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*effpot) return cmd_effpot(effpot_args.resolve());
    if (*correlate) return cmd_correlate(correlate_args.resolve());
    if (*spectrum) return cmd_spectrum(spectrum_args.resolve(), states);
    if (*verify) return cmd_verify(verify_args.resolve(), quick, allow_known);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return e.kind() == ErrorKind::ConfigError ? kExitConfig : kExitFailure;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}

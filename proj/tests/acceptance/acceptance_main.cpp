// Acceptance matrix: one line per criterion, followed by the individual
// comparisons. Exits nonzero if any criterion fails for an undocumented
// reason; documented failures are reported as "FAIL (known)".
#include <CLI11.hpp>
#include <fmt/format.h>

#include "epac/acceptance.hpp"

int main(int argc, char** argv) {
  epac::AcceptanceOptions opts;
  bool strict = false;
  CLI::App app{"EPAC acceptance matrix"};
  app.add_flag("--quick", opts.quick, "skip sampling at beta = 100");
  app.add_flag("--strict", strict, "treat known failures as failures");
  app.add_option("--seed", opts.seed, "master seed");
  app.add_option("--threads", opts.threads, "worker threads (0: all cores)");
  app.add_option("--sweeps", opts.sweeps, "sweeps per centroid point");
  app.add_option("--only", opts.only, "criterion ids to run");
  CLI11_PARSE(app, argc, argv);

  auto results = epac::run_acceptance(opts, [](const epac::CriterionResult& r) {
    fmt::print("[{}] {} {} ({:.1f} s)\n", epac::to_string(r.status), r.id, r.title, r.seconds);
    for (const auto& line : r.details) fmt::print("        {}\n", line);
    std::fflush(stdout);
  });
  const bool ok = epac::acceptance_ok(results, !strict);
  fmt::print("acceptance: {}\n", ok ? "OK" : "FAILED");
  return ok ? 0 : 1;
}

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace epac {

struct AcceptanceOptions {
  /// Skip sampling at beta = 100 (analytic and oracle checks still run).
  bool quick = false;
  std::uint64_t seed = 20240501;
  unsigned threads = 0;
  long sweeps = 20000;
  long burn_in = 2000;
  long block_size = 500;
  int replicas = 32;
  /// Criterion ids to run (empty: all ten).
  std::vector<int> only;
};

enum class CriterionStatus { pass, fail, known_failure, skipped };
std::string to_string(CriterionStatus status);

struct CriterionResult {
  int id = 0;
  std::string title;
  CriterionStatus status = CriterionStatus::pass;
  /// One line per individual comparison: measured value, reference and the
  /// tolerance that judged it.
  std::vector<std::string> details;
  double seconds = 0.0;
};

/// One EPAC-versus-oracle comparison on the quartic benchmark at one beta.
/// `judged` is false for rows reported for information only.
struct ComparisonRow {
  double beta = 0.0;
  std::string metric;
  double epac = 0.0;
  double epac_err = 0.0;
  double oracle = 0.0;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool judged = false;
  bool pass = true;
};

/// Runs the acceptance matrix, calling `report` as each criterion finishes.
/// A criterion is a known failure when every failing comparison in it is a
/// documented one (see README). If `rows` is given, the static-observable
/// criterion also fills it with the per-beta comparison report.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& report = {},
                                            std::vector<ComparisonRow>* rows = nullptr);

/// True unless some criterion failed for an undocumented reason.
bool acceptance_ok(const std::vector<CriterionResult>& results, bool allow_known_failures = true);

}  // namespace epac

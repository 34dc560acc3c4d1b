#include "epac/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <lapacke.h>

#include "epac/errors.hpp"
#include "epac/kernels.hpp"

namespace epac {

namespace {

// Decay exponent past the outer turning points; e^-36 ~ 2e-16.
constexpr double kWkbMargin = 36.0;
// Spacing ratio of the coarser grid used to confirm convergence.
constexpr double kCoarsening = 1.25;
// Spacing rule h = pi / (kResolution * p_max + 4): sinc-DVR errors for
// states up to the cutoff are ~1e-11 with this choice.
constexpr double kResolution = 1.3;

struct GridPlan {
  double lo = 0.0;
  double hi = 0.0;
  int points = 0;
};

const Morse* as_morse(const PotentialModel& p) { return std::get_if<Morse>(&p.form); }

double find_minimum(const PotentialModel& p) {
  if (auto poly = as_polynomial(p)) return polynomial_minimum(*poly);
  if (as_morse(p)) return 0.0;
  // Generic fallback: coarse scan then golden section.
  double best = 0.0, best_v = evaluate(p, 0.0);
  for (int i = -2000; i <= 2000; ++i) {
    double q = 0.025 * i;
    double v = evaluate(p, q);
    if (v < best_v) best_v = v, best = q;
  }
  double a = best - 0.025, b = best + 0.025;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    double c = b - g * (b - a), d = a + g * (b - a);
    if (evaluate(p, c) < evaluate(p, d))
      b = d;
    else
      a = c;
  }
  return 0.5 * (a + b);
}

/// Outer boundary on one side: turning point at `energy` plus enough
/// classically forbidden distance for the WKB amplitude to fall by e^-36.
std::optional<double> domain_edge(const PotentialModel& p, double mass, double q0, double energy, int dir) {
  double step = 0.25;
  double q = q0;
  double travelled = 0.0;
  while (evaluate(p, q + dir * step) < energy) {
    q += dir * step;
    travelled += step;
    step *= 1.5;
    if (travelled > 1e5) return std::nullopt;
  }
  double a = q, b = q + dir * step;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (a + b);
    (evaluate(p, mid) < energy ? a : b) = mid;
  }
  double x = b;
  double action = 0.0;
  const double dq = 0.01;
  while (action < kWkbMargin) {
    double v = evaluate(p, x + dir * dq);
    double gap = std::max(v - energy, 0.0);
    action += std::sqrt(2.0 * mass * gap) * dq;
    x += dir * dq;
    if (std::abs(x - q0) > 1e5) return std::nullopt;
  }
  return x;
}

double wkb_count(const PotentialModel& p, double mass, double q0, double energy) {
  // (1/pi) * integral of the classical momentum between turning points.
  auto edge = [&](int dir) {
    double step = 0.25, q = q0;
    while (evaluate(p, q + dir * step) < energy && std::abs(q - q0) < 1e5) {
      q += dir * step;
      step *= 1.5;
    }
    return q + dir * step;
  };
  double lo = edge(-1), hi = edge(+1);
  const int n = 4000;
  double h = (hi - lo) / n, sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double q = lo + (i + 0.5) * h;
    sum += std::sqrt(2.0 * mass * std::max(energy - evaluate(p, q), 0.0));
  }
  return sum * h / std::numbers::pi;
}

struct DenseResult {
  std::vector<double> energies;
  Eigen::MatrixXd vectors;  // points x k
  std::vector<double> x;
};

DenseResult solve_dense(const PotentialModel& p, double mass, const GridPlan& plan, int k, bool vectors) {
  const int n = plan.points;
  if (k > n) raise(ErrorKind::NotConverged, "grid has fewer points than requested states");
  const double h = (plan.hi - plan.lo) / (n - 1);
  const double kinetic = 1.0 / (2.0 * mass * h * h);
  const double pi2_3 = std::numbers::pi * std::numbers::pi / 3.0;
  DenseResult out;
  out.x.resize(n);
  std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);  // column-major, lower triangle used
  for (int i = 0; i < n; ++i) {
    out.x[i] = plan.lo + h * i;
    a[static_cast<std::size_t>(i) * n + i] = kinetic * pi2_3 + evaluate(p, out.x[i]);
    for (int j = i + 1; j < n; ++j) {
      int d = j - i;
      double t = kinetic * 2.0 / (static_cast<double>(d) * d);
      a[static_cast<std::size_t>(i) * n + j] = (d % 2 == 0) ? t : -t;
    }
  }
  std::vector<double> w(n);
  std::vector<lapack_int> ifail(static_cast<std::size_t>(n));
  lapack_int found = 0;
  out.vectors.resize(vectors ? n : 1, vectors ? k : 1);
  // Bisection plus inverse iteration for the lowest k pairs only.
  lapack_int info = LAPACKE_dsyevx(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'I', 'L', n, a.data(), n, 0.0, 0.0, 1, k,
                                   2.0 * LAPACKE_dlamch('S'), &found, w.data(), out.vectors.data(), vectors ? n : 1,
                                   ifail.data());
  if (info != 0 || found != k) raise(ErrorKind::NotConverged, "dsyevx failed (info " + std::to_string(info) + ")");
  out.energies.assign(w.begin(), w.begin() + k);
  return out;
}

GridPlan plan_for_energy(const PotentialModel& p, double mass, double q0, double vmin, double cutoff) {
  auto lo = domain_edge(p, mass, q0, cutoff, -1);
  auto hi = domain_edge(p, mass, q0, cutoff, +1);
  if (!lo || !hi) raise(ErrorKind::UnboundedSpectrumRequest, "no classical turning point at E = " + std::to_string(cutoff));
  const double pmax = std::sqrt(2.0 * mass * (cutoff - vmin));
  const double h = std::numbers::pi / (kResolution * pmax + 4.0);
  GridPlan plan{*lo, *hi, static_cast<int>(std::ceil((*hi - *lo) / h)) + 1};
  return plan;
}

struct Planned {
  GridPlan plan;
  DenseResult result;
};

/// Chooses a grid that holds the lowest k states and solves on it.
Planned plan_and_solve(const PotentialModel& p, double mass, int k, bool vectors) {
  const double q0 = find_minimum(p);
  const double vmin = evaluate(p, q0);
  const double curv = second_derivative(p, q0);
  const double omega = curv > 0.0 ? std::sqrt(curv / mass) : 1.0;
  const Morse* morse = as_morse(p);
  const double ceiling = morse ? vmin + morse->depth : std::numeric_limits<double>::infinity();

  double top = vmin + omega * (k + 0.5);
  for (int iter = 0; iter < 12; ++iter) {
    double cutoff = top + std::max(3.0 * omega, 0.05 * (top - vmin));
    if (cutoff >= ceiling) cutoff = 0.5 * (top + ceiling);
    if (top >= ceiling) raise(ErrorKind::UnboundedSpectrumRequest, "requested states reach the continuum");
    GridPlan plan = plan_for_energy(p, mass, q0, vmin, cutoff);
    DenseResult r = solve_dense(p, mass, plan, k, vectors);
    const double got = r.energies.back();
    if (got <= top + 1e-9 * std::max(1.0, std::abs(top)) || (morse && iter > 0 && got <= cutoff)) {
      return {plan, std::move(r)};
    }
    top = got;
  }
  raise(ErrorKind::NotConverged, "could not size the grid for the requested states");
}

GridPlan halved(const GridPlan& g) { return {g.lo, g.hi, 2 * g.points - 1}; }

/// Same domain with the spacing stretched by kCoarsening.
GridPlan coarsened(const GridPlan& g) {
  return {g.lo, g.hi, std::max(3, static_cast<int>(std::ceil((g.points - 1) / kCoarsening)) + 1)};
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

/// Solve on the planned grid and confirm it against a coarser twin; sinc-DVR
/// errors fall exponentially with the spacing, so agreement with the coarser
/// grid bounds the error of the finer one. Halve the spacing while they disagree.
std::pair<GridPlan, DenseResult> converged_solve(const PotentialModel& p, double mass, int k, bool vectors,
                                                 double tolerance, double& change) {
  Planned base = plan_and_solve(p, mass, k, vectors);
  GridPlan plan = base.plan;
  DenseResult current = std::move(base.result);
  std::vector<double> reference = solve_dense(p, mass, coarsened(plan), k, false).energies;
  for (int level = 0;; ++level) {
    change = max_abs_diff(reference, current.energies);
    if (change <= tolerance) return {plan, std::move(current)};
    if (level == 3) break;
    plan = halved(plan);
    reference = std::move(current.energies);
    current = solve_dense(p, mass, plan, k, vectors);
  }
  raise(ErrorKind::NotConverged, "eigenvalues still change by " + std::to_string(change) + " under grid refinement");
}

int thermal_state_guess(const PotentialModel& p, double mass, double beta, double truncation) {
  const double q0 = find_minimum(p);
  const double vmin = evaluate(p, q0);
  const double curv = second_derivative(p, q0);
  const double omega = curv > 0.0 ? std::sqrt(curv / mass) : 1.0;
  const double span = -std::log(truncation) / beta;
  const double target = vmin + 0.5 * omega + 1.05 * span;
  if (const Morse* m = as_morse(p); m && target >= vmin + m->depth)
    raise(ErrorKind::TruncationTooSevere, "thermal weight reaches the Morse continuum at this beta");
  return std::max(4, static_cast<int>(std::ceil(wkb_count(p, mass, q0, target))) + 4);
}

PotentialModel tilt(const PotentialModel& p, double source) {
  if (source == 0.0) return p;
  return make_tilted(p, Rational(-source), Rational(0));
}

}  // namespace

Spectrum solve_bound_states(const PotentialModel& p, const ThermoState& ts, int n_states, const SpectrumOptions& opts) {
  if (n_states < 1) raise(ErrorKind::InvalidArgument, "n_states must be at least 1");
  if (const Morse* m = as_morse(p)) {
    int bound = morse_bound_state_count(*m, ts.mass);
    if (n_states > bound)
      raise(ErrorKind::UnboundedSpectrumRequest,
            std::to_string(n_states) + " states requested but the Morse well binds " + std::to_string(bound));
  }
  double change = 0.0;
  auto [plan, r] = converged_solve(p, ts.mass, n_states, opts.matrix_elements, opts.tolerance, change);

  Spectrum s;
  s.energies = r.energies;
  s.grid = {plan.lo, plan.hi, plan.points, change, 0.0};
  if (opts.matrix_elements) {
    const Eigen::Map<const Eigen::VectorXd> x(r.x.data(), static_cast<Eigen::Index>(r.x.size()));
    const Eigen::MatrixXd& u = r.vectors;
    s.q_elements = u.transpose() * (x.asDiagonal() * u);
    s.q_elements = 0.5 * (s.q_elements + s.q_elements.transpose()).eval();
    s.q2_diagonal.resize(n_states);
    for (int n = 0; n < n_states; ++n) s.q2_diagonal[n] = (u.col(n).array().square() * x.array().square()).sum();
    s.grid.boundary_amplitude = std::max(std::abs(u(0, 0)), std::abs(u(u.rows() - 1, 0)));
  }
  for (int n = 1; n < n_states; ++n)
    if (!(s.energies[n] > s.energies[n - 1]))
      raise(ErrorKind::NotConverged, "eigenvalues not strictly increasing at n = " + std::to_string(n));
  return s;
}

Spectrum solve_thermal_spectrum(const PotentialModel& p, const ThermoState& ts, double truncation,
                                const SpectrumOptions& opts) {
  int n = thermal_state_guess(p, ts.mass, ts.beta, truncation);
  for (int attempt = 0; attempt < 6; ++attempt) {
    Spectrum s = solve_bound_states(p, ts, n, opts);
    if (std::exp(-ts.beta * (s.energies.back() - s.energies.front())) < truncation) return s;
    n = static_cast<int>(std::ceil(n * 1.4)) + 2;
  }
  raise(ErrorKind::TruncationTooSevere, "state count did not reach the truncation target");
}

std::vector<double> boltzmann_weights(const Spectrum& s, double beta, double truncation) {
  if (s.energies.empty()) raise(ErrorKind::InvalidArgument, "empty spectrum");
  const double e0 = s.energies.front();
  if (std::exp(-beta * (s.energies.back() - e0)) >= truncation)
    raise(ErrorKind::TruncationTooSevere, "exp(-beta (E_max - E_0)) = " +
                                              std::to_string(std::exp(-beta * (s.energies.back() - e0))) +
                                              "; more states are needed");
  std::vector<double> w(s.energies.size());
  double z = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) z += (w[n] = std::exp(-beta * (s.energies[n] - e0)));
  for (double& v : w) v /= z;
  return w;
}

double thermal_expectation_q(const Spectrum& s, double beta) {
  auto w = boltzmann_weights(s, beta);
  double acc = 0.0;
  for (int n = 0; n < s.size(); ++n) acc += w[n] * s.q_elements(n, n);
  return acc;
}

double thermal_expectation_q2(const Spectrum& s, double beta) {
  auto w = boltzmann_weights(s, beta);
  double acc = 0.0;
  for (int n = 0; n < s.size(); ++n) acc += w[n] * s.q2_diagonal[n];
  return acc;
}

std::string to_string(SeriesKind kind) { return kind == SeriesKind::exact ? "exact" : "epac"; }

std::vector<double> uniform_times(double t0, double t1, double dt) {
  std::vector<double> t;
  const auto n = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9)) + 1;
  t.reserve(n);
  for (std::size_t k = 0; k < n; ++k) t.push_back(t0 + static_cast<double>(k) * dt);
  return t;
}

CorrelationSeries exact_autocorrelation(const Spectrum& s, double beta, std::span<const double> times) {
  auto w = boltzmann_weights(s, beta);
  std::vector<double> amp, freq;
  double total = 0.0;
  for (int n = 0; n < s.size(); ++n)
    for (int m = 0; m < s.size(); ++m) total += w[n] * s.q_elements(m, n) * s.q_elements(m, n);
  const double floor = 1e-20 * total;
  for (int n = 0; n < s.size(); ++n) {
    for (int m = 0; m < s.size(); ++m) {
      double a = w[n] * s.q_elements(m, n) * s.q_elements(m, n);
      if (a <= floor) continue;
      amp.push_back(a);
      freq.push_back(s.energies[m] - s.energies[n]);
    }
  }
  CorrelationSeries out;
  out.beta = beta;
  out.kind = SeriesKind::exact;
  out.times.assign(times.begin(), times.end());
  out.values.assign(times.size(), {0.0, 0.0});
  if (times.empty()) return out;

  bool uniform = times.size() > 2;
  const double dt = times.size() > 1 ? times[1] - times[0] : 0.0;
  for (std::size_t k = 1; uniform && k < times.size(); ++k)
    uniform = std::abs((times[k] - times[k - 1]) - dt) <= 1e-12 * std::max(1.0, std::abs(times[k]));
  if (uniform) {
    std::vector<double> re(times.size()), im(times.size());
    kernels::active().phasor_sum(amp, freq, times[0], dt, re, im);
    for (std::size_t k = 0; k < times.size(); ++k) out.values[k] = {re[k], im[k]};
  } else {
    for (std::size_t k = 0; k < times.size(); ++k) {
      std::complex<double> acc{0.0, 0.0};
      for (std::size_t j = 0; j < amp.size(); ++j) acc += amp[j] * std::polar(1.0, -freq[j] * times[k]);
      out.values[k] = acc;
    }
  }
  return out;
}

double tilted_generating_function(const PotentialModel& p, const ThermoState& ts, double source, int n_states) {
  PotentialModel tilted = tilt(p, source);
  SpectrumOptions opts;
  opts.matrix_elements = false;
  Spectrum s = n_states > 0 ? solve_bound_states(tilted, ts, n_states, opts)
                            : solve_thermal_spectrum(tilted, ts, 1e-10, opts);
  const double e0 = s.energies.front();
  double z = 0.0;
  for (double e : s.energies) z += std::exp(-ts.beta * (e - e0));
  return -e0 + std::log(z) / ts.beta;
}

TiltedResponse tilted_response(const PotentialModel& p, const ThermoState& ts, double source) {
  Spectrum s = solve_thermal_spectrum(tilt(p, source), ts);
  auto w = boltzmann_weights(s, ts.beta);
  const double e0 = s.energies.front();
  double z = 0.0;
  for (double e : s.energies) z += std::exp(-ts.beta * (e - e0));
  TiltedResponse r;
  r.value = -e0 + std::log(z) / ts.beta;
  double mean = 0.0, mean_sq_diag = 0.0;
  for (int n = 0; n < s.size(); ++n) {
    mean += w[n] * s.q_elements(n, n);
    mean_sq_diag += w[n] * s.q_elements(n, n) * s.q_elements(n, n);
  }
  r.slope = mean;
  double off = 0.0;
  // Each unordered pair n < m contributes twice p_n (1 - e^{-beta gap}) / gap.
  for (int n = 0; n < s.size(); ++n) {
    for (int m = n + 1; m < s.size(); ++m) {
      const double gap = s.energies[m] - s.energies[n];
      const double q2 = s.q_elements(m, n) * s.q_elements(m, n);
      off += 2.0 * q2 * w[n] * (-std::expm1(-ts.beta * gap)) / gap;
    }
  }
  r.curvature = ts.beta * (mean_sq_diag - mean * mean) + off;
  return r;
}

double log_two_sinh(double x) { return x + std::log1p(-std::exp(-2.0 * x)); }

double exact_log_partition(const PotentialModel& p, const ThermoState& ts) {
  if (auto poly = as_polynomial(p); poly && poly->degree() == 2) {
    const auto c = poly->as_doubles();
    if (!(c[2] > 0.0)) raise(ErrorKind::NonConfiningPotential, "quadratic potential with non-positive curvature");
    const double v_min = c[0] - c[1] * c[1] / (4.0 * c[2]);
    const double omega = std::sqrt(2.0 * c[2] / ts.mass);
    return -ts.beta * v_min - log_two_sinh(0.5 * ts.beta * omega);
  }
  return ts.beta * tilted_generating_function(p, ts, 0.0);
}

}  // namespace epac

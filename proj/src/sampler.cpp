#include "epac/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <Eigen/Dense>
#include <fftw3.h>

#include "epac/centroid_integral.hpp"
#include "epac/errors.hpp"
#include "epac/kernels.hpp"
#include "epac/oracle.hpp"
#include "epac/parallel.hpp"
#include "epac/rng.hpp"
#include "epac/stats.hpp"

namespace epac {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Trajectory length in accelerated time: a quarter period of every mode.
constexpr double kTrajectoryLength = 0.5 * std::numbers::pi;
constexpr double kTargetAcceptance = 0.65;
constexpr double kMinStep = 1e-3;
constexpr double kMaxStep = 1.9;
constexpr long kTuneWindow = 25;

std::vector<double> confining_coeffs(const PotentialModel& p) {
  auto poly = as_polynomial(p);
  if (!poly || !is_confining(p))
    raise(ErrorKind::NonConfiningPotential, "path sampling needs a confining polynomial, got " + describe(p));
  return poly->as_doubles();
}

double horner(std::span<const double> c, double q) {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * q + c[k];
  return acc;
}

double horner_second(std::span<const double> c, double q) {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 2;) acc = acc * q + static_cast<double>(k * (k - 1)) * c[k];
  return acc;
}

/// Fourier-accelerated hybrid Monte Carlo over the normal modes of one path.
/// Mode masses M_j = kappa_j + tau k_ref make every mode's harmonic
/// frequency one, so a single leapfrog step size serves all of them.
class PathHmc {
 public:
  PathHmc(std::vector<double> coeffs, const ThermoState& ts, int beads, bool free_centroid, double centre,
          double k_ref)
      : coeffs_(std::move(coeffs)),
        beads_(beads),
        tau_(ts.beta / beads),
        free_centroid_(free_centroid),
        modes_(beads),
        kernels_(kernels::active()) {
    kappa_ = modes_.spring_constants(ts.mass, tau_);
    // Keep every mass positive even where V'' < 0: the lowest Matsubara
    // spring per unit tau is m (2 pi / beta)^2.
    const double matsubara = ts.mass * std::pow(2.0 * std::numbers::pi / ts.beta, 2);
    const double k = std::max(k_ref, free_centroid ? 1e-3 * matsubara : -0.5 * matsubara);
    mass_.resize(beads);
    for (int j = 0; j < beads; ++j) mass_[j] = kappa_[j] + tau_ * k;
    u_.assign(beads, 0.0);
    u_[0] = std::sqrt(static_cast<double>(beads)) * centre;
    q_.resize(beads);
    slope_.resize(beads);
    grad_.resize(beads);
    p_.resize(beads);
    refresh();
  }

  /// One trajectory of about a quarter period; returns whether it was accepted.
  bool trajectory(double dt, StreamRng& rng) {
    const int first = free_centroid_ ? 0 : 1;
    double kinetic = 0.0;
    for (int j = first; j < beads_; ++j) {
      p_[j] = std::sqrt(mass_[j]) * rng.normal();
      kinetic += 0.5 * p_[j] * p_[j] / mass_[j];
    }
    const double h0 = action_ + kinetic;
    saved_u_ = u_;
    saved_q_ = q_;
    saved_slope_ = slope_;
    saved_grad_ = grad_;
    const double saved_action = action_;
    const double saved_sums = sums_.slope;

    const int steps = std::max(1, static_cast<int>(std::lround(kTrajectoryLength / dt)));
    for (int s = 0; s < steps; ++s) {
      for (int j = first; j < beads_; ++j) p_[j] -= 0.5 * dt * grad_[j];
      for (int j = first; j < beads_; ++j) u_[j] += dt * p_[j] / mass_[j];
      refresh();
      for (int j = first; j < beads_; ++j) p_[j] -= 0.5 * dt * grad_[j];
    }
    kinetic = 0.0;
    for (int j = first; j < beads_; ++j) kinetic += 0.5 * p_[j] * p_[j] / mass_[j];
    const double h1 = action_ + kinetic;
    const double log_u = std::log(rng.uniform());
    if (std::isfinite(h1) && log_u < h0 - h1) return true;
    u_.swap(saved_u_);
    q_.swap(saved_q_);
    slope_.swap(saved_slope_);
    grad_.swap(saved_grad_);
    action_ = saved_action;
    sums_.slope = saved_sums;
    return false;
  }

  /// (1/P) sum_k V'(q_k) at the current path.
  double mean_slope() const { return sums_.slope / beads_; }
  std::span<const double> beads() const { return q_; }

 private:
  void refresh() {
    modes_.to_beads(u_, q_);
    sums_ = kernels_.potential(coeffs_, q_, slope_);
    modes_.to_modes(slope_, grad_);
    double spring = 0.0;
    for (int j = 0; j < beads_; ++j) {
      spring += 0.5 * kappa_[j] * u_[j] * u_[j];
      grad_[j] = kappa_[j] * u_[j] + tau_ * grad_[j];
    }
    if (!free_centroid_) grad_[0] = 0.0;
    action_ = spring + tau_ * sums_.value;
  }

  std::vector<double> coeffs_;
  int beads_;
  double tau_;
  bool free_centroid_;
  NormalModes modes_;
  const kernels::KernelTable& kernels_;
  std::vector<double> kappa_, mass_, u_, q_, slope_, grad_, p_;
  std::vector<double> saved_u_, saved_q_, saved_slope_, saved_grad_;
  kernels::PotentialSums sums_;
  double action_ = 0.0;
};

struct ChainResult {
  std::vector<double> samples;
  double acceptance = 0.0;
  double step = 0.0;
};

/// Burn-in with step tuning, then production; `observe` is called after
/// every production trajectory.
template <class Observe>
ChainResult run_chain(PathHmc& hmc, const PathEnsembleConfig& cfg, StreamRng& rng, Observe&& observe) {
  // Robbins-Monro on log(dt) with gain 1/sqrt(window); the production step
  // is the geometric mean over the second half of burn-in, which removes
  // most of the window-to-window noise of the adaptation.
  double log_dt = std::log(std::clamp(cfg.step_scale, kMinStep, kMaxStep));
  const long windows = cfg.burn_in / kTuneWindow;
  long accepted = 0, window = 0, averaged = 0;
  double log_sum = 0.0;
  for (long t = 0; t < cfg.burn_in; ++t) {
    accepted += hmc.trajectory(std::exp(log_dt) * (0.9 + 0.2 * rng.uniform()), rng);
    if ((t + 1) % kTuneWindow == 0) {
      ++window;
      const double rate = static_cast<double>(accepted) / kTuneWindow;
      const double gain = 2.0 / std::sqrt(static_cast<double>(window));
      log_dt = std::clamp(log_dt + gain * (rate - kTargetAcceptance), std::log(kMinStep), std::log(kMaxStep));
      accepted = 0;
      if (2 * window > windows) {
        log_sum += log_dt;
        ++averaged;
      }
    }
  }
  const double dt = averaged > 0 ? std::exp(log_sum / static_cast<double>(averaged)) : std::exp(log_dt);
  ChainResult out;
  out.step = dt;
  const long production = cfg.sweeps - cfg.burn_in;
  out.samples.reserve(static_cast<std::size_t>(production));
  accepted = 0;
  for (long t = 0; t < production; ++t) {
    accepted += hmc.trajectory(dt * (0.9 + 0.2 * rng.uniform()), rng);
    out.samples.push_back(observe(hmc));
  }
  out.acceptance = static_cast<double>(accepted) / static_cast<double>(production);
  if (out.acceptance < 0.2 || out.acceptance > 0.8)
    raise(ErrorKind::AcceptanceOutOfRange,
          "acceptance " + std::to_string(out.acceptance) + " outside [0.2, 0.8] at step " + std::to_string(dt));
  return out;
}

bool allowed_power(FitFamily family, int k) {
  switch (family) {
    case FitFamily::even:
      return k % 2 == 0;
    case FitFamily::even_plus_linear:
      return k % 2 == 0 || k == 1;
    case FitFamily::full:
      return true;
  }
  return true;
}

struct ForceFit {
  std::vector<double> coeffs;  // a_0 (= 0) .. a_degree
  double max_pull = 0.0;
};

constexpr int kMaxFitDegree = 12;
constexpr double kMaxPull = 3.0;

int fit_parameter_count(FitFamily family, int degree) {
  int count = 0;
  for (int k = 1; k <= degree; ++k) count += allowed_power(family, k);
  return count;
}

/// Polynomial alone: the top term must be even and positive. With a
/// reference the fit only has to rise outward across the extension zones of
/// the search bracket, where every integral over it is evaluated.
bool confines(const CentroidPotentialTable& t) {
  if (!t.reference) {
    for (std::size_t k = t.fit.size(); k-- > 1;)
      if (t.fit[k] != 0.0) return k % 2 == 0 && t.fit[k] > 0.0;
    return false;
  }
  const auto [lo, hi] = t.search_bracket();
  constexpr int kChecks = 64;
  for (int i = 0; i <= kChecks; ++i) {
    if (t.fit_slope(lo + (t.grid.front() - lo) * i / kChecks) >= 0.0) return false;
    if (t.fit_slope(t.grid.back() + (hi - t.grid.back()) * i / kChecks) <= 0.0) return false;
  }
  return true;
}

double error_floor(std::span<const double> forces) {
  double scale = 0.0;
  for (double f : forces) scale = std::max(scale, std::abs(f));
  return 1e-9 * (1.0 + scale);
}

/// Weighted least squares of the forces against the derivative of a
/// polynomial with the family's powers, in the scaled variable q / L.
ForceFit fit_forces(std::span<const double> grid, std::span<const double> forces, std::span<const double> errs,
                    FitFamily family, int degree) {
  std::vector<int> powers;
  for (int k = 1; k <= degree; ++k)
    if (allowed_power(family, k)) powers.push_back(k);
  const auto n = static_cast<Eigen::Index>(grid.size());
  const auto m = static_cast<Eigen::Index>(powers.size());
  if (n <= m) raise(ErrorKind::FitRejected, "fewer grid points than fit parameters");
  double scale = 0.0;
  for (double q : grid) scale = std::max(scale, std::abs(q));
  if (scale == 0.0) scale = 1.0;
  const double floor = error_floor(forces);

  Eigen::MatrixXd a(n, m);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double weight = 1.0 / std::max(errs[i], floor);
    const double z = grid[i] / scale;
    for (Eigen::Index c = 0; c < m; ++c) a(i, c) = weight * powers[c] * std::pow(z, powers[c] - 1) / scale;
    b(i) = weight * forces[i];
  }
  Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);

  ForceFit fit;
  fit.coeffs.assign(degree + 1, 0.0);
  for (Eigen::Index c = 0; c < m; ++c) fit.coeffs[powers[c]] = x(c) / std::pow(scale, powers[c]);
  // Terms whose force contribution stays below the error floor everywhere
  // on the grid are round-off; drop them so exact inputs keep exact degree.
  for (int k = 1; k <= degree; ++k)
    if (std::abs(k * fit.coeffs[k]) * std::pow(scale, k - 1) <= floor) fit.coeffs[k] = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double model = 0.0;
    for (int k = 1; k <= degree; ++k) model += k * fit.coeffs[k] * std::pow(grid[i], k - 1);
    fit.max_pull = std::max(fit.max_pull, std::abs(forces[i] - model) / std::max(errs[i], floor));
  }
  return fit;
}

/// V^c values relative to fit(q_centre) by end-corrected trapezoids
/// integrated outward from the centre node, with propagated errors.
void integrate_forces(CentroidPotentialTable& t) {
  const std::size_t n = t.grid.size();
  const std::size_t c = n / 2;
  t.values.assign(n, 0.0);
  t.std_err.assign(n, 0.0);
  t.values[c] = t.fit_value(t.grid[c]) - t.fit[0];
  auto curvature = [&](double q) { return t.fit_curvature(q); };
  for (int dir : {+1, -1}) {
    std::vector<double> weight(n, 0.0);
    for (std::size_t i = c;;) {
      const std::ptrdiff_t next = static_cast<std::ptrdiff_t>(i) + dir;
      if (next < 0 || next >= static_cast<std::ptrdiff_t>(n)) break;
      const auto j = static_cast<std::size_t>(next);
      const double h = t.grid[j] - t.grid[i];
      t.values[j] = t.values[i] + 0.5 * h * (t.forces[i] + t.forces[j]) -
                    h * h / 12.0 * (curvature(t.grid[j]) - curvature(t.grid[i]));
      weight[i] += 0.5 * h;
      weight[j] += 0.5 * h;
      double var = 0.0;
      for (std::size_t k = 0; k < n; ++k) var += weight[k] * weight[k] * t.force_err[k] * t.force_err[k];
      t.std_err[j] = std::sqrt(var);
      i = j;
    }
  }
}

/// Forces left for the polynomial once the reference slope is removed.
std::vector<double> residual_forces(const CentroidPotentialTable& t) {
  std::vector<double> r = t.forces;
  if (t.reference)
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= t.reference->slope(t.grid[i]);
  return r;
}

/// Sets the fit constant (and shifts the values) so that the centroid
/// integral reproduces the stored log partition function.
void pin_constant(CentroidPotentialTable& t) {
  t.fit[0] = 0.0;
  const auto [lo, hi] = t.search_bracket();
  const double w0 =
      centroid_generating_function([&](double q) { return t.fit_value(q); }, lo, hi, t.beta, t.mass, 0.0).value;
  const double constant = w0 - t.log_partition / t.beta;
  t.fit[0] = constant;
  for (double& v : t.values) v += constant;
}

std::vector<std::pair<double, double>> gauss_legendre_unit(int n) {
  // Golub-Welsch on [-1, 1], mapped to [0, 1].
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double off = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  std::vector<std::pair<double, double>> nodes;
  for (int k = 0; k < n; ++k) {
    const double v = es.eigenvectors()(0, k);
    nodes.emplace_back(0.5 * (es.eigenvalues()(k) + 1.0), v * v);
  }
  return nodes;
}

}  // namespace

// ---------------------------------------------------------------------------
// NormalModes

struct NormalModes::Plans {
  double* in = nullptr;
  double* out = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(in);
    fftw_free(out);
  }
};

NormalModes::NormalModes(int beads) : beads_(beads) {
  if (beads < 2 || beads % 2 != 0) raise(ErrorKind::InvalidArgument, "bead count must be even and >= 2");
  scale_.resize(beads);
  for (int j = 0; j < beads; ++j)
    scale_[j] = (j == 0 || j == beads / 2) ? 1.0 / std::sqrt(beads) : 1.0 / std::sqrt(2.0 * beads);
  plans_ = std::make_unique<Plans>();
  std::lock_guard lock(planner_mutex());
  plans_->in = fftw_alloc_real(beads);
  plans_->out = fftw_alloc_real(beads);
  // FFTW_ESTIMATE picks the algorithm deterministically, so results do not
  // depend on planner timings.
  plans_->forward = fftw_plan_r2r_1d(beads, plans_->in, plans_->out, FFTW_R2HC, FFTW_ESTIMATE);
  plans_->backward = fftw_plan_r2r_1d(beads, plans_->in, plans_->out, FFTW_HC2R, FFTW_ESTIMATE);
}

NormalModes::~NormalModes() = default;
NormalModes::NormalModes(NormalModes&&) noexcept = default;
NormalModes& NormalModes::operator=(NormalModes&&) noexcept = default;

void NormalModes::to_beads(std::span<const double> u, std::span<double> q) {
  for (int j = 0; j < beads_; ++j) plans_->in[j] = scale_[j] * u[j];
  fftw_execute(plans_->backward);
  std::copy(plans_->out, plans_->out + beads_, q.begin());
}

void NormalModes::to_modes(std::span<const double> g, std::span<double> out) {
  std::copy(g.begin(), g.end(), plans_->in);
  fftw_execute(plans_->forward);
  for (int j = 0; j < beads_; ++j) {
    const double factor = (j == 0 || j == beads_ / 2) ? 1.0 : 2.0;
    out[j] = factor * scale_[j] * plans_->out[j];
  }
}

std::vector<double> NormalModes::spring_constants(double mass, double tau) const {
  std::vector<double> kappa(beads_);
  for (int j = 0; j < beads_; ++j) {
    const double s = std::sin(std::numbers::pi * mode_index(j) / beads_);
    kappa[j] = 4.0 * mass / tau * s * s;
  }
  return kappa;
}

// ---------------------------------------------------------------------------
// Configuration

void PathEnsembleConfig::validate() const {
  if (beads < 2 || beads % 2 != 0) raise(ErrorKind::InvalidArgument, "beads must be even and >= 2");
  if (burn_in < 0 || sweeps <= burn_in) raise(ErrorKind::InvalidArgument, "sweeps must exceed burn_in");
  if (block_size <= 0 || (sweeps - burn_in) % block_size != 0)
    raise(ErrorKind::InvalidArgument, "block_size must divide sweeps - burn_in");
  if ((sweeps - burn_in) / block_size < 2) raise(ErrorKind::InvalidArgument, "need at least two blocks");
  if (!(step_scale > 0.0)) raise(ErrorKind::InvalidArgument, "step_scale must be positive");
}

int default_beads(double beta) {
  if (beta <= 1.0) return 64;
  if (beta <= 10.0) return 256;
  return 1024;
}

std::string to_string(ConstantMode mode) {
  return mode == ConstantMode::oracle_pin ? "oracle_pin" : "harmonic_ti";
}

ConstantMode parse_constant_mode(const std::string& text) {
  if (text == "oracle_pin") return ConstantMode::oracle_pin;
  if (text == "harmonic_ti") return ConstantMode::harmonic_ti;
  raise(ErrorKind::ConfigError, "unknown constant mode '" + text + "'");
}

// ---------------------------------------------------------------------------
// Mean force

MeanForce centroid_mean_force(const PotentialModel& p, const ThermoState& ts, double q_c,
                              const PathEnsembleConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  auto coeffs = confining_coeffs(p);
  PathHmc hmc(coeffs, ts, cfg.beads, false, q_c, horner_second(coeffs, q_c));
  StreamRng rng(cfg.seed, stream);
  auto chain = run_chain(hmc, cfg, rng, [](const PathHmc& h) { return h.mean_slope(); });
  auto est = block_average(chain.samples, static_cast<std::size_t>(cfg.block_size));
  return {est.mean, est.std_err, chain.acceptance, chain.step};
}

// ---------------------------------------------------------------------------
// Tables

double CentroidPotentialTable::fit_value(double q) const {
  return horner(fit, q) + (reference ? reference->value(q) : 0.0);
}

double CentroidPotentialTable::fit_slope(double q) const {
  double acc = 0.0;
  for (std::size_t k = fit.size(); k-- > 1;) acc = acc * q + static_cast<double>(k) * fit[k];
  return acc + (reference ? reference->slope(q) : 0.0);
}

double CentroidPotentialTable::fit_curvature(double q) const {
  return horner_second(fit, q) + (reference ? reference->curvature(q) : 0.0);
}

std::pair<double, double> CentroidPotentialTable::search_bracket() const {
  const double half = 0.5 * (grid.back() - grid.front());
  return {grid.front() - half, grid.back() + half};
}

FitFamily fit_family(const PotentialModel& p) {
  if (const auto* tilted = std::get_if<Tilted>(&p.form)) {
    auto base = as_polynomial(*tilted->base);
    if (base && base->is_even()) return tilted->slope == 0 ? FitFamily::even : FitFamily::even_plus_linear;
    return FitFamily::full;
  }
  auto poly = as_polynomial(p);
  if (poly && poly->is_even()) return FitFamily::even;
  if (poly) {
    // Even apart from a linear term still has a linear-plus-even V^c.
    bool even_plus_linear = true;
    for (int k = 3; k <= poly->degree(); k += 2) even_plus_linear &= poly->coefficient(k) == 0;
    if (even_plus_linear) return FitFamily::even_plus_linear;
  }
  return FitFamily::full;
}

std::vector<double> default_centroid_grid(const PotentialModel& p, const ThermoState& ts, int points,
                                          double source_reach) {
  if (points < 9) raise(ErrorKind::InvalidArgument, "centroid grid needs at least 9 points");
  auto poly = as_polynomial(p);
  if (!poly || !is_confining(p)) raise(ErrorKind::NonConfiningPotential, "grid planning needs a confining polynomial");
  const double centre = fit_family(p) == FitFamily::even ? 0.0 : polynomial_minimum(*poly);
  const double reach = 50.0 / ts.beta;
  double half = 0.0;
  for (double tilt : {-source_reach, 0.0, source_reach}) {
    Polynomial tilted = *poly;
    if (tilted.coeffs.size() < 2) tilted.coeffs.resize(2, Rational(0));
    tilted.coeffs[1] -= Rational(tilt);
    const auto c = tilted.as_doubles();
    const double x_min = polynomial_minimum(tilted);
    const double v_min = horner(c, x_min);
    for (int dir : {-1, +1}) {
      double step = 1e-3 * (1.0 + std::abs(x_min));
      double x = x_min;
      while (horner(c, x) - v_min < reach) {
        x += dir * step;
        step *= 1.2;
      }
      half = std::max(half, std::abs(x - centre));
    }
  }
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) grid[i] = centre - half + 2.0 * half * i / (points - 1);
  return grid;
}

CentroidPotentialTable build_centroid_table(const PotentialModel& p, const ThermoState& ts,
                                            std::span<const double> grid, const PathEnsembleConfig& cfg,
                                            const CentroidTableOptions& opts) {
  cfg.validate();
  confining_coeffs(p);
  const std::size_t n = grid.size();
  if (n < 9) raise(ErrorKind::InvalidArgument, "centroid grid needs at least 9 points");
  for (std::size_t i = 1; i < n; ++i)
    if (!(grid[i] > grid[i - 1])) raise(ErrorKind::InvalidArgument, "centroid grid must be strictly increasing");
  const double mid = 0.5 * (grid.front() + grid.back());
  const double width = grid.back() - grid.front();
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(grid[i] + grid[n - 1 - i] - 2.0 * mid) > 1e-9 * width)
      raise(ErrorKind::InvalidArgument, "centroid grid must be symmetric about its centre");

  const FitFamily family = fit_family(p);
  const bool parity = opts.use_parity && family == FitFamily::even && std::abs(mid) <= 1e-12 * width;

  CentroidPotentialTable t;
  t.grid.assign(grid.begin(), grid.end());
  t.forces.assign(n, 0.0);
  t.force_err.assign(n, 0.0);
  t.beta = ts.beta;
  t.mass = ts.mass;
  t.beads = cfg.beads;
  t.constant_mode = opts.constant_mode;

  std::vector<std::size_t> sampled;
  for (std::size_t i = 0; i < n; ++i)
    if (!parity || grid[i] >= 0.0) sampled.push_back(i);
  std::vector<MeanForce> results(n);
  parallel_for(sampled.size(), cfg.threads, [&](std::size_t k) {
    const std::size_t i = sampled[k];
    results[i] = centroid_mean_force(p, ts, grid[i], cfg, i);
  });
  t.min_acceptance = 1.0;
  t.max_acceptance = 0.0;
  for (std::size_t i : sampled) {
    t.min_acceptance = std::min(t.min_acceptance, results[i].acceptance);
    t.max_acceptance = std::max(t.max_acceptance, results[i].acceptance);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (parity && grid[i] < 0.0) {
      const auto& mirror = results[n - 1 - i];
      t.forces[i] = -mirror.force;
      t.force_err[i] = mirror.err;
    } else {
      t.forces[i] = results[i].force;
      t.force_err[i] = results[i].err;
    }
  }

  if (opts.variational_reference)
    t.reference = std::make_shared<const VariationalReference>(confining_coeffs(p), ts.beta, ts.mass);
  const auto residual = residual_forces(t);

  // Degree ladder: the requested degree, then +2 up to kMaxFitDegree while
  // the grid still over-determines the fit. An accepted fit must confine
  // (the polynomial alone, or its sum with the reference).
  ForceFit best;
  int degree = opts.fit_degree;
  bool accepted = false;
  for (int d = opts.fit_degree; d <= kMaxFitDegree; d += 2) {
    if (static_cast<int>(n) < fit_parameter_count(family, d) + 3) break;
    ForceFit fit = fit_forces(t.grid, residual, t.force_err, family, d);
    if (d == opts.fit_degree || fit.max_pull < best.max_pull) {
      best = fit;
      degree = d;
    }
    if (fit.max_pull <= kMaxPull) {
      t.fit = fit.coeffs;
      if (confines(t)) {
        best = fit;
        degree = d;
        accepted = true;
        break;
      }
    }
  }
  if (!accepted)
    raise(ErrorKind::FitRejected, "largest fit residual is " + std::to_string(best.max_pull) +
                                      " standard errors at degree " + std::to_string(degree));
  t.fit = best.coeffs;
  t.fit_degree = degree;
  t.fit_max_pull = best.max_pull;
  integrate_forces(t);

  if (opts.constant_mode == ConstantMode::oracle_pin) {
    t.log_partition = exact_log_partition(p, ts);
  } else {
    auto est = thermodynamic_log_partition(p, ts, cfg, opts.ti_nodes);
    t.log_partition = est.value;
    t.log_partition_err = est.err;
  }
  pin_constant(t);
  return t;
}

CentroidPotentialTable refit_table(const CentroidPotentialTable& base, std::span<const double> forces,
                                   FitFamily family, int fit_degree) {
  CentroidPotentialTable t = base;
  t.forces.assign(forces.begin(), forces.end());
  ForceFit fit = fit_forces(t.grid, residual_forces(t), t.force_err, family, fit_degree);
  t.fit = fit.coeffs;
  t.fit_degree = fit_degree;
  t.fit_max_pull = fit.max_pull;
  integrate_forces(t);
  pin_constant(t);
  return t;
}

// ---------------------------------------------------------------------------
// Partition functions

double discrete_harmonic_log_partition(const ThermoState& ts, double omega, int beads) {
  NormalModes modes(beads);
  const double tau = ts.beta / beads;
  const auto kappa = modes.spring_constants(ts.mass, tau);
  const double k = ts.mass * omega * omega;
  double acc = 0.0;
  for (double kj : kappa) acc += 0.5 * std::log(ts.mass / (tau * (kj + tau * k)));
  return acc;
}

LogPartitionEstimate thermodynamic_log_partition(const PotentialModel& p, const ThermoState& ts,
                                                 const PathEnsembleConfig& cfg, int nodes) {
  cfg.validate();
  const auto coeffs = confining_coeffs(p);
  auto poly = as_polynomial(p);
  const double q0 = polynomial_minimum(*poly);
  const double v0 = horner(coeffs, q0);
  const double k = horner_second(coeffs, q0);
  if (!(k > 0.0)) raise(ErrorKind::NonConfiningPotential, "harmonic reference needs V'' > 0 at the minimum");

  // Reference V_h(q) = v0 + k/2 (q - q0)^2 as coefficients.
  std::vector<double> ref(std::max<std::size_t>(coeffs.size(), 3), 0.0);
  ref[0] = v0 + 0.5 * k * q0 * q0;
  ref[1] = -k * q0;
  ref[2] = 0.5 * k;
  std::vector<double> diff(ref.size(), 0.0);
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = (i < coeffs.size() ? coeffs[i] : 0.0) - ref[i];

  const auto quadrature = gauss_legendre_unit(nodes);
  std::vector<BlockEstimate> means(quadrature.size());
  parallel_for(quadrature.size(), cfg.threads, [&](std::size_t i) {
    const double lambda = quadrature[i].first;
    std::vector<double> mixed(diff.size());
    for (std::size_t c = 0; c < mixed.size(); ++c) mixed[c] = ref[c] + lambda * diff[c];
    PathHmc hmc(mixed, ts, cfg.beads, true, q0, k);
    StreamRng rng(cfg.seed, 1'000'000 + i);
    const auto& kern = kernels::active();
    std::vector<double> scratch(cfg.beads);
    auto chain = run_chain(hmc, cfg, rng, [&](const PathHmc& h) {
      return kern.potential(diff, h.beads(), scratch).value / cfg.beads;
    });
    means[i] = block_average(chain.samples, static_cast<std::size_t>(cfg.block_size));
  });
  double integral = 0.0, var = 0.0;
  for (std::size_t i = 0; i < quadrature.size(); ++i) {
    integral += quadrature[i].second * means[i].mean;
    var += std::pow(quadrature[i].second * means[i].std_err, 2);
  }
  const double omega = std::sqrt(k / ts.mass);
  LogPartitionEstimate out;
  out.value = discrete_harmonic_log_partition(ts, omega, cfg.beads) - ts.beta * v0 - ts.beta * integral;
  out.err = ts.beta * std::sqrt(var);
  return out;
}

}  // namespace epac

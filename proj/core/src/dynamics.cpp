#include "stab/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "stab/linalg.hpp"

#include "stab/ensemble.hpp"
#include "stab/errors.hpp"
#include "stab/rng.hpp"

namespace stab {
namespace {

Eigen::VectorXd reference_point(const RunOptions& opt, int dim) {
  if (opt.x_star.size() == 0) return Eigen::VectorXd::Zero(dim);
  if (opt.x_star.size() != dim)
    throw Error(ErrorCode::DimensionMismatch, "x_star dimension mismatch");
  return opt.x_star;
}

// Applies one update and appends it unless it blows past the overflow guard.
// Returns false when the trajectory must stop (non-finite or diverged).
bool advance(Trajectory& traj, const Eigen::VectorXd& x_next, const Eigen::VectorXd& x_star,
             double radius) {
  if (!x_next.allFinite() || x_next.cwiseAbs().maxCoeff() > kOverflowGuard) {
    traj.stop = StopReason::Diverged;
    traj.saturated = true;
    return false;
  }
  traj.iterates.push_back(x_next);
  if ((x_next - x_star).stableNorm() > radius) {
    traj.stop = StopReason::Diverged;
    return false;
  }
  return true;
}

bool cycle_check(Trajectory& traj, const RunOptions& opt) {
  if (!opt.detect_cycles) return true;
  const int w = opt.cycle_window;
  if (static_cast<int>(traj.iterates.size()) < w) return true;
  std::vector<Eigen::VectorXd> window(traj.iterates.end() - w, traj.iterates.end());
  if (detect_cycle2(window, opt.cycle_tol)) {
    traj.stop = StopReason::Cycle2;
    return false;
  }
  return true;
}

}  // namespace

Eigen::VectorXd gd_step(const Loss& loss, const Eigen::VectorXd& x, double eta) {
  return x - eta * loss.gradient(x);
}

Trajectory run_gd(const Loss& loss, const Eigen::VectorXd& x0, double eta,
                  const RunOptions& opt) {
  if (x0.size() != loss.dim()) throw Error(ErrorCode::DimensionMismatch, "run_gd: x0");
  const Eigen::VectorXd x_star = reference_point(opt, loss.dim());

  Trajectory traj;
  traj.eta = eta;
  traj.stop = StopReason::MaxIters;
  traj.iterates.push_back(x0);
  for (long t = 0; t < opt.max_iters; ++t) {
    const Eigen::VectorXd g = loss.gradient(traj.iterates.back());
    if (!g.allFinite()) {
      traj.stop = StopReason::Diverged;
      traj.saturated = true;
      break;
    }
    if (g.stableNorm() < opt.grad_tol) {
      traj.stop = StopReason::Converged;
      break;
    }
    if (!advance(traj, traj.iterates.back() - eta * g, x_star, opt.divergence_radius)) break;
    if (!cycle_check(traj, opt)) break;
  }
  return traj;
}

Trajectory run_sgd(const LossEnsemble& ensemble, const Eigen::VectorXd& x0, double eta,
                   long max_iters, std::uint64_t seed, const RunOptions& opt) {
  if (x0.size() != ensemble.dim()) throw Error(ErrorCode::DimensionMismatch, "run_sgd: x0");
  RunOptions o = opt;
  o.max_iters = max_iters;
  if (o.x_star.size() == 0) o.x_star = ensemble.x_star();
  const Eigen::VectorXd x_star = reference_point(o, ensemble.dim());
  const std::uint64_t n_batches = ensemble.num_batches();

  Trajectory traj;
  traj.eta = eta;
  traj.seed = seed;
  traj.stop = StopReason::MaxIters;
  traj.iterates.push_back(x0);
  SplitMix64 rng(seed);
  for (long t = 0; t < max_iters; ++t) {
    // grad_tol <= 0 disables the convergence check (and skips the mean
    // gradient evaluation, which dominates the per-step cost otherwise).
    if (o.grad_tol > 0.0) {
      const Eigen::VectorXd g_mean = ensemble.mean().gradient(traj.iterates.back());
      if (g_mean.allFinite() && g_mean.stableNorm() < o.grad_tol) {
        traj.stop = StopReason::Converged;
        break;
      }
    }
    const auto b = static_cast<std::uint32_t>(rng.next_below(n_batches));
    traj.batch_log.push_back(b);
    const Eigen::VectorXd g = ensemble.batch_loss(b).gradient(traj.iterates.back());
    if (!g.allFinite()) {
      traj.stop = StopReason::Diverged;
      traj.saturated = true;
      break;
    }
    if (!advance(traj, traj.iterates.back() - eta * g, x_star, o.divergence_radius)) break;
    if (!cycle_check(traj, o)) break;
  }
  return traj;
}

std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> detect_cycle2(
    const std::vector<Eigen::VectorXd>& window, double tol) {
  const auto w = static_cast<long>(window.size());
  if (w < 4) throw Error(ErrorCode::InvalidArgument, "detect_cycle2: window shorter than 4");
  for (long t = 0; t + 2 < w; ++t)
    if ((window[t + 2] - window[t]).stableNorm() >= tol) return std::nullopt;
  for (long t = 0; t + 1 < w; ++t)
    if ((window[t + 1] - window[t]).stableNorm() <= 10.0 * tol) return std::nullopt;
  return std::make_pair(window[w - 2], window[w - 1]);
}

std::vector<double> uniform_grid(double lo, double hi, double step) {
  if (step <= 0.0) throw Error(ErrorCode::InvalidArgument, "uniform_grid: step must be > 0");
  const long i_lo = std::lround(lo / step);
  const long i_hi = std::lround(hi / step);
  std::vector<double> grid;
  for (long i = i_lo; i <= i_hi; ++i) grid.push_back(static_cast<double>(i) * step);
  return grid;
}

namespace {

ScanCell scan_one(const Loss& loss, double eta, std::uint64_t root_seed, std::uint64_t cell_id,
                  const ScanOptions& opt) {
  ScanCell cell;
  cell.eta = eta;
  cell.seed = derive_seed(root_seed, cell_id);
  SplitMix64 rng(cell.seed);
  const int d = loss.dim();
  cell.x0.resize(d);
  for (int i = 0; i < d; ++i) cell.x0[i] = rng.next_double(opt.x0_low, opt.x0_high);

  Eigen::VectorXd x = cell.x0;
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(d);
  for (long t = 0; t < opt.burn_in + opt.record; ++t) {
    x = gd_step(loss, x, eta);
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kOverflowGuard ||
        (x - origin).stableNorm() > opt.divergence_radius) {
      cell.outcome = ScanOutcome::Diverged;
      return cell;
    }
    if (t >= opt.burn_in) {
      // Greedy clustering: first point within cluster_eps of no existing
      // center opens a new cluster, so centers stay pairwise > eps apart.
      bool assigned = false;
      for (const auto& c : cell.accumulation_points)
        if ((x - c).stableNorm() <= opt.cluster_eps) {
          assigned = true;
          break;
        }
      if (!assigned) cell.accumulation_points.push_back(x);
    }
  }
  switch (cell.accumulation_points.size()) {
    case 1: cell.outcome = ScanOutcome::FixedPoint; break;
    case 2: cell.outcome = ScanOutcome::Cycle2; break;
    default: cell.outcome = ScanOutcome::HigherPeriodOrChaos; break;
  }
  return cell;
}

}  // namespace

BifurcationScan bifurcation_scan(const Loss& loss, const std::vector<double>& eta_grid,
                                 std::uint64_t root_seed, const ScanOptions& opt) {
  if (opt.record < 1 || opt.burn_in < 0)
    throw Error(ErrorCode::InvalidArgument, "bifurcation_scan: bad burn_in/record");
  BifurcationScan scan;
  scan.options = opt;
  scan.root_seed = root_seed;
  scan.cells.resize(eta_grid.size());

  const int threads = std::max(1, opt.threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < eta_grid.size(); ++i)
      scan.cells[i] = scan_one(loss, eta_grid[i], root_seed, i, opt);
    return scan;
  }
  // Cells are independent; per-cell seeds make assembly order irrelevant.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= eta_grid.size()) return;
      scan.cells[i] = scan_one(loss, eta_grid[i], root_seed, i, opt);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return scan;
}

SuperlinearReport superlinear_divergence_test(const Loss& loss, const Eigen::VectorXd& x0,
                                              const Eigen::VectorXd& x_star, double eta,
                                              long horizon) {
  if (horizon < 20)
    throw Error(ErrorCode::InvalidArgument, "superlinear test needs horizon >= 20");
  RunOptions opt;
  opt.max_iters = horizon;
  opt.x_star = x_star;
  opt.grad_tol = 0.0;
  opt.divergence_radius = kOverflowGuard;
  opt.detect_cycles = false;

  SuperlinearReport rep;
  rep.trajectory = run_gd(loss, x0, eta, opt);
  const auto& xs = rep.trajectory.iterates;
  const long T = static_cast<long>(xs.size()) - 1;
  rep.log_r.reserve(T);
  for (long t = 1; t <= T; ++t)
    rep.log_r.push_back(std::log((xs[t] - x_star).stableNorm()) / static_cast<double>(t));

  if (T < 6) {
    rep.verdict = DivergenceVerdict::Inconclusive;
    return rep;
  }
  const double log10v = std::log(10.0);
  for (long t = 0; t < T; ++t)
    if (rep.log_r[t] > log10v) {
      rep.first_exceed = t + 1;
      break;
    }
  const long tail = std::max<long>(2, (T + 3) / 4);
  rep.increasing_tail = true;
  for (long t = T - tail + 1; t < T; ++t)
    if (!(rep.log_r[t] > rep.log_r[t - 1])) {
      rep.increasing_tail = false;
      break;
    }
  if (rep.first_exceed >= 0 && rep.increasing_tail) {
    rep.verdict = DivergenceVerdict::Superlinear;
    return rep;
  }
  // Bounded-rate fit: the last quarter must not exceed the earlier maximum by
  // more than a 5% rate slack (in log space).
  double pre_max = -std::numeric_limits<double>::infinity();
  double tail_max = -std::numeric_limits<double>::infinity();
  for (long t = 0; t < T - tail; ++t) pre_max = std::max(pre_max, rep.log_r[t]);
  for (long t = T - tail; t < T; ++t) tail_max = std::max(tail_max, rep.log_r[t]);
  if (tail_max <= pre_max + 0.05)
    rep.verdict = DivergenceVerdict::AtMostLinear;
  else
    rep.verdict = DivergenceVerdict::Inconclusive;
  return rep;
}

CubicGrowthCheck cubic_growth_lower_bound_check(const Trajectory& traj,
                                                const Eigen::VectorXd& x_star) {
  CubicGrowthCheck chk;
  const double log2v = std::log(2.0);
  std::vector<double> dist;
  dist.reserve(traj.iterates.size());
  for (const auto& x : traj.iterates) dist.push_back((x - x_star).stableNorm());
  for (std::size_t t = 0; t < dist.size(); ++t) {
    if (chk.threshold_time < 0) {
      if (dist[t] > 2.0) {
        chk.threshold_time = static_cast<long>(t);
        chk.applicable = true;
      }
      continue;
    }
    const double k = static_cast<double>(t - chk.threshold_time + 1);
    const double bound_log = (std::pow(3.0, k) - 1.0) / 2.0 * log2v;
    if (std::log(dist[t]) < bound_log) chk.dominated = false;
  }
  return chk;
}

// ----------------------------------------------------------------------------
// Exact expectations by full enumeration of batch sequences.
// ----------------------------------------------------------------------------

namespace {

struct Enumeration {
  std::size_t n_batches = 0;
  std::size_t n_paths = 1;
  std::vector<double> states;  // n_paths * d doubles, path-major
  bool saturated = false;
};

void check_budget(std::size_t n_batches, int t_max, std::size_t budget) {
  std::size_t paths = 1;
  for (int t = 0; t < t_max; ++t) {
    if (paths > budget / n_batches)
      throw Error(ErrorCode::BudgetExceeded,
                  "exact expectation would enumerate more than " + std::to_string(budget) +
                      " paths");
    paths *= n_batches;
  }
}

double clamp_guard(double v, bool* saturated) {
  if (std::isnan(v) || v > kOverflowGuard) {
    *saturated = true;
    return kOverflowGuard;
  }
  if (v < -kOverflowGuard) {
    *saturated = true;
    return -kOverflowGuard;
  }
  return v;
}

// Expands every path by every batch, in (path, batch) order.
void expand_level(const LossEnsemble& ensemble, double eta, Enumeration& e) {
  const int d = ensemble.dim();
  const std::size_t nb = e.n_batches;
  std::vector<double> next(e.states.size() * nb);
  Eigen::VectorXd x(d);
  for (std::size_t p = 0; p < e.n_paths; ++p) {
    for (int i = 0; i < d; ++i) x[i] = e.states[p * d + i];
    for (std::size_t b = 0; b < nb; ++b) {
      const Eigen::VectorXd y = x - eta * ensemble.batch_loss(b).gradient(x);
      for (int i = 0; i < d; ++i)
        next[(p * nb + b) * d + i] = clamp_guard(y[i], &e.saturated);
    }
  }
  e.states = std::move(next);
  e.n_paths *= nb;
}

}  // namespace

ExpectationSeries exact_expectation(const LossEnsemble& ensemble, const Eigen::VectorXd& x0,
                                    double eta, int t_max, PathStatistic stat, int k,
                                    std::size_t path_budget) {
  const int d = ensemble.dim();
  if (x0.size() != d) throw Error(ErrorCode::DimensionMismatch, "exact_expectation: x0");
  if (t_max < 0) throw Error(ErrorCode::InvalidArgument, "exact_expectation: t_max < 0");
  if (stat == PathStatistic::PowerK && d != 1)
    throw Error(ErrorCode::InvalidArgument, "PowerK statistic is univariate");
  if (stat == PathStatistic::PowerK && k < 1)
    throw Error(ErrorCode::InvalidArgument, "PowerK needs k >= 1");
  check_budget(ensemble.num_batches(), t_max, path_budget);

  const Eigen::VectorXd& xs = ensemble.x_star();
  Enumeration e;
  e.n_batches = ensemble.num_batches();
  e.states.resize(d);
  for (int i = 0; i < d; ++i) e.states[i] = x0[i];

  ExpectationSeries out;
  Eigen::VectorXd x(d);
  for (int t = 0; t <= t_max; ++t) {
    if (t > 0) expand_level(ensemble, eta, e);
    long double acc = 0.0L;
    for (std::size_t p = 0; p < e.n_paths; ++p) {
      for (int i = 0; i < d; ++i) x[i] = e.states[p * d + i];
      double v;
      if (stat == PathStatistic::AbsDistance) {
        v = (x - xs).stableNorm();
      } else {
        v = 1.0;
        const double dx = x[0] - xs[0];
        for (int i = 0; i < k; ++i) v *= dx;
      }
      acc += clamp_guard(v, &out.saturated);
    }
    out.values.push_back(static_cast<double>(acc / static_cast<long double>(e.n_paths)));
  }
  out.saturated = out.saturated || e.saturated;
  return out;
}

std::vector<Eigen::VectorXd> exact_moment_sequence(const LossEnsemble& ensemble,
                                                   const Eigen::VectorXd& x0, double eta,
                                                   int t_max, int k,
                                                   std::size_t path_budget) {
  const int d = ensemble.dim();
  if (x0.size() != d) throw Error(ErrorCode::DimensionMismatch, "exact_moment_sequence: x0");
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "exact_moment_sequence: k < 0");
  check_budget(ensemble.num_batches(), t_max, path_budget);

  const Eigen::VectorXd& xs = ensemble.x_star();
  Enumeration e;
  e.n_batches = ensemble.num_batches();
  e.states.resize(d);
  for (int i = 0; i < d; ++i) e.states[i] = x0[i];

  std::vector<Eigen::VectorXd> out;
  Eigen::VectorXd x(d);
  for (int t = 0; t <= t_max; ++t) {
    if (t > 0) expand_level(ensemble, eta, e);
    const Eigen::VectorXd probe = kron_power(Eigen::VectorXd::Zero(d), k);
    std::vector<long double> acc(probe.size(), 0.0L);
    for (std::size_t p = 0; p < e.n_paths; ++p) {
      for (int i = 0; i < d; ++i) x[i] = e.states[p * d + i];
      const Eigen::VectorXd m = kron_power(x - xs, k);
      for (Eigen::Index i = 0; i < m.size(); ++i) acc[i] += m[i];
    }
    Eigen::VectorXd mean(probe.size());
    for (Eigen::Index i = 0; i < mean.size(); ++i)
      mean[i] = static_cast<double>(acc[i] / static_cast<long double>(e.n_paths));
    out.push_back(std::move(mean));
  }
  return out;
}

}  // namespace stab

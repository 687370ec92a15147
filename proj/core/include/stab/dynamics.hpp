#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "stab/loss.hpp"

namespace stab {

class LossEnsemble;

// ============================================================================
// Gradient descent and minibatch SGD trajectories, cycle detection, and
// long-run classification of the dynamics.
// ============================================================================

inline constexpr double kDivergenceRadius = 1e6;
inline constexpr double kOverflowGuard = 1e300;
inline constexpr double kCycleTol = 1e-9;

enum class StopReason { MaxIters, Converged, Cycle2, Diverged };

[[nodiscard]] constexpr const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxIters: return "MaxIters";
    case StopReason::Converged: return "Converged";
    case StopReason::Cycle2: return "Cycle2";
    case StopReason::Diverged: return "Diverged";
  }
  return "Unknown";
}

struct Trajectory {
  std::vector<Eigen::VectorXd> iterates;  // x_0 .. x_T, all finite
  double eta = 0.0;
  StopReason stop = StopReason::MaxIters;
  std::vector<std::uint32_t> batch_log;   // batch index per step (SGD only)
  std::uint64_t seed = 0;                 // 0 for deterministic full-batch runs
  bool saturated = false;                 // next iterate exceeded the overflow guard
};

struct RunOptions {
  long max_iters = 100000;
  Eigen::VectorXd x_star;                 // divergence reference; empty = origin
  double grad_tol = 1e-12;                // <= 0 disables the convergence stop
  double divergence_radius = kDivergenceRadius;
  double cycle_tol = kCycleTol;
  bool detect_cycles = true;
  int cycle_window = 16;
};

// One gradient descent step x - eta * grad L(x).
[[nodiscard]] Eigen::VectorXd gd_step(const Loss& loss, const Eigen::VectorXd& x, double eta);

[[nodiscard]] Trajectory run_gd(const Loss& loss, const Eigen::VectorXd& x0, double eta,
                                const RunOptions& opt = {});

// Minibatch SGD: each step draws a batch uniformly from the ensemble's
// enumerated batch list using the counter-based RNG, so a (config, seed) pair
// replays bit for bit.
[[nodiscard]] Trajectory run_sgd(const LossEnsemble& ensemble, const Eigen::VectorXd& x0,
                                 double eta, long max_iters, std::uint64_t seed,
                                 const RunOptions& opt = {});

// Reports a period-2 cycle when over the whole window consecutive iterates
// stay apart (> 10 * tol) while iterates two steps apart coincide (< tol).
// Returns the two cycle points.
[[nodiscard]] std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> detect_cycle2(
    const std::vector<Eigen::VectorXd>& window, double tol = kCycleTol);

// ----------------------------------------------------------------------------
// Long-run classification over a step-size grid.
// ----------------------------------------------------------------------------

enum class ScanOutcome { FixedPoint, Cycle2, HigherPeriodOrChaos, Diverged };

[[nodiscard]] constexpr const char* to_string(ScanOutcome o) {
  switch (o) {
    case ScanOutcome::FixedPoint: return "FixedPoint";
    case ScanOutcome::Cycle2: return "Cycle2";
    case ScanOutcome::HigherPeriodOrChaos: return "HigherPeriodOrChaos";
    case ScanOutcome::Diverged: return "Diverged";
  }
  return "Unknown";
}

struct ScanCell {
  double eta = 0.0;
  ScanOutcome outcome = ScanOutcome::Diverged;
  std::vector<Eigen::VectorXd> accumulation_points;  // greedy cluster centers
  Eigen::VectorXd x0;
  std::uint64_t seed = 0;
};

struct ScanOptions {
  long burn_in = 10000;
  long record = 256;
  double cluster_eps = 1e-3;
  double x0_low = -1.0;
  double x0_high = 1.0;
  double divergence_radius = kDivergenceRadius;
  int threads = 1;
};

struct BifurcationScan {
  std::vector<ScanCell> cells;
  ScanOptions options;
  std::uint64_t root_seed = 0;
};

// For each eta: draw x0 ~ U(x0_low, x0_high)^d from a per-cell derived seed,
// run burn_in iterations, then record `record` iterates and cluster them with
// radius cluster_eps.  Cluster count 1 / 2 / >=3 maps to FixedPoint / Cycle2 /
// HigherPeriodOrChaos; leaving the divergence radius (or a non-finite step)
// maps to Diverged.  Cells are independent and may run on several threads;
// assembly is by cell index, so results do not depend on scheduling.
[[nodiscard]] BifurcationScan bifurcation_scan(const Loss& loss,
                                               const std::vector<double>& eta_grid,
                                               std::uint64_t root_seed,
                                               const ScanOptions& opt = {});

// Inclusive integer-indexed grid lo..hi in units of `step`, computed as
// i * step so that grid points are reproducible doubles.
[[nodiscard]] std::vector<double> uniform_grid(double lo, double hi, double step);

// ----------------------------------------------------------------------------
// Divergence-speed classification.
// ----------------------------------------------------------------------------

enum class DivergenceVerdict { Superlinear, AtMostLinear, Inconclusive };

[[nodiscard]] constexpr const char* to_string(DivergenceVerdict v) {
  switch (v) {
    case DivergenceVerdict::Superlinear: return "Superlinear";
    case DivergenceVerdict::AtMostLinear: return "AtMostLinear";
    case DivergenceVerdict::Inconclusive: return "Inconclusive";
  }
  return "Unknown";
}

struct SuperlinearReport {
  DivergenceVerdict verdict = DivergenceVerdict::Inconclusive;
  std::vector<double> log_r;     // log r_t = log ||x_t - x_star|| / t, t = 1..T
  long first_exceed = -1;        // first t with r_t > 10, or -1
  bool increasing_tail = false;  // log_r strictly increasing over the last quarter
  Trajectory trajectory;
};

// Finite-horizon heuristic for the growth rate r_t = ||x_t - x_star||^(1/t).
// Superlinear: r_t > 10 somewhere and r_t strictly increasing over the last
// quarter of the recorded run (recording stops at the 1e300 overflow guard).
// AtMostLinear: the last-quarter r_t stay within a fitted bound of what was
// seen before (allows convergence to a finite rate).  Otherwise Inconclusive.
// A finite horizon cannot decide the asymptotic limit; this is a diagnostic.
[[nodiscard]] SuperlinearReport superlinear_divergence_test(const Loss& loss,
                                                            const Eigen::VectorXd& x0,
                                                            const Eigen::VectorXd& x_star,
                                                            double eta, long horizon);

struct CubicGrowthCheck {
  bool applicable = false;   // trajectory reached distance > 2
  bool dominated = true;     // every later recorded distance beats the bound
  long threshold_time = -1;  // first t with ||x_t - x_star|| > 2
};

// For step sizes past twice the inverse curvature of the quartic-barrier
// loss, once an iterate passes distance 2 the subsequent distances are known
// to beat the tower bound 2^((3^(t-T+1)-1)/2).  Verifies the recorded
// trajectory against that bound in log space.
[[nodiscard]] CubicGrowthCheck cubic_growth_lower_bound_check(const Trajectory& traj,
                                                              const Eigen::VectorXd& x_star);

// ----------------------------------------------------------------------------
// Exact expectations over all batch sequences.
// ----------------------------------------------------------------------------

enum class PathStatistic { AbsDistance, PowerK };

struct ExpectationSeries {
  std::vector<double> values;  // index t = 0..t_max
  bool saturated = false;      // some path statistic hit the 1e300 clamp
};

inline constexpr std::size_t kDefaultPathBudget = std::size_t{1} << 24;

// Enumerates all N^t equally likely batch sequences level by level (N =
// number of batches) and aggregates the statistic exactly at each step:
// AbsDistance = E ||x_t - x_star||, PowerK = E (x_t - x_star)^k (univariate).
// Per-path values are clamped at 1e300 with a saturation flag.
[[nodiscard]] ExpectationSeries exact_expectation(const LossEnsemble& ensemble,
                                                  const Eigen::VectorXd& x0, double eta,
                                                  int t_max, PathStatistic stat, int k = 1,
                                                  std::size_t path_budget = kDefaultPathBudget);

// Same enumeration, returning the exact k-fold moment vectors E (x_t - x_star)^(x)k.
[[nodiscard]] std::vector<Eigen::VectorXd> exact_moment_sequence(
    const LossEnsemble& ensemble, const Eigen::VectorXd& x0, double eta, int t_max, int k,
    std::size_t path_budget = kDefaultPathBudget);

}  // namespace stab

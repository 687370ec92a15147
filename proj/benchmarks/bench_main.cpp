#include <benchmark/benchmark.h>

#include <stab/dynamics.hpp>
#include <stab/ensemble.hpp>
#include <stab/linalg.hpp>
#include <stab/moment_operator.hpp>
#include <stab/presets.hpp>

namespace {

Eigen::VectorXd scalar(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

void BM_kron_power(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(d, 0.1, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(stab::kron_power(v, k));
  }
}
BENCHMARK(BM_kron_power)->Args({2, 6})->Args({4, 6})->Args({8, 6});

void BM_assemble_block(benchmark::State& state) {
  const stab::LossEnsemble ens = stab::make_ensemble_two_point(0.5);
  const stab::BatchMapDerivatives derivs = stab::batch_map_derivatives(ens, 1.0);
  const int k = static_cast<int>(state.range(0));
  const int p = static_cast<int>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(stab::assemble_block(derivs, k, p));
  }
}
BENCHMARK(BM_assemble_block)->Args({2, 4})->Args({3, 6})->Args({6, 6});

void BM_run_gd(benchmark::State& state) {
  const stab::Loss loss(stab::preset_f_minus());
  stab::RunOptions opt;
  opt.max_iters = state.range(0);
  opt.grad_tol = 0.0;
  opt.detect_cycles = false;
  for (auto _ : state) {
    benchmark::DoNotOptimize(stab::run_gd(loss, scalar(0.4), 2.1, opt));
  }
}
BENCHMARK(BM_run_gd)->Arg(1000)->Arg(10000);

void BM_exact_expectation(benchmark::State& state) {
  const stab::LossEnsemble ens = stab::make_ensemble_two_point(0.5);
  const int t_max = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(stab::exact_expectation(ens, scalar(0.2), 1.9, t_max,
                                                     stab::PathStatistic::AbsDistance));
  }
}
BENCHMARK(BM_exact_expectation)->Arg(12)->Arg(16);

}  // namespace

BENCHMARK_MAIN();

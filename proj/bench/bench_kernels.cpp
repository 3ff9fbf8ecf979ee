#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "fastslow/bas.hpp"
#include "fastslow/cost.hpp"
#include "fastslow/gp.hpp"
#include "fastslow/plateau.hpp"
#include "fastslow/qsim.hpp"

using namespace fastslow;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::Parallel : Exec::Serial; }

void BM_ShiftGradient(benchmark::State& state) {
  const int rows = 2, cols = static_cast<int>(state.range(1));
  const auto ansatz = qsim::build_zhu_star_ansatz(rows, cols, 1);
  cost::CostSpec spec{bas::target_distribution(bas::bas_ensemble(rows, cols))};
  std::vector<double> theta(ansatz.n_params());
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (auto& t : theta) t = u(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cost::parameter_shift_gradient(ansatz, theta, spec, 0, exec_of(state)));
  }
}
BENCHMARK(BM_ShiftGradient)->ArgsProduct({{0, 1}, {2, 3}})->ArgNames({"parallel", "cols"});

void BM_HaarFirstMoment(benchmark::State& state) {
  const int d = static_cast<int>(state.range(1));
  const auto ops = plateau::probe_operators(d, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(plateau::check_first_moment(ops[0], ops[1], 2000, 3, exec_of(state)));
  }
}
BENCHMARK(BM_HaarFirstMoment)->ArgsProduct({{0, 1}, {4, 8}})->ArgNames({"parallel", "d"});

void BM_GradientSamples(benchmark::State& state) {
  plateau::ScanOptions opts;
  opts.n_theta_samples = 50;
  opts.seed = 7;
  const int n = static_cast<int>(state.range(1));
  opts.qubit_counts = {n};
  for (auto _ : state) {
    benchmark::DoNotOptimize(plateau::gradient_samples(n, opts, exec_of(state)));
  }
}
BENCHMARK(BM_GradientSamples)->ArgsProduct({{0, 1}, {4, 6}})->ArgNames({"parallel", "qubits"});

void BM_GpPosteriorBatch(benchmark::State& state) {
  const Eigen::Index n = state.range(1), d = 27;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = u(rng);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = X.row(i).squaredNorm();
  const auto s = optim::GpSurrogate::fit(X, y, optim::HyperGrid::single({1.0, 1.0, 1e-4}));
  Eigen::MatrixXd Q(d, 1024);
  for (Eigen::Index j = 0; j < Q.cols(); ++j)
    for (Eigen::Index i = 0; i < d; ++i) Q(i, j) = u(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.posterior_batch(Q, exec_of(state)));
  }
}
BENCHMARK(BM_GpPosteriorBatch)->ArgsProduct({{0, 1}, {50, 300}})->ArgNames({"parallel", "points"});

}  // namespace

BENCHMARK_MAIN();

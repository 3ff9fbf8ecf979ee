#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fastslow/bas.hpp"
#include "fastslow/cost.hpp"
#include "fastslow/error.hpp"
#include "fastslow/optim.hpp"
#include "fastslow/qsim.hpp"

using namespace fastslow;
using namespace fastslow::optim;

namespace {

const double kPi = std::numbers::pi;

void check_trace_invariants(const OptimizerTrace& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(t[i].iteration == i);
    if (i > 0) {
      CHECK(t[i].best_so_far <= t[i - 1].best_so_far);
      CHECK(t[i].circuit_executions > t[i - 1].circuit_executions);
    }
  }
}

cost::CostSpec bas22(std::optional<std::uint64_t> shots) {
  return {bas::target_distribution(bas::bas_ensemble(2, 2)), 1e-8, shots};
}

}  // namespace

TEST_CASE("trace bookkeeping") {
  OptimizerTrace t;
  t.append({0.0}, 3.0, Phase::Slow, 10);
  t.append({1.0}, 2.0, Phase::Slow, 1);
  t.append({2.0}, 2.5, Phase::Fast, 3);
  t.append({3.0}, 2.0, Phase::Fast, 1);
  CHECK(t.executions() == 15);
  CHECK(t.best_cost() == 2.0);
  CHECK(t.best_theta() == std::vector<double>{1.0});
  CHECK(t.count(Phase::Slow) == 2);
  CHECK(t[2].best_so_far == 2.0);
  CHECK_THROWS_AS(t.append({0.0}, 1.0, Phase::Fast, 0), ArgumentError);
  check_trace_invariants(t);
}

TEST_CASE("expected improvement") {
  CHECK(expected_improvement(1.0, 0.0, 2.0) == doctest::Approx(1.0));
  CHECK(expected_improvement(3.0, 0.0, 2.0) == 0.0);
  // Closed form at z = 0: sigma * phi(0).
  CHECK(expected_improvement(2.0, 4.0, 2.0) == doctest::Approx(2.0 / std::sqrt(2 * kPi)));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 5), v(0, 3);
  for (int i = 0; i < 1000; ++i) CHECK(expected_improvement(u(rng), v(rng), u(rng)) >= 0.0);
}

TEST_CASE("degenerate sigma: lowest posterior mean wins") {
  Eigen::MatrixXd X(3, 1);
  X << 0.1, 0.5, 0.9;
  Eigen::VectorXd y(3);
  y << 1.0, 0.2, 0.8;
  auto s = GpSurrogate::fit(X, y, HyperGrid::single({0.3, 1.0, 1e-6}));
  ProposalOptions opts{256, 0, 0.05};
  auto p = propose_next(s, opts, 5);
  const auto C = proposal_candidates(s, opts, 5);
  const auto post = s.posterior_batch(C);
  for (std::size_t j = 0; j < post.size(); ++j) {
    CHECK(expected_improvement(post[j].mean, post[j].variance, s.best_observed()) <= p.ei);
  }
  CHECK(p.x.size() == 1);
}

TEST_CASE("proposal candidates stay in the unit box and include local perturbations") {
  Eigen::MatrixXd X(2, 3);
  X << 0.5, 0.5, 0.5, 0.9, 0.1, 0.2;
  Eigen::VectorXd y(2);
  y << 0.0, 1.0;
  auto s = GpSurrogate::fit(X, y, HyperGrid::single({0.5, 1.0, 1e-6}));
  ProposalOptions opts{100, 50, 0.05};
  const auto C = proposal_candidates(s, opts, 3);
  CHECK(C.cols() == 150);
  CHECK(C.minCoeff() >= 0.0);
  CHECK(C.maxCoeff() <= 1.0);
  double spread = 0.0;
  for (Eigen::Index j = 100; j < 150; ++j) spread = std::max(spread, (C.col(j).array() - 0.5).abs().maxCoeff());
  CHECK(spread < 0.5);
  CHECK(C == proposal_candidates(s, opts, 3));
}

TEST_CASE("with one observation, proposals move away from it") {
  int moved = 0;
  for (Seed seed = 0; seed < 100; ++seed) {
    Eigen::MatrixXd X(1, 2);
    X << 0.5, 0.5;
    Eigen::VectorXd y(1);
    y << 1.0;
    auto s = GpSurrogate::fit(X, y, HyperGrid::defaults(2, std::vector<double>{1.0}, 1e-6));
    auto p = propose_next(s, {}, seed);
    if ((p.x - X.row(0).transpose()).norm() > 1e-12) ++moved;
  }
  CHECK(moved == 100);
}

TEST_CASE("bo_run") {
  Objective quad = [](std::span<const double> x) { return (x[0] - 0.3) * (x[0] - 0.3); };
  auto box = Box::cube(1, -kPi, kPi);
  BoOptions opts;
  opts.noise_variance = 1e-6;
  auto one = bo_run(quad, box, 1, opts);
  REQUIRE(one.size() == 1);
  CHECK(one[0].theta == std::vector<double>{0.0});
  CHECK(one[0].cost == doctest::Approx(0.09));

  auto t = bo_run(quad, box, 30, opts);
  CHECK(t.size() == 30);
  CHECK(t.back().best_so_far < 0.01);
  check_trace_invariants(t);
  for (const auto& e : t.entries()) CHECK(box.contains(e.theta));
  CHECK(t.executions() == 30);

  // Estimated noise: probes at theta = 0 are counted in iteration 0.
  BoOptions probe;
  auto tp = bo_run(quad, box, 5, probe);
  CHECK(tp[0].circuit_executions == 10);
  CHECK(tp.executions() == 14);

  auto t2 = bo_run(quad, box, 30, opts);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i].theta == t2[i].theta);
  CHECK_THROWS_AS(bo_run(quad, box, 0, opts), ArgumentError);
}

TEST_CASE("bo retune schedule does not change a single-retune run") {
  Objective f = [](std::span<const double> x) { return std::sin(3 * x[0]) + x[1] * x[1]; };
  auto box = Box::cube(2, -kPi, kPi);
  BoOptions a;
  a.noise_variance = 1e-4;
  a.retune_every = 1;
  auto t = bo_run(f, box, 25, a);
  CHECK(t.size() == 25);
  check_trace_invariants(t);
}

TEST_CASE("nelder mead on a quadratic") {
  Objective f = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += (v - 0.5) * (v - 0.5);
    return s;
  };
  auto t = nelder_mead_run(f, std::vector<double>(4, 0.0), 500);
  CHECK(t.best_cost() < 1e-6);
  CHECK(t.size() <= 500);
  check_trace_invariants(t);
  CHECK_THROWS_AS(nelder_mead_run(f, std::vector<double>(4, 0.0), 5), ArgumentError);
}

TEST_CASE("nelder mead on a constant shrinks the simplex") {
  Objective f = [](std::span<const double>) { return 1.0; };
  NelderMead nm(f, std::vector<double>(3, 0.0), 2000);
  nm.step();
  double last = nm.simplex().diameter();
  CHECK(last == doctest::Approx(0.1));
  bool shrank = false;
  for (int i = 0; i < 200; ++i) {
    const auto kind = nm.step();
    CHECK(nm.simplex().sorted());
    CHECK(nm.simplex().values.front() == 1.0);
    if (kind == NmStep::Shrink) {
      CHECK(nm.simplex().diameter() < last);
      shrank = true;
    }
    if (kind == NmStep::Stop) break;
    last = nm.simplex().diameter();
  }
  CHECK(shrank);
}

TEST_CASE("nelder mead best vertex never worsens") {
  Objective rosen = [](std::span<const double> x) {
    return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
  };
  NelderMead nm(rosen, std::vector<double>{-1.2, 1.0}, 1000);
  nm.step();
  double best = nm.simplex().values.front();
  while (nm.step() != NmStep::Stop) {
    CHECK(nm.simplex().sorted());
    CHECK(nm.simplex().values.front() <= best);
    best = nm.simplex().values.front();
  }
  CHECK(best < 1e-6);
}

TEST_CASE("sgd") {
  // Single qubit, target P(1) = 1.
  qsim::Ansatz one(1, {qsim::GateOp::rx(0, 0)}, 1);
  cost::CostSpec spec{{0.0, 1.0}, 1e-8, std::nullopt};
  // The clipped log term scales this gradient by about log(1/eps); 0.1 oscillates.
  auto t = sgd_run(one, std::vector<double>{0.3}, spec, {0.05}, 200, 0);
  CHECK(t.back().cost < 1e-3);
  CHECK(std::abs(t.back().theta[0] - kPi / 2) < 1e-3);
  CHECK(t[4].circuit_executions == 5 * 3);

  cost::CostSpec half{{0.5, 0.5}, 1e-8, std::nullopt};
  auto fixed = sgd_run(one, std::vector<double>{kPi / 4}, half, {0.1}, 5, 0);
  for (const auto& e : fixed.entries()) CHECK(std::abs(e.theta[0] - kPi / 4) < 1e-14);

  auto a = qsim::build_zhu_star_ansatz(2, 2, 1);
  auto ts = sgd_run(a, std::vector<double>(27, 0.1), bas22(1024), {0.05}, 3, 9);
  CHECK(ts.executions() == 3 * (2 * 27 + 1));
  CHECK_THROWS_AS(sgd_run(one, std::vector<double>{0.3}, spec, {0.0}, 2, 0), ArgumentError);
}

TEST_CASE("switch policy") {
  OptimizerTrace t;
  for (int i = 0; i < 45; ++i) t.append({0.0}, 5.0, Phase::Slow, 1);
  CHECK(detect_switch(t, SwitchPolicy::fixed(45), {}));
  OptimizerTrace t399;
  for (int i = 0; i < 399; ++i) t399.append({0.0}, 5.0, Phase::Slow, 1);
  CHECK_FALSE(detect_switch(t399, SwitchPolicy::fixed(400), {}));

  auto ad = SwitchPolicy::auto_drop(30);
  ad.std_threshold = 0.1;
  OptimizerTrace flat;
  for (int i = 0; i < 29; ++i) {
    flat.append({0.0}, 5.0, Phase::Slow, 1);
    CHECK_FALSE(detect_switch(flat, ad, std::vector<double>{5.0, 5.0, 5.0}));
  }
  flat.append({0.0}, 5.0, Phase::Slow, 1);
  CHECK(detect_switch(flat, ad, {}));

  OptimizerTrace drop;
  for (int i = 0; i < 10; ++i) drop.append({0.0}, 5.0 + 0.1 * i, Phase::Slow, 1);
  drop.append({0.0}, 1.0, Phase::Slow, 1);
  CHECK(drop_detected(drop, ad));
  CHECK(detect_switch(drop, ad, std::vector<double>{1.0, 1.01, 0.99}));
  CHECK_FALSE(detect_switch(drop, ad, std::vector<double>{1.0, 2.0, 0.5}));

  auto bad = SwitchPolicy::fixed(50);
  bad.max_slow_iters = 40;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  auto bad2 = SwitchPolicy::auto_drop(30);
  bad2.drop_ratio = 1.0;
  CHECK_THROWS_AS(bad2.validate(), ValidationError);
  bad2 = SwitchPolicy::auto_drop(30);
  bad2.window = 1;
  CHECK_THROWS_AS(bad2.validate(), ValidationError);
}

TEST_CASE("fast and slow with Nelder-Mead") {
  auto a = qsim::build_zhu_star_ansatz(2, 2, 1);
  auto spec = bas22(1024);
  auto t = fast_and_slow_run(a, spec, SwitchPolicy::fixed(45), FastKind::NelderMead, 300, 4);
  check_trace_invariants(t);
  CHECK(t.count(Phase::Slow) == 45);
  CHECK(t.executions() <= 300);
  CHECK(t.executions() >= 299);
  for (std::size_t i = 0; i < 45; ++i) CHECK(t[i].phase == Phase::Slow);
  for (std::size_t i = 45; i < t.size(); ++i) CHECK(t[i].phase == Phase::Fast);
  CHECK(t[0].theta == std::vector<double>(27, 0.0));

  // The fast phase starts at the slow incumbent.
  std::size_t best = 0;
  for (std::size_t i = 1; i < 45; ++i) {
    if (t[i].cost < t[best].cost) best = i;
  }
  CHECK(t[45].theta == t[best].theta);
  CHECK(t.back().best_so_far <= t[44].best_so_far);

  auto again = fast_and_slow_run(a, spec, SwitchPolicy::fixed(45), FastKind::NelderMead, 300, 4);
  REQUIRE(again.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(again[i].cost == t[i].cost);
}

TEST_CASE("fast and slow with SGD, masks and auto switching") {
  auto a = qsim::build_zhu_star_ansatz(2, 2, 1).with_mask(std::vector<std::size_t>{26});
  auto spec = bas22(1024);
  auto t = fast_and_slow_run(a, spec, SwitchPolicy::fixed(20), FastKind::Sgd, 300, 1);
  check_trace_invariants(t);
  CHECK(t.count(Phase::Slow) == 20);
  CHECK(t.executions() <= 300);
  for (const auto& e : t.entries()) CHECK(e.theta[26] == 0.0);

  auto ad = SwitchPolicy::auto_drop(25);
  auto ta = fast_and_slow_run(a, spec, ad, FastKind::NelderMead, 200, 1);
  check_trace_invariants(ta);
  CHECK(ta.count(Phase::Slow) >= 1);
  CHECK(ta.count(Phase::Slow) <= 25);
  CHECK(ta.executions() <= 200);
}

TEST_CASE("circuit objective draws a fresh seed per call") {
  auto a = qsim::build_zhu_star_ansatz(2, 2, 1);
  auto spec = bas22(64);
  CircuitObjective f(a, spec, 3);
  std::vector<double> x(27, 0.4);
  const double c1 = f(x), c2 = f(x);
  CHECK(f.calls() == 2);
  CHECK(c1 != c2);
  CircuitObjective g(a, spec, 3);
  CHECK(g(x) == c1);
}

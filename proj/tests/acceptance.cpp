// Acceptance checks. Prints one PASS/FAIL line per criterion; exits 1 if any fail.
// Optional arguments select criteria by number, e.g. `acceptance 1 2 9`.
#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fastslow/bas.hpp"
#include "fastslow/cost.hpp"
#include "fastslow/gp.hpp"
#include "fastslow/harness.hpp"
#include "fastslow/plateau.hpp"
#include "fastslow/qsim.hpp"

using namespace fastslow;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<std::vector<double>> random_thetas(std::size_t count, std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  std::vector<std::vector<double>> out(count, std::vector<double>(n));
  for (auto& t : out)
    for (auto& x : t) x = u(rng);
  return out;
}

Outcome c1_gradient() {
  const auto t0 = Clock::now();
  const auto ansatz = qsim::build_zhu_star_ansatz(2, 2, 1);
  cost::CostSpec spec{bas::target_distribution(bas::bas_ensemble(2, 2))};
  const double h = 1e-5;
  double worst = 0.0;
  for (auto theta : random_thetas(20, ansatz.n_params(), 1)) {
    const auto g = cost::parameter_shift_gradient(ansatz, theta, spec).gradient;
    for (std::size_t mu = 0; mu < theta.size(); ++mu) {
      auto p = theta, m = theta;
      p[mu] += h;
      m[mu] -= h;
      const double fd = (cost::evaluate_cost(ansatz, p, spec, 0) - cost::evaluate_cost(ansatz, m, spec, 0)) / (2 * h);
      worst = std::max(worst, std::abs(fd - g[mu]));
    }
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  return {worst <= 1e-6 && secs < 10.0 && ansatz.n_params() == 27,
          "params " + std::to_string(ansatz.n_params()) + ", max |shift - fd| " + fmt("%.3e", worst) +
              " (tol 1e-6), " + fmt("%.2f", secs) + " s (limit 10 s)"};
}

Outcome c2_conservation() {
  const auto ansatz = qsim::build_zhu_star_ansatz(2, 2, 1);
  cost::CostSpec spec{bas::target_distribution(bas::bas_ensemble(2, 2))};
  double worst = 0.0;
  for (auto theta : random_thetas(20, ansatz.n_params(), 2)) {
    const auto rep = cost::parameter_shift_gradient(ansatz, theta, spec, 0, Exec::Parallel, true);
    for (const auto& row : rep.dC) {
      double s = 0.0;
      for (double v : row) s += v;
      worst = std::max(worst, std::abs(s));
    }
  }
  return {worst <= 1e-9, "max |sum_i dC_i| " + fmt("%.3e", worst) + " (tol 1e-9)"};
}

// Brute force over every 2^(nm) grid: a pattern is BAS iff all rows are constant or all columns are.
std::set<std::uint64_t> brute_force_bas(int n, int m) {
  std::set<std::uint64_t> out;
  const int bits = n * m;
  for (std::uint64_t g = 0; g < (std::uint64_t{1} << bits); ++g) {
    auto px = [&](int r, int c) { return (g >> (bits - 1 - (r * m + c))) & 1U; };
    bool rows = true, cols = true;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < m; ++c) {
        rows = rows && px(r, c) == px(r, 0);
        cols = cols && px(r, c) == px(0, c);
      }
    if (rows || cols) out.insert(g);
  }
  return out;
}

Outcome c3_combinatorics() {
  bool ok = true;
  std::string bad;
  for (int n = 1; n <= 4; ++n)
    for (int m = 1; m <= 4; ++m) {
      const auto brute = brute_force_bas(n, m);
      const auto e = bas::bas_ensemble(n, m);
      const std::set<std::uint64_t> got(e.patterns.begin(), e.patterns.end());
      const auto formula = (std::size_t{1} << n) + (std::size_t{1} << m) - 2;
      if (got != brute || e.patterns.size() != brute.size() || brute.size() != formula) {
        ok = false;
        bad += " " + std::to_string(n) + "x" + std::to_string(m);
      }
    }
  const auto c22 = bas::bas_ensemble(2, 2).patterns.size();
  const auto c23 = bas::bas_ensemble(2, 3).patterns.size();
  ok = ok && c22 == 6 && c23 == 10;
  return {ok, "BAS(2,2)=" + std::to_string(c22) + " BAS(2,3)=" + std::to_string(c23) +
                  ", all n,m<=4 match brute force" + (bad.empty() ? "" : "; mismatches:" + bad)};
}

Outcome c4_haar() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t checks = 0;
  for (int d : {2, 4, 8}) {
    for (const auto& row : plateau::haar_suite(d, 100000, 2024)) {
      worst = std::max(worst, row.result.z_score);
      ++checks;
    }
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  return {checks == 9 && worst < 4.0 && secs < 60.0,
          std::to_string(checks) + " checks, max z " + fmt("%.3f", worst) + " (limit 4), " + fmt("%.1f", secs) +
              " s (limit 60 s)"};
}

Outcome c5_plateau() {
  const auto t0 = Clock::now();
  plateau::ScanOptions opts;
  opts.qubit_counts = {2, 4, 6, 8};
  opts.n_theta_samples = 200;
  opts.seed = 2024;
  const auto r = plateau::gradient_variance_scan(opts);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  bool dec = r.variances.size() == 4;
  std::string vs;
  for (std::size_t i = 0; i < r.variances.size(); ++i) {
    if (i > 0) dec = dec && r.variances[i] < r.variances[i - 1];
    vs += fmt(" %.4g", r.variances[i]);
  }
  return {dec && r.fit_slope < 0.0 && secs < 600.0,
          "variances" + vs + ", slope " + fmt("%.4f", r.fit_slope) + ", " + fmt("%.1f", secs) +
              " s (limit 600 s)"};
}

harness::ExperimentConfig fig2_config() {
  return harness::parse_config(R"({
    "grid": {"rows": 2, "cols": 2}, "shots": 1024, "repetitions": 5, "budget": 300, "seed": 2022,
    "switch": {"mode": "fixed", "iteration": 45},
    "roster": ["FastSlow-NM", "NM", "SGD"]
  })");
}

std::vector<double> finals(const std::vector<harness::ExperimentRecord>& recs, const std::string& label) {
  std::vector<double> v;
  for (const auto& r : recs)
    if (r.label == label) v.push_back(r.ok() ? r.trace.best_cost() : INFINITY);
  return v;
}

Outcome c6_fig2() {
  const auto t0 = Clock::now();
  const auto cfg = fig2_config();
  const auto recs = harness::run_experiment(cfg);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const double fs_med = median(finals(recs, "FastSlow-NM"));
  const double nm_med = median(finals(recs, "NM"));
  const double sgd_med = median(finals(recs, "SGD"));
  int good = 0;
  std::string per_rep;
  for (const auto& r : recs) {
    if (r.label != "FastSlow-NM") continue;
    const bool g = r.ok() && r.qbas.score >= 0.9 && r.qbas.recall == 1.0;
    good += g;
    per_rep += fmt(" %.3f", r.qbas.score) + "/" + fmt("%.3f", r.qbas.recall);
  }
  const bool cost_ok = fs_med <= nm_med && fs_med <= sgd_med;
  const bool qbas_ok = good >= 4;
  return {cost_ok && qbas_ok && secs < 900.0,
          "median best cost FastSlow-NM " + fmt("%.4f", fs_med) + " NM " + fmt("%.4f", nm_med) + " SGD " +
              fmt("%.4f", sgd_med) + (cost_ok ? " (ordering ok)" : " (ordering violated)") +
              "; FastSlow-NM qBAS/recall" + per_rep + " -> " + std::to_string(good) +
              "/5 with qBAS>=0.9 and recall=1 (need 4); " + fmt("%.1f", secs) + " s (limit 900 s)"};
}

Outcome c7_fig3() {
  const auto t0 = Clock::now();
  const auto cfg = harness::parse_config(R"({
    "grid": {"rows": 2, "cols": 3}, "shots": 1024, "repetitions": 5, "budget": 900, "seed": 2022,
    "switch": {"mode": "fixed", "iteration": 400},
    "roster": ["FastSlow-NM", "BO", "NM"]
  })");
  const auto recs = harness::run_experiment(cfg);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const double fs_med = median(finals(recs, "FastSlow-NM"));
  const double bo_med = median(finals(recs, "BO"));
  const double nm_med = median(finals(recs, "NM"));
  return {fs_med < bo_med && fs_med < nm_med && secs < 3600.0,
          "median best cost FastSlow-NM " + fmt("%.4f", fs_med) + " BO " + fmt("%.4f", bo_med) + " NM " +
              fmt("%.4f", nm_med) + ", " + fmt("%.1f", secs) + " s (limit 3600 s)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome c8_determinism() {
  const auto cfg = fig2_config();
  const auto base = fs::temp_directory_path() / "fastslow_acceptance_c8";
  fs::remove_all(base);
  const auto a = harness::write_results(harness::run_experiment(cfg), cfg, base / "a");
  const auto b = harness::write_results(harness::run_experiment(cfg), cfg, base / "b");
  std::size_t csv = 0, same = 0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i].extension() != ".csv") continue;
    ++csv;
    same += a[i].filename() == b[i].filename() && slurp(a[i]) == slurp(b[i]);
  }
  fs::remove_all(base);
  return {a.size() == b.size() && csv == 15 && same == csv,
          std::to_string(same) + "/" + std::to_string(csv) + " trace CSVs byte-identical"};
}

Outcome c9_gp() {
  std::mt19937_64 rng(2025);
  std::uniform_int_distribution<int> size(1, 20), dim(1, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = size(rng), d = dim(rng);
    Eigen::MatrixXd X(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) X(i, j) = u(rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = std::cos(4.0 * X.row(i).sum()) + 0.3 * u(rng);
    const auto s = optim::GpSurrogate::fit(
        X, y, optim::HyperGrid::defaults(static_cast<std::size_t>(d), std::span(y.data(), y.size()), 1e-4));
    const auto& h = s.hyper();
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) K(i, j) = optim::matern52((X.row(i) - X.row(j)).norm(), h.lengthscale, h.signal_variance);
    K.diagonal().array() += h.noise_variance + s.jitter();
    const Eigen::MatrixXd Kinv = K.inverse();
    const double prior = y.mean();
    const Eigen::VectorXd alpha = Kinv * (y.array() - prior).matrix();
    Eigen::MatrixXd Q(d, 10);
    for (int j = 0; j < 10; ++j)
      for (int i = 0; i < d; ++i) Q(i, j) = j == 0 ? X(0, i) : u(rng);
    const auto post = s.posterior_batch(Q, Exec::Serial);
    for (int j = 0; j < 10; ++j) {
      Eigen::VectorXd k(n);
      for (int i = 0; i < n; ++i) k(i) = optim::matern52((X.row(i).transpose() - Q.col(j)).norm(), h.lengthscale, h.signal_variance);
      const double mean = prior + k.dot(alpha);
      const double var = std::max(0.0, h.signal_variance - k.dot(Kinv * k));
      worst = std::max({worst, std::abs(mean - post[static_cast<std::size_t>(j)].mean),
                        std::abs(var - post[static_cast<std::size_t>(j)].variance)});
    }
  }
  return {worst <= 1e-8, "50 training sets, max |cholesky - dense inverse| " + fmt("%.3e", worst) + " (tol 1e-8)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", c1_gradient},   {"conservation", c2_conservation},
      {"BAS combinatorics", c3_combinatorics}, {"Haar identities", c4_haar},
      {"plateau scaling", c5_plateau},         {"BAS(2,2) protocol", c6_fig2},
      {"BAS(2,3) protocol", c7_fig3},          {"determinism", c8_determinism},
      {"GP oracle equivalence", c9_gp}};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  C" << id << " " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  return failed ? 1 : 0;
}

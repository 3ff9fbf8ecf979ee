#pragma once

// Optimizers for variational circuits: GP Bayesian optimization (the slow,
// global phase), Nelder-Mead and parameter-shift SGD (fast, local phases),
// and the orchestrator that hands the BO incumbent to a local optimizer.
//
// Every optimizer records an OptimizerTrace indexed by iteration, with the
// cumulative number of circuit executions so runs of different families can
// be compared on the same axis.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fastslow/cost.hpp"
#include "fastslow/gp.hpp"
#include "fastslow/qsim.hpp"
#include "fastslow/rng.hpp"

namespace fastslow::optim {

enum class Phase { Slow, Fast };
const char* to_string(Phase p);

struct TraceEntry {
  std::size_t iteration = 0;
  std::vector<double> theta;
  double cost = 0.0;
  Phase phase = Phase::Slow;
  std::uint64_t circuit_executions = 0;  // cumulative
  double best_so_far = 0.0;
};

class OptimizerTrace {
 public:
  /// Appends an entry that consumed `executions` circuit runs (>= 1).
  void append(std::vector<double> theta, double cost, Phase phase, std::uint64_t executions);

  std::span<const TraceEntry> entries() const { return entries_; }
  const TraceEntry& operator[](std::size_t i) const { return entries_[i]; }
  const TraceEntry& back() const { return entries_.back(); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::uint64_t executions() const { return entries_.empty() ? 0 : entries_.back().circuit_executions; }
  double best_cost() const;
  /// Parameters of the first entry that attained best_cost().
  const std::vector<double>& best_theta() const;
  std::size_t best_index() const { return best_index_; }
  std::size_t count(Phase p) const;

 private:
  std::vector<TraceEntry> entries_;
  std::size_t best_index_ = 0;
};

/// Cost oracle. One call is one circuit execution unless stated otherwise.
using Objective = std::function<double(std::span<const double>)>;

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  static Box cube(std::size_t dim, double lo, double hi);
  std::size_t dim() const { return lower.size(); }
  Eigen::VectorXd to_unit(std::span<const double> x) const;
  std::vector<double> from_unit(const Eigen::VectorXd& u) const;
  bool contains(std::span<const double> x) const;
};

// ---------------------------------------------------------------------------
// Bayesian optimization

/// Minimization-form EI; sigma == 0 degenerates to max(y_best - mean, 0).
double expected_improvement(double mean, double variance, double y_best);

struct ProposalOptions {
  std::size_t candidates = 1024;        // uniform in the unit box
  std::size_t local_candidates = 64;    // Gaussian perturbations of the incumbent
  double local_scale = 0.05;            // std of the perturbation, in box widths
};

struct Proposal {
  Eigen::VectorXd x;  // unit box
  double ei = 0.0;
  std::size_t candidate_index = 0;
};

/// Scores every candidate by EI under `s` and returns the argmax (lowest
/// index on ties). Uniform candidates come first, then local ones.
Proposal propose_next(const GpSurrogate& s, const ProposalOptions& opts, Seed seed,
                      Exec exec = Exec::Parallel);

/// Candidate set used by propose_next, exposed for testing.
Eigen::MatrixXd proposal_candidates(const GpSurrogate& s, const ProposalOptions& opts, Seed seed);

struct BoOptions {
  ProposalOptions proposal;
  /// Full hyperparameter grid search every `retune_every` iterations; in
  /// between the surrogate is extended with fixed hyperparameters.
  std::size_t retune_every = 10;
  /// Observation-noise variance; estimated from `noise_probes` repeated
  /// evaluations at the start point when unset.
  std::optional<double> noise_variance;
  std::size_t noise_probes = 10;
  double min_noise_variance = 1e-6;
  Seed seed = 0;
};

/// Steppable GP-EI optimizer starting at theta = 0 (must lie in the box).
class BayesOptimizer {
 public:
  BayesOptimizer(Objective f, Box box, BoOptions opts);

  /// Runs one iteration and appends it to `trace` with the given phase.
  /// Iteration 0 evaluates theta = 0 (plus noise probes).
  void step(OptimizerTrace& trace, Phase phase = Phase::Slow, std::uint64_t extra_executions = 0);

  std::size_t iterations() const { return iterations_; }
  double noise_variance() const { return noise_variance_; }
  const std::optional<GpSurrogate>& surrogate() const { return surrogate_; }
  const Box& box() const { return box_; }

 private:
  Objective f_;
  Box box_;
  BoOptions opts_;
  std::size_t iterations_ = 0;
  double noise_variance_ = 0.0;
  std::vector<Eigen::VectorXd> X_;
  std::vector<double> y_;
  std::optional<GpSurrogate> surrogate_;
};

/// `budget` BO iterations from theta = 0.
OptimizerTrace bo_run(const Objective& f, const Box& box, std::size_t budget,
                      const BoOptions& opts = {});

// ---------------------------------------------------------------------------
// Nelder-Mead

struct NelderMeadOptions {
  double simplex_scale = 0.1;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double min_diameter = 1e-9;
};

struct Simplex {
  std::vector<std::vector<double>> vertices;
  std::vector<double> values;

  /// max distance of any vertex from the best vertex.
  double diameter() const;
  bool sorted() const;
};

enum class NmStep { Init, Reflect, Expand, OutsideContract, InsideContract, Shrink, Stop };

/// Steppable Nelder-Mead with an evaluation budget. Each objective call is
/// reported through `on_eval` as it happens.
class NelderMead {
 public:
  using EvalCallback = std::function<void(std::span<const double> x, double value)>;

  NelderMead(Objective f, std::span<const double> start, std::size_t budget,
             NelderMeadOptions opts = {}, EvalCallback on_eval = {});

  /// First call builds the initial simplex; later calls run one iteration.
  /// Returns Stop when the budget is spent or the simplex has collapsed.
  NmStep step();
  const Simplex& simplex() const { return simplex_; }
  std::size_t evaluations() const { return evaluations_; }

 private:
  std::optional<double> evaluate(std::span<const double> x);
  void sort_simplex();

  Objective f_;
  std::vector<double> start_;
  std::size_t budget_;
  NelderMeadOptions opts_;
  EvalCallback on_eval_;
  std::size_t evaluations_ = 0;
  bool initialized_ = false;
  Simplex simplex_;
};

/// Throws ArgumentError unless budget > dim + 1.
OptimizerTrace nelder_mead_run(const Objective& f, std::span<const double> start,
                               std::size_t budget, const NelderMeadOptions& opts = {});

// ---------------------------------------------------------------------------
// Parameter-shift SGD

struct SgdOptions {
  double learning_rate = 0.05;
};

/// `iterations` steps of theta <- theta - lr * grad; each step records the
/// cost at the pre-update theta and 2 * n_free + 1 executions.
OptimizerTrace sgd_run(const qsim::Ansatz& ansatz, std::span<const double> theta_init,
                       const cost::CostSpec& spec, const SgdOptions& opts,
                       std::size_t iterations, Seed seed);

// ---------------------------------------------------------------------------
// Switching and the fast-and-slow protocol

struct SwitchPolicy {
  enum class Mode { FixedIteration, AutoDrop };

  Mode mode = Mode::FixedIteration;
  std::size_t fixed_iteration = 45;
  std::size_t window = 10;
  double drop_ratio = 0.5;
  /// Batch-std threshold; when unset it is 0.1 * std of the first `window`
  /// trace costs.
  std::optional<double> std_threshold;
  std::size_t batches = 5;
  std::size_t max_slow_iters = 45;

  static SwitchPolicy fixed(std::size_t k);
  static SwitchPolicy auto_drop(std::size_t max_slow_iters);
  /// Throws ValidationError on inconsistent fields.
  void validate() const;
};

/// True when the cost has dropped below drop_ratio * median(first window).
bool drop_detected(const OptimizerTrace& trace, const SwitchPolicy& policy);

double switch_std_threshold(const OptimizerTrace& trace, const SwitchPolicy& policy);

/// Decides whether the slow phase should hand over, with the current
/// iteration taken to be trace.size() (number of completed slow iterations).
bool detect_switch(const OptimizerTrace& trace, const SwitchPolicy& policy,
                   std::span<const double> batch_costs);

enum class FastKind { NelderMead, Sgd };

struct FastSlowOptions {
  BoOptions bo;
  NelderMeadOptions nm;
  SgdOptions sgd;
  double box_half_width = 3.141592653589793;
};

/// Evaluates the sampled (or exact) KL cost of an ansatz over its free
/// parameters, drawing a fresh seed for every call.
class CircuitObjective {
 public:
  CircuitObjective(const qsim::Ansatz& ansatz, const cost::CostSpec& spec, Seed seed);
  double operator()(std::span<const double> free_theta);
  std::uint64_t calls() const { return calls_; }

 private:
  const qsim::Ansatz* ansatz_;
  const cost::CostSpec* spec_;
  Seed seed_;
  std::uint64_t calls_ = 0;
};

/// Slow BO phase from theta = 0 until detect_switch fires, then the fast
/// optimizer from the BO incumbent. `budget` counts circuit executions.
/// Trace thetas are full-length parameter vectors.
OptimizerTrace fast_and_slow_run(const qsim::Ansatz& ansatz, const cost::CostSpec& spec,
                                 const SwitchPolicy& policy, FastKind fast,
                                 std::uint64_t budget, Seed seed,
                                 const FastSlowOptions& opts = {});

}  // namespace fastslow::optim

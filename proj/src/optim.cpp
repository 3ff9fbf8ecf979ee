#include "fastslow/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "fastslow/error.hpp"

namespace fastslow::optim {

const char* to_string(Phase p) { return p == Phase::Slow ? "slow" : "fast"; }

void OptimizerTrace::append(std::vector<double> theta, double cost, Phase phase,
                            std::uint64_t executions) {
  if (executions == 0) throw ArgumentError("trace: an entry must consume at least one execution");
  TraceEntry e;
  e.iteration = entries_.size();
  e.theta = std::move(theta);
  e.cost = cost;
  e.phase = phase;
  e.circuit_executions = this->executions() + executions;
  if (entries_.empty() || cost < entries_[best_index_].cost) best_index_ = entries_.size();
  e.best_so_far = entries_.empty() ? cost : std::min(cost, entries_.back().best_so_far);
  entries_.push_back(std::move(e));
}

double OptimizerTrace::best_cost() const {
  if (entries_.empty()) throw ArgumentError("trace: empty");
  return entries_[best_index_].cost;
}

const std::vector<double>& OptimizerTrace::best_theta() const {
  if (entries_.empty()) throw ArgumentError("trace: empty");
  return entries_[best_index_].theta;
}

std::size_t OptimizerTrace::count(Phase p) const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [p](const TraceEntry& e) { return e.phase == p; }));
}

Box Box::cube(std::size_t dim, double lo, double hi) {
  if (!(hi > lo)) throw ArgumentError("box: upper bound must exceed lower bound");
  return Box{std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
}

Eigen::VectorXd Box::to_unit(std::span<const double> x) const {
  if (x.size() != dim()) throw DimensionError("box: dimension mismatch");
  Eigen::VectorXd u(static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < dim(); ++i) {
    u(static_cast<Eigen::Index>(i)) = (x[i] - lower[i]) / (upper[i] - lower[i]);
  }
  return u;
}

std::vector<double> Box::from_unit(const Eigen::VectorXd& u) const {
  if (static_cast<std::size_t>(u.size()) != dim()) throw DimensionError("box: dimension mismatch");
  std::vector<double> x(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    const double t = std::clamp(u(static_cast<Eigen::Index>(i)), 0.0, 1.0);
    x[i] = lower[i] + t * (upper[i] - lower[i]);
  }
  return x;
}

bool Box::contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i) {
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

double expected_improvement(double mean, double variance, double y_best) {
  const double improvement = y_best - mean;
  const double sigma = std::sqrt(std::max(variance, 0.0));
  if (sigma <= 1e-300) return std::max(improvement, 0.0);
  const double z = improvement / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(improvement * cdf + sigma * pdf, 0.0);
}

Eigen::MatrixXd proposal_candidates(const GpSurrogate& s, const ProposalOptions& opts, Seed seed) {
  const auto d = static_cast<Eigen::Index>(s.dim());
  const auto n_uniform = static_cast<Eigen::Index>(opts.candidates);
  const auto n_local = static_cast<Eigen::Index>(opts.local_candidates);
  Eigen::MatrixXd C(d, n_uniform + n_local);

  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (Eigen::Index j = 0; j < n_uniform; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) C(i, j) = uniform(rng);
  }
  const Eigen::VectorXd incumbent = s.inputs().row(s.argmin_observed()).transpose();
  std::normal_distribution<double> normal(0.0, opts.local_scale);
  for (Eigen::Index j = n_uniform; j < n_uniform + n_local; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) C(i, j) = std::clamp(incumbent(i) + normal(rng), 0.0, 1.0);
  }
  return C;
}

Proposal propose_next(const GpSurrogate& s, const ProposalOptions& opts, Seed seed, Exec exec) {
  if (opts.candidates + opts.local_candidates == 0) {
    throw ArgumentError("propose_next: no candidates requested");
  }
  const Eigen::MatrixXd C = proposal_candidates(s, opts, seed);
  const auto post = s.posterior_batch(C, exec);
  const double y_best = s.best_observed();
  Proposal best;
  best.ei = -1.0;
  for (std::size_t j = 0; j < post.size(); ++j) {
    const double ei = expected_improvement(post[j].mean, post[j].variance, y_best);
    if (ei > best.ei) {
      best.ei = ei;
      best.candidate_index = j;
    }
  }
  best.x = C.col(static_cast<Eigen::Index>(best.candidate_index));
  return best;
}

BayesOptimizer::BayesOptimizer(Objective f, Box box, BoOptions opts)
    : f_(std::move(f)), box_(std::move(box)), opts_(std::move(opts)) {
  if (box_.dim() == 0) throw ArgumentError("bo: empty search box");
  if (opts_.retune_every == 0) throw ArgumentError("bo: retune_every must be >= 1");
}

void BayesOptimizer::step(OptimizerTrace& trace, Phase phase, std::uint64_t extra_executions) {
  if (iterations_ == 0) {
    const std::vector<double> origin(box_.dim(), 0.0);
    if (!box_.contains(origin)) throw ArgumentError("bo: theta = 0 must lie inside the box");
    const double y0 = f_(origin);
    std::uint64_t executions = 1 + extra_executions;
    if (opts_.noise_variance) {
      noise_variance_ = *opts_.noise_variance;
    } else {
      std::vector<double> probes{y0};
      for (std::size_t k = 1; k < opts_.noise_probes; ++k) probes.push_back(f_(origin));
      executions += probes.size() - 1;
      double var = 0.0;
      if (probes.size() >= 2) {
        const double m = std::accumulate(probes.begin(), probes.end(), 0.0) / probes.size();
        for (double v : probes) var += (v - m) * (v - m);
        var /= static_cast<double>(probes.size() - 1);
      }
      noise_variance_ = var;
    }
    noise_variance_ = std::max(noise_variance_, opts_.min_noise_variance);
    X_.push_back(box_.to_unit(origin));
    y_.push_back(y0);
    trace.append(origin, y0, phase, executions);
    ++iterations_;
    return;
  }

  if (!surrogate_ || iterations_ % opts_.retune_every == 0) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(X_.size()), static_cast<Eigen::Index>(box_.dim()));
    for (std::size_t i = 0; i < X_.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = X_[i].transpose();
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(y_.data(), static_cast<Eigen::Index>(y_.size()));
    surrogate_ = GpSurrogate::fit(X, y, HyperGrid::defaults(box_.dim(), y_, noise_variance_));
  } else {
    for (std::size_t i = surrogate_->size(); i < X_.size(); ++i) {
      surrogate_->add_observation(X_[i], y_[i]);
    }
  }

  const auto proposal = propose_next(*surrogate_, opts_.proposal, derive_seed(opts_.seed, {iterations_}));
  auto theta = box_.from_unit(proposal.x);
  const double y = f_(theta);
  X_.push_back(box_.to_unit(theta));
  y_.push_back(y);
  trace.append(std::move(theta), y, phase, 1 + extra_executions);
  ++iterations_;
}

OptimizerTrace bo_run(const Objective& f, const Box& box, std::size_t budget, const BoOptions& opts) {
  if (budget < 1) throw ArgumentError("bo_run: budget must be >= 1");
  BayesOptimizer bo(f, box, opts);
  OptimizerTrace trace;
  for (std::size_t it = 0; it < budget; ++it) bo.step(trace, Phase::Slow);
  return trace;
}

// ---------------------------------------------------------------------------

double Simplex::diameter() const {
  double d = 0.0;
  for (std::size_t i = 1; i < vertices.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < vertices[0].size(); ++k) {
      const double diff = vertices[i][k] - vertices[0][k];
      acc += diff * diff;
    }
    d = std::max(d, std::sqrt(acc));
  }
  return d;
}

bool Simplex::sorted() const { return std::is_sorted(values.begin(), values.end()); }

NelderMead::NelderMead(Objective f, std::span<const double> start, std::size_t budget,
                       NelderMeadOptions opts, EvalCallback on_eval)
    : f_(std::move(f)),
      start_(start.begin(), start.end()),
      budget_(budget),
      opts_(opts),
      on_eval_(std::move(on_eval)) {
  if (start_.empty()) throw ArgumentError("nelder_mead: empty start point");
  if (!(opts_.simplex_scale != 0.0)) throw ArgumentError("nelder_mead: simplex_scale must be nonzero");
}

std::optional<double> NelderMead::evaluate(std::span<const double> x) {
  if (evaluations_ >= budget_) return std::nullopt;
  ++evaluations_;
  const double v = f_(x);
  if (on_eval_) on_eval_(x, v);
  return v;
}

void NelderMead::sort_simplex() {
  const std::size_t n = simplex_.values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return simplex_.values[a] < simplex_.values[b]; });
  Simplex s;
  s.vertices.reserve(n);
  s.values.reserve(n);
  for (std::size_t i : order) {
    s.vertices.push_back(std::move(simplex_.vertices[i]));
    s.values.push_back(simplex_.values[i]);
  }
  simplex_ = std::move(s);
}

NmStep NelderMead::step() {
  const std::size_t n = start_.size();
  if (!initialized_) {
    initialized_ = true;
    for (std::size_t i = 0; i <= n; ++i) {
      std::vector<double> v = start_;
      if (i > 0) v[i - 1] += opts_.simplex_scale;
      const auto fv = evaluate(v);
      if (!fv) break;
      simplex_.vertices.push_back(std::move(v));
      simplex_.values.push_back(*fv);
    }
    sort_simplex();
    return simplex_.vertices.size() == n + 1 ? NmStep::Init : NmStep::Stop;
  }
  if (simplex_.vertices.size() != n + 1) return NmStep::Stop;
  if (simplex_.diameter() < opts_.min_diameter) return NmStep::Stop;

  auto& V = simplex_.vertices;
  auto& F = simplex_.values;
  std::vector<double> centroid(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) centroid[k] += V[i][k];
  }
  for (double& c : centroid) c /= static_cast<double>(n);

  auto along = [&](const std::vector<double>& from, double t) {
    // centroid + t * (from - centroid)
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = centroid[k] + t * (from[k] - centroid[k]);
    return x;
  };
  auto replace_worst = [&](std::vector<double> x, double fx, NmStep kind) {
    V[n] = std::move(x);
    F[n] = fx;
    sort_simplex();
    return kind;
  };

  auto xr = along(V[n], -opts_.reflection);
  const auto fr = evaluate(xr);
  if (!fr) return NmStep::Stop;

  if (*fr < F[0]) {
    auto xe = along(xr, opts_.expansion);
    const auto fe = evaluate(xe);
    if (fe && *fe < *fr) return replace_worst(std::move(xe), *fe, NmStep::Expand);
    replace_worst(std::move(xr), *fr, NmStep::Reflect);
    return fe ? NmStep::Reflect : NmStep::Stop;
  }
  if (*fr < F[n - 1]) return replace_worst(std::move(xr), *fr, NmStep::Reflect);

  if (*fr < F[n]) {
    auto xc = along(xr, opts_.contraction);
    const auto fc = evaluate(xc);
    if (!fc) return NmStep::Stop;
    if (*fc <= *fr) return replace_worst(std::move(xc), *fc, NmStep::OutsideContract);
  } else {
    auto xc = along(V[n], opts_.contraction);
    const auto fc = evaluate(xc);
    if (!fc) return NmStep::Stop;
    if (*fc < F[n]) return replace_worst(std::move(xc), *fc, NmStep::InsideContract);
  }

  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t k = 0; k < n; ++k) V[i][k] = V[0][k] + opts_.shrink * (V[i][k] - V[0][k]);
    const auto fi = evaluate(V[i]);
    if (!fi) {
      // Out of budget mid-shrink: vertices past i keep stale values, so stop.
      sort_simplex();
      return NmStep::Stop;
    }
    F[i] = *fi;
  }
  sort_simplex();
  return NmStep::Shrink;
}

OptimizerTrace nelder_mead_run(const Objective& f, std::span<const double> start, std::size_t budget,
                               const NelderMeadOptions& opts) {
  if (budget <= start.size() + 1) {
    throw ArgumentError("nelder_mead_run: budget must exceed n_params + 1");
  }
  OptimizerTrace trace;
  NelderMead nm(f, start, budget, opts, [&](std::span<const double> x, double v) {
    trace.append({x.begin(), x.end()}, v, Phase::Fast, 1);
  });
  while (nm.step() != NmStep::Stop) {
  }
  return trace;
}

// ---------------------------------------------------------------------------

namespace {

void sgd_into(OptimizerTrace& trace, const qsim::Ansatz& ansatz, std::vector<double> theta,
              const cost::CostSpec& spec, const SgdOptions& opts, std::size_t iterations, Seed seed,
              Phase phase) {
  if (!(opts.learning_rate > 0.0)) throw ArgumentError("sgd: learning rate must be > 0");
  for (std::size_t k = 0; k < iterations; ++k) {
    const Seed s = derive_seed(seed, {k});
    const auto rep = cost::parameter_shift_gradient(ansatz, theta, spec, s);
    // Same seed as the gradient's unshifted execution, so this is that measurement.
    const double c = cost::kl_divergence(cost::measured_distribution(ansatz, theta, spec, s),
                                         spec.target, spec.clip_epsilon);
    trace.append(theta, c, phase, rep.evaluations_used);
    for (std::size_t p = 0; p < theta.size(); ++p) theta[p] -= opts.learning_rate * rep.gradient[p];
  }
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

OptimizerTrace sgd_run(const qsim::Ansatz& ansatz, std::span<const double> theta_init,
                       const cost::CostSpec& spec, const SgdOptions& opts, std::size_t iterations,
                       Seed seed) {
  if (theta_init.size() != ansatz.n_params()) throw DimensionError("sgd: theta length mismatch");
  OptimizerTrace trace;
  sgd_into(trace, ansatz, {theta_init.begin(), theta_init.end()}, spec, opts, iterations, seed,
           Phase::Fast);
  return trace;
}

// ---------------------------------------------------------------------------

SwitchPolicy SwitchPolicy::fixed(std::size_t k) {
  SwitchPolicy p;
  p.mode = Mode::FixedIteration;
  p.fixed_iteration = k;
  p.max_slow_iters = k;
  return p;
}

SwitchPolicy SwitchPolicy::auto_drop(std::size_t max_slow_iters) {
  SwitchPolicy p;
  p.mode = Mode::AutoDrop;
  p.max_slow_iters = max_slow_iters;
  return p;
}

void SwitchPolicy::validate() const {
  if (max_slow_iters < 1) throw ValidationError("switch: max_slow_iters must be >= 1");
  if (mode == Mode::FixedIteration) {
    if (fixed_iteration > max_slow_iters) {
      throw ValidationError("switch: fixed iteration exceeds max_slow_iters");
    }
    return;
  }
  if (window < 2) throw ValidationError("switch: window must be >= 2");
  if (!(drop_ratio > 0.0 && drop_ratio < 1.0)) throw ValidationError("switch: drop_ratio must be in (0, 1)");
  if (batches < 2) throw ValidationError("switch: batches must be >= 2");
  if (std_threshold && !(*std_threshold > 0.0)) throw ValidationError("switch: std_threshold must be > 0");
}

bool drop_detected(const OptimizerTrace& trace, const SwitchPolicy& policy) {
  if (trace.size() < policy.window) return false;
  std::vector<double> head;
  for (std::size_t i = 0; i < policy.window; ++i) head.push_back(trace[i].cost);
  std::sort(head.begin(), head.end());
  const std::size_t w = head.size();
  const double median = w % 2 ? head[w / 2] : 0.5 * (head[w / 2 - 1] + head[w / 2]);
  return trace.back().best_so_far <= policy.drop_ratio * median;
}

double switch_std_threshold(const OptimizerTrace& trace, const SwitchPolicy& policy) {
  if (policy.std_threshold) return *policy.std_threshold;
  std::vector<double> head;
  for (std::size_t i = 0; i < std::min(policy.window, trace.size()); ++i) head.push_back(trace[i].cost);
  return 0.1 * sample_std(head);
}

bool detect_switch(const OptimizerTrace& trace, const SwitchPolicy& policy,
                   std::span<const double> batch_costs) {
  const std::size_t iteration = trace.size();
  if (policy.mode == SwitchPolicy::Mode::FixedIteration) return iteration >= policy.fixed_iteration;
  if (iteration >= policy.max_slow_iters) return true;
  if (!drop_detected(trace, policy)) return false;
  if (batch_costs.size() < 2) return false;
  return sample_std(batch_costs) < switch_std_threshold(trace, policy);
}

// ---------------------------------------------------------------------------

CircuitObjective::CircuitObjective(const qsim::Ansatz& ansatz, const cost::CostSpec& spec, Seed seed)
    : ansatz_(&ansatz), spec_(&spec), seed_(seed) {}

double CircuitObjective::operator()(std::span<const double> free_theta) {
  const auto theta = ansatz_->expand(free_theta);
  return cost::evaluate_cost(*ansatz_, theta, *spec_, derive_seed(seed_, {calls_++}));
}

OptimizerTrace fast_and_slow_run(const qsim::Ansatz& ansatz, const cost::CostSpec& spec,
                                 const SwitchPolicy& policy, FastKind fast, std::uint64_t budget,
                                 Seed seed, const FastSlowOptions& opts) {
  policy.validate();
  spec.validate();
  const std::size_t dim = ansatz.n_free();
  if (dim == 0) throw ArgumentError("fast_and_slow: every parameter is masked");

  CircuitObjective objective(ansatz, spec, derive_seed(seed, {1}));
  Objective f = [&objective](std::span<const double> x) { return objective(x); };
  BoOptions bo_opts = opts.bo;
  bo_opts.seed = derive_seed(seed, {2});
  BayesOptimizer bo(f, Box::cube(dim, -opts.box_half_width, opts.box_half_width), bo_opts);

  OptimizerTrace slow;  // free coordinates
  OptimizerTrace trace;
  std::uint64_t pending = 0;
  const std::uint64_t first_cost = opts.bo.noise_variance ? 1 : std::max<std::size_t>(1, opts.bo.noise_probes);

  while (true) {
    std::vector<double> batch;
    if (policy.mode == SwitchPolicy::Mode::AutoDrop && slow.size() < policy.max_slow_iters &&
        drop_detected(slow, policy)) {
      if (trace.executions() + pending + policy.batches > budget) break;
      for (std::size_t b = 0; b < policy.batches; ++b) batch.push_back(f(slow.best_theta()));
      pending += policy.batches;
    }
    if (detect_switch(slow, policy, batch)) break;
    const std::uint64_t need = (slow.empty() ? first_cost : 1) + pending;
    if (trace.executions() + need > budget) return trace;
    bo.step(slow, Phase::Slow, pending);
    pending = 0;
    const auto& e = slow.back();
    trace.append(ansatz.expand(e.theta), e.cost, Phase::Slow,
                 e.circuit_executions - (slow.size() > 1 ? slow[slow.size() - 2].circuit_executions : 0));
  }

  if (slow.empty()) return trace;
  const std::vector<double> start = slow.best_theta();
  const std::uint64_t used = trace.executions() + pending;
  if (used >= budget) return trace;
  const std::uint64_t remaining = budget - used;

  if (fast == FastKind::NelderMead) {
    bool first = true;
    NelderMead nm(f, start, remaining, opts.nm, [&](std::span<const double> x, double v) {
      trace.append(ansatz.expand(x), v, Phase::Fast, first ? 1 + pending : 1);
      first = false;
    });
    while (nm.step() != NmStep::Stop) {
    }
  } else {
    std::uint64_t per_step = 1;
    for (std::size_t mu : ansatz.free_params()) per_step += 2 * ansatz.gates_using(mu).size();
    const std::size_t steps = static_cast<std::size_t>(remaining / per_step);
    OptimizerTrace local;
    sgd_into(local, ansatz, ansatz.expand(start), spec, opts.sgd, steps, derive_seed(seed, {3}), Phase::Fast);
    for (std::size_t i = 0; i < local.size(); ++i) {
      const auto& e = local[i];
      const std::uint64_t prev = i == 0 ? 0 : local[i - 1].circuit_executions;
      trace.append(e.theta, e.cost, Phase::Fast, e.circuit_executions - prev + (i == 0 ? pending : 0));
    }
  }
  return trace;
}

}  // namespace fastslow::optim

#include "fastslow/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fastslow/cost.hpp"
#include "fastslow/error.hpp"
#include "fastslow/qsim.hpp"

namespace fastslow::harness {

using nlohmann::json;

const char* to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::NM:
      return "NM";
    case OptimizerKind::SGD:
      return "SGD";
    case OptimizerKind::BO:
      return "BO";
    case OptimizerKind::FastSlowNM:
      return "FastSlow-NM";
    case OptimizerKind::FastSlowSGD:
      return "FastSlow-SGD";
  }
  return "?";
}

OptimizerKind parse_optimizer_kind(const std::string& name) {
  for (auto k : {OptimizerKind::NM, OptimizerKind::SGD, OptimizerKind::BO, OptimizerKind::FastSlowNM,
                 OptimizerKind::FastSlowSGD}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("roster.kind: unknown optimizer '" + name +
                    "' (expected NM, SGD, BO, FastSlow-NM or FastSlow-SGD)");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  if (n_rows < 1 || n_cols < 1) throw ConfigError("grid: rows and cols must be >= 1");
  if (n_rows * n_cols < 2) throw ConfigError("grid: need at least 2 pixels");
  if (n_rows * n_cols > qsim::kMaxQubits) throw ConfigError("grid: too many pixels");
  if (layers < 1) throw ConfigError("ansatz.layers: must be >= 1");
  const std::size_t n = static_cast<std::size_t>(n_rows * n_cols);
  const std::size_t n_params = static_cast<std::size_t>(layers) * (4 * n - 1) + 3 * n;
  for (std::size_t p : mask) {
    if (p >= n_params) throw ConfigError("ansatz.mask: index " + std::to_string(p) + " out of range");
  }
  if (shots < 1) throw ConfigError("shots: must be >= 1");
  if (repetitions < 1) throw ConfigError("repetitions: must be >= 1");
  if (budget < 1) throw ConfigError("budget: must be >= 1");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ConfigError("clip_epsilon: must lie in (0, 1)");
  if (workers < 1) throw ConfigError("workers: must be >= 1");
  if (roster.empty()) throw ConfigError("roster: must list at least one optimizer");
  std::set<std::string> labels;
  for (const auto& e : roster) {
    if (e.label.empty()) throw ConfigError("roster.label: must be non-empty");
    if (!labels.insert(e.label).second) throw ConfigError("roster.label: duplicate label '" + e.label + "'");
    if (!(e.learning_rate > 0.0)) throw ConfigError("roster.learning_rate: must be > 0");
    if (e.simplex_scale == 0.0) throw ConfigError("roster.simplex_scale: must be nonzero");
    if (e.retune_every < 1) throw ConfigError("roster.retune_every: must be >= 1");
    if (e.candidates + e.local_candidates == 0) throw ConfigError("roster.candidates: need at least one candidate");
  }
  try {
    policy.validate();
  } catch (const ValidationError& ex) {
    throw ConfigError(std::string("switch: ") + ex.what());
  }
}

namespace {

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* a : allowed) known = known || it.key() == a;
    if (!known) {
      throw ConfigError("unknown key '" + it.key() + "'" + (where.empty() ? "" : " in " + where));
    }
  }
}

template <class T>
T get_field(const json& obj, const char* key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError((where.empty() ? std::string() : where + ".") + key + ": wrong type");
  }
}

std::uint64_t get_count(const json& obj, const char* key, const std::string& where, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  const std::string name = (where.empty() ? std::string() : where + ".") + key;
  if (v.is_number_integer() && v.get<std::int64_t>() < 0) throw ConfigError(name + ": must be >= 0");
  if (!v.is_number_unsigned() && !v.is_number_integer()) throw ConfigError(name + ": must be an integer");
  return v.get<std::uint64_t>();
}

const json& require_object(const json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_object()) throw ConfigError(std::string(key) + ": must be an object");
  return v;
}

RosterEntry parse_roster_entry(const json& v) {
  RosterEntry e;
  if (v.is_string()) {
    e.kind = parse_optimizer_kind(v.get<std::string>());
    e.label = v.get<std::string>();
    return e;
  }
  if (!v.is_object()) throw ConfigError("roster: entries must be strings or objects");
  reject_unknown(v, "roster entry",
                 {"kind", "label", "simplex_scale", "learning_rate", "candidates", "local_candidates",
                  "retune_every"});
  if (!v.contains("kind")) throw ConfigError("roster.kind: missing");
  e.kind = parse_optimizer_kind(get_field<std::string>(v, "kind", "roster", ""));
  e.label = get_field<std::string>(v, "label", "roster", to_string(e.kind));
  e.simplex_scale = get_field<double>(v, "simplex_scale", "roster", e.simplex_scale);
  e.learning_rate = get_field<double>(v, "learning_rate", "roster", e.learning_rate);
  e.candidates = get_count(v, "candidates", "roster", e.candidates);
  e.local_candidates = get_count(v, "local_candidates", "roster", e.local_candidates);
  e.retune_every = get_count(v, "retune_every", "roster", e.retune_every);
  return e;
}

optim::SwitchPolicy parse_switch(const json& v) {
  reject_unknown(v, "switch",
                 {"mode", "iteration", "max_slow_iters", "window", "drop_ratio", "std_threshold", "batches"});
  const auto mode = get_field<std::string>(v, "mode", "switch", "fixed");
  optim::SwitchPolicy p;
  if (mode == "fixed") {
    p = optim::SwitchPolicy::fixed(get_count(v, "iteration", "switch", 45));
    p.max_slow_iters = get_count(v, "max_slow_iters", "switch", p.fixed_iteration);
  } else if (mode == "auto") {
    p = optim::SwitchPolicy::auto_drop(get_count(v, "max_slow_iters", "switch", 45));
    p.window = get_count(v, "window", "switch", p.window);
    p.drop_ratio = get_field<double>(v, "drop_ratio", "switch", p.drop_ratio);
    p.batches = get_count(v, "batches", "switch", p.batches);
    if (v.contains("std_threshold")) p.std_threshold = get_field<double>(v, "std_threshold", "switch", 0.0);
  } else {
    throw ConfigError("switch.mode: expected 'fixed' or 'auto', got '" + mode + "'");
  }
  return p;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  const auto end = text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size()));
  return 1 + static_cast<std::size_t>(std::count(text.begin(), end, '\n'));
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error at line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown(root, "",
                 {"grid", "ansatz", "shots", "repetitions", "roster", "switch", "budget", "seed",
                  "clip_epsilon", "output_dir", "workers", "checkpoints"});

  ExperimentConfig c;
  if (root.contains("grid")) {
    const auto& g = require_object(root, "grid");
    reject_unknown(g, "grid", {"rows", "cols"});
    c.n_rows = static_cast<int>(get_count(g, "rows", "grid", 2));
    c.n_cols = static_cast<int>(get_count(g, "cols", "grid", 2));
  }
  if (root.contains("ansatz")) {
    const auto& a = require_object(root, "ansatz");
    reject_unknown(a, "ansatz", {"layers", "mask"});
    c.layers = static_cast<int>(get_count(a, "layers", "ansatz", 1));
    c.mask = get_field<std::vector<std::size_t>>(a, "mask", "ansatz", {});
  }
  c.shots = get_count(root, "shots", "", c.shots);
  c.repetitions = get_count(root, "repetitions", "", c.repetitions);
  c.budget = get_count(root, "budget", "", c.budget);
  c.seed = get_count(root, "seed", "", c.seed);
  c.clip_epsilon = get_field<double>(root, "clip_epsilon", "", c.clip_epsilon);
  c.output_dir = get_field<std::string>(root, "output_dir", "", c.output_dir);
  c.workers = get_count(root, "workers", "", c.workers);
  c.checkpoints = get_field<std::vector<std::size_t>>(root, "checkpoints", "", {});
  if (root.contains("switch")) c.policy = parse_switch(require_object(root, "switch"));
  if (!root.contains("roster")) throw ConfigError("roster: missing");
  if (!root.at("roster").is_array()) throw ConfigError("roster: must be an array");
  for (const auto& v : root.at("roster")) c.roster.push_back(parse_roster_entry(v));
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["grid"] = {{"rows", c.n_rows}, {"cols", c.n_cols}};
  j["ansatz"] = {{"layers", c.layers}, {"mask", c.mask}};
  j["shots"] = c.shots;
  j["repetitions"] = c.repetitions;
  j["budget"] = c.budget;
  j["seed"] = c.seed;
  j["clip_epsilon"] = c.clip_epsilon;
  j["output_dir"] = c.output_dir;
  j["workers"] = c.workers;
  j["checkpoints"] = c.checkpoints;
  json sw;
  if (c.policy.mode == optim::SwitchPolicy::Mode::FixedIteration) {
    sw = {{"mode", "fixed"}, {"iteration", c.policy.fixed_iteration}, {"max_slow_iters", c.policy.max_slow_iters}};
  } else {
    sw = {{"mode", "auto"},          {"max_slow_iters", c.policy.max_slow_iters},
          {"window", c.policy.window}, {"drop_ratio", c.policy.drop_ratio},
          {"batches", c.policy.batches}};
    if (c.policy.std_threshold) sw["std_threshold"] = *c.policy.std_threshold;
  }
  j["switch"] = sw;
  j["roster"] = json::array();
  for (const auto& e : c.roster) {
    j["roster"].push_back({{"kind", to_string(e.kind)},
                           {"label", e.label},
                           {"simplex_scale", e.simplex_scale},
                           {"learning_rate", e.learning_rate},
                           {"candidates", e.candidates},
                           {"local_candidates", e.local_candidates},
                           {"retune_every", e.retune_every}});
  }
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Runs

Seed run_seed(Seed base, const std::string& label, std::size_t repetition) {
  return derive_seed(base, {hash_label(label), repetition});
}

namespace {

optim::OptimizerTrace expand_trace(const optim::OptimizerTrace& t, const qsim::Ansatz& ansatz) {
  optim::OptimizerTrace out;
  std::uint64_t prev = 0;
  for (const auto& e : t.entries()) {
    out.append(ansatz.expand(e.theta), e.cost, e.phase, e.circuit_executions - prev);
    prev = e.circuit_executions;
  }
  return out;
}

std::vector<double> random_start(std::size_t dim, double half_width, Seed seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-half_width, half_width);
  std::vector<double> x(dim);
  for (double& v : x) v = u(rng);
  return x;
}

}  // namespace

ExperimentRecord run_single(const ExperimentConfig& config, const RosterEntry& entry, std::size_t repetition) {
  ExperimentRecord rec;
  rec.label = entry.label;
  rec.kind = entry.kind;
  rec.repetition = repetition;
  rec.seed = run_seed(config.seed, entry.label, repetition);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto ensemble = bas::bas_ensemble(config.n_rows, config.n_cols);
    const auto ansatz =
        qsim::build_zhu_star_ansatz(config.n_rows, config.n_cols, config.layers).with_mask(config.mask);
    cost::CostSpec spec{bas::target_distribution(ensemble), config.clip_epsilon, config.shots};

    optim::FastSlowOptions fs;
    fs.nm.simplex_scale = entry.simplex_scale;
    fs.sgd.learning_rate = entry.learning_rate;
    fs.bo.proposal.candidates = entry.candidates;
    fs.bo.proposal.local_candidates = entry.local_candidates;
    fs.bo.retune_every = entry.retune_every;
    const double w = fs.box_half_width;
    const std::size_t dim = ansatz.n_free();

    switch (entry.kind) {
      case OptimizerKind::NM: {
        optim::CircuitObjective obj(ansatz, spec, derive_seed(rec.seed, {1}));
        auto f = [&obj](std::span<const double> x) { return obj(x); };
        const auto start = random_start(dim, w, derive_seed(rec.seed, {0}));
        rec.trace = expand_trace(optim::nelder_mead_run(f, start, config.budget, fs.nm), ansatz);
        break;
      }
      case OptimizerKind::SGD: {
        const auto start = ansatz.expand(random_start(dim, w, derive_seed(rec.seed, {0})));
        std::uint64_t per_step = 1;
        for (std::size_t mu : ansatz.free_params()) per_step += 2 * ansatz.gates_using(mu).size();
        const std::size_t steps = static_cast<std::size_t>(config.budget / per_step);
        if (steps == 0) throw ArgumentError("SGD: budget smaller than one gradient step");
        rec.trace = optim::sgd_run(ansatz, start, spec, fs.sgd, steps, derive_seed(rec.seed, {1}));
        break;
      }
      case OptimizerKind::BO: {
        optim::CircuitObjective obj(ansatz, spec, derive_seed(rec.seed, {1}));
        auto f = [&obj](std::span<const double> x) { return obj(x); };
        auto bo = fs.bo;
        bo.seed = derive_seed(rec.seed, {2});
        const std::uint64_t probe_extra = bo.noise_probes > 0 ? bo.noise_probes - 1 : 0;
        if (config.budget <= probe_extra) throw ArgumentError("BO: budget does not cover the noise probes");
        const std::size_t iterations = static_cast<std::size_t>(config.budget - probe_extra);
        rec.trace = expand_trace(
            optim::bo_run(f, optim::Box::cube(dim, -w, w), iterations, bo), ansatz);
        break;
      }
      case OptimizerKind::FastSlowNM:
      case OptimizerKind::FastSlowSGD: {
        const auto fast = entry.kind == OptimizerKind::FastSlowNM ? optim::FastKind::NelderMead
                                                                  : optim::FastKind::Sgd;
        rec.trace = optim::fast_and_slow_run(ansatz, spec, config.policy, fast, config.budget,
                                             derive_seed(rec.seed, {1}), fs);
        break;
      }
    }
    if (rec.trace.empty()) throw ArgumentError("optimizer produced an empty trace");

    rec.final_theta = rec.trace.best_theta();
    rec.final_distribution = qsim::probabilities(qsim::run_circuit(ansatz, rec.final_theta));
    const auto shots = qsim::sample_counts(rec.final_distribution, config.shots, derive_seed(rec.seed, {99}));
    rec.qbas = bas::qbas_score(shots.counts, ensemble);

    for (std::size_t it : config.checkpoints) {
      if (it >= rec.trace.size()) continue;
      std::size_t best = 0;
      for (std::size_t i = 1; i <= it; ++i) {
        if (rec.trace[i].cost < rec.trace[best].cost) best = i;
      }
      Checkpoint cp;
      cp.iteration = it;
      cp.distribution = qsim::probabilities(qsim::run_circuit(ansatz, rec.trace[best].theta));
      const auto cs = qsim::sample_counts(cp.distribution, config.shots, derive_seed(rec.seed, {100, it}));
      cp.qbas = bas::qbas_score(cs.counts, ensemble);
      rec.checkpoints.push_back(std::move(cp));
    }
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  struct Job {
    const RosterEntry* entry;
    std::size_t repetition;
  };
  std::vector<Job> jobs;
  for (const auto& e : config.roster) {
    for (std::size_t r = 0; r < config.repetitions; ++r) jobs.push_back({&e, r});
  }
  std::vector<ExperimentRecord> records(jobs.size());
  const auto count = static_cast<long long>(jobs.size());
  const int threads = static_cast<int>(std::min<std::size_t>(config.workers, jobs.size()));
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (threads > 1)
  for (long long i = 0; i < count; ++i) {
    const auto& job = jobs[static_cast<std::size_t>(i)];
    records[static_cast<std::size_t>(i)] = run_single(config, *job.entry, job.repetition);
  }
  return records;
}

std::vector<AggregateCurve> aggregate_curves(const std::vector<ExperimentRecord>& records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ExperimentRecord*>> by_label;
  for (const auto& r : records) {
    if (!r.ok() || r.trace.empty()) continue;
    if (!by_label.count(r.label)) order.push_back(r.label);
    by_label[r.label].push_back(&r);
  }
  std::vector<AggregateCurve> curves;
  for (const auto& label : order) {
    const auto& group = by_label[label];
    std::size_t len = 0;
    for (const auto* r : group) len = std::max(len, r->trace.size());
    AggregateCurve c{label, std::vector<double>(len), std::vector<double>(len)};
    const double k = static_cast<double>(group.size());
    for (std::size_t i = 0; i < len; ++i) {
      double sum = 0.0;
      for (const auto* r : group) sum += r->trace[std::min(i, r->trace.size() - 1)].best_so_far;
      const double mean = sum / k;
      double ss = 0.0;
      for (const auto* r : group) {
        const double d = r->trace[std::min(i, r->trace.size() - 1)].best_so_far - mean;
        ss += d * d;
      }
      c.mean[i] = mean;
      c.std[i] = group.size() >= 2 ? std::sqrt(ss / (k - 1.0)) : 0.0;
    }
    curves.push_back(std::move(c));
  }
  return curves;
}

// ---------------------------------------------------------------------------
// Output

std::string trace_file_name(const ExperimentRecord& r) {
  std::string safe;
  for (char ch : r.label) safe += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') ? ch : '_';
  return "trace_" + safe + "_rep" + std::to_string(r.repetition) + ".csv";
}

namespace {

// Minimal JSON emitter so floats keep exactly 17 significant digits.
class JsonWriter {
 public:
  std::string str() const { return out_.str(); }

  void raw(const std::string& s) { out_ << s; }
  void number(double v) {
    if (std::isfinite(v)) out_ << format_double(v);
    else out_ << "null";
  }
  void integer(std::uint64_t v) { out_ << v; }
  void string(const std::string& s) { out_ << json(s).dump(); }
  void numbers(std::span<const double> v) {
    out_ << '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out_ << ',';
      number(v[i]);
    }
    out_ << ']';
  }
  void qbas(const bas::QbasReport& q) {
    out_ << "{\"precision\":";
    number(q.precision);
    out_ << ",\"recall\":";
    number(q.recall);
    out_ << ",\"score\":";
    number(q.score);
    out_ << ",\"n_samples\":" << q.n_samples << '}';
  }

 private:
  std::ostringstream out_;
};

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

std::vector<std::filesystem::path> write_results(const std::vector<ExperimentRecord>& records,
                                                 const ExperimentConfig& config,
                                                 const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create directory '" + directory.string() + "': " + ec.message());

  std::vector<std::filesystem::path> written;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    std::ostringstream csv;
    csv << "iteration,phase,circuit_executions,cost,best_so_far\n";
    for (const auto& e : r.trace.entries()) {
      csv << e.iteration << ',' << optim::to_string(e.phase) << ',' << e.circuit_executions << ','
          << format_double(e.cost) << ',' << format_double(e.best_so_far) << '\n';
    }
    const auto path = directory / trace_file_name(r);
    write_file(path, csv.str());
    written.push_back(path);
  }

  JsonWriter j;
  j.raw("{\n\"config\": ");
  j.raw(config_to_json(config));
  j.raw(",\n\"curves\": [");
  const auto curves = aggregate_curves(records);
  for (std::size_t c = 0; c < curves.size(); ++c) {
    j.raw(c ? ",\n" : "\n");
    j.raw("{\"label\":");
    j.string(curves[c].label);
    j.raw(",\"mean_best_so_far\":");
    j.numbers(curves[c].mean);
    j.raw(",\"std_best_so_far\":");
    j.numbers(curves[c].std);
    j.raw("}");
  }
  j.raw("],\n\"records\": [");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    j.raw(i ? ",\n" : "\n");
    j.raw("{\"label\":");
    j.string(r.label);
    j.raw(",\"kind\":");
    j.string(to_string(r.kind));
    j.raw(",\"repetition\":");
    j.integer(r.repetition);
    j.raw(",\"seed\":");
    j.integer(r.seed);
    if (!r.ok()) {
      j.raw(",\"error\":");
      j.string(r.error);
      j.raw("}");
      continue;
    }
    j.raw(",\"trace_file\":");
    j.string(trace_file_name(r));
    j.raw(",\"iterations\":");
    j.integer(r.trace.size());
    j.raw(",\"circuit_executions\":");
    j.integer(r.trace.executions());
    j.raw(",\"final_best_cost\":");
    j.number(r.trace.back().best_so_far);
    j.raw(",\"slow_iterations\":");
    j.integer(r.trace.count(optim::Phase::Slow));
    j.raw(",\"final_theta\":");
    j.numbers(r.final_theta);
    j.raw(",\"final_distribution\":");
    j.numbers(r.final_distribution);
    j.raw(",\"qbas\":");
    j.qbas(r.qbas);
    j.raw(",\"checkpoints\":[");
    for (std::size_t k = 0; k < r.checkpoints.size(); ++k) {
      if (k) j.raw(",");
      j.raw("{\"iteration\":");
      j.integer(r.checkpoints[k].iteration);
      j.raw(",\"distribution\":");
      j.numbers(r.checkpoints[k].distribution);
      j.raw(",\"qbas\":");
      j.qbas(r.checkpoints[k].qbas);
      j.raw("}");
    }
    j.raw("]}");
  }
  j.raw("\n]\n}\n");
  const auto summary = directory / "summary.json";
  write_file(summary, j.str());
  written.push_back(summary);
  return written;
}

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line != "iteration,phase,circuit_executions,cost,best_so_far") {
    throw IoError("unexpected trace header in '" + path.string() + "'");
  }
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 5) throw IoError("malformed trace row in '" + path.string() + "'");
    rows.push_back({std::stoull(f[0]), f[1], std::stoull(f[2]), std::strtod(f[3].c_str(), nullptr),
                    std::strtod(f[4].c_str(), nullptr)});
  }
  return rows;
}

std::string scan_to_csv(const plateau::VarianceScanResult& r) {
  std::ostringstream out;
  out << "n_qubits,param_index,samples,mean,variance\n";
  for (std::size_t i = 0; i < r.qubit_counts.size(); ++i) {
    out << r.qubit_counts[i] << ',' << r.param_indices[i] << ',' << r.n_theta_samples << ','
        << format_double(r.means[i]) << ',' << format_double(r.variances[i]) << '\n';
  }
  out << "# fit_slope," << format_double(r.fit_slope) << '\n';
  return out.str();
}

}  // namespace fastslow::harness

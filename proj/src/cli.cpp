#include "fastslow/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "fastslow/bas.hpp"
#include "fastslow/error.hpp"
#include "fastslow/harness.hpp"
#include "fastslow/plateau.hpp"

namespace fastslow {

namespace {

std::string bitstring(std::uint64_t index, int width) {
  std::string s(static_cast<std::size_t>(width), '0');
  for (int b = 0; b < width; ++b) {
    if (index >> (width - 1 - b) & 1U) s[static_cast<std::size_t>(b)] = '1';
  }
  return s;
}

std::string complex_str(const plateau::Complex& z) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.6f%+.6fi", z.real(), z.imag());
  return buf;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, std::optional<Seed> seed,
            std::optional<std::size_t> workers, std::ostream& out) {
  auto config = harness::load_config(config_path);
  if (seed) config.seed = *seed;
  if (workers) config.workers = *workers;
  if (const char* env = std::getenv(harness::kOutputDirEnv); env && *env) config.output_dir = env;
  if (!out_dir.empty()) config.output_dir = out_dir;
  config.validate();

  const auto records = harness::run_experiment(config);
  const auto written = harness::write_results(records, config, config.output_dir);
  bool failed = false;
  for (const auto& r : records) {
    out << r.label << " rep " << r.repetition;
    if (!r.ok()) {
      failed = true;
      out << "  FAILED: " << r.error << '\n';
      continue;
    }
    out << "  best_cost " << harness::format_double(r.trace.best_cost()) << "  executions "
        << r.trace.executions() << "  qbas " << std::setprecision(4) << r.qbas.score << "  recall "
        << r.qbas.recall << "  wall " << std::setprecision(3) << r.wall_seconds << "s\n";
  }
  out << "wrote " << written.size() << " files to " << config.output_dir << '\n';
  return failed ? 2 : 0;
}

int cmd_plateau(const std::vector<int>& qubits, std::size_t samples, const std::string& target,
                Seed seed, const std::string& out_path, std::ostream& out) {
  plateau::ScanOptions opts;
  opts.qubit_counts = qubits;
  opts.n_theta_samples = samples;
  opts.seed = seed;
  if (target == "bas") opts.target = plateau::ScanTarget::Bas;
  else if (target != "uniform") throw ArgumentError("--target must be 'uniform' or 'bas'");
  const auto result = plateau::gradient_variance_scan(opts);
  const auto csv = harness::scan_to_csv(result);
  if (out_path.empty()) {
    out << csv;
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + out_path + "' for writing");
    f << csv;
    if (!f) throw IoError("failed writing '" + out_path + "'");
    out << "wrote " << out_path << '\n';
  }
  return 0;
}

int cmd_haar(const std::vector<int>& dims, std::size_t samples, Seed seed, std::ostream& out) {
  bool all_pass = true;
  for (int d : dims) {
    for (const auto& row : plateau::haar_suite(d, samples, seed)) {
      const auto& r = row.result;
      const bool pass = r.z_score < 4.0;
      all_pass = all_pass && pass;
      out << "d=" << d << ' ' << row.identity << "  mc " << complex_str(r.mc_estimate) << "  analytic "
          << complex_str(r.analytic_value) << "  z " << std::fixed << std::setprecision(3) << r.z_score
          << std::defaultfloat << (pass ? "  ok" : "  FAIL") << '\n';
    }
  }
  return all_pass ? 0 : 2;
}

int cmd_bas_info(int rows, int cols, std::ostream& out) {
  const auto e = bas::bas_ensemble(rows, cols);
  out << "patterns: " << e.patterns.size() << '\n';
  out << "support:";
  for (auto p : e.patterns) out << ' ' << bitstring(p, e.n_pixels());
  out << '\n';
  out << "target probability: " << harness::format_double(1.0 / static_cast<double>(e.patterns.size()))
      << '\n';
  out << "expected_measurements: " << harness::format_double(bas::expected_measurements(e)) << '\n';
  out << "expected_measurements_asymptotic: "
      << harness::format_double(bas::expected_measurements_asymptotic(e)) << '\n';
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fast-and-slow training of Bars-and-Stripes quantum circuits", "fastslow"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  std::string config_path, run_out;
  std::optional<Seed> run_seed;
  std::optional<std::size_t> run_workers;
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--out", run_out, "Output directory (overrides config and FASTSLOW_OUT)");
  run->add_option("--seed", run_seed, "Base seed");
  run->add_option("--workers", run_workers, "Concurrent runs");

  auto* scan = app.add_subcommand("plateau-scan", "Gradient variance against qubit count");
  std::vector<int> qubits{2, 4, 6, 8};
  std::size_t scan_samples = 200;
  std::string scan_out, target = "uniform";
  Seed scan_seed = 0;
  scan->add_option("--qubits", qubits, "Qubit counts")->delimiter(',');
  scan->add_option("--samples", scan_samples, "Parameter samples per qubit count");
  scan->add_option("--target", target, "uniform or bas");
  scan->add_option("--seed", scan_seed, "Seed");
  scan->add_option("--out", scan_out, "CSV output path");

  auto* haar = app.add_subcommand("haar-check", "Monte-Carlo check of Haar moment identities");
  std::vector<int> dims{2, 4, 8};
  std::size_t haar_samples = 100000;
  Seed haar_seed = 0;
  haar->add_option("--dim", dims, "Dimensions")->delimiter(',');
  haar->add_option("--samples", haar_samples, "Samples per check");
  haar->add_option("--seed", haar_seed, "Seed");

  auto* info = app.add_subcommand("bas-info", "Bars-and-Stripes ensemble facts");
  int rows = 0, cols = 0;
  info->add_option("--rows", rows, "Grid rows")->required();
  info->add_option("--cols", cols, "Grid columns")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 1;
  }

  try {
    if (*run) return cmd_run(config_path, run_out, run_seed, run_workers, out);
    if (*scan) return cmd_plateau(qubits, scan_samples, target, scan_seed, scan_out, out);
    if (*haar) return cmd_haar(dims, haar_samples, haar_seed, out);
    if (*info) return cmd_bas_info(rows, cols, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace fastslow

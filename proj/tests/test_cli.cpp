#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fastslow/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "fastslow");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = fastslow::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

fs::path write_config(const fs::path& dir, const std::string& text) {
  fs::create_directories(dir);
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

const char* kTinyConfig = R"({
  "grid": {"rows": 2, "cols": 2},
  "shots": 128,
  "repetitions": 1,
  "budget": 30,
  "switch": {"mode": "fixed", "iteration": 5},
  "roster": ["FastSlow-NM", "NM"]
})";

}  // namespace

TEST_CASE("bas-info prints ensemble facts") {
  auto r = run({"bas-info", "--rows", "2", "--cols", "2"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "patterns: 6\n"));
  CHECK(contains(r.out, "support: 0000 0011 0101 1010 1100 1111\n"));
  CHECK(contains(r.out, "expected_measurements: 14.7"));

  auto bad = run({"bas-info", "--rows", "0", "--cols", "2"});
  CHECK(bad.code == 1);
  CHECK(contains(bad.err, "error:"));
}

TEST_CASE("argument errors exit with 1 and print usage") {
  auto missing = run({"run"});
  CHECK(missing.code == 1);
  CHECK(contains(missing.err, "--config"));

  auto unknown = run({"train"});
  CHECK(unknown.code == 1);

  auto none = run({});
  CHECK(none.code == 1);

  auto file = run({"run", "--config", "/nonexistent/cfg.json"});
  CHECK(file.code == 1);
  CHECK(contains(file.err, "/nonexistent/cfg.json"));

  auto target = run({"plateau-scan", "--qubits", "2", "--samples", "5", "--target", "ghz"});
  CHECK(target.code == 1);
}

TEST_CASE("help exits with 0") {
  auto r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "plateau-scan"));
}

TEST_CASE("haar-check prints one line per identity") {
  auto r = run({"haar-check", "--dim", "2", "--samples", "2000", "--seed", "3"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "d=2 first"));
  CHECK(contains(r.out, "d=2 second"));
  CHECK(contains(r.out, "d=2 interleaved"));
  CHECK(contains(r.out, " z "));
}

TEST_CASE("plateau-scan writes csv") {
  auto r = run({"plateau-scan", "--qubits", "2,4", "--samples", "20", "--seed", "1"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("n_qubits,param_index,samples,mean,variance\n", 0) == 0);
  CHECK(contains(r.out, "\n2,"));
  CHECK(contains(r.out, "\n4,"));
  CHECK(contains(r.out, "# fit_slope,"));

  const auto path = fs::temp_directory_path() / "fastslow_cli_scan.csv";
  auto f = run({"plateau-scan", "--qubits", "2,4", "--samples", "20", "--seed", "1", "--out", path.string()});
  CHECK(f.code == 0);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == r.out);
  fs::remove(path);
}

TEST_CASE("run writes traces and summary with output precedence") {
  const auto base = fs::temp_directory_path() / "fastslow_cli_run";
  fs::remove_all(base);
  const auto cfg = write_config(base, kTinyConfig);

  const auto env_dir = base / "env";
  const auto flag_dir = base / "flag";
  ::setenv("FASTSLOW_OUT", env_dir.c_str(), 1);
  auto r = run({"run", "--config", cfg.string()});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "FastSlow-NM rep 0"));
  CHECK(contains(r.out, "wrote 3 files"));
  CHECK(fs::exists(env_dir / "summary.json"));
  CHECK(fs::exists(env_dir / "trace_NM_rep0.csv"));

  auto f = run({"run", "--config", cfg.string(), "--out", flag_dir.string()});
  ::unsetenv("FASTSLOW_OUT");
  CHECK(f.code == 0);
  CHECK(fs::exists(flag_dir / "trace_FastSlow-NM_rep0.csv"));
  fs::remove_all(base);
}

TEST_CASE("run exits 2 when a run fails") {
  const auto base = fs::temp_directory_path() / "fastslow_cli_fail";
  fs::remove_all(base);
  const auto cfg = write_config(base, R"({"grid": {"rows": 2, "cols": 2}, "repetitions": 1, "budget": 20,
                                          "roster": ["SGD"], "output_dir": ")" +
                                          (base / "out").string() + "\"}");
  auto r = run({"run", "--config", cfg.string()});
  CHECK(r.code == 2);
  CHECK(contains(r.out, "FAILED"));
  fs::remove_all(base);
}

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bcle/cli.hpp"

namespace fs = std::filesystem;
using bcle::cli::run;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int c = run(args, o, e);
  return {c, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path golden(const std::string& name) { return fs::path(BCLE_GOLDEN_DIR) / name; }

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("bcle_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("golden exact tables") {
  auto r = call({"exact", "one-arm", "--kappa-prime", "4.8", "--r", "0.3333333333"});
  CHECK(r.code == 0);
  CHECK(r.out == slurp(golden("one_arm.csv")));
  r = call({"exact", "touch", "--regime", "k4", "--rho", "-1"});
  CHECK(r.out == slurp(golden("touch_k4.csv")));
  r = call({"--format", "json", "exact", "moment", "--kappa", "3", "--rho", "-1.2", "--lambda", "0.3", "1"});
  CHECK(r.out == slurp(golden("moment_simple.json")));
  r = call({"exact", "rho-map", "--kappa", "3.3333333333333335", "--r", "0.33333333333333331"});
  CHECK(r.out == slurp(golden("rho_map.csv")));
  CHECK(call({"verify", "--list"}).out == slurp(golden("verify_list.csv")));
}

TEST_CASE("seventeen significant digits") {
  CHECK(bcle::cli::fmt17(0.1) == "0.10000000000000001");
  CHECK(std::stod(bcle::cli::fmt17(1.0 / 3)) == 1.0 / 3);
}

TEST_CASE("validation errors exit 1 with nothing on stdout") {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"exact", "one-arm", "--kappa-prime"},
           {"exact", "one-arm", "--kappa-prime", "4.8", "--r", "0.3", "--bogus"},
           {"exact", "touch", "--kappa", "3", "--rho", "5"},
           {"exact", "moment", "--kappa", "3", "--rho", "-1.5", "--lambda", "-0.9"},
           {"--format", "xml", "exact", "touch", "--regime", "k4", "--rho", "-1"},
           {"simulate", "sle", "--kappa", "3", "--rho", "-1.5", "-n", "10"},
           {"fit", "--input", "/nonexistent.csv"},
           {}}) {
    const auto r = call(args);
    CHECK(r.code == 1);
    CHECK(r.out.empty());
    CHECK_FALSE(r.err.empty());
  }
  const auto r = call({"exact", "touch", "--kappa", "3", "--rho", "5"});
  CHECK(r.err.find("(-2, kappa-4)") != std::string::npos);
}

TEST_CASE("help exits 0") { CHECK(call({"--help"}).code == 0); }

TEST_CASE("verify filter and perturbation self-test") {
  const auto r = call({"verify", "--only", "reflection-identity"});
  CHECK(r.code == 0);
  CHECK(r.out.find("reflection-identity") != std::string::npos);
  CHECK(r.out.find("normalization") == std::string::npos);
  for (const auto& n : bcle::cli::suite_names()) {
    // tolerances at or above 1e-6 cannot see the perturbation
    if (n == "divergence" || n == "k4-limits" || n == "reflection-derivative") continue;
    INFO(n);
    CHECK(bcle::cli::run_suite(n).passed);
    CHECK_FALSE(bcle::cli::run_suite(n, 1e-6).passed);
  }
}

TEST_CASE("simulate sle: summary is byte-identical for a seed, whatever the threads") {
  const auto d1 = scratch("sle1"), d2 = scratch("sle2");
  const std::vector<std::string> base{"simulate", "sle", "--kappa", "3", "--rho", "-1.5", "-n", "40", "--seed", "17",
                                      "--batches", "8"};
  auto a1 = base, a2 = base;
  a1.insert(a1.end(), {"--out", d1.string(), "--threads", "1", "--raw"});
  a2.insert(a2.end(), {"--out", d2.string(), "--threads", "3"});
  const auto r1 = call(a1), r2 = call(a2);
  CHECK(r1.code == 0);
  CHECK(r2.code == 0);
  CHECK(slurp(d1 / "summary.json") == slurp(d2 / "summary.json"));
  CHECK(r1.out == r2.out);
  CHECK(fs::exists(d1 / "raw.csv"));
  CHECK(fs::exists(d1 / "provenance.json"));
  const auto summary = slurp(d1 / "summary.json");
  CHECK(summary.find("\"exact\"") != std::string::npos);
  CHECK(summary.find("timestamp") == std::string::npos);
  CHECK(slurp(d1 / "raw.csv").rfind("seed,replica,sigma1,orientation,valid,steps", 0) == 0);

  // the written config reproduces the run, flags still win
  const auto d3 = scratch("sle3");
  const auto r3 = call({"simulate", "sle", "--config", (d1 / "config.txt").string(), "--out", d3.string()});
  CHECK(r3.code == 0);
  CHECK(slurp(d3 / "summary.json") == slurp(d1 / "summary.json"));
  const auto r4 = call({"--format", "json", "simulate", "sle", "--config", (d1 / "config.txt").string(), "--seed", "18"});
  CHECK(r4.out.find("\"seed\": 18") != std::string::npos);
}

TEST_CASE("config files reject unknown keys") {
  const auto p = scratch("cfg.txt");
  std::ofstream(p) << "kappa=3\nrho=-1.5\nsamples=10\nfoo=2\n";
  const auto r = call({"simulate", "sle", "--config", p.string(), "--seed", "1"});
  CHECK(r.code == 1);
  CHECK(r.err.find("foo") != std::string::npos);
}

TEST_CASE("time budget gives exit 3 and a partial summary") {
  const auto r = call({"--format", "json", "simulate", "sle", "--kappa", "6", "--rho", "-0.5", "-n", "1000000",
                       "--seed", "2", "--time-budget", "0.3"});
  CHECK(r.code == 3);
  CHECK(r.out.find("\"partial\": true") != std::string::npos);
}

TEST_CASE("simulate lattice writes per-scale CSV, fit reads it back") {
  const auto d = scratch("lat");
  const auto r = call({"simulate", "lattice", "--q", "3", "--r", "0.3333", "--L", "32", "-n", "60", "--burn-in", "20",
                       "--seed", "4", "--out", d.string()});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("kind,m,n,hits,samples,estimate,stderr\n", 0) == 0);
  const auto summary = slurp(d / "summary.json");
  for (const char* key : {"\"fits\"", "\"seeds\"", "\"blue_alpha1\"", "\"quasi_multiplicativity\""})
    CHECK(summary.find(key) != std::string::npos);
  const auto f = call({"fit", "--input", (d / "raw.csv").string()});
  CHECK(f.code == 0);
  CHECK(f.out.rfind("kind,exponent,stderr,chi2,dof,scales\n", 0) == 0);
  CHECK(call({"simulate", "lattice", "--L", "31", "--seed", "1"}).code == 1);
}

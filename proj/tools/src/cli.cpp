#include "bcle/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <thread>

#include "bcle/errors.hpp"
#include "bcle/exact.hpp"
#include "bcle/lattice.hpp"
#include "bcle/sle.hpp"
#include "format.hpp"

#ifndef BCLE_VERSION
#define BCLE_VERSION "0.0.0"
#endif

namespace bcle::cli {

namespace {

namespace fs = std::filesystem;
using exact::OrientedValue;
using exact::Regime;

// bad input that is not one of the library's own error types
struct Invalid : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string to_text(double x) { return fmt17(x); }
std::string to_text(int x) { return std::to_string(x); }
std::string to_text(long x) { return std::to_string(x); }
std::string to_text(std::uint64_t x) { return std::to_string(x); }
std::string to_text(bool x) { return x ? "true" : "false"; }
std::string to_text(const std::string& s) { return s; }
std::string to_text(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt17(x);
  return s;
}
std::string to_text(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
  return s;
}

// Options of one command, remembered in order so the effective settings can
// be written back as a config file.
struct Command {
  CLI::App* app = nullptr;
  std::vector<std::pair<std::string, std::function<std::string()>>> keys;
  std::function<int()> body;
  bool needsSeed = false;

  template <class T>
  CLI::Option* add(const std::string& names, T& var, const std::string& desc) {
    auto* o = app->add_option(names, var, desc);
    if (o->get_lnames().empty()) throw std::logic_error("option without long name");
    keys.emplace_back(o->get_lnames().front(), [&var] { return to_text(var); });
    return o;
  }
  CLI::Option* flag(const std::string& names, bool& var, const std::string& desc) {
    auto* o = app->add_flag(names, var, desc);
    keys.emplace_back(o->get_lnames().front(), [&var] { return to_text(var); });
    return o;
  }
  bool given(const std::string& key) const {
    const auto* o = app->get_option_no_throw("--" + key);
    return o && o->count() > 0;
  }
  void require(std::initializer_list<const char*> names) const {
    for (const char* n : names)
      if (!given(n)) throw Invalid("--" + std::string(n) + " is required");
  }
  std::string config_text() const {
    std::string s;
    for (const auto& [k, f] : keys) s += k + "=" + f() + "\n";
    return s;
  }
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// key=value lines, '#' comments. Keys are long option names; values only fill
// options that were not given on the command line.
void apply_config(const Command& cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Invalid("cannot read config file " + path);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Invalid(path + ":" + std::to_string(lineNo) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    auto* o = key == "config" ? nullptr : cmd.app->get_option_no_throw("--" + key);
    if (!o) throw Invalid(path + ":" + std::to_string(lineNo) + ": unknown key '" + key + "'");
    if (o->count() > 0) continue;  // flags win
    std::istringstream words(value);
    std::string w;
    bool any = false;
    while (words >> w) {
      o->add_result(w);
      any = true;
    }
    if (!any) throw Invalid(path + ":" + std::to_string(lineNo) + ": empty value for '" + key + "'");
    o->run_callback();
  }
}

Json oriented(const OrientedValue& v) { return Json{{"clockwise", v.clockwise}, {"counterclockwise", v.counterclockwise}}; }

Regime parse_regime(const std::string& s, double kappa, bool kappaGiven) {
  if (s == "simple") return Regime::Simple;
  if (s == "nonsimple") return Regime::NonSimple;
  if (s == "k4") return Regime::K4;
  if (s != "auto") throw Invalid("regime must be one of auto, simple, nonsimple, k4");
  if (!kappaGiven) throw Invalid("--kappa is required unless --regime k4");
  return kappa == 4 ? Regime::K4 : kappa > 4 ? Regime::NonSimple : Regime::Simple;
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Simple:
      return "simple";
    case Regime::NonSimple:
      return "nonsimple";
    case Regime::K4:
      return "k4";
  }
  return "";
}

OrientedValue exact_moment(Regime r, double kappa, double rho, double lambda) {
  switch (r) {
    case Regime::Simple:
      return exact::cr_moment_simple(exact::SimpleParams::make(kappa, rho), lambda);
    case Regime::NonSimple:
      return exact::cr_moment_nonsimple(exact::NonSimpleParams::make(kappa, rho), lambda);
    case Regime::K4:
      return exact::cr_moment_k4(exact::K4Params::make(rho), lambda);
  }
  return {};
}

// FK / Potts: sqrt(q) = -2 cos(4 pi / kappa')
double kappa_prime_of_q(int q) { return 4 * std::numbers::pi / (std::numbers::pi - std::acos(std::sqrt(double(q)) / 2)); }

struct Session {
  std::ostringstream out;  // primary output, flushed only at the end
  std::string format = "csv";
  std::string outDir;
  std::string configPath;
  int threads = int(std::max(1u, std::thread::hardware_concurrency()));
  std::uint64_t seed = 0;

  // tables go to stdout, and to DIR/table.{csv,json} with --out
  void emit(const Table& t) {
    const std::string text = table_text(t);
    if (!outDir.empty()) write_file("table." + format, text);
    out << text;
  }
  void write_file(const std::string& name, const std::string& text) const {
    fs::create_directories(outDir);
    std::ofstream f(fs::path(outDir) / name, std::ios::binary);
    f << text;
    if (!f) throw Invalid("cannot write " + (fs::path(outDir) / name).string());
  }
  std::string table_text(const Table& t) const {
    std::ostringstream s;
    if (format == "json")
      write_json(s, t.to_json());
    else
      t.write_csv(s);
    return s.str();
  }
};

std::string json_text(const Json& j) {
  std::ostringstream s;
  write_json(s, j);
  return s.str();
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Simulation outputs: summary.json (deterministic), raw.csv, config.txt, and
// provenance.json carrying the wall-clock timestamp.
void write_run_dir(const Session& s, const Command& cmd, const Json& summary, const std::string& raw) {
  if (s.outDir.empty()) return;
  s.write_file("summary.json", json_text(summary));
  if (!raw.empty()) s.write_file("raw.csv", raw);
  s.write_file("config.txt", cmd.config_text());
  Json prov = {{"tool", "bcle"},     {"version", BCLE_VERSION},   {"seed", s.seed},
               {"threads", s.threads}, {"timestamp", utc_now()}, {"command", cmd.app->get_parent()->get_name() + " " + cmd.app->get_name()}};
  s.write_file("provenance.json", json_text(prov));
}

// ---------------------------------------------------------------------------

struct ExactArgs {
  double kappaPrime = 0, kappa = 0, rho = 0;
  std::vector<double> r, lambda;
  std::string regime = "auto";
};

void add_exact(CLI::App& root, Session& s, std::vector<Command>& cmds, ExactArgs& a) {
  auto* ex = root.add_subcommand("exact", "closed-form exponents, orientation probabilities and moments");
  ex->require_subcommand(1);

  {
    auto& c = cmds.emplace_back();
    c.app = ex->add_subcommand("one-arm", "one-arm exponent alpha_1 of CLE_kappa' percolation");
    c.add("--kappa-prime", a.kappaPrime, "kappa' in (4,8)");
    c.add("--r", a.r, "red probabilities in (0,1)");
    c.body = [&s, &a, app = c.app] {
      for (const char* k : {"kappa-prime", "r"})
        if (app->get_option("--" + std::string(k))->count() == 0) throw Invalid("--" + std::string(k) + " is required");
      Table t{{"kappa_prime", "r", "kappa", "rho", "alpha1", "fk_alpha"}};
      for (double r : a.r) {
        const auto c = exact::ColoredCleParams::make(a.kappaPrime, r);
        t.add({a.kappaPrime, r, c.kappa(), exact::rho_from_r(c.kappa(), r), exact::one_arm_exponent(c),
               exact::fk_one_arm_limit(a.kappaPrime)});
      }
      s.emit(t);
      return int(kOk);
    };
  }
  auto regimeOpts = [&](Command& c) {
    c.add("--regime", a.regime, "auto, simple, nonsimple or k4")
        ->check(CLI::IsMember({"auto", "simple", "nonsimple", "k4"}));
    c.add("--kappa", a.kappa, "kappa, or kappa' in the nonsimple regime");
    c.add("--rho", a.rho, "force point weight (rho' in the nonsimple regime)");
  };
  auto resolve = [&a](const CLI::App* app) {
    if (app->get_option("--rho")->count() == 0) throw Invalid("--rho is required");
    const bool kg = app->get_option("--kappa")->count() > 0;
    const Regime r = parse_regime(a.regime, a.kappa, kg);
    if (r == Regime::K4 && kg && a.kappa != 4) throw Invalid("regime k4 needs kappa=4");
    if (r != Regime::K4 && !kg) throw Invalid("--kappa is required");
    return r;
  };
  {
    auto& c = cmds.emplace_back();
    c.app = ex->add_subcommand("touch", "orientation probabilities of the loop around 0");
    regimeOpts(c);
    c.body = [&s, &a, resolve, app = c.app] {
      const Regime r = resolve(app);
      const double k = r == Regime::K4 ? 4 : a.kappa;
      const auto v = exact_moment(r, k, a.rho, 0);
      Table t{{"regime", "kappa", "rho", "clockwise", "counterclockwise"}};
      t.add({std::string(regime_name(r)), k, a.rho, v.clockwise, v.counterclockwise});
      s.emit(t);
      return int(kOk);
    };
  }
  {
    auto& c = cmds.emplace_back();
    c.app = ex->add_subcommand("moment", "E[CR^lambda; orientation] of the loop around 0");
    regimeOpts(c);
    c.add("--lambda", a.lambda, "moment orders");
    c.body = [&s, &a, resolve, app = c.app] {
      const Regime r = resolve(app);
      if (a.lambda.empty()) throw Invalid("--lambda is required");
      const double k = r == Regime::K4 ? 4 : a.kappa;
      Table t{{"regime", "kappa", "rho", "lambda", "clockwise", "counterclockwise", "total"}};
      for (double l : a.lambda) {
        const auto v = exact_moment(r, k, a.rho, l);
        t.add({std::string(regime_name(r)), k, a.rho, l, v.clockwise, v.counterclockwise, v.sum()});
      }
      s.emit(t);
      return int(kOk);
    };
  }
  {
    auto& c = cmds.emplace_back();
    c.app = ex->add_subcommand("cle-moment", "E[CR^lambda] of the outermost CLE_kappa' loop around 0");
    c.add("--kappa-prime", a.kappaPrime, "kappa' in (4,8)");
    c.add("--lambda", a.lambda, "moment orders");
    c.body = [&s, &a, app = c.app] {
      if (app->get_option("--kappa-prime")->count() == 0 || a.lambda.empty())
        throw Invalid("--kappa-prime and --lambda are required");
      Table t{{"kappa_prime", "lambda", "moment"}};
      for (double l : a.lambda) t.add({a.kappaPrime, l, exact::cle_cr_moment(a.kappaPrime, l)});
      s.emit(t);
      return int(kOk);
    };
  }
  {
    auto& c = cmds.emplace_back();
    c.app = ex->add_subcommand("rho-map", "BCLE weight rho for a red probability r, with the child weights");
    c.add("--kappa", a.kappa, "kappa in (2,4)");
    c.add("--r", a.r, "red probabilities in (0,1)");
    c.body = [&s, &a, app = c.app] {
      if (app->get_option("--kappa")->count() == 0 || a.r.empty()) throw Invalid("--kappa and --r are required");
      Table t{{"kappa", "r", "rho", "rho_red_prime", "rho_blue_prime"}};
      for (double r : a.r) {
        const double rho = exact::rho_from_r(a.kappa, r);
        const auto [rr, rb] = exact::bcle_child_weights(a.kappa, rho);
        t.add({a.kappa, r, rho, rr, rb});
      }
      s.emit(t);
      return int(kOk);
    };
  }
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::vector<std::string> only;
  bool list = false;
};

void add_verify(CLI::App& root, Session& s, std::vector<Command>& cmds, VerifyArgs& a) {
  auto& c = cmds.emplace_back();
    c.app = root.add_subcommand("verify", "special-function and formula identity suites");
  c.add("--only", a.only, "run only these suites")->check(CLI::IsMember(suite_names()));
  c.flag("--list", a.list, "list the suites and exit");
  c.body = [&s, &a] {
    if (a.list) {
      Table t{{"suite"}};
      for (const auto& n : suite_names()) t.add({n});
      s.emit(t);
      return int(kOk);
    }
    Table t{{"suite", "checks", "max_residual", "tolerance", "status", "worst"}};
    bool ok = true;
    for (const auto& n : a.only.empty() ? suite_names() : a.only) {
      const auto r = run_suite(n);
      ok = ok && r.passed;
      t.add({r.name, r.checks, r.maxResidual, r.tolerance, std::string(r.passed ? "pass" : "FAIL"), r.worst});
    }
    s.emit(t);
    return int(ok ? kOk : kNumeric);
  };
}

// ---------------------------------------------------------------------------

struct SleArgs {
  double kappa = 0, rho = 0;
  long samples = 10000;
  std::vector<double> lambda{0.3, 1.0};
  sle::SimConfig cfg;
  int batches = 100;
  double timeBudget = 0;
  bool raw = false;
};

struct LatticeArgs {
  int q = 2;
  double r = 0.5;
  int L = 256;
  long samples = 1000;
  int burnIn = 1000, thin = 5, chains = 1, fitScales = 4;
  long minHits = 100;
  double timeBudget = 0;
};

void add_common_sim(Command& c, Session& s) {
  c.add("--seed", s.seed, "master seed (required)");
  c.needsSeed = true;
}

void add_simulate(CLI::App& root, Session& s, std::vector<Command>& cmds, SleArgs& a, LatticeArgs& la) {
  auto* sim = root.add_subcommand("simulate", "Monte Carlo estimates with exact references");
  sim->require_subcommand(1);
  {
    auto& c = cmds.emplace_back();
    c.app = sim->add_subcommand("sle", "radial SLE_kappa(rho; kappa-6-rho) loop around 0");
    c.add("--kappa", a.kappa, "kappa in (2,8); above 4 this is kappa'");
    c.add("--rho", a.rho, "force point weight");
    c.add("-n,--samples", a.samples, "samples per refinement level");
    c.add("--lambda", a.lambda, "moment orders; 0 (orientation) is always included");
    c.add("--dt", a.cfg.dt, "step cap");
    c.add("--gap-tolerance", a.cfg.gapTolerance, "closure threshold for the collapsing arc");
    c.add("--max-steps", a.cfg.maxSteps, "steps per sample before it is censored");
    c.add("--batches", a.batches, "batches for the standard errors");
    c.add("--time-budget", a.timeBudget, "wall-clock seconds, 0 = unlimited");
    c.flag("--raw", a.raw, "also write raw.csv with every sample (needs --out)");
    add_common_sim(c, s);
    c.body = [&s, &a, &c = c] {
      c.require({"kappa", "rho"});
      const auto p = sle::BcleParams::make(a.kappa, a.rho);
      std::vector<double> lams{0};
      for (double l : a.lambda)
        if (l != 0) lams.push_back(l);
      sle::EstimateOptions opt;
      opt.cfg = a.cfg;
      opt.threads = s.threads;
      opt.batches = a.batches;
      opt.timeBudget = a.timeBudget;
      std::vector<sle::RawSample> raw;
      if (a.raw) opt.raw = &raw;
      const auto rep = sle::estimate_oriented_cr_moments(p, lams, a.samples, s.seed, opt);
      const bool partial = rep.partial || rep.censored > 0;

      Table t{{"lambda", "orientation", "estimate", "stderr", "exact", "z"}};
      Json moments = Json::array();
      for (const auto& m : rep.moments) {
        const auto ex = p.exact_moment(m.lambda);
        const OrientedValue z{(m.mean.clockwise - ex.clockwise) / m.se.clockwise,
                              (m.mean.counterclockwise - ex.counterclockwise) / m.se.counterclockwise};
        t.add({m.lambda, std::string("clockwise"), m.mean.clockwise, m.se.clockwise, ex.clockwise, z.clockwise});
        t.add({m.lambda, std::string("counterclockwise"), m.mean.counterclockwise, m.se.counterclockwise,
               ex.counterclockwise, z.counterclockwise});
        moments.push_back({{"lambda", m.lambda},
                           {"estimate", oriented(m.mean)},
                           {"stderr", oriented(m.se)},
                           {"exact", oriented(ex)},
                           {"z", oriented(z)},
                           {"coarse", oriented(m.coarse)},
                           {"coarse_stderr", oriented(m.coarseSe)},
                           {"fine", oriented(m.fine)},
                           {"fine_stderr", oriented(m.fineSe)}});
      }
      Json summary = {
          {"schema", "bcle.simulate.sle/1"},
          {"status", partial ? "partial" : "ok"},
          {"partial", partial},
          {"inputs",
           {{"kappa", a.kappa},
            {"rho", a.rho},
            {"regime", regime_name(p.regime)},
            {"samples", a.samples},
            {"lambda", lams},
            {"dt", a.cfg.dt},
            {"gap_tolerance", a.cfg.gapTolerance},
            {"max_steps", a.cfg.maxSteps},
            {"batches", a.batches},
            {"scheme", a.cfg.reflectionScheme}}},
          {"provenance", {{"tool", "bcle"}, {"version", BCLE_VERSION}, {"seed", s.seed}}},
          {"samples_per_level", rep.samplesPerLevel},
          {"censored", rep.censored},
          {"censored_fraction", rep.censoredFraction},
          {"time_budget_exhausted", rep.partial},
          {"mean_steps", rep.meanSteps},
          {"orientation", moments.front()},
          {"moments", moments},
      };
      std::string rawText;
      if (a.raw) {
        Table rt{{"seed", "replica", "sigma1", "orientation", "valid", "steps", "level"}};
        for (const auto& x : raw)
          rt.add({std::to_string(x.seed), long(x.replica), x.s.sigma1, std::string(sle::to_string(x.s.orientation)),
                  x.s.valid, x.s.steps, long(x.level)});
        std::ostringstream o;
        rt.write_csv(o);
        rawText = o.str();
      }
      write_run_dir(s, c, summary, rawText);
      if (s.format == "json")
        write_json(s.out, summary);
      else
        t.write_csv(s.out);
      return int(partial ? kPartial : kOk);
    };
  }
  {
    auto& c = cmds.emplace_back();
    c.app = sim->add_subcommand("lattice", "critical fuzzy Potts one-arm probabilities on [-L/2,L/2]^2");
    c.add("--q", la.q, "Potts states, 2..4");
    c.add("--r", la.r, "red probability per FK cluster");
    c.add("--L", la.L, "box side, even");
    c.add("-n,--samples", la.samples, "measurements");
    c.add("--burn-in", la.burnIn, "Swendsen-Wang sweeps before measuring");
    c.add("--thin", la.thin, "sweeps between measurements");
    c.add("--chains", la.chains, "independent chains");
    c.add("--min-hits", la.minHits, "scales with fewer hits are flagged");
    c.add("--fit-scales", la.fitScales, "scales in the exponent fit");
    c.add("--time-budget", la.timeBudget, "wall-clock seconds, 0 = unlimited");
    add_common_sim(c, s);
    c.body = [&s, &la, &c = c] {
      const auto cfg = lattice::LatticeConfig::make(la.L, la.q, la.r);
      if (la.L < 16) throw Invalid("L must be at least 16 for dyadic scales from m=4");
      lattice::ArmOptions opt;
      opt.burnIn = la.burnIn;
      opt.thin = la.thin;
      opt.chains = la.chains;
      opt.threads = s.threads;
      opt.minHits = la.minHits;
      opt.timeBudget = la.timeBudget;
      const auto ms = lattice::run_arm_experiment(cfg, lattice::dyadic_pairs(la.L), la.samples, s.seed, opt);
      const bool partial = !ms.empty() && ms.front().partial;

      Table t{{"kind", "m", "n", "hits", "samples", "estimate", "stderr"}};
      Json low = Json::array();
      for (const char* kind : {"blue", "red", "fk"})
        for (const auto& m : ms) {
          const std::string k = kind;
          if (k == "fk" && !m.fkMeasured) continue;
          const long h = k == "blue" ? m.blueHits : k == "red" ? m.redHits : m.fkHits;
          const double P = m.nSamples ? double(h) / double(m.nSamples) : NAN;
          t.add({k, long(m.m), long(m.n), h, m.nSamples, P, std::sqrt(P * (1 - P) / double(m.nSamples))});
        }
      for (const auto& m : ms)
        if (m.lowStatistics) low.push_back({m.m, m.n});

      Json fits = Json::object();
      for (auto [name, kind] : {std::pair{"blue", lattice::ArmKind::Blue},
                                {"red", lattice::ArmKind::Red},
                                {"fk", lattice::ArmKind::Fk}}) {
        try {
          const auto f = lattice::fit_exponent(ms, kind, la.fitScales);
          Json used = Json::array();
          for (int i : f.used) used.push_back({ms[std::size_t(i)].m, ms[std::size_t(i)].n});
          fits[name] = {{"exponent", f.exponent}, {"stderr", f.stderr_}, {"chi2", f.chi2}, {"dof", f.dof},
                        {"scales", used}};
        } catch (const DomainError& e) {
          fits[name] = {{"error", e.what()}};
        }
      }
      Json qm = Json::object();
      for (auto [name, kind] : {std::pair{"blue", lattice::ArmKind::Blue}, {"red", lattice::ArmKind::Red}}) {
        const auto v = lattice::quasi_multiplicativity(ms, kind);
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& x : v) {
          lo = std::min(lo, x.ratio);
          hi = std::max(hi, x.ratio);
        }
        qm[name] = {{"triples", v.size()}, {"min_ratio", lo}, {"max_ratio", hi}};
      }
      Json ref = nullptr;
      const double kp = kappa_prime_of_q(la.q);
      if (kp > 4 && kp < 8) {
        ref = {{"kappa_prime", kp}, {"fk_alpha", exact::fk_one_arm_limit(kp)}};
        // blue clusters have probability 1-r, the blue exponent is alpha_1(r)
        if (la.r > 0 && la.r < 1) {
          ref["blue_alpha1"] = exact::one_arm_exponent(exact::ColoredCleParams::make(kp, la.r));
          ref["red_alpha1"] = exact::one_arm_exponent(exact::ColoredCleParams::make(kp, 1 - la.r));
        }
      }
      Json summary = {
          {"schema", "bcle.simulate.lattice/1"},
          {"status", partial ? "partial" : "ok"},
          {"partial", partial},
          {"inputs",
           {{"q", la.q},
            {"r", la.r},
            {"L", la.L},
            {"samples", la.samples},
            {"burn_in", la.burnIn},
            {"thin", la.thin},
            {"chains", la.chains},
            {"boundary", "free"},
            {"p", cfg.pC()}}},
          {"provenance", {{"tool", "bcle"}, {"version", BCLE_VERSION}, {"seed", s.seed}}},
          {"seeds", {{"master", s.seed}, {"chains", la.chains}, {"streams", "(seed, chain, 1) dynamics, (seed, chain, 2) colouring"}}},
          {"measurements", ms.empty() ? 0L : ms.front().nSamples},
          {"fits", fits},
          {"quasi_multiplicativity", qm},
          {"low_statistics", low},
          {"reference", ref},
      };
      std::ostringstream raw;
      t.write_csv(raw);
      write_run_dir(s, c, summary, raw.str());
      if (s.format == "json")
        write_json(s.out, summary);
      else
        t.write_csv(s.out);
      return int(partial ? kPartial : kOk);
    };
  }
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string input;
  int largest = 4;
};

void add_fit(CLI::App& root, Session& s, std::vector<Command>& cmds, FitArgs& a) {
  auto& c = cmds.emplace_back();
    c.app = root.add_subcommand("fit", "refit arm exponents from a per-scale CSV of simulate lattice");
  c.add("--input", a.input, "per-scale CSV");
  c.add("--fit-scales", a.largest, "scales in the fit");
  c.body = [&s, &a, &c = c] {
    c.require({"input"});
    std::ifstream in(a.input);
    if (!in) throw Invalid("cannot read " + a.input);
    const auto rows = read_csv(in);
    const std::vector<std::string> header{"kind", "m", "n", "hits", "samples", "estimate", "stderr"};
    if (rows.empty() || rows.front() != header) throw Invalid(a.input + ": not a per-scale CSV");
    std::map<std::pair<int, int>, lattice::ArmMeasurement> by;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() != header.size()) throw Invalid(a.input + ":" + std::to_string(i + 1) + ": wrong field count");
      try {
        const int m = std::stoi(r[1]), n = std::stoi(r[2]);
        auto& x = by[{m, n}];
        x.m = m;
        x.n = n;
        x.nSamples = std::stol(r[4]);
        x.fkMeasured = false;
        const long h = std::stol(r[3]);
        if (r[0] == "blue")
          x.blueHits = h;
        else if (r[0] == "red")
          x.redHits = h;
        else if (r[0] == "fk") {
          x.fkHits = h;
          x.fkMeasured = true;
        } else
          throw Invalid("unknown kind " + r[0]);
      } catch (const std::logic_error& e) {
        throw Invalid(a.input + ":" + std::to_string(i + 1) + ": " + e.what());
      }
    }
    std::vector<lattice::ArmMeasurement> ms;
    for (auto& [k, v] : by) ms.push_back(v);
    Table t{{"kind", "exponent", "stderr", "chi2", "dof", "scales"}};
    for (auto [name, kind] : {std::pair{"blue", lattice::ArmKind::Blue},
                              {"red", lattice::ArmKind::Red},
                              {"fk", lattice::ArmKind::Fk}}) {
      std::vector<lattice::ArmMeasurement> sub;
      for (const auto& m : ms)
        if (kind != lattice::ArmKind::Fk || m.fkMeasured) sub.push_back(m);
      if (sub.empty()) continue;
      const auto f = lattice::fit_exponent(sub, kind, a.largest);
      std::string used;
      for (int i : f.used) used += (used.empty() ? "" : " ") + std::to_string(sub[std::size_t(i)].m) + "/" +
                                   std::to_string(sub[std::size_t(i)].n);
      t.add({std::string(name), f.exponent, f.stderr_, f.chi2, long(f.dof), used});
    }
    s.emit(t);
    return int(kOk);
  };
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Session s;
  CLI::App app{"bcle: exact formulas and Monte Carlo checks for boundary conformal loop ensembles", "bcle"};
  app.require_subcommand(1);
  app.set_version_flag("--version", BCLE_VERSION);
  app.add_option("--format", s.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--out", s.outDir, "directory for output files");
  app.add_option("--threads", s.threads, "worker threads (default: all cores)")->check(CLI::PositiveNumber);
  app.add_option("--config", s.configPath, "key=value file; command-line flags win");
  // global options may also follow the command
  app.fallthrough();

  ExactArgs ea;
  VerifyArgs va;
  SleArgs sa;
  LatticeArgs la;
  FitArgs fa;
  std::vector<Command> cmds;
  cmds.reserve(16);
  add_exact(app, s, cmds, ea);
  add_verify(app, s, cmds, va);
  add_simulate(app, s, cmds, sa, la);
  add_fit(app, s, cmds, fa);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    Command* cmd = nullptr;
    for (auto& c : cmds)
      if (c.app->parsed()) cmd = &c;
    if (!cmd) throw Invalid("no command given");
    if (!s.configPath.empty()) apply_config(*cmd, s.configPath);
    if (cmd->needsSeed && !cmd->given("seed")) throw Invalid("--seed is required for simulations");
    const int code = cmd->body();
    out << s.out.str();
    return code;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << BCLE_VERSION << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const PoleError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::invalid_argument& e) {  // DomainError, Unsupported, Invalid
    err << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const Divergent& e) {
    err << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  }
}

}  // namespace bcle::cli

// Prints one PASS/FAIL line per primary acceptance criterion; exits 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "streamir/harness.hpp"
#include "streamir/ir.hpp"
#include "streamir/pipeline.hpp"

using namespace streamir;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Shell {
  int code = -1;
  std::string out;
  double seconds = 0;
};

Shell sh(const std::string& cmd) {
  Shell r;
  auto t0 = Clock::now();
  FILE* p = ::popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int st = ::pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

std::string fixture(const std::string& f) { return std::string(STREAMIR_FIXTURES) + "/" + f; }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

// ------------------------------------------------------------------ worked examples

const char* kind_name(Stmt::Kind k) {
  switch (k) {
    case Stmt::Kind::Shift: return "shift";
    case Stmt::Kind::Input: return "input";
    case Stmt::Kind::Spawn: return "spawn";
    case Stmt::Kind::Eval: return "eval";
    case Stmt::Kind::Close: return "close";
    default: return "?";
  }
}

void atoms(const GuardPtr& g, std::set<std::string>& out) {
  if (g->kind == Guard::Kind::And) {
    atoms(g->lhs, out);
    atoms(g->rhs, out);
  } else if (g->kind != Guard::Kind::True) {
    out.insert(print_guard(g));
  }
}

// Every primitive statement with the guard atoms on its path, in program order.
struct Leaf {
  std::string what;
  std::set<std::string> guards;
};

void leaves(const StmtPtr& s, std::set<std::string> guards, std::vector<Leaf>& out) {
  switch (s->kind) {
    case Stmt::Kind::Skip: return;
    case Stmt::Kind::Seq:
    case Stmt::Kind::Par:
      leaves(s->first, guards, out);
      leaves(s->second, guards, out);
      return;
    case Stmt::Kind::If: {
      std::set<std::string> g = guards;
      atoms(s->guard, g);
      leaves(s->first, g, out);
      leaves(s->second, guards, out);  // translation never puts real work in else branches
      return;
    }
    case Stmt::Kind::Iterate:
    case Stmt::Kind::Assign: leaves(s->first, guards, out); return;
    default: out.push_back({std::string(kind_name(s->kind)) + " " + s->stream, guards}); return;
  }
}

void check_worked_examples(const std::string& cli) {
  // Vehicle example: expected guard atoms around each statement.
  const std::set<std::string> wp{"input? wp"}, pos{"input? pos"}, loc{"schedule local 10s missed_wp"};
  const std::set<std::string> closing{"input? pos", "dynamic syn reached[self]"};
  const std::map<std::string, std::set<std::string>> want = {
      {"shift wp", wp},           {"input wp", wp},        {"spawn reached", wp},   {"spawn missed_wp", wp},
      {"shift pos", pos},         {"input pos", pos},      {"shift moving", pos},   {"eval moving", pos},
      {"shift reached", pos},     {"eval reached", pos},   {"close reached", closing},
      {"close missed_wp", closing}, {"shift missed_wp", loc}, {"eval missed_wp", loc}};
  // Dependency order that layering has to respect.
  const std::vector<std::pair<std::string, std::string>> before = {
      {"input wp", "spawn reached"},   {"spawn reached", "shift reached"}, {"shift reached", "eval reached"},
      {"input pos", "eval reached"},   {"input pos", "eval moving"},       {"shift moving", "eval moving"},
      {"eval reached", "close reached"}, {"eval reached", "eval missed_wp"}, {"eval missed_wp", "close reached"},
      {"spawn missed_wp", "shift missed_wp"}, {"shift missed_wp", "eval missed_wp"},
      {"eval missed_wp", "close missed_wp"}};

  Shell r = sh(cli + " ir " + fixture("fig1a.lola") + " --opt none");
  std::string why;
  if (r.code != 0) why = "exit " + std::to_string(r.code);
  std::vector<Leaf> ls;
  if (why.empty()) {
    try {
      leaves(ir_parse(r.out).body, {}, ls);
    } catch (const std::exception& e) {
      why = std::string("unparsable IR: ") + e.what();
    }
  }
  std::map<std::string, std::size_t> pos_of;
  for (std::size_t i = 0; i < ls.size() && why.empty(); ++i) {
    auto it = want.find(ls[i].what);
    if (it == want.end()) why = "unexpected statement " + ls[i].what;
    else if (pos_of.count(ls[i].what)) why = "duplicate " + ls[i].what;
    else if (ls[i].guards != it->second) why = "guards of " + ls[i].what + " differ";
    pos_of[ls[i].what] = i;
  }
  if (why.empty() && pos_of.size() != want.size()) why = "missing statements";
  for (auto& [a, b] : before)
    if (why.empty() && pos_of[a] > pos_of[b]) why = a + " after " + b;
  if (why.empty() && r.seconds >= 1.0) why = "took " + std::to_string(r.seconds) + " s";
  std::string vehicle = why.empty() ? "" : "vehicle: " + why;
  std::string detail = "vehicle: " + std::to_string(ls.size()) + " statements match in " + std::to_string(r.seconds) + " s";

  // Shared-spawn example: one schedule guard around an assign holding both evals, no loop left.
  Shell e = sh(cli + " ir " + fixture("example32.lola") + " --opt all");
  why.clear();
  bool found = false;
  std::size_t eval_in_iterate = 0;
  std::function<void(const StmtPtr&, bool)> walk = [&](const StmtPtr& s, bool in_iter) {
    if (!s) return;
    if (s->kind == Stmt::Kind::Eval && in_iter) ++eval_in_iterate;
    if (s->kind == Stmt::Kind::If && s->guard->kind == Guard::Kind::Schedule && !s->guard->freq.local &&
        s->guard->freq.period == Duration{500'000'000} && s->first->kind == Stmt::Kind::Assign &&
        s->first->stream == "p" && s->first->expr && print_expr(s->first->expr) == "syn a") {
      std::vector<Leaf> body;
      leaves(s->first->first, {}, body);
      std::set<std::string> w;
      for (auto& l : body) w.insert(l.what);
      found = w == std::set<std::string>{"eval p", "eval q"};
    }
    walk(s->first, in_iter || s->kind == Stmt::Kind::Iterate);
    walk(s->second, in_iter);
  };
  if (e.code != 0) {
    why = "exit " + std::to_string(e.code);
  } else {
    try {
      walk(ir_parse(e.out).body, false);
    } catch (const std::exception& x) {
      why = x.what();
    }
  }
  if (why.empty() && !found) why = "no 'if schedule global 0.5s then assign p syn a {eval p; eval q}'";
  if (why.empty() && eval_in_iterate) why = "evals still inside iterate";
  if (why.empty() && e.seconds >= 1.0) why = "took " + std::to_string(e.seconds) + " s";
  detail += "; shared spawn: assign form in " + std::to_string(e.seconds) + " s";
  bool ok = vehicle.empty() && why.empty();
  report("worked-example-fidelity", ok, ok ? detail : vehicle + (why.empty() ? "" : " shared spawn: " + why));
}

// ------------------------------------------------------------------ differential suites

std::string first_report(const SuiteResult& r) {
  if (r.reports.empty()) return "";
  auto& d = r.reports.front();
  return " first divergence: seed " + std::to_string(d.seed) + (d.first ? " stream " + d.first->stream : "");
}

void check_differential(const std::string& workdir, std::size_t cases) {
  SuiteOptions o;
  o.cases = cases;
  o.seed = 1;
  o.gen.trace_len = 200;
  o.workdir = (fs::path(workdir) / "suite").string();
  o.pipelines = {Pipeline::InterpUnopt, Pipeline::InterpOpt, Pipeline::InterpSplit, Pipeline::EmittedUnopt,
                 Pipeline::EmittedOpt};
  SuiteResult r = run_suite(o);
  bool ok = r.cases == cases && r.divergences == 0 && r.generator_errors == 0 && r.build_failures == 0 &&
            r.seconds < 600;
  report("differential-equivalence", ok,
         std::to_string(r.cases) + " cases, " + std::to_string(r.divergences) + " divergences, " +
             std::to_string(r.build_failures) + " build failures, " + std::to_string(r.generator_errors) +
             " generator errors, " + std::to_string(static_cast<int>(r.seconds)) + " s" + first_report(r));

  SuiteOptions w = o;
  w.pipelines = {Pipeline::InterpUnopt, Pipeline::InterpSwappedPar, Pipeline::InterpPermutedIterate};
  SuiteResult rw = run_suite(w);
  report("well-definedness", rw.cases == cases && rw.divergences == 0 && rw.generator_errors == 0,
         std::to_string(rw.cases) + " cases, " + std::to_string(rw.divergences) + " divergences" + first_report(rw));
}

void check_memory(const std::string& workdir, std::size_t cases) {
  SuiteOptions m;
  m.cases = cases;
  m.seed = 1;
  m.gen.trace_len = 200;
  m.workdir = (fs::path(workdir) / "memory").string();
  m.pipelines = {Pipeline::InterpUnopt, Pipeline::InterpBounded, Pipeline::InterpOpt};
  SuiteResult rm = run_suite(m);
  report("memory-bound-conformance",
         rm.cases == cases && rm.divergences == 0 && rm.memory_bound_violations == 0 && rm.generator_errors == 0,
         std::to_string(rm.cases) + " cases, " + std::to_string(rm.divergences) + " divergences, " +
             std::to_string(rm.memory_bound_violations) + " bound violations" + first_report(rm) +
             (rm.memory_notes.empty() ? "" : " (" + rm.memory_notes.front() + ")"));
}

void check_rules(std::size_t cases) {
  std::vector<std::string> bad;
  for (Rule r : kAllRules) {
    RuleCheck c = check_rule(r, GenConfig{}, 3, cases);
    if (c.passed != cases || c.failure)
      bad.push_back(std::string(rule_name(r)) + " " + std::to_string(c.passed) + "/" + std::to_string(cases));
  }
  std::string d = std::to_string(kRuleCount) + " rules x " + std::to_string(cases) + " cases";
  for (auto& b : bad) d += "; failed " + b;
  report("per-rule-soundness", bad.empty(), d);
}

// ------------------------------------------------------------------ counters

Counters count(const AnalyzedSpec& a, OptLevel l, const std::vector<TraceEvent>& t, std::string& log) {
  CompileOptions o;
  o.level = l;
  Compiled c = compile(a, o);
  RunResult r = interpret(a, c, t);
  log = verdict_log(r.verdicts) + (r.fault ? "fault: " + *r.fault : "");
  return r.counters;
}

void check_intruder() {
  AnalyzedSpec a = analyze(slurp(fixture("intruder.lola")), "intruder.lola");
  const int events = 2000;
  std::string why, d;
  for (int k : {10, 100}) {
    auto t = intruder_trace(k, events);
    std::string l0, l1;
    Counters u = count(a, OptLevel::None, t, l0), o = count(a, OptLevel::All, t, l1);
    auto visits = [](const Counters& c, const char* s) {
      auto it = c.iterate_visits_by_stream.find(s);
      return it == c.iterate_visits_by_stream.end() ? std::uint64_t{0} : it->second;
    };
    std::uint64_t uv = visits(u, "track") + visits(u, "alarm"), ov = visits(o, "track") + visits(o, "alarm");
    double ratio = static_cast<double>(o.total_stmt()) / static_cast<double>(u.total_stmt());
    d += "k=" + std::to_string(k) + ": visits " + std::to_string(uv) + " -> " + std::to_string(ov) + ", statements " +
         std::to_string(u.total_stmt()) + " -> " + std::to_string(o.total_stmt()) + "; ";
    if (l0 != l1 && why.empty()) why = "verdicts differ at k=" + std::to_string(k);
    if (ov != 0 && why.empty()) why = "optimized monitor still iterates at k=" + std::to_string(k);
    if (uv < static_cast<std::uint64_t>(k) * events && why.empty()) why = "unoptimized visits below k*events";
    if (ratio > 0.5 && why.empty()) why = "statements reduced by less than half at k=" + std::to_string(k);
  }
  report("optimization-effectiveness", why.empty(), why.empty() ? d : why + " (" + d + ")");
}

// Coefficient of determination of the least-squares line through (x, y).
double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx), icpt = (sy - slope * sx) / n, mean = sy / n;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double f = icpt + slope * x[i];
    ss_res += (y[i] - f) * (y[i] - f);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  return ss_tot == 0 ? 0 : 1 - ss_res / ss_tot;
}

void check_geofence() {
  auto t = geofence_trace(1000, 7);
  std::vector<double> xs, unopt, opt;
  std::string d;
  bool same = true;
  for (int n : {4, 8, 16, 32}) {
    AnalyzedSpec a = analyze(gen_geofence(n));
    std::string l0, l1;
    xs.push_back(n);
    unopt.push_back(static_cast<double>(count(a, OptLevel::None, t, l0).total_stmt()));
    opt.push_back(static_cast<double>(count(a, OptLevel::All, t, l1).total_stmt()));
    same &= l0 == l1;
    d += "n=" + std::to_string(n) + ": " + std::to_string(static_cast<long>(unopt.back())) + "/" +
         std::to_string(static_cast<long>(opt.back())) + "; ";
  }
  double r0 = r_squared(xs, unopt), r1 = r_squared(xs, opt);
  std::ostringstream ss;
  ss << d << "R^2 unopt " << r0 << ", opt " << r1;
  report("linear-scaling", same && r0 >= 0.99 && r1 >= 0.99, ss.str() + (same ? "" : " (verdicts differ)"));
}

// ------------------------------------------------------------------ semantics suite

void check_semantics_suite(const std::string& test_binary) {
  const std::vector<std::string> suites = {"ExprRules", "GuardRules", "StmtRules", "SliceRule", "UpdateRule",
                                           "NextDeadline", "StepRules", "MonitorRuns", "WellDefinedness"};
  const std::vector<std::string> rules = {
      "eval_self",      "eval_syn",          "eval_get",           "eval_get_dft",     "eval_const",
      "eval_bin_op",    "eval_window",       "eval_input_guard",   "eval_bin_guard",   "eval_schedule_global",
      "eval_schedule_local", "eval_dynamic", "exec_skip",          "exec_shift",       "exec_seq",
      "exec_parallel",  "exec_input",        "exec_eval",          "exec_close",       "exec_spawn_new",
      "exec_spawn_exists", "exec_if_true",   "exec_if_false",      "exec_iterate",     "exec_assign",
      "exec_deadline"};
  std::string filter;
  for (auto& s : suites) filter += (filter.empty() ? "" : ":") + s + ".*";
  Shell list = sh("'" + test_binary + "' --gtest_list_tests --gtest_filter='" + filter + "'");
  std::vector<std::string> names;
  std::istringstream in(list.out);
  for (std::string line; std::getline(in, line);)
    if (line.rfind("  ", 0) == 0) names.push_back(line.substr(2));
  std::vector<std::string> missing;
  for (auto& r : rules) {
    bool hit = false;
    for (auto& n : names) hit |= n.rfind(r, 0) == 0 && (n.size() == r.size() || n[r.size()] == '_');
    if (!hit) missing.push_back(r);
  }
  Shell run = sh("'" + test_binary + "' --gtest_brief=1 --gtest_filter='" + filter + "'");
  bool ok = list.code == 0 && names.size() >= 40 && missing.empty() && run.code == 0;
  std::string d = std::to_string(names.size()) + " tests, " + std::to_string(rules.size() - missing.size()) + "/" +
                  std::to_string(rules.size()) + " rules named, run exit " + std::to_string(run.code);
  for (auto& m : missing) d += "; no test for " + m;
  report("semantics-micro-suite", ok, d);
}

void check_self_check() {
  std::string d, why;
  for (SeededBug b : {SeededBug::WrongGetDefault, SeededBug::WindowCutoffStrict, SeededBug::DeadlineAdvancedEarly,
                      SeededBug::IterateClosed, SeededBug::DroppedShift}) {
    BugHunt h = hunt_bug(b, GenConfig{}, 1, 500);
    d += std::string(bug_name(b)) + (h.detected_at ? " @" + std::to_string(*h.detected_at) : " missed") + "; ";
    if (!h.detected_at) why = "undetected bug";
  }
  report("harness-self-check", why.empty(), d);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string workdir = "acceptance-work";
  std::size_t cases = 500, rule_cases = 200;
  app.add_option("--workdir", workdir);
  app.add_option("--cases", cases, "differential cases");
  app.add_option("--rule-cases", rule_cases);
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);

  check_worked_examples(STREAMIR_CLI);
  check_differential(workdir, cases);
  check_rules(rule_cases);
  check_intruder();
  check_geofence();
  check_memory(workdir, cases);
  check_semantics_suite(STREAMIR_TEST_BINARY);
  check_self_check();
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
  return failures ? 1 : 0;
}

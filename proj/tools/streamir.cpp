#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "streamir/emitter.hpp"
#include "streamir/harness.hpp"
#include "streamir/pipeline.hpp"

using namespace streamir;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kSpecError = 1, kTraceError = 2, kFault = 3, kEmitError = 4, kDivergence = 5 };

struct Opts {
  std::string spec;
  std::string trace;
  std::string opt = "all";
  std::vector<std::string> rules;
  int max_passes = 32;
  bool dump_passes = false;
  bool counters = false;
  std::string backend = "ref";
  std::string out;
  bool build = false;
  bool instrument = false;
  int repeat = 5;
  // harness
  std::size_t cases = 100;
  std::uint64_t seed = 1;
  std::string pipelines;
  std::string workdir = "harness-work";
  std::size_t bundle = 40;
  bool self_check = false;
  bool mutation = false;
  std::size_t rule_cases = 0;
  bool no_shrink = false;
  int trace_len = 200;
  std::optional<std::size_t> show_case;
  // gen
  std::string what;
  int n = 4;
  int events = 100;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

AnalyzedSpec load_spec(const std::string& path) { return analyze(slurp(path), path); }

CompileOptions compile_options(const Opts& o) {
  CompileOptions c;
  auto lvl = parse_opt_level(o.opt);
  if (!lvl) throw CLI::ValidationError("--opt", "expected all, none, stmt or mem");
  c.level = *lvl;
  for (auto& r : o.rules) {
    auto rule = parse_rule(r);
    if (!rule) throw CLI::ValidationError("--rule", "unknown rule '" + r + "'");
    c.only.insert(*rule);
  }
  c.max_passes = o.max_passes;
  return c;
}

std::vector<TraceEvent> load_trace(const Opts& o, const StreamSpec& spec) {
  if (o.trace.empty() || o.trace == "-") return read_trace_csv(std::cin, spec);
  std::ifstream in(o.trace);
  if (!in) throw TraceFormatError("cannot open " + o.trace);
  return read_trace_csv(in, spec);
}

int cmd_check(const Opts& o) {
  AnalyzedSpec a = load_spec(o.spec);
  for (auto& w : a.warnings) std::cerr << w.format() << "\n";
  std::cout << o.spec << ": ok (" << a.spec.inputs.size() << " inputs, " << a.spec.outputs.size() << " outputs, "
            << a.layers.size() << " layers)\n";
  return kOk;
}

int cmd_ir(const Opts& o) {
  AnalyzedSpec a = load_spec(o.spec);
  CompileOptions c = compile_options(o);
  if (o.dump_passes)
    c.observe = [](int pass, const StmtPtr& body) {
      std::cout << "// pass " << pass << "\n" << print_stmt(body) << "\n";
    };
  Compiled m = compile(a, c);
  if (o.dump_passes) std::cout << "// result after " << m.rewrite.passes << " passes\n";
  std::cout << ir_print(m.monitor);
  if (m.rewrite.hit_max_passes) std::cerr << "warning: rewriting stopped at --max-passes " << o.max_passes << "\n";
  return kOk;
}

int cmd_run(const Opts& o) {
  AnalyzedSpec a = load_spec(o.spec);
  Compiled m = compile(a, compile_options(o));
  auto trace = load_trace(o, a.spec);
  RunResult r = interpret(a, m, trace);
  std::cout << verdict_log(r.verdicts) << std::flush;
  if (o.counters) std::cerr << r.counters.json() << "\n";
  if (r.fault) {
    std::cerr << "runtime fault: " << *r.fault << "\n";
    return kFault;
  }
  return kOk;
}

int cmd_compile(const Opts& o) {
  if (o.backend != "ref") throw CLI::ValidationError("--backend", "only the 'ref' backend exists");
  AnalyzedSpec a = load_spec(o.spec);
  Compiled m = compile(a, compile_options(o));
  CppFormatter f;
  EmittedProgram p;
  try {
    p = emit(m.monitor, a, m.layout ? &*m.layout : nullptr, f, o.instrument);
  } catch (const EmissionError& e) {
    std::cerr << "emission error: " << e.what() << "\n";
    return kEmitError;
  }
  fs::create_directories(o.out);
  for (auto& [name, text] : p.files) std::ofstream(fs::path(o.out) / name, std::ios::binary) << text;
  std::ofstream build(fs::path(o.out) / "BUILD.txt");
  for (auto& c : p.build) build << c << "\n";
  std::cout << "wrote " << p.files.size() << " files to " << o.out << "\n";
  if (!o.build) {
    for (auto& c : p.build) std::cout << "build: (cd " << o.out << " && " << c << ")\n";
    return kOk;
  }
  BackendReport b = build_program(p, o.out);
  if (!b.built) {
    std::cerr << "build failed:\n" << b.build_output;
    return kEmitError;
  }
  std::cout << "built " << (fs::path(o.out) / p.entry).string() << "\n";
  if (!o.trace.empty()) {
    BackendReport r = run_program((fs::absolute(o.out) / p.entry).string(), o.trace);
    std::cout << r.out;
    std::cerr << r.err;
    return r.exit_code;
  }
  return kOk;
}

int cmd_bench(const Opts& o) {
  AnalyzedSpec a = load_spec(o.spec);
  auto trace = load_trace(o, a.spec);
  nlohmann::json j;
  j["spec"] = o.spec;
  j["events"] = trace.size();
  j["repeat"] = o.repeat;
  int rc = kOk;
  for (auto [name, lvl] : {std::pair{"unopt", OptLevel::None}, std::pair{"opt", OptLevel::All}}) {
    CompileOptions c;
    c.level = lvl;
    Compiled m = compile(a, c);
    std::vector<double> ms;
    RunResult first;
    for (int k = 0; k < std::max(1, o.repeat); ++k) {
      auto t0 = std::chrono::steady_clock::now();
      RunResult r = interpret(a, m, trace);
      ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
      if (k == 0) first = std::move(r);
    }
    std::sort(ms.begin(), ms.end());
    nlohmann::json v;
    v["counters"] = nlohmann::json::parse(first.counters.json());
    v["median_ms"] = ms[ms.size() / 2];
    v["verdicts"] = first.verdicts.size();
    if (first.fault) {
      v["fault"] = *first.fault;
      rc = kFault;
    }
    j[name] = v;
  }
  std::cout << j.dump(2) << "\n";
  return rc;
}

std::vector<Pipeline> parse_pipelines(const std::string& s) {
  if (s.empty()) return default_pipelines();
  std::vector<Pipeline> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto p = parse_pipeline(item);
    if (!p) throw CLI::ValidationError("--pipelines", "unknown pipeline '" + item + "'");
    out.push_back(*p);
  }
  return out;
}

int cmd_harness(const Opts& o) {
  GenConfig gen;
  gen.trace_len = o.trace_len;
  if (o.show_case) {
    Case c = make_case(gen, o.seed, *o.show_case);
    if (!o.out.empty()) {
      fs::create_directories(o.out);
      std::ofstream(fs::path(o.out) / "spec.lola") << c.spec_text;
      std::ofstream(fs::path(o.out) / "trace.csv") << write_trace_csv(c.trace, c.spec.spec);
    }
    std::cout << c.spec_text;
    return kOk;
  }
  nlohmann::json j;
  bool bad = false;
  if (o.self_check) {
    for (SeededBug b : {SeededBug::WrongGetDefault, SeededBug::WindowCutoffStrict, SeededBug::DeadlineAdvancedEarly,
                        SeededBug::IterateClosed, SeededBug::DroppedShift}) {
      BugHunt h = hunt_bug(b, gen, o.seed, o.cases);
      nlohmann::json e;
      e["detected"] = h.detected_at.has_value();
      if (h.detected_at) e["case"] = *h.detected_at;
      if (h.report) e["report"] = nlohmann::json::parse(h.report->json());
      j["seeded_bugs"][std::string(bug_name(b))] = e;
      bad |= !h.detected_at;
    }
  }
  if (o.mutation) {
    BugHunt h = hunt_broken_unique_assign(gen, o.seed, o.cases);
    nlohmann::json e;
    e["detected"] = h.detected_at.has_value();
    if (h.detected_at) e["case"] = *h.detected_at;
    if (h.report) e["report"] = nlohmann::json::parse(h.report->json());
    j["broken_unique_assign"] = e;
    bad |= !h.detected_at;
  }
  if (o.rule_cases > 0) {
    for (Rule r : kAllRules) {
      RuleCheck rc = check_rule(r, gen, o.seed, o.rule_cases);
      nlohmann::json e;
      e["passed"] = rc.passed;
      e["attempts"] = rc.attempts;
      if (rc.failure) e["failure"] = nlohmann::json::parse(rc.failure->json());
      j["rules"][std::string(rule_name(r))] = e;
      bad |= rc.failure.has_value() || rc.passed < o.rule_cases;
    }
  }
  if (!o.self_check && !o.mutation && o.rule_cases == 0) {
    SuiteOptions s;
    s.gen = gen;
    s.seed = o.seed;
    s.cases = o.cases;
    s.pipelines = parse_pipelines(o.pipelines);
    s.workdir = o.workdir;
    s.bundle = o.bundle;
    s.shrink = !o.no_shrink;
    s.progress = [](const std::string& m) { std::cerr << m << "\n"; };
    SuiteResult r = run_suite(s);
    std::cout << r.json(s) << "\n";
    return r.divergences || r.generator_errors || r.build_failures || r.memory_bound_violations ? kDivergence : kOk;
  }
  std::cout << j.dump(2) << "\n";
  return bad ? kDivergence : kOk;
}

int cmd_gen(const Opts& o) {
  if (o.what == "geofence") {
    std::cout << gen_geofence(o.n);
  } else if (o.what == "geofence-trace") {
    AnalyzedSpec a = analyze(gen_geofence(1));
    std::cout << write_trace_csv(geofence_trace(o.events, o.seed), a.spec);
  } else if (o.what == "intruder-trace") {
    StreamSpec s = parse_spec("input id : Int64\ninput dist : Int64\n");
    std::cout << write_trace_csv(intruder_trace(o.n, o.events), s);
  } else if (o.what == "spec") {
    GenConfig g;
    g.seed = o.seed;
    std::cout << gen_spec_text(g);
  } else {
    throw CLI::ValidationError("gen", "expected geofence, geofence-trace, intruder-trace or spec");
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"StreamIR toolkit: check, lower, optimize, interpret and compile stream specifications"};
  app.require_subcommand(1);
  Opts o;
  auto opt_flags = [&](CLI::App* c) {
    c->add_option("--opt", o.opt, "all, none, stmt or mem")->capture_default_str();
    c->add_option("--rule", o.rules, "restrict rewriting to these rules (repeatable)");
    c->add_option("--max-passes", o.max_passes, "fixpoint pass limit")->capture_default_str();
  };

  auto* check = app.add_subcommand("check", "parse and analyze a spec");
  check->add_option("spec", o.spec)->required();

  auto* ir = app.add_subcommand("ir", "print the (optimized) StreamIR program");
  ir->add_option("spec", o.spec)->required();
  opt_flags(ir);
  ir->add_flag("--dump-passes", o.dump_passes, "print the program after every pass");

  auto* run = app.add_subcommand("run", "interpret a spec over a CSV trace");
  run->add_option("spec", o.spec)->required();
  run->add_option("--trace", o.trace, "CSV trace (default: stdin)");
  opt_flags(run);
  run->add_flag("--counters", o.counters, "print execution counters to stderr");

  auto* comp = app.add_subcommand("compile", "emit a standalone C++ monitor");
  comp->add_option("spec", o.spec)->required();
  comp->add_option("--backend", o.backend)->capture_default_str();
  comp->add_option("--out", o.out, "output directory")->required();
  opt_flags(comp);
  comp->add_flag("--build", o.build, "build with the host compiler");
  comp->add_flag("--instrument", o.instrument, "count executions in the generated code");
  comp->add_option("--trace", o.trace, "with --build: run the program over this trace");

  auto* bench = app.add_subcommand("bench", "counters and timings, unoptimized vs optimized");
  bench->add_option("spec", o.spec)->required();
  bench->add_option("--trace", o.trace, "CSV trace (default: stdin)");
  bench->add_option("--repeat", o.repeat)->capture_default_str();

  auto* harness = app.add_subcommand("harness", "differential testing over random specs and traces");
  harness->add_option("--cases", o.cases)->capture_default_str();
  harness->add_option("--seed", o.seed)->capture_default_str();
  harness->add_option("--pipelines", o.pipelines, "comma-separated pipeline names");
  harness->add_option("--workdir", o.workdir)->capture_default_str();
  harness->add_option("--bundle", o.bundle, "cases per emitted translation unit")->capture_default_str();
  harness->add_option("--trace-len", o.trace_len)->capture_default_str();
  harness->add_flag("--self-check", o.self_check, "hunt the five seeded interpreter bugs");
  harness->add_flag("--mutation", o.mutation, "hunt a broken Unique-Assign");
  harness->add_option("--rule-cases", o.rule_cases, "per-rule soundness cases for every rule");
  harness->add_flag("--no-shrink", o.no_shrink);
  harness->add_option("--show-case", o.show_case, "print spec text of case I");
  harness->add_option("--out", o.out, "with --show-case: write spec.lola and trace.csv here");

  auto* gen = app.add_subcommand("gen", "print generated fixtures");
  gen->add_option("what", o.what, "geofence, geofence-trace, intruder-trace or spec")->required();
  gen->add_option("--n", o.n, "polygon lines or intruders")->capture_default_str();
  gen->add_option("--events", o.events)->capture_default_str();
  gen->add_option("--seed", o.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kTraceError;
  }
  if (const char* s = std::getenv("STREAMIR_SEED")) o.seed = std::strtoull(s, nullptr, 10);

  try {
    if (*check) return cmd_check(o);
    if (*ir) return cmd_ir(o);
    if (*run) return cmd_run(o);
    if (*comp) return cmd_compile(o);
    if (*bench) return cmd_bench(o);
    if (*harness) return cmd_harness(o);
    if (*gen) return cmd_gen(o);
  } catch (const SpecError& e) {
    std::cerr << e.what() << "\n";
    return kSpecError;
  } catch (const TraceFormatError& e) {
    std::cerr << "trace error: " << e.what() << "\n";
    return kTraceError;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kTraceError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSpecError;
  }
  return kOk;
}

#include "streamir/harness.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "streamir/emitter.hpp"
#include "streamir/lowering.hpp"

namespace streamir {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::pair<Pipeline, std::string_view> kPipelineNames[] = {
    {Pipeline::InterpUnopt, "interp-unopt"},
    {Pipeline::InterpOpt, "interp-opt"},
    {Pipeline::InterpSplit, "interp-split"},
    {Pipeline::EmittedUnopt, "emitted-unopt"},
    {Pipeline::EmittedOpt, "emitted-opt"},
    {Pipeline::InterpSwappedPar, "interp-swapped-par"},
    {Pipeline::InterpPermutedIterate, "interp-permuted-iterate"},
    {Pipeline::InterpBounded, "interp-bounded"},
};

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

PipelineOutput from_run(const RunResult& r) {
  PipelineOutput o;
  o.log = verdict_log(r.verdicts);
  o.fault = r.fault.has_value();
  if (r.fault) o.fault_text = *r.fault;
  o.peak_stored = r.peak_stored;
  return o;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string l;
  while (std::getline(in, l)) out.push_back(l);
  return out;
}

std::optional<Divergence> first_divergence(const std::vector<std::pair<std::string, PipelineOutput>>& outs) {
  std::vector<std::vector<std::string>> ls;
  for (auto& [p, o] : outs) ls.push_back(lines(o.log));
  std::size_t n = 0;
  for (auto& l : ls) n = std::max(n, l.size());
  auto at = [&](std::size_t k, std::size_t i) -> std::string {
    if (i < ls[k].size()) return ls[k][i];
    return outs[k].second.fault ? "<fault: " + outs[k].second.fault_text + ">" : "<none>";
  };
  for (std::size_t i = 0; i <= n; ++i) {
    bool differs = false;
    for (std::size_t k = 1; k < outs.size(); ++k)
      if (at(k, i) != at(0, i)) differs = true;
    if (!differs) continue;
    Divergence d;
    d.line = i;
    for (std::size_t k = 0; k < outs.size(); ++k) {
      std::string l = at(k, i);
      const std::string& name = outs[k].first;
      if (l.empty() || l[0] != '{') {
        d.values[name] = l;
        continue;
      }
      json j = json::parse(l, nullptr, false);
      if (j.is_discarded()) {
        d.values[name] = l;
        continue;
      }
      if (d.stream.empty()) {
        d.time = j["time"].dump();
        d.stream = j["stream"].get<std::string>();
        d.instance = j["params"].dump();
      }
      d.values[name] = j["time"].dump() + " " + j["stream"].get<std::string>() + j["params"].dump() + " = " +
                       j["value"].dump();
    }
    return d;
  }
  return std::nullopt;
}

// Greedy prefix shrinking, then removal of whole events and single input values.
std::vector<TraceEvent> shrink_trace(std::vector<TraceEvent> t,
                                     const std::function<bool(const std::vector<TraceEvent>&)>& fails) {
  auto prefix = [&](std::size_t n) { return std::vector<TraceEvent>(t.begin(), t.begin() + static_cast<long>(n)); };
  std::size_t lo = 0, hi = t.size();  // fails(prefix(hi)) holds
  while (lo + 1 < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (fails(prefix(mid)))
      hi = mid;
    else
      lo = mid;
  }
  t = prefix(hi);
  for (std::size_t i = t.size(); i-- > 0;) {
    auto c = t;
    c.erase(c.begin() + static_cast<long>(i));
    if (!c.empty() && fails(c)) {
      t = std::move(c);
      continue;
    }
    std::vector<std::string> keys;
    for (auto& [k, v] : t[i].values) keys.push_back(k);
    for (auto& k : keys) {
      if (t[i].values.size() <= 1) break;
      auto d = t;
      d[i].values.erase(k);
      if (fails(d)) t = std::move(d);
    }
  }
  return t;
}

Compiled compile_for(Pipeline p, const AnalyzedSpec& a, const Variant& v) {
  CompileOptions o;
  o.level = p == Pipeline::InterpOpt || p == Pipeline::EmittedOpt ? OptLevel::All : OptLevel::None;
  o.broken_unique_assign = v.broken_unique_assign;
  return compile(a, o);
}

}  // namespace

std::string_view pipeline_name(Pipeline p) {
  for (auto& [k, n] : kPipelineNames)
    if (k == p) return n;
  return "?";
}

std::optional<Pipeline> parse_pipeline(std::string_view s) {
  for (auto& [k, n] : kPipelineNames)
    if (n == s) return k;
  return std::nullopt;
}

bool is_emitted(Pipeline p) { return p == Pipeline::EmittedUnopt || p == Pipeline::EmittedOpt; }

std::vector<Pipeline> default_pipelines() {
  return {Pipeline::InterpUnopt, Pipeline::InterpOpt, Pipeline::InterpSplit, Pipeline::EmittedUnopt,
          Pipeline::EmittedOpt};
}

std::uint64_t case_seed(std::uint64_t suite_seed, std::size_t i) { return splitmix(suite_seed * 1000003ULL + i); }

Case make_case(const GenConfig& base, std::uint64_t suite_seed, std::size_t i) {
  Case c;
  c.seed = case_seed(suite_seed, i);
  c.index = i;
  GenConfig g = base;
  g.seed = c.seed;
  c.spec_text = gen_spec_text(g);
  c.spec = analyze(c.spec_text, "case-" + std::to_string(c.seed) + ".lola");
  c.trace = gen_trace(c.spec.spec, g);
  return c;
}

PipelineOutput run_interp_pipeline(Pipeline p, const Case& c, const std::vector<TraceEvent>& trace,
                                   const Variant& v) {
  RunOptions opts = default_run_options(c.spec);
  opts.bug = v.bug;
  Compiled m = compile_for(p, c.spec, v);
  switch (p) {
    case Pipeline::InterpUnopt:
    case Pipeline::InterpOpt: break;
    case Pipeline::InterpSplit: {
      SplitProgram s = split_event_time(m.monitor.body);
      opts.event_body = s.event;
      opts.timed_body = s.timed;
      break;
    }
    case Pipeline::InterpSwappedPar: opts.swap_par = true; break;
    case Pipeline::InterpPermutedIterate: opts.permute_seed = c.seed; break;
    case Pipeline::InterpBounded: {
      MemoryLayout layout = optimize_memory(c.spec, &m.monitor.body);
      return from_run(run(m.monitor, initial_memory(c.spec.spec, &layout, false), trace, opts));
    }
    default: throw std::logic_error("emitted pipeline run through the interpreter");
  }
  return from_run(interpret(c.spec, m, trace, opts));
}

std::string DiffReport::json() const {
  nlohmann::json j;
  j["pipelines"] = pipelines;
  j["equal"] = equal();
  j["seed"] = seed;
  if (first) {
    nlohmann::json d;
    d["verdict_index"] = first->line;
    d["time"] = first->time;
    d["stream"] = first->stream;
    d["instance"] = first->instance;
    d["values"] = first->values;
    j["divergence"] = d;
    j["trace_events"] = trace.size();
    j["original_events"] = original_events;
    j["spec"] = spec_text;
    j["trace_csv"] = trace_csv;
  }
  if (case_index) j["case"] = *case_index;
  if (!notes.empty()) j["notes"] = notes;
  return j.dump();
}

DiffReport diff_runners(const Case& c, const std::vector<LabeledRunner>& runners, bool shrink) {
  DiffReport r;
  r.seed = c.seed;
  r.case_index = c.index;
  r.spec_text = c.spec_text;
  r.original_events = c.trace.size();
  r.trace = c.trace;
  for (auto& [p, f] : runners) r.pipelines.push_back(p);
  auto outputs = [&](const std::vector<TraceEvent>& t) {
    std::vector<std::pair<std::string, PipelineOutput>> outs;
    for (auto& [p, f] : runners) outs.emplace_back(p, f(t));
    return outs;
  };
  auto outs = outputs(c.trace);
  std::size_t bad = 0;
  for (std::size_t k = 1; k < outs.size(); ++k)
    if (!(outs[k].second == outs[0].second)) {
      bad = k;
      break;
    }
  if (bad == 0) return r;
  if (shrink) {
    auto fails = [&](const std::vector<TraceEvent>& t) { return !(runners[0].second(t) == runners[bad].second(t)); };
    r.trace = shrink_trace(c.trace, fails);
    outs = outputs(r.trace);
  }
  r.first = first_divergence(outs);
  r.trace_csv = write_trace_csv(r.trace, c.spec.spec);
  if (!r.first) {
    // Only the fault flag differs.
    Divergence d;
    for (auto& [p, o] : outs) d.values[p] = o.fault ? "<fault: " + o.fault_text + ">" : "<no fault>";
    r.first = d;
  }
  return r;
}

DiffReport diff(const Case& c, const std::vector<Pipeline>& pipelines, bool shrink, const Variant& v) {
  std::vector<LabeledRunner> rs;
  for (auto p : pipelines) {
    if (is_emitted(p)) throw std::invalid_argument("emitted pipelines need a suite run");
    rs.emplace_back(std::string(pipeline_name(p)), [&c, p, v](const std::vector<TraceEvent>& t) { return run_interp_pipeline(p, c, t, v); });
  }
  return diff_runners(c, rs, shrink);
}

// ---------------------------------------------------------------- suites

namespace {

struct Bundle {
  fs::path dir;
  std::string exe;
  bool built = false;
  std::string build_output;
  // (case slot, pipeline) -> monitor index
  std::map<std::pair<std::size_t, Pipeline>, std::size_t> index;
};

PipelineOutput run_emitted(const Bundle& b, std::size_t monitor, const Case& c, const std::vector<TraceEvent>& t,
                           const std::string& tag) {
  fs::path trace = b.dir / (tag + ".csv");
  std::ofstream(trace) << write_trace_csv(t, c.spec.spec);
  BackendReport r = run_program(b.exe, trace.string(), {"--monitor", std::to_string(monitor)});
  PipelineOutput o;
  o.log = r.out;
  if (r.exit_code != 0) {
    o.fault = true;
    o.fault_text = "exit " + std::to_string(r.exit_code) + ": " + r.err;
  }
  return o;
}

void check_memory(const Case& c, const PipelineOutput& o, SuiteResult& res) {
  for (auto& [s, peak] : o.peak_stored) {
    auto it = c.spec.bounds.find(s);
    if (it == c.spec.bounds.end() || it->second.window) continue;
    if (peak > std::max<std::size_t>(it->second.length, 1)) {
      ++res.memory_bound_violations;
      if (res.memory_notes.size() < 10)
        res.memory_notes.push_back("seed " + std::to_string(c.seed) + ": " + s + " stored " + std::to_string(peak) +
                                   " > bound " + std::to_string(it->second.length));
    }
  }
}

}  // namespace

std::string SuiteResult::json(const SuiteOptions& o) const {
  nlohmann::json j;
  j["cases"] = cases;
  j["seed"] = o.seed;
  j["pipelines"] = nlohmann::json::array();
  for (auto p : o.pipelines) j["pipelines"].push_back(std::string(pipeline_name(p)));
  j["divergences"] = divergences;
  j["generator_errors"] = generator_errors;
  j["build_failures"] = build_failures;
  j["memory_bound_violations"] = memory_bound_violations;
  j["seconds"] = seconds;
  j["reports"] = nlohmann::json::array();
  for (auto& r : reports) j["reports"].push_back(nlohmann::json::parse(r.json()));
  j["errors"] = errors;
  j["memory_notes"] = memory_notes;
  return j.dump(2);
}

SuiteResult run_suite(const SuiteOptions& o) {
  auto t0 = std::chrono::steady_clock::now();
  SuiteResult res;
  bool emitted = std::any_of(o.pipelines.begin(), o.pipelines.end(), is_emitted);
  bool bounded = std::find(o.pipelines.begin(), o.pipelines.end(), Pipeline::InterpBounded) != o.pipelines.end();
  if (emitted) fs::create_directories(o.workdir);
  std::size_t step = emitted ? std::max<std::size_t>(o.bundle, 1) : 1;
  for (std::size_t start = 0; start < o.cases; start += step) {
    std::size_t end = std::min(o.cases, start + step);
    std::vector<Case> cases;
    for (std::size_t i = start; i < end; ++i) {
      try {
        cases.push_back(make_case(o.gen, o.seed, i));
      } catch (const std::exception& e) {
        ++res.generator_errors;
        if (res.errors.size() < 20)
          res.errors.push_back("case " + std::to_string(i) + " (seed " + std::to_string(case_seed(o.seed, i)) +
                               "): " + e.what());
      }
    }
    Bundle b;
    std::vector<Compiled> monitors;
    if (emitted) {
      b.dir = fs::path(o.workdir) / ("bundle-" + std::to_string(start / step));
      monitors.reserve(cases.size() * 2);
      std::vector<BundleItem> items;
      std::vector<std::size_t> owner;
      for (std::size_t k = 0; k < cases.size(); ++k)
        for (auto p : o.pipelines)
          if (is_emitted(p)) {
            b.index[{k, p}] = monitors.size();
            monitors.push_back(compile_for(p, cases[k].spec, {}));
            owner.push_back(k);
          }
      for (std::size_t m = 0; m < monitors.size(); ++m)
        items.push_back({&monitors[m].monitor, &cases[owner[m]].spec,
                         monitors[m].layout ? &*monitors[m].layout : nullptr});
      try {
        EmittedProgram prog = emit_bundle(items);
        BackendReport br = build_program(prog, b.dir.string(), "-O0");
        b.built = br.built;
        b.build_output = br.build_output;
        b.exe = (fs::absolute(b.dir) / prog.entry).string();
      } catch (const EmissionError& e) {
        b.build_output = e.what();
      }
      if (!b.built) {
        ++res.build_failures;
        res.errors.push_back("bundle " + b.dir.string() + ": " + b.build_output.substr(0, 2000));
        continue;
      }
    }
    for (std::size_t k = 0; k < cases.size(); ++k) {
      const Case& c = cases[k];
      std::vector<LabeledRunner> rs;
      for (auto p : o.pipelines) {
        if (is_emitted(p)) {
          std::size_t m = b.index.at({k, p});
          std::string tag = "case" + std::to_string(k) + "-" + std::string(pipeline_name(p));
          rs.emplace_back(std::string(pipeline_name(p)), [&b, m, &c, tag](const std::vector<TraceEvent>& t) { return run_emitted(b, m, c, t, tag); });
        } else {
          rs.emplace_back(std::string(pipeline_name(p)), [&c, p](const std::vector<TraceEvent>& t) { return run_interp_pipeline(p, c, t); });
        }
      }
      DiffReport r = diff_runners(c, rs, o.shrink);
      ++res.cases;
      if (!r.equal()) {
        ++res.divergences;
        if (res.reports.size() < 5) res.reports.push_back(r);
      }
      if (bounded) check_memory(c, run_interp_pipeline(Pipeline::InterpBounded, c, c.trace), res);
    }
    if (o.progress && (emitted || end % 100 == 0 || end == o.cases))
      o.progress("cases " + std::to_string(end) + "/" + std::to_string(o.cases) + ", divergences " +
                 std::to_string(res.divergences));
    if (emitted) fs::remove_all(b.dir);
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// ---------------------------------------------------------------- mutation checks

std::string_view bug_name(SeededBug b) {
  switch (b) {
    case SeededBug::None: return "none";
    case SeededBug::WrongGetDefault: return "wrong-get-default";
    case SeededBug::WindowCutoffStrict: return "window-cutoff-strict";
    case SeededBug::DeadlineAdvancedEarly: return "deadline-advanced-early";
    case SeededBug::IterateClosed: return "iterate-closed";
    case SeededBug::DroppedShift: return "dropped-shift";
  }
  return "?";
}

BugHunt hunt_bug(SeededBug bug, const GenConfig& gen, std::uint64_t seed, std::size_t max_cases) {
  BugHunt h{bug, std::nullopt, std::nullopt};
  Variant v{bug, false};
  for (std::size_t i = 0; i < max_cases; ++i) {
    Case c = make_case(gen, seed, i);
    std::vector<LabeledRunner> rs = {
        {"interp-unopt", [&](const std::vector<TraceEvent>& t) { return run_interp_pipeline(Pipeline::InterpUnopt, c, t); }},
        {"interp-unopt+" + std::string(bug_name(bug)),
         [&](const std::vector<TraceEvent>& t) { return run_interp_pipeline(Pipeline::InterpUnopt, c, t, v); }},
    };
    DiffReport r = diff_runners(c, rs, true);
    if (!r.equal()) {
      h.detected_at = i;
      h.report = r;
      return h;
    }
  }
  return h;
}

BugHunt hunt_broken_unique_assign(const GenConfig& gen, std::uint64_t seed, std::size_t max_cases) {
  BugHunt h{SeededBug::None, std::nullopt, std::nullopt};
  Variant v{SeededBug::None, true};
  for (std::size_t i = 0; i < max_cases; ++i) {
    Case c = make_case(gen, seed, i);
    DiffReport r = diff(c, {Pipeline::InterpUnopt, Pipeline::InterpOpt}, true, v);
    if (!r.equal()) {
      h.detected_at = i;
      h.report = r;
      return h;
    }
  }
  return h;
}

// ---------------------------------------------------------------- per-rule soundness

namespace {

std::size_t stmt_count(const StmtPtr& s) {
  if (!s) return 0;
  return 1 + stmt_count(s->first) + stmt_count(s->second);
}

// Preorder positions of statements of one kind.
void positions(const StmtPtr& s, Stmt::Kind k, std::size_t& at, std::vector<std::size_t>& out) {
  if (!s) return;
  if (s->kind == k) out.push_back(at);
  ++at;
  positions(s->first, k, at, out);
  positions(s->second, k, at, out);
}

// Replaces the n-th statement in preorder by f(statement).
StmtPtr replace_nth(const StmtPtr& s, std::size_t& n, const std::function<StmtPtr(const StmtPtr&)>& f) {
  if (!s) return s;
  if (n == 0) {
    n = static_cast<std::size_t>(-1);
    return f(s);
  }
  --n;
  StmtPtr a = replace_nth(s->first, n, f);
  StmtPtr b = replace_nth(s->second, n, f);
  if (a == s->first && b == s->second) return s;
  auto c = std::make_shared<Stmt>(*s);
  c->first = a;
  c->second = b;
  return c;
}

// Inserts a redex for rules that translated programs never contain.
StmtPtr embed(Rule r, const StmtPtr& body, const AnalyzedSpec& a, std::mt19937_64& g) {
  std::size_t n = g() % stmt_count(body);
  std::function<StmtPtr(const StmtPtr&)> f;
  switch (r) {
    case Rule::IfTrue: f = [](const StmtPtr& s) { return ir::if_(ir::g_true(), s, ir::skip()); }; break;
    case Rule::IfFalse: f = [](const StmtPtr& s) { return ir::if_(ir::g_false(), s, s); }; break;
    case Rule::RemoveSkip1:
      f = [&g](const StmtPtr& s) { return g() % 2 ? ir::seq(s, ir::skip()) : ir::par(ir::skip(), s); };
      break;
    case Rule::RemoveSkip2: {
      GuardPtr guard = a.spec.inputs.empty() ? ir::g_true() : ir::input_present(a.spec.inputs[0].name);
      f = [guard](const StmtPtr& s) { return ir::seq(s, ir::if_(guard, ir::skip())); };
      break;
    }
    case Rule::RemoveSkip3: {
      std::string o = a.spec.outputs.empty() ? "" : a.spec.outputs[g() % a.spec.outputs.size()].name;
      if (o.empty()) return body;
      f = [o](const StmtPtr& s) { return ir::seq(ir::iterate(o, ir::skip()), s); };
      break;
    }
    case Rule::IteratePar:
    case Rule::ImpliedIf: {
      // Only iterates or ifs can host these; translated programs hardly ever contain the redex.
      std::vector<std::size_t> at;
      std::size_t k = 0;
      positions(body, r == Rule::IteratePar ? Stmt::Kind::Iterate : Stmt::Kind::If, k, at);
      if (at.empty()) return body;
      n = at[g() % at.size()];
      if (r == Rule::IteratePar) {
        f = [&g](const StmtPtr& s) {
          StmtPtr none = ir::iterate(s->stream, ir::skip());
          return g() % 2 ? ir::par(s, none) : ir::par(none, s);
        };
      } else {
        f = [](const StmtPtr& s) { return ir::if_(s->guard, ir::if_(s->guard, s->first), s->second); };
      }
      break;
    }
    default: return body;
  }
  return replace_nth(body, n, f);
}

}  // namespace

RuleCheck check_rule(Rule r, const GenConfig& gen, std::uint64_t seed, std::size_t cases) {
  RuleCheck rc{r, 0, 0, std::nullopt};
  std::uint64_t rseed = splitmix(seed + 7919 * (static_cast<std::uint64_t>(r) + 1));
  for (std::size_t i = 0; rc.passed < cases && i < cases * 20; ++i) {
    ++rc.attempts;
    Case c;
    try {
      c = make_case(gen, rseed, i);
    } catch (const std::exception&) {
      continue;
    }
    std::mt19937_64 g(c.seed);
    MemoryLayout layout = optimize_memory(c.spec);
    RewriteContext ctx = rewrite_context(c.spec, &layout);
    StmtPtr body = embed(r, translate(c.spec.spec, c.spec.layers).body, c.spec, g);
    // Random walk over rules that have a redex, stopping once `r` can fire.
    int steps = static_cast<int>(g() % 9);
    std::vector<std::string> walk;
    for (int k = 0; k < steps + 24; ++k) {
      if (count_redexes(r, body, ctx) > 0 && k >= steps) break;
      std::vector<std::pair<Rule, std::size_t>> avail;
      for (Rule q : kAllRules)
        if (q != r)
          if (std::size_t n = count_redexes(q, body, ctx)) avail.emplace_back(q, n);
      if (avail.empty()) break;
      auto [q, n] = avail[g() % avail.size()];
      walk.push_back(std::string(rule_name(q)));
      body = apply_rule_at(q, body, ctx, g() % n);
    }
    std::size_t n = count_redexes(r, body, ctx);
    if (n == 0) continue;
    StmtPtr after = apply_rule_at(r, body, ctx, g() % n);

    auto runner = [&c, &layout](StmtPtr b) {
      return [&c, &layout, b](const std::vector<TraceEvent>& t) {
        return from_run(run(Monitor{b}, initial_memory(c.spec.spec, &layout, true), t, default_run_options(c.spec)));
      };
    };
    std::vector<LabeledRunner> rs = {
        {"interp-unopt",
         [&c](const std::vector<TraceEvent>& t) { return run_interp_pipeline(Pipeline::InterpUnopt, c, t); }},
        {"before-" + std::string(rule_name(r)), runner(body)},
        {"after-" + std::string(rule_name(r)), runner(after)},
    };
    DiffReport d = diff_runners(c, rs, true);
    if (!d.equal()) {
      d.notes = walk;
      d.notes.push_back("before: " + print_stmt(body));
      rc.failure = d;
      return rc;
    }
    ++rc.passed;
  }
  return rc;
}

}  // namespace streamir

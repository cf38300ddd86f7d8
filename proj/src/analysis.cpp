#include <algorithm>
#include <functional>

#include "streamir/spec.hpp"

namespace streamir {

// ---------------------------------------------------------------- small types

bool EventFormula::eval(const std::set<std::string>& present) const {
  switch (kind) {
    case Kind::Atom: return present.count(name) > 0;
    case Kind::And:
      return std::all_of(args.begin(), args.end(), [&](const EventFormula& f) { return f.eval(present); });
    case Kind::Or:
      return std::any_of(args.begin(), args.end(), [&](const EventFormula& f) { return f.eval(present); });
  }
  return false;
}

void EventFormula::atoms(std::set<std::string>& out) const {
  if (kind == Kind::Atom) out.insert(name);
  for (auto& a : args) a.atoms(out);
}

std::string EventFormula::str() const {
  if (kind == Kind::Atom) return name;
  std::string s = "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) s += kind == Kind::And ? " && " : " || ";
    s += args[i].str();
  }
  return s + ")";
}

bool EventFormula::operator==(const EventFormula& o) const {
  return kind == o.kind && name == o.name && args == o.args;
}

bool Pacing::operator==(const Pacing& o) const {
  if (kind != o.kind) return false;
  if (kind == Kind::Event) return event == o.event;
  return period == o.period;
}

std::string Pacing::str() const {
  switch (kind) {
    case Kind::Event: return "@" + event.str();
    case Kind::Global: return "@Global(" + format_duration(period) + ")";
    case Kind::Local: return "@Local(" + format_duration(period) + ")";
  }
  return "?";
}

bool Clause::operator==(const Clause& o) const {
  return pacing == o.pacing && structural_eq(when, o.when) && structural_eq(with, o.with);
}

std::string Task::str() const {
  static const char* names[] = {"Input", "Spawn", "Shift", "Eval", "Close"};
  return std::string(names[static_cast<int>(kind)]) + "(" + stream + ")";
}

const InputDecl* StreamSpec::input(std::string_view n) const {
  for (auto& i : inputs)
    if (i.name == n) return &i;
  return nullptr;
}
const OutputDecl* StreamSpec::output(std::string_view n) const {
  for (auto& o : outputs)
    if (o.name == n) return &o;
  return nullptr;
}
int StreamSpec::decl_index(std::string_view n) const {
  for (std::size_t i = 0; i < inputs.size(); ++i)
    if (inputs[i].name == n) return static_cast<int>(i);
  for (std::size_t i = 0; i < outputs.size(); ++i)
    if (outputs[i].name == n) return static_cast<int>(inputs.size() + i);
  return -1;
}
Type StreamSpec::value_type(std::string_view n) const {
  if (auto i = input(n)) return i->type;
  if (auto o = output(n)) return o->type;
  throw std::logic_error("unknown stream " + std::string(n));
}

std::optional<std::size_t> DependencyGraph::find(const Task& t) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] == t) return i;
  return std::nullopt;
}
bool DependencyGraph::has_edge(const Task& a, const Task& b) const {
  auto i = find(a), j = find(b);
  return i && j && edges.count({*i, *j}) > 0;
}

int AnalyzedSpec::layer_of(const Task& t) const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    for (auto& x : layers[i])
      if (x == t) return static_cast<int>(i);
  return -1;
}

// ---------------------------------------------------------------- typing

std::optional<Type> type_of(const ExprPtr& e, const TypeEnv& env, std::string* err) {
  auto fail = [&](const std::string& m) -> std::optional<Type> {
    if (err && err->empty()) *err = m;
    return std::nullopt;
  };
  using K = Expr::Kind;
  auto stream_type = [&](const std::string& s) -> std::optional<Type> {
    if (!env.spec) return std::nullopt;
    if (auto i = env.spec->input(s)) return i->type;
    if (auto o = env.spec->output(s)) return o->type;
    return std::nullopt;
  };
  auto check_inst = [&](const Expr& x) -> bool {
    const OutputDecl* o = env.spec ? env.spec->output(x.stream) : nullptr;
    Type want = o && o->parameterized ? o->param_type : Type::Unit;
    auto t = type_of(x.inst, env, err);
    if (!t) return false;
    if (*t != want) {
      fail("instance of '" + x.stream + "' has type " + std::string(type_name(*t)) + ", expected " +
           std::string(type_name(want)));
      return false;
    }
    return true;
  };
  switch (e->kind) {
    case K::Const: return e->value.type();
    case K::Self:
      if (!env.has_self) return fail("'self' used outside of a parameterized context");
      return env.self_type;
    case K::Syn: {
      auto t = stream_type(e->stream);
      if (!t) return fail("unknown stream '" + e->stream + "'");
      if (!check_inst(*e)) return std::nullopt;
      return t;
    }
    case K::Get: {
      auto t = stream_type(e->stream);
      if (!t) return fail("unknown stream '" + e->stream + "'");
      if (!check_inst(*e)) return std::nullopt;
      if (e->offset < 1) return fail("offset must be at least 1");
      auto d = type_of(e->dft, env, err);
      if (!d) return std::nullopt;
      if (*d != *t)
        return fail("default of offset access to '" + e->stream + "' has type " + std::string(type_name(*d)) +
                    ", expected " + std::string(type_name(*t)));
      return t;
    }
    case K::Window: {
      auto t = stream_type(e->stream);
      if (!t) return fail("unknown stream '" + e->stream + "'");
      if (!check_inst(*e)) return std::nullopt;
      if (e->dur.ns <= 0) return fail("window duration must be positive");
      std::optional<Type> r;
      switch (e->agg.kind) {
        case AggKind::Exists:
        case AggKind::Forall:
          if (*t != Type::Bool) return fail("exists/forall need a Bool stream");
          r = Type::Bool;
          break;
        case AggKind::Count: r = Type::Int64; break;
        case AggKind::Sum:
          if (*t != Type::Int64 && *t != Type::Float64) return fail("sum needs a numeric stream");
          r = t;
          break;
        case AggKind::Avg:
          if (*t != Type::Int64 && *t != Type::Float64) return fail("avg needs a numeric stream");
          r = Type::Float64;
          break;
        case AggKind::Min:
        case AggKind::Max:
          if (*t == Type::Bool) return fail("min/max need an ordered stream");
          r = t;
          break;
        case AggKind::Last: r = t; break;
      }
      if (e->agg.fallback && e->agg.fallback->type() != *r)
        return fail("window default has type " + std::string(type_name(e->agg.fallback->type())) + ", expected " +
                    std::string(type_name(*r)));
      return r;
    }
    case K::Bin: {
      auto l = type_of(e->lhs, env, err);
      if (!l) return std::nullopt;
      auto r = type_of(e->rhs, env, err);
      if (!r) return std::nullopt;
      std::string op(binop_symbol(e->bop));
      switch (e->bop) {
        case BinOp::Add:
        case BinOp::Sub:
        case BinOp::Mul:
        case BinOp::Div:
        case BinOp::Rem:
          if (*l != *r || (*l != Type::Int64 && *l != Type::Float64))
            return fail("operator " + op + " needs two Int64 or two Float64 operands");
          return l;
        case BinOp::Eq:
        case BinOp::Ne:
          if (*l != *r) return fail("operator " + op + " compares values of different types");
          return Type::Bool;
        case BinOp::Lt:
        case BinOp::Le:
        case BinOp::Gt:
        case BinOp::Ge:
          if (*l != *r || *l == Type::Bool || *l == Type::Unit)
            return fail("operator " + op + " needs two ordered operands of one type");
          return Type::Bool;
        case BinOp::And:
        case BinOp::Or:
          if (*l != Type::Bool || *r != Type::Bool) return fail("operator " + op + " needs Bool operands");
          return Type::Bool;
      }
      return std::nullopt;
    }
    case K::Un: {
      auto a = type_of(e->lhs, env, err);
      if (!a) return std::nullopt;
      if (e->uop == UnOp::Not) {
        if (*a != Type::Bool) return fail("'!' needs a Bool operand");
        return Type::Bool;
      }
      if (*a != Type::Int64 && *a != Type::Float64) return fail("unary '-' needs a numeric operand");
      return a;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- pacing inference

namespace {

[[noreturn]] void spec_error(const StreamSpec& s, SourceLoc loc, const std::string& msg) {
  throw SpecError({Diagnostic{s.file, loc, "error", msg}});
}

// P => Q for positive formulas, by truth table over the atoms of both.
bool event_implies(const EventFormula& p, const EventFormula& q) {
  std::set<std::string> atoms;
  p.atoms(atoms);
  q.atoms(atoms);
  std::vector<std::string> v(atoms.begin(), atoms.end());
  if (v.size() > 20) return false;
  for (std::uint32_t mask = 0; mask < (1u << v.size()); ++mask) {
    std::set<std::string> present;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (mask & (1u << i)) present.insert(v[i]);
    if (p.eval(present) && !q.eval(present)) return false;
  }
  return true;
}

EventFormula conj(const std::vector<EventFormula>& fs) {
  std::vector<EventFormula> flat;
  for (auto& f : fs) {
    if (f.kind == EventFormula::Kind::And) {
      for (auto& a : f.args)
        if (std::find(flat.begin(), flat.end(), a) == flat.end()) flat.push_back(a);
    } else if (std::find(flat.begin(), flat.end(), f) == flat.end()) {
      flat.push_back(f);
    }
  }
  if (flat.size() == 1) return flat[0];
  EventFormula a;
  a.kind = EventFormula::Kind::And;
  a.args = flat;
  return a;
}

bool same_family(const OutputDecl& a, const OutputDecl& b) {
  return a.name == b.name || (a.parameterized && b.parameterized && a.spawn && b.spawn && *a.spawn == *b.spawn &&
                              a.close.has_value() == b.close.has_value() && (!a.close || *a.close == *b.close));
}

class PacingInference {
 public:
  explicit PacingInference(StreamSpec& s) : spec_(s) {}

  void run() {
    for (auto& o : spec_.outputs) eval_pacing(o);
    for (auto& o : spec_.outputs) {
      if (o.spawn) resolve(o, *o.spawn, "spawn");
      if (o.close) resolve(o, *o.close, "close");
    }
    for (auto& o : spec_.outputs) {
      if (o.spawn) check(o, *o.spawn, "spawn");
      check(o, o.eval, "eval");
      if (o.close) check(o, *o.close, "close");
    }
    for (auto& o : spec_.outputs) {
      auto note = [&](const Clause& c) {
        if (c.pacing->kind == Pacing::Kind::Global) spec_.frequencies.insert(Freq{false, c.pacing->period, {}});
        if (c.pacing->kind == Pacing::Kind::Local) spec_.frequencies.insert(Freq{true, c.pacing->period, o.name});
      };
      if (o.spawn) note(*o.spawn);
      note(o.eval);
      if (o.close) note(*o.close);
    }
  }

 private:
  const Pacing& eval_pacing(OutputDecl& o) {
    if (o.eval.pacing) return *o.eval.pacing;
    if (std::find(stack_.begin(), stack_.end(), o.name) != stack_.end()) {
      std::string cyc;
      for (auto it = std::find(stack_.begin(), stack_.end(), o.name); it != stack_.end(); ++it) cyc += *it + " -> ";
      spec_error(spec_, o.loc, "cyclic synchronous dependency: " + cyc + o.name);
    }
    stack_.push_back(o.name);
    resolve(o, o.eval, "eval");
    stack_.pop_back();
    return *o.eval.pacing;
  }

  void resolve(OutputDecl& o, Clause& c, const char* what) {
    if (c.pacing) return;
    std::vector<Pacing> ps;
    for (auto& d : c.sync_deps) {
      if (auto in = spec_.input(d)) {
        Pacing p;
        p.kind = Pacing::Kind::Event;
        p.event.name = in->name;
        ps.push_back(p);
      } else if (d == o.name && std::string(what) == "close") {
        ps.push_back(eval_pacing(o));
      } else {
        auto* t = const_cast<OutputDecl*>(spec_.output(d));
        ps.push_back(eval_pacing(*t));
      }
    }
    if (ps.empty())
      spec_error(spec_, c.loc,
                 std::string("un-inferable pacing for ") + what + " clause of '" + o.name +
                     "': no synchronous accesses; annotate it with @");
    bool any_event = false, any_periodic = false;
    for (auto& p : ps) (p.kind == Pacing::Kind::Event ? any_event : any_periodic) = true;
    if (any_event && any_periodic)
      spec_error(spec_, c.loc, std::string("mixed pacing in ") + what + " clause of '" + o.name +
                                   "': event-based and periodic streams accessed synchronously");
    if (any_periodic) {
      for (auto& p : ps)
        if (!(p == ps[0]))
          spec_error(spec_, c.loc, std::string("mixed pacing in ") + what + " clause of '" + o.name +
                                       "': different periodic pacings accessed synchronously");
      c.pacing = ps[0];
      return;
    }
    std::vector<EventFormula> fs;
    for (auto& p : ps) fs.push_back(p.event);
    Pacing p;
    p.kind = Pacing::Kind::Event;
    p.event = conj(fs);
    c.pacing = p;
  }

  void check(const OutputDecl& o, const Clause& c, const char* what) {
    const Pacing& p = *c.pacing;
    if (p.kind == Pacing::Kind::Local && std::string_view(what) == "spawn")
      spec_error(spec_, c.loc, "spawn clause of '" + o.name + "' cannot use a local pacing: no instance exists yet");
    for (auto& d : c.sync_deps) {
      std::string where = std::string(what) + " clause of '" + o.name + "'";
      if (spec_.input(d)) {
        if (p.kind != Pacing::Kind::Event)
          spec_error(spec_, c.loc, "periodic " + where + " accesses input '" + d +
                                       "' synchronously; use an offset or .hold()");
        EventFormula atom;
        atom.name = d;
        if (!event_implies(p.event, atom))
          spec_error(spec_, c.loc, where + " accesses '" + d + "' synchronously but its pacing " + p.str() +
                                       " does not imply the arrival of '" + d + "'");
        continue;
      }
      const OutputDecl* t = spec_.output(d);
      const Pacing& q = *t->eval.pacing;
      if (p.kind == Pacing::Kind::Event && q.kind == Pacing::Kind::Event) {
        if (!event_implies(p.event, q.event))
          spec_error(spec_, c.loc, where + " accesses '" + d + "' synchronously but pacing " + p.str() +
                                       " does not imply " + q.str());
      } else if (p.kind != q.kind || p.period != q.period) {
        spec_error(spec_, c.loc, where + " accesses '" + d + "' synchronously with incompatible pacing " + p.str() +
                                     " vs " + q.str());
      } else if (p.kind == Pacing::Kind::Local && !same_family(o, *t)) {
        spec_error(spec_, c.loc, where + " accesses '" + d +
                                     "' synchronously under a local pacing, but the streams do not share spawn");
      }
    }
  }

  StreamSpec& spec_;
  std::vector<std::string> stack_;
};

// Every stream access inside an expression.
struct Access {
  enum Kind { Sync, Offset, Window } kind;
  std::string stream;
  std::uint32_t offset = 0;
  Duration dur;
  bool self_inst = false;
};

void collect_accesses(const ExprPtr& e, std::vector<Access>& out) {
  if (!e) return;
  using K = Expr::Kind;
  switch (e->kind) {
    case K::Syn: out.push_back({Access::Sync, e->stream, 0, {}, e->inst->kind == K::Self}); break;
    case K::Get: out.push_back({Access::Offset, e->stream, e->offset, {}, e->inst->kind == K::Self}); break;
    case K::Window: out.push_back({Access::Window, e->stream, 0, e->dur, e->inst->kind == K::Self}); break;
    default: break;
  }
  collect_accesses(e->inst, out);
  collect_accesses(e->dft, out);
  collect_accesses(e->lhs, out);
  collect_accesses(e->rhs, out);
}

}  // namespace

StreamSpec infer_pacings(StreamSpec spec) {
  PacingInference(spec).run();
  return spec;
}

// ---------------------------------------------------------------- dependency graph

DependencyGraph build_dependency_graph(const StreamSpec& spec) {
  DependencyGraph g;
  using TK = Task::Kind;
  for (auto& i : spec.inputs) g.nodes.push_back({TK::Input, i.name});
  for (auto& o : spec.outputs) {
    if (o.parameterized) g.nodes.push_back({TK::Spawn, o.name});
    g.nodes.push_back({TK::Shift, o.name});
    g.nodes.push_back({TK::Eval, o.name});
    if (o.close) g.nodes.push_back({TK::Close, o.name});
  }
  auto edge = [&](const Task& a, const Task& b) {
    auto i = g.find(a), j = g.find(b);
    if (i && j) g.edges.insert({*i, *j});
  };
  auto producer = [&](const std::string& s) -> Task {
    return spec.is_input(s) ? Task{TK::Input, s} : Task{TK::Eval, s};
  };
  auto slot = [&](const std::string& s) -> Task {
    return spec.is_input(s) ? Task{TK::Input, s} : Task{TK::Shift, s};
  };
  for (auto& o : spec.outputs) {
    if (o.parameterized) edge({TK::Spawn, o.name}, {TK::Shift, o.name});
    edge({TK::Shift, o.name}, {TK::Eval, o.name});
    if (o.close) edge({TK::Eval, o.name}, {TK::Close, o.name});

    auto wire = [&](const ExprPtr& e, const std::vector<Task>& consumers, bool self_offset_ok) {
      std::vector<Access> acc;
      collect_accesses(e, acc);
      for (auto& a : acc) {
        for (auto& c : consumers) {
          bool self = a.stream == o.name;
          if (a.kind == Access::Offset) {
            if (!(self && self_offset_ok)) edge(slot(a.stream), c);
          } else {
            edge(producer(a.stream), c);
          }
          const OutputDecl* t = spec.output(a.stream);
          if (t && t->parameterized && !self) {
            edge({TK::Spawn, a.stream}, c);
            if (t->close && !(c.kind == TK::Close && c.stream == a.stream)) edge(c, {TK::Close, a.stream});
          }
        }
      }
    };
    if (o.spawn) {
      wire(o.spawn->when, {{TK::Spawn, o.name}}, false);
      wire(o.spawn->with, {{TK::Spawn, o.name}}, false);
    }
    wire(o.eval.when, {{TK::Shift, o.name}, {TK::Eval, o.name}}, false);
    wire(o.eval.with, {{TK::Eval, o.name}}, true);
    if (o.close) wire(o.close->when, {{TK::Close, o.name}}, true);
  }
  return g;
}

LayerList compute_layers(const DependencyGraph& g, const StreamSpec* spec) {
  std::size_t n = g.nodes.size();
  std::vector<std::vector<std::size_t>> preds(n), succs(n);
  for (auto [a, b] : g.edges) {
    preds[b].push_back(a);
    succs[a].push_back(b);
  }
  // Cycle detection with a path report.
  std::vector<int> color(n, 0);
  std::vector<std::size_t> path;
  std::function<void(std::size_t)> dfs = [&](std::size_t u) {
    color[u] = 1;
    path.push_back(u);
    for (auto v : succs[u]) {
      if (color[v] == 1) {
        std::string cyc;
        auto it = std::find(path.begin(), path.end(), v);
        for (; it != path.end(); ++it) cyc += g.nodes[*it].str() + " -> ";
        cyc += g.nodes[v].str();
        std::vector<std::string> names;
        for (auto jt = std::find(path.begin(), path.end(), v); jt != path.end(); ++jt)
          if (std::find(names.begin(), names.end(), g.nodes[*jt].stream) == names.end())
            names.push_back(g.nodes[*jt].stream);
        std::string streams;
        for (auto& s : names) streams += (streams.empty() ? "" : ", ") + s;
        SourceLoc loc;
        std::string file = "<spec>";
        if (spec) {
          file = spec->file;
          if (auto o = spec->output(g.nodes[v].stream)) loc = o->loc;
        }
        throw SpecError({Diagnostic{file, loc, "error", "cyclic dependency between streams " + streams + ": " + cyc}});
      }
      if (color[v] == 0) dfs(v);
    }
    path.pop_back();
    color[u] = 2;
  };
  for (std::size_t i = 0; i < n; ++i)
    if (color[i] == 0) dfs(i);

  std::vector<int> layer(n, -1);
  std::function<int(std::size_t)> depth = [&](std::size_t u) -> int {
    if (layer[u] >= 0) return layer[u];
    int d = 0;
    for (auto p : preds[u]) d = std::max(d, depth(p) + 1);
    return layer[u] = d;
  };
  int max_layer = -1;
  for (std::size_t i = 0; i < n; ++i) max_layer = std::max(max_layer, depth(i));
  LayerList out(static_cast<std::size_t>(max_layer + 1));
  for (std::size_t i = 0; i < n; ++i) out[static_cast<std::size_t>(layer[i])].push_back(g.nodes[i]);
  // Canonical order inside a layer: declaration order, then task kind.
  if (spec) {
    for (auto& l : out)
      std::stable_sort(l.begin(), l.end(), [&](const Task& a, const Task& b) {
        int da = spec->decl_index(a.stream), db = spec->decl_index(b.stream);
        if (da != db) return da < db;
        return a.kind < b.kind;
      });
  }
  return out;
}

// ---------------------------------------------------------------- memory bounds

MemoryBounds compute_memory_bounds(const StreamSpec& spec) {
  MemoryBounds b;
  for (auto& i : spec.inputs) b[i.name] = MemoryBound{};
  for (auto& o : spec.outputs) b[o.name] = MemoryBound{};
  auto visit = [&](const ExprPtr& e) {
    std::vector<Access> acc;
    collect_accesses(e, acc);
    for (auto& a : acc) {
      auto& mb = b[a.stream];
      if (a.kind == Access::Offset) mb.length = std::max<std::size_t>(mb.length, 1 + a.offset);
      if (a.kind == Access::Window) {
        mb.window = true;
        mb.max_window = std::max(mb.max_window, a.dur);
      }
    }
  };
  for (auto& o : spec.outputs) {
    if (o.spawn) {
      visit(o.spawn->when);
      visit(o.spawn->with);
    }
    visit(o.eval.when);
    visit(o.eval.with);
    if (o.close) visit(o.close->when);
  }
  return b;
}

AnalyzedSpec analyze(StreamSpec spec) {
  AnalyzedSpec a;
  a.spec = infer_pacings(std::move(spec));
  a.graph = build_dependency_graph(a.spec);
  a.layers = compute_layers(a.graph, &a.spec);
  a.bounds = compute_memory_bounds(a.spec);
  for (auto& o : a.spec.outputs) {
    auto warn_empty = [&](const ExprPtr& e, SourceLoc loc) {
      std::function<void(const ExprPtr&)> go = [&](const ExprPtr& x) {
        if (!x) return;
        if (x->kind == Expr::Kind::Window && !x->agg.fallback &&
            (x->agg.kind == AggKind::Min || x->agg.kind == AggKind::Max || x->agg.kind == AggKind::Avg ||
             x->agg.kind == AggKind::Last))
          a.warnings.push_back({a.spec.file, loc, "warning",
                                std::string(agg_name(x->agg.kind)) + " over '" + x->stream +
                                    "' has no default and faults on an empty window"});
        go(x->inst);
        go(x->dft);
        go(x->lhs);
        go(x->rhs);
      };
      go(e);
    };
    if (o.spawn) warn_empty(o.spawn->with, o.spawn->loc);
    warn_empty(o.eval.when, o.eval.loc);
    warn_empty(o.eval.with, o.eval.loc);
    if (o.close) warn_empty(o.close->when, o.close->loc);
  }
  return a;
}

AnalyzedSpec analyze(std::string_view text, std::string file) { return analyze(parse_spec(text, std::move(file))); }

// ---------------------------------------------------------------- well-formedness

std::vector<std::string> well_formed(const Monitor& m, const StreamSpec& spec) {
  std::vector<std::string> diags;
  struct Scope {
    bool bound = false;
    std::string stream;
  };
  auto decl = [&](const std::string& s, const char* ctx) {
    if (spec.decl_index(s) < 0) {
      diags.push_back(std::string(ctx) + " refers to undeclared stream '" + s + "'");
      return false;
    }
    return true;
  };
  auto env_for = [&](const Scope& sc) {
    TypeEnv env{&spec, Type::Unit, false};
    if (sc.bound) {
      const OutputDecl* o = spec.output(sc.stream);
      env.has_self = o && o->parameterized;
      env.self_type = o ? o->param_type : Type::Unit;
    }
    return env;
  };
  auto check_expr = [&](const ExprPtr& e, const Scope& sc, const char* ctx) -> std::optional<Type> {
    std::string err;
    auto t = type_of(e, env_for(sc), &err);
    if (!t) diags.push_back(std::string(ctx) + ": " + err);
    return t;
  };
  std::function<void(const GuardPtr&, const Scope&)> guard = [&](const GuardPtr& g, const Scope& sc) {
    switch (g->kind) {
      case Guard::Kind::Input:
        if (decl(g->stream, "input?") && !spec.is_input(g->stream))
          diags.push_back("input? applied to output stream '" + g->stream + "'");
        break;
      case Guard::Kind::Schedule:
        if (g->freq.period.ns <= 0) diags.push_back("schedule with non-positive period");
        if (g->freq.local) {
          if (decl(g->freq.stream, "schedule local") && !spec.output(g->freq.stream))
            diags.push_back("local schedule on input stream '" + g->freq.stream + "'");
          if (!sc.bound || sc.stream != g->freq.stream)
            diags.push_back("local schedule of '" + g->freq.stream + "' outside a binder for it");
        }
        break;
      case Guard::Kind::Dynamic: {
        auto t = check_expr(g->expr, sc, "dynamic guard");
        if (t && *t != Type::Bool) diags.push_back("dynamic guard is not boolean");
        break;
      }
      case Guard::Kind::And:
      case Guard::Kind::Or:
        guard(g->lhs, sc);
        guard(g->rhs, sc);
        break;
      default: break;
    }
  };
  std::function<void(const StmtPtr&, const Scope&)> stmt = [&](const StmtPtr& s, const Scope& sc) {
    using K = Stmt::Kind;
    auto need_output = [&](const char* what) {
      if (decl(s->stream, what) && !spec.output(s->stream))
        diags.push_back(std::string(what) + " targets input stream '" + s->stream + "'");
    };
    auto instance_ok = [&](const char* what) {
      // statements on parameterized streams need a binder for that stream
      const OutputDecl* o = spec.output(s->stream);
      if (o && o->parameterized && !sc.bound)
        diags.push_back(std::string(what) + " " + s->stream + " outside a binder for it");
      if (o && sc.bound && sc.stream != s->stream) {
        const OutputDecl* b = spec.output(sc.stream);
        Type bt = b && b->parameterized ? b->param_type : Type::Unit;
        Type ot = o->parameterized ? o->param_type : Type::Unit;
        if (bt != ot) diags.push_back(std::string(what) + " " + s->stream + " under a binder of incompatible '" + sc.stream + "'");
      }
    };
    switch (s->kind) {
      case K::Skip: break;
      case K::Shift:
        if (decl(s->stream, "shift")) instance_ok("shift");
        break;
      case K::Input:
        if (decl(s->stream, "input") && !spec.is_input(s->stream))
          diags.push_back("input targets output stream '" + s->stream + "'");
        break;
      case K::Spawn: {
        need_output("spawn");
        const OutputDecl* o = spec.output(s->stream);
        if (o && !o->parameterized) diags.push_back("spawn of non-parameterized stream '" + s->stream + "'");
        auto t = check_expr(s->expr, Scope{}, "spawn instance");
        if (o && t && o->parameterized && *t != o->param_type) diags.push_back("spawn instance has the wrong type");
        break;
      }
      case K::Eval: {
        need_output("eval");
        instance_ok("eval");
        auto t = check_expr(s->expr, sc, "eval expression");
        if (t && spec.output(s->stream) && *t != spec.output(s->stream)->type)
          diags.push_back("eval " + s->stream + " has the wrong value type");
        break;
      }
      case K::Close:
        need_output("close");
        instance_ok("close");
        break;
      case K::Seq:
      case K::Par:
        stmt(s->first, sc);
        stmt(s->second, sc);
        break;
      case K::If:
        guard(s->guard, sc);
        stmt(s->first, sc);
        stmt(s->second, sc);
        break;
      case K::Iterate:
      case K::Assign:
        if (decl(s->stream, s->kind == K::Iterate ? "iterate" : "assign")) {
          if (!spec.output(s->stream)) diags.push_back("binder over input stream '" + s->stream + "'");
          if (s->kind == K::Assign) {
            auto t = check_expr(s->expr, sc, "assign instance");
            const OutputDecl* o = spec.output(s->stream);
            Type want = o && o->parameterized ? o->param_type : Type::Unit;
            if (t && *t != want) diags.push_back("assign instance has the wrong type");
          }
        }
        stmt(s->first, Scope{true, s->stream});
        break;
    }
  };
  stmt(m.body, Scope{});
  return diags;
}

}  // namespace streamir

#include "streamir/interpreter.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "streamir/runtime/streamir_rt.hpp"

namespace streamir {

namespace {

sirt::InstKey to_key(const Value& v) {
  switch (v.type()) {
    case Type::Unit: return std::monostate{};
    case Type::Bool: return v.as_bool();
    case Type::Int64: return v.as_int();
    case Type::Str: return v.as_str();
    case Type::Float64: break;
  }
  throw std::logic_error("float instance");
}

Value binop(BinOp op, const Value& a, const Value& b) {
  using T = Type;
  if (a.type() != b.type()) throw RuntimeFault("operands of different types");
  T t = a.type();
  switch (op) {
    case BinOp::Add:
    case BinOp::Sub:
    case BinOp::Mul:
    case BinOp::Div:
    case BinOp::Rem:
      if (t == T::Int64) {
        auto x = a.as_int(), y = b.as_int();
        switch (op) {
          case BinOp::Add: return Value(sirt::iadd(x, y));
          case BinOp::Sub: return Value(sirt::isub(x, y));
          case BinOp::Mul: return Value(sirt::imul(x, y));
          case BinOp::Div:
            try {
              return Value(sirt::idiv(x, y));
            } catch (const sirt::Fault& f) {
              throw RuntimeFault(f.what());
            }
          default:
            try {
              return Value(sirt::irem(x, y));
            } catch (const sirt::Fault& f) {
              throw RuntimeFault(f.what());
            }
        }
      }
      if (t == T::Float64) {
        double x = a.as_float(), y = b.as_float();
        switch (op) {
          case BinOp::Add: return Value(x + y);
          case BinOp::Sub: return Value(x - y);
          case BinOp::Mul: return Value(x * y);
          case BinOp::Div: return Value(x / y);
          default: return Value(sirt::frem(x, y));
        }
      }
      throw RuntimeFault("arithmetic on non-numeric values");
    case BinOp::Eq:
    case BinOp::Ne: {
      bool eq;
      if (t == T::Float64)
        eq = a.as_float() == b.as_float();
      else
        eq = a == b;
      return Value(op == BinOp::Eq ? eq : !eq);
    }
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Gt:
    case BinOp::Ge: {
      if (t == T::Float64) {
        double x = a.as_float(), y = b.as_float();
        switch (op) {
          case BinOp::Lt: return Value(x < y);
          case BinOp::Le: return Value(x <= y);
          case BinOp::Gt: return Value(x > y);
          default: return Value(x >= y);
        }
      }
      auto c = a.compare(b);
      switch (op) {
        case BinOp::Lt: return Value(c < 0);
        case BinOp::Le: return Value(c <= 0);
        case BinOp::Gt: return Value(c > 0);
        default: return Value(c >= 0);
      }
    }
    case BinOp::And: return Value(a.as_bool() && b.as_bool());
    case BinOp::Or: return Value(a.as_bool() || b.as_bool());
  }
  throw RuntimeFault("bad operator");
}

Value aggregate(const Aggregation& agg, const std::vector<Value>& vs, Type elem) {
  auto empty = [&]() -> Value {
    if (agg.fallback) return *agg.fallback;
    throw RuntimeFault(std::string(agg_name(agg.kind)) + " over an empty window");
  };
  switch (agg.kind) {
    case AggKind::Exists: {
      bool r = false;
      for (auto& v : vs) r = r || v.as_bool();
      return Value(r);
    }
    case AggKind::Forall: {
      bool r = true;
      for (auto& v : vs) r = r && v.as_bool();
      return Value(r);
    }
    case AggKind::Count: return Value(static_cast<std::int64_t>(vs.size()));
    case AggKind::Sum:
      if (elem == Type::Float64) {
        double s = 0;
        for (auto& v : vs) s += v.as_float();
        return Value(s);
      } else {
        std::int64_t s = 0;
        for (auto& v : vs) s = sirt::iadd(s, v.as_int());
        return Value(s);
      }
    case AggKind::Min:
    case AggKind::Max: {
      if (vs.empty()) return empty();
      Value m = vs[0];
      for (auto& v : vs) {
        bool better;
        if (elem == Type::Float64)
          better = agg.kind == AggKind::Min ? v.as_float() < m.as_float() : m.as_float() < v.as_float();
        else
          better = agg.kind == AggKind::Min ? v < m : m < v;
        if (better) m = v;
      }
      return m;
    }
    case AggKind::Avg: {
      if (vs.empty()) return empty();
      double s = 0;
      for (auto& v : vs) s += elem == Type::Float64 ? v.as_float() : static_cast<double>(v.as_int());
      return Value(s / static_cast<double>(vs.size()));
    }
    case AggKind::Last:
      if (vs.empty()) return empty();
      return vs.back();
  }
  throw RuntimeFault("bad aggregation");
}

struct Pending {
  int rank;
  int decl;
  VerdictRecord rec;
};

class Executor {
 public:
  Executor(Memory& m, const RunOptions& o, Counters& c) : mem_(m), opts_(o), ctr_(c) {
    if (o.permute_seed) rng_.seed(*o.permute_seed);
  }

  Instance* instance(const std::string& s, const Value& v) {
    auto it = mem_.prefixes.find(s);
    if (it == mem_.prefixes.end()) return nullptr;
    auto jt = it->second.find(v);
    if (jt == it->second.end()) return nullptr;
    if (jt->second.closed && opts_.bug != SeededBug::IterateClosed) return nullptr;
    return &jt->second;
  }
  bool live(const std::string& s, const Value& v) const { return mem_.live(s, v); }

  Value eval(const Expr& e, const Value& inst, Time t) {
    ++ctr_.expr_evals;
    using K = Expr::Kind;
    switch (e.kind) {
      case K::Const: return e.value;
      case K::Self: return inst;
      case K::Syn: {
        Value i = eval(*e.inst, inst, t);
        Instance* in = instance(e.stream, i);
        if (!in) throw RuntimeFault("synchronous access to not-spawned " + e.stream + "[" + i.literal() + "]");
        const Slot* s = in->prefix.last();
        if (!s || !s->filled) throw RuntimeFault("synchronous access to " + e.stream + " without a current value");
        return s->v;
      }
      case K::Get: {
        Value i = eval(*e.inst, inst, t);
        Instance* in = instance(e.stream, i);
        if (!in) throw RuntimeFault("offset access to not-spawned " + e.stream + "[" + i.literal() + "]");
        if (in->prefix.length() > e.offset) {
          const Slot* s = in->prefix.from_end(e.offset);
          if (!s->filled) throw RuntimeFault("offset access to an unfilled slot of " + e.stream);
          auto& mx = max_offset_[e.stream];
          mx = std::max<std::uint64_t>(mx, e.offset);
          return s->v;
        }
        Value d = eval(*e.dft, inst, t);
        if (opts_.bug == SeededBug::WrongGetDefault) return default_value(d.type());
        return d;
      }
      case K::Window: {
        Value i = eval(*e.inst, inst, t);
        Instance* in = instance(e.stream, i);
        if (!in) throw RuntimeFault("window over not-spawned " + e.stream + "[" + i.literal() + "]");
        auto vs = slice(&in->prefix, t - e.dur, opts_.bug == SeededBug::WindowCutoffStrict);
        auto ty = mem_.types.find(e.stream);
        Type elem = ty != mem_.types.end() ? ty->second : vs->empty() ? Type::Unit : vs->front().type();
        return aggregate(e.agg, *vs, elem);
      }
      case K::Bin: {
        if (e.bop == BinOp::And || e.bop == BinOp::Or) {
          Value l = eval(*e.lhs, inst, t);
          if (l.type() != Type::Bool) throw RuntimeFault("logical operator on non-boolean");
          if (e.bop == BinOp::And && !l.as_bool()) return Value(false);
          if (e.bop == BinOp::Or && l.as_bool()) return Value(true);
          Value r = eval(*e.rhs, inst, t);
          if (r.type() != Type::Bool) throw RuntimeFault("logical operator on non-boolean");
          return r;
        }
        Value l = eval(*e.lhs, inst, t);
        Value r = eval(*e.rhs, inst, t);
        return binop(e.bop, l, r);
      }
      case K::Un: {
        Value a = eval(*e.lhs, inst, t);
        if (e.uop == UnOp::Not) {
          if (a.type() != Type::Bool) throw RuntimeFault("'!' on non-boolean");
          return Value(!a.as_bool());
        }
        if (a.type() == Type::Int64) return Value(sirt::ineg(a.as_int()));
        if (a.type() == Type::Float64) return Value(-a.as_float());
        throw RuntimeFault("'-' on non-numeric value");
      }
    }
    throw RuntimeFault("bad expression");
  }

  bool guard(const Guard& g, const Value& inst, const InputMap& in, Time t) {
    using K = Guard::Kind;
    switch (g.kind) {
      case K::Input: return in.count(g.stream) > 0;
      case K::Schedule: {
        const Deadlines& d = mem_.deadlines;
        if (!g.freq.local) {
          auto it = d.global.find(g.freq.period);
          return it != d.global.end() && it->second && *it->second == t;
        }
        auto it = d.local.find(LocalKey{g.freq.period, g.freq.stream, inst});
        return it != d.local.end() && it->second == t;
      }
      case K::Dynamic: {
        Value v = eval(*g.expr, inst, t);
        if (v.type() != Type::Bool) throw RuntimeFault("dynamic guard is not boolean");
        return v.as_bool();
      }
      case K::And: return guard(*g.lhs, inst, in, t) && guard(*g.rhs, inst, in, t);
      case K::Or: return guard(*g.lhs, inst, in, t) || guard(*g.rhs, inst, in, t);
      case K::True: return true;
      case K::False: return false;
    }
    return false;
  }

  void exec(const Stmt& s, const Value& inst, const InputMap& in, Time t) {
    using K = Stmt::Kind;
    ++ctr_.stmt[static_cast<std::size_t>(s.kind)];
    switch (s.kind) {
      case K::Skip: return;
      case K::Shift: {
        if (opts_.bug == SeededBug::DroppedShift && !opts_.inputs.count(s.stream)) return;
        Instance* i = instance(s.stream, inst);
        if (!i) throw RuntimeFault(ctx(s, inst) + "shift of a not-spawned instance");
        i->prefix.shift(t);
        note_peak(s.stream, *i);
        return;
      }
      case K::Input: {
        auto it = in.find(s.stream);
        if (it == in.end()) throw RuntimeFault(ctx(s, inst) + "input statement without a value");
        Instance* i = instance(s.stream, Value(Unit{}));
        if (!i) throw RuntimeFault(ctx(s, inst) + "unknown input stream");
        fill(s, *i, t, it->second, Value(Unit{}));
        return;
      }
      case K::Eval: {
        Instance* i = instance(s.stream, inst);
        if (!i) throw RuntimeFault(ctx(s, inst) + "eval of a not-spawned instance");
        Value v;
        try {
          v = eval(*s.expr, inst, t);
        } catch (const RuntimeFault& f) {
          throw RuntimeFault(ctx(s, inst) + f.what());
        }
        i = instance(s.stream, inst);
        fill(s, *i, t, std::move(v), inst);
        return;
      }
      case K::Spawn: {
        Value p;
        try {
          p = eval(*s.expr, inst, t);
        } catch (const RuntimeFault& f) {
          throw RuntimeFault(ctx(s, inst) + f.what());
        }
        auto& map = mem_.prefixes[s.stream];
        auto it = map.find(p);
        if (it != map.end() && !it->second.closed) return;  // exec-spawn-exists
        note_transition(s.stream, p, false);
        Storage st = mem_.storage.count(s.stream) ? mem_.storage.at(s.stream) : Storage{};
        map.insert_or_assign(p, Instance{Prefix(st), t, false});
        return;
      }
      case K::Close: {
        auto& map = mem_.prefixes[s.stream];
        auto it = map.find(inst);
        if (it == map.end() || it->second.closed) return;
        note_transition(s.stream, inst, true);
        if (opts_.bug == SeededBug::IterateClosed)
          it->second.closed = true;
        else
          map.erase(it);
        return;
      }
      case K::Seq:
        exec(*s.first, inst, in, t);
        exec(*s.second, inst, in, t);
        return;
      case K::Par:
        if (opts_.swap_par) {
          exec(*s.second, inst, in, t);
          exec(*s.first, inst, in, t);
        } else {
          exec(*s.first, inst, in, t);
          exec(*s.second, inst, in, t);
        }
        return;
      case K::If: {
        ++ctr_.guard_evals;
        bool g;
        try {
          g = guard(*s.guard, inst, in, t);
        } catch (const RuntimeFault& f) {
          throw RuntimeFault("in guard at instance " + inst.literal() + ": " + f.what());
        }
        exec(g ? *s.first : *s.second, inst, in, t);
        return;
      }
      case K::Iterate: {
        std::vector<std::pair<Time, Value>> order;
        auto mit = mem_.prefixes.find(s.stream);
        if (mit != mem_.prefixes.end()) {
          for (auto& [k, i] : mit->second)
            if (!i.closed || opts_.bug == SeededBug::IterateClosed) order.emplace_back(i.spawned, k);
        }
        std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
          if (a.first != b.first) return a.first < b.first;
          return a.second < b.second;
        });
        if (opts_.permute_seed) std::shuffle(order.begin(), order.end(), rng_);
        auto& by = ctr_.iterate_visits_by_stream[s.stream];
        for (auto& [ts, p] : order) {
          ++ctr_.iterate_visits;
          ++by;
          exec(*s.first, p, in, t);
        }
        return;
      }
      case K::Assign: {
        auto mit = mem_.prefixes.find(s.stream);
        bool any = false;
        if (mit != mem_.prefixes.end())
          for (auto& [k, i] : mit->second)
            if (!i.closed || opts_.bug == SeededBug::IterateClosed) any = true;
        if (!any) return;
        Value p;
        try {
          p = eval(*s.expr, inst, t);
        } catch (const RuntimeFault& f) {
          throw RuntimeFault(ctx(s, inst) + f.what());
        }
        if (!instance(s.stream, p)) return;
        exec(*s.first, p, in, t);
        return;
      }
    }
  }

  // Net liveness changes since the last call, as (stream, instance, live before).
  std::map<std::pair<std::string, Value>, bool> take_transitions() { return std::exchange(transitions_, {}); }

  void advance_fired(Deadlines& d, Time t) {
    for (auto& [f, v] : d.global)
      if (v && *v == t) v = t + f;
    for (auto& [k, v] : d.local)
      if (v == t) v = t + k.period;
  }

  void apply_transitions(Deadlines& d, Time t) {
    for (auto& [key, before] : take_transitions()) {
      bool after = live(key.first, key.second);
      if (before && !after) {
        for (auto it = d.local.begin(); it != d.local.end();) {
          if (it->first.stream == key.first && it->first.inst == key.second)
            it = d.local.erase(it);
          else
            ++it;
        }
      } else if (!before && after) {
        for (auto& [f, s] : d.local_freqs)
          if (s == key.first) d.local[LocalKey{f, s, key.second}] = t + f;
      }
    }
  }

  std::vector<Pending>& pending() { return pending_; }
  std::map<std::string, std::size_t>& peaks() { return peak_; }
  std::map<std::string, std::uint64_t>& max_offsets() { return max_offset_; }

 private:
  std::string ctx(const Stmt& s, const Value& inst) const {
    return "in '" + std::string(stmt_kind_name(s.kind)) + " " + s.stream + "' at instance " + inst.literal() + ": ";
  }
  void note_transition(const std::string& s, const Value& v, bool before) {
    transitions_.try_emplace({s, v}, before);
  }
  void note_peak(const std::string& s, const Instance& i) {
    auto& p = peak_[s];
    p = std::max(p, i.prefix.stored());
  }
  void fill(const Stmt& s, Instance& i, Time t, Value v, const Value& inst) {
    try {
      if (opts_.bug == SeededBug::DroppedShift && !opts_.inputs.count(s.stream))
        i.prefix.overwrite(t, v);
      else
        i.prefix.fill(t, v);
    } catch (const RuntimeFault& f) {
      throw RuntimeFault(ctx(s, inst) + f.what());
    }
    note_peak(s.stream, i);
    int rank = 0, decl = 0;
    if (auto it = opts_.verdict_rank.find(s.stream); it != opts_.verdict_rank.end()) rank = it->second;
    if (auto it = opts_.decl_index.find(s.stream); it != opts_.decl_index.end()) decl = it->second;
    pending_.push_back(Pending{rank, decl, VerdictRecord{t, s.stream, inst, std::move(v)}});
  }

  Memory& mem_;
  const RunOptions& opts_;
  Counters& ctr_;
  std::mt19937_64 rng_;
  std::vector<Pending> pending_;
  std::map<std::pair<std::string, Value>, bool> transitions_;
  std::map<std::string, std::size_t> peak_;
  std::map<std::string, std::uint64_t> max_offset_;
};

void flush(std::vector<Pending>& pending, std::vector<VerdictRecord>* out) {
  std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    if (a.decl != b.decl) return a.decl < b.decl;
    return a.rec.instance < b.rec.instance;
  });
  if (out)
    for (auto& p : pending) out->push_back(std::move(p.rec));
  pending.clear();
}

// One step: due deadline executions, then the input execution.
void do_step(Executor& ex, Memory& m, const StmtPtr& event_body, const StmtPtr& timed_body, const InputMap& in,
             Time t, Counters& ctr, const RunOptions& opts, std::vector<VerdictRecord>* out) {
  static const InputMap empty;
  while (true) {
    auto due = m.deadlines.min();
    if (!due || *due > t) break;
    Time at = *due;
    ++ctr.deadline_executions;
    if (opts.bug == SeededBug::DeadlineAdvancedEarly) {
      ex.advance_fired(m.deadlines, at);
      ex.exec(*timed_body, Value(Unit{}), empty, at);
    } else {
      ex.exec(*timed_body, Value(Unit{}), empty, at);
      ex.advance_fired(m.deadlines, at);
    }
    ex.apply_transitions(m.deadlines, at);
    flush(ex.pending(), out);
  }
  ++ctr.input_executions;
  ex.exec(*event_body, Value(Unit{}), in, t);
  ex.apply_transitions(m.deadlines, t);
  flush(ex.pending(), out);
}

}  // namespace

std::string format_verdict(const VerdictRecord& v) {
  std::string line;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Unit>)
          line = sirt::verdict_line(v.time.ns, v.stream, to_key(v.instance), std::monostate{});
        else
          line = sirt::verdict_line(v.time.ns, v.stream, to_key(v.instance), x);
      },
      v.value.raw());
  return line;
}

std::uint64_t Counters::total_stmt() const {
  std::uint64_t s = 0;
  for (auto x : stmt) s += x;
  return s;
}

std::string Counters::json() const {
  sirt::Counters c;
  for (int i = 0; i < kStmtKinds; ++i) c.stmt[i] = stmt[static_cast<std::size_t>(i)];
  c.guard_evals = guard_evals;
  c.iterate_visits = iterate_visits;
  c.iterate_visits_by_stream = iterate_visits_by_stream;
  c.expr_evals = expr_evals;
  c.deadline_executions = deadline_executions;
  c.input_executions = input_executions;
  return sirt::counters_json(c);
}

RunOptions default_run_options(const AnalyzedSpec& a) {
  RunOptions o;
  for (auto& i : a.spec.inputs) {
    o.verdict_rank[i.name] = a.layer_of(Task{Task::Kind::Input, i.name});
    o.decl_index[i.name] = a.spec.decl_index(i.name);
    o.inputs.insert(i.name);
  }
  for (auto& out : a.spec.outputs) {
    o.verdict_rank[out.name] = a.layer_of(Task{Task::Kind::Eval, out.name});
    o.decl_index[out.name] = a.spec.decl_index(out.name);
  }
  return o;
}

Value eval_expr(const Memory& m, const ExprPtr& e, const Value& inst, Time t) {
  Memory copy = m;
  RunOptions o;
  Counters c;
  Executor ex(copy, o, c);
  return ex.eval(*e, inst, t);
}

bool eval_guard(const Memory& m, const GuardPtr& g, const Value& inst, const InputMap& in, Time t) {
  Memory copy = m;
  RunOptions o;
  Counters c;
  Executor ex(copy, o, c);
  return ex.guard(*g, inst, in, t);
}

Memory exec_stmt(Memory m, const StmtPtr& s, const Value& inst, const InputMap& in, Time t,
                 std::vector<VerdictRecord>* out) {
  RunOptions o;
  Counters c;
  Executor ex(m, o, c);
  ex.exec(*s, inst, in, t);
  flush(ex.pending(), out);
  return m;
}

Deadlines next_deadline(const Deadlines& d, Time t, const Memory& before, const Memory& after) {
  Deadlines n = d;
  for (auto& [f, v] : n.global)
    if (v && *v == t) v = t + f;
  for (auto& [k, v] : n.local)
    if (v == t) v = t + k.period;
  std::set<std::pair<std::string, Value>> keys;
  for (auto* m : {&before, &after})
    for (auto& [s, map] : m->prefixes)
      for (auto& [v, i] : map) keys.insert({s, v});
  for (auto& [s, v] : keys) {
    bool b = before.live(s, v), a = after.live(s, v);
    if (b && !a) {
      for (auto it = n.local.begin(); it != n.local.end();) {
        if (it->first.stream == s && it->first.inst == v)
          it = n.local.erase(it);
        else
          ++it;
      }
    } else if (!b && a) {
      for (auto& [f, fs] : n.local_freqs)
        if (fs == s) n.local[LocalKey{f, s, v}] = t + f;
    }
  }
  return n;
}

Memory step(Memory m, const StmtPtr& body, const InputMap& in, Time t, std::vector<VerdictRecord>* out) {
  RunOptions o;
  Counters c;
  Executor ex(m, o, c);
  do_step(ex, m, body, body, in, t, c, o, out);
  return m;
}

RunResult run(const Monitor& mon, Memory init, const std::vector<TraceEvent>& trace, const RunOptions& opts) {
  RunResult r;
  r.memory = std::move(init);
  Executor ex(r.memory, opts, r.counters);
  StmtPtr event_body = opts.event_body ? opts.event_body : mon.body;
  StmtPtr timed_body = opts.timed_body ? opts.timed_body : mon.body;
  std::optional<Time> prev;
  for (auto& ev : trace) {
    if (prev && ev.time <= *prev) {
      r.fault = "non-monotone trace at t=" + format_time(ev.time);
      break;
    }
    prev = ev.time;
    try {
      do_step(ex, r.memory, event_body, timed_body, ev.values, ev.time, r.counters, opts, &r.verdicts);
    } catch (const RuntimeFault& f) {
      r.fault = std::string(f.what());
      break;
    }
  }
  r.peak_stored = ex.peaks();
  r.max_offset_read = ex.max_offsets();
  return r;
}

// ---------------------------------------------------------------- trace CSV

namespace {

Value parse_cell(const sirt::Cell& c, Type t, std::size_t row, const std::string& col) {
  auto bad = [&]() -> Value {
    throw TraceFormatError("row " + std::to_string(row) + ": bad " + std::string(type_name(t)) + " value '" + c.text +
                           "' for '" + col + "'");
  };
  switch (t) {
    case Type::Bool: {
      auto v = sirt::parse_bool(c.text);
      return v ? Value(*v) : bad();
    }
    case Type::Int64: {
      auto v = sirt::parse_int(c.text);
      return v ? Value(*v) : bad();
    }
    case Type::Float64: {
      auto v = sirt::parse_float(c.text);
      return v ? Value(*v) : bad();
    }
    case Type::Str: return Value(c.text);
    case Type::Unit: return bad();
  }
  return bad();
}

std::string csv_cell(const Value& v) {
  switch (v.type()) {
    case Type::Bool: return v.as_bool() ? "true" : "false";
    case Type::Int64: return std::to_string(v.as_int());
    case Type::Float64: return sirt::format_float(v.as_float());
    case Type::Str: {
      std::string out = "\"";
      for (char c : v.as_str()) {
        if (c == '"') out += '"';
        out += c;
      }
      return out + "\"";
    }
    case Type::Unit: return "";
  }
  return "";
}

}  // namespace

std::vector<TraceEvent> read_trace_csv(std::istream& in, const StreamSpec& spec) {
  std::vector<TraceEvent> out;
  std::string line;
  std::vector<sirt::Cell> cells;
  std::size_t row = 0;
  std::vector<const InputDecl*> cols;
  bool header = false;
  std::optional<Time> prev;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header) {
      if (!sirt::split_csv(line, cells)) throw TraceFormatError("row 1: malformed header");
      if (cells.empty() || cells[0].text != "time") throw TraceFormatError("row 1: header must start with 'time'");
      std::set<std::string> seen;
      for (std::size_t i = 1; i < cells.size(); ++i) {
        const InputDecl* d = spec.input(cells[i].text);
        if (!d) throw TraceFormatError("row 1: header column '" + cells[i].text + "' is not a declared input");
        if (!seen.insert(d->name).second) throw TraceFormatError("row 1: duplicate column '" + d->name + "'");
        cols.push_back(d);
      }
      for (auto& i : spec.inputs)
        if (!seen.count(i.name)) throw TraceFormatError("row 1: header lacks input '" + i.name + "'");
      header = true;
      continue;
    }
    if (line.empty()) continue;
    if (!sirt::split_csv(line, cells)) throw TraceFormatError("row " + std::to_string(row) + ": malformed CSV");
    if (cells.size() != cols.size() + 1)
      throw TraceFormatError("row " + std::to_string(row) + ": expected " + std::to_string(cols.size() + 1) +
                             " cells, found " + std::to_string(cells.size()));
    auto t = sirt::parse_seconds(cells[0].text);
    if (!t) throw TraceFormatError("row " + std::to_string(row) + ": bad time '" + cells[0].text + "'");
    if (prev && *t <= prev->ns) throw TraceFormatError("row " + std::to_string(row) + ": non-monotone trace");
    prev = Time{*t};
    TraceEvent ev{Time{*t}, {}};
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (!sirt::cell_present(cells[i + 1])) continue;
      ev.values[cols[i]->name] = parse_cell(cells[i + 1], cols[i]->type, row, cols[i]->name);
    }
    out.push_back(std::move(ev));
  }
  if (!header && !spec.inputs.empty()) throw TraceFormatError("row 1: missing header");
  return out;
}

std::vector<TraceEvent> read_trace_csv_text(const std::string& text, const StreamSpec& spec) {
  std::istringstream in(text);
  return read_trace_csv(in, spec);
}

std::string write_trace_csv(const std::vector<TraceEvent>& trace, const StreamSpec& spec) {
  std::string out = "time";
  for (auto& i : spec.inputs) out += "," + i.name;
  out += "\n";
  for (auto& ev : trace) {
    out += format_time(ev.time);
    for (auto& i : spec.inputs) {
      out += ",";
      auto it = ev.values.find(i.name);
      if (it != ev.values.end()) out += csv_cell(it->second);
    }
    out += "\n";
  }
  return out;
}

}  // namespace streamir

// Constructive spec and trace generation. Every generated spec is fault-free by construction:
// synchronous reads only target streams that are guaranteed to hold a value at that point,
// filtered streams are never read synchronously, parameterized streams are only read at the
// current instance from within their own family, and divisors are nonzero constants.
#include <utility>
#include <algorithm>
#include <random>

#include "streamir/harness.hpp"
#include "streamir/runtime/streamir_rt.hpp"

namespace streamir {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  std::uint64_t next() { return g_(); }
  int range(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }
  bool chance(double p) { return static_cast<double>(next() >> 11) * 0x1.0p-53 < p; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[next() % v.size()];
  }

 private:
  std::mt19937_64 g_;
};

// Event pacing: conjunction or disjunction of input indices.
struct Event {
  std::vector<int> atoms;
  bool disj = false;
  bool eval(unsigned mask) const {
    if (disj) {
      for (int a : atoms)
        if (mask >> a & 1) return true;
      return false;
    }
    for (int a : atoms)
      if (!(mask >> a & 1)) return false;
    return true;
  }
};

struct Pace {
  enum Kind { Ev, Global, Local } kind = Ev;
  Event ev;
  int period_q = 2;  // quarter seconds
};

std::string dur_text(int quarters) { return sirt::format_seconds(static_cast<sirt::Time>(quarters) * 250000000) + "s"; }

struct GStream {
  std::string name;
  Type type = Type::Int64;
  bool input = false;
  int family = -1;  // -1: not parameterized
  Pace pace;
  bool filtered = false;
};

struct Family {
  Type key = Type::Int64;
  std::string param;
};

class SpecGen {
 public:
  SpecGen(const GenConfig& c) : cfg_(c), rng_(c.seed * 0x9e3779b97f4a7c15ULL + 17) {}

  std::string run() {
    int n_in = rng_.range(1, std::max(1, cfg_.max_inputs));
    for (int i = 0; i < n_in; ++i) {
      GStream s;
      s.name = "i" + std::to_string(i);
      s.input = true;
      int t = rng_.range(0, 9);
      s.type = t < 6 ? Type::Int64 : t < 8 ? Type::Bool : Type::Float64;
      streams_.push_back(s);
      out_ += "input " + s.name + " : " + std::string(type_name(s.type)) + "\n";
    }
    n_in_ = n_in;
    // At least one Int input so spawn keys and unique-assign filters have material.
    if (std::none_of(streams_.begin(), streams_.end(), [](auto& s) { return s.type == Type::Int64; })) {
      streams_[0].type = Type::Int64;
      out_ = "";
      for (auto& s : streams_) out_ += "input " + s.name + " : " + std::string(type_name(s.type)) + "\n";
    }
    int n_out = rng_.range(1, std::max(1, cfg_.max_streams));
    int params_left = cfg_.max_params;
    for (int k = 0; k < n_out; ++k) {
      out_ += "\n";
      bool param = params_left > 0 && rng_.chance(0.4);
      if (param) {
        --params_left;
        // Join an existing family or open a new one.
        if (!families_.empty() && rng_.chance(0.5))
          member_output(static_cast<int>(rng_.next() % families_.size()));
        else
          new_family();
      } else {
        plain_output();
      }
    }
    return out_;
  }

 private:
  // ---- pacing
  Event random_event(bool allow_disj) {
    Event e;
    for (int i = 0; i < n_in_; ++i)
      if (rng_.chance(0.45)) e.atoms.push_back(i);
    if (e.atoms.empty()) e.atoms.push_back(rng_.range(0, n_in_ - 1));
    e.disj = allow_disj && e.atoms.size() > 1 && rng_.chance(0.3);
    return e;
  }
  std::string event_text(const Event& e) const {
    std::string s;
    for (std::size_t i = 0; i < e.atoms.size(); ++i) {
      if (i) s += e.disj ? " || " : " && ";
      s += streams_[e.atoms[i]].name;
    }
    return s;
  }
  std::string pace_text(const Pace& p) const {
    if (p.kind == Pace::Global) return "@Global(" + dur_text(p.period_q) + ")";
    if (p.kind == Pace::Local) return "@Local(" + dur_text(p.period_q) + ")";
    return "@" + event_text(p.ev);
  }
  bool event_implies(const Event& a, const Event& b) const {
    for (unsigned m = 0; m < (1u << n_in_); ++m)
      if (a.eval(m) && !b.eval(m)) return false;
    return true;
  }
  // Whenever a fires, b fires in the same step.
  bool pace_implies(const Pace& a, const Pace& b) const {
    if (a.kind == Pace::Ev && b.kind == Pace::Ev) return event_implies(a.ev, b.ev);
    if (a.kind == Pace::Global && b.kind == Pace::Global) return a.period_q == b.period_q;
    return false;
  }

  // ---- expression context
  struct Access {
    std::string text;  // stream reference, e.g. "o" or "o(p)"
    std::string name;
    Type type;
  };
  struct Ctx {
    std::vector<Access> sync;   // guaranteed to hold a current value
    std::vector<Access> past;   // offsets and windows only
    std::optional<std::pair<std::string, Type>> self;
  };

  Ctx context(const Pace& p, int family, const std::string& self_name, Type self_type) {
    Ctx c;
    for (auto& s : streams_) {
      if (s.family >= 0 && s.family != family) continue;
      std::string ref = s.family >= 0 ? s.name + "(" + families_[s.family].param + ")" : s.name;
      Access a{ref, s.name, s.type};
      c.past.push_back(a);
      if (s.input) {
        if (p.kind == Pace::Ev && event_implies(p.ev, Event{{std::stoi(s.name.substr(1))}, false}))
          c.sync.push_back(a);
      } else if (!s.filtered && p.kind != Pace::Local && pace_implies(p, s.pace)) {
        c.sync.push_back(a);
      }
    }
    if (!self_name.empty()) {
      std::string ref = family >= 0 ? self_name + "(" + families_[family].param + ")" : self_name;
      self_ref_ = Access{ref, self_name, self_type};
    } else {
      self_ref_.reset();
    }
    if (family >= 0) c.self = std::make_pair(families_[family].param, families_[family].key);
    return c;
  }

  std::string lit(Type t) {
    switch (t) {
      case Type::Bool: return rng_.chance(0.5) ? "true" : "false";
      case Type::Int64: return std::to_string(rng_.range(-3, 9));
      case Type::Float64: return sirt::format_float(rng_.range(-8, 8) * 0.5);
      default: return "0";
    }
  }
  // Float literals must carry a fraction or the parser reads an integer.
  std::string flit() {
    std::string s = lit(Type::Float64);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
  }
  std::string literal(Type t) { return t == Type::Float64 ? flit() : lit(t); }

  std::string offset_of(const Access& a) {
    return a.text + ".offset(by: -" + std::to_string(rng_.range(1, std::max(1, cfg_.max_offset))) +
           ", or: " + literal(a.type) + ")";
  }

  std::optional<std::string> window_of(const Ctx& c, Type want) {
    std::vector<std::string> opts;
    int q = rng_.pick(std::vector<int>{2, 4, 8, 10});
    std::string over = "aggregate(over: " + dur_text(q) + ", using: ";
    for (auto& a : c.past) {
      if (self_ref_ && a.name == self_ref_->name) continue;
      std::string base = a.text + "." + over;
      if (want == Type::Bool && a.type == Type::Bool) {
        opts.push_back(base + "exists)");
        opts.push_back(base + "forall)");
        opts.push_back(base + "last, or: " + lit(Type::Bool) + ")");
      }
      if (want == Type::Int64) {
        opts.push_back(base + "count)");
        if (a.type == Type::Int64) {
          opts.push_back(base + "sum)");
          opts.push_back(base + "min, or: " + lit(Type::Int64) + ")");
          opts.push_back(base + "max, or: " + lit(Type::Int64) + ")");
          opts.push_back(base + "last, or: " + lit(Type::Int64) + ")");
        }
      }
      if (want == Type::Float64 && (a.type == Type::Int64 || a.type == Type::Float64)) {
        opts.push_back(base + "avg, or: " + flit() + ")");
        if (a.type == Type::Float64) {
          opts.push_back(base + "sum)");
          opts.push_back(base + "min, or: " + flit() + ")");
          opts.push_back(base + "last, or: " + flit() + ")");
        }
      }
    }
    if (opts.empty()) return std::nullopt;
    return rng_.pick(opts);
  }

  std::string leaf(const Ctx& c, Type t) {
    std::vector<std::string> opts;
    for (auto& a : c.sync)
      if (a.type == t) opts.push_back(a.text);
    for (auto& a : c.past)
      if (a.type == t && rng_.chance(0.5)) opts.push_back(offset_of(a));
    if (self_ref_ && self_ref_->type == t && rng_.chance(0.4)) opts.push_back(offset_of(*self_ref_));
    if (c.self && c.self->second == t) opts.push_back(c.self->first);
    if (rng_.chance(cfg_.window_prob))
      if (auto w = window_of(c, t)) opts.push_back(*w);
    if (opts.empty() || rng_.chance(0.15)) return literal(t);
    return rng_.pick(opts);
  }

  std::string expr(const Ctx& c, Type t, int depth) {
    if (depth <= 0 || rng_.chance(0.35)) return leaf(c, t);
    switch (t) {
      case Type::Int64: {
        int k = rng_.range(0, 6);
        if (k <= 2) {
          const char* ops[] = {" + ", " - ", " * "};
          return "(" + expr(c, t, depth - 1) + ops[k] + expr(c, t, depth - 1) + ")";
        }
        if (k == 3) return "(" + expr(c, t, depth - 1) + " / " + std::to_string(rng_.range(2, 7)) + ")";
        if (k == 4) return "(" + expr(c, t, depth - 1) + " % " + std::to_string(rng_.range(2, 7)) + ")";
        if (k == 5) return "(-" + expr(c, t, depth - 1) + ")";
        return leaf(c, t);
      }
      case Type::Float64: {
        int k = rng_.range(0, 3);
        if (k == 0) return "(" + expr(c, t, depth - 1) + " + " + expr(c, t, depth - 1) + ")";
        if (k == 1) return "(" + expr(c, t, depth - 1) + " - " + expr(c, t, depth - 1) + ")";
        if (k == 2) return "(-" + expr(c, t, depth - 1) + ")";
        return leaf(c, t);
      }
      case Type::Bool: {
        int k = rng_.range(0, 5);
        if (k == 0) return "(" + expr(c, t, depth - 1) + " && " + expr(c, t, depth - 1) + ")";
        if (k == 1) return "(" + expr(c, t, depth - 1) + " || " + expr(c, t, depth - 1) + ")";
        if (k == 2) return "(!" + expr(c, t, depth - 1) + ")";
        if (k == 3) {
          const char* ops[] = {" < ", " <= ", " == ", " != ", " > ", " >= "};
          return "(" + expr(c, Type::Int64, depth - 1) + ops[rng_.range(0, 5)] + expr(c, Type::Int64, depth - 1) + ")";
        }
        if (k == 4) return "(" + expr(c, Type::Float64, depth - 1) + " < " + expr(c, Type::Float64, depth - 1) + ")";
        return leaf(c, t);
      }
      default: return literal(t);
    }
  }

  Type out_type() {
    int t = rng_.range(0, 9);
    return t < 5 ? Type::Int64 : t < 8 ? Type::Bool : Type::Float64;
  }

  Pace eval_pace(bool param) {
    Pace p;
    if (rng_.chance(cfg_.periodic_prob)) {
      p.kind = param && rng_.chance(0.4) ? Pace::Local : Pace::Global;
      p.period_q = rng_.pick(std::vector<int>{2, 4, 6});
      return p;
    }
    p.ev = random_event(true);
    return p;
  }

  // An Int expression readable under `p` that names an instance key, or nullopt.
  std::optional<std::string> key_expr(const Ctx& c, const Pace& p, Type key) {
    std::vector<std::string> ints, bools;
    for (auto& a : c.sync) {
      if (a.name.rfind("i", 0) != 0) continue;  // inputs only
      if (a.type == Type::Int64) ints.push_back(a.text);
      if (a.type == Type::Bool) bools.push_back(a.text);
    }
    if (p.kind != Pace::Ev) {
      for (int i = 0; i < n_in_; ++i)
        if (streams_[i].type == Type::Int64)
          ints.push_back(streams_[i].name + ".aggregate(over: 1s, using: last, or: 0)");
    }
    if (key == Type::Int64) {
      if (ints.empty()) return std::nullopt;
      return "(" + rng_.pick(ints) + " % " + std::to_string(modulus_) + ")";
    }
    if (!bools.empty() && rng_.chance(0.5)) return rng_.pick(bools);
    if (ints.empty()) return std::nullopt;
    return "(" + rng_.pick(ints) + " > " + std::to_string(rng_.range(0, 6)) + ")";
  }

  void emit_eval(GStream& s, int family) {
    Pace p = eval_pace(family >= 0);
    s.pace = p;
    Ctx c = context(p, family, s.name, s.type);
    std::string when;
    // A filter decides whether the stream shifts, so it cannot read the stream's own past.
    auto self = std::exchange(self_ref_, std::nullopt);
    if (family >= 0 && rng_.chance(0.45)) {
      if (auto k = key_expr(c, p, families_[family].key)) {
        when = families_[family].param + " == " + *k;
        if (rng_.chance(0.3)) when += " && " + expr(c, Type::Bool, 1);
      }
    }
    if (when.empty() && rng_.chance(0.2)) when = expr(c, Type::Bool, 1);
    self_ref_ = self;
    s.filtered = !when.empty();
    out_ += "  eval " + pace_text(p) + (when.empty() ? "" : " when " + when) + " with " + expr(c, s.type, 2) + "\n";
  }

  void plain_output() {
    GStream s;
    s.name = "o" + std::to_string(next_out_++);
    s.type = out_type();
    out_ += "output " + s.name + " : " + std::string(type_name(s.type)) + "\n";
    emit_eval(s, -1);
    streams_.push_back(s);
  }

  void new_family() {
    Family f;
    f.key = rng_.chance(0.8) ? Type::Int64 : Type::Bool;
    f.param = "p" + std::to_string(families_.size());
    families_.push_back(f);
    int fam = static_cast<int>(families_.size()) - 1;
    // Spawn and close text is shared by every member of the family.
    Pace sp;
    sp.ev = random_event(false);
    Ctx sc = context(sp, -1, "", Type::Unit);
    std::string with;
    if (rng_.chance(0.1)) {
      with = f.key == Type::Int64 ? std::to_string(rng_.range(0, 3)) : "true";
    } else if (auto k = key_expr(sc, sp, f.key)) {
      with = *k;
    } else {
      with = f.key == Type::Int64 ? std::to_string(rng_.range(0, 3)) : "false";
    }
    std::string spawn = "  spawn " + pace_text(sp);
    if (rng_.chance(0.25)) spawn += " when " + expr(sc, Type::Bool, 1);
    spawn += " with " + with + "\n";
    std::string close;
    if (rng_.chance(0.6)) {
      Pace cp;
      cp.ev = random_event(false);
      Ctx cc = context(cp, fam, "", Type::Unit);
      cc.past.erase(std::remove_if(cc.past.begin(), cc.past.end(), [](auto& a) { return a.text.find('(') != std::string::npos; }),
                    cc.past.end());
      std::string cond;
      if (auto k = key_expr(cc, cp, f.key); k && rng_.chance(0.7))
        cond = f.param + " == " + *k;
      else
        cond = expr(cc, Type::Bool, 1);
      close = "  close " + pace_text(cp) + " when " + cond + "\n";
    }
    family_text_.push_back({spawn, close});
    member_output(fam);
  }

  void member_output(int fam) {
    GStream s;
    s.name = "o" + std::to_string(next_out_++);
    s.type = out_type();
    s.family = fam;
    const Family& f = families_[fam];
    out_ += "output " + s.name + "(" + f.param + ": " + std::string(type_name(f.key)) + ") : " +
            std::string(type_name(s.type)) + "\n";
    out_ += family_text_[fam].first;
    emit_eval(s, fam);
    out_ += family_text_[fam].second;
    streams_.push_back(s);
  }

  const GenConfig& cfg_;
  Rng rng_;
  std::string out_;
  std::vector<GStream> streams_;
  std::vector<Family> families_;
  std::vector<std::pair<std::string, std::string>> family_text_;
  std::optional<Access> self_ref_;
  int n_in_ = 0;
  int next_out_ = 0;
  int modulus_ = 3;
};

Value random_value(Rng& r, Type t) {
  switch (t) {
    case Type::Bool: return Value(r.chance(0.5));
    case Type::Int64: return Value(static_cast<std::int64_t>(r.range(-4, 12)));
    case Type::Float64: return Value(r.range(-8, 8) * 0.5);
    case Type::Str: return Value(std::string(1, static_cast<char>('a' + r.range(0, 3))));
    case Type::Unit: return Value(Unit{});
  }
  return Value();
}

}  // namespace

std::string gen_spec_text(const GenConfig& cfg) { return SpecGen(cfg).run(); }

AnalyzedSpec gen_spec(const GenConfig& cfg) {
  return analyze(gen_spec_text(cfg), "gen-" + std::to_string(cfg.seed) + ".lola");
}

std::vector<TraceEvent> gen_trace(const StreamSpec& spec, const GenConfig& cfg) {
  Rng r(cfg.seed * 0xbf58476d1ce4e5b9ULL + 3);
  std::vector<TraceEvent> out;
  std::int64_t q = r.range(0, 2);
  for (int n = 0; n < cfg.trace_len; ++n) {
    TraceEvent e;
    e.time = Time{q * 250000000};
    for (auto& i : spec.inputs)
      if (r.chance(cfg.density)) e.values[i.name] = random_value(r, i.type);
    if (e.values.empty() && !spec.inputs.empty()) {
      auto& i = spec.inputs[r.next() % spec.inputs.size()];
      e.values[i.name] = random_value(r, i.type);
    }
    out.push_back(std::move(e));
    q += r.pick(std::vector<int>{1, 1, 1, 2, 2, 3, 4, 6});
  }
  return out;
}

std::string gen_geofence(int n) {
  auto f = [](double d) {
    std::string t = sirt::format_float(d);
    return t.find('.') == std::string::npos ? t + ".0" : t;
  };
  std::string s = "// Position checked against " + std::to_string(n) + " polygon lines.\n";
  s += "input x : Float64\ninput y : Float64\n\n";
  for (int i = 0; i < n; ++i) {
    double a = 1.0 + i % 3, b = 0.5 * (i % 4) - 0.75, c = 2.0 + i;
    s += "output line" + std::to_string(i) + " : Bool\n  eval @x && y with " + f(a) + " * x + " + f(b) + " * y <= " + f(c) + "\n";
  }
  s += "\noutput inside : Bool\n  eval @x && y with ";
  for (int i = 0; i < n; ++i) s += (i ? " && line" : "line") + std::to_string(i);
  s += "\n";
  s += "\noutput recent_checks : Int64\n  eval @x && y with inside.aggregate(over: 5s, using: count)\n";
  return s;
}

std::vector<TraceEvent> geofence_trace(int events, std::uint64_t seed) {
  Rng r(seed);
  std::vector<TraceEvent> out;
  for (int k = 0; k < events; ++k) {
    TraceEvent e;
    e.time = Time{static_cast<std::int64_t>(k) * 100000000};
    e.values["x"] = Value(r.range(-20, 20) * 0.25);
    e.values["y"] = Value(r.range(-20, 20) * 0.25);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<TraceEvent> intruder_trace(int k, int events) {
  std::vector<TraceEvent> out;
  for (int n = 0; n < events; ++n) {
    TraceEvent e;
    e.time = Time{static_cast<std::int64_t>(n) * 100000000};
    e.values["id"] = Value(static_cast<std::int64_t>(n % k));
    e.values["dist"] = Value(static_cast<std::int64_t>(50 + (n * 37) % 900));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace streamir

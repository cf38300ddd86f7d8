#include "streamir/emitter.hpp"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "streamir/interpreter.hpp"
#include "streamir/rewriter.hpp"
#include "streamir/runtime/streamir_rt.hpp"

namespace streamir {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void missing(const char* construct) {
  throw EmissionError(std::string("backend does not implement '") + construct + "'");
}

std::string cpp_type(Type t) {
  switch (t) {
    case Type::Unit: return "std::monostate";
    case Type::Bool: return "bool";
    case Type::Int64: return "std::int64_t";
    case Type::Float64: return "double";
    case Type::Str: return "std::string";
  }
  return "void";
}

std::string cpp_string(const std::string& s) {
  std::string out = "std::string(\"";
  for (unsigned char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += static_cast<char>(c);
    } else if (c >= 0x20 && c < 0x7f && c != '?') {
      out += static_cast<char>(c);
    } else {
      char buf[8];
      std::snprintf(buf, sizeof buf, "\\%03o", c);
      out += buf;
    }
  }
  return out + "\", " + std::to_string(s.size()) + ")";
}

std::string cpp_int(std::int64_t v) {
  if (v == std::numeric_limits<std::int64_t>::min()) return "(-INT64_C(9223372036854775807) - 1)";
  return "INT64_C(" + std::to_string(v) + ")";
}

std::string cpp_double(double d) {
  if (std::isnan(d)) return "std::numeric_limits<double>::quiet_NaN()";
  if (std::isinf(d)) return d > 0 ? "std::numeric_limits<double>::infinity()" : "(-std::numeric_limits<double>::infinity())";
  return "(" + sirt::format_float(d) + ")";
}

// Re-indents generated code by brace depth, ignoring braces inside literals.
std::string indent(const std::string& code) {
  std::istringstream in(code);
  std::string line, out;
  int depth = 0;
  while (std::getline(in, line)) {
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) {
      out += "\n";
      continue;
    }
    std::string t = line.substr(b);
    int open = 0, close_first = 0;
    bool in_str = false, in_chr = false, seen_other = false;
    for (std::size_t i = 0; i < t.size(); ++i) {
      char c = t[i];
      if (in_str || in_chr) {
        if (c == '\\') ++i;
        else if (in_str && c == '"') in_str = false;
        else if (in_chr && c == '\'') in_chr = false;
        continue;
      }
      if (c == '"') in_str = true;
      else if (c == '\'') in_chr = true;
      else if (c == '{') ++open;
      else if (c == '}') {
        if (!seen_other && open == 0) ++close_first;
        else --open;
      }
      if (c != '}' && c != ' ') seen_other = true;
    }
    depth -= close_first;
    if (depth < 0) depth = 0;
    out += std::string(static_cast<std::size_t>(depth) * 2, ' ') + t + "\n";
    depth += open;
  }
  return out;
}

// Walks IR and renders it through formatter hooks.
class Walker {
 public:
  Walker(Formatter& f, const AnalyzedSpec& a) : f_(f), a_(a) {}

  std::string expr(const ExprPtr& e, const Scope& sc) {
    using K = Expr::Kind;
    switch (e->kind) {
      case K::Const: return f_.expr_const(e->value);
      case K::Self: return f_.expr_self(sc);
      case K::Syn: return f_.expr_syn(e->stream, expr(e->inst, sc));
      case K::Get: return f_.expr_get(e->stream, expr(e->inst, sc), e->offset, expr(e->dft, sc));
      case K::Window: return f_.expr_window(e->stream, expr(e->inst, sc), e->dur, e->agg);
      case K::Bin: return f_.expr_bin(e->bop, type(e->lhs, sc), expr(e->lhs, sc), expr(e->rhs, sc));
      case K::Un: return f_.expr_un(e->uop, type(e->lhs, sc), expr(e->lhs, sc));
    }
    missing("expression");
  }

  std::string guard(const GuardPtr& g, const Scope& sc) {
    using K = Guard::Kind;
    switch (g->kind) {
      case K::Input: return f_.guard_input(g->stream);
      case K::Schedule: return f_.guard_schedule(g->freq, sc);
      case K::Dynamic: return f_.guard_dynamic(expr(g->expr, sc));
      case K::And: return f_.guard_and(guard(g->lhs, sc), guard(g->rhs, sc));
      case K::Or: return f_.guard_or(guard(g->lhs, sc), guard(g->rhs, sc));
      case K::True: return f_.guard_true();
      case K::False: return f_.guard_false();
    }
    missing("guard");
  }

  std::string stmt(const StmtPtr& s, const Scope& sc) {
    using K = Stmt::Kind;
    switch (s->kind) {
      case K::Skip: return f_.stmt_skip();
      case K::Shift: return f_.stmt_shift(s->stream, sc);
      case K::Input: return f_.stmt_input(s->stream);
      case K::Spawn: return f_.stmt_spawn(s->stream, expr(s->expr, sc));
      case K::Eval: return f_.stmt_eval(s->stream, sc, expr(s->expr, sc));
      case K::Close: return f_.stmt_close(s->stream, sc);
      case K::Seq: return f_.stmt_seq(stmt(s->first, sc), stmt(s->second, sc));
      case K::Par: return f_.stmt_par(stmt(s->first, sc), stmt(s->second, sc));
      case K::If: return f_.stmt_if(guard(s->guard, sc), stmt(s->first, sc), stmt(s->second, sc));
      case K::Iterate: {
        Scope in = inner(s->stream);
        return f_.stmt_iterate(s->stream, in, stmt(s->first, in));
      }
      case K::Assign: {
        Scope in = inner(s->stream);
        std::string inst = expr(s->expr, sc);
        return f_.stmt_assign(s->stream, in, inst, stmt(s->first, in));
      }
    }
    missing("statement");
  }

 private:
  Scope inner(const std::string& stream) {
    Scope in;
    in.self = "k" + std::to_string(++binders_);
    const OutputDecl* o = a_.spec.output(stream);
    in.self_type = o && o->parameterized ? o->param_type : Type::Unit;
    scopes_[in.self] = in.self_type;
    return in;
  }
  Type type(const ExprPtr& e, const Scope& sc) {
    TypeEnv env{&a_.spec, sc.self_type, true};
    std::string err;
    auto t = type_of(e, env, &err);
    if (!t) throw EmissionError("ill-typed expression '" + print_expr(e) + "': " + err);
    return *t;
  }

  Formatter& f_;
  const AnalyzedSpec& a_;
  int binders_ = 0;
  std::map<std::string, Type> scopes_;
};

// Per-emission facts the C++ backend needs about streams.
struct CppInfo {
  const AnalyzedSpec* a = nullptr;
  const MemoryLayout* layout = nullptr;
  std::map<std::string, int> rank, decl;
  std::vector<std::pair<Duration, std::size_t>> globals;                   // period, index
  std::vector<std::tuple<Duration, std::string, std::size_t>> locals;      // period, stream, index
  std::set<std::string> with_locals;
};

// Set by render() before each program is walked.
thread_local CppInfo g_info;

const OutputDecl* out_decl(const std::string& s) { return g_info.a->spec.output(s); }
bool is_family(const std::string& s) {
  const OutputDecl* o = out_decl(s);
  return o && o->parameterized;
}
Type value_type(const std::string& s) { return g_info.a->spec.value_type(s); }
Type key_type(const std::string& s) {
  const OutputDecl* o = out_decl(s);
  return o && o->parameterized ? o->param_type : Type::Unit;
}
std::string var(const std::string& s) { return "s_" + s; }
std::string prefix_of(const std::string& s, const std::string& inst) {
  if (is_family(s)) return var(s) + ".at(" + inst + ")";
  return var(s) + ".prefix";
}

StreamLayout layout_of(const std::string& s) {
  if (!g_info.layout) return StreamLayout{};
  auto it = g_info.layout->find(s);
  return it == g_info.layout->end() ? StreamLayout{} : it->second;
}

std::string policy(const std::string& s) {
  Storage st = g_info.layout ? storage_for(layout_of(s), true) : Storage{};
  std::string kind;
  switch (st.kind) {
    case StorageKind::Unbounded: kind = "Unbounded"; break;
    case StorageKind::Ring: kind = "Ring"; break;
    case StorageKind::SingleCell: kind = "Single"; break;
    case StorageKind::TimedDeque: kind = "Timed"; break;
  }
  return "sirt::StorePolicy{sirt::StoreKind::" + kind + ", " + std::to_string(st.keep) + ", " +
         cpp_int(st.horizon.ns) + "}";
}

}  // namespace

// ---------------------------------------------------------------- default hooks

std::string Formatter::expr_const(const Value&) { missing("const"); }
std::string Formatter::expr_self(const Scope&) { missing("self"); }
std::string Formatter::expr_syn(const std::string&, const std::string&) { missing("syn"); }
std::string Formatter::expr_get(const std::string&, const std::string&, std::uint32_t, const std::string&) {
  missing("get");
}
std::string Formatter::expr_window(const std::string&, const std::string&, Duration, const Aggregation&) {
  missing("window");
}
std::string Formatter::expr_bin(BinOp, Type, const std::string&, const std::string&) { missing("binary operator"); }
std::string Formatter::expr_un(UnOp, Type, const std::string&) { missing("unary operator"); }
std::string Formatter::guard_input(const std::string&) { missing("input?"); }
std::string Formatter::guard_schedule(const Freq&, const Scope&) { missing("schedule"); }
std::string Formatter::guard_dynamic(const std::string&) { missing("dynamic"); }
std::string Formatter::guard_and(const std::string&, const std::string&) { missing("and"); }
std::string Formatter::guard_or(const std::string&, const std::string&) { missing("or"); }
std::string Formatter::guard_true() { missing("true"); }
std::string Formatter::guard_false() { missing("false"); }
std::string Formatter::stmt_skip() { missing("skip"); }
std::string Formatter::stmt_shift(const std::string&, const Scope&) { missing("shift"); }
std::string Formatter::stmt_input(const std::string&) { missing("input"); }
std::string Formatter::stmt_spawn(const std::string&, const std::string&) { missing("spawn"); }
std::string Formatter::stmt_eval(const std::string&, const Scope&, const std::string&) { missing("eval"); }
std::string Formatter::stmt_close(const std::string&, const Scope&) { missing("close"); }
std::string Formatter::stmt_seq(const std::string&, const std::string&) { missing("seq"); }
std::string Formatter::stmt_par(const std::string&, const std::string&) { missing("par"); }
std::string Formatter::stmt_if(const std::string&, const std::string&, const std::string&) { missing("if"); }
std::string Formatter::stmt_iterate(const std::string&, const Scope&, const std::string&) { missing("iterate"); }
std::string Formatter::stmt_assign(const std::string&, const Scope&, const std::string&, const std::string&) {
  missing("assign");
}
std::string Formatter::memory_decls(const EmitInput&) { missing("memory declarations"); }
std::string Formatter::driver(const EmitInput&, const std::string&, const std::string&) { missing("driver"); }
std::map<std::string, std::string> Formatter::support_files() { return {}; }
std::vector<std::string> Formatter::build_commands(const std::string&) { return {}; }

// ---------------------------------------------------------------- C++ backend

std::string CppFormatter::count(int k) const {
  return in_ && in_->instrument ? "++ctr.stmt[" + std::to_string(k) + "];\n" : "";
}
std::string CppFormatter::eval_count() const { return in_ && in_->instrument ? "++ctr.expr_evals, " : ""; }

std::string CppFormatter::expr_const(const Value& v) {
  std::string lit;
  switch (v.type()) {
    case Type::Unit: lit = "std::monostate{}"; break;
    case Type::Bool: lit = v.as_bool() ? "true" : "false"; break;
    case Type::Int64: lit = cpp_int(v.as_int()); break;
    case Type::Float64: lit = cpp_double(v.as_float()); break;
    case Type::Str: lit = cpp_string(v.as_str()); break;
  }
  return "(" + eval_count() + lit + ")";
}
std::string CppFormatter::expr_self(const Scope& sc) { return "(" + eval_count() + sc.self + ")"; }
std::string CppFormatter::expr_syn(const std::string& s, const std::string& inst) {
  return "(" + eval_count() + prefix_of(s, inst) + ".last())";
}
std::string CppFormatter::expr_get(const std::string& s, const std::string& inst, std::uint32_t off,
                                   const std::string& dft) {
  return "(" + eval_count() + prefix_of(s, inst) + ".get(" + std::to_string(off) + ", [&]() -> " +
         cpp_type(value_type(s)) + " { return " + dft + "; }))";
}
std::string CppFormatter::expr_window(const std::string& s, const std::string& inst, Duration dur,
                                      const Aggregation& agg) {
  std::string p = prefix_of(s, inst);
  std::string cut = "now - " + cpp_int(dur.ns);
  std::string name = "sirt::agg_" + std::string(agg_name(agg.kind));
  std::string call;
  switch (agg.kind) {
    case AggKind::Exists:
    case AggKind::Forall:
    case AggKind::Count:
    case AggKind::Sum: call = name + "(" + p + ", " + cut + ")"; break;
    default: {
      std::string rt = agg.kind == AggKind::Avg ? "double" : cpp_type(value_type(s));
      std::string body = agg.fallback
                             ? "return " + CppFormatter{}.expr_const(*agg.fallback) + ";"
                             : "throw sirt::Fault(\"" + std::string(agg_name(agg.kind)) + " over an empty window\");";
      call = name + "(" + p + ", " + cut + ", [&]() -> " + rt + " { " + body + " })";
    }
  }
  return "(" + eval_count() + call + ")";
}
std::string CppFormatter::expr_bin(BinOp op, Type t, const std::string& l, const std::string& r) {
  std::string e;
  bool ints = t == Type::Int64;
  switch (op) {
    case BinOp::Add: e = ints ? "sirt::iadd(" + l + ", " + r + ")" : "(" + l + " + " + r + ")"; break;
    case BinOp::Sub: e = ints ? "sirt::isub(" + l + ", " + r + ")" : "(" + l + " - " + r + ")"; break;
    case BinOp::Mul: e = ints ? "sirt::imul(" + l + ", " + r + ")" : "(" + l + " * " + r + ")"; break;
    case BinOp::Div: e = ints ? "sirt::idiv(" + l + ", " + r + ")" : "(" + l + " / " + r + ")"; break;
    case BinOp::Rem: e = ints ? "sirt::irem(" + l + ", " + r + ")" : "sirt::frem(" + l + ", " + r + ")"; break;
    default: e = "(" + l + " " + std::string(binop_symbol(op)) + " " + r + ")"; break;
  }
  return "(" + eval_count() + e + ")";
}
std::string CppFormatter::expr_un(UnOp op, Type t, const std::string& a) {
  std::string e;
  if (op == UnOp::Not)
    e = "(!" + a + ")";
  else
    e = t == Type::Int64 ? "sirt::ineg(" + a + ")" : "(-" + a + ")";
  return "(" + eval_count() + e + ")";
}

std::string CppFormatter::guard_input(const std::string& s) { return "has_" + s; }
std::string CppFormatter::guard_schedule(const Freq& f, const Scope& sc) {
  if (!f.local) {
    for (auto& [p, i] : g_info.globals)
      if (p == f.period) return "(dg_" + std::to_string(i) + " && *dg_" + std::to_string(i) + " == now)";
    throw EmissionError("unknown global frequency " + format_duration(f.period));
  }
  for (auto& [p, s, i] : g_info.locals)
    if (p == f.period && s == f.stream) return "local_due(dl_" + std::to_string(i) + ", " + sc.self + ")";
  throw EmissionError("unknown local frequency " + format_duration(f.period) + " of " + f.stream);
}
std::string CppFormatter::guard_dynamic(const std::string& e) { return e; }
std::string CppFormatter::guard_and(const std::string& a, const std::string& b) { return "(" + a + " && " + b + ")"; }
std::string CppFormatter::guard_or(const std::string& a, const std::string& b) { return "(" + a + " || " + b + ")"; }
std::string CppFormatter::guard_true() { return "true"; }
std::string CppFormatter::guard_false() { return "false"; }

std::string CppFormatter::stmt_skip() { return count(0); }
std::string CppFormatter::stmt_shift(const std::string& s, const Scope& sc) {
  return count(1) + prefix_of(s, sc.self) + ".shift(now);\n";
}
std::string CppFormatter::stmt_input(const std::string& s) {
  std::string d = std::to_string(g_info.decl[s]), r = std::to_string(g_info.rank[s]);
  return count(2) + "if (!has_" + s + ") throw sirt::Fault(\"input statement without a value\");\n" + var(s) +
         ".prefix.fill(now, in_" + s + ");\nvb.push(sirt::Verdict{" + r + ", " + d +
         ", std::monostate{}, sirt::verdict_line(now, \"" + s + "\", std::monostate{}, in_" + s + ")});\n";
}
std::string CppFormatter::stmt_spawn(const std::string& s, const std::string& inst) {
  if (!is_family(s)) return count(3);
  std::string kt = cpp_type(key_type(s));
  std::string note = g_info.with_locals.count(s) ? "tr_" + s + ".note(p_, false);\n" : "";
  return count(3) + "{\nconst " + kt + " p_ = " + inst + ";\nif (!" + var(s) + ".live(p_)) {\n" + note + var(s) +
         ".spawn(p_, now);\n}\n}\n";
}
std::string CppFormatter::stmt_eval(const std::string& s, const Scope& sc, const std::string& value) {
  std::string d = std::to_string(g_info.decl[s]), r = std::to_string(g_info.rank[s]);
  std::string key = is_family(s) ? "sirt::inst_key(" + sc.self + ")" : "std::monostate{}";
  return count(4) + "{\nauto& p_ = " + prefix_of(s, sc.self) + ";\n" + cpp_type(value_type(s)) + " v_ = " + value +
         ";\np_.fill(now, v_);\nvb.push(sirt::Verdict{" + r + ", " + d + ", " + key + ", sirt::verdict_line(now, \"" +
         s + "\", " + key + ", v_)});\n}\n";
}
std::string CppFormatter::stmt_close(const std::string& s, const Scope& sc) {
  if (!is_family(s)) throw EmissionError("close of non-parameterized stream '" + s + "'");
  std::string note = g_info.with_locals.count(s) ? "tr_" + s + ".note(" + sc.self + ", true);\n" : "";
  return count(5) + "if (" + var(s) + ".live(" + sc.self + ")) {\n" + note + var(s) + ".close(" + sc.self + ");\n}\n";
}
std::string CppFormatter::stmt_seq(const std::string& a, const std::string& b) { return count(6) + a + b; }
std::string CppFormatter::stmt_par(const std::string& a, const std::string& b) { return count(7) + a + b; }
std::string CppFormatter::stmt_if(const std::string& g, const std::string& t, const std::string& e) {
  std::string out = count(8) + (in_ && in_->instrument ? "++ctr.guard_evals;\n" : "") + "if (" + g + ") {\n" + t + "}";
  if (!e.empty()) out += " else {\n" + e + "}";
  return out + "\n";
}
std::string CppFormatter::stmt_iterate(const std::string& s, const Scope& in, const std::string& body) {
  std::string visit = in_ && in_->instrument
                          ? "++ctr.iterate_visits;\n++ctr.iterate_visits_by_stream[\"" + s + "\"];\n"
                          : "";
  if (!is_family(s))
    return count(9) + "{\nconst std::monostate " + in.self + "{};\n(void)" + in.self + ";\n" + visit + body + "}\n";
  return count(9) + "for (const auto& " + in.self + " : " + var(s) + ".snapshot()) {\n" + visit + body + "}\n";
}
std::string CppFormatter::stmt_assign(const std::string& s, const Scope& in, const std::string& inst,
                                      const std::string& body) {
  if (!is_family(s))
    return count(10) + "{\nconst std::monostate " + in.self + " = " + inst + ";\n(void)" + in.self + ";\n" + body +
           "}\n";
  return count(10) + "if (" + var(s) + ".any()) {\nconst " + cpp_type(key_type(s)) + " " + in.self + " = " + inst +
         ";\nif (" + var(s) + ".live(" + in.self + ")) {\n" + body + "}\n}\n";
}

std::string CppFormatter::memory_decls(const EmitInput& in) {
  const StreamSpec& sp = in.spec->spec;
  std::string out;
  for (auto& i : sp.inputs) {
    out += "sirt::Single<" + cpp_type(i.type) + "> " + var(i.name) + "{" + policy(i.name) + "};\n";
    out += "bool has_" + i.name + " = false;\n" + cpp_type(i.type) + " in_" + i.name + "{};\n";
  }
  for (auto& o : sp.outputs) {
    std::string vt = cpp_type(o.type);
    if (!o.parameterized) {
      out += "sirt::Single<" + vt + "> " + var(o.name) + "{" + policy(o.name) + "};\n";
    } else {
      std::string kt = cpp_type(o.param_type);
      bool solo = layout_of(o.name).instances == StreamLayout::Instances::ParameterErased && in.layout;
      std::string cont = solo ? "sirt::Solo<" + kt + ", " + vt + ">" : "sirt::Family<" + kt + ", " + vt + ", true>";
      out += cont + " " + var(o.name) + "{" + policy(o.name) + "};\n";
      if (g_info.with_locals.count(o.name)) out += "sirt::Transitions<" + kt + "> tr_" + o.name + ";\n";
    }
  }
  for (auto& [p, i] : g_info.globals)
    out += "std::optional<sirt::Time> dg_" + std::to_string(i) + " = " + cpp_int(p.ns) + ";\n";
  for (auto& [p, s, i] : g_info.locals)
    out += "std::map<" + cpp_type(key_type(s)) + ", sirt::Time> dl_" + std::to_string(i) + ";\n";
  return out;
}

std::string CppFormatter::driver(const EmitInput& in, const std::string& ev, const std::string& tm) {
  const StreamSpec& sp = in.spec->spec;
  std::string o = "namespace " + in.ns + " {\n\nstruct Monitor {\n";
  o += memory_decls(in);
  o += "sirt::VerdictBuffer vb;\nsirt::Counters ctr;\nsirt::Time now = 0;\n\n";
  o += "Monitor() {\n";
  for (auto& [p, s, i] : g_info.locals)
    if (!is_family(s)) o += "dl_" + std::to_string(i) + "[std::monostate{}] = " + cpp_int(p.ns) + ";\n";
  o += "}\n\n";
  o += "template <class K>\nbool local_due(const std::map<K, sirt::Time>& m, const std::type_identity_t<K>& k) const {\n"
       "auto it = m.find(k);\nreturn it != m.end() && it->second == now;\n}\n\n";
  o += "void body_event() {\nconst std::monostate k0{};\n(void)k0;\n" + ev + "}\n\n";
  o += "void body_timed() {\nconst std::monostate k0{};\n(void)k0;\n" + tm + "}\n\n";
  o += "std::optional<sirt::Time> next_deadline() const {\nstd::optional<sirt::Time> m;\n";
  for (auto& [p, i] : g_info.globals) {
    std::string v = "dg_" + std::to_string(i);
    o += "if (" + v + " && (!m || *" + v + " < *m)) m = " + v + ";\n";
  }
  for (auto& [p, s, i] : g_info.locals)
    o += "for (auto& e : dl_" + std::to_string(i) + ")\nif (!m || e.second < *m) m = e.second;\n";
  o += "return m;\n}\n\n";
  o += "void advance(sirt::Time t) {\n";
  for (auto& [p, i] : g_info.globals) {
    std::string v = "dg_" + std::to_string(i);
    o += "if (" + v + " && *" + v + " == t) " + v + " = t + " + cpp_int(p.ns) + ";\n";
  }
  for (auto& [p, s, i] : g_info.locals)
    o += "for (auto& e : dl_" + std::to_string(i) + ")\nif (e.second == t) e.second = t + " + cpp_int(p.ns) + ";\n";
  o += "(void)t;\n}\n\n";
  o += "void transitions(sirt::Time t) {\n";
  for (auto& s : g_info.with_locals) {
    if (!is_family(s)) continue;
    std::string kt = cpp_type(key_type(s));
    std::string on_spawn, on_close;
    for (auto& [p, ls, i] : g_info.locals) {
      if (ls != s) continue;
      on_spawn += "dl_" + std::to_string(i) + "[k] = t + " + cpp_int(p.ns) + ";\n";
      on_close += "dl_" + std::to_string(i) + ".erase(k);\n";
    }
    o += "tr_" + s + ".apply([&](const " + kt + "& k) { return " + var(s) + ".live(k); },\n[&](const " + kt +
         "& k) {\n" + on_spawn + "},\n[&](const " + kt + "& k) {\n" + on_close + "});\n";
  }
  o += "(void)t;\n}\n};\n\n";

  // Trace decoding and the step loop.
  o += "struct Event {\nsirt::Time t;\n";
  for (auto& i : sp.inputs) o += "std::optional<" + cpp_type(i.type) + "> " + i.name + ";\n";
  o += "};\n\n";
  o += "inline int run(const sirt::Args& args, std::istream& in, std::ostream& out, std::ostream& err) {\n";
  if (!in.instrument)
    o += "if (args.counters) {\nerr << \"counters unavailable: monitor was emitted without --instrument\\n\";\n"
         "return 2;\n}\n";
  o += "std::vector<std::string> names = {";
  for (std::size_t k = 0; k < sp.inputs.size(); ++k) o += (k ? ", \"" : "\"") + sp.inputs[k].name + "\"";
  o += "};\nstd::vector<Event> events;\ntry {\nfor (auto& r : sirt::read_rows(in, names)) {\nEvent e{r.t";
  for (std::size_t k = 0; k < sp.inputs.size(); ++k) o += ", std::nullopt";
  o += "};\n";
  for (std::size_t k = 0; k < sp.inputs.size(); ++k) {
    auto& i = sp.inputs[k];
    std::string ct = cpp_type(i.type);
    o += "if (r.cells[" + std::to_string(k) + "]) e." + i.name + " = sirt::cell_as(r, *r.cells[" + std::to_string(k) +
         "], static_cast<" + ct + "*>(nullptr));\n";
  }
  o += "events.push_back(std::move(e));\n}\n} catch (const sirt::TraceError& e) {\nerr << e.what() << '\\n';\n"
       "return 2;\n}\n";
  o += "auto m = std::make_unique<Monitor>();\nauto sink = [&](const std::string& l) { out << l << '\\n'; };\n";
  o += "try {\nfor (const Event& ev : events) {\nwhile (auto d = m->next_deadline()) {\nif (*d > ev.t) break;\n"
       "m->now = *d;\n";
  for (auto& i : sp.inputs) o += "m->has_" + i.name + " = false;\n";
  o += "++m->ctr.deadline_executions;\nm->body_timed();\nm->advance(*d);\nm->transitions(*d);\nm->vb.flush(sink);\n}\n";
  o += "m->now = ev.t;\n";
  for (auto& i : sp.inputs)
    o += "m->has_" + i.name + " = ev." + i.name + ".has_value();\nif (ev." + i.name + ") m->in_" + i.name + " = *ev." +
         i.name + ";\n";
  o += "++m->ctr.input_executions;\nm->body_event();\nm->transitions(ev.t);\nm->vb.flush(sink);\n}\n";
  o += "} catch (const sirt::Fault& f) {\nm->vb.discard();\nout.flush();\nerr << \"runtime fault at t=\" << "
       "sirt::format_seconds(m->now) << \": \" << f.what() << '\\n';\nreturn 3;\n}\n";
  o += "if (args.counters) err << sirt::counters_json(m->ctr) << '\\n';\nreturn 0;\n}\n\n}  // namespace " + in.ns +
       "\n";
  return o;
}

std::map<std::string, std::string> CppFormatter::support_files() { return {{"streamir_rt.hpp", kRuntimeHeader}}; }

std::vector<std::string> CppFormatter::build_commands(const std::string&) {
  return {"${CXX:-c++} -std=c++20 -O1 -o monitor monitor.cpp"};
}

// ---------------------------------------------------------------- driver-level emission

namespace {

void prepare_info(const AnalyzedSpec& a, const MemoryLayout* layout) {
  g_info = CppInfo{};
  g_info.a = &a;
  g_info.layout = layout;
  RunOptions ro = default_run_options(a);
  g_info.rank = ro.verdict_rank;
  g_info.decl = ro.decl_index;
  std::size_t gi = 0, li = 0;
  for (auto& f : a.spec.frequencies) {
    if (!f.local) {
      g_info.globals.emplace_back(f.period, gi++);
    } else {
      g_info.locals.emplace_back(f.period, f.stream, li++);
      g_info.with_locals.insert(f.stream);
    }
  }
}

std::string render(const Monitor& m, const AnalyzedSpec& a, const MemoryLayout* layout, Formatter& f, bool instrument,
                   const std::string& ns, EmitInput& in) {
  prepare_info(a, layout);
  SplitProgram sp = split_event_time(m.body);
  in = EmitInput{&a, layout, sp.event, sp.timed, instrument, ns};
  f.begin(in);
  Walker w(f, a);
  Scope top{"k0", Type::Unit};
  std::string ev = w.stmt(sp.event, top);
  std::string tm = w.stmt(sp.timed, top);
  return f.driver(in, ev, tm);
}

const char* const kMainPreamble =
    "#include <fstream>\n#include <iostream>\n#include <memory>\n\n#include \"streamir_rt.hpp\"\n\n";

std::string main_function(const std::vector<std::string>& namespaces) {
  std::string o =
      "int main(int argc, char** argv) {\n"
      "std::ios::sync_with_stdio(false);\n"
      "sirt::Args args;\n"
      "try {\nargs = sirt::parse_args(argc, argv);\n} catch (const std::exception& e) {\n"
      "std::cerr << e.what() << '\\n';\nreturn 2;\n}\n"
      "std::ifstream file;\nstd::istream* in = &std::cin;\n"
      "if (!args.trace.empty()) {\nfile.open(args.trace);\nif (!file) {\n"
      "std::cerr << \"cannot open \" << args.trace << '\\n';\nreturn 2;\n}\nin = &file;\n}\n";
  if (namespaces.size() == 1) {
    o += "return " + namespaces[0] + "::run(args, *in, std::cout, std::cerr);\n}\n";
    return o;
  }
  o += "switch (args.monitor) {\n";
  for (std::size_t i = 0; i < namespaces.size(); ++i)
    o += "case " + std::to_string(i) + ": return " + namespaces[i] + "::run(args, *in, std::cout, std::cerr);\n";
  o += "default:\nstd::cerr << \"--monitor must name one of " + std::to_string(namespaces.size()) +
       " monitors\\n\";\nreturn 2;\n}\n}\n";
  return o;
}

}  // namespace

EmittedProgram emit(const Monitor& m, const AnalyzedSpec& spec, const MemoryLayout* layout, Formatter& f,
                    bool instrument) {
  EmitInput in;
  std::string code = render(m, spec, layout, f, instrument, "monitor", in);
  EmittedProgram p;
  p.files = f.support_files();
  p.files[f.main_file_name()] = indent(std::string(kMainPreamble) + code + "\n" + main_function({"monitor"}));
  p.build = f.build_commands(".");
  return p;
}

EmittedProgram emit_bundle(const std::vector<BundleItem>& items, bool instrument) {
  CppFormatter f;
  std::string code = kMainPreamble;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < items.size(); ++i) {
    EmitInput in;
    names.push_back("monitor_" + std::to_string(i));
    code += render(*items[i].monitor, *items[i].spec, items[i].layout, f, instrument, names.back(), in) + "\n";
  }
  code += main_function(names);
  EmittedProgram p;
  p.files = f.support_files();
  p.files[f.main_file_name()] = indent(code);
  p.build = f.build_commands(".");
  return p;
}

// ---------------------------------------------------------------- host toolchain

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

int shell(const std::string& cmd) {
  int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : 128 + WTERMSIG(rc);
}

}  // namespace

BackendReport build_program(const EmittedProgram& p, const std::string& dir, const std::string& opt_flag) {
  BackendReport r;
  fs::create_directories(dir);
  for (auto& [name, text] : p.files) {
    fs::path path = fs::path(dir) / name;
    fs::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << text;
  }
  fs::path log = fs::path(dir) / "build.log";
  for (std::string cmd : p.build) {
    if (auto pos = cmd.find("-O1"); pos != std::string::npos) cmd.replace(pos, 3, opt_flag);
    int rc = shell("cd " + quote(dir) + " && " + cmd + " > " + quote(log.string()) + " 2>&1");
    r.build_output += slurp(log);
    if (rc != 0) {
      r.exit_code = rc;
      return r;
    }
  }
  r.built = true;
  return r;
}

BackendReport run_program(const std::string& exe, const std::string& trace_path,
                          const std::vector<std::string>& extra_args) {
  BackendReport r;
  r.built = true;
  fs::path base = fs::path(exe).parent_path();
  fs::path out = base / "run.out", err = base / "run.err";
  std::string cmd = quote(exe) + " --trace " + quote(trace_path);
  for (auto& a : extra_args) cmd += " " + quote(a);
  r.exit_code = shell(cmd + " > " + quote(out.string()) + " 2> " + quote(err.string()));
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

BackendReport check_backend(const EmittedProgram& p, const std::string& dir, const std::string& trace_path) {
  BackendReport b = build_program(p, dir);
  if (!b.built) return b;
  BackendReport r = run_program((fs::absolute(fs::path(dir)) / p.entry).string(), trace_path);
  r.build_output = b.build_output;
  return r;
}

}  // namespace streamir

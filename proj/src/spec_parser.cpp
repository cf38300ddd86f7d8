#include <cctype>
#include <functional>
#include <set>

#include "streamir/runtime/streamir_rt.hpp"
#include "streamir/spec.hpp"

namespace streamir {

std::string Diagnostic::format() const {
  return file + ":" + std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": " + severity + ": " + message;
}

namespace {
std::string join_diags(const std::vector<Diagnostic>& ds) {
  std::string s;
  for (auto& d : ds) {
    if (!s.empty()) s += "\n";
    s += d.format();
  }
  return s;
}
}  // namespace

SpecError::SpecError(std::vector<Diagnostic> ds) : std::runtime_error(join_diags(ds)), diagnostics(std::move(ds)) {}

namespace {

const std::set<std::string>& reserved() {
  static const std::set<std::string> r = {
      "input", "output", "spawn", "eval",    "close",  "when",     "with",   "true",   "false",  "Global",
      "Local", "skip",  "shift",  "if",      "then",   "else",     "iterate", "assign", "schedule", "global",
      "local", "dynamic", "and",  "or",      "const",  "self",     "syn",    "get",    "window", "default"};
  return r;
}

struct Tok {
  enum Kind { Ident, Int, Float, Dur, Str, Sym, End } kind = End;
  std::string text;
  std::int64_t dur = 0;
  SourceLoc loc;
};

class SpecLexer {
 public:
  SpecLexer(std::string_view src, std::string file) : src_(src), file_(std::move(file)) {}

  std::vector<Tok> run() {
    std::vector<Tok> out;
    while (true) {
      skip_ws();
      Tok t;
      t.loc = {line_, col_};
      if (i_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      unsigned char c = static_cast<unsigned char>(src_[i_]);
      if (std::isalpha(c) || c == '_') {
        t.kind = Tok::Ident;
        while (i_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_'))
          t.text.push_back(take());
      } else if (std::isdigit(c)) {
        lex_number(t);
      } else if (c == '"') {
        t.kind = Tok::Str;
        take();
        while (true) {
          if (i_ >= src_.size()) error(t.loc, "unterminated string literal");
          char d = take();
          if (d == '"') break;
          if (d == '\\' && i_ < src_.size()) {
            char e = take();
            t.text.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
          } else {
            t.text.push_back(d);
          }
        }
      } else {
        t.kind = Tok::Sym;
        static const std::vector<std::pair<std::string, std::string>> syms = {
            {"¬", "!"}, {"∧", "&&"}, {"∨", "||"}, {"∃", "exists"}, {"∀", "forall"}, {"≠", "!="}, {"≤", "<="},
            {"≥", ">="}, {"||", "||"}, {"&&", "&&"}, {"==", "=="}, {"!=", "!="}, {"<=", "<="}, {">=", ">="}};
        for (auto& [from, to] : syms) {
          if (src_.substr(i_, from.size()) == from) {
            for (std::size_t k = 0; k < from.size(); ++k) take();
            t.text = to;
            if (to == "exists" || to == "forall") t.kind = Tok::Ident;
            break;
          }
        }
        if (t.text.empty()) {
          if (std::string_view(":(),.@!-+*/%<>").find(static_cast<char>(c)) == std::string_view::npos) {
            if (c >= 0x80) error(t.loc, "unexpected character");
            error(t.loc, std::string("unexpected character '") + static_cast<char>(c) + "'");
          }
          t.text = std::string(1, take());
        }
      }
      out.push_back(std::move(t));
    }
  }

  [[noreturn]] void error(SourceLoc loc, const std::string& msg) {
    throw SpecError({Diagnostic{file_, loc, "error", msg}});
  }

 private:
  void lex_number(Tok& t) {
    std::string digits;
    bool is_float = false;
    while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) digits.push_back(take());
    if (i_ + 1 < src_.size() && src_[i_] == '.' && std::isdigit(static_cast<unsigned char>(src_[i_ + 1]))) {
      is_float = true;
      digits.push_back(take());
      while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) digits.push_back(take());
    }
    std::string unit;
    std::size_t j = i_;
    while (j < src_.size() && std::isalpha(static_cast<unsigned char>(src_[j]))) unit.push_back(src_[j++]);
    if (unit == "s" || unit == "ms" || unit == "us" || unit == "ns" || unit == "min") {
      for (std::size_t k = 0; k < unit.size(); ++k) take();
      auto ns = sirt::parse_seconds(digits);
      if (!ns) error(t.loc, "bad duration");
      std::int64_t v = *ns;
      if (unit == "min") {
        v *= 60;
      } else if (unit != "s") {
        std::int64_t scale = unit == "ms" ? 1000 : unit == "us" ? 1000000 : 1000000000;
        if (v % scale) error(t.loc, "duration below one nanosecond");
        v /= scale;
      }
      t.kind = Tok::Dur;
      t.dur = v;
      t.text = digits + unit;
      return;
    }
    if (!unit.empty() && (unit[0] == 'e' || unit[0] == 'E') && is_float) {
      // exponent
      digits.push_back(take());
      if (i_ < src_.size() && (src_[i_] == '+' || src_[i_] == '-')) digits.push_back(take());
      while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) digits.push_back(take());
    }
    t.kind = is_float ? Tok::Float : Tok::Int;
    t.text = digits;
  }

  char take() {
    char c = src_[i_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) {
      ++col_;
    }
    return c;
  }
  void skip_ws() {
    while (i_ < src_.size()) {
      if (std::isspace(static_cast<unsigned char>(src_[i_]))) {
        take();
      } else if (src_.substr(i_, 2) == "//") {
        while (i_ < src_.size() && src_[i_] != '\n') take();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::string file_;
  std::size_t i_ = 0;
  int line_ = 1, col_ = 1;
};

struct Ref {
  std::string stream;
  SourceLoc loc;
  bool with_instance = false;
};

struct RawClause {
  Clause clause;
  std::vector<Ref> refs;
};

class SpecParser {
 public:
  SpecParser(std::string_view src, std::string file) : file_(file), toks_(SpecLexer(src, file).run()) {}

  StreamSpec parse() {
    StreamSpec spec;
    spec.file = file_;
    while (peek().kind != Tok::End) {
      if (is_kw("input")) {
        parse_input(spec);
      } else if (is_kw("output")) {
        parse_output(spec);
      } else {
        fail("expected 'input' or 'output'");
      }
    }
    check(spec);
    return spec;
  }

 private:
  // ---- token helpers
  const Tok& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  Tok next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool is_sym(const char* s, std::size_t k = 0) const { return peek(k).kind == Tok::Sym && peek(k).text == s; }
  bool is_kw(const char* s, std::size_t k = 0) const { return peek(k).kind == Tok::Ident && peek(k).text == s; }
  [[noreturn]] void error(SourceLoc loc, const std::string& msg) const {
    throw SpecError({Diagnostic{file_, loc, "error", msg}});
  }
  [[noreturn]] void fail(const std::string& msg) const {
    const Tok& t = peek();
    error(t.loc, msg + (t.kind == Tok::End ? ", found end of input" : ", found '" + t.text + "'"));
  }
  void expect_sym(const char* s) {
    if (!is_sym(s)) fail(std::string("expected '") + s + "'");
    next();
  }
  void expect_kw(const char* s) {
    if (!is_kw(s)) fail(std::string("expected '") + s + "'");
    next();
  }
  std::string ident(const char* what) {
    if (peek().kind != Tok::Ident) fail(std::string("expected ") + what);
    if (reserved().count(peek().text)) fail(std::string("expected ") + what + " (keyword is reserved)");
    return next().text;
  }
  Type type() {
    SourceLoc loc = peek().loc;
    if (peek().kind != Tok::Ident) fail("expected type");
    auto t = parse_type(next().text);
    if (!t || *t == Type::Unit) error(loc, "unknown type");
    return *t;
  }

  // ---- declarations
  void parse_input(StreamSpec& spec) {
    next();
    InputDecl d;
    d.loc = peek().loc;
    d.name = ident("input name");
    expect_sym(":");
    d.type = type();
    declare(d.name, d.loc);
    spec.inputs.push_back(d);
  }

  void parse_output(StreamSpec& spec) {
    next();
    OutputDecl o;
    o.loc = peek().loc;
    o.name = ident("output name");
    declare(o.name, o.loc);
    param_.clear();
    if (is_sym("(")) {
      next();
      o.parameterized = true;
      o.param_name = ident("parameter name");
      param_ = o.param_name;
      if (is_sym(":")) {
        next();
        o.param_type = type();
        if (o.param_type == Type::Float64) error(o.loc, "parameters must be Bool, Int64 or Str");
        param_annotated_[o.name] = true;
      }
      expect_sym(")");
    }
    if (is_sym(":")) {
      next();
      o.type = type();
      annotated_[o.name] = true;
    }
    bool have_eval = false;
    while (is_kw("spawn") || is_kw("eval") || is_kw("close")) {
      std::string kw = peek().text;
      SourceLoc loc = peek().loc;
      next();
      RawClause rc = clause(kw);
      rc.clause.loc = loc;
      if (kw == "spawn") {
        if (o.spawn) error(loc, "duplicate spawn clause");
        if (!rc.clause.with && o.parameterized) error(loc, "spawn clause of a parameterized output needs 'with'");
        o.spawn = rc.clause;
        raw_[o.name]["spawn"] = rc;
      } else if (kw == "eval") {
        if (have_eval) error(loc, "duplicate eval clause");
        if (!rc.clause.with) error(loc, "eval clause needs 'with'");
        have_eval = true;
        o.eval = rc.clause;
        raw_[o.name]["eval"] = rc;
      } else {
        if (o.close) error(loc, "duplicate close clause");
        if (rc.clause.with) error(loc, "close clause takes no 'with'");
        if (!rc.clause.when) error(loc, "close clause needs 'when'");
        o.close = rc.clause;
        raw_[o.name]["close"] = rc;
      }
    }
    if (!have_eval) fail("expected eval clause for output '" + o.name + "'");
    if (o.parameterized && !o.spawn) error(o.loc, "parameterized output '" + o.name + "' needs a spawn clause");
    if (!o.parameterized && o.spawn) error(o.spawn->loc, "spawn clause requires a parameter");
    if (!o.parameterized && o.close) error(o.close->loc, "close clause requires a parameter");
    spec.outputs.push_back(std::move(o));
    param_.clear();
  }

  void declare(const std::string& n, SourceLoc loc) {
    if (!names_.insert(n).second) error(loc, "duplicate stream name '" + n + "'");
  }

  RawClause clause(const std::string& kw) {
    RawClause rc;
    refs_ = &rc.refs;
    deps_ = &rc.clause.sync_deps;
    if (is_sym("@")) {
      next();
      rc.clause.pacing = pacing();
    }
    if (is_kw("when")) {
      next();
      rc.clause.when = expr();
    }
    if (is_kw("with")) {
      next();
      rc.clause.with = expr();
    }
    (void)kw;
    refs_ = nullptr;
    deps_ = nullptr;
    return rc;
  }

  Pacing pacing() {
    Pacing p;
    if ((is_kw("Global") || is_kw("Local")) && is_sym("(", 1)) {
      p.kind = is_kw("Global") ? Pacing::Kind::Global : Pacing::Kind::Local;
      next();
      next();
      if (peek().kind != Tok::Dur) fail("expected duration");
      auto t = next();
      if (t.dur <= 0) error(t.loc, "period must be positive");
      p.period = Duration{t.dur};
      expect_sym(")");
      return p;
    }
    p.kind = Pacing::Kind::Event;
    p.event = ev_or();
    return p;
  }
  EventFormula ev_or() {
    EventFormula f = ev_and();
    if (!is_sym("||")) return f;
    EventFormula o;
    o.kind = EventFormula::Kind::Or;
    o.args.push_back(std::move(f));
    while (is_sym("||")) {
      next();
      o.args.push_back(ev_and());
    }
    return o;
  }
  EventFormula ev_and() {
    EventFormula f = ev_atom();
    if (!is_sym("&&")) return f;
    EventFormula a;
    a.kind = EventFormula::Kind::And;
    a.args.push_back(std::move(f));
    while (is_sym("&&")) {
      next();
      a.args.push_back(ev_atom());
    }
    return a;
  }
  EventFormula ev_atom() {
    if (is_sym("(")) {
      next();
      auto f = ev_or();
      expect_sym(")");
      return f;
    }
    EventFormula f;
    SourceLoc loc = peek().loc;
    f.name = ident("input name in pacing");
    pacing_refs_.push_back({f.name, loc});
    return f;
  }

  // ---- expressions
  ExprPtr expr() { return or_expr(); }
  ExprPtr or_expr() {
    auto e = and_expr();
    while (is_sym("||")) {
      next();
      e = ir::bin(BinOp::Or, e, and_expr());
    }
    return e;
  }
  ExprPtr and_expr() {
    auto e = cmp_expr();
    while (is_sym("&&")) {
      next();
      e = ir::bin(BinOp::And, e, cmp_expr());
    }
    return e;
  }
  ExprPtr cmp_expr() {
    auto e = add_expr();
    static const std::vector<std::pair<const char*, BinOp>> ops = {{"==", BinOp::Eq}, {"!=", BinOp::Ne},
                                                                    {"<=", BinOp::Le}, {">=", BinOp::Ge},
                                                                    {"<", BinOp::Lt},  {">", BinOp::Gt}};
    for (auto& [s, op] : ops) {
      if (is_sym(s)) {
        next();
        return ir::bin(op, e, add_expr());
      }
    }
    return e;
  }
  ExprPtr add_expr() {
    auto e = mul_expr();
    while (is_sym("+") || is_sym("-")) {
      BinOp op = next().text == "+" ? BinOp::Add : BinOp::Sub;
      e = ir::bin(op, e, mul_expr());
    }
    return e;
  }
  ExprPtr mul_expr() {
    auto e = unary();
    while (is_sym("*") || is_sym("/") || is_sym("%")) {
      auto t = next().text;
      BinOp op = t == "*" ? BinOp::Mul : t == "/" ? BinOp::Div : BinOp::Rem;
      e = ir::bin(op, e, unary());
    }
    return e;
  }
  ExprPtr unary() {
    if (is_sym("!")) {
      next();
      return ir::un(UnOp::Not, unary());
    }
    if (is_sym("-")) {
      next();
      auto e = unary();
      if (e->kind == Expr::Kind::Const && e->value.type() == Type::Int64)
        return ir::cnst(Value(sirt::ineg(e->value.as_int())));
      if (e->kind == Expr::Kind::Const && e->value.type() == Type::Float64) return ir::cnst(Value(-e->value.as_float()));
      return ir::un(UnOp::Neg, e);
    }
    return postfix();
  }

  Value literal_value() {
    bool neg = false;
    if (is_sym("-")) {
      next();
      neg = true;
    }
    const Tok& t = peek();
    if (t.kind == Tok::Int) {
      auto v = parse_int_tok(next());
      return Value(neg ? sirt::ineg(v) : v);
    }
    if (t.kind == Tok::Float) {
      auto v = sirt::parse_float(next().text);
      return Value(neg ? -*v : *v);
    }
    if (neg) fail("expected number");
    if (t.kind == Tok::Str) return Value(next().text);
    if (is_kw("true")) {
      next();
      return Value(true);
    }
    if (is_kw("false")) {
      next();
      return Value(false);
    }
    fail("expected literal");
  }

  std::int64_t parse_int_tok(const Tok& t) {
    auto v = sirt::parse_int(t.text);
    if (!v) error(t.loc, "integer literal out of range");
    return *v;
  }

  ExprPtr postfix() {
    SourceLoc loc = peek().loc;
    auto e = primary();
    while (is_sym(".")) {
      next();
      SourceLoc mloc = peek().loc;
      if (e->kind != Expr::Kind::Syn || hold_.count(e.get()))
        error(mloc, "stream method applied to something that is not a stream access");
      std::string m = ident_any("method");
      expect_sym("(");
      if (m == "offset") {
        expect_kw("by");
        expect_sym(":");
        bool neg = false;
        if (is_sym("-")) {
          next();
          neg = true;
        }
        if (peek().kind != Tok::Int) fail("expected integer offset");
        auto t = next();
        auto n = parse_int_tok(t);
        if (!neg || n < 1) error(t.loc, "offsets must be negative integers (past accesses)");
        if (n > 100000) error(t.loc, "offset too large");
        expect_sym(",");
        expect_kw("or");
        expect_sym(":");
        auto dft = expr();
        expect_sym(")");
        drop_sync(e->stream);
        e = ir::get(e->stream, e->inst, static_cast<std::uint32_t>(n), dft);
      } else if (m == "aggregate") {
        expect_kw("over");
        expect_sym(":");
        if (peek().kind != Tok::Dur) fail("expected duration");
        auto dt = next();
        if (dt.dur <= 0) error(dt.loc, "window duration must be positive");
        expect_sym(",");
        expect_kw("using");
        expect_sym(":");
        SourceLoc aloc = peek().loc;
        auto k = parse_agg(ident_any("aggregation"));
        if (!k) error(aloc, "unknown aggregation function");
        Aggregation agg{*k, std::nullopt};
        if (is_sym(",")) {
          next();
          expect_kw("or");
          expect_sym(":");
          agg.fallback = literal_value();
        }
        expect_sym(")");
        drop_sync(e->stream);
        e = ir::window(e->stream, e->inst, Duration{dt.dur}, agg);
      } else if (m == "hold") {
        expect_sym(")");
        drop_sync(e->stream);
        hold_.insert(e.get());
      } else {
        error(mloc, "unknown stream method '" + m + "'");
      }
      if (e->kind != Expr::Kind::Syn && is_sym(".")) error(peek().loc, "stream methods cannot be chained");
    }
    (void)loc;
    return e;
  }

  std::string ident_any(const char* what) {
    if (peek().kind != Tok::Ident) fail(std::string("expected ") + what);
    return next().text;
  }

  ExprPtr primary() {
    const Tok& t = peek();
    if (t.kind == Tok::Int) return ir::cnst(Value(parse_int_tok(next())));
    if (t.kind == Tok::Float) {
      auto v = sirt::parse_float(next().text);
      return ir::cnst(Value(*v));
    }
    if (t.kind == Tok::Str) return ir::cnst(Value(next().text));
    if (is_kw("true")) {
      next();
      return ir::cnst(Value(true));
    }
    if (is_kw("false")) {
      next();
      return ir::cnst(Value(false));
    }
    if (is_sym("(")) {
      next();
      auto e = expr();
      expect_sym(")");
      return e;
    }
    if (t.kind == Tok::Ident) {
      SourceLoc loc = t.loc;
      std::string n = ident("expression");
      if (!param_.empty() && n == param_) return ir::self();
      if (is_sym("(")) {
        next();
        auto inst = expr();
        expect_sym(")");
        note_ref(n, loc, true);
        return ir::syn(n, inst);
      }
      note_ref(n, loc, false);
      return ir::syn(n);
    }
    fail("expected expression");
  }

  void note_ref(const std::string& n, SourceLoc loc, bool inst) {
    if (refs_) refs_->push_back({n, loc, inst});
    if (deps_) deps_->push_back(n);
  }
  // The most recent sync dependency on `stream` turned out to be an offset/window/hold access.
  void drop_sync(const std::string& stream) {
    if (!deps_) return;
    for (auto it = deps_->rbegin(); it != deps_->rend(); ++it) {
      if (*it == stream) {
        deps_->erase(std::next(it).base());
        return;
      }
    }
  }

  // ---- semantic checks
  void check(StreamSpec& spec) {
    for (auto& [n, loc] : pacing_refs_) {
      if (!spec.input(n)) error(loc, "pacing refers to '" + n + "', which is not an input");
    }
    for (auto& [o, clauses] : raw_) {
      for (auto& [k, rc] : clauses) {
        for (auto& r : rc.refs) {
          if (spec.decl_index(r.stream) < 0) error(r.loc, "reference to undeclared stream '" + r.stream + "'");
          const OutputDecl* target = spec.output(r.stream);
          bool param = target && target->parameterized;
          if (param && !r.with_instance)
            error(r.loc, "parameterized stream '" + r.stream + "' must be accessed with an instance");
          if (!param && r.with_instance)
            error(r.loc, "stream '" + r.stream + "' is not parameterized and takes no instance");
        }
      }
      for (auto& [k, rc] : clauses) {
        // dedupe sync deps, keep first-occurrence order
        std::vector<std::string> uniq;
        for (auto& d : rc.clause.sync_deps)
          if (std::find(uniq.begin(), uniq.end(), d) == uniq.end()) uniq.push_back(d);
        rc.clause.sync_deps = uniq;
      }
    }
    for (auto& o : spec.outputs) {
      auto& c = raw_[o.name];
      o.eval.sync_deps = c["eval"].clause.sync_deps;
      if (o.spawn) o.spawn->sync_deps = c["spawn"].clause.sync_deps;
      if (o.close) o.close->sync_deps = c["close"].clause.sync_deps;
    }
    infer_types(spec);
  }

  void infer_types(StreamSpec& spec) {
    // Unannotated output types and parameter types are found by local fixpoint iteration.
    std::map<std::string, bool> known;
    for (auto& o : spec.outputs) {
      known[o.name] = annotated_.count(o.name) > 0;
      known["(" + o.name] = !o.parameterized || param_annotated_.count(o.name) > 0;
    }
    auto tentative = [&](const ExprPtr& e, const OutputDecl& self) -> std::optional<Type> {
      std::function<std::optional<Type>(const ExprPtr&)> go = [&](const ExprPtr& x) -> std::optional<Type> {
        using K = Expr::Kind;
        switch (x->kind) {
          case K::Const: return x->value.type();
          case K::Self:
            if (!known["(" + self.name]) return std::nullopt;
            return self.param_type;
          case K::Syn:
          case K::Get:
          case K::Window: {
            std::optional<Type> st;
            if (auto in = spec.input(x->stream))
              st = in->type;
            else if (known[x->stream])
              st = spec.output(x->stream)->type;
            if (x->kind == K::Get && !st) return go(x->dft);
            if (x->kind == K::Window) {
              switch (x->agg.kind) {
                case AggKind::Exists:
                case AggKind::Forall: return Type::Bool;
                case AggKind::Count: return Type::Int64;
                case AggKind::Avg: return Type::Float64;
                default:
                  if (!st && x->agg.fallback) return x->agg.fallback->type();
                  return st;
              }
            }
            return st;
          }
          case K::Bin:
            switch (x->bop) {
              case BinOp::Add:
              case BinOp::Sub:
              case BinOp::Mul:
              case BinOp::Div:
              case BinOp::Rem: {
                auto l = go(x->lhs);
                return l ? l : go(x->rhs);
              }
              default: return Type::Bool;
            }
          case K::Un: return x->uop == UnOp::Not ? std::optional<Type>(Type::Bool) : go(x->lhs);
        }
        return std::nullopt;
      };
      return go(e);
    };
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto& o : spec.outputs) {
        if (!known["(" + o.name] && o.spawn && o.spawn->with) {
          if (auto t = tentative(o.spawn->with, o)) {
            o.param_type = *t;
            known["(" + o.name] = true;
            changed = true;
          }
        }
        if (!known[o.name] && o.eval.with) {
          if (auto t = tentative(o.eval.with, o)) {
            o.type = *t;
            known[o.name] = true;
            changed = true;
          }
        }
      }
    }
    for (auto& o : spec.outputs) {
      if (!known["(" + o.name]) error(o.loc, "cannot infer the parameter type of '" + o.name + "'; annotate it");
      if (!known[o.name]) error(o.loc, "cannot infer the type of '" + o.name + "'; annotate it");
      if (o.parameterized && (o.param_type == Type::Float64 || o.param_type == Type::Unit))
        error(o.loc, "parameter of '" + o.name + "' must be Bool, Int64 or Str");
    }
    // Full check now that every type is fixed.
    for (auto& o : spec.outputs) {
      TypeEnv env{&spec, o.param_type, o.parameterized};
      auto check_clause = [&](const Clause& c, const char* what) {
        std::string err;
        if (c.when) {
          auto t = type_of(c.when, env, &err);
          if (!t) error(c.loc, std::string("type error in ") + what + " condition of '" + o.name + "': " + err);
          if (*t != Type::Bool)
            error(c.loc, std::string("boolean expected in when-condition of '") + o.name + "', found " +
                             std::string(type_name(*t)));
        }
        if (c.with) {
          TypeEnv wenv = env;
          if (std::string(what) == "spawn") wenv.has_self = false;
          auto t = type_of(c.with, wenv, &err);
          if (!t) error(c.loc, std::string("type error in ") + what + " expression of '" + o.name + "': " + err);
          if (std::string(what) == "eval" && *t != o.type)
            error(c.loc, "eval expression of '" + o.name + "' has type " + std::string(type_name(*t)) + ", expected " +
                             std::string(type_name(o.type)));
          if (std::string(what) == "spawn" && o.parameterized && *t != o.param_type)
            error(c.loc, "spawn expression of '" + o.name + "' has type " + std::string(type_name(*t)) +
                             ", parameter has type " + std::string(type_name(o.param_type)));
        }
      };
      if (o.spawn) {
        TypeEnv senv = env;
        senv.has_self = false;
        if (o.spawn->when) {
          std::string err;
          auto t = type_of(o.spawn->when, senv, &err);
          if (!t) error(o.spawn->loc, "type error in spawn condition of '" + o.name + "': " + err);
          if (*t != Type::Bool) error(o.spawn->loc, "boolean expected in when-condition of '" + o.name + "'");
        }
        check_clause(Clause{std::nullopt, nullptr, o.spawn->with, {}, o.spawn->loc}, "spawn");
      }
      check_clause(o.eval, "eval");
      if (o.close) check_clause(*o.close, "close");
    }
  }

  std::string file_;
  std::vector<Tok> toks_;
  std::size_t pos_ = 0;
  std::string param_;
  std::set<std::string> names_;
  std::map<std::string, bool> annotated_, param_annotated_;
  std::map<std::string, std::map<std::string, RawClause>> raw_;
  std::vector<std::pair<std::string, SourceLoc>> pacing_refs_;
  std::vector<Ref>* refs_ = nullptr;
  std::vector<std::string>* deps_ = nullptr;
  std::set<const Expr*> hold_;
};

}  // namespace

StreamSpec parse_spec(std::string_view text, std::string file) { return SpecParser(text, std::move(file)).parse(); }

}  // namespace streamir

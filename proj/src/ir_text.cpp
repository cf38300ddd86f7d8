#include <cctype>
#include <sstream>

#include "streamir/ir.hpp"
#include "streamir/runtime/streamir_rt.hpp"

namespace streamir {

IrParseError::IrParseError(int l, int c, const std::string& msg)
    : std::runtime_error(std::to_string(l) + ":" + std::to_string(c) + ": " + msg), line(l), col(c) {}

// ---------------------------------------------------------------- printing

namespace {

bool is_unit_const(const ExprPtr& e) { return e->kind == Expr::Kind::Const && e->value.is_unit(); }

std::string inst_suffix(const ExprPtr& inst) {
  if (is_unit_const(inst)) return "";
  return "[" + print_expr(inst) + "]";
}

std::string pad(int n) { return std::string(static_cast<std::size_t>(n), ' '); }

std::string print_block(const StmtPtr& s, int ind);
std::string print_seq(const StmtPtr& s, int ind);

// A statement in a position that takes exactly one unit (then/else/body).
std::string print_unit(const StmtPtr& s, int ind) {
  using K = Stmt::Kind;
  switch (s->kind) {
    case K::Skip: return "skip";
    case K::Shift: return "shift " + s->stream;
    case K::Input: return "input " + s->stream;
    case K::Close: return "close " + s->stream;
    case K::Spawn:
      return is_unit_const(s->expr) ? "spawn " + s->stream : "spawn " + s->stream + " " + print_expr(s->expr);
    case K::Eval: return "eval " + s->stream + " " + print_expr(s->expr);
    case K::Seq:
    case K::Par: return print_block(s, ind);
    case K::If: {
      bool has_else = s->second->kind != K::Skip;
      std::string out = "if " + print_guard(s->guard) + " then";
      if (has_else && s->first->kind == K::If) {
        out += " {\n" + pad(ind + 2) + print_seq(s->first, ind + 2) + "\n" + pad(ind) + "}";
      } else {
        out += "\n" + pad(ind + 2) + print_unit(s->first, ind + 2);
      }
      if (has_else) out += "\n" + pad(ind) + "else\n" + pad(ind + 2) + print_unit(s->second, ind + 2);
      return out;
    }
    case K::Iterate: return "iterate " + s->stream + "\n" + pad(ind + 2) + print_unit(s->first, ind + 2);
    case K::Assign: {
      std::string out = "assign " + s->stream;
      if (!is_unit_const(s->expr)) out += " " + print_expr(s->expr);
      return out + "\n" + pad(ind + 2) + print_unit(s->first, ind + 2);
    }
  }
  return "?";
}

std::string print_block(const StmtPtr& s, int ind) {
  return "{\n" + pad(ind + 2) + print_seq(s, ind + 2) + "\n" + pad(ind) + "}";
}

std::string print_par(const StmtPtr& s, int ind) {
  if (s->kind != Stmt::Kind::Par) {
    if (s->kind == Stmt::Kind::Seq) return print_block(s, ind);
    return print_unit(s, ind);
  }
  std::string rhs = s->second->kind == Stmt::Kind::Par || s->second->kind == Stmt::Kind::Seq
                        ? print_block(s->second, ind)
                        : print_unit(s->second, ind);
  return print_par(s->first, ind) + " ||\n" + pad(ind) + rhs;
}

std::string print_seq(const StmtPtr& s, int ind) {
  if (s->kind != Stmt::Kind::Seq) return print_par(s, ind);
  std::string rhs = s->second->kind == Stmt::Kind::Seq ? print_block(s->second, ind) : print_par(s->second, ind);
  return print_seq(s->first, ind) + " ;\n" + pad(ind) + rhs;
}

std::string print_guard_prec(const GuardPtr& g, int ctx) {
  // ctx 0: anything; 1: operand of and (or needs parens); 2: right operand of and
  using K = Guard::Kind;
  switch (g->kind) {
    case K::Input: return "input? " + g->stream;
    case K::Schedule:
      return g->freq.local ? "schedule local " + format_duration(g->freq.period) + " " + g->freq.stream
                           : "schedule global " + format_duration(g->freq.period);
    case K::Dynamic: return "dynamic " + print_expr(g->expr);
    case K::True: return "true";
    case K::False: return "false";
    case K::Or: {
      std::string s = print_guard_prec(g->lhs, 0) + " or " + print_guard_prec(g->rhs, 3);
      return ctx == 0 ? s : "(" + s + ")";
    }
    case K::And: {
      std::string s = print_guard_prec(g->lhs, 1) + " and " + print_guard_prec(g->rhs, 2);
      return ctx >= 2 ? "(" + s + ")" : s;
    }
  }
  return "?";
}

}  // namespace

std::string print_expr(const ExprPtr& e) {
  using K = Expr::Kind;
  switch (e->kind) {
    case K::Const: return "const " + e->value.literal();
    case K::Self: return "self";
    case K::Syn: return "syn " + e->stream + inst_suffix(e->inst);
    case K::Get:
      return "get " + e->stream + inst_suffix(e->inst) + " " + std::to_string(e->offset) + " " + print_expr(e->dft);
    case K::Window: {
      std::string s = "window " + e->stream + inst_suffix(e->inst) + " " + format_duration(e->dur) + " " +
                      std::string(agg_name(e->agg.kind));
      if (e->agg.fallback) s += " default " + e->agg.fallback->literal();
      return s;
    }
    case K::Bin: return "(" + print_expr(e->lhs) + " " + std::string(binop_symbol(e->bop)) + " " + print_expr(e->rhs) + ")";
    case K::Un: return (e->uop == UnOp::Not ? "!" : "-") + print_expr(e->lhs);
  }
  return "?";
}

std::string print_guard(const GuardPtr& g) { return print_guard_prec(g, 0); }
std::string print_stmt(const StmtPtr& s) { return print_seq(s, 0); }
std::string ir_print(const Monitor& m) { return print_stmt(m.body) + "\n"; }

// ---------------------------------------------------------------- parsing

namespace {

struct Tok {
  enum Kind { Ident, Num, Dur, Str, Sym, End } kind = End;
  std::string text;
  std::int64_t dur = 0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Tok> run() {
    std::vector<Tok> out;
    while (true) {
      skip_ws();
      Tok t;
      t.line = line_;
      t.col = col_;
      if (i_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      char c = src_[i_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::Ident;
        while (i_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_'))
          t.text.push_back(take());
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Tok::Num;
        while (i_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[i_])) || src_[i_] == '.'))
          t.text.push_back(take());
        if (i_ < src_.size() && (src_[i_] == 'e' || src_[i_] == 'E') && i_ + 1 < src_.size() &&
            (std::isdigit(static_cast<unsigned char>(src_[i_ + 1])) || src_[i_ + 1] == '+' || src_[i_ + 1] == '-')) {
          t.text.push_back(take());
          t.text.push_back(take());
          while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) t.text.push_back(take());
        }
        std::string unit;
        std::size_t j = i_;
        while (j < src_.size() && std::isalpha(static_cast<unsigned char>(src_[j]))) unit.push_back(src_[j++]);
        if (unit == "s" || unit == "ms" || unit == "us" || unit == "ns") {
          for (std::size_t k = 0; k < unit.size(); ++k) take();
          auto ns = sirt::parse_seconds(t.text);
          if (!ns) throw IrParseError(t.line, t.col, "bad duration '" + t.text + unit + "'");
          std::int64_t scale = unit == "s" ? 1 : unit == "ms" ? 1000 : unit == "us" ? 1000000 : 1000000000;
          if (*ns % scale != 0) throw IrParseError(t.line, t.col, "sub-nanosecond duration");
          t.kind = Tok::Dur;
          t.dur = *ns / scale;
          t.text += unit;
        }
      } else if (c == '"') {
        t.kind = Tok::Str;
        take();
        while (true) {
          if (i_ >= src_.size()) throw IrParseError(t.line, t.col, "unterminated string");
          char d = take();
          if (d == '"') break;
          if (d == '\\') {
            if (i_ >= src_.size()) throw IrParseError(t.line, t.col, "unterminated string");
            char e = take();
            switch (e) {
              case 'n': t.text.push_back('\n'); break;
              case 't': t.text.push_back('\t'); break;
              case 'r': t.text.push_back('\r'); break;
              case 'u': {
                if (i_ + 4 > src_.size()) throw IrParseError(t.line, t.col, "bad escape");
                int v = std::stoi(std::string(src_.substr(i_, 4)), nullptr, 16);
                for (int k = 0; k < 4; ++k) take();
                t.text.push_back(static_cast<char>(v));
                break;
              }
              default: t.text.push_back(e);
            }
          } else {
            t.text.push_back(d);
          }
        }
      } else {
        t.kind = Tok::Sym;
        static const char* two[] = {"||", "&&", "==", "!=", "<=", ">="};
        for (auto s : two) {
          if (src_.substr(i_, 2) == s) {
            t.text = s;
            take();
            take();
            break;
          }
        }
        if (t.text.empty()) {
          if (std::string_view(";{}()[]!-+*/%<>?").find(c) == std::string_view::npos)
            throw IrParseError(t.line, t.col, std::string("unexpected character '") + c + "'");
          t.text = std::string(1, take());
        }
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char take() {
    char c = src_[i_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
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
  std::size_t i_ = 0;
  int line_ = 1, col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(Lexer(src).run()) {}

  StmtPtr stmt_top() {
    auto s = seq();
    expect_end();
    return s;
  }
  GuardPtr guard_top() {
    auto g = guard();
    expect_end();
    return g;
  }
  ExprPtr expr_top() {
    auto e = atom();
    expect_end();
    return e;
  }

 private:
  const Tok& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  Tok next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool is_sym(const char* s, std::size_t k = 0) const { return peek(k).kind == Tok::Sym && peek(k).text == s; }
  bool is_kw(const char* s, std::size_t k = 0) const { return peek(k).kind == Tok::Ident && peek(k).text == s; }
  [[noreturn]] void fail(const std::string& msg) const {
    const Tok& t = peek();
    std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw IrParseError(t.line, t.col, msg + ", found " + found);
  }
  void expect_sym(const char* s) {
    if (!is_sym(s)) fail(std::string("expected '") + s + "'");
    next();
  }
  void expect_kw(const char* s) {
    if (!is_kw(s)) fail(std::string("expected '") + s + "'");
    next();
  }
  void expect_end() {
    if (peek().kind != Tok::End) fail("expected end of input");
  }
  std::string name() {
    if (peek().kind != Tok::Ident) fail("expected stream name");
    return next().text;
  }

  StmtPtr seq() {
    auto s = par();
    while (is_sym(";")) {
      next();
      s = ir::seq(s, par());
    }
    return s;
  }
  StmtPtr par() {
    auto s = unit();
    while (is_sym("||")) {
      next();
      s = ir::par(s, unit());
    }
    return s;
  }
  bool atom_start() const {
    return is_kw("const") || is_kw("self") || is_kw("syn") || is_kw("get") || is_kw("window") || is_sym("(") ||
           is_sym("!") || is_sym("-");
  }
  StmtPtr unit() {
    if (is_sym("{")) {
      next();
      auto s = seq();
      expect_sym("}");
      return s;
    }
    if (peek().kind != Tok::Ident) fail("expected statement");
    std::string kw = next().text;
    if (kw == "skip") return ir::skip();
    if (kw == "shift") return ir::shift(name());
    if (kw == "input") return ir::input(name());
    if (kw == "close") return ir::close(name());
    if (kw == "spawn") {
      auto n = name();
      return ir::spawn(n, atom_start() ? atom() : nullptr);
    }
    if (kw == "eval") {
      auto n = name();
      return ir::eval(n, atom());
    }
    if (kw == "if") {
      auto g = guard();
      expect_kw("then");
      auto t = unit();
      StmtPtr e;
      if (is_kw("else")) {
        next();
        e = unit();
      }
      return ir::if_(g, t, e);
    }
    if (kw == "iterate") {
      auto n = name();
      return ir::iterate(n, unit());
    }
    if (kw == "assign") {
      auto n = name();
      ExprPtr inst = atom_start() ? atom() : nullptr;
      return ir::assign(n, inst, unit());
    }
    --pos_;
    fail("expected statement");
  }

  GuardPtr guard() {
    auto g = guard_and();
    while (is_kw("or")) {
      next();
      g = ir::g_or(g, guard_and());
    }
    return g;
  }
  GuardPtr guard_and() {
    auto g = guard_atom();
    while (is_kw("and")) {
      next();
      g = ir::g_and(g, guard_atom());
    }
    return g;
  }
  GuardPtr guard_atom() {
    if (is_sym("(")) {
      next();
      auto g = guard();
      expect_sym(")");
      return g;
    }
    if (is_kw("input") && is_sym("?", 1)) {
      next();
      next();
      return ir::input_present(name());
    }
    if (is_kw("schedule")) {
      next();
      if (is_kw("global")) {
        next();
        return ir::schedule_global(duration());
      }
      expect_kw("local");
      auto d = duration();
      return ir::schedule_local(d, name());
    }
    if (is_kw("dynamic")) {
      next();
      return ir::dynamic(atom());
    }
    if (is_kw("true")) {
      next();
      return ir::g_true();
    }
    if (is_kw("false")) {
      next();
      return ir::g_false();
    }
    fail("expected guard");
  }
  Duration duration() {
    if (peek().kind != Tok::Dur) fail("expected duration");
    return Duration{next().dur};
  }

  Value literal() {
    bool neg = false;
    if (is_sym("-")) {
      next();
      neg = true;
    }
    const Tok& t = peek();
    if (t.kind == Tok::Num) {
      std::string txt = next().text;
      if (txt.find_first_of(".eE") == std::string::npos) {
        std::uint64_t mag = 0;
        auto res = std::from_chars(txt.data(), txt.data() + txt.size(), mag);
        if (res.ec != std::errc() || (!neg && mag > static_cast<std::uint64_t>(INT64_MAX)) ||
            (neg && mag > static_cast<std::uint64_t>(INT64_MAX) + 1))
          throw IrParseError(t.line, t.col, "integer literal out of range");
        return Value(static_cast<std::int64_t>(neg ? 0 - mag : mag));
      }
      auto d = sirt::parse_float(txt);
      if (!d) throw IrParseError(t.line, t.col, "bad float literal");
      return Value(neg ? -*d : *d);
    }
    if (t.kind == Tok::Ident && (t.text == "inf" || t.text == "nan")) {
      double d = t.text == "inf" ? HUGE_VAL : std::numeric_limits<double>::quiet_NaN();
      next();
      return Value(neg ? -d : d);
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
    if (is_sym("(") && is_sym(")", 1)) {
      next();
      next();
      return Value(Unit{});
    }
    fail("expected literal");
  }

  ExprPtr inst_opt() {
    if (!is_sym("[")) return nullptr;
    next();
    auto e = expr();
    expect_sym("]");
    return e;
  }

  ExprPtr atom() {
    if (is_kw("const")) {
      next();
      return ir::cnst(literal());
    }
    if (is_kw("self")) {
      next();
      return ir::self();
    }
    if (is_kw("syn")) {
      next();
      auto n = name();
      return ir::syn(n, inst_opt());
    }
    if (is_kw("get")) {
      next();
      auto n = name();
      auto inst = inst_opt();
      if (peek().kind != Tok::Num) fail("expected offset");
      const Tok& t = peek();
      auto off = sirt::parse_int(next().text);
      if (!off || *off < 1 || *off > 1000000) throw IrParseError(t.line, t.col, "offset must be a positive integer");
      auto dft = atom();
      return ir::get(n, inst, static_cast<std::uint32_t>(*off), dft);
    }
    if (is_kw("window")) {
      next();
      auto n = name();
      auto inst = inst_opt();
      auto d = duration();
      if (peek().kind != Tok::Ident) fail("expected aggregation");
      const Tok& t = peek();
      auto k = parse_agg(next().text);
      if (!k) throw IrParseError(t.line, t.col, "unknown aggregation '" + t.text + "'");
      Aggregation agg{*k, std::nullopt};
      if (is_kw("default")) {
        next();
        agg.fallback = literal();
      }
      return ir::window(n, inst, d, agg);
    }
    if (is_sym("!")) {
      next();
      return ir::un(UnOp::Not, atom());
    }
    if (is_sym("-")) {
      next();
      return ir::un(UnOp::Neg, atom());
    }
    if (is_sym("(")) {
      next();
      auto e = expr();
      expect_sym(")");
      return e;
    }
    fail("expected expression");
  }

  // Binary operators inside parentheses, usual precedence, left associative.
  ExprPtr expr(int level = 0) {
    static const std::vector<std::vector<std::pair<const char*, BinOp>>> levels = {
        {{"||", BinOp::Or}},
        {{"&&", BinOp::And}},
        {{"==", BinOp::Eq}, {"!=", BinOp::Ne}},
        {{"<", BinOp::Lt}, {"<=", BinOp::Le}, {">", BinOp::Gt}, {">=", BinOp::Ge}},
        {{"+", BinOp::Add}, {"-", BinOp::Sub}},
        {{"*", BinOp::Mul}, {"/", BinOp::Div}, {"%", BinOp::Rem}},
    };
    if (level == static_cast<int>(levels.size())) return atom();
    auto e = expr(level + 1);
    while (true) {
      bool matched = false;
      for (auto& [sym, op] : levels[static_cast<std::size_t>(level)]) {
        if (is_sym(sym)) {
          next();
          e = ir::bin(op, e, expr(level + 1));
          matched = true;
          break;
        }
      }
      if (!matched) return e;
    }
  }

  std::vector<Tok> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

Monitor ir_parse(std::string_view text) { return Monitor{Parser(text).stmt_top()}; }
StmtPtr parse_stmt(std::string_view text) { return Parser(text).stmt_top(); }
GuardPtr parse_guard(std::string_view text) { return Parser(text).guard_top(); }
ExprPtr parse_expr(std::string_view text) { return Parser(text).expr_top(); }

}  // namespace streamir

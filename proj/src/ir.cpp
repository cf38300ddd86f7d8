#include "streamir/ir.hpp"

namespace streamir {

std::string_view binop_symbol(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Rem: return "%";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
  }
  return "?";
}

std::string_view agg_name(AggKind k) {
  switch (k) {
    case AggKind::Exists: return "exists";
    case AggKind::Forall: return "forall";
    case AggKind::Count: return "count";
    case AggKind::Sum: return "sum";
    case AggKind::Min: return "min";
    case AggKind::Max: return "max";
    case AggKind::Avg: return "avg";
    case AggKind::Last: return "last";
  }
  return "?";
}

std::optional<AggKind> parse_agg(std::string_view s) {
  if (s == "exists" || s == "∃") return AggKind::Exists;
  if (s == "forall" || s == "∀") return AggKind::Forall;
  if (s == "count") return AggKind::Count;
  if (s == "sum") return AggKind::Sum;
  if (s == "min") return AggKind::Min;
  if (s == "max") return AggKind::Max;
  if (s == "avg") return AggKind::Avg;
  if (s == "last") return AggKind::Last;
  return std::nullopt;
}

std::string_view stmt_kind_name(Stmt::Kind k) {
  static const char* names[] = {"skip", "shift", "input", "spawn", "eval", "close",
                                "seq",  "par",   "if",    "iterate", "assign"};
  return names[static_cast<int>(k)];
}

namespace ir {

namespace {
template <class T>
std::shared_ptr<T> node() {
  return std::make_shared<T>();
}
}  // namespace

ExprPtr cnst(Value v) {
  auto e = node<Expr>();
  e->kind = Expr::Kind::Const;
  e->value = std::move(v);
  return e;
}
ExprPtr unit() {
  static const ExprPtr u = cnst(Value(Unit{}));
  return u;
}
ExprPtr self() {
  static const ExprPtr s = [] {
    auto e = node<Expr>();
    e->kind = Expr::Kind::Self;
    return ExprPtr(e);
  }();
  return s;
}
ExprPtr syn(std::string stream, ExprPtr inst) {
  auto e = node<Expr>();
  e->kind = Expr::Kind::Syn;
  e->stream = std::move(stream);
  e->inst = inst ? std::move(inst) : unit();
  return e;
}
ExprPtr get(std::string stream, ExprPtr inst, std::uint32_t offset, ExprPtr dft) {
  auto e = node<Expr>();
  e->kind = Expr::Kind::Get;
  e->stream = std::move(stream);
  e->inst = inst ? std::move(inst) : unit();
  e->offset = offset;
  e->dft = std::move(dft);
  return e;
}
ExprPtr window(std::string stream, ExprPtr inst, Duration dur, Aggregation agg) {
  auto e = node<Expr>();
  e->kind = Expr::Kind::Window;
  e->stream = std::move(stream);
  e->inst = inst ? std::move(inst) : unit();
  e->dur = dur;
  e->agg = std::move(agg);
  return e;
}
ExprPtr bin(BinOp op, ExprPtr l, ExprPtr r) {
  auto e = node<Expr>();
  e->kind = Expr::Kind::Bin;
  e->bop = op;
  e->lhs = std::move(l);
  e->rhs = std::move(r);
  return e;
}
ExprPtr un(UnOp op, ExprPtr a) {
  auto e = node<Expr>();
  e->kind = Expr::Kind::Un;
  e->uop = op;
  e->lhs = std::move(a);
  return e;
}

GuardPtr input_present(std::string stream) {
  auto g = node<Guard>();
  g->kind = Guard::Kind::Input;
  g->stream = std::move(stream);
  return g;
}
GuardPtr schedule(Freq f) {
  auto g = node<Guard>();
  g->kind = Guard::Kind::Schedule;
  g->freq = std::move(f);
  return g;
}
GuardPtr schedule_global(Duration d) { return schedule(Freq{false, d, {}}); }
GuardPtr schedule_local(Duration d, std::string stream) { return schedule(Freq{true, d, std::move(stream)}); }
GuardPtr dynamic(ExprPtr e) {
  auto g = node<Guard>();
  g->kind = Guard::Kind::Dynamic;
  g->expr = std::move(e);
  return g;
}
GuardPtr g_and(GuardPtr a, GuardPtr b) {
  auto g = node<Guard>();
  g->kind = Guard::Kind::And;
  g->lhs = std::move(a);
  g->rhs = std::move(b);
  return g;
}
GuardPtr g_or(GuardPtr a, GuardPtr b) {
  auto g = node<Guard>();
  g->kind = Guard::Kind::Or;
  g->lhs = std::move(a);
  g->rhs = std::move(b);
  return g;
}
GuardPtr g_true() {
  static const GuardPtr t = [] {
    auto g = node<Guard>();
    g->kind = Guard::Kind::True;
    return GuardPtr(g);
  }();
  return t;
}
GuardPtr g_false() {
  static const GuardPtr f = [] {
    auto g = node<Guard>();
    g->kind = Guard::Kind::False;
    return GuardPtr(g);
  }();
  return f;
}

StmtPtr skip() {
  static const StmtPtr s = node<Stmt>();
  return s;
}
namespace {
StmtPtr leaf(Stmt::Kind k, std::string stream, ExprPtr e = nullptr) {
  auto s = node<Stmt>();
  s->kind = k;
  s->stream = std::move(stream);
  s->expr = std::move(e);
  return s;
}
StmtPtr pair(Stmt::Kind k, StmtPtr a, StmtPtr b) {
  auto s = node<Stmt>();
  s->kind = k;
  s->first = std::move(a);
  s->second = std::move(b);
  return s;
}
}  // namespace
StmtPtr shift(std::string stream) { return leaf(Stmt::Kind::Shift, std::move(stream)); }
StmtPtr input(std::string stream) { return leaf(Stmt::Kind::Input, std::move(stream)); }
StmtPtr spawn(std::string stream, ExprPtr inst) {
  return leaf(Stmt::Kind::Spawn, std::move(stream), inst ? std::move(inst) : unit());
}
StmtPtr eval(std::string stream, ExprPtr value) { return leaf(Stmt::Kind::Eval, std::move(stream), std::move(value)); }
StmtPtr close(std::string stream) { return leaf(Stmt::Kind::Close, std::move(stream)); }
StmtPtr seq(StmtPtr a, StmtPtr b) { return pair(Stmt::Kind::Seq, std::move(a), std::move(b)); }
StmtPtr par(StmtPtr a, StmtPtr b) { return pair(Stmt::Kind::Par, std::move(a), std::move(b)); }
StmtPtr if_(GuardPtr g, StmtPtr t, StmtPtr e) {
  auto s = node<Stmt>();
  s->kind = Stmt::Kind::If;
  s->guard = std::move(g);
  s->first = std::move(t);
  s->second = e ? std::move(e) : skip();
  return s;
}
StmtPtr iterate(std::string stream, StmtPtr body) {
  auto s = node<Stmt>();
  s->kind = Stmt::Kind::Iterate;
  s->stream = std::move(stream);
  s->first = std::move(body);
  return s;
}
StmtPtr assign(std::string stream, ExprPtr inst, StmtPtr body) {
  auto s = node<Stmt>();
  s->kind = Stmt::Kind::Assign;
  s->stream = std::move(stream);
  s->expr = inst ? std::move(inst) : unit();
  s->first = std::move(body);
  return s;
}

StmtPtr seq_all(const std::vector<StmtPtr>& xs) {
  if (xs.empty()) return skip();
  StmtPtr acc = xs.back();
  for (auto i = xs.size() - 1; i-- > 0;) acc = seq(xs[i], acc);
  return acc;
}
StmtPtr par_all(const std::vector<StmtPtr>& xs) {
  if (xs.empty()) return skip();
  StmtPtr acc = xs.back();
  for (auto i = xs.size() - 1; i-- > 0;) acc = par(xs[i], acc);
  return acc;
}
GuardPtr and_all(const std::vector<GuardPtr>& xs) {
  if (xs.empty()) return g_true();
  GuardPtr acc = xs.front();
  for (std::size_t i = 1; i < xs.size(); ++i) acc = g_and(acc, xs[i]);
  return acc;
}

}  // namespace ir

bool structural_eq(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return structural_eq(*a, *b);
}
bool structural_eq(const GuardPtr& a, const GuardPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return structural_eq(*a, *b);
}
bool structural_eq(const StmtPtr& a, const StmtPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return structural_eq(*a, *b);
}

bool structural_eq(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::Const: return a.value == b.value;
    case Expr::Kind::Self: return true;
    case Expr::Kind::Syn: return a.stream == b.stream && structural_eq(a.inst, b.inst);
    case Expr::Kind::Get:
      return a.stream == b.stream && a.offset == b.offset && structural_eq(a.inst, b.inst) &&
             structural_eq(a.dft, b.dft);
    case Expr::Kind::Window:
      return a.stream == b.stream && a.dur == b.dur && a.agg.kind == b.agg.kind && a.agg.fallback == b.agg.fallback &&
             structural_eq(a.inst, b.inst);
    case Expr::Kind::Bin: return a.bop == b.bop && structural_eq(a.lhs, b.lhs) && structural_eq(a.rhs, b.rhs);
    case Expr::Kind::Un: return a.uop == b.uop && structural_eq(a.lhs, b.lhs);
  }
  return false;
}

bool structural_eq(const Guard& a, const Guard& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Guard::Kind::Input: return a.stream == b.stream;
    case Guard::Kind::Schedule: return a.freq == b.freq;
    case Guard::Kind::Dynamic: return structural_eq(a.expr, b.expr);
    case Guard::Kind::And:
    case Guard::Kind::Or: return structural_eq(a.lhs, b.lhs) && structural_eq(a.rhs, b.rhs);
    case Guard::Kind::True:
    case Guard::Kind::False: return true;
  }
  return false;
}

bool structural_eq(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Stmt::Kind::Skip: return true;
    case Stmt::Kind::Shift:
    case Stmt::Kind::Input:
    case Stmt::Kind::Close: return a.stream == b.stream;
    case Stmt::Kind::Spawn:
    case Stmt::Kind::Eval: return a.stream == b.stream && structural_eq(a.expr, b.expr);
    case Stmt::Kind::Seq:
    case Stmt::Kind::Par: return structural_eq(a.first, b.first) && structural_eq(a.second, b.second);
    case Stmt::Kind::If:
      return structural_eq(a.guard, b.guard) && structural_eq(a.first, b.first) && structural_eq(a.second, b.second);
    case Stmt::Kind::Iterate: return a.stream == b.stream && structural_eq(a.first, b.first);
    case Stmt::Kind::Assign:
      return a.stream == b.stream && structural_eq(a.expr, b.expr) && structural_eq(a.first, b.first);
  }
  return false;
}

std::size_t node_count(const StmtPtr& s) {
  if (!s) return 0;
  return 1 + node_count(s->first) + node_count(s->second);
}

}  // namespace streamir

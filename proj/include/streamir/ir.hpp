#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "streamir/value.hpp"

namespace streamir {

struct Expr;
struct Guard;
struct Stmt;
using ExprPtr = std::shared_ptr<const Expr>;
using GuardPtr = std::shared_ptr<const Guard>;
using StmtPtr = std::shared_ptr<const Stmt>;

enum class BinOp { Add, Sub, Mul, Div, Rem, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
enum class UnOp { Not, Neg };
enum class AggKind { Exists, Forall, Count, Sum, Min, Max, Avg, Last };

std::string_view binop_symbol(BinOp op);
std::string_view agg_name(AggKind k);
std::optional<AggKind> parse_agg(std::string_view s);

struct Aggregation {
  AggKind kind = AggKind::Exists;
  std::optional<Value> fallback;  // used when the window is empty
};

struct Expr {
  enum class Kind { Const, Self, Syn, Get, Window, Bin, Un };
  Kind kind = Kind::Const;
  Value value;          // Const
  std::string stream;   // Syn, Get, Window
  ExprPtr inst;         // Syn, Get, Window: instance expression (const () for unit)
  std::uint32_t offset = 0;  // Get
  ExprPtr dft;          // Get
  Duration dur;         // Window
  Aggregation agg;      // Window
  BinOp bop = BinOp::Add;
  UnOp uop = UnOp::Not;
  ExprPtr lhs, rhs;     // Bin (lhs only for Un)
};

struct Freq {
  bool local = false;
  Duration period;
  std::string stream;  // local only
  auto operator<=>(const Freq&) const = default;
};

struct Guard {
  enum class Kind { Input, Schedule, Dynamic, And, Or, True, False };
  Kind kind = Kind::True;
  std::string stream;  // Input
  Freq freq;           // Schedule
  ExprPtr expr;        // Dynamic
  GuardPtr lhs, rhs;   // And, Or
};

struct Stmt {
  enum class Kind { Skip, Shift, Input, Spawn, Eval, Close, Seq, Par, If, Iterate, Assign };
  Kind kind = Kind::Skip;
  std::string stream;  // Shift, Input, Spawn, Eval, Close, Iterate, Assign
  ExprPtr expr;        // Spawn (instance), Eval (value), Assign (instance)
  GuardPtr guard;      // If
  StmtPtr first;       // Seq/Par left, If then, Iterate/Assign body
  StmtPtr second;      // Seq/Par right, If else
};

constexpr int kStmtKinds = 11;
std::string_view stmt_kind_name(Stmt::Kind k);

struct Monitor {
  StmtPtr body;
};

namespace ir {

ExprPtr cnst(Value v);
ExprPtr unit();
ExprPtr self();
ExprPtr syn(std::string stream, ExprPtr inst = nullptr);
ExprPtr get(std::string stream, ExprPtr inst, std::uint32_t offset, ExprPtr dft);
ExprPtr window(std::string stream, ExprPtr inst, Duration dur, Aggregation agg);
ExprPtr bin(BinOp op, ExprPtr l, ExprPtr r);
ExprPtr un(UnOp op, ExprPtr e);

GuardPtr input_present(std::string stream);
GuardPtr schedule(Freq f);
GuardPtr schedule_global(Duration d);
GuardPtr schedule_local(Duration d, std::string stream);
GuardPtr dynamic(ExprPtr e);
GuardPtr g_and(GuardPtr a, GuardPtr b);
GuardPtr g_or(GuardPtr a, GuardPtr b);
GuardPtr g_true();
GuardPtr g_false();

StmtPtr skip();
StmtPtr shift(std::string stream);
StmtPtr input(std::string stream);
StmtPtr spawn(std::string stream, ExprPtr inst = nullptr);
StmtPtr eval(std::string stream, ExprPtr value);
StmtPtr close(std::string stream);
StmtPtr seq(StmtPtr a, StmtPtr b);
StmtPtr par(StmtPtr a, StmtPtr b);
StmtPtr if_(GuardPtr g, StmtPtr then_branch, StmtPtr else_branch = nullptr);
StmtPtr iterate(std::string stream, StmtPtr body);
StmtPtr assign(std::string stream, ExprPtr inst, StmtPtr body);

// Right fold; empty list yields skip.
StmtPtr seq_all(const std::vector<StmtPtr>& xs);
StmtPtr par_all(const std::vector<StmtPtr>& xs);
// Left fold; empty list yields true.
GuardPtr and_all(const std::vector<GuardPtr>& xs);

}  // namespace ir

bool structural_eq(const Expr& a, const Expr& b);
bool structural_eq(const Guard& a, const Guard& b);
bool structural_eq(const Stmt& a, const Stmt& b);
bool structural_eq(const ExprPtr& a, const ExprPtr& b);
bool structural_eq(const GuardPtr& a, const GuardPtr& b);
bool structural_eq(const StmtPtr& a, const StmtPtr& b);

std::size_t node_count(const StmtPtr& s);

// Textual format.
std::string ir_print(const Monitor& m);
std::string print_stmt(const StmtPtr& s);
std::string print_guard(const GuardPtr& g);
std::string print_expr(const ExprPtr& e);

struct IrParseError : std::runtime_error {
  IrParseError(int line, int col, const std::string& msg);
  int line, col;
};

Monitor ir_parse(std::string_view text);
StmtPtr parse_stmt(std::string_view text);
GuardPtr parse_guard(std::string_view text);
ExprPtr parse_expr(std::string_view text);

}  // namespace streamir

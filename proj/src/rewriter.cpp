#include "streamir/rewriter.hpp"

#include <algorithm>
#include <cctype>

namespace streamir {

namespace {

using SK = Stmt::Kind;
using GK = Guard::Kind;

constexpr std::array<std::string_view, kRuleCount> kRuleNames = {
    "Common-If",      "Nested-If",     "Split-If",       "Combine-If",    "Implied-If",    "Associativity",
    "Swap-Par",       "Iterate-Inside", "Unique-Assign", "Iterate-Par",   "Iterate-Combine", "If-True",
    "If-False",       "Remove-Skip-1", "Remove-Skip-2",  "Remove-Skip-3", "Unnecessary-Shift"};

std::string squash(std::string_view s) {
  std::string out;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// ---------------------------------------------------------------- guard helpers

bool expr_has_self(const ExprPtr& e) {
  if (!e) return false;
  if (e->kind == Expr::Kind::Self) return true;
  return expr_has_self(e->inst) || expr_has_self(e->dft) || expr_has_self(e->lhs) || expr_has_self(e->rhs);
}

bool has_dynamic(const GuardPtr& g) {
  switch (g->kind) {
    case GK::Dynamic: return true;
    case GK::And:
    case GK::Or: return has_dynamic(g->lhs) || has_dynamic(g->rhs);
    default: return false;
  }
}

// Value depends on the bound instance (self or a local deadline).
bool instance_dependent(const GuardPtr& g) {
  switch (g->kind) {
    case GK::Dynamic: return expr_has_self(g->expr);
    case GK::Schedule: return g->freq.local;
    case GK::And:
    case GK::Or: return instance_dependent(g->lhs) || instance_dependent(g->rhs);
    default: return false;
  }
}

void flatten_conj(const GuardPtr& g, std::vector<GuardPtr>& out) {
  if (g->kind == GK::And) {
    flatten_conj(g->lhs, out);
    flatten_conj(g->rhs, out);
  } else if (g->kind == GK::Dynamic && g->expr->kind == Expr::Kind::Bin && g->expr->bop == BinOp::And) {
    flatten_conj(ir::dynamic(g->expr->lhs), out);
    flatten_conj(ir::dynamic(g->expr->rhs), out);
  } else if (g->kind != GK::True) {
    out.push_back(g);
  }
}

std::vector<GuardPtr> conjuncts(const GuardPtr& g) {
  std::vector<GuardPtr> out;
  flatten_conj(g, out);
  return out;
}

void flatten_disj(const GuardPtr& g, std::vector<GuardPtr>& out) {
  if (g->kind == GK::Or) {
    flatten_disj(g->lhs, out);
    flatten_disj(g->rhs, out);
  } else if (g->kind == GK::Dynamic && g->expr->kind == Expr::Kind::Bin && g->expr->bop == BinOp::Or) {
    flatten_disj(ir::dynamic(g->expr->lhs), out);
    flatten_disj(ir::dynamic(g->expr->rhs), out);
  } else {
    out.push_back(g);
  }
}

// Canonical text modulo associativity, commutativity and idempotence of and/or.
std::string canon(const GuardPtr& g) {
  std::vector<GuardPtr> parts;
  std::string tag;
  auto cs = conjuncts(g);
  if (cs.size() > 1) {
    parts = cs;
    tag = "and";
  } else {
    std::vector<GuardPtr> ds;
    flatten_disj(g, ds);
    if (ds.size() > 1) {
      parts = ds;
      tag = "or";
    }
  }
  if (parts.empty()) {
    if (cs.empty()) return "true";
    return print_guard(cs.size() == 1 ? cs[0] : g);
  }
  std::set<std::string> keys;
  for (auto& p : parts) keys.insert(canon(p));
  if (keys.size() == 1) return *keys.begin();
  std::string out = tag + "{";
  for (auto& k : keys) out += k + ";";
  return out + "}";
}

GuardPtr conj_of(const std::vector<GuardPtr>& xs) { return ir::and_all(xs); }

StmtPtr guarded(const std::vector<GuardPtr>& cs, const StmtPtr& body) {
  if (cs.empty()) return body;
  return ir::if_(conj_of(cs), body);
}

bool is_skip(const StmtPtr& s) { return s->kind == SK::Skip; }
bool plain_if(const StmtPtr& s) { return s->kind == SK::If && is_skip(s->second); }

// ---------------------------------------------------------------- access analysis

void merge(AccessMap& into, const std::string& s, bool other) {
  auto& a = into[s];
  a.any = true;
  a.other_instance = a.other_instance || other;
}

void expr_reads(const ExprPtr& e, AccessMap& out, bool nested) {
  if (!e) return;
  switch (e->kind) {
    case Expr::Kind::Syn:
    case Expr::Kind::Get:
    case Expr::Kind::Window:
      merge(out, e->stream, nested || e->inst->kind != Expr::Kind::Self);
      break;
    default: break;
  }
  expr_reads(e->inst, out, nested);
  expr_reads(e->dft, out, nested);
  expr_reads(e->lhs, out, nested);
  expr_reads(e->rhs, out, nested);
}

void guard_reads(const GuardPtr& g, AccessMap& out, bool nested) {
  switch (g->kind) {
    case GK::Dynamic: expr_reads(g->expr, out, nested); break;
    case GK::And:
    case GK::Or:
      guard_reads(g->lhs, out, nested);
      guard_reads(g->rhs, out, nested);
      break;
    default: break;
  }
}

void stmt_reads(const StmtPtr& s, AccessMap& out, bool nested) {
  switch (s->kind) {
    case SK::Spawn:
    case SK::Eval: expr_reads(s->expr, out, nested); break;
    case SK::Seq:
    case SK::Par:
      stmt_reads(s->first, out, nested);
      stmt_reads(s->second, out, nested);
      break;
    case SK::If:
      guard_reads(s->guard, out, nested);
      stmt_reads(s->first, out, nested);
      stmt_reads(s->second, out, nested);
      break;
    case SK::Iterate: stmt_reads(s->first, out, true); break;
    case SK::Assign:
      expr_reads(s->expr, out, nested);
      stmt_reads(s->first, out, true);
      break;
    default: break;
  }
}

void stmt_writes(const StmtPtr& s, AccessMap& out, bool nested) {
  switch (s->kind) {
    case SK::Shift:
    case SK::Eval:
    case SK::Close: merge(out, s->stream, nested); break;
    case SK::Input:
    case SK::Spawn: merge(out, s->stream, true); break;
    case SK::Seq:
    case SK::Par:
    case SK::If:
      stmt_writes(s->first, out, nested);
      stmt_writes(s->second, out, nested);
      break;
    case SK::Iterate:
    case SK::Assign: stmt_writes(s->first, out, true); break;
    default: break;
  }
}

void lifecycle(const StmtPtr& s, std::set<std::string>& out) {
  if (!s) return;
  if (s->kind == SK::Spawn || s->kind == SK::Close) out.insert(s->stream);
  lifecycle(s->first, out);
  lifecycle(s->second, out);
}

bool disjoint(const AccessMap& a, const AccessMap& b) {
  for (auto& [s, x] : a)
    if (b.count(s)) return false;
  return true;
}

// Interleaving two per-instance bodies is invisible when neither observes the other's
// writes on a different instance.
bool interleave_ok(const StmtPtr& a, const StmtPtr& b) {
  auto wa = writes_of(a), wb = writes_of(b), ra = reads_of(a), rb = reads_of(b);
  auto one_way = [](const AccessMap& w, const AccessMap& r, const AccessMap& w2) {
    for (auto& [s, acc] : w) {
      auto rit = r.find(s);
      if (acc.other_instance && (rit != r.end() || w2.count(s))) return false;
      if (rit != r.end() && rit->second.other_instance) return false;
    }
    return true;
  };
  return one_way(wa, rb, wb) && one_way(wb, ra, wa);
}

// ---------------------------------------------------------------- rules

struct Pair {
  StmtPtr prefix;  // may be null
  StmtPtr a, b;
};

std::optional<Pair> pair_of(const StmtPtr& n) {
  if (n->kind != SK::Seq && n->kind != SK::Par) return std::nullopt;
  const StmtPtr& l = n->first;
  if (l->kind == n->kind) return Pair{l->first, l->second, n->second};
  return Pair{nullptr, l, n->second};
}

StmtPtr compose(SK k, const StmtPtr& a, const StmtPtr& b) { return k == SK::Seq ? ir::seq(a, b) : ir::par(a, b); }

StmtPtr rebuild(const StmtPtr& n, const Pair& p, const StmtPtr& merged) {
  return p.prefix ? compose(n->kind, p.prefix, merged) : merged;
}

bool parameterized(const RewriteContext& ctx, const std::string& s) {
  if (!ctx.spec) return false;
  const OutputDecl* o = ctx.spec->spec.output(s);
  return o && o->parameterized;
}

bool same_family(const RewriteContext& ctx, const std::string& a, const std::string& b) {
  if (a == b) return true;
  if (!ctx.spec) return false;
  const OutputDecl* x = ctx.spec->spec.output(a);
  const OutputDecl* y = ctx.spec->spec.output(b);
  if (!x || !y) return false;
  if (!x->parameterized && !y->parameterized) return true;
  if (x->parameterized != y->parameterized || x->param_type != y->param_type) return false;
  if (!(x->spawn == y->spawn) || !(x->close == y->close)) return false;
  auto layer = [&](Task::Kind k, const std::string& s) { return ctx.spec->layer_of(Task{k, s}); };
  if (layer(Task::Kind::Spawn, a) != layer(Task::Kind::Spawn, b)) return false;
  if (x->close && layer(Task::Kind::Close, a) != layer(Task::Kind::Close, b)) return false;
  return true;
}

// Replaces the first inner `if c2` implied by c1 inside `body`.
std::optional<StmtPtr> replace_implied(const StmtPtr& s, const GuardPtr& c1, const AccessMap& body_writes,
                                       bool crossed) {
  switch (s->kind) {
    case SK::If: {
      const GuardPtr& c2 = s->guard;
      if (implies(c1, c2) && disjoint(reads_of(c2), body_writes) &&
          !(crossed && instance_dependent(c2)))
        return s->first;
      if (auto t = replace_implied(s->first, c1, body_writes, crossed)) return ir::if_(s->guard, *t, s->second);
      if (auto e = replace_implied(s->second, c1, body_writes, crossed)) return ir::if_(s->guard, s->first, *e);
      return std::nullopt;
    }
    case SK::Seq:
    case SK::Par:
      if (auto l = replace_implied(s->first, c1, body_writes, crossed)) return compose(s->kind, *l, s->second);
      if (auto r = replace_implied(s->second, c1, body_writes, crossed)) return compose(s->kind, s->first, *r);
      return std::nullopt;
    case SK::Iterate:
      if (auto b = replace_implied(s->first, c1, body_writes, true)) return ir::iterate(s->stream, *b);
      return std::nullopt;
    case SK::Assign:
      if (auto b = replace_implied(s->first, c1, body_writes, true)) return ir::assign(s->stream, s->expr, *b);
      return std::nullopt;
    default: return std::nullopt;
  }
}

const Expr* unique_key(const GuardPtr& g) {
  if (g->kind != GK::Dynamic) return nullptr;
  const Expr& e = *g->expr;
  if (e.kind != Expr::Kind::Bin || e.bop != BinOp::Eq) return nullptr;
  if (e.lhs->kind == Expr::Kind::Self && !expr_has_self(e.rhs)) return e.rhs.get();
  if (e.rhs->kind == Expr::Kind::Self && !expr_has_self(e.lhs)) return e.lhs.get();
  return nullptr;
}

// Inputs whose presence is established by a guard that holds.
void present_inputs(const GuardPtr& g, std::set<std::string>& out) {
  if (g->kind == GK::Input) out.insert(g->stream);
  if (g->kind == GK::And) {
    present_inputs(g->lhs, out);
    present_inputs(g->rhs, out);
  }
}

// Every spawn of `family` happens on an event carrying input `x`, so x has a value while instances exist.
bool spawned_with(const RewriteContext& ctx, const std::string& family, const std::string& x) {
  const OutputDecl* o = ctx.spec ? ctx.spec->spec.output(family) : nullptr;
  if (!o || !o->spawn || !o->spawn->pacing || o->spawn->pacing->kind != Pacing::Kind::Event) return false;
  // Positive formulas are monotone: P implies x iff P fails with every other atom present.
  std::set<std::string> others;
  o->spawn->pacing->event.atoms(others);
  others.erase(x);
  return !o->spawn->pacing->event.eval(others);
}

// Evaluating `e` cannot fault while `family` has instances and the inputs in `present` arrived. Conservative.
bool total(const ExprPtr& e, const RewriteContext& ctx, const std::set<std::string>& present,
           const std::string& family) {
  if (!e) return true;
  switch (e->kind) {
    case Expr::Kind::Self: return false;
    case Expr::Kind::Syn:
      if (!ctx.spec || !ctx.spec->spec.is_input(e->stream)) return false;
      if (!present.count(e->stream) && !spawned_with(ctx, family, e->stream)) return false;
      break;
    case Expr::Kind::Get:
    case Expr::Kind::Window:
      if (parameterized(ctx, e->stream)) return false;
      break;
    case Expr::Kind::Bin:
      if (e->bop == BinOp::Div || e->bop == BinOp::Rem) {
        const Expr& d = *e->rhs;
        if (d.kind != Expr::Kind::Const) return false;
        if (d.value.type() == Type::Int64 && d.value.as_int() == 0) return false;
      }
      break;
    default: break;
  }
  return total(e->inst, ctx, present, family) && total(e->dft, ctx, present, family) &&
         total(e->lhs, ctx, present, family) && total(e->rhs, ctx, present, family);
}

std::optional<StmtPtr> try_rule(Rule r, const StmtPtr& n, const RewriteContext& ctx,
                                const std::set<std::string>& present) {
  switch (r) {
    case Rule::IfTrue:
      if (n->kind == SK::If && n->guard->kind == GK::True) return n->first;
      return std::nullopt;
    case Rule::IfFalse:
      if (n->kind == SK::If && n->guard->kind == GK::False) return n->second;
      return std::nullopt;
    case Rule::RemoveSkip1:
      if (n->kind != SK::Seq && n->kind != SK::Par) return std::nullopt;
      if (is_skip(n->second)) return n->first;
      if (is_skip(n->first)) return n->second;
      return std::nullopt;
    case Rule::RemoveSkip2:
      if (n->kind == SK::If && is_skip(n->first) && is_skip(n->second)) return ir::skip();
      return std::nullopt;
    case Rule::RemoveSkip3:
      if (n->kind == SK::Iterate && is_skip(n->first)) return ir::skip();
      return std::nullopt;
    case Rule::UnnecessaryShift:
      if (n->kind == SK::Shift && ctx.single_cell.count(n->stream)) return ir::skip();
      return std::nullopt;
    case Rule::Associativity:
      if ((n->kind == SK::Seq || n->kind == SK::Par) && n->second->kind == n->kind)
        return compose(n->kind, compose(n->kind, n->first, n->second->first), n->second->second);
      return std::nullopt;
    case Rule::SwapPar:
      if (n->kind == SK::Par) return ir::par(n->second, n->first);
      return std::nullopt;
    case Rule::SplitIf:
      if (plain_if(n) && n->guard->kind == GK::And)
        return ir::if_(n->guard->lhs, ir::if_(n->guard->rhs, n->first));
      return std::nullopt;
    case Rule::CombineIf:
      if (plain_if(n) && plain_if(n->first)) return ir::if_(ir::g_and(n->guard, n->first->guard), n->first->first);
      return std::nullopt;
    case Rule::ImpliedIf: {
      if (n->kind != SK::If) return std::nullopt;
      auto t = replace_implied(n->first, n->guard, writes_of(n->first), false);
      if (!t) return std::nullopt;
      return ir::if_(n->guard, *t, n->second);
    }
    case Rule::NestedIf: {
      auto p = pair_of(n);
      if (!p || !plain_if(p->a) || !plain_if(p->b)) return std::nullopt;
      if (canon(p->a->guard) != canon(p->b->guard)) return std::nullopt;
      auto rc = reads_of(p->a->guard);
      if (!disjoint(writes_of(p->a->first), rc)) return std::nullopt;
      if (n->kind == SK::Par && !disjoint(writes_of(p->b->first), rc)) return std::nullopt;
      return rebuild(n, *p, ir::if_(p->a->guard, compose(n->kind, p->a->first, p->b->first)));
    }
    case Rule::CommonIf: {
      auto p = pair_of(n);
      if (n->kind != SK::Seq || !p || !plain_if(p->a) || !plain_if(p->b)) return std::nullopt;
      auto ca = conjuncts(p->a->guard), cb = conjuncts(p->b->guard);
      std::size_t k = 0;
      while (k < ca.size() && k < cb.size() && canon(ca[k]) == canon(cb[k])) ++k;
      if (k == 0 || (k == ca.size() && k == cb.size())) return std::nullopt;
      std::vector<GuardPtr> common(ca.begin(), ca.begin() + static_cast<long>(k));
      AccessMap rc;
      for (auto& g : common) guard_reads(g, rc, false);
      if (!disjoint(writes_of(p->a->first), rc)) return std::nullopt;
      std::vector<GuardPtr> ra(ca.begin() + static_cast<long>(k), ca.end());
      std::vector<GuardPtr> rb(cb.begin() + static_cast<long>(k), cb.end());
      return rebuild(n, *p, ir::if_(conj_of(common), ir::seq(guarded(ra, p->a->first), guarded(rb, p->b->first))));
    }
    case Rule::IterateInside: {
      if (n->kind != SK::Iterate || !plain_if(n->first)) return std::nullopt;
      std::vector<GuardPtr> outer, inner;
      for (auto& c : conjuncts(n->first->guard))
        (has_dynamic(c) || instance_dependent(c) ? inner : outer).push_back(c);
      if (outer.empty()) return std::nullopt;
      return ir::if_(conj_of(outer), ir::iterate(n->stream, guarded(inner, n->first->first)));
    }
    case Rule::UniqueAssign: {
      // The single instance of a non-parameterized stream is determined by any guard.
      if (n->kind == SK::Iterate && ctx.spec && ctx.spec->spec.output(n->stream) && !parameterized(ctx, n->stream))
        return ir::assign(n->stream, ir::unit(), n->first);
      if (n->kind != SK::Iterate || !plain_if(n->first) || !parameterized(ctx, n->stream)) return std::nullopt;
      auto cs = conjuncts(n->first->guard);
      std::size_t j = 0;
      while (j < cs.size() && !has_dynamic(cs[j])) ++j;
      if (j == cs.size()) return std::nullopt;
      const Expr* key = unique_key(cs[j]);
      if (!key) return std::nullopt;
      ExprPtr e = cs[j]->expr->lhs.get() == key ? cs[j]->expr->lhs : cs[j]->expr->rhs;
      // The key is now evaluated once, even when no instance exists or an earlier conjunct fails.
      if (!total(e, ctx, present, n->stream)) return std::nullopt;
      const StmtPtr& body = n->first->first;
      AccessMap re;
      expr_reads(e, re, false);
      if (!disjoint(re, writes_of(body))) return std::nullopt;
      std::vector<GuardPtr> rest;
      for (std::size_t i = 0; i < cs.size(); ++i)
        if (i != j) rest.push_back(cs[i]);
      if (ctx.broken_unique_assign) return ir::iterate(n->stream, guarded(rest, body));
      return ir::assign(n->stream, e, guarded(rest, body));
    }
    case Rule::IteratePar:
    case Rule::IterateCombine: {
      auto p = pair_of(n);
      SK want = r == Rule::IteratePar ? SK::Par : SK::Seq;
      if (n->kind != want || !p || p->a->kind != SK::Iterate || p->b->kind != SK::Iterate) return std::nullopt;
      const std::string &o1 = p->a->stream, &o2 = p->b->stream;
      if (r == Rule::IteratePar ? o1 != o2 : !same_family(ctx, o1, o2)) return std::nullopt;
      const StmtPtr &A = p->a->first, &B = p->b->first;
      std::set<std::string> la, lb;
      lifecycle(A, la);
      lifecycle(B, lb);
      if (la.count(o2) || la.count(o1)) return std::nullopt;
      if (r == Rule::IteratePar && (lb.count(o1) || lb.count(o2))) return std::nullopt;
      bool multi = parameterized(ctx, o1) || (!ctx.spec);
      if (multi && !interleave_ok(A, B)) return std::nullopt;
      return rebuild(n, *p, ir::iterate(o1, compose(want, A, B)));
    }
  }
  return std::nullopt;
}

// Inputs known present below the then-branch of `n`.
const std::set<std::string>& below(const StmtPtr& n, const std::set<std::string>& present,
                                   std::set<std::string>& scratch) {
  if (n->kind != SK::If) return present;
  scratch = present;
  present_inputs(n->guard, scratch);
  return scratch;
}

// Preorder search; `skip` counts matches to pass over before rewriting.
StmtPtr rewrite_nth(Rule r, const StmtPtr& n, const RewriteContext& ctx, std::size_t& skip,
                    const std::set<std::string>& present = {}) {
  if (auto out = try_rule(r, n, ctx, present)) {
    if (skip == 0) return *out;
    --skip;
  }
  std::set<std::string> scratch;
  if (n->first) {
    if (auto f = rewrite_nth(r, n->first, ctx, skip, below(n, present, scratch))) {
      auto copy = std::make_shared<Stmt>(*n);
      copy->first = f;
      return copy;
    }
  }
  if (n->second) {
    if (auto s = rewrite_nth(r, n->second, ctx, skip, present)) {
      auto copy = std::make_shared<Stmt>(*n);
      copy->second = s;
      return copy;
    }
  }
  return nullptr;
}

void count_all(Rule r, const StmtPtr& n, const RewriteContext& ctx, std::size_t& c,
               const std::set<std::string>& present = {}) {
  if (try_rule(r, n, ctx, present)) ++c;
  std::set<std::string> scratch;
  if (n->first) count_all(r, n->first, ctx, c, below(n, present, scratch));
  if (n->second) count_all(r, n->second, ctx, c, present);
}

// First redex of any rule in `rules` (rules tried in order at each node).
StmtPtr rewrite_any(const std::vector<Rule>& rules, const StmtPtr& n, const RewriteContext& ctx, Rule& which,
                    const std::set<std::string>& present = {}) {
  for (Rule r : rules)
    if (auto out = try_rule(r, n, ctx, present)) {
      which = r;
      return *out;
    }
  std::set<std::string> scratch;
  if (n->first)
    if (auto f = rewrite_any(rules, n->first, ctx, which, below(n, present, scratch))) {
      auto copy = std::make_shared<Stmt>(*n);
      copy->first = f;
      return copy;
    }
  if (n->second)
    if (auto s = rewrite_any(rules, n->second, ctx, which, present)) {
      auto copy = std::make_shared<Stmt>(*n);
      copy->second = s;
      return copy;
    }
  return nullptr;
}

// ---------------------------------------------------------------- partial evaluation

GuardPtr pe_guard(const GuardPtr& g, const StaticFacts& f) {
  switch (g->kind) {
    case GK::Input: {
      auto it = f.inputs.find(g->stream);
      std::optional<bool> v = it != f.inputs.end() ? std::optional<bool>(it->second) : f.all_inputs;
      if (!v) return g;
      return *v ? ir::g_true() : ir::g_false();
    }
    case GK::Schedule: {
      auto it = f.schedules.find(g->freq);
      std::optional<bool> v = it != f.schedules.end() ? std::optional<bool>(it->second) : f.all_schedules;
      if (!v) return g;
      return *v ? ir::g_true() : ir::g_false();
    }
    case GK::And: {
      auto a = pe_guard(g->lhs, f), b = pe_guard(g->rhs, f);
      if (a->kind == GK::False) return a;
      if (a->kind == GK::True) return b;
      if (b->kind == GK::True) return a;
      if (b->kind == GK::False && !has_dynamic(a)) return b;
      if (a == g->lhs && b == g->rhs) return g;
      return ir::g_and(a, b);
    }
    case GK::Or: {
      auto a = pe_guard(g->lhs, f), b = pe_guard(g->rhs, f);
      if (a->kind == GK::True) return a;
      if (a->kind == GK::False) return b;
      if (b->kind == GK::False) return a;
      if (b->kind == GK::True && !has_dynamic(a)) return b;
      if (a == g->lhs && b == g->rhs) return g;
      return ir::g_or(a, b);
    }
    default: return g;
  }
}

StmtPtr pe_stmt(const StmtPtr& s, const StaticFacts& f) {
  switch (s->kind) {
    case SK::If: {
      auto copy = std::make_shared<Stmt>(*s);
      copy->guard = pe_guard(s->guard, f);
      copy->first = pe_stmt(s->first, f);
      copy->second = pe_stmt(s->second, f);
      return copy;
    }
    case SK::Seq:
    case SK::Par:
    case SK::Iterate:
    case SK::Assign: {
      auto copy = std::make_shared<Stmt>(*s);
      if (s->first) copy->first = pe_stmt(s->first, f);
      if (s->second) copy->second = pe_stmt(s->second, f);
      return copy;
    }
    default: return s;
  }
}

}  // namespace

std::string_view rule_name(Rule r) { return kRuleNames[static_cast<std::size_t>(r)]; }

std::optional<Rule> parse_rule(std::string_view s) {
  std::string k = squash(s);
  for (Rule r : kAllRules)
    if (squash(rule_name(r)) == k) return r;
  if (k == "unecessaryshift") return Rule::UnnecessaryShift;
  return std::nullopt;
}

RewriteConfig default_rewrite_config(bool statements, bool memory) {
  RewriteConfig c;
  if (statements || memory)
    c.enabled = {Rule::IfTrue, Rule::IfFalse, Rule::RemoveSkip1, Rule::RemoveSkip2, Rule::RemoveSkip3};
  if (statements)
    for (Rule r : {Rule::Associativity, Rule::CommonIf, Rule::NestedIf, Rule::CombineIf, Rule::ImpliedIf,
                   Rule::IteratePar, Rule::IterateCombine, Rule::IterateInside, Rule::UniqueAssign})
      c.enabled.insert(r);
  if (memory) c.enabled.insert(Rule::UnnecessaryShift);
  return c;
}

bool implies(const GuardPtr& c1, const GuardPtr& c2) {
  if (c2->kind == GK::True || c1->kind == GK::False) return true;
  if (canon(c1) == canon(c2)) return true;
  if (c1->kind == GK::Or) return implies(c1->lhs, c2) && implies(c1->rhs, c2);
  if (c2->kind == GK::Or && (implies(c1, c2->lhs) || implies(c1, c2->rhs))) return true;
  std::set<std::string> have;
  for (auto& g : conjuncts(c1)) have.insert(canon(g));
  for (auto& g : conjuncts(c2))
    if (!have.count(canon(g))) return false;
  return true;
}

AccessMap reads_of(const ExprPtr& e) {
  AccessMap m;
  expr_reads(e, m, false);
  return m;
}
AccessMap reads_of(const GuardPtr& g) {
  AccessMap m;
  guard_reads(g, m, false);
  return m;
}
AccessMap reads_of(const StmtPtr& s) {
  AccessMap m;
  stmt_reads(s, m, false);
  return m;
}
AccessMap writes_of(const StmtPtr& s) {
  AccessMap m;
  stmt_writes(s, m, false);
  return m;
}

StmtPtr apply_rule(Rule r, const StmtPtr& s, const RewriteContext& ctx) {
  std::size_t skip = 0;
  return rewrite_nth(r, s, ctx, skip);
}

std::size_t count_redexes(Rule r, const StmtPtr& s, const RewriteContext& ctx) {
  std::size_t c = 0;
  count_all(r, s, ctx, c);
  return c;
}

StmtPtr apply_rule_at(Rule r, const StmtPtr& s, const RewriteContext& ctx, std::size_t index) {
  return rewrite_nth(r, s, ctx, index);
}

RewriteResult rewrite_fixpoint(const StmtPtr& s, const RewriteConfig& cfg, const RewriteContext& ctx,
                               const PassObserver& observe) {
  static const std::vector<std::vector<Rule>> kPhases = {
      {Rule::IfTrue, Rule::IfFalse, Rule::RemoveSkip1, Rule::RemoveSkip2, Rule::RemoveSkip3, Rule::UnnecessaryShift,
       Rule::Associativity},
      {Rule::NestedIf, Rule::CommonIf, Rule::CombineIf, Rule::ImpliedIf, Rule::IteratePar, Rule::IterateCombine,
       Rule::SplitIf},
      {Rule::IterateInside, Rule::UniqueAssign, Rule::SwapPar}};
  // Rules that invert themselves or each other fire at most once per pass.
  auto once = [](Rule r) { return r == Rule::SwapPar || r == Rule::SplitIf; };
  RewriteResult res;
  res.body = s;
  for (int pass = 1; pass <= cfg.max_passes; ++pass) {
    StmtPtr before = res.body;
    for (auto& phase : kPhases) {
      std::vector<Rule> steady, single;
      for (Rule r : phase)
        if (cfg.enabled.count(r)) (once(r) ? single : steady).push_back(r);
      std::size_t budget = 8 * node_count(res.body) + 64;
      while (budget-- > 0) {
        Rule which{};
        StmtPtr next = rewrite_any(steady, res.body, ctx, which);
        if (!next) break;
        res.body = next;
        ++res.fired[which];
      }
      for (Rule r : single)
        if (auto next = apply_rule(r, res.body, ctx)) {
          res.body = next;
          ++res.fired[r];
        }
    }
    res.passes = pass;
    if (observe) observe(pass, res.body);
    if (structural_eq(before, res.body)) return res;
  }
  res.hit_max_passes = true;
  return res;
}

StmtPtr partial_evaluate(const StmtPtr& s, const StaticFacts& facts) {
  StmtPtr out = pe_stmt(s, facts);
  RewriteConfig cfg;
  cfg.enabled = {Rule::IfTrue, Rule::IfFalse, Rule::RemoveSkip1, Rule::RemoveSkip2, Rule::RemoveSkip3};
  return rewrite_fixpoint(out, cfg, RewriteContext{}).body;
}

SplitProgram split_event_time(const StmtPtr& s) {
  StaticFacts ev, tm;
  ev.all_schedules = false;
  tm.all_inputs = false;
  return SplitProgram{partial_evaluate(s, ev), partial_evaluate(s, tm)};
}

MemoryLayout optimize_memory(const AnalyzedSpec& a, const StmtPtr* program) {
  (void)program;
  MemoryLayout out;
  auto pick = [&](const std::string& s, StreamLayout& l) {
    MemoryBound b;
    if (auto it = a.bounds.find(s); it != a.bounds.end()) b = it->second;
    if (b.window) {
      l.values = StreamLayout::Values::TimedDeque;
      l.k = std::max<std::size_t>(b.length, 1);
      l.horizon = b.max_window;
    } else if (b.length <= 1) {
      l.values = StreamLayout::Values::SingleCell;
    } else {
      l.values = StreamLayout::Values::Ring;
      l.k = b.length;
    }
  };
  for (auto& i : a.spec.inputs) pick(i.name, out[i.name]);
  for (auto& o : a.spec.outputs) {
    auto& l = out[o.name];
    pick(o.name, l);
    if (!o.parameterized)
      l.instances = StreamLayout::Instances::NotParameterized;
    else if (o.spawn && o.spawn->with && o.spawn->with->kind == Expr::Kind::Const)
      l.instances = StreamLayout::Instances::ParameterErased;  // at most one instance can ever exist
    else
      l.instances = StreamLayout::Instances::InstanceMap;
  }
  return out;
}

RewriteContext rewrite_context(const AnalyzedSpec& a, const MemoryLayout* layout) {
  RewriteContext c;
  c.spec = &a;
  if (layout)
    for (auto& [s, l] : *layout)
      if (l.values == StreamLayout::Values::SingleCell) c.single_cell.insert(s);
  return c;
}

}  // namespace streamir

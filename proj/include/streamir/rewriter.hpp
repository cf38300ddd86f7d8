#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "streamir/ir.hpp"
#include "streamir/memory.hpp"
#include "streamir/spec.hpp"

namespace streamir {

enum class Rule {
  CommonIf,
  NestedIf,
  SplitIf,
  CombineIf,
  ImpliedIf,
  Associativity,
  SwapPar,
  IterateInside,
  UniqueAssign,
  IteratePar,
  IterateCombine,
  IfTrue,
  IfFalse,
  RemoveSkip1,
  RemoveSkip2,
  RemoveSkip3,
  UnnecessaryShift,
};
constexpr int kRuleCount = 17;
constexpr std::array<Rule, kRuleCount> kAllRules = {
    Rule::CommonIf,      Rule::NestedIf,     Rule::SplitIf,    Rule::CombineIf,      Rule::ImpliedIf,
    Rule::Associativity, Rule::SwapPar,      Rule::IterateInside, Rule::UniqueAssign, Rule::IteratePar,
    Rule::IterateCombine, Rule::IfTrue,      Rule::IfFalse,    Rule::RemoveSkip1,    Rule::RemoveSkip2,
    Rule::RemoveSkip3,   Rule::UnnecessaryShift};

std::string_view rule_name(Rule r);
// Accepts "Common-If", "common-if", "common_if", "CommonIf".
std::optional<Rule> parse_rule(std::string_view s);

struct RewriteContext {
  const AnalyzedSpec* spec = nullptr;
  // Streams stored in a single cell; Unnecessary-Shift applies to these only.
  std::set<std::string> single_cell;
  // Harness mutation: Unique-Assign drops the equality conjunct but keeps the iterate.
  bool broken_unique_assign = false;
};

struct RewriteConfig {
  std::set<Rule> enabled;
  int max_passes = 32;
};

RewriteConfig default_rewrite_config(bool statements = true, bool memory = true);

// Sound, incomplete implication between guards.
bool implies(const GuardPtr& c1, const GuardPtr& c2);

// Rewrites the first redex in preorder (leftmost-outermost); nullptr when none.
StmtPtr apply_rule(Rule r, const StmtPtr& s, const RewriteContext& ctx);
// Number of redexes for `r` in preorder, and rewriting of the i-th one.
std::size_t count_redexes(Rule r, const StmtPtr& s, const RewriteContext& ctx);
StmtPtr apply_rule_at(Rule r, const StmtPtr& s, const RewriteContext& ctx, std::size_t index);

struct RewriteResult {
  StmtPtr body;
  int passes = 0;
  bool hit_max_passes = false;
  std::map<Rule, int> fired;
};

using PassObserver = std::function<void(int pass, const StmtPtr& body)>;
RewriteResult rewrite_fixpoint(const StmtPtr& s, const RewriteConfig& cfg, const RewriteContext& ctx,
                               const PassObserver& observe = {});

struct StaticFacts {
  std::map<std::string, bool> inputs;
  std::optional<bool> all_inputs;  // applies to inputs not listed
  std::map<Freq, bool> schedules;
  std::optional<bool> all_schedules;
};

StmtPtr partial_evaluate(const StmtPtr& s, const StaticFacts& facts);

struct SplitProgram {
  StmtPtr event;
  StmtPtr timed;
};
SplitProgram split_event_time(const StmtPtr& s);

MemoryLayout optimize_memory(const AnalyzedSpec& a, const StmtPtr* program = nullptr);
RewriteContext rewrite_context(const AnalyzedSpec& a, const MemoryLayout* layout);

// Static access summaries used by side conditions.
struct Access {
  bool any = false;
  bool other_instance = false;  // some access does not target `self`
};
using AccessMap = std::map<std::string, Access>;
AccessMap reads_of(const ExprPtr& e);
AccessMap reads_of(const GuardPtr& g);
AccessMap reads_of(const StmtPtr& s);
// Streams written (shift, input, eval) or whose liveness changes (spawn, close).
AccessMap writes_of(const StmtPtr& s);

}  // namespace streamir

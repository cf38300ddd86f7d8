#include <gtest/gtest.h>

#include "streamir/pipeline.hpp"
#include "streamir/rewriter.hpp"
#include "support.hpp"

using namespace streamir;
using namespace testing_support;

namespace {

// p and q are parameterized by Int64, o is a plain output.
const char* kSpec =
    "input a : Int64\n"
    "input b : Int64\n"
    "output o : Int64\n  eval @a with a\n"
    "output p(id: Int64) : Int64\n  spawn @a with a\n  eval @a when id == a with id\n  close @b when b == id\n"
    "output q(id: Int64) : Int64\n  spawn @a with a\n  eval @a when id == a with id\n  close @b when b == id\n";

struct Fixture {
  AnalyzedSpec a = analyze(kSpec);
  RewriteContext ctx = rewrite_context(a, nullptr);

  // Applies `r` once and compares with the expected text.
  void expect(Rule r, const std::string& before, const std::string& after) const {
    StmtPtr got = apply_rule(r, parse_stmt(before), ctx);
    ASSERT_TRUE(got) << rule_name(r) << " did not fire on\n" << before;
    EXPECT_TRUE(structural_eq(got, parse_stmt(after))) << rule_name(r) << "\ngot:\n" << print_stmt(got);
  }
  void rejects(Rule r, const std::string& s) const {
    StmtPtr got = apply_rule(r, parse_stmt(s), ctx);
    EXPECT_FALSE(got) << rule_name(r) << " fired:\n" << print_stmt(got);
  }
};

}  // namespace

TEST(RewriteRules, rule_names_round_trip) {
  for (Rule r : kAllRules) EXPECT_EQ(parse_rule(rule_name(r)), r);
  EXPECT_EQ(parse_rule("common_if"), Rule::CommonIf);
  EXPECT_FALSE(parse_rule("no-such-rule"));
}

TEST(RewriteRules, common_if_factors_shared_prefix) {
  Fixture f;
  f.expect(Rule::CommonIf, "if input? a and input? b then shift o ; if input? a then input a",
           "if input? a then { if input? b then shift o ; input a }");
  // Identical guards are Nested-If's business.
  f.rejects(Rule::CommonIf, "if input? a then shift o ; if input? a then input a");
}

TEST(RewriteRules, common_if_blocked_when_first_body_writes_guard) {
  Fixture f;
  f.rejects(Rule::CommonIf,
            "if dynamic (syn o == const 1) and input? a then eval o syn a ; if dynamic (syn o == const 1) then skip");
}

TEST(RewriteRules, nested_if_merges_equal_guards) {
  Fixture f;
  f.expect(Rule::NestedIf, "if input? a then shift o ; if input? a then eval o syn a",
           "if input? a then { shift o ; eval o syn a }");
  f.expect(Rule::NestedIf, "if input? a then shift p || if input? a then input a",
           "if input? a then { shift p || input a }");
}

TEST(RewriteRules, nested_if_blocked_by_write_to_guard_stream) {
  Fixture f;
  f.rejects(Rule::NestedIf,
            "if dynamic (syn o == const 1) then eval o const 2 ; if dynamic (syn o == const 1) then shift p");
}

TEST(RewriteRules, split_and_combine_if_are_inverse) {
  Fixture f;
  f.expect(Rule::SplitIf, "if input? a and input? b then shift o", "if input? a then if input? b then shift o");
  f.expect(Rule::CombineIf, "if input? a then if input? b then shift o", "if input? a and input? b then shift o");
  f.rejects(Rule::SplitIf, "if input? a then shift o else skip ; skip");
}

TEST(RewriteRules, implied_if_drops_inner_guard) {
  Fixture f;
  f.expect(Rule::ImpliedIf, "if input? a and input? b then if input? a then shift o else input b",
           "if input? a and input? b then shift o");
  f.rejects(Rule::ImpliedIf, "if input? a then if input? b then shift o");
}

TEST(RewriteRules, associativity_regroups_right_nesting) {
  Fixture f;
  f.expect(Rule::Associativity, "shift o ; { input a ; input b }", "shift o ; input a ; input b");
  f.expect(Rule::Associativity, "shift o || { input a || input b }", "shift o || input a || input b");
  f.rejects(Rule::Associativity, "shift o ; input a ; input b");
}

TEST(RewriteRules, swap_par_exchanges_branches) {
  Fixture f;
  f.expect(Rule::SwapPar, "shift o || input a", "input a || shift o");
  f.rejects(Rule::SwapPar, "shift o ; input a");
}

TEST(RewriteRules, iterate_inside_hoists_instance_independent_conjuncts) {
  Fixture f;
  f.expect(Rule::IterateInside, "iterate p if input? a and dynamic (self == syn a) then shift p",
           "if input? a then iterate p if dynamic (self == syn a) then shift p");
  f.rejects(Rule::IterateInside, "iterate p if dynamic (self == syn a) then shift p");
}

TEST(RewriteRules, unique_assign_replaces_keyed_iterate) {
  Fixture f;
  f.expect(Rule::UniqueAssign, "if input? a then iterate p if dynamic (self == syn a) then shift p",
           "if input? a then assign p syn a shift p");
  f.expect(Rule::UniqueAssign, "if input? a then iterate p if dynamic (syn a == self) then shift p",
           "if input? a then assign p syn a shift p");
}

TEST(RewriteRules, unique_assign_needs_a_total_key) {
  Fixture f;
  // b is not known to be present, and p is spawned on a only.
  f.rejects(Rule::UniqueAssign, "iterate p if dynamic (self == syn b) then shift p");
  // The key reads the instance itself.
  f.rejects(Rule::UniqueAssign, "if input? a then iterate p if dynamic (self == syn p[self]) then shift p");
  // No equality with self.
  f.rejects(Rule::UniqueAssign, "if input? a then iterate p if dynamic (self != syn a) then shift p");
}

TEST(RewriteRules, unique_assign_trusts_spawn_pacing) {
  // p exists only after an event with a, so `syn a` always has a value inside the iterate.
  Fixture f;
  f.expect(Rule::UniqueAssign, "iterate p if dynamic (self == syn a) then shift p", "assign p syn a shift p");
}

TEST(RewriteRules, unique_assign_collapses_plain_stream_iterate) {
  Fixture f;
  f.expect(Rule::UniqueAssign, "iterate o shift o", "assign o shift o");
}

TEST(RewriteRules, iterate_par_and_combine_merge_loops) {
  Fixture f;
  f.expect(Rule::IteratePar, "iterate p shift p || iterate p eval p self", "iterate p { shift p || eval p self }");
  f.rejects(Rule::IteratePar, "iterate p shift p || iterate q shift q");
  // p and q share spawn and close, so one loop covers both families.
  f.expect(Rule::IterateCombine, "iterate p shift p ; iterate q shift q", "iterate p { shift p ; shift q }");
}

TEST(RewriteRules, iterate_combine_blocked_by_lifecycle_change) {
  Fixture f;
  f.rejects(Rule::IterateCombine, "iterate p close p ; iterate q shift q");
}

TEST(RewriteRules, constant_guards_and_skips_disappear) {
  Fixture f;
  f.expect(Rule::IfTrue, "if true then shift o else input a", "shift o");
  f.expect(Rule::IfFalse, "if false then shift o else input a", "input a");
  f.expect(Rule::RemoveSkip1, "shift o ; skip", "shift o");
  f.expect(Rule::RemoveSkip1, "skip || input a", "input a");
  f.expect(Rule::RemoveSkip2, "if input? a then skip else skip", "skip");
  f.expect(Rule::RemoveSkip3, "iterate p skip", "skip");
  f.rejects(Rule::RemoveSkip3, "iterate p shift p");
}

TEST(RewriteRules, unnecessary_shift_only_for_single_cells) {
  Fixture f;
  f.rejects(Rule::UnnecessaryShift, "shift o");
  RewriteContext c = f.ctx;
  c.single_cell.insert("o");
  StmtPtr got = apply_rule(Rule::UnnecessaryShift, parse_stmt("shift o ; eval o syn a"), c);
  ASSERT_TRUE(got);
  EXPECT_TRUE(structural_eq(got, parse_stmt("skip ; eval o syn a")));
}

TEST(RewriteRules, redex_enumeration_is_preorder) {
  Fixture f;
  StmtPtr s = parse_stmt("{ shift o || input a } || input b");
  EXPECT_EQ(count_redexes(Rule::SwapPar, s, f.ctx), 2u);
  EXPECT_TRUE(structural_eq(apply_rule_at(Rule::SwapPar, s, f.ctx, 0), parse_stmt("input b || { shift o || input a }")));
  EXPECT_TRUE(structural_eq(apply_rule_at(Rule::SwapPar, s, f.ctx, 1), parse_stmt("{ input a || shift o } || input b")));
}

TEST(RewriteRules, guard_implication) {
  auto g = [](const char* s) { return parse_stmt(std::string("if ") + s + " then skip")->guard; };
  EXPECT_TRUE(implies(g("input? a and input? b"), g("input? b")));
  EXPECT_TRUE(implies(g("input? a"), g("input? a or input? b")));
  EXPECT_TRUE(implies(g("false"), g("input? a")));
  EXPECT_FALSE(implies(g("input? a or input? b"), g("input? a")));
  EXPECT_FALSE(implies(g("input? a"), g("input? b")));
}

TEST(RewriteFixpoint, vehicle_fixture_reaches_expected_shape) {
  AnalyzedSpec a = fixture("fig1a.lola");
  Compiled c = compile(a);
  std::string text = print_stmt(c.monitor.body);
  // moving is a plain stream: its loop collapses to an assign.
  EXPECT_NE(text.find("assign moving"), std::string::npos) << text;
  EXPECT_EQ(text.find("iterate moving"), std::string::npos) << text;
  // reached must still visit every instance on a position.
  EXPECT_NE(text.find("iterate reached"), std::string::npos) << text;
  EXPECT_FALSE(c.rewrite.hit_max_passes);
}

TEST(RewriteFixpoint, keyed_fixtures_lose_every_iterate) {
  for (const char* f : {"intruder.lola", "geofence.lola"}) {
    std::string text = print_stmt(compile(fixture(f)).monitor.body);
    EXPECT_EQ(text.find("iterate"), std::string::npos) << f << "\n" << text;
  }
  std::string ex = print_stmt(compile(fixture("example32.lola")).monitor.body);
  EXPECT_NE(ex.find("assign p syn a"), std::string::npos) << ex;
}

TEST(RewriteFixpoint, is_idempotent) {
  for (const char* f : {"fig1a.lola", "example32.lola", "intruder.lola", "geofence.lola"}) {
    AnalyzedSpec a = fixture(f);
    Compiled c = compile(a);
    RewriteContext ctx = rewrite_context(a, c.layout ? &*c.layout : nullptr);
    RewriteResult again = rewrite_fixpoint(c.monitor.body, default_rewrite_config(), ctx);
    EXPECT_TRUE(structural_eq(again.body, c.monitor.body)) << f;
  }
}

TEST(RewriteFixpoint, none_level_keeps_translation) {
  AnalyzedSpec a = fixture("fig1a.lola");
  CompileOptions o;
  o.level = OptLevel::None;
  Compiled c = compile(a, o);
  EXPECT_TRUE(structural_eq(c.monitor.body, translate(a.spec, a.layers).body));
  EXPECT_TRUE(c.rewrite.fired.empty());
}

TEST(RewriteFixpoint, restricted_rule_set_fires_only_those_rules) {
  AnalyzedSpec a = fixture("example32.lola");
  CompileOptions o;
  o.only = {Rule::IterateInside};
  Compiled c = compile(a, o);
  for (auto& [r, n] : c.rewrite.fired) EXPECT_EQ(r, Rule::IterateInside) << rule_name(r) << " " << n;
}

TEST(PartialEval, settles_known_guards) {
  StmtPtr s = parse_stmt("if input? a then shift o else input b ; if schedule global 1s then eval o const 1");
  StaticFacts f;
  f.inputs["a"] = false;
  f.all_schedules = false;
  StmtPtr got = partial_evaluate(s, f);
  // What remains only needs the constant-guard and skip rules.
  Fixture fx;
  RewriteConfig cfg;
  cfg.enabled = {Rule::IfTrue, Rule::IfFalse, Rule::RemoveSkip1, Rule::RemoveSkip2, Rule::RemoveSkip3};
  StmtPtr simp = rewrite_fixpoint(got, cfg, fx.ctx).body;
  EXPECT_TRUE(structural_eq(simp, parse_stmt("input b"))) << print_stmt(simp);
}

TEST(PartialEval, leaves_unknown_guards_alone) {
  StmtPtr s = parse_stmt("if input? a then shift o");
  EXPECT_TRUE(structural_eq(partial_evaluate(s, StaticFacts{}), s));
}

TEST(SplitEventTime, halves_drop_the_other_kind_of_guard) {
  StmtPtr s = parse_stmt("if input? a then shift o ; if schedule global 1s then eval o const 1");
  SplitProgram sp = split_event_time(s);
  std::string ev = print_stmt(sp.event), tm = print_stmt(sp.timed);
  EXPECT_NE(ev.find("shift o"), std::string::npos) << ev;
  EXPECT_EQ(ev.find("schedule"), std::string::npos) << ev;
  EXPECT_NE(tm.find("eval o"), std::string::npos) << tm;
  EXPECT_EQ(tm.find("input?"), std::string::npos) << tm;
}

TEST(SplitEventTime, split_monitor_matches_combined_run) {
  AnalyzedSpec a = fixture("fig1a.lola");
  Compiled c = compile(a);
  auto trace = read_trace_csv_text(slurp(fixture_path("fig1a.csv")), a.spec);
  RunResult whole = interpret(a, c, trace);
  RunOptions o = default_run_options(a);
  SplitProgram sp = split_event_time(c.monitor.body);
  o.event_body = sp.event;
  o.timed_body = sp.timed;
  RunResult split = interpret(a, c, trace, o);
  EXPECT_EQ(verdict_log(split.verdicts), verdict_log(whole.verdicts));
}

TEST(AccessSummaries, reads_and_writes) {
  StmtPtr s = parse_stmt("iterate p if dynamic (syn o == self) then eval p get q[const 1] 1 const 0");
  AccessMap r = reads_of(s), w = writes_of(s);
  EXPECT_TRUE(r["o"].any);
  EXPECT_TRUE(r["q"].other_instance);
  EXPECT_TRUE(w["p"].any);
  // Writes under a binder count as touching other instances; interleaving checks rely on that.
  EXPECT_TRUE(w["p"].other_instance);
  EXPECT_FALSE(w.count("o") && w["o"].any);
}

// One or more tests per inference rule. Expected values are worked out by hand
// or by brute force over the prefix, never by another interpreter entry point.

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>

#include "streamir/harness.hpp"
#include "support.hpp"

using namespace streamir;
using namespace testing_support;

namespace {

const Value kUnit{Unit{}};

Memory single(const std::string& s, Prefix p) {
  Memory m;
  put(m, s, kUnit, std::move(p));
  return m;
}

ExprPtr i64(std::int64_t v) { return ir::cnst(Value(v)); }

}  // namespace

// ---------------------------------------------------------------- expressions

TEST(ExprRules, eval_self_yields_bound_instance) {
  Memory m;
  EXPECT_EQ(eval_expr(m, ir::self(), Value(std::int64_t{42}), at(1)), Value(std::int64_t{42}));
}

TEST(ExprRules, eval_self_is_unit_outside_iterate) {
  Memory m;
  EXPECT_TRUE(eval_expr(m, ir::self(), kUnit, at(0)).is_unit());
}

TEST(ExprRules, eval_syn_reads_last_filled_value) {
  Memory m = single("x", prefix({{1, 3}, {2, 8}}));
  EXPECT_EQ(eval_expr(m, ir::syn("x"), kUnit, at(2)), Value(8));
}

TEST(ExprRules, eval_syn_of_instance_named_by_expression) {
  Memory m;
  put(m, "r", Value(5), prefix({{1, true}}));
  put(m, "r", Value(6), prefix({{1, false}}));
  EXPECT_EQ(eval_expr(m, ir::syn("r", ir::self()), Value(6), at(1)), Value(false));
  EXPECT_EQ(eval_expr(m, ir::syn("r", i64(5)), kUnit, at(1)), Value(true));
}

TEST(ExprRules, eval_syn_faults_on_unfilled_slot) {
  Memory m = single("x", prefix({{1, 3}}, true));
  EXPECT_THROW(eval_expr(m, ir::syn("x"), kUnit, at(2)), RuntimeFault);
}

TEST(ExprRules, eval_syn_faults_on_empty_prefix) {
  Memory m = single("x", prefix({}));
  EXPECT_THROW(eval_expr(m, ir::syn("x"), kUnit, at(0)), RuntimeFault);
}

TEST(ExprRules, eval_syn_faults_on_unspawned_instance) {
  Memory m;
  m.prefixes["r"];
  EXPECT_THROW(eval_expr(m, ir::syn("r", i64(1)), kUnit, at(0)), RuntimeFault);
}

TEST(ExprRules, eval_get_reads_offset_positions_back) {
  // Prefix 10, 20, 30 (current): offset 1 is 20, offset 2 is 10.
  Memory m = single("x", prefix({{1, 10}, {2, 20}, {3, 30}}));
  EXPECT_EQ(eval_expr(m, ir::get("x", ir::unit(), 1, i64(-1)), kUnit, at(3)), Value(20));
  EXPECT_EQ(eval_expr(m, ir::get("x", ir::unit(), 2, i64(-1)), kUnit, at(3)), Value(10));
}

TEST(ExprRules, eval_get_dft_when_prefix_is_too_short) {
  Memory m = single("x", prefix({{1, 10}, {2, 20}}));
  EXPECT_EQ(eval_expr(m, ir::get("x", ir::unit(), 2, i64(-1)), kUnit, at(2)), Value(-1));
}

TEST(ExprRules, eval_get_dft_on_first_position_value) {
  // pos.offset(by: -1, or: 0) at the first pos event.
  Memory m = single("pos", prefix({{0.2, 5}}));
  EXPECT_EQ(eval_expr(m, ir::get("pos", ir::unit(), 1, i64(0)), kUnit, at(0.2)), Value(0));
}

TEST(ExprRules, eval_get_counts_an_unfilled_trailing_slot) {
  // After shift the new slot is position 0; offset 1 is the previous value.
  Memory m = single("x", prefix({{1, 7}}, true));
  EXPECT_EQ(eval_expr(m, ir::get("x", ir::unit(), 1, i64(0)), kUnit, at(2)), Value(7));
}

TEST(ExprRules, eval_const_returns_literal) {
  Memory m;
  EXPECT_EQ(eval_expr(m, i64(7), kUnit, at(0)), Value(7));
  EXPECT_EQ(eval_expr(m, ir::cnst(Value("s")), kUnit, at(0)), Value("s"));
}

TEST(ExprRules, eval_bin_op_integer_arithmetic) {
  Memory m;
  auto e = ir::bin(BinOp::Sub, ir::bin(BinOp::Mul, i64(6), i64(7)), ir::bin(BinOp::Div, i64(-9), i64(2)));
  // Division truncates toward zero: -9 / 2 = -4.
  EXPECT_EQ(eval_expr(m, e, kUnit, at(0)), Value(42 + 4));
  EXPECT_EQ(eval_expr(m, ir::bin(BinOp::Rem, i64(-9), i64(4)), kUnit, at(0)), Value(-1));
}

TEST(ExprRules, eval_bin_op_wraps_on_overflow) {
  Memory m;
  std::int64_t max = std::numeric_limits<std::int64_t>::max();
  std::int64_t expect = static_cast<std::int64_t>(static_cast<std::uint64_t>(max) + 1u);
  EXPECT_EQ(eval_expr(m, ir::bin(BinOp::Add, i64(max), i64(1)), kUnit, at(0)), Value(expect));
}

TEST(ExprRules, eval_bin_op_division_by_zero_faults) {
  Memory m;
  EXPECT_THROW(eval_expr(m, ir::bin(BinOp::Div, i64(1), i64(0)), kUnit, at(0)), RuntimeFault);
}

TEST(ExprRules, eval_bin_op_float_comparison) {
  Memory m;
  auto e = ir::bin(BinOp::Le, ir::bin(BinOp::Add, ir::cnst(Value(0.5)), ir::cnst(Value(0.25))), ir::cnst(Value(0.75)));
  EXPECT_EQ(eval_expr(m, e, kUnit, at(0)), Value(true));
}

TEST(ExprRules, eval_bin_op_short_circuits_conjunction) {
  // The right operand would fault; false && _ never evaluates it.
  Memory m;
  auto e = ir::bin(BinOp::And, ir::cnst(Value(false)), ir::syn("missing"));
  EXPECT_EQ(eval_expr(m, e, kUnit, at(0)), Value(false));
}

TEST(ExprRules, eval_window_exists_over_recent_values) {
  Memory m = single("reached", prefix({{1, false}, {4, true}}));
  Aggregation any{AggKind::Exists, std::nullopt};
  EXPECT_EQ(eval_expr(m, ir::window("reached", ir::unit(), secs(10), any), kUnit, at(10)), Value(true));
  EXPECT_EQ(eval_expr(m, ir::window("reached", ir::unit(), secs(10), any), kUnit, at(15)), Value(false));
  Memory f = single("reached", prefix({{1, false}, {4, false}}));
  EXPECT_EQ(eval_expr(f, ir::window("reached", ir::unit(), secs(10), any), kUnit, at(10)), Value(false));
}

TEST(ExprRules, eval_window_cutoff_is_inclusive) {
  // A value exactly dur old is still inside the window.
  Memory m = single("x", prefix({{2, 5}, {3, 6}}));
  Aggregation cnt{AggKind::Count, std::nullopt};
  EXPECT_EQ(eval_expr(m, ir::window("x", ir::unit(), secs(1), cnt), kUnit, at(3)), Value(2));
  EXPECT_EQ(eval_expr(m, ir::window("x", ir::unit(), secs(1), cnt), kUnit, at(3.5)), Value(1));
}

TEST(ExprRules, eval_window_empty_uses_neutral_elements) {
  Memory m = single("x", prefix({}));
  m.types["x"] = Type::Int64;
  auto w = [](AggKind k) { return ir::window("x", ir::unit(), secs(1), Aggregation{k, std::nullopt}); };
  EXPECT_EQ(eval_expr(m, w(AggKind::Exists), kUnit, at(5)), Value(false));
  EXPECT_EQ(eval_expr(m, w(AggKind::Forall), kUnit, at(5)), Value(true));
  EXPECT_EQ(eval_expr(m, w(AggKind::Count), kUnit, at(5)), Value(0));
  EXPECT_EQ(eval_expr(m, w(AggKind::Sum), kUnit, at(5)), Value(0));
}

TEST(ExprRules, eval_window_empty_float_sum_is_float_zero) {
  Memory m = single("x", prefix({}));
  m.types["x"] = Type::Float64;
  auto e = ir::window("x", ir::unit(), secs(1), Aggregation{AggKind::Sum, std::nullopt});
  EXPECT_EQ(eval_expr(m, e, kUnit, at(5)), Value(0.0));
}

TEST(ExprRules, eval_window_min_without_fallback_faults) {
  Memory m = single("x", prefix({{1, 4}}));
  auto e = ir::window("x", ir::unit(), secs(1), Aggregation{AggKind::Min, std::nullopt});
  EXPECT_THROW(eval_expr(m, e, kUnit, at(9)), RuntimeFault);
  auto d = ir::window("x", ir::unit(), secs(1), Aggregation{AggKind::Min, Value(-3)});
  EXPECT_EQ(eval_expr(m, d, kUnit, at(9)), Value(-3));
}

TEST(ExprRules, eval_window_aggregates_match_brute_force) {
  std::mt19937_64 g(17);
  for (int round = 0; round < 50; ++round) {
    std::vector<std::pair<double, Value>> pairs;
    std::vector<std::pair<double, std::int64_t>> raw;
    double t = 0;
    int n = static_cast<int>(g() % 12);
    for (int k = 0; k < n; ++k) {
      t += 0.25 * static_cast<double>(1 + g() % 4);
      std::int64_t v = static_cast<std::int64_t>(g() % 21) - 10;
      pairs.emplace_back(t, Value(v));
      raw.emplace_back(t, v);
    }
    Memory m = single("x", prefix(pairs));
    m.types["x"] = Type::Int64;
    double now = t + 0.25 * static_cast<double>(g() % 4);
    double dur = 0.25 * static_cast<double>(1 + g() % 12);
    std::vector<std::int64_t> in;
    for (auto& [ts, v] : raw)
      if (ts >= now - dur - 1e-9) in.push_back(v);
    std::int64_t sum = 0;
    for (auto v : in) sum += v;
    auto w = [&](AggKind k, std::optional<Value> f = std::nullopt) {
      return eval_expr(m, ir::window("x", ir::unit(), secs(dur), Aggregation{k, f}), kUnit, at(now));
    };
    EXPECT_EQ(w(AggKind::Count), Value(static_cast<std::int64_t>(in.size())));
    EXPECT_EQ(w(AggKind::Sum), Value(sum));
    if (in.empty()) {
      EXPECT_EQ(w(AggKind::Max, Value(99)), Value(99));
      EXPECT_EQ(w(AggKind::Last, Value(99)), Value(99));
    } else {
      EXPECT_EQ(w(AggKind::Max), Value(*std::max_element(in.begin(), in.end())));
      EXPECT_EQ(w(AggKind::Min), Value(*std::min_element(in.begin(), in.end())));
      EXPECT_EQ(w(AggKind::Last), Value(in.back()));
      EXPECT_DOUBLE_EQ(w(AggKind::Avg).as_float(), static_cast<double>(sum) / static_cast<double>(in.size()));
    }
  }
}

// ---------------------------------------------------------------- guards

TEST(GuardRules, eval_input_guard_true_when_input_present) {
  Memory m;
  EXPECT_TRUE(eval_guard(m, ir::input_present("wp"), kUnit, {{"wp", Value(5)}}, at(0)));
}

TEST(GuardRules, eval_input_guard_false_when_input_absent) {
  Memory m;
  EXPECT_FALSE(eval_guard(m, ir::input_present("wp"), kUnit, {{"pos", Value(5)}}, at(0)));
}

TEST(GuardRules, eval_bin_guard_conjunction_and_disjunction) {
  Memory m;
  InputMap in{{"a", Value(1)}};
  auto a = ir::input_present("a"), b = ir::input_present("b");
  EXPECT_FALSE(eval_guard(m, ir::g_and(a, b), kUnit, in, at(0)));
  EXPECT_TRUE(eval_guard(m, ir::g_or(a, b), kUnit, in, at(0)));
  EXPECT_TRUE(eval_guard(m, ir::g_true(), kUnit, {}, at(0)));
  EXPECT_FALSE(eval_guard(m, ir::g_false(), kUnit, {}, at(0)));
}

TEST(GuardRules, eval_schedule_global_fires_only_at_deadline) {
  Memory m;
  m.deadlines.global[secs(0.5)] = at(1.0);
  EXPECT_TRUE(eval_guard(m, ir::schedule_global(secs(0.5)), kUnit, {}, at(1.0)));
  EXPECT_FALSE(eval_guard(m, ir::schedule_global(secs(0.5)), kUnit, {}, at(0.7)));
}

TEST(GuardRules, eval_schedule_global_without_deadline_is_false) {
  Memory m;
  m.deadlines.global[secs(0.5)] = std::nullopt;
  EXPECT_FALSE(eval_guard(m, ir::schedule_global(secs(0.5)), kUnit, {}, at(0.5)));
}

TEST(GuardRules, eval_schedule_local_is_per_instance) {
  Memory m;
  m.deadlines.local[LocalKey{secs(10), "missed", Value(5)}] = at(10);
  m.deadlines.local[LocalKey{secs(10), "missed", Value(6)}] = at(12);
  auto g = ir::schedule_local(secs(10), "missed");
  EXPECT_TRUE(eval_guard(m, g, Value(5), {}, at(10)));
  EXPECT_FALSE(eval_guard(m, g, Value(6), {}, at(10)));
  EXPECT_FALSE(eval_guard(m, g, Value(7), {}, at(10)));
}

TEST(GuardRules, eval_dynamic_uses_expression_value) {
  Memory m;
  put(m, "r", Value(5), prefix({{1, true}}));
  EXPECT_TRUE(eval_guard(m, ir::dynamic(ir::syn("r", ir::self())), Value(5), {}, at(1)));
  EXPECT_FALSE(eval_guard(m, ir::dynamic(ir::bin(BinOp::Eq, ir::self(), i64(4))), Value(5), {}, at(1)));
}

TEST(GuardRules, eval_dynamic_non_boolean_faults) {
  Memory m;
  EXPECT_THROW(eval_guard(m, ir::dynamic(i64(1)), kUnit, {}, at(0)), RuntimeFault);
}

// ---------------------------------------------------------------- statements

TEST(StmtRules, exec_skip_leaves_memory_unchanged) {
  Memory m = single("x", prefix({{1, 2}}));
  Memory r = exec_stmt(m, ir::skip(), kUnit, {}, at(2));
  EXPECT_EQ(r.find("x", kUnit)->prefix.length(), 1u);
  EXPECT_EQ(r.find("x", kUnit)->prefix.last()->v, Value(2));
}

TEST(StmtRules, exec_shift_appends_unfilled_slot) {
  Memory m = single("x", prefix({{1, 2}}));
  Memory r = exec_stmt(m, ir::shift("x"), kUnit, {}, at(2));
  const Prefix& p = r.find("x", kUnit)->prefix;
  EXPECT_EQ(p.length(), 2u);
  EXPECT_FALSE(p.last()->filled);
}

TEST(StmtRules, exec_shift_of_unspawned_instance_faults) {
  Memory m;
  m.prefixes["r"];
  EXPECT_THROW(exec_stmt(m, ir::shift("r"), Value(3), {}, at(0)), RuntimeFault);
}

TEST(StmtRules, exec_input_fills_slot_with_event_value) {
  Memory m = single("wp", prefix({}, true));
  std::vector<VerdictRecord> out;
  Memory r = exec_stmt(m, ir::input("wp"), kUnit, {{"wp", Value(5)}}, at(0.1), &out);
  const Slot* s = r.find("wp", kUnit)->prefix.last();
  EXPECT_TRUE(s->filled);
  EXPECT_EQ(s->t, at(0.1));
  EXPECT_EQ(s->v, Value(5));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].stream, "wp");
}

TEST(StmtRules, exec_input_without_value_faults) {
  Memory m = single("wp", prefix({}, true));
  EXPECT_THROW(exec_stmt(m, ir::input("wp"), kUnit, {}, at(0)), RuntimeFault);
}

TEST(StmtRules, exec_eval_fills_slot_with_expression_value) {
  Memory m = single("o", prefix({{1, 1}}, true));
  put(m, "x", kUnit, prefix({{2, 20}}));
  Memory r = exec_stmt(m, ir::eval("o", ir::bin(BinOp::Add, ir::syn("x"), i64(1))), kUnit, {}, at(2));
  EXPECT_EQ(r.find("o", kUnit)->prefix.last()->v, Value(21));
  EXPECT_EQ(r.find("o", kUnit)->prefix.length(), 2u);
}

TEST(StmtRules, exec_eval_without_unfilled_slot_faults) {
  Memory m = single("o", prefix({{1, 1}}));
  EXPECT_THROW(exec_stmt(m, ir::eval("o", i64(3)), kUnit, {}, at(2)), RuntimeFault);
}

TEST(StmtRules, exec_seq_runs_left_then_right) {
  Memory m = single("o", prefix({{1, 1}}));
  Memory r = exec_stmt(m, ir::seq(ir::shift("o"), ir::eval("o", i64(2))), kUnit, {}, at(2));
  EXPECT_EQ(r.find("o", kUnit)->prefix.last()->v, Value(2));
  // Reversed order has no slot to write into.
  EXPECT_THROW(exec_stmt(m, ir::seq(ir::eval("o", i64(2)), ir::shift("o")), kUnit, {}, at(2)), RuntimeFault);
}

TEST(StmtRules, exec_parallel_both_orders_agree) {
  Memory m = single("a", prefix({}, true));
  put(m, "b", kUnit, prefix({}, true));
  auto l = ir::eval("a", i64(1)), r = ir::eval("b", i64(2));
  Memory x = exec_stmt(m, ir::par(l, r), kUnit, {}, at(1));
  Memory y = exec_stmt(m, ir::par(r, l), kUnit, {}, at(1));
  for (const char* s : {"a", "b"}) EXPECT_EQ(x.find(s, kUnit)->prefix.last()->v, y.find(s, kUnit)->prefix.last()->v);
}

TEST(StmtRules, exec_close_makes_instance_bottom) {
  Memory m;
  put(m, "r", Value(5), prefix({{1, true}}));
  Memory r = exec_stmt(m, ir::close("r"), Value(5), {}, at(2));
  EXPECT_FALSE(r.live("r", Value(5)));
}

TEST(StmtRules, exec_spawn_new_creates_empty_prefix) {
  Memory m = single("wp", prefix({{0, 42}}));
  m.prefixes["reached"];
  Memory r = exec_stmt(m, ir::spawn("reached", ir::syn("wp")), kUnit, {}, at(0));
  ASSERT_TRUE(r.live("reached", Value(42)));
  EXPECT_EQ(r.find("reached", Value(42))->prefix.length(), 0u);
}

TEST(StmtRules, exec_spawn_exists_keeps_prefix) {
  Memory m;
  put(m, "reached", Value(42), prefix({{1, false}}));
  Memory r = exec_stmt(m, ir::spawn("reached", i64(42)), kUnit, {}, at(3));
  EXPECT_EQ(r.find("reached", Value(42))->prefix.length(), 1u);
}

TEST(StmtRules, exec_if_true_runs_then_branch) {
  Memory m = single("o", prefix({}));
  Memory r = exec_stmt(m, ir::if_(ir::input_present("a"), ir::shift("o"), ir::skip()), kUnit, {{"a", Value(1)}}, at(1));
  EXPECT_EQ(r.find("o", kUnit)->prefix.length(), 1u);
}

TEST(StmtRules, exec_if_false_runs_else_branch) {
  Memory m = single("o", prefix({}));
  Memory r = exec_stmt(m, ir::if_(ir::input_present("a"), ir::skip(), ir::shift("o")), kUnit, {}, at(1));
  EXPECT_EQ(r.find("o", kUnit)->prefix.length(), 1u);
}

TEST(StmtRules, exec_iterate_folds_body_over_live_instances) {
  Memory m;
  put(m, "o", Value(1), prefix({}));
  put(m, "o", Value(2), prefix({}));
  Memory r = exec_stmt(m, ir::iterate("o", ir::close("o")), kUnit, {}, at(1));
  EXPECT_FALSE(r.live("o", Value(1)));
  EXPECT_FALSE(r.live("o", Value(2)));
}

TEST(StmtRules, exec_iterate_visits_in_spawn_order) {
  Memory m;
  put(m, "o", Value(9), prefix({}, true), 1.0);
  put(m, "o", Value(3), prefix({}, true), 2.0);
  std::vector<VerdictRecord> out;
  exec_stmt(m, ir::iterate("o", ir::eval("o", ir::self())), kUnit, {}, at(3), &out);
  ASSERT_EQ(out.size(), 2u);
  // Verdicts are ordered canonically; both instances received their own value.
  std::vector<Value> got{out[0].value, out[1].value};
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, (std::vector<Value>{Value(3), Value(9)}));
}

TEST(StmtRules, exec_iterate_over_no_instances_is_skip) {
  Memory m;
  m.prefixes["o"];
  Memory r = exec_stmt(m, ir::iterate("o", ir::shift("missing")), kUnit, {}, at(1));
  EXPECT_TRUE(r.prefixes["o"].empty());
}

TEST(StmtRules, exec_assign_runs_body_on_computed_instance) {
  Memory m;
  put(m, "o", Value(1), prefix({}));
  put(m, "o", Value(2), prefix({}));
  put(m, "id", kUnit, prefix({{1, 2}}));
  Memory r = exec_stmt(m, ir::assign("o", ir::syn("id"), ir::shift("o")), kUnit, {}, at(1));
  EXPECT_EQ(r.find("o", Value(2))->prefix.length(), 1u);
  EXPECT_EQ(r.find("o", Value(1))->prefix.length(), 0u);
}

TEST(StmtRules, exec_assign_to_unspawned_instance_is_skip) {
  Memory m;
  put(m, "o", Value(1), prefix({}));
  Memory r = exec_stmt(m, ir::assign("o", i64(7), ir::shift("o")), kUnit, {}, at(1));
  EXPECT_EQ(r.find("o", Value(1))->prefix.length(), 0u);
  EXPECT_FALSE(r.live("o", Value(7)));
}

// ---------------------------------------------------------------- slice and update

TEST(SliceRule, slice_of_empty_prefix_is_empty) {
  Prefix p = prefix({});
  auto s = slice(&p, at(5));
  ASSERT_TRUE(s.has_value());
  EXPECT_TRUE(s->empty());
}

TEST(SliceRule, slice_keeps_values_at_or_after_cutoff) {
  Prefix p = prefix({{1, "a"}, {3, "b"}, {7, "c"}});
  auto s = slice(&p, at(3));
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(*s, (std::vector<Value>{Value("b"), Value("c")}));
}

TEST(SliceRule, slice_drops_older_last_pair) {
  Prefix p = prefix({{1, "a"}});
  auto s = slice(&p, at(2));
  ASSERT_TRUE(s.has_value());
  EXPECT_TRUE(s->empty());
}

TEST(SliceRule, slice_of_bottom_is_bottom) { EXPECT_FALSE(slice(nullptr, at(2)).has_value()); }

TEST(UpdateRule, update_writes_into_the_unfilled_slot) {
  Prefix p = prefix({{1, 4}});
  p.shift(at(2));
  p.fill(at(2), Value(5));
  ASSERT_EQ(p.length(), 2u);
  EXPECT_EQ(p.last()->v, Value(5));
  EXPECT_EQ(p.from_end(1)->v, Value(4));
}

TEST(UpdateRule, update_without_reserved_slot_faults) {
  Prefix p = prefix({{1, 4}});
  EXPECT_THROW(p.fill(at(2), Value(5)), RuntimeFault);
}

// ---------------------------------------------------------------- deadlines and steps

TEST(NextDeadline, nextDl_global_advances_when_fired) {
  Deadlines d;
  d.global[secs(0.5)] = at(1.0);
  Memory m;
  Deadlines n = next_deadline(d, at(1.0), m, m);
  EXPECT_EQ(n.global.at(secs(0.5)), at(1.5));
}

TEST(NextDeadline, nextDl_unchanged_when_nothing_fires) {
  Deadlines d;
  d.global[secs(0.5)] = at(1.0);
  Memory m;
  EXPECT_TRUE(next_deadline(d, at(0.7), m, m) == d);
}

TEST(NextDeadline, nextDl_local_created_when_instance_spawns) {
  Deadlines d;
  d.local_freqs.insert({secs(10), "missed"});
  Memory before;
  before.prefixes["missed"];
  Memory after = before;
  put(after, "missed", Value(5), prefix({}), 3);
  Deadlines n = next_deadline(d, at(3), before, after);
  EXPECT_EQ(n.local.at(LocalKey{secs(10), "missed", Value(5)}), at(13));
}

TEST(NextDeadline, nextDl_local_cleared_when_instance_closes) {
  Deadlines d;
  d.local_freqs.insert({secs(10), "missed"});
  d.local[LocalKey{secs(10), "missed", Value(5)}] = at(13);
  Memory before;
  put(before, "missed", Value(5), prefix({}), 3);
  Memory after;
  after.prefixes["missed"];
  Deadlines n = next_deadline(d, at(4), before, after);
  EXPECT_EQ(n.local.count(LocalKey{secs(10), "missed", Value(5)}), 0u);
}

namespace {

// Output `o` evaluates 1 on the 10 s global schedule; input `i` is recorded on events.
StmtPtr clocked_body() {
  auto tick = ir::if_(ir::schedule_global(secs(10)), ir::seq(ir::shift("o"), ir::eval("o", i64(1))));
  auto in = ir::if_(ir::input_present("i"), ir::seq(ir::shift("i"), ir::input("i")));
  return ir::par(in, tick);
}

Memory clocked_memory() {
  Memory m = single("o", prefix({}));
  put(m, "i", kUnit, prefix({}));
  m.deadlines.global[secs(10)] = at(10);
  return m;
}

}  // namespace

TEST(StepRules, exec_deadline_runs_before_later_event) {
  std::vector<VerdictRecord> out;
  Memory r = step(clocked_memory(), clocked_body(), {{"i", Value(4)}}, at(12), &out);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].stream, "o");
  EXPECT_EQ(out[0].time, at(10));
  EXPECT_EQ(out[1].stream, "i");
  EXPECT_EQ(out[1].time, at(12));
  EXPECT_EQ(r.deadlines.global.at(secs(10)), at(20));
}

TEST(StepRules, exec_deadline_fires_first_when_due_at_event_time) {
  std::vector<VerdictRecord> out;
  step(clocked_memory(), clocked_body(), {{"i", Value(4)}}, at(10), &out);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].stream, "o");
  EXPECT_EQ(out[1].stream, "i");
}

TEST(StepRules, exec_input_only_when_no_deadline_due) {
  std::vector<VerdictRecord> out;
  step(clocked_memory(), clocked_body(), {{"i", Value(4)}}, at(9), &out);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].stream, "i");
}

TEST(StepRules, exec_deadline_once_per_distinct_timestamp) {
  // 0.5 s and 1.0 s schedules; event at 1.0: deadline executions at 0.5 and 1.0, the latter firing both.
  auto a = ir::if_(ir::schedule_global(secs(0.5)), ir::seq(ir::shift("a"), ir::eval("a", i64(1))));
  auto b = ir::if_(ir::schedule_global(secs(1.0)), ir::seq(ir::shift("b"), ir::eval("b", i64(2))));
  auto in = ir::if_(ir::input_present("i"), ir::seq(ir::shift("i"), ir::input("i")));
  Memory m = single("a", prefix({}));
  put(m, "b", kUnit, prefix({}));
  put(m, "i", kUnit, prefix({}));
  m.deadlines.global[secs(0.5)] = at(0.5);
  m.deadlines.global[secs(1.0)] = at(1.0);
  RunResult r = run(Monitor{ir::par(in, ir::par(a, b))}, m, {TraceEvent{at(1.0), {{"i", Value(0)}}}});
  ASSERT_FALSE(r.fault.has_value());
  EXPECT_EQ(r.counters.deadline_executions, 2u);
  EXPECT_EQ(r.counters.input_executions, 1u);
  EXPECT_EQ(verdicts_of(r.verdicts, "a").size(), 2u);
  EXPECT_EQ(verdicts_of(r.verdicts, "b").size(), 1u);
}

// ---------------------------------------------------------------- whole monitors

namespace {

RunResult run_fixture(const AnalyzedSpec& a, const std::string& csv, bool swap = false) {
  Monitor m = translate(a.spec, a.layers);
  RunOptions o = default_run_options(a);
  o.swap_par = swap;
  return run(m, initial_memory(a.spec), events(a, csv), o);
}

}  // namespace

TEST(MonitorRuns, exec_eval_fig1a_reached_and_moving) {
  AnalyzedSpec a = fixture("fig1a.lola");
  RunResult r = run_fixture(a, "time,pos,wp\n0.1,,5\n0.2,5,\n");
  ASSERT_FALSE(r.fault.has_value()) << *r.fault;
  auto reached = verdicts_of(r.verdicts, "reached", Value(5));
  ASSERT_EQ(reached.size(), 1u);
  EXPECT_EQ(reached[0], std::make_pair(at(0.2), Value(true)));
  auto moving = verdicts_of(r.verdicts, "moving");
  ASSERT_EQ(moving.size(), 1u);
  EXPECT_EQ(moving[0], std::make_pair(at(0.2), Value(true)));
  // reached(5) closed on the same event.
  EXPECT_FALSE(r.memory.live("reached", Value(5)));
}

TEST(MonitorRuns, exec_deadline_fig1a_missed_waypoint) {
  AnalyzedSpec a = fixture("fig1a.lola");
  RunResult r = run_fixture(a, "time,pos,wp\n0.0,,5\n10.5,,7\n");
  ASSERT_FALSE(r.fault.has_value()) << *r.fault;
  auto missed = verdicts_of(r.verdicts, "missed_wp", Value(5));
  ASSERT_EQ(missed.size(), 1u);
  EXPECT_EQ(missed[0], std::make_pair(at(10.0), Value(true)));
}

TEST(MonitorRuns, exec_input_empty_trace_keeps_initial_memory) {
  AnalyzedSpec a = fixture("fig1a.lola");
  RunResult r = run_fixture(a, "time,pos,wp\n");
  EXPECT_TRUE(r.verdicts.empty());
  EXPECT_EQ(r.memory.prefixes.at("pos").at(kUnit).prefix.length(), 0u);
}

TEST(WellDefinedness, well_definedness_swapped_par_on_fixtures) {
  for (const char* f : {"fig1a", "example32", "intruder", "geofence"}) {
    AnalyzedSpec a = fixture(std::string(f) + ".lola");
    std::string csv = slurp(fixture_path(std::string(f) + ".csv"));
    RunResult x = run_fixture(a, csv), y = run_fixture(a, csv, true);
    EXPECT_EQ(x.verdicts, y.verdicts) << f;
    EXPECT_EQ(x.fault, y.fault) << f;
  }
}

TEST(WellDefinedness, well_definedness_permuted_iterate_on_intruders) {
  AnalyzedSpec a = fixture("intruder.lola");
  auto trace = intruder_trace(12, 300);
  Monitor m = translate(a.spec, a.layers);
  RunResult base = run(m, initial_memory(a.spec), trace, default_run_options(a));
  ASSERT_FALSE(base.fault.has_value());
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    RunOptions o = default_run_options(a);
    o.permute_seed = seed;
    RunResult p = run(m, initial_memory(a.spec), trace, o);
    // Verdicts are emitted in canonical order, so the logs must match exactly.
    EXPECT_EQ(base.verdicts, p.verdicts) << seed;
  }
}

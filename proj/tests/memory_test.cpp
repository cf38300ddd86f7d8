#include <gtest/gtest.h>

#include "streamir/harness.hpp"
#include "streamir/pipeline.hpp"
#include "support.hpp"

using namespace streamir;
using namespace testing_support;

namespace {

Prefix ring(std::size_t k) { return Prefix(Storage{StorageKind::Ring, k, {}}); }

void push(Prefix& p, double t, std::int64_t v) {
  p.shift(at(t));
  p.fill(at(t), Value(v));
}

}  // namespace

TEST(Storage, ring_keeps_last_k_and_counts_logical_length) {
  Prefix p = ring(2);
  for (int i = 1; i <= 5; ++i) push(p, i, i * 10);
  EXPECT_EQ(p.length(), 5u);
  EXPECT_EQ(p.stored(), 2u);
  EXPECT_EQ(p.from_end(0)->v, Value(std::int64_t{50}));
  EXPECT_EQ(p.from_end(1)->v, Value(std::int64_t{40}));
  // Logically present but dropped: using it means the analyzed bound was wrong.
  EXPECT_THROW(p.from_end(2), RuntimeFault);
  // Past the logical start is the default case, not an error.
  EXPECT_EQ(p.from_end(5), nullptr);
}

TEST(Storage, single_cell_never_grows) {
  Prefix p(Storage{StorageKind::SingleCell, 1, {}});
  for (int i = 1; i <= 4; ++i) push(p, i, i);
  EXPECT_EQ(p.stored(), 1u);
  EXPECT_EQ(p.last()->v, Value(std::int64_t{4}));
  EXPECT_EQ(p.last()->t, at(4));
}

TEST(Storage, timed_deque_drops_entries_beyond_horizon) {
  Prefix p(Storage{StorageKind::TimedDeque, 1, secs(2)});
  for (int i = 1; i <= 6; ++i) push(p, i, i);
  // At t=6 entries from t >= 4 are needed; one older entry may linger until the next shift.
  EXPECT_LE(p.stored(), 4u);
  EXPECT_GE(p.stored(), 3u);
  auto s = slice(&p, at(4));
  ASSERT_TRUE(s);
  EXPECT_EQ(s->size(), 3u);
}

TEST(Storage, unfilled_write_target_faults) {
  Prefix p = ring(3);
  p.shift(at(1));
  p.fill(at(1), Value(std::int64_t{1}));
  EXPECT_THROW(p.fill(at(1), Value(std::int64_t{2})), RuntimeFault);
}

TEST(Storage, layout_maps_to_storage) {
  StreamLayout l;
  l.values = StreamLayout::Values::Ring;
  l.k = 3;
  EXPECT_EQ(storage_for(l).kind, StorageKind::Ring);
  EXPECT_EQ(storage_for(l).keep, 3u);
  l.values = StreamLayout::Values::SingleCell;
  EXPECT_EQ(storage_for(l).kind, StorageKind::SingleCell);
  EXPECT_NE(storage_for(l, false).kind, StorageKind::SingleCell);
}

TEST(MemoryLayout, vehicle_fixture_layout) {
  AnalyzedSpec a = fixture("fig1a.lola");
  MemoryLayout m = optimize_memory(a);
  using V = StreamLayout::Values;
  using I = StreamLayout::Instances;
  EXPECT_EQ(m.at("pos").values, V::Ring);
  EXPECT_EQ(m.at("pos").k, 2u);
  EXPECT_EQ(m.at("moving").values, V::SingleCell);
  EXPECT_EQ(m.at("reached").values, V::TimedDeque);
  EXPECT_EQ(m.at("reached").horizon, secs(10));
  EXPECT_EQ(m.at("reached").instances, I::InstanceMap);
  EXPECT_EQ(m.at("moving").instances, I::NotParameterized);
}

TEST(MemoryLayout, bound_is_deepest_offset_plus_one) {
  AnalyzedSpec a = analyze(
      "input x : Int64\n"
      "output o : Int64\n  eval @x with x.offset(by: -3, or: 0) + x.offset(by: -1, or: 0)\n"
      "output p(k: Int64) : Int64\n  spawn @x with 1\n  eval @x with o\n");
  MemoryLayout m = optimize_memory(a);
  EXPECT_EQ(m.at("x").values, StreamLayout::Values::Ring);
  EXPECT_EQ(m.at("x").k, 4u);
  EXPECT_EQ(m.at("o").values, StreamLayout::Values::SingleCell);
  // A constant spawn argument means at most one instance.
  EXPECT_EQ(m.at("p").instances, StreamLayout::Instances::ParameterErased);
}

TEST(MemoryConformance, bounded_fixtures_match_unbounded) {
  for (const char* f : {"fig1a", "example32", "intruder", "geofence"}) {
    AnalyzedSpec a = fixture(std::string(f) + ".lola");
    auto trace = read_trace_csv_text(slurp(fixture_path(std::string(f) + ".csv")), a.spec);
    CompileOptions none;
    none.level = OptLevel::None;
    Compiled plain = compile(a, none);
    Compiled opt = compile(a);
    ASSERT_TRUE(opt.layout);
    RunResult r0 = interpret(a, plain, trace), r1 = interpret(a, opt, trace);
    EXPECT_FALSE(r1.fault) << f << ": " << r1.fault.value_or("");
    EXPECT_EQ(verdict_log(r1.verdicts), verdict_log(r0.verdicts)) << f;
    for (auto& [s, l] : *opt.layout) {
      if (l.values == StreamLayout::Values::Ring) EXPECT_LE(r1.peak_stored[s], l.k) << f << " " << s;
      if (l.values == StreamLayout::Values::SingleCell) EXPECT_LE(r1.peak_stored[s], 1u) << f << " " << s;
    }
  }
}

TEST(MemoryConformance, analyzed_bound_covers_observed_reads) {
  // Oracle: the deepest offset the unbounded interpreter actually reads.
  GenConfig g;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    g.seed = seed;
    AnalyzedSpec a = gen_spec(g);
    auto trace = gen_trace(a.spec, g);
    CompileOptions none;
    none.level = OptLevel::None;
    RunResult r = interpret(a, compile(a, none), trace);
    for (auto& [s, deepest] : r.max_offset_read) {
      auto it = a.bounds.find(s);
      ASSERT_NE(it, a.bounds.end()) << s;
      EXPECT_GE(it->second.length, deepest + 1) << "seed " << seed << " stream " << s;
    }
  }
}

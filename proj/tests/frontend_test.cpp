#include <gtest/gtest.h>

#include "support.hpp"

using namespace streamir;
using namespace testing_support;

namespace {

// First diagnostic message of a rejected spec, or "" if it was accepted.
std::string rejection(const std::string& text) {
  try {
    analyze(text);
  } catch (const SpecError& e) {
    return e.diagnostics.empty() ? "?" : e.diagnostics.front().message;
  }
  return "";
}

}  // namespace

TEST(Frontend, parses_vehicle_fixture) {
  AnalyzedSpec a = fixture("fig1a.lola");
  ASSERT_EQ(a.spec.inputs.size(), 2u);
  ASSERT_EQ(a.spec.outputs.size(), 3u);
  const OutputDecl* reached = a.spec.output("reached");
  ASSERT_NE(reached, nullptr);
  EXPECT_TRUE(reached->parameterized);
  EXPECT_TRUE(reached->spawn.has_value());
  EXPECT_TRUE(reached->close.has_value());
}

TEST(Frontend, infers_unannotated_types) {
  AnalyzedSpec a = fixture("fig1a.lola");
  EXPECT_EQ(a.spec.output("moving")->type, Type::Bool);
  EXPECT_EQ(a.spec.output("reached")->type, Type::Bool);
  // Parameter type follows the spawn expression (wp).
  EXPECT_EQ(a.spec.output("reached")->param_type, a.spec.input("wp")->type);
  EXPECT_EQ(a.spec.output("missed_wp")->type, Type::Bool);
}

TEST(Frontend, records_periodic_frequencies) {
  AnalyzedSpec a = fixture("fig1a.lola");
  ASSERT_EQ(a.spec.frequencies.size(), 1u);
  const Freq& f = *a.spec.frequencies.begin();
  EXPECT_TRUE(f.local);
  EXPECT_EQ(f.period, secs(10));
  EXPECT_EQ(f.stream, "missed_wp");
}

TEST(Frontend, infers_event_pacing_from_accessed_inputs) {
  AnalyzedSpec a = analyze("input a : Int64\ninput b : Int64\noutput o\n  eval with a + b\n");
  const Pacing& p = *a.spec.output("o")->eval.pacing;
  EXPECT_EQ(p.kind, Pacing::Kind::Event);
  EXPECT_EQ(p.str(), "@(a && b)");
}

TEST(Frontend, layers_respect_task_dependencies) {
  AnalyzedSpec a = fixture("fig1a.lola");
  auto layer = [&](Task::Kind k, const char* s) { return a.layer_of(Task{k, s}); };
  using K = Task::Kind;
  EXPECT_LT(layer(K::Input, "wp"), layer(K::Spawn, "reached"));
  EXPECT_LT(layer(K::Spawn, "reached"), layer(K::Shift, "reached"));
  EXPECT_LT(layer(K::Shift, "reached"), layer(K::Eval, "reached"));
  EXPECT_LT(layer(K::Eval, "reached"), layer(K::Close, "reached"));
  // missed_wp reads a window over reached, and reached closes only after that read.
  EXPECT_LT(layer(K::Eval, "reached"), layer(K::Eval, "missed_wp"));
  EXPECT_LT(layer(K::Eval, "missed_wp"), layer(K::Close, "reached"));
  EXPECT_LT(layer(K::Input, "pos"), layer(K::Eval, "moving"));
}

TEST(Frontend, memory_bounds_follow_offsets_and_windows) {
  AnalyzedSpec a = fixture("fig1a.lola");
  EXPECT_EQ(a.bounds.at("pos").length, 2u);  // pos.offset(by: -1)
  EXPECT_EQ(a.bounds.at("moving").length, 1u);
  EXPECT_TRUE(a.bounds.at("reached").window);
  EXPECT_EQ(a.bounds.at("reached").max_window, secs(10));
}

TEST(Frontend, accepts_every_fixture) {
  for (const char* f : {"fig1a.lola", "example32.lola", "intruder.lola", "geofence.lola"})
    EXPECT_NO_THROW(fixture(f)) << f;
}

TEST(Frontend, rejects_unknown_stream) {
  EXPECT_NE(rejection("input a : Int64\noutput o\n  eval @a with b\n").find("b"), std::string::npos);
}

TEST(Frontend, rejects_type_mismatch) {
  EXPECT_FALSE(rejection("input a : Int64\noutput o : Bool\n  eval @a with a + 1\n").empty());
  EXPECT_FALSE(rejection("input a : Int64\ninput f : Float64\noutput o\n  eval @a && f with a + f\n").empty());
}

TEST(Frontend, rejects_synchronous_self_cycle) {
  std::string msg = rejection("input a : Int64\noutput o : Int64\n  eval @a with o + a\n");
  EXPECT_NE(msg.find("cycl"), std::string::npos) << msg;
}

TEST(Frontend, accepts_past_self_reference) {
  EXPECT_EQ(rejection("input a : Int64\noutput o : Int64\n  eval @a with o.offset(by: -1, or: 0) + a\n"), "");
}

TEST(Frontend, rejects_filter_reading_own_past) {
  // The filter decides whether the stream shifts at all.
  std::string msg =
      rejection("input a : Bool\noutput o : Bool\n  eval @a when o.offset(by: -1, or: true) with a\n");
  EXPECT_NE(msg.find("cycl"), std::string::npos) << msg;
}

TEST(Frontend, rejects_sync_input_access_under_periodic_pacing) {
  EXPECT_FALSE(rejection("input a : Int64\noutput o : Int64\n  eval @Global(1s) with a\n").empty());
  EXPECT_EQ(rejection("input a : Int64\noutput o : Int64\n  eval @Global(1s) with a.hold()\n"), "");
}

TEST(Frontend, rejects_pacing_that_does_not_imply_access) {
  EXPECT_FALSE(rejection("input a : Int64\ninput b : Int64\noutput o : Int64\n  eval @a with a + b\n").empty());
  EXPECT_EQ(rejection("input a : Int64\ninput b : Int64\noutput o : Int64\n  eval @a || b with a.hold()\n"), "");
}

TEST(Frontend, rejects_local_pacing_on_spawn) {
  std::string msg = rejection("input a : Int64\noutput o(p: Int64) : Int64\n  spawn @Local(1s) with 1\n  eval @a with p\n");
  EXPECT_NE(msg.find("local"), std::string::npos) << msg;
}

TEST(Frontend, rejects_local_pacing_reading_foreign_family) {
  std::string spec =
      "input a : Int64\n"
      "output p(i: Int64) : Int64\n  spawn @a with a\n  eval @a with i\n"
      "output q(j: Int64) : Int64\n  spawn @a with a + 1\n  eval @Local(1s) with p(j)\n";
  EXPECT_FALSE(rejection(spec).empty());
}

TEST(Frontend, diagnostics_carry_line_and_column) {
  try {
    analyze("input a : Int64\noutput o\n  eval @a with zz\n", "x.lola");
    FAIL() << "accepted";
  } catch (const SpecError& e) {
    ASSERT_FALSE(e.diagnostics.empty());
    EXPECT_EQ(e.diagnostics[0].loc.line, 3);
    EXPECT_NE(e.diagnostics[0].format().find("x.lola:3:"), std::string::npos);
  }
}

TEST(Frontend, syntax_error_is_reported) {
  EXPECT_FALSE(rejection("input a Int64\n").empty());
  EXPECT_FALSE(rejection("output o\n  eval @a with (1 +\n").empty());
}

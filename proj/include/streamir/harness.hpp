#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "streamir/interpreter.hpp"
#include "streamir/pipeline.hpp"
#include "streamir/spec.hpp"

namespace streamir {

struct GenConfig {
  std::uint64_t seed = 1;
  int max_inputs = 3;
  int max_streams = 6;   // outputs
  int max_params = 2;    // parameterized outputs
  int max_offset = 3;
  double window_prob = 0.3;
  double periodic_prob = 0.3;
  int trace_len = 200;
  double density = 0.6;  // probability that an input is present in an event
};

// Random well-typed, acyclic, fault-free specification text.
std::string gen_spec_text(const GenConfig& cfg);
AnalyzedSpec gen_spec(const GenConfig& cfg);
// Strictly increasing times on a 0.25 s grid; at least one input per event.
std::vector<TraceEvent> gen_trace(const StreamSpec& spec, const GenConfig& cfg);

// n polygon-line outputs over a position, combined into one inside/outside verdict.
std::string gen_geofence(int n);
std::vector<TraceEvent> geofence_trace(int events, std::uint64_t seed);
// k intruders reported round-robin after all k have been introduced.
std::vector<TraceEvent> intruder_trace(int k, int events);

enum class Pipeline {
  InterpUnopt,
  InterpOpt,
  InterpSplit,
  EmittedUnopt,
  EmittedOpt,
  InterpSwappedPar,
  InterpPermutedIterate,
  InterpBounded,  // unoptimized monitor over ring buffers sized by the memory analysis
};
std::string_view pipeline_name(Pipeline p);
std::optional<Pipeline> parse_pipeline(std::string_view s);
bool is_emitted(Pipeline p);
std::vector<Pipeline> default_pipelines();

struct Case {
  std::uint64_t seed = 0;
  std::optional<std::size_t> index;  // position in its suite
  std::string spec_text;
  AnalyzedSpec spec;
  std::vector<TraceEvent> trace;
};
// Case i of a suite: seed derived from (suite seed, i).
Case make_case(const GenConfig& base, std::uint64_t suite_seed, std::size_t i);
std::uint64_t case_seed(std::uint64_t suite_seed, std::size_t i);

struct PipelineOutput {
  std::string log;
  bool fault = false;
  std::string fault_text;
  std::map<std::string, std::size_t> peak_stored;  // interpreter pipelines only
  bool operator==(const PipelineOutput& o) const { return log == o.log && fault == o.fault; }
};

// Knobs for deliberately broken variants.
struct Variant {
  SeededBug bug = SeededBug::None;
  bool broken_unique_assign = false;
};

PipelineOutput run_interp_pipeline(Pipeline p, const Case& c, const std::vector<TraceEvent>& trace,
                                   const Variant& v = {});

struct Divergence {
  std::size_t line = 0;  // 0-based verdict index
  std::string time;
  std::string stream;
  std::string instance;
  std::map<std::string, std::string> values;  // pipeline -> verdict value, "<none>" or "<fault>"
};

struct DiffReport {
  std::vector<std::string> pipelines;  // labels, baseline first
  std::optional<Divergence> first;  // nullopt: equal
  std::uint64_t seed = 0;
  std::optional<std::size_t> case_index;
  std::string spec_text;
  std::string trace_csv;
  std::vector<std::string> notes;  // e.g. the rule walk of a rule check
  std::vector<TraceEvent> trace;      // minimized when shrinking ran
  std::size_t original_events = 0;
  bool equal() const { return !first.has_value(); }
  std::string json() const;
};

using Runner = std::function<PipelineOutput(const std::vector<TraceEvent>&)>;

// Compares outputs pairwise against the first runner; shrinks the trace on divergence.
using LabeledRunner = std::pair<std::string, Runner>;
DiffReport diff_runners(const Case& c, const std::vector<LabeledRunner>& runners, bool shrink);
// Interpreter pipelines only; emitted pipelines need run_suite.
DiffReport diff(const Case& c, const std::vector<Pipeline>& pipelines, bool shrink = true, const Variant& v = {});

struct SuiteOptions {
  GenConfig gen;
  std::uint64_t seed = 1;
  std::size_t cases = 100;
  std::vector<Pipeline> pipelines = default_pipelines();
  std::string workdir = "harness-work";
  std::size_t bundle = 40;  // cases per emitted translation unit
  bool shrink = true;
  std::function<void(const std::string&)> progress;
};

struct SuiteResult {
  std::size_t cases = 0;
  std::size_t divergences = 0;
  std::size_t generator_errors = 0;
  std::size_t build_failures = 0;
  std::vector<DiffReport> reports;        // first few divergences
  std::vector<std::string> errors;        // generator/build diagnostics
  std::size_t memory_bound_violations = 0;  // peak stored > analyzed bound (non-window streams)
  std::vector<std::string> memory_notes;
  double seconds = 0;
  std::string json(const SuiteOptions& o) const;
};

SuiteResult run_suite(const SuiteOptions& o);

// Seeded-bug self-check: first case index at which the bug shows up, or nullopt.
struct BugHunt {
  SeededBug bug;
  std::optional<std::size_t> detected_at;
  std::optional<DiffReport> report;
};
std::string_view bug_name(SeededBug b);
BugHunt hunt_bug(SeededBug b, const GenConfig& gen, std::uint64_t seed, std::size_t max_cases);
// Broken Unique-Assign against the unoptimized baseline.
BugHunt hunt_broken_unique_assign(const GenConfig& gen, std::uint64_t seed, std::size_t max_cases);

// Per-rule soundness: random rule walks with an embedded redex for `r`, compared with the baseline.
struct RuleCheck {
  Rule rule;
  std::size_t passed = 0;
  std::size_t attempts = 0;
  std::optional<DiffReport> failure;
};
RuleCheck check_rule(Rule r, const GenConfig& gen, std::uint64_t seed, std::size_t cases);

}  // namespace streamir

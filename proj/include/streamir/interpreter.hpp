#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "streamir/memory.hpp"
#include "streamir/spec.hpp"

namespace streamir {

using InputMap = std::map<std::string, Value>;

struct TraceEvent {
  Time time;
  InputMap values;
};

struct VerdictRecord {
  Time time;
  std::string stream;
  Value instance;  // () for non-parameterized streams
  Value value;
  bool operator==(const VerdictRecord& o) const = default;
};

std::string format_verdict(const VerdictRecord& v);

struct Counters {
  std::array<std::uint64_t, kStmtKinds> stmt{};
  std::uint64_t guard_evals = 0;
  std::uint64_t iterate_visits = 0;
  std::map<std::string, std::uint64_t> iterate_visits_by_stream;
  std::uint64_t expr_evals = 0;
  std::uint64_t deadline_executions = 0;
  std::uint64_t input_executions = 0;

  std::uint64_t total_stmt() const;
  std::uint64_t executions(Stmt::Kind k) const { return stmt[static_cast<std::size_t>(k)]; }
  std::string json() const;
};

// Deliberate semantic mistakes used to validate the differential harness.
enum class SeededBug { None, WrongGetDefault, WindowCutoffStrict, DeadlineAdvancedEarly, IterateClosed, DroppedShift };

struct RunOptions {
  bool swap_par = false;                       // run Par right branch first
  std::optional<std::uint64_t> permute_seed;   // shuffle iterate order
  StmtPtr event_body;                          // split mode: body for input executions
  StmtPtr timed_body;                          // split mode: body for deadline executions
  SeededBug bug = SeededBug::None;
  // Sort key per stream for verdicts of one execution (layer of the producing task).
  std::map<std::string, int> verdict_rank;
  std::map<std::string, int> decl_index;
  std::set<std::string> inputs;  // exempt from the dropped-shift bug
};

RunOptions default_run_options(const AnalyzedSpec& a);

struct RunResult {
  std::vector<VerdictRecord> verdicts;
  Counters counters;
  std::optional<std::string> fault;
  Memory memory;
  std::map<std::string, std::size_t> peak_stored;  // max stored slots of any instance
  std::map<std::string, std::uint64_t> max_offset_read;  // deepest offset actually read, per stream
};

// Single-rule entry points.
Value eval_expr(const Memory& m, const ExprPtr& e, const Value& inst, Time t);
bool eval_guard(const Memory& m, const GuardPtr& g, const Value& inst, const InputMap& in, Time t);
Memory exec_stmt(Memory m, const StmtPtr& s, const Value& inst, const InputMap& in, Time t,
                 std::vector<VerdictRecord>* out = nullptr);
Deadlines next_deadline(const Deadlines& d, Time t, const Memory& before, const Memory& after);
Memory step(Memory m, const StmtPtr& body, const InputMap& in, Time t, std::vector<VerdictRecord>* out = nullptr);

RunResult run(const Monitor& m, Memory init, const std::vector<TraceEvent>& trace, const RunOptions& opts = {});

// CSV trace I/O. Throws TraceFormatError with the offending row.
struct TraceFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
std::vector<TraceEvent> read_trace_csv(std::istream& in, const StreamSpec& spec);
std::vector<TraceEvent> read_trace_csv_text(const std::string& text, const StreamSpec& spec);
std::string write_trace_csv(const std::vector<TraceEvent>& trace, const StreamSpec& spec);

}  // namespace streamir

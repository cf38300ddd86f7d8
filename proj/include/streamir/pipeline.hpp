#pragma once

#include <optional>
#include <set>
#include <string>

#include "streamir/interpreter.hpp"
#include "streamir/ir.hpp"
#include "streamir/memory.hpp"
#include "streamir/rewriter.hpp"
#include "streamir/spec.hpp"

namespace streamir {

// none: plain translation; stmt: statement rules; mem: memory layout plus Unnecessary-Shift; all: both.
enum class OptLevel { None, Stmt, Mem, All };
std::optional<OptLevel> parse_opt_level(std::string_view s);

struct CompileOptions {
  OptLevel level = OptLevel::All;
  std::set<Rule> only;  // non-empty: restrict the rewriter to these rules
  int max_passes = 32;
  PassObserver observe;
  bool broken_unique_assign = false;  // harness mutation
};

struct Compiled {
  Monitor monitor;
  std::optional<MemoryLayout> layout;
  RewriteResult rewrite;
};

Compiled compile(const AnalyzedSpec& a, const CompileOptions& o = {});

// Interpreter run of a compiled monitor with its storage layout.
RunResult interpret(const AnalyzedSpec& a, const Compiled& c, const std::vector<TraceEvent>& trace,
                    RunOptions opts);
RunResult interpret(const AnalyzedSpec& a, const Compiled& c, const std::vector<TraceEvent>& trace);

std::string verdict_log(const std::vector<VerdictRecord>& vs);

}  // namespace streamir

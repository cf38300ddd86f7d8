#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "streamir/interpreter.hpp"
#include "streamir/ir.hpp"
#include "streamir/lowering.hpp"
#include "streamir/spec.hpp"

namespace streamir {
inline void PrintTo(const VerdictRecord& v, std::ostream* os) { *os << format_verdict(v); }
inline void PrintTo(const Value& v, std::ostream* os) { *os << v.literal(); }
inline void PrintTo(const Time& t, std::ostream* os) { *os << format_time(t); }
}  // namespace streamir

namespace testing_support {

using namespace streamir;

inline Time at(double s) { return Time{std::llround(s * 1e9)}; }
inline Duration secs(double s) { return Duration{std::llround(s * 1e9)}; }

inline Prefix prefix(const std::vector<std::pair<double, Value>>& pairs, bool trailing_slot = false) {
  std::vector<std::pair<Time, Value>> ps;
  for (auto& [t, v] : pairs) ps.emplace_back(at(t), v);
  return Prefix::of(ps, trailing_slot);
}

// Puts one instance with the given prefix into memory.
inline void put(Memory& m, const std::string& s, const Value& inst, Prefix p, double spawned = 0) {
  m.prefixes[s].insert_or_assign(inst, Instance{std::move(p), at(spawned)});
}

inline std::string fixture_path(const std::string& name) { return std::string(STREAMIR_FIXTURES) + "/" + name; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline AnalyzedSpec fixture(const std::string& name) { return analyze(slurp(fixture_path(name)), name); }

inline std::vector<TraceEvent> events(const AnalyzedSpec& a, const std::string& csv) {
  return read_trace_csv_text(csv, a.spec);
}

// Values of one stream instance in a verdict list.
inline std::vector<std::pair<Time, Value>> verdicts_of(const std::vector<VerdictRecord>& vs, const std::string& s,
                                                      const Value& inst = Value(Unit{})) {
  std::vector<std::pair<Time, Value>> out;
  for (auto& v : vs)
    if (v.stream == s && v.instance == inst) out.emplace_back(v.time, v.value);
  return out;
}

}  // namespace testing_support

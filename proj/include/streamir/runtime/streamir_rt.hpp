// Runtime support shared by generated monitors and the interpreter's trace I/O.
// Self-contained: standard library only, so it can be shipped next to emitted code.
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace sirt {

using Time = std::int64_t;  // nanoseconds

struct Fault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- time

// Decimal seconds ("1", "0.25", "3.000000001") to nanoseconds. No exponent, no sign.
inline std::optional<Time> parse_seconds(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::size_t i = 0;
  std::int64_t whole = 0;
  bool any = false;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
    if (whole > (std::numeric_limits<std::int64_t>::max() / 10 - 10) / 1000000000) return std::nullopt;
    whole = whole * 10 + (s[i] - '0');
    ++i;
    any = true;
  }
  std::int64_t frac = 0;
  int digits = 0;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
      if (digits < 9) {
        frac = frac * 10 + (s[i] - '0');
        ++digits;
      } else if (s[i] != '0') {
        return std::nullopt;  // sub-nanosecond precision
      }
      ++i;
      any = true;
    }
  }
  if (!any || i != s.size()) return std::nullopt;
  while (digits < 9) {
    frac *= 10;
    ++digits;
  }
  return whole * 1000000000 + frac;
}

// Nanoseconds to decimal seconds, always with at least one fractional digit.
inline std::string format_seconds(Time t) {
  std::string out;
  if (t < 0) {
    out.push_back('-');
    t = -t;
  }
  out += std::to_string(t / 1000000000);
  std::int64_t frac = t % 1000000000;
  std::string f = std::to_string(frac);
  f.insert(0, 9 - f.size(), '0');
  while (f.size() > 1 && f.back() == '0') f.pop_back();
  out.push_back('.');
  out += f;
  return out;
}

// ---------------------------------------------------------------- values

inline std::string format_float(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

inline void json_escape(std::string& out, std::string_view s) {
  out.push_back('"');
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

inline void json_value(std::string& out, std::monostate) { out += "null"; }
inline void json_value(std::string& out, bool b) { out += b ? "true" : "false"; }
inline void json_value(std::string& out, std::int64_t v) { out += std::to_string(v); }
inline void json_value(std::string& out, double d) {
  if (std::isnan(d) || std::isinf(d)) {
    json_escape(out, format_float(d));
  } else {
    out += format_float(d);
  }
}
inline void json_value(std::string& out, const std::string& s) { json_escape(out, s); }

// ---------------------------------------------------------------- arithmetic

inline std::int64_t iadd(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
inline std::int64_t isub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
inline std::int64_t imul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}
inline std::int64_t ineg(std::int64_t a) { return isub(0, a); }
inline std::int64_t idiv(std::int64_t a, std::int64_t b) {
  if (b == 0) throw Fault("integer division by zero");
  if (a == std::numeric_limits<std::int64_t>::min() && b == -1) return a;
  return a / b;
}
inline std::int64_t irem(std::int64_t a, std::int64_t b) {
  if (b == 0) throw Fault("integer remainder by zero");
  if (b == -1) return 0;
  return a % b;
}
inline double frem(double a, double b) { return std::fmod(a, b); }

// ---------------------------------------------------------------- csv

struct Cell {
  std::string text;
  bool quoted = false;
};

// Splits one CSV record. Quoted cells may contain commas and doubled quotes.
inline bool split_csv(std::string_view line, std::vector<Cell>& out) {
  out.clear();
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t i = 0;
  while (true) {
    Cell c;
    if (i < line.size() && line[i] == '"') {
      c.quoted = true;
      ++i;
      while (true) {
        if (i >= line.size()) return false;
        if (line[i] == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            c.text.push_back('"');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        c.text.push_back(line[i++]);
      }
      if (i < line.size() && line[i] != ',') return false;
    } else {
      while (i < line.size() && line[i] != ',') c.text.push_back(line[i++]);
    }
    out.push_back(std::move(c));
    if (i >= line.size()) break;
    ++i;  // comma
  }
  return true;
}

inline bool cell_present(const Cell& c) { return c.quoted || !c.text.empty(); }

inline std::optional<bool> parse_bool(std::string_view s) {
  if (s == "true") return true;
  if (s == "false") return false;
  return std::nullopt;
}
inline std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  if (s.empty()) return std::nullopt;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}
inline std::optional<double> parse_float(std::string_view s) {
  double v = 0;
  if (s.empty()) return std::nullopt;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// ---------------------------------------------------------------- verdicts

using InstKey = std::variant<std::monostate, bool, std::int64_t, std::string>;

inline InstKey inst_key(std::monostate) { return std::monostate{}; }
inline InstKey inst_key(bool b) { return b; }
inline InstKey inst_key(std::int64_t v) { return v; }
inline InstKey inst_key(const std::string& s) { return s; }

struct Verdict {
  int rank;
  int decl;
  InstKey key;
  std::string line;
};

template <class V>
std::string verdict_line(Time t, std::string_view stream, const InstKey& key, const V& value) {
  std::string out = "{\"time\":";
  out += format_seconds(t);
  out += ",\"stream\":";
  json_escape(out, stream);
  out += ",\"params\":[";
  std::visit(
      [&](const auto& k) {
        if constexpr (!std::is_same_v<std::decay_t<decltype(k)>, std::monostate>) json_value(out, k);
      },
      key);
  out += "],\"value\":";
  json_value(out, value);
  out += "}";
  return out;
}

// Collects the verdicts of one body execution and emits them in canonical order.
class VerdictBuffer {
 public:
  void push(Verdict v) { pending_.push_back(std::move(v)); }
  void discard() { pending_.clear(); }
  template <class Sink>
  void flush(Sink&& sink) {
    std::stable_sort(pending_.begin(), pending_.end(), [](const Verdict& a, const Verdict& b) {
      if (a.rank != b.rank) return a.rank < b.rank;
      if (a.decl != b.decl) return a.decl < b.decl;
      return a.key < b.key;
    });
    for (auto& v : pending_) sink(v.line);
    pending_.clear();
  }

 private:
  std::vector<Verdict> pending_;
};

// Trace rows with cells reordered to the declared input order; nullopt = absent.
struct Row {
  std::size_t number;
  Time t;
  std::vector<std::optional<std::string>> cells;
};

inline std::vector<Row> read_rows(std::istream& in, const std::vector<std::string>& inputs) {
  std::vector<Row> rows;
  std::vector<int> col_of;  // csv column -> input index
  std::vector<Cell> cells;
  std::string line;
  std::size_t n = 0;
  bool header = false;
  auto err = [&](const std::string& m) { return TraceError("row " + std::to_string(n) + ": " + m); };
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header) {
      if (!split_csv(line, cells) || cells.empty() || cells[0].text != "time")
        throw err("header must start with 'time'");
      std::vector<bool> seen(inputs.size(), false);
      for (std::size_t i = 1; i < cells.size(); ++i) {
        auto it = std::find(inputs.begin(), inputs.end(), cells[i].text);
        if (it == inputs.end()) throw err("header column '" + cells[i].text + "' is not an input");
        auto k = static_cast<std::size_t>(it - inputs.begin());
        if (seen[k]) throw err("duplicate column '" + cells[i].text + "'");
        seen[k] = true;
        col_of.push_back(static_cast<int>(k));
      }
      for (std::size_t k = 0; k < inputs.size(); ++k)
        if (!seen[k]) throw err("header lacks input '" + inputs[k] + "'");
      header = true;
      continue;
    }
    if (line.empty()) continue;
    if (!split_csv(line, cells)) throw err("malformed CSV");
    if (cells.size() != col_of.size() + 1)
      throw err("expected " + std::to_string(col_of.size() + 1) + " cells, found " + std::to_string(cells.size()));
    auto t = parse_seconds(cells[0].text);
    if (!t) throw err("bad time '" + cells[0].text + "'");
    if (!rows.empty() && *t <= rows.back().t) throw err("non-monotone trace");
    Row r{n, *t, std::vector<std::optional<std::string>>(inputs.size())};
    for (std::size_t i = 0; i < col_of.size(); ++i)
      if (cell_present(cells[i + 1])) r.cells[static_cast<std::size_t>(col_of[i])] = cells[i + 1].text;
    rows.push_back(std::move(r));
  }
  if (!header && !inputs.empty()) throw TraceError("row 1: missing header");
  return rows;
}

inline bool cell_as(const Row& r, const std::string& s, bool*) {
  if (auto v = parse_bool(s)) return *v;
  throw TraceError("row " + std::to_string(r.number) + ": bad Bool value '" + s + "'");
}
inline std::int64_t cell_as(const Row& r, const std::string& s, std::int64_t*) {
  if (auto v = parse_int(s)) return *v;
  throw TraceError("row " + std::to_string(r.number) + ": bad Int64 value '" + s + "'");
}
inline double cell_as(const Row& r, const std::string& s, double*) {
  if (auto v = parse_float(s)) return *v;
  throw TraceError("row " + std::to_string(r.number) + ": bad Float64 value '" + s + "'");
}
inline std::string cell_as(const Row&, const std::string& s, std::string*) { return s; }
inline std::monostate cell_as(const Row&, const std::string&, std::monostate*) { return {}; }

struct Args {
  std::string trace;  // empty = stdin
  bool counters = false;
  long monitor = -1;
};

inline Args parse_args(int argc, char** argv) {
  Args a;
  for (int i = 1; i < argc; ++i) {
    std::string_view x = argv[i];
    if (x == "--trace" && i + 1 < argc) {
      a.trace = argv[++i];
    } else if (x == "--counters") {
      a.counters = true;
    } else if (x == "--monitor" && i + 1 < argc) {
      a.monitor = std::stol(argv[++i]);
    } else {
      throw std::invalid_argument("unknown argument '" + std::string(x) + "'");
    }
  }
  return a;
}

// ---------------------------------------------------------------- generated-code storage

enum class StoreKind { Unbounded, Ring, Single, Timed };

struct StorePolicy {
  StoreKind kind = StoreKind::Unbounded;
  std::size_t keep = 1;
  Time horizon = 0;
};

template <class T>
class Prefix {
 public:
  explicit Prefix(StorePolicy p = {}) : pol_(p) {}

  void shift(Time now) {
    if (pol_.kind == StoreKind::Single) return;
    slots_.push_back(Slot{false, 0, T{}});
    ++length_;
    prune(now);
  }
  void fill(Time t, T v) {
    if (pol_.kind == StoreKind::Single) {
      slots_.clear();
      slots_.push_back(Slot{true, t, std::move(v)});
      length_ = 1;
      return;
    }
    if (slots_.empty() || slots_.back().filled) throw Fault("value written without a reserved slot");
    slots_.back() = Slot{true, t, std::move(v)};
  }
  const T& last() const {
    if (slots_.empty() || !slots_.back().filled) throw Fault("synchronous access to a missing value");
    return slots_.back().v;
  }
  template <class F>
  T get(std::uint64_t off, F&& dft) const {
    if (length_ > off) {
      if (off >= slots_.size()) throw Fault("offset access beyond retained memory");
      const Slot& s = slots_[slots_.size() - 1 - off];
      if (!s.filled) throw Fault("offset access to an unfilled slot");
      return s.v;
    }
    return dft();
  }
  // Visits values with time >= cutoff, newest first.
  template <class F>
  void slice_rev(Time cutoff, F&& f) const {
    for (auto it = slots_.rbegin(); it != slots_.rend(); ++it) {
      if (!it->filled) throw Fault("window over an unfilled slot");
      if (it->t < cutoff) break;
      f(it->v);
    }
  }
  std::size_t stored() const { return slots_.size(); }

 private:
  struct Slot {
    bool filled;
    Time t;
    T v;
  };
  void prune(Time now) {
    if (pol_.kind == StoreKind::Ring) {
      while (slots_.size() > pol_.keep) slots_.pop_front();
    } else if (pol_.kind == StoreKind::Timed) {
      while (slots_.size() > pol_.keep && slots_.front().filled && slots_.front().t < now - pol_.horizon)
        slots_.pop_front();
    }
  }
  StorePolicy pol_;
  std::deque<Slot> slots_;
  std::uint64_t length_ = 0;
};

// Window aggregations over Prefix::slice_rev.
template <class T>
bool agg_exists(const Prefix<T>& p, Time cutoff) {
  bool r = false;
  p.slice_rev(cutoff, [&](const T& v) { r = r || static_cast<bool>(v); });
  return r;
}
template <class T>
bool agg_forall(const Prefix<T>& p, Time cutoff) {
  bool r = true;
  p.slice_rev(cutoff, [&](const T& v) { r = r && static_cast<bool>(v); });
  return r;
}
template <class T>
std::int64_t agg_count(const Prefix<T>& p, Time cutoff) {
  std::int64_t n = 0;
  p.slice_rev(cutoff, [&](const T&) { ++n; });
  return n;
}
// Sums are accumulated oldest first so float rounding matches a chronological fold.
template <class T>
std::vector<T> collect(const Prefix<T>& p, Time cutoff) {
  std::vector<T> vs;
  p.slice_rev(cutoff, [&](const T& v) { vs.push_back(v); });
  std::reverse(vs.begin(), vs.end());
  return vs;
}
inline std::int64_t agg_sum(const Prefix<std::int64_t>& p, Time cutoff) {
  std::int64_t s = 0;
  for (auto v : collect(p, cutoff)) s = iadd(s, v);
  return s;
}
inline double agg_sum(const Prefix<double>& p, Time cutoff) {
  double s = 0;
  for (auto v : collect(p, cutoff)) s += v;
  return s;
}
template <class T, class F>
T agg_min(const Prefix<T>& p, Time cutoff, F&& dft) {
  auto vs = collect(p, cutoff);
  if (vs.empty()) return dft();
  T m = vs[0];
  for (auto& v : vs)
    if (v < m) m = v;
  return m;
}
template <class T, class F>
T agg_max(const Prefix<T>& p, Time cutoff, F&& dft) {
  auto vs = collect(p, cutoff);
  if (vs.empty()) return dft();
  T m = vs[0];
  for (auto& v : vs)
    if (m < v) m = v;
  return m;
}
template <class T, class F>
double agg_avg(const Prefix<T>& p, Time cutoff, F&& dft) {
  auto vs = collect(p, cutoff);
  if (vs.empty()) return dft();
  double s = 0;
  for (auto& v : vs) s += static_cast<double>(v);
  return s / static_cast<double>(vs.size());
}
template <class T, class F>
T agg_last(const Prefix<T>& p, Time cutoff, F&& dft) {
  auto vs = collect(p, cutoff);
  if (vs.empty()) return dft();
  return vs.back();
}

// Non-parameterized stream: a single always-live instance.
template <class T>
struct Single {
  explicit Single(StorePolicy p) : prefix(p) {}
  Prefix<T> prefix;
  std::size_t peak = 0;
};

// Parameterized stream: live instances keyed by parameter value.
template <class K, class T, bool Hashed = false>
class Family {
 public:
  explicit Family(StorePolicy p) : pol_(p) {}

  bool spawn(const K& k, Time t) {
    if (live_.count(k)) return false;
    live_.emplace(k, Inst{Prefix<T>(pol_), t});
    return true;
  }
  bool close(const K& k) { return live_.erase(k) > 0; }
  bool live(const K& k) const { return live_.count(k) > 0; }
  bool any() const { return !live_.empty(); }
  Prefix<T>& at(const K& k) {
    auto it = live_.find(k);
    if (it == live_.end()) throw Fault("access to an instance that is not spawned");
    return it->second.prefix;
  }
  // Live instances ordered by (spawn time, parameter).
  std::vector<K> snapshot() const {
    std::vector<std::pair<Time, K>> v;
    v.reserve(live_.size());
    for (auto& [k, inst] : live_) v.emplace_back(inst.spawned, k);
    std::sort(v.begin(), v.end());
    std::vector<K> out;
    out.reserve(v.size());
    for (auto& e : v) out.push_back(e.second);
    return out;
  }

 private:
  struct Inst {
    Prefix<T> prefix;
    Time spawned;
  };
  using Map = std::conditional_t<Hashed, std::unordered_map<K, Inst>, std::map<K, Inst>>;
  StorePolicy pol_;
  Map live_;
};

// Parameterized stream whose spawn value is fixed: at most one instance, no map.
template <class K, class T>
class Solo {
 public:
  explicit Solo(StorePolicy p) : pol_(p), prefix_(p) {}

  bool spawn(const K& k, Time t) {
    if (key_) {
      if (*key_ == k) return false;
      throw Fault("second instance of a single-instance stream");
    }
    key_ = k;
    prefix_ = Prefix<T>(pol_);
    spawned_ = t;
    return true;
  }
  bool close(const K& k) {
    if (!key_ || !(*key_ == k)) return false;
    key_.reset();
    return true;
  }
  bool live(const K& k) const { return key_ && *key_ == k; }
  bool any() const { return key_.has_value(); }
  Prefix<T>& at(const K& k) {
    if (!live(k)) throw Fault("access to an instance that is not spawned");
    return prefix_;
  }
  std::vector<K> snapshot() const { return key_ ? std::vector<K>{*key_} : std::vector<K>{}; }

 private:
  StorePolicy pol_;
  Prefix<T> prefix_;
  std::optional<K> key_;
  Time spawned_ = 0;
};

// Liveness transitions of one execution, reduced to net changes for the deadline update.
template <class K>
class Transitions {
 public:
  void note(const K& k, bool was_live) { first_.try_emplace(k, was_live); }
  template <class LiveFn, class OnSpawn, class OnClose>
  void apply(LiveFn&& live, OnSpawn&& on_spawn, OnClose&& on_close) {
    for (auto& [k, before] : first_) {
      bool after = live(k);
      if (!before && after) on_spawn(k);
      if (before && !after) on_close(k);
    }
    first_.clear();
  }

 private:
  std::map<K, bool> first_;
};

struct Counters {
  std::uint64_t stmt[11] = {};
  std::uint64_t guard_evals = 0;
  std::uint64_t iterate_visits = 0;
  std::map<std::string, std::uint64_t> iterate_visits_by_stream;
  std::uint64_t expr_evals = 0;
  std::uint64_t deadline_executions = 0;
  std::uint64_t input_executions = 0;
};

inline const char* const kStmtKindNames[11] = {"skip", "shift", "input", "spawn", "eval", "close",
                                               "seq",  "par",   "if",    "iterate", "assign"};

inline std::string counters_json(const Counters& c) {
  std::string out = "{\"stmt\":{";
  std::uint64_t total = 0;
  for (int i = 0; i < 11; ++i) {
    if (i) out += ",";
    out += "\"";
    out += kStmtKindNames[i];
    out += "\":" + std::to_string(c.stmt[i]);
    total += c.stmt[i];
  }
  out += "},\"total_stmt\":" + std::to_string(total);
  out += ",\"guard_evals\":" + std::to_string(c.guard_evals);
  out += ",\"iterate_instance_visits\":" + std::to_string(c.iterate_visits);
  out += ",\"iterate_instance_visits_by_stream\":{";
  bool first = true;
  for (auto& [k, v] : c.iterate_visits_by_stream) {
    if (!first) out += ",";
    first = false;
    json_escape(out, k);
    out += ":" + std::to_string(v);
  }
  out += "},\"expr_evals\":" + std::to_string(c.expr_evals);
  out += ",\"deadline_executions\":" + std::to_string(c.deadline_executions);
  out += ",\"input_executions\":" + std::to_string(c.input_executions);
  out += "}";
  return out;
}

}  // namespace sirt

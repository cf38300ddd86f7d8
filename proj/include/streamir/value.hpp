#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace streamir {

// Time points and durations in nanoseconds; decimal seconds at the boundaries.
struct Time {
  std::int64_t ns = 0;
  auto operator<=>(const Time&) const = default;
};

struct Duration {
  std::int64_t ns = 0;
  auto operator<=>(const Duration&) const = default;
};

inline Time operator+(Time t, Duration d) { return Time{t.ns + d.ns}; }
inline Time operator-(Time t, Duration d) { return Time{t.ns - d.ns}; }

std::optional<Duration> parse_duration_seconds(std::string_view s);
std::string format_time(Time t);
// "10s", "0.5s"
std::string format_duration(Duration d);

enum class Type { Unit, Bool, Int64, Float64, Str };

std::string_view type_name(Type t);
std::optional<Type> parse_type(std::string_view s);

struct Unit {
  auto operator<=>(const Unit&) const = default;
};

class Value {
 public:
  Value() = default;
  Value(Unit) {}
  Value(bool b) : v_(b) {}
  Value(std::int64_t i) : v_(i) {}
  Value(int i) : v_(static_cast<std::int64_t>(i)) {}
  Value(double d) : v_(d) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(const char* s) : v_(std::string(s)) {}

  Type type() const { return static_cast<Type>(v_.index()); }
  bool is_unit() const { return v_.index() == 0; }
  bool as_bool() const;
  std::int64_t as_int() const;
  double as_float() const;
  const std::string& as_str() const;

  // Total order: by type first, then by value (floats by total order on bits for NaN).
  std::strong_ordering compare(const Value& o) const;
  bool operator==(const Value& o) const { return compare(o) == 0; }
  bool operator<(const Value& o) const { return compare(o) < 0; }

  // IR literal syntax: (), true, 3, 2.5, "s"
  std::string literal() const;
  std::string json() const;

  const std::variant<Unit, bool, std::int64_t, double, std::string>& raw() const { return v_; }

 private:
  std::variant<Unit, bool, std::int64_t, double, std::string> v_;
};

Value default_value(Type t);

}  // namespace streamir

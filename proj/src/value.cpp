#include "streamir/value.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "streamir/runtime/streamir_rt.hpp"

namespace streamir {

std::optional<Duration> parse_duration_seconds(std::string_view s) {
  auto ns = sirt::parse_seconds(s);
  if (!ns) return std::nullopt;
  return Duration{*ns};
}

std::string format_time(Time t) { return sirt::format_seconds(t.ns); }

std::string format_duration(Duration d) {
  std::string s = sirt::format_seconds(d.ns);
  if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.resize(s.size() - 2);
  return s + "s";
}

std::string_view type_name(Type t) {
  switch (t) {
    case Type::Unit: return "Unit";
    case Type::Bool: return "Bool";
    case Type::Int64: return "Int64";
    case Type::Float64: return "Float64";
    case Type::Str: return "Str";
  }
  return "?";
}

std::optional<Type> parse_type(std::string_view s) {
  if (s == "Bool") return Type::Bool;
  if (s == "Int64" || s == "UInt64" || s == "Int") return Type::Int64;
  if (s == "Float64" || s == "Float") return Type::Float64;
  if (s == "Str" || s == "String") return Type::Str;
  if (s == "Unit") return Type::Unit;
  return std::nullopt;
}

bool Value::as_bool() const {
  if (auto p = std::get_if<bool>(&v_)) return *p;
  throw std::logic_error("value is not a Bool");
}
std::int64_t Value::as_int() const {
  if (auto p = std::get_if<std::int64_t>(&v_)) return *p;
  throw std::logic_error("value is not an Int64");
}
double Value::as_float() const {
  if (auto p = std::get_if<double>(&v_)) return *p;
  throw std::logic_error("value is not a Float64");
}
const std::string& Value::as_str() const {
  if (auto p = std::get_if<std::string>(&v_)) return *p;
  throw std::logic_error("value is not a Str");
}

std::strong_ordering Value::compare(const Value& o) const {
  if (v_.index() != o.v_.index()) return v_.index() <=> o.v_.index();
  switch (v_.index()) {
    case 0: return std::strong_ordering::equal;
    case 1: return std::get<bool>(v_) <=> std::get<bool>(o.v_);
    case 2: return std::get<std::int64_t>(v_) <=> std::get<std::int64_t>(o.v_);
    case 3: {
      double a = std::get<double>(v_), b = std::get<double>(o.v_);
      if (a < b) return std::strong_ordering::less;
      if (b < a) return std::strong_ordering::greater;
      if (a == b && std::signbit(a) == std::signbit(b)) return std::strong_ordering::equal;
      return std::bit_cast<std::int64_t>(a) <=> std::bit_cast<std::int64_t>(b);
    }
    default: return std::get<std::string>(v_).compare(std::get<std::string>(o.v_)) <=> 0;
  }
}

std::string Value::literal() const {
  switch (v_.index()) {
    case 0: return "()";
    case 1: return std::get<bool>(v_) ? "true" : "false";
    case 2: return std::to_string(std::get<std::int64_t>(v_));
    case 3: return sirt::format_float(std::get<double>(v_));
    default: {
      std::string out;
      sirt::json_escape(out, std::get<std::string>(v_));
      return out;
    }
  }
}

std::string Value::json() const {
  std::string out;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Unit>)
          out += "null";
        else
          sirt::json_value(out, x);
      },
      v_);
  return out;
}

Value default_value(Type t) {
  switch (t) {
    case Type::Unit: return Value(Unit{});
    case Type::Bool: return Value(false);
    case Type::Int64: return Value(std::int64_t{0});
    case Type::Float64: return Value(0.0);
    case Type::Str: return Value(std::string());
  }
  return {};
}

}  // namespace streamir

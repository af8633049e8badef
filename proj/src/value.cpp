#include "plaway/value.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>

#include "plaway/error.hpp"

namespace plaway {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Syntax: return "syntax error";
    case ErrorKind::Unsupported: return "unsupported construct";
    case ErrorKind::Undeclared: return "undeclared variable";
    case ErrorKind::Semantic: return "semantic error";
    case ErrorKind::TypeMismatch: return "type mismatch";
    case ErrorKind::Arithmetic: return "arithmetic error";
    case ErrorKind::IterationCap: return "iteration cap exceeded";
    case ErrorKind::Oracle: return "oracle error";
    case ErrorKind::Data: return "data error";
    case ErrorKind::Internal: return "internal error";
  }
  return "error";
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

std::string_view type_name(TypeTag type) {
  switch (type) {
    case TypeTag::Int: return "int";
    case TypeTag::Float: return "float";
    case TypeTag::Text: return "text";
    case TypeTag::Bool: return "bool";
    case TypeTag::Coord: return "coord";
  }
  return "?";
}

std::optional<TypeTag> parse_type_name(std::string_view name) {
  std::string n(name);
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  if (n == "int" || n == "integer" || n == "int4" || n == "int8" || n == "bigint" ||
      n == "smallint" || n == "int2")
    return TypeTag::Int;
  if (n == "float" || n == "float8" || n == "float4" || n == "real" || n == "double precision")
    return TypeTag::Float;
  if (n == "text" || n == "varchar") return TypeTag::Text;
  if (n == "bool" || n == "boolean") return TypeTag::Bool;
  if (n == "coord") return TypeTag::Coord;
  return std::nullopt;
}

bool Value::is_coord() const {
  if (!is_tuple()) return false;
  const auto& t = as_tuple();
  return t.size() == 2 && t[0].is_int() && t[1].is_int();
}

bool operator==(const Value& a, const Value& b) {
  if (a.data_.index() != b.data_.index()) return false;
  if (a.is_float())
    return std::bit_cast<std::uint64_t>(a.as_float()) == std::bit_cast<std::uint64_t>(b.as_float());
  return a.data_ == b.data_;
}

bool has_type(const Value& value, TypeTag type) {
  if (value.is_null()) return true;
  switch (type) {
    case TypeTag::Int: return value.is_int();
    case TypeTag::Float: return value.is_float();
    case TypeTag::Text: return value.is_text();
    case TypeTag::Bool: return value.is_bool();
    case TypeTag::Coord: return value.is_coord();
  }
  return false;
}

std::optional<TypeTag> type_of(const Value& value) {
  if (value.is_int()) return TypeTag::Int;
  if (value.is_float()) return TypeTag::Float;
  if (value.is_text()) return TypeTag::Text;
  if (value.is_bool()) return TypeTag::Bool;
  if (value.is_coord()) return TypeTag::Coord;
  return std::nullopt;
}

std::string format_float(double d) {
  if (std::isnan(d)) return "NaN";
  if (std::isinf(d)) return d > 0 ? "Infinity" : "-Infinity";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, d);
  std::string s(buf, end);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string format_value(const Value& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Null>) return "NULL";
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, double>) return format_float(v);
        else if constexpr (std::is_same_v<T, std::string>) return v;
        else {
          std::string out = "(";
          for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ",";
            out += format_value(v[i]);
          }
          return out + ")";
        }
      },
      value.storage());
}

std::string format_literal(const Value& value) {
  if (value.is_text()) {
    std::string out = "'";
    for (char c : value.as_text()) {
      if (c == '\'') out += '\'';
      out += c;
    }
    return out + "'";
  }
  if (value.is_tuple()) {
    std::string out = "ROW(";
    const auto& t = value.as_tuple();
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) out += ", ";
      out += format_literal(t[i]);
    }
    return out + ")";
  }
  return format_value(value);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::optional<std::int64_t> parse_int(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return out;
}

std::optional<double> parse_float(std::string_view text) {
  text = trim(text);
  if (iequals(text, "nan")) return std::nan("");
  if (iequals(text, "infinity") || iequals(text, "inf")) return HUGE_VAL;
  if (iequals(text, "-infinity") || iequals(text, "-inf")) return -HUGE_VAL;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double out = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return out;
}

Value parse_value(std::string_view text, TypeTag type) {
  if (iequals(trim(text), "null")) return Value::null();
  auto bad = [&]() -> Value {
    fail(ErrorKind::TypeMismatch,
         "cannot read '" + std::string(text) + "' as " + std::string(type_name(type)));
  };
  switch (type) {
    case TypeTag::Int: {
      auto i = parse_int(text);
      return i ? Value::integer(*i) : bad();
    }
    case TypeTag::Float: {
      auto d = parse_float(text);
      return d ? Value::floating(*d) : bad();
    }
    case TypeTag::Text:
      return Value::text(std::string(text));
    case TypeTag::Bool: {
      auto t = trim(text);
      for (auto yes : {"t", "true", "yes", "on", "1"})
        if (iequals(t, yes)) return Value::boolean(true);
      for (auto no : {"f", "false", "no", "off", "0"})
        if (iequals(t, no)) return Value::boolean(false);
      return bad();
    }
    case TypeTag::Coord: {
      auto t = trim(text);
      if (t.size() < 5 || t.front() != '(' || t.back() != ')') return bad();
      t = t.substr(1, t.size() - 2);
      auto comma = t.find(',');
      if (comma == std::string_view::npos) return bad();
      auto x = parse_int(t.substr(0, comma));
      auto y = parse_int(t.substr(comma + 1));
      if (!x || !y) return bad();
      return Value::coord(*x, *y);
    }
  }
  return bad();
}

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::size_t text_payload(const Value& value) {
  if (value.is_text()) return utf8_length(value.as_text());
  if (value.is_tuple()) {
    std::size_t n = 0;
    for (const auto& v : value.as_tuple()) n += text_payload(v);
    return n;
  }
  return 0;
}

}  // namespace plaway

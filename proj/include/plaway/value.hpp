#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace plaway {

enum class TypeTag { Int, Float, Text, Bool, Coord };

/// Canonical PL/pgSQL spelling (int, float, text, bool, coord).
std::string_view type_name(TypeTag type);
/// Accepts the usual aliases (integer, bigint, float8, double precision, boolean, ...).
std::optional<TypeTag> parse_type_name(std::string_view name);

struct Null {
  bool operator==(const Null&) const = default;
};

/// A runtime value: Null, Bool, 64-bit Int, 64-bit Float, Text or a Tuple.
/// Coord is a 2-tuple of Int.
class Value {
 public:
  using Tuple = std::vector<Value>;
  using Storage = std::variant<Null, bool, std::int64_t, double, std::string, Tuple>;

  Value() = default;
  static Value null() { return Value(); }
  static Value boolean(bool b) { return Value(Storage(b)); }
  static Value integer(std::int64_t i) { return Value(Storage(i)); }
  static Value floating(double d) { return Value(Storage(d)); }
  static Value text(std::string s) { return Value(Storage(std::move(s))); }
  static Value tuple(Tuple t) { return Value(Storage(std::move(t))); }
  static Value coord(std::int64_t x, std::int64_t y) {
    return tuple({integer(x), integer(y)});
  }

  bool is_null() const { return std::holds_alternative<Null>(data_); }
  bool is_bool() const { return std::holds_alternative<bool>(data_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(data_); }
  bool is_float() const { return std::holds_alternative<double>(data_); }
  bool is_text() const { return std::holds_alternative<std::string>(data_); }
  bool is_tuple() const { return std::holds_alternative<Tuple>(data_); }
  bool is_coord() const;

  bool as_bool() const { return std::get<bool>(data_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(data_); }
  double as_float() const { return std::get<double>(data_); }
  const std::string& as_text() const { return std::get<std::string>(data_); }
  const Tuple& as_tuple() const { return std::get<Tuple>(data_); }

  const Storage& storage() const { return data_; }

  /// Structural equality; floats compare by bit pattern so that the
  /// differential tests are exact.
  friend bool operator==(const Value& a, const Value& b);

 private:
  explicit Value(Storage s) : data_(std::move(s)) {}
  Storage data_;
};

/// True if the value is Null or inhabits the given type.
bool has_type(const Value& value, TypeTag type);
std::optional<TypeTag> type_of(const Value& value);

/// Human/CLI form: 42, 0.5, abc, true, (3,2), NULL.
std::string format_value(const Value& value);
/// SQL literal form: 42, 0.5, 'abc', true, NULL.
std::string format_literal(const Value& value);
/// Shortest round-trip decimal text for a double.
std::string format_float(double d);

/// Parses the CLI/CSV form for a declared type. "NULL" (any case) yields Null.
Value parse_value(std::string_view text, TypeTag type);
std::optional<std::int64_t> parse_int(std::string_view text);
std::optional<double> parse_float(std::string_view text);

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view s);
/// Sum of text lengths (code points) over a value, recursing into tuples.
std::size_t text_payload(const Value& value);

}  // namespace plaway

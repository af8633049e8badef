#include "plaway/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "plaway/error.hpp"

namespace plaway {

namespace {

[[noreturn]] void arith(const std::string& msg) { fail(ErrorKind::Arithmetic, msg); }
[[noreturn]] void mismatch(const std::string& msg) { fail(ErrorKind::TypeMismatch, msg); }

std::string kind_of(const Value& v) {
  auto t = type_of(v);
  return t ? std::string(type_name(*t)) : (v.is_null() ? "NULL" : "tuple");
}

double checked_float(double r, double a, double b) {
  if (!std::isfinite(r) && std::isfinite(a) && std::isfinite(b)) arith("float value out of range");
  return r;
}

/// Code-point boundaries of a UTF-8 string, plus the end offset.
std::vector<std::size_t> char_offsets(const std::string& s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i)
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) out.push_back(i);
  out.push_back(s.size());
  return out;
}

/// Characters [from, to) by code-point index, clamped to the string.
std::string char_slice(const std::string& s, std::int64_t from, std::int64_t to) {
  auto offs = char_offsets(s);
  auto n = static_cast<std::int64_t>(offs.size()) - 1;
  from = std::clamp<std::int64_t>(from, 0, n);
  to = std::clamp<std::int64_t>(to, 0, n);
  if (to <= from) return "";
  return s.substr(offs[static_cast<std::size_t>(from)],
                  offs[static_cast<std::size_t>(to)] - offs[static_cast<std::size_t>(from)]);
}

std::int64_t int_arg(const Value& v, const char* fn) {
  if (!v.is_int()) mismatch(std::string(fn) + "() expects int, got " + kind_of(v));
  return v.as_int();
}

const std::string& text_arg(const Value& v, const char* fn) {
  if (!v.is_text()) mismatch(std::string(fn) + "() expects text, got " + kind_of(v));
  return v.as_text();
}

double float_arg(const Value& v, const char* fn) {
  if (!v.is_float()) mismatch(std::string(fn) + "() expects float, got " + kind_of(v));
  return v.as_float();
}

std::string text_of(const Value& v) {
  if (v.is_float()) {
    std::string s = format_float(v.as_float());
    if (s.size() > 2 && s.ends_with(".0")) s.resize(s.size() - 2);
    return s;
  }
  return format_value(v);
}

Value eval_call(const Call& c, const EvalContext& ctx) {
  const std::string& name = c.name;
  if (name == "random") {
    if (!ctx.oracle) fail(ErrorKind::Oracle, "random() needs an oracle");
    if (ctx.stats) ++ctx.stats->randoms;
    return Value::floating(ctx.oracle->random());
  }
  if (name == "coalesce") {
    for (const auto& a : c.args) {
      Value v = eval_expr(a, ctx);
      if (!v.is_null()) return v;
    }
    return Value::null();
  }
  std::vector<Value> args;
  args.reserve(c.args.size());
  for (const auto& a : c.args) args.push_back(eval_expr(a, ctx));

  if (name == "least" || name == "greatest") {
    Value best;
    for (const auto& v : args) {
      if (v.is_null()) continue;
      if (best.is_null()) {
        best = v;
        continue;
      }
      int cmp = compare_values(v, best);
      if (name == "least" ? cmp < 0 : cmp > 0) best = v;
    }
    return best;
  }
  if (name == "row") {
    return Value::tuple({args[0], args[1]});
  }
  for (const auto& v : args)
    if (v.is_null()) return Value::null();

  if (name == "sign") {
    if (args[0].is_int()) {
      auto i = args[0].as_int();
      return Value::integer((i > 0) - (i < 0));
    }
    double d = float_arg(args[0], "sign");
    if (std::isnan(d)) return Value::floating(d);
    return Value::floating(d > 0 ? 1.0 : d < 0 ? -1.0 : 0.0);
  }
  if (name == "abs") {
    if (args[0].is_int()) {
      auto i = args[0].as_int();
      if (i == std::numeric_limits<std::int64_t>::min()) arith("integer out of range");
      return Value::integer(i < 0 ? -i : i);
    }
    return Value::floating(std::fabs(float_arg(args[0], "abs")));
  }
  if (name == "floor") return Value::floating(std::floor(float_arg(args[0], "floor")));
  if (name == "ceil") return Value::floating(std::ceil(float_arg(args[0], "ceil")));
  if (name == "round") return Value::floating(std::nearbyint(float_arg(args[0], "round")));
  if (name == "mod") return apply_binary(BinOp::Mod, args[0], args[1]);
  if (name == "length") return Value::integer(static_cast<std::int64_t>(utf8_length(text_arg(args[0], "length"))));
  if (name == "upper") {
    std::string s = text_arg(args[0], "upper");
    for (auto& ch : s)
      if (ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
    return Value::text(s);
  }
  if (name == "substr") {
    const std::string& s = text_arg(args[0], "substr");
    std::int64_t from = int_arg(args[1], "substr");
    if (args.size() == 2) return Value::text(char_slice(s, from - 1, std::numeric_limits<std::int64_t>::max()));
    std::int64_t count = int_arg(args[2], "substr");
    if (count < 0) fail(ErrorKind::Arithmetic, "negative substring length not allowed");
    std::int64_t end;
    if (__builtin_add_overflow(from, count, &end)) end = std::numeric_limits<std::int64_t>::max();
    return Value::text(char_slice(s, from - 1, end - 1));
  }
  if (name == "left" || name == "right") {
    const std::string& s = text_arg(args[0], name.c_str());
    std::int64_t n = int_arg(args[1], name.c_str());
    auto len = static_cast<std::int64_t>(utf8_length(s));
    if (n == std::numeric_limits<std::int64_t>::min()) n = -len;
    if (name == "left") return Value::text(char_slice(s, 0, n >= 0 ? n : len + n));
    return Value::text(char_slice(s, n >= 0 ? len - n : -n, len));
  }
  fail(ErrorKind::Unsupported, "unknown function " + name + "()");
}

}  // namespace

bool truthy(const Value& v) { return v.is_bool() && v.as_bool(); }

int compare_values(const Value& a, const Value& b) {
  if (a.is_int() && b.is_int()) return (a.as_int() > b.as_int()) - (a.as_int() < b.as_int());
  if (a.is_float() && b.is_float()) {
    double x = a.as_float(), y = b.as_float();
    bool nx = std::isnan(x), ny = std::isnan(y);
    if (nx || ny) return nx - ny;
    return (x > y) - (x < y);
  }
  if (a.is_text() && b.is_text()) {
    int c = a.as_text().compare(b.as_text());
    return (c > 0) - (c < 0);
  }
  if (a.is_bool() && b.is_bool()) return a.as_bool() - b.as_bool();
  if (a.is_tuple() && b.is_tuple() && a.as_tuple().size() == b.as_tuple().size()) {
    for (std::size_t i = 0; i < a.as_tuple().size(); ++i) {
      int c = compare_values(a.as_tuple()[i], b.as_tuple()[i]);
      if (c) return c;
    }
    return 0;
  }
  mismatch("cannot compare " + kind_of(a) + " with " + kind_of(b));
}

namespace {

bool tuple_has_null(const Value& v) {
  if (v.is_null()) return true;
  if (!v.is_tuple()) return false;
  for (const auto& x : v.as_tuple())
    if (tuple_has_null(x)) return true;
  return false;
}

}  // namespace

Value apply_binary(BinOp op, const Value& a, const Value& b) {
  switch (op) {
    case BinOp::Eq:
    case BinOp::Ne:
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Gt:
    case BinOp::Ge: {
      if (tuple_has_null(a) || tuple_has_null(b)) return Value::null();
      int c = compare_values(a, b);
      bool r = op == BinOp::Eq ? c == 0 : op == BinOp::Ne ? c != 0 : op == BinOp::Lt ? c < 0
               : op == BinOp::Le ? c <= 0 : op == BinOp::Gt ? c > 0 : c >= 0;
      return Value::boolean(r);
    }
    default:
      break;
  }
  if (a.is_null() || b.is_null()) return Value::null();
  if (op == BinOp::Concat) {
    if (!a.is_text() || !b.is_text()) mismatch("|| expects text, got " + kind_of(a) + " and " + kind_of(b));
    return Value::text(a.as_text() + b.as_text());
  }
  if (a.is_int() && b.is_int()) {
    std::int64_t x = a.as_int(), y = b.as_int(), r = 0;
    switch (op) {
      case BinOp::Add:
        if (__builtin_add_overflow(x, y, &r)) arith("integer out of range");
        return Value::integer(r);
      case BinOp::Sub:
        if (__builtin_sub_overflow(x, y, &r)) arith("integer out of range");
        return Value::integer(r);
      case BinOp::Mul:
        if (__builtin_mul_overflow(x, y, &r)) arith("integer out of range");
        return Value::integer(r);
      case BinOp::Div:
        if (y == 0) arith("division by zero");
        if (x == std::numeric_limits<std::int64_t>::min() && y == -1) arith("integer out of range");
        return Value::integer(x / y);
      case BinOp::Mod:
        if (y == 0) arith("division by zero");
        if (y == -1) return Value::integer(0);
        return Value::integer(x % y);
      default:
        break;
    }
  }
  if (a.is_float() && b.is_float()) {
    double x = a.as_float(), y = b.as_float();
    switch (op) {
      case BinOp::Add: return Value::floating(checked_float(x + y, x, y));
      case BinOp::Sub: return Value::floating(checked_float(x - y, x, y));
      case BinOp::Mul: return Value::floating(checked_float(x * y, x, y));
      case BinOp::Div:
        if (y == 0.0) arith("division by zero");
        return Value::floating(checked_float(x / y, x, y));
      default:
        break;
    }
  }
  mismatch("operator " + std::string(binop_text(op)) + " does not apply to " + kind_of(a) + " and " + kind_of(b));
}

Value apply_cast(const Value& v, TypeTag type) {
  if (v.is_null() || has_type(v, type)) return v;
  switch (type) {
    case TypeTag::Text:
      return Value::text(text_of(v));
    case TypeTag::Float:
      if (v.is_int()) return Value::floating(static_cast<double>(v.as_int()));
      if (v.is_text()) return parse_value(v.as_text(), TypeTag::Float);
      break;
    case TypeTag::Int:
      if (v.is_float()) {
        double d = std::nearbyint(v.as_float());
        if (!(d >= -9223372036854775808.0 && d < 9223372036854775808.0)) arith("integer out of range");
        return Value::integer(static_cast<std::int64_t>(d));
      }
      if (v.is_bool()) return Value::integer(v.as_bool() ? 1 : 0);
      if (v.is_text()) return parse_value(v.as_text(), TypeTag::Int);
      break;
    case TypeTag::Bool:
      if (v.is_int()) return Value::boolean(v.as_int() != 0);
      if (v.is_text()) return parse_value(v.as_text(), TypeTag::Bool);
      break;
    case TypeTag::Coord:
      if (v.is_text()) return parse_value(v.as_text(), TypeTag::Coord);
      break;
  }
  mismatch("cannot cast " + kind_of(v) + " to " + std::string(type_name(type)));
}

Value eval_expr(const ExprRef& e, const EvalContext& ctx) {
  return std::visit(
      [&](const auto& n) -> Value {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Literal>) {
          return n.value;
        } else if constexpr (std::is_same_v<T, VarRef>) {
          return ctx.lookup(n);
        } else if constexpr (std::is_same_v<T, Binary>) {
          if (n.op == BinOp::And || n.op == BinOp::Or) {
            bool is_and = n.op == BinOp::And;
            Value a = eval_expr(n.lhs, ctx);
            if (!a.is_null() && !a.is_bool()) mismatch("AND/OR expects bool, got " + kind_of(a));
            if (a.is_bool() && a.as_bool() != is_and) return a;
            Value b = eval_expr(n.rhs, ctx);
            if (!b.is_null() && !b.is_bool()) mismatch("AND/OR expects bool, got " + kind_of(b));
            if (b.is_bool() && b.as_bool() != is_and) return b;
            if (a.is_null() || b.is_null()) return Value::null();
            return Value::boolean(is_and);
          }
          Value a = eval_expr(n.lhs, ctx);
          Value b = eval_expr(n.rhs, ctx);
          return apply_binary(n.op, a, b);
        } else if constexpr (std::is_same_v<T, Unary>) {
          Value a = eval_expr(n.arg, ctx);
          switch (n.op) {
            case UnOp::IsNull: return Value::boolean(a.is_null());
            case UnOp::IsNotNull: return Value::boolean(!a.is_null());
            case UnOp::Not:
              if (a.is_null()) return a;
              if (!a.is_bool()) mismatch("NOT expects bool, got " + kind_of(a));
              return Value::boolean(!a.as_bool());
            case UnOp::Neg:
              if (a.is_null()) return a;
              if (a.is_int()) {
                if (a.as_int() == std::numeric_limits<std::int64_t>::min()) arith("integer out of range");
                return Value::integer(-a.as_int());
              }
              if (a.is_float()) return Value::floating(-a.as_float());
              mismatch("cannot negate " + kind_of(a));
          }
          return a;
        } else if constexpr (std::is_same_v<T, Call>) {
          return eval_call(n, ctx);
        } else if constexpr (std::is_same_v<T, Cast>) {
          return apply_cast(eval_expr(n.arg, ctx), n.type);
        } else {
          std::vector<Value> args;
          for (const auto& a : n.args) args.push_back(eval_expr(a, ctx));
          if (!ctx.oracle) fail(ErrorKind::Oracle, "embedded query needs an oracle");
          if (ctx.stats) ++ctx.stats->queries;
          Value r = ctx.oracle->eval_query(n.id, args);
          if (ctx.queries) {
            const auto& q = ctx.queries->at(static_cast<std::size_t>(n.id - 1));
            if (!has_type(r, q.result_type))
              fail(ErrorKind::Oracle, "Q" + std::to_string(n.id) + " returned " + kind_of(r) + ", expected " +
                                          std::string(type_name(q.result_type)));
          }
          return r;
        }
      },
      e->node);
}

void check_value_type(const Value& v, TypeTag type, const std::string& what) {
  if (!has_type(v, type))
    mismatch(what + " has type " + kind_of(v) + ", expected " + std::string(type_name(type)));
}

void check_args(const std::vector<Param>& params, const std::vector<Value>& args) {
  if (params.size() != args.size())
    mismatch("expected " + std::to_string(params.size()) + " arguments, got " + std::to_string(args.size()));
  for (std::size_t i = 0; i < params.size(); ++i) check_value_type(args[i], params[i].type, "argument " + params[i].name);
}

}  // namespace plaway

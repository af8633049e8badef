#include "plaway/expr.hpp"

#include <array>
#include <cmath>

#include "plaway/error.hpp"

namespace plaway {

std::string_view binop_text(BinOp op) {
  switch (op) {
    case BinOp::Or: return "OR";
    case BinOp::And: return "AND";
    case BinOp::Eq: return "=";
    case BinOp::Ne: return "<>";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::Concat: return "||";
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
  }
  return "?";
}

ExprRef lit(Value v) { return Expr{Literal{std::move(v)}}; }
ExprRef lit_int(std::int64_t i) { return lit(Value::integer(i)); }
ExprRef var(std::string name, bool qualified) { return Expr{VarRef{std::move(name), qualified}}; }
ExprRef binary(BinOp op, ExprRef lhs, ExprRef rhs) {
  return Expr{Binary{op, std::move(lhs), std::move(rhs)}};
}
ExprRef unary(UnOp op, ExprRef arg) { return Expr{Unary{op, std::move(arg)}}; }
ExprRef call(std::string name, std::vector<ExprRef> args) {
  return Expr{Call{std::move(name), std::move(args)}};
}
ExprRef cast(ExprRef arg, TypeTag type) { return Expr{Cast{std::move(arg), type}}; }
ExprRef query(int id, std::vector<ExprRef> args) { return Expr{Query{id, std::move(args)}}; }

bool is_atom(const ExprRef& e) { return as<Literal>(e) || as<VarRef>(e); }

bool has_effects(const ExprRef& e) {
  bool found = false;
  std::function<void(const ExprRef&)> walk = [&](const ExprRef& x) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Query>) {
            found = true;
          } else if constexpr (std::is_same_v<T, Call>) {
            if (n.name == "random") found = true;
            for (const auto& a : n.args) walk(a);
          } else if constexpr (std::is_same_v<T, Binary>) {
            walk(n.lhs);
            walk(n.rhs);
          } else if constexpr (std::is_same_v<T, Unary> || std::is_same_v<T, Cast>) {
            walk(n.arg);
          }
        },
        x->node);
  };
  walk(e);
  return found;
}

namespace {

void visit_children(const ExprRef& e, const std::function<void(const ExprRef&)>& f) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Binary>) {
          f(n.lhs);
          f(n.rhs);
        } else if constexpr (std::is_same_v<T, Unary> || std::is_same_v<T, Cast>) {
          f(n.arg);
        } else if constexpr (std::is_same_v<T, Call> || std::is_same_v<T, Query>) {
          for (const auto& a : n.args) f(a);
        }
      },
      e->node);
}

}  // namespace

void for_each_var(const ExprRef& e, const std::function<void(const VarRef&)>& f) {
  if (auto v = as<VarRef>(e)) f(*v);
  visit_children(e, [&](const ExprRef& c) { for_each_var(c, f); });
}

void for_each_query(const ExprRef& e, const std::function<void(const Query&)>& f) {
  if (auto q = as<Query>(e)) f(*q);
  visit_children(e, [&](const ExprRef& c) { for_each_query(c, f); });
}

ExprRef substitute(const ExprRef& e, const std::function<ExprRef(const VarRef&)>& f) {
  auto list = [&](const std::vector<ExprRef>& xs) {
    std::vector<ExprRef> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(substitute(x, f));
    return out;
  };
  return std::visit(
      [&](const auto& n) -> ExprRef {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, VarRef>) {
          auto r = f(n);
          return r ? r : e;
        } else if constexpr (std::is_same_v<T, Literal>) {
          return e;
        } else if constexpr (std::is_same_v<T, Binary>) {
          return binary(n.op, substitute(n.lhs, f), substitute(n.rhs, f));
        } else if constexpr (std::is_same_v<T, Unary>) {
          return unary(n.op, substitute(n.arg, f));
        } else if constexpr (std::is_same_v<T, Cast>) {
          return cast(substitute(n.arg, f), n.type);
        } else if constexpr (std::is_same_v<T, Call>) {
          return call(n.name, list(n.args));
        } else {
          return query(n.id, list(n.args));
        }
      },
      e->node);
}

// ---------------------------------------------------------------------------
// Printing

namespace {

constexpr int kPrecAtom = 100;
constexpr int kPrecUnary = 9;

int binop_prec(BinOp op) {
  switch (op) {
    case BinOp::Or: return 1;
    case BinOp::And: return 2;
    case BinOp::Eq:
    case BinOp::Ne:
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Gt:
    case BinOp::Ge: return 5;
    case BinOp::Concat: return 6;
    case BinOp::Add:
    case BinOp::Sub: return 7;
    case BinOp::Mul:
    case BinOp::Div:
    case BinOp::Mod: return 8;
  }
  return 0;
}

bool is_comparison(BinOp op) { return binop_prec(op) == 5; }

struct Printed {
  std::string text;
  int prec;
};

class Printer {
 public:
  explicit Printer(const PrintHooks& hooks) : hooks_(hooks) {}

  Printed print(const ExprRef& e) {
    return std::visit([&](const auto& n) { return print_node(n); }, e->node);
  }

  std::string at_least(const ExprRef& e, int prec) {
    auto p = print(e);
    if (p.prec < prec) return "(" + p.text + ")";
    return p.text;
  }

 private:
  Printed print_node(const Literal& n) {
    if (hooks_.literal) return {hooks_.literal(n.value), kPrecAtom};
    std::string text = format_literal(n.value);
    bool negative = (n.value.is_int() && n.value.as_int() < 0) ||
                    (n.value.is_float() && std::signbit(n.value.as_float()));
    return {text, negative ? kPrecUnary : kPrecAtom};
  }

  Printed print_node(const VarRef& n) {
    if (hooks_.var) return {hooks_.var(n), kPrecAtom};
    return {n.qualified ? "r." + n.name : n.name, kPrecAtom};
  }

  Printed print_node(const Binary& n) {
    int p = binop_prec(n.op);
    int left = is_comparison(n.op) ? p + 1 : p;
    std::string text = at_least(n.lhs, left) + " " + std::string(binop_text(n.op)) + " " +
                       at_least(n.rhs, p + 1);
    return {text, p};
  }

  Printed print_node(const Unary& n) {
    switch (n.op) {
      case UnOp::Neg: {
        auto inner = print(n.arg);
        bool wrap = inner.prec < kPrecUnary || inner.text.starts_with("-") ||
                    as<Literal>(n.arg) != nullptr;
        return {"-" + (wrap ? "(" + inner.text + ")" : inner.text), kPrecUnary};
      }
      case UnOp::Not:
        return {"NOT " + at_least(n.arg, 3), 3};
      case UnOp::IsNull:
        return {at_least(n.arg, 5) + " IS NULL", 4};
      case UnOp::IsNotNull:
        return {at_least(n.arg, 5) + " IS NOT NULL", 4};
    }
    return {"?", kPrecAtom};
  }

  Printed print_node(const Call& n) {
    std::vector<std::string> args;
    for (const auto& a : n.args) args.push_back(print(a).text);
    if (hooks_.call) {
      if (auto s = hooks_.call(n, args)) return {*s, kPrecAtom};
    }
    std::string name = n.name == "row" ? "ROW" : n.name;
    return {name + "(" + join(args) + ")", kPrecAtom};
  }

  Printed print_node(const Cast& n) {
    std::string type = hooks_.type ? hooks_.type(n.type) : std::string(type_name(n.type));
    return {"CAST(" + print(n.arg).text + " AS " + type + ")", kPrecAtom};
  }

  Printed print_node(const Query& n) {
    std::vector<std::string> args;
    for (const auto& a : n.args) args.push_back(print(a).text);
    if (hooks_.query) return {hooks_.query(n, args), kPrecAtom};
    return {"Q" + std::to_string(n.id) + "[" + join(args) + "]", kPrecAtom};
  }

  static std::string join(const std::vector<std::string>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) out += ", ";
      out += xs[i];
    }
    return out;
  }

  const PrintHooks& hooks_;
};

}  // namespace

std::string print_expr(const ExprRef& e, const PrintHooks& hooks) {
  Printer p(hooks);
  return p.print(e).text;
}

// ---------------------------------------------------------------------------
// Types

namespace {

[[noreturn]] void type_error(const std::string& what) { fail(ErrorKind::TypeMismatch, what); }

std::string tname(std::optional<TypeTag> t) {
  return t ? std::string(type_name(*t)) : std::string("unknown");
}

/// Unifies two operand types, where nullopt (NULL) fits anything.
std::optional<TypeTag> unify(std::optional<TypeTag> a, std::optional<TypeTag> b,
                             const std::string& context) {
  if (!a) return b;
  if (!b) return a;
  if (*a != *b)
    type_error("operands of " + context + " have types " + tname(a) + " and " + tname(b) +
               " (use an explicit CAST)");
  return a;
}

bool fits(std::optional<TypeTag> actual, TypeTag wanted) { return !actual || *actual == wanted; }

}  // namespace

const std::array<const char*, 16> kBuiltins = {"random", "sign",   "abs",   "length",
                                               "substr", "left",   "right", "coalesce",
                                               "least",  "greatest", "mod", "floor",
                                               "ceil",   "round",  "row",   "upper"};

bool is_builtin(const std::string& name) {
  for (auto b : kBuiltins)
    if (name == b) return true;
  return false;
}

std::optional<TypeTag> builtin_type(const std::string& name,
                                    const std::vector<std::optional<TypeTag>>& args) {
  auto arity = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi)
      type_error("wrong number of arguments to " + name + "()");
  };
  auto want = [&](std::size_t i, TypeTag t) {
    if (!fits(args[i], t))
      type_error("argument " + std::to_string(i + 1) + " of " + name + "() must be " +
                 std::string(type_name(t)) + ", not " + tname(args[i]));
  };
  auto numeric = [&](std::size_t i) {
    if (args[i] && *args[i] != TypeTag::Int && *args[i] != TypeTag::Float)
      type_error(name + "() needs a numeric argument, not " + tname(args[i]));
    return args[i];
  };
  if (name == "random") {
    arity(0, 0);
    return TypeTag::Float;
  }
  if (name == "sign" || name == "abs") {
    arity(1, 1);
    return numeric(0);
  }
  if (name == "floor" || name == "ceil" || name == "round") {
    arity(1, 1);
    want(0, TypeTag::Float);
    return TypeTag::Float;
  }
  if (name == "mod") {
    arity(2, 2);
    want(0, TypeTag::Int);
    want(1, TypeTag::Int);
    return TypeTag::Int;
  }
  if (name == "length") {
    arity(1, 1);
    want(0, TypeTag::Text);
    return TypeTag::Int;
  }
  if (name == "upper") {
    arity(1, 1);
    want(0, TypeTag::Text);
    return TypeTag::Text;
  }
  if (name == "substr") {
    arity(2, 3);
    want(0, TypeTag::Text);
    for (std::size_t i = 1; i < args.size(); ++i) want(i, TypeTag::Int);
    return TypeTag::Text;
  }
  if (name == "left" || name == "right") {
    arity(2, 2);
    want(0, TypeTag::Text);
    want(1, TypeTag::Int);
    return TypeTag::Text;
  }
  if (name == "coalesce" || name == "least" || name == "greatest") {
    arity(1, 64);
    std::optional<TypeTag> t;
    for (const auto& a : args) t = unify(t, a, name + "()");
    return t;
  }
  if (name == "row") {
    arity(2, 2);
    want(0, TypeTag::Int);
    want(1, TypeTag::Int);
    return TypeTag::Coord;
  }
  fail(ErrorKind::Unsupported, "unknown function " + name + "()");
}

std::optional<TypeTag> infer_type(const ExprRef& e, const TypeLookup& vars,
                                  const QueryTypeLookup& queries) {
  return std::visit(
      [&](const auto& n) -> std::optional<TypeTag> {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Literal>) {
          return type_of(n.value);
        } else if constexpr (std::is_same_v<T, VarRef>) {
          return vars(n);
        } else if constexpr (std::is_same_v<T, Query>) {
          for (const auto& a : n.args) infer_type(a, vars, queries);
          return queries ? queries(n) : std::nullopt;
        } else if constexpr (std::is_same_v<T, Cast>) {
          auto from = infer_type(n.arg, vars, queries);
          if (from && *from != n.type) {
            bool ok = *from == TypeTag::Text || n.type == TypeTag::Text ||
                      (*from == TypeTag::Int && n.type == TypeTag::Float) ||
                      (*from == TypeTag::Float && n.type == TypeTag::Int) ||
                      (*from == TypeTag::Int && n.type == TypeTag::Bool) ||
                      (*from == TypeTag::Bool && n.type == TypeTag::Int);
            if (!ok || *from == TypeTag::Coord || n.type == TypeTag::Coord)
              type_error("cannot cast " + tname(from) + " to " + std::string(type_name(n.type)));
          }
          return n.type;
        } else if constexpr (std::is_same_v<T, Unary>) {
          auto a = infer_type(n.arg, vars, queries);
          switch (n.op) {
            case UnOp::Neg:
              if (a && *a != TypeTag::Int && *a != TypeTag::Float)
                type_error("cannot negate a " + tname(a));
              return a;
            case UnOp::Not:
              if (!fits(a, TypeTag::Bool)) type_error("NOT needs a bool, not " + tname(a));
              return TypeTag::Bool;
            default:
              return TypeTag::Bool;
          }
        } else if constexpr (std::is_same_v<T, Call>) {
          std::vector<std::optional<TypeTag>> args;
          for (const auto& a : n.args) args.push_back(infer_type(a, vars, queries));
          return builtin_type(n.name, args);
        } else {
          auto a = infer_type(n.lhs, vars, queries);
          auto b = infer_type(n.rhs, vars, queries);
          std::string op = "'" + std::string(binop_text(n.op)) + "'";
          switch (n.op) {
            case BinOp::Or:
            case BinOp::And:
              if (!fits(a, TypeTag::Bool) || !fits(b, TypeTag::Bool))
                type_error(op + " needs bool operands, not " + tname(a) + " and " + tname(b));
              return TypeTag::Bool;
            case BinOp::Eq:
            case BinOp::Ne:
            case BinOp::Lt:
            case BinOp::Le:
            case BinOp::Gt:
            case BinOp::Ge:
              unify(a, b, op);
              return TypeTag::Bool;
            case BinOp::Concat:
              if (!fits(a, TypeTag::Text) || !fits(b, TypeTag::Text))
                type_error(op + " needs text operands, not " + tname(a) + " and " + tname(b));
              return TypeTag::Text;
            case BinOp::Mod:
              if (!fits(a, TypeTag::Int) || !fits(b, TypeTag::Int))
                type_error(op + " needs int operands, not " + tname(a) + " and " + tname(b));
              return TypeTag::Int;
            default: {
              auto t = unify(a, b, op);
              if (t && *t != TypeTag::Int && *t != TypeTag::Float)
                type_error(op + " needs numeric operands, not " + tname(t));
              return t ? t : std::optional<TypeTag>(TypeTag::Int);
            }
          }
        }
      },
      e->node);
}

}  // namespace plaway

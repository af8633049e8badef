#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "plaway/box.hpp"
#include "plaway/value.hpp"

namespace plaway {

enum class BinOp { Or, And, Eq, Ne, Lt, Le, Gt, Ge, Concat, Add, Sub, Mul, Div, Mod };
enum class UnOp { Neg, Not, IsNull, IsNotNull };

std::string_view binop_text(BinOp op);

struct Expr;
using ExprRef = Box<Expr>;

struct Literal {
  Value value;
  bool operator==(const Literal&) const = default;
};

/// A variable read. `qualified` marks a read of the current run row (`r.x`).
struct VarRef {
  std::string name;
  bool qualified = false;
  bool operator==(const VarRef&) const = default;
};

struct Binary {
  BinOp op;
  ExprRef lhs, rhs;
  bool operator==(const Binary&) const = default;
};

struct Unary {
  UnOp op;
  ExprRef arg;
  bool operator==(const Unary&) const = default;
};

/// Builtin function application (random, sign, substr, row, ...).
struct Call {
  std::string name;
  std::vector<ExprRef> args;
  bool operator==(const Call&) const = default;
};

struct Cast {
  ExprRef arg;
  TypeTag type;
  bool operator==(const Cast&) const = default;
};

/// Embedded query occurrence; args line up with the template's parameters.
struct Query {
  int id;
  std::vector<ExprRef> args;
  bool operator==(const Query&) const = default;
};

struct Expr {
  std::variant<Literal, VarRef, Binary, Unary, Call, Cast, Query> node;
  bool operator==(const Expr&) const = default;
};

ExprRef lit(Value v);
ExprRef lit_int(std::int64_t i);
ExprRef var(std::string name, bool qualified = false);
ExprRef binary(BinOp op, ExprRef lhs, ExprRef rhs);
ExprRef unary(UnOp op, ExprRef arg);
ExprRef call(std::string name, std::vector<ExprRef> args);
ExprRef cast(ExprRef arg, TypeTag type);
ExprRef query(int id, std::vector<ExprRef> args);

template <class T>
const T* as(const ExprRef& e) {
  return std::get_if<T>(&e->node);
}

/// Literal or variable read.
bool is_atom(const ExprRef& e);
/// True if evaluating the expression may consume oracle state (queries, random()).
bool has_effects(const ExprRef& e);

/// Applies `f` to every variable read, outermost first.
void for_each_var(const ExprRef& e, const std::function<void(const VarRef&)>& f);
void for_each_query(const ExprRef& e, const std::function<void(const Query&)>& f);
/// Rebuilds the tree, replacing each variable read by `f(ref)` (or keeping it
/// when `f` returns an empty ExprRef).
ExprRef substitute(const ExprRef& e, const std::function<ExprRef(const VarRef&)>& f);

/// Hooks that let each stage render variables, queries and builtins its own way.
struct PrintHooks {
  std::function<std::string(const VarRef&)> var;
  std::function<std::string(const Query&, const std::vector<std::string>& args)> query;
  /// Returns nullopt to fall back to `name(args)`.
  std::function<std::optional<std::string>(const Call&, const std::vector<std::string>& args)> call;
  std::function<std::string(TypeTag)> type;
  std::function<std::string(const Value&)> literal;
};

std::string print_expr(const ExprRef& e, const PrintHooks& hooks = {});

/// Static result type; nullopt for an untyped NULL literal.
using TypeLookup = std::function<std::optional<TypeTag>(const VarRef&)>;
using QueryTypeLookup = std::function<std::optional<TypeTag>(const Query&)>;
std::optional<TypeTag> infer_type(const ExprRef& e, const TypeLookup& vars,
                                  const QueryTypeLookup& queries);

/// Builtin signature check; returns the result type or throws TypeMismatch.
std::optional<TypeTag> builtin_type(const std::string& name,
                                    const std::vector<std::optional<TypeTag>>& args);
bool is_builtin(const std::string& name);

}  // namespace plaway

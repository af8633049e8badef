#pragma once

#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "plaway/anf.hpp"

namespace plaway::udf {

struct UExpr;
using UExprRef = Box<UExpr>;

struct CaseArm {
  ExprRef guard;
  UExprRef body;
  int label = -1;  ///< dispatch constant for `fn = L<label>` arms, else -1
  bool operator==(const CaseArm&) const = default;
};

/// CASE WHEN ... [ELSE ...] END; a dispatch case has no ELSE.
struct Case {
  std::vector<CaseArm> arms;
  UExprRef otherwise;
  bool operator==(const Case&) const = default;
};

struct Binding {
  std::string var;
  ExprRef value;
  bool operator==(const Binding&) const = default;
};

struct LetChain {
  std::vector<Binding> bindings;
  UExprRef body;
  bool operator==(const LetChain&) const = default;
};

/// Recursive call of the worker; `args` fill every slot.
struct RecCall {
  int target = 0;
  std::vector<ExprRef> args;
  bool operator==(const RecCall&) const = default;
};

struct BaseCase {
  ExprRef value;
  bool operator==(const BaseCase&) const = default;
};

/// Run-table row that replaces a leaf: (true, (target, args), NULL) or
/// (false, NULL, result).
struct RowLeaf {
  bool call = false;
  int target = 0;
  std::vector<ExprRef> args;
  ExprRef result;
  bool operator==(const RowLeaf&) const = default;
};

struct UExpr {
  std::variant<Case, LetChain, RecCall, BaseCase, RowLeaf> node;
  bool operator==(const UExpr&) const = default;
};

struct Slot {
  std::string name;
  TypeTag type;
  bool operator==(const Slot&) const = default;
};

struct Udf {
  std::string name;         ///< wrapper, same signature as the source function
  std::string worker_name;  ///< `name*`
  std::vector<Param> params;
  TypeTag return_type = TypeTag::Int;
  bool has_fn = false;        ///< worker takes the dispatch parameter `fn`
  std::vector<int> targets;   ///< dispatch constants (source labels)
  std::vector<Slot> slots;    ///< unified worker parameters, `fn` excluded
  RecCall initial_call;       ///< wrapper body, args over wrapper params
  UExprRef body;
  std::vector<QueryTemplate> queries;
  std::map<std::string, TypeTag> var_types;

  std::size_t slot_index(const std::string& name) const;  ///< npos if absent
  bool operator==(const Udf&) const = default;
};

/// Letrec functions become dispatch targets of one worker. A top-level body
/// that is more than one tail call with atomic arguments becomes target L0.
Udf defunctionalize(const anf::Program& p);

/// Outcome of evaluating the worker body once.
struct Step {
  bool call = false;
  int target = 0;
  std::vector<Value> args;
  Value result;
};

/// Evaluates `body` for one activation. Qualified reads and reads of unbound
/// names see the activation's slots; other reads see enclosing lets first.
Step evaluate_step(const Udf& u, const UExprRef& body, int fn, const std::vector<Value>& slots,
                   const EvalContext& base);

/// Slot values of the initial call for the given wrapper arguments.
std::vector<Value> initial_slots(const Udf& u, const std::vector<Value>& args, const EvalContext& base);

Value interpret_udf(const Udf& u, const std::vector<Value>& args, QueryOracle& oracle,
                    const RunOptions& options = {}, RunStats* stats = nullptr);

/// Leaf and expression rendering used by render_expr.
struct RenderHooks {
  /// `lets` holds the let-bound names in scope.
  std::function<std::string(const ExprRef&, const std::vector<std::string>& lets)> expr;
  std::function<std::string(int label)> guard;
  std::function<std::vector<std::string>(const UExpr&, const std::vector<std::string>& lets)> leaf;
};

/// Lays out a worker body with CASE/WHEN and LEFT JOIN LATERAL let chains.
/// `alias` numbers the derived tables `_0`, `_1`, ... across the body.
std::vector<std::string> render_expr(const UExprRef& e, const RenderHooks& hooks, int& alias,
                                     std::vector<std::string> lets = {});

std::string dump(const Udf& u);

}  // namespace plaway::udf

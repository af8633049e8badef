#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "plaway/ast.hpp"
#include "plaway/expr.hpp"
#include "plaway/oracle.hpp"

namespace plaway {

struct RunOptions {
  std::uint64_t iteration_cap = 1'000'000;
};

/// Counters every evaluator fills in; fields that do not apply stay zero.
struct RunStats {
  std::uint64_t iterations = 0;   ///< loop iterations (ast)
  std::uint64_t jumps = 0;        ///< gotos taken (ssa)
  std::uint64_t tail_calls = 0;   ///< tail calls / recursive calls (anf, udf)
  std::uint64_t activations = 0;  ///< worker invocations
  std::uint64_t max_depth = 0;    ///< deepest simultaneous activation count
  std::uint64_t queries = 0;
  std::uint64_t randoms = 0;
};

struct EvalContext {
  std::function<Value(const VarRef&)> lookup;
  QueryOracle* oracle = nullptr;
  const std::vector<QueryTemplate>* queries = nullptr;
  RunStats* stats = nullptr;
};

Value eval_expr(const ExprRef& e, const EvalContext& ctx);

/// SQL truth: only a non-NULL true counts.
bool truthy(const Value& v);

Value apply_binary(BinOp op, const Value& a, const Value& b);
Value apply_cast(const Value& v, TypeTag type);
/// Three-way comparison with NaN above every number; both operands non-NULL.
int compare_values(const Value& a, const Value& b);

void check_args(const std::vector<Param>& params, const std::vector<Value>& args);
void check_value_type(const Value& v, TypeTag type, const std::string& what);

}  // namespace plaway

#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "plaway/ast.hpp"
#include "plaway/eval.hpp"
#include "plaway/oracle.hpp"

namespace plaway::ssa {

struct PhiArg {
  int pred;  ///< label of the predecessor block
  ExprRef value;
  bool operator==(const PhiArg&) const = default;
};

struct Phi {
  std::string target;
  std::vector<PhiArg> args;
  bool operator==(const Phi&) const = default;
};

struct Assign {
  std::string target;
  ExprRef value;
  bool operator==(const Assign&) const = default;
};

struct Goto {
  int target;
  bool operator==(const Goto&) const = default;
};

struct Ret {
  ExprRef value;
  bool operator==(const Ret&) const = default;
};

/// A conditional branch arm: a jump or an inline return.
using Arm = std::variant<Goto, Ret>;

struct CondGoto {
  ExprRef cond;
  Arm then_arm, else_arm;
  bool operator==(const CondGoto&) const = default;
};

using Terminator = std::variant<Goto, CondGoto, Ret>;

struct Block {
  int label;
  std::vector<Phi> phis;
  std::vector<Assign> assigns;
  Terminator term;
  bool operator==(const Block&) const = default;
};

struct Program {
  std::string name;
  std::vector<Param> params;
  TypeTag return_type = TypeTag::Int;
  std::vector<Block> blocks;
  int entry = 0;
  std::map<std::string, TypeTag> var_types;
  std::map<std::string, std::string> var_bases;  ///< SSA name -> source variable
  std::vector<QueryTemplate> queries;

  const Block& block(int label) const;
  bool operator==(const Program&) const = default;
};

/// Jump targets of a terminator, in arm order.
std::vector<int> successors(const Terminator& t);
/// Predecessor labels of every block, in block order.
std::map<int, std::vector<int>> predecessors(const Program& p);
/// Immediate dominators (entry maps to itself) of reachable blocks.
std::map<int, int> dominators(const Program& p);
bool dominates(const std::map<int, int>& idom, int a, int b);

Program lower_to_ssa(const FunctionAst& ast);
Program simplify_ssa(const Program& p);
/// Renames SSA variables to `base` or `base_k` in definition order.
Program name_variables(const Program& p);

/// Single assignment, dominance of uses, φ arity; empty when valid.
std::vector<std::string> verify(const Program& p);

Value interpret_ssa(const Program& p, const std::vector<Value>& args, QueryOracle& oracle,
                    const RunOptions& options = {}, RunStats* stats = nullptr);

std::string dump(const Program& p);

/// Renders an expression with embedded queries as `Qk[args]`.
std::string print_ir_expr(const ExprRef& e);

}  // namespace plaway::ssa

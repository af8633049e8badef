#pragma once

#include <vector>

#include "plaway/ast.hpp"
#include "plaway/eval.hpp"
#include "plaway/oracle.hpp"

namespace plaway {

/// Reference semantics: statement-by-statement interpretation of the AST.
Value interpret_ast(const FunctionAst& ast, const std::vector<Value>& args, QueryOracle& oracle,
                    const RunOptions& options = {}, RunStats* stats = nullptr);

}  // namespace plaway

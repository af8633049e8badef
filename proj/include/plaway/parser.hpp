#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "plaway/ast.hpp"

namespace plaway {

/// Parses one CREATE FUNCTION ... LANGUAGE plpgsql definition, resolves
/// scopes and checks types.
FunctionAst parse_function(std::string_view source);

std::vector<QueryTemplate> extract_embedded_queries(const FunctionAst& ast);

/// Canonical source text; parse_function(print_function(f)) == f.
std::string print_function(const FunctionAst& ast);

/// Renders an expression in source syntax, embedded queries as SQL text.
std::string print_source_expr(const ExprRef& e, const std::vector<QueryTemplate>& queries);

}  // namespace plaway

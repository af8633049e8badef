#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "plaway/expr.hpp"
#include "plaway/value.hpp"

namespace plaway {

struct Stmt;
using StmtList = std::vector<Stmt>;

struct Assign {
  std::string target;
  ExprRef value;
  bool operator==(const Assign&) const = default;
};

struct If {
  ExprRef cond;
  StmtList then_branch, else_branch;
  bool operator==(const If&) const = default;
};

struct ForRange {
  std::optional<std::string> label;
  std::string var;
  ExprRef lo, hi;
  StmtList body;
  bool operator==(const ForRange&) const = default;
};

struct While {
  std::optional<std::string> label;
  ExprRef cond;
  StmtList body;
  bool operator==(const While&) const = default;
};

struct Loop {
  std::optional<std::string> label;
  StmtList body;
  bool operator==(const Loop&) const = default;
};

/// EXIT [label] [WHEN cond]; `cond` is empty for an unconditional exit.
struct Exit {
  std::optional<std::string> label;
  ExprRef cond;
  bool operator==(const Exit&) const = default;
};

struct Continue {
  std::optional<std::string> label;
  ExprRef cond;
  bool operator==(const Continue&) const = default;
};

struct Return {
  ExprRef value;
  bool operator==(const Return&) const = default;
};

struct Stmt {
  std::variant<Assign, If, ForRange, While, Loop, Exit, Continue, Return> node;
  bool operator==(const Stmt&) const = default;
};

struct Param {
  std::string name;
  TypeTag type;
  bool operator==(const Param&) const = default;
};

struct Decl {
  std::string name;
  TypeTag type;
  ExprRef init;  ///< empty: starts out NULL
  bool operator==(const Decl&) const = default;
};

/// Verbatim SQL of one embedded query, split around its free variables.
struct QueryTemplate {
  struct Hole {
    std::size_t param;
    bool operator==(const Hole&) const = default;
  };
  using Segment = std::variant<std::string, Hole>;

  int id = 0;
  std::vector<Segment> segments;
  std::vector<std::string> params;
  TypeTag result_type = TypeTag::Int;

  /// Source text with `:name` placeholders.
  std::string text() const;
  /// Text with each hole replaced by `args[param]`.
  std::string render(const std::vector<std::string>& args) const;

  bool operator==(const QueryTemplate&) const = default;
};

struct FunctionAst {
  std::string name;
  std::vector<Param> params;
  std::vector<Decl> decls;
  StmtList body;
  TypeTag return_type = TypeTag::Int;
  std::vector<QueryTemplate> queries;

  bool operator==(const FunctionAst&) const = default;
};

/// Collapses whitespace runs outside literals; text with comments is kept as is.
std::string compact_sql(const std::string& text);

}  // namespace plaway

#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "plaway/ssa.hpp"

namespace plaway::anf {

struct Term;
using TermRef = Box<Term>;

struct Let {
  std::string var;
  ExprRef value;
  TermRef body;
  bool operator==(const Let&) const = default;
};

struct Function {
  std::string name;  ///< `L<label>`
  int label = 0;
  std::vector<std::string> params;  ///< φ targets, then lifted free variables
  TermRef body;
  bool operator==(const Function&) const = default;
};

struct LetRec {
  std::vector<Function> functions;
  TermRef body;
  bool operator==(const LetRec&) const = default;
};

struct If {
  ExprRef cond;
  TermRef then_branch, else_branch;
  bool operator==(const If&) const = default;
};

struct TailCall {
  std::string function;
  std::vector<ExprRef> args;
  bool operator==(const TailCall&) const = default;
};

struct Result {
  ExprRef value;
  bool operator==(const Result&) const = default;
};

struct Term {
  std::variant<Let, LetRec, If, TailCall, Result> node;
  bool operator==(const Term&) const = default;
};

struct Program {
  std::string name;
  std::vector<Param> params;
  TypeTag return_type = TypeTag::Int;
  TermRef body;
  std::map<std::string, TypeTag> var_types;
  std::vector<QueryTemplate> queries;
  bool operator==(const Program&) const = default;
};

/// Labels become letrec-bound functions, gotos tail calls and φs parameters;
/// free variables are lambda-lifted into explicit parameters.
Program from_ssa(const ssa::Program& p);

/// Whether the top-level body (under its letrecs) is one tail call with
/// atomic arguments, i.e. needs no activation of its own.
bool entry_is_trivial(const Program& p);

/// Every function in the program, outermost first.
std::vector<const Function*> functions(const Program& p);

/// Calls to letrec functions outside tail position, arity mismatches and
/// calls to unknown functions; empty when the program is well formed.
std::vector<std::string> check_tail_positions(const Program& p);

Value interpret_anf(const Program& p, const std::vector<Value>& args, QueryOracle& oracle,
                    const RunOptions& options = {}, RunStats* stats = nullptr);

std::string dump(const Program& p);

}  // namespace plaway::anf

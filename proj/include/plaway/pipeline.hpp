#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "plaway/corpus.hpp"
#include "plaway/error.hpp"
#include "plaway/simulate.hpp"

namespace plaway::pipeline {

enum class Stage { Ast, Ssa, Anf, Udf, Sql };
enum class Engine { Ast, Ssa, Anf, Udf, CteRecursive, CteIterate };

std::optional<Stage> parse_stage(std::string_view s);
std::optional<Engine> parse_engine(std::string_view s);
std::string_view engine_name(Engine e);
const std::vector<Engine>& all_engines();

/// Every intermediate form of one function.
struct Compiled {
  FunctionAst ast;
  ssa::Program ssa;
  anf::Program anf;
  udf::Udf udf;
};

/// parse → SSA → ANF → UDF, checking each stage's well-formedness.
Compiled compile(const FunctionAst& ast);

/// Dump of a stage, or the emitted SQL for Stage::Sql.
std::string render(const Compiled& c, Stage stage, sqlgen::Dialect dialect = sqlgen::Dialect::Postgres,
                   sqlgen::Mode mode = sqlgen::Mode::Recursive);

/// Result or failure of one evaluator run.
struct Outcome {
  bool ok = false;
  Value value;
  ErrorKind error_kind = ErrorKind::Internal;
  std::string error;
  RunStats stats;
  std::optional<sim::SimResult> sim;
  std::vector<OracleCall> calls;
};

Outcome run_engine(const Compiled& c, Engine engine, const std::vector<Value>& args, QueryOracle& oracle,
                   sqlgen::Dialect dialect = sqlgen::Dialect::Postgres, const RunOptions& options = {});

/// Same value (bit-exact) or same error kind, and the same oracle call log.
bool agree(const Outcome& a, const Outcome& b);

std::string describe(const Outcome& o);

struct Divergence {
  std::size_t trial = 0;
  std::uint32_t seed = 0;
  std::vector<Value> args;
  std::string report;
};

struct DiffReport {
  std::size_t trials = 0;
  std::vector<Divergence> divergences;
};

/// Runs `trials` random argument vectors through all six engines plus the
/// sqlite-layout simulation. Trial t uses oracle seed `seed + t`.
DiffReport diff(const corpus::Entry& e, const Compiled& c, std::size_t trials, std::uint32_t seed);

/// Wrapper arguments bound into `:name` placeholders as SQL literals.
std::string bind_arguments(const sqlgen::SqlQuery& q, const udf::Udf& u, const std::vector<Value>& args);

}  // namespace plaway::pipeline

#pragma once

#include <cstdint>
#include <vector>

#include "plaway/sqlgen.hpp"

namespace plaway::sim {

/// One row of the run table. `fn` is meaningful only for call rows of a
/// worker with a dispatch parameter.
struct RunRow {
  bool call = false;
  int fn = 0;
  std::vector<Value> args;  ///< one per slot; all NULL in a base row
  Value result;             ///< NULL in a call row
};

struct SimOptions {
  sqlgen::Mode mode = sqlgen::Mode::Recursive;
  sqlgen::Dialect dialect = sqlgen::Dialect::Postgres;
  std::uint64_t iteration_cap = 1'000'000;  ///< on rows emitted after the seed
  bool keep_trace = false;
};

struct SimResult {
  Value value;
  std::uint64_t rows_emitted = 0;
  std::uint64_t max_working_set = 0;
  std::uint64_t retained_cells = 0;
  std::vector<RunRow> trace;  ///< every emitted row, when requested
  RunStats stats;
};

/// Fixpoint evaluation of the emitted CTE: the seed row, then one successor
/// per call row computed from the adapted worker body, until a base row.
/// Recursive mode retains every row; iterate mode only the most recent one.
/// On sqlite the rows travel in their flattened column layout.
SimResult simulate_cte(const udf::Udf& u, const std::vector<Value>& args, QueryOracle& oracle,
                       const SimOptions& options = {});

/// Run-table columns of a row in the dialect's layout, `"call?"` first.
std::vector<Value> encode_row(const udf::Udf& u, const RunRow& row, sqlgen::Dialect dialect);
RunRow decode_row(const udf::Udf& u, const std::vector<Value>& columns, sqlgen::Dialect dialect);

}  // namespace plaway::sim

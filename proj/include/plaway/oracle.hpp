#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "plaway/value.hpp"

namespace plaway {

/// One step of the linear congruential generator behind random():
/// state' = (1664525 * state + 1013904223) mod 2^32, value = state' / 2^32.
std::pair<double, std::uint32_t> next_random(std::uint32_t state);

struct Column {
  std::string name;
  TypeTag type;
  bool key = false;
};

struct Table {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::vector<Value>> rows;

  std::size_t column(const std::string& name) const;
};

using Tables = std::map<std::string, Table>;

/// Reads every `*.csv` file in `dir` as one table named after the file.
/// Header cells are `name:type` or `name:type:key`.
Tables load_tables(const std::filesystem::path& dir);
Table parse_csv_table(const std::string& name, const std::string& text, const std::string& origin);

struct OracleCall {
  enum class Kind { Query, Random };
  Kind kind;
  int query_id = 0;
  std::vector<Value> params;
  Value result;
};

/// Stands in for the function's embedded queries and random().
class QueryOracle {
 public:
  virtual ~QueryOracle() = default;

  Value eval_query(int id, const std::vector<Value>& params);
  double random();

  const std::vector<OracleCall>& call_log() const { return log_; }
  std::size_t query_count() const;
  std::size_t random_count() const;

 protected:
  virtual Value do_query(int id, const std::vector<Value>& params) = 0;
  virtual double do_random() = 0;

 private:
  std::vector<OracleCall> log_;
};

using Evaluator = std::function<Value(const Tables&, const std::vector<Value>&)>;
using Evaluators = std::map<int, Evaluator>;

class TableOracle : public QueryOracle {
 public:
  TableOracle(std::shared_ptr<const Tables> tables, Evaluators evaluators, std::uint32_t seed);

  const Tables& tables() const { return *tables_; }
  std::uint32_t rng_state() const { return state_; }

 protected:
  Value do_query(int id, const std::vector<Value>& params) override;
  double do_random() override;

 private:
  std::shared_ptr<const Tables> tables_;
  Evaluators evaluators_;
  std::uint32_t state_;
};

}  // namespace plaway

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "plaway/ast.hpp"
#include "plaway/oracle.hpp"

namespace plaway::corpus {

/// A pinned run: arguments, oracle seed and the value every stage must return.
struct Expectation {
  std::vector<Value> args;
  std::uint32_t seed = 0;
  Value expected;
};

/// Per-function registrations that cannot be read from disk.
struct Kit {
  Evaluators evaluators;
  /// Argument vector for a differential trial.
  std::function<std::vector<Value>(const Tables&, std::mt19937_64&)> random_args;
  /// Arguments that make the function iterate about `n` times.
  std::function<std::vector<Value>(std::int64_t n)> bench_args;
  /// Load-time consistency check of the table data.
  std::function<void(const Tables&)> validate;
};

struct Entry {
  std::string name;
  std::filesystem::path dir;
  std::string source;
  FunctionAst ast;
  std::shared_ptr<const Tables> tables;
  Kit kit;
  std::vector<Expectation> expectations;

  TableOracle oracle(std::uint32_t seed) const;
};

/// Corpus root compiled into the binaries; PLAWAY_CORPUS overrides it.
std::filesystem::path default_root();

/// walk, fibonacci, parse, traverse.
std::vector<std::string> entry_names();

/// Kit registered for a corpus function; throws for unknown names.
Kit kit_for(const std::string& name);

/// Loads `<root>/<name>/{function.sql, data/*.csv, expect.json}`. A missing
/// data directory or expectation file means no tables or no pins.
Entry load_entry(const std::string& name, const std::filesystem::path& root = default_root());

std::vector<Entry> corpus_entries(const std::filesystem::path& root = default_root());

/// Loads a function outside the corpus; queries get no evaluators.
Entry load_file(const std::filesystem::path& file, const std::filesystem::path& data_dir = {});

std::vector<Expectation> read_expectations(const std::string& json, const FunctionAst& ast);
std::string write_expectations(const std::vector<Expectation>& pins, const FunctionAst& ast);

/// JSON form of a value: null, bool, number, string, or [x, y] for coords.
std::string value_json(const Value& v);

}  // namespace plaway::corpus

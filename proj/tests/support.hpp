#pragma once

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "plaway/corpus.hpp"
#include "plaway/parser.hpp"
#include "plaway/pipeline.hpp"

namespace plaway::testing {

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::filesystem::path golden_dir() { return PLAWAY_GOLDEN_DIR; }
inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(PLAWAY_FIXTURE_DIR) / name;
}

/// Compares against tests/golden/<name>; UPDATE_GOLDEN=1 rewrites the file.
inline void expect_golden(const std::string& name, const std::string& actual) {
  auto path = golden_dir() / name;
  if (std::getenv("UPDATE_GOLDEN")) {
    std::ofstream(path, std::ios::binary) << actual;
    return;
  }
  ASSERT_TRUE(std::filesystem::exists(path)) << "missing golden file " << path;
  EXPECT_EQ(read_text(path), actual) << "golden mismatch for " << name;
}

inline FunctionAst parse_text(const std::string& body) { return parse_function(body); }

inline pipeline::Compiled compile_text(const std::string& source) {
  return pipeline::compile(parse_function(source));
}

/// Oracle for functions without queries or randomness.
class NoOracle : public QueryOracle {
 protected:
  Value do_query(int id, const std::vector<Value>&) override {
    ADD_FAILURE() << "unexpected query Q" << id;
    return Value::null();
  }
  double do_random() override { return 0.5; }
};

inline std::int64_t fib_oracle(std::int64_t n) {
  std::int64_t a = 0, b = 1;
  for (std::int64_t i = 0; i < n; ++i) {
    std::int64_t t = a + b;
    a = b;
    b = t;
  }
  return a;
}

}  // namespace plaway::testing

#include "support.hpp"

#include "plaway/error.hpp"
#include "plaway/interp.hpp"

namespace plaway {
namespace {

TEST(Corpus, EntryOrder) {
  std::vector<std::string> names;
  for (const auto& e : corpus::corpus_entries()) names.push_back(e.name);
  EXPECT_EQ(names, (std::vector<std::string>{"walk", "fibonacci", "parse", "traverse"}));
}

TEST(Corpus, WalkDataAndFibonacciWithout) {
  auto walk = corpus::load_entry("walk");
  EXPECT_EQ(walk.tables->size(), 3u);
  EXPECT_TRUE(walk.tables->count("cells"));
  EXPECT_TRUE(walk.tables->count("policy"));
  EXPECT_TRUE(walk.tables->count("actions"));
  auto fib = corpus::load_entry("fibonacci");
  EXPECT_TRUE(fib.tables->empty());
  EXPECT_TRUE(fib.ast.queries.empty());
  EXPECT_TRUE(fib.kit.evaluators.empty());
}

TEST(Corpus, EveryQueryHasAnEvaluator) {
  for (const auto& e : corpus::corpus_entries())
    for (const auto& q : e.ast.queries) EXPECT_TRUE(e.kit.evaluators.count(q.id)) << e.name << " Q" << q.id;
}

TEST(Corpus, PinnedExpectationsHoldOnEveryEngine) {
  for (const auto& e : corpus::corpus_entries()) {
    ASSERT_FALSE(e.expectations.empty()) << e.name;
    auto c = pipeline::compile(e.ast);
    for (const auto& pin : e.expectations) {
      for (auto eng : pipeline::all_engines()) {
        auto o = e.oracle(pin.seed);
        auto out = pipeline::run_engine(c, eng, pin.args, o);
        ASSERT_TRUE(out.ok) << e.name << " " << pipeline::engine_name(eng) << ": " << out.error;
        EXPECT_EQ(out.value, pin.expected) << e.name << " on " << pipeline::engine_name(eng) << " expected "
                                           << format_literal(pin.expected) << " got " << format_literal(out.value);
      }
    }
  }
}

TEST(Corpus, FibonacciPinsMatchIterativeOracle) {
  auto e = corpus::load_entry("fibonacci");
  for (const auto& pin : e.expectations)
    EXPECT_EQ(pin.expected, Value::integer(testing::fib_oracle(pin.args[0].as_int())));
}

TEST(Corpus, ExpectationsRoundTrip) {
  auto e = corpus::load_entry("walk");
  std::string text = corpus::write_expectations(e.expectations, e.ast);
  auto back = corpus::read_expectations(text, e.ast);
  ASSERT_EQ(back.size(), e.expectations.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].args, e.expectations[i].args);
    EXPECT_EQ(back[i].seed, e.expectations[i].seed);
    EXPECT_EQ(back[i].expected, e.expectations[i].expected);
  }
  EXPECT_THROW(corpus::read_expectations(R"({"cases":[{"args":[1],"seed":0,"expected":1}]})", e.ast), Error);
}

TEST(Corpus, UnknownNameFails) { EXPECT_THROW(corpus::load_entry("nope"), Error); }

TEST(Corpus, RandomArgumentsAreReproducible) {
  for (const auto& e : corpus::corpus_entries()) {
    std::mt19937_64 a(3), b(3);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(e.kit.random_args(*e.tables, a), e.kit.random_args(*e.tables, b));
  }
}

TEST(Corpus, DifferentialEquivalence) {
  for (const auto& e : corpus::corpus_entries()) {
    auto rep = pipeline::diff(e, pipeline::compile(e.ast), 50, 11);
    EXPECT_TRUE(rep.divergences.empty()) << (rep.divergences.empty() ? "" : rep.divergences[0].report);
  }
}

}  // namespace
}  // namespace plaway

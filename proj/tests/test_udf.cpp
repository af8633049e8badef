#include "support.hpp"

#include "plaway/error.hpp"

namespace plaway {
namespace {

using testing::NoOracle;

udf::Udf udf_of(const FunctionAst& f) { return pipeline::compile(f).udf; }

std::vector<std::string> slot_names(const udf::Udf& u) {
  std::vector<std::string> out;
  for (const auto& s : u.slots) out.push_back(s.name);
  return out;
}

/// Visits every RecCall and checks its arity.
void count_leaves(const udf::UExprRef& e, std::size_t arity, std::size_t& calls, std::size_t& bases) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, udf::Case>) {
          for (const auto& a : n.arms) count_leaves(a.body, arity, calls, bases);
          if (n.otherwise) count_leaves(n.otherwise, arity, calls, bases);
        } else if constexpr (std::is_same_v<T, udf::LetChain>) {
          count_leaves(n.body, arity, calls, bases);
        } else if constexpr (std::is_same_v<T, udf::RecCall>) {
          EXPECT_EQ(n.args.size(), arity);
          ++calls;
        } else if constexpr (std::is_same_v<T, udf::BaseCase>) {
          ++bases;
        } else {
          ADD_FAILURE() << "row leaf before adaptation";
        }
      },
      e->node);
}

TEST(Udf, WalkWorker) {
  auto u = udf_of(corpus::load_entry("walk").ast);
  EXPECT_EQ(u.worker_name, "walk*");
  EXPECT_TRUE(u.has_fn);
  EXPECT_EQ(u.targets, (std::vector<int>{1, 2}));
  EXPECT_EQ(slot_names(u), (std::vector<std::string>{"reward_1", "location_1", "movement_1", "step_1", "win",
                                                     "loose", "steps"}));
  EXPECT_EQ(u.initial_call.target, 1);
  std::vector<std::string> args;
  for (const auto& a : u.initial_call.args) args.push_back(print_expr(a));
  EXPECT_EQ(args, (std::vector<std::string>{"0", "origin", "''", "1", "win", "loose", "steps"}));
}

TEST(Udf, DispatchCoversTargets) {
  for (const auto& e : corpus::corpus_entries()) {
    auto u = udf_of(e.ast);
    std::set<int> unique(u.targets.begin(), u.targets.end());
    EXPECT_EQ(unique.size(), u.targets.size()) << e.name;
    if (u.has_fn) {
      const auto* c = std::get_if<udf::Case>(&u.body->node);
      ASSERT_NE(c, nullptr) << e.name;
      std::vector<int> labels;
      for (const auto& arm : c->arms) labels.push_back(arm.label);
      EXPECT_EQ(labels, u.targets) << e.name;
      EXPECT_FALSE(c->otherwise) << e.name;
    } else {
      EXPECT_EQ(u.targets.size(), 1u) << e.name;
    }
    std::size_t calls = 0, bases = 0;
    count_leaves(u.body, u.slots.size(), calls, bases);
    EXPECT_GT(bases, 0u) << e.name;
  }
}

TEST(Udf, LoopFreeHasNoDispatch) {
  auto u = udf_of(parse_function(testing::read_text(testing::fixture("answer.sql"))));
  EXPECT_FALSE(u.has_fn);
  EXPECT_TRUE(std::holds_alternative<udf::BaseCase>(u.body->node));
  NoOracle o;
  EXPECT_EQ(udf::interpret_udf(u, {}, o), Value::integer(42));
}

TEST(Udf, FibonacciDispatch) {
  auto u = udf_of(corpus::load_entry("fibonacci").ast);
  EXPECT_TRUE(u.has_fn);
  EXPECT_EQ(u.targets.size(), 2u);
  auto names = slot_names(u);
  EXPECT_NE(std::find(names.begin(), names.end(), "n"), names.end());
  std::size_t calls = 0, bases = 0;
  count_leaves(u.body, u.slots.size(), calls, bases);
  EXPECT_EQ(calls, 2u);
  EXPECT_EQ(bases, 1u);
  NoOracle o;
  EXPECT_EQ(udf::interpret_udf(u, {Value::integer(10)}, o), Value::integer(55));
}

TEST(Udf, ReservedParameterNamesAreRejected) {
  try {
    udf_of(testing::parse_text(R"(CREATE FUNCTION k(fn int) RETURNS int AS $$
BEGIN
  RETURN fn;
END;
$$ LANGUAGE plpgsql;)"));
    FAIL() << "accepted a parameter named fn";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Unsupported);
  }
}

TEST(Udf, SourceNamesCollidingWithReservedOnesAreRenamed) {
  auto c = testing::compile_text(R"(CREATE FUNCTION k(n int) RETURNS int AS $$
DECLARE
  result int = 0;
BEGIN
  WHILE n > 0 LOOP
    result = result + n;
    n = n - 1;
  END LOOP;
  RETURN result;
END;
$$ LANGUAGE plpgsql;)");
  for (const auto& s : c.udf.slots) EXPECT_NE(s.name, "result");
  NoOracle o;
  EXPECT_EQ(udf::interpret_udf(c.udf, {Value::integer(4)}, o), Value::integer(10));
}

}  // namespace
}  // namespace plaway

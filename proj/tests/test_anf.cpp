#include "support.hpp"

#include "plaway/error.hpp"

namespace plaway {
namespace {

using testing::NoOracle;

anf::Program anf_of(const FunctionAst& f) { return anf::from_ssa(ssa::simplify_ssa(ssa::lower_to_ssa(f))); }

TEST(Anf, WalkNesting) {
  auto p = anf_of(corpus::load_entry("walk").ast);
  const auto* top = std::get_if<anf::LetRec>(&p.body->node);
  ASSERT_NE(top, nullptr);
  ASSERT_EQ(top->functions.size(), 1u);
  const anf::Function& l1 = top->functions[0];
  EXPECT_EQ(l1.name, "L1");
  EXPECT_EQ(l1.params, (std::vector<std::string>{"reward_1", "location_1", "movement_1", "step_1"}));
  const auto* inner = std::get_if<anf::LetRec>(&l1.body->node);
  ASSERT_NE(inner, nullptr);
  ASSERT_EQ(inner->functions.size(), 1u);
  EXPECT_EQ(inner->functions[0].name, "L2");

  const auto* entry = std::get_if<anf::TailCall>(&top->body->node);
  ASSERT_NE(entry, nullptr);
  EXPECT_EQ(entry->function, "L1");
  std::vector<std::string> args;
  for (const auto& a : entry->args) args.push_back(print_expr(a));
  EXPECT_EQ(args, (std::vector<std::string>{"0", "origin", "''", "1"}));
  EXPECT_TRUE(anf::entry_is_trivial(p));
}

TEST(Anf, SingleBlockIsLetChain) {
  auto p = anf_of(testing::parse_text(R"(CREATE FUNCTION g(n int) RETURNS int AS $$
DECLARE
  x int;
BEGIN
  x = n + 1;
  RETURN x * 2;
END;
$$ LANGUAGE plpgsql;)"));
  EXPECT_TRUE(anf::functions(p).empty());
  const auto* let = std::get_if<anf::Let>(&p.body->node);
  ASSERT_NE(let, nullptr);
  EXPECT_TRUE(std::holds_alternative<anf::Result>(let->body->node));
  NoOracle o;
  EXPECT_EQ(anf::interpret_anf(p, {Value::integer(4)}, o), Value::integer(10));
}

TEST(Anf, FibonacciTwoFunctions) {
  auto p = anf_of(corpus::load_entry("fibonacci").ast);
  EXPECT_EQ(anf::functions(p).size(), 2u);
  EXPECT_TRUE(anf::check_tail_positions(p).empty());
  NoOracle o;
  EXPECT_EQ(anf::interpret_anf(p, {Value::integer(10)}, o), Value::integer(55));
}

TEST(Anf, CorpusHasNoTailViolations) {
  for (const auto& e : corpus::corpus_entries())
    EXPECT_TRUE(anf::check_tail_positions(anf_of(e.ast)).empty()) << e.name;
}

TEST(Anf, CallUnderLetIsReported) {
  anf::Program p;
  p.name = "h";
  anf::Function f{"L1", 1, {"x"}, anf::TermRef(anf::Term{anf::Result{var("x")}})};
  anf::TermRef body(anf::Term{anf::Let{"y", call("L1", {lit_int(1)}), anf::TermRef(anf::Term{anf::Result{var("y")}})}});
  p.body = anf::TermRef(anf::Term{anf::LetRec{{f}, body}});
  auto v = anf::check_tail_positions(p);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("let y"), std::string::npos) << v[0];
}

TEST(Anf, ConstantFunction) {
  auto p = anf_of(parse_function(testing::read_text(testing::fixture("answer.sql"))));
  NoOracle o;
  EXPECT_EQ(anf::interpret_anf(p, {}, o), Value::integer(42));
}

TEST(Anf, TailLoopsRunInConstantControlSpace) {
  auto p = anf_of(corpus::load_entry("fibonacci").ast);
  NoOracle o;
  RunStats st;
  anf::interpret_anf(p, {Value::integer(80)}, o, {}, &st);
  EXPECT_EQ(st.max_depth, 1u);
  EXPECT_GT(st.tail_calls, 80u);
}

}  // namespace
}  // namespace plaway

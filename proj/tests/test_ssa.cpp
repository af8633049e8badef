#include "support.hpp"

#include "plaway/error.hpp"
#include "plaway/interp.hpp"

namespace plaway {
namespace {

using testing::NoOracle;

const ssa::CondGoto* cond_of(const ssa::Block& b) { return std::get_if<ssa::CondGoto>(&b.term); }

std::size_t count_returns(const ssa::Program& p) {
  std::size_t n = 0;
  for (const auto& b : p.blocks) {
    if (std::holds_alternative<ssa::Ret>(b.term)) ++n;
    if (auto c = cond_of(b)) n += std::holds_alternative<ssa::Ret>(c->then_arm) + std::holds_alternative<ssa::Ret>(c->else_arm);
  }
  return n;
}

/// L0: if a > 0 goto L1 else goto L2; L1, L2: goto L3; L3: x <- phi(a, a); return x + 1;
/// plus an unreachable L4.
ssa::Program diamond() {
  ssa::Program p;
  p.name = "d";
  p.params = {{"a", TypeTag::Int}};
  p.var_types = {{"a", TypeTag::Int}, {"x", TypeTag::Int}};
  p.var_bases = {{"x", "x"}};
  p.blocks.push_back({0, {}, {}, ssa::CondGoto{binary(BinOp::Gt, var("a"), lit_int(0)), ssa::Goto{1}, ssa::Goto{2}}});
  p.blocks.push_back({1, {}, {}, ssa::Goto{3}});
  p.blocks.push_back({2, {}, {}, ssa::Goto{3}});
  p.blocks.push_back({3, {{"x", {{1, var("a")}, {2, var("a")}}}}, {}, ssa::Ret{binary(BinOp::Add, var("x"), lit_int(1))}});
  p.blocks.push_back({4, {}, {}, ssa::Ret{lit_int(7)}});
  return p;
}

TEST(Ssa, WalkLowering) {
  auto p = ssa::simplify_ssa(ssa::lower_to_ssa(corpus::load_entry("walk").ast));
  EXPECT_EQ(p.entry, 0);
  const auto& head = p.block(1);
  ASSERT_NE(cond_of(head), nullptr);
  EXPECT_EQ(ssa::print_ir_expr(cond_of(head)->cond), "step_1 <= steps");
  EXPECT_EQ(head.phis.size(), 4u);
  EXPECT_EQ(count_returns(p), 2u);
  bool back_edge = false;
  for (const auto& b : p.blocks)
    if (auto g = std::get_if<ssa::Goto>(&b.term); g && g->target == 1 && b.label > 1) back_edge = true;
  EXPECT_TRUE(back_edge);
}

TEST(Ssa, StraightLine) {
  auto p = ssa::lower_to_ssa(parse_function(testing::read_text(testing::fixture("answer.sql"))));
  p = ssa::simplify_ssa(p);
  ASSERT_EQ(p.blocks.size(), 1u);
  EXPECT_TRUE(p.blocks[0].phis.empty());
  NoOracle o;
  EXPECT_EQ(ssa::interpret_ssa(p, {}, o), Value::integer(42));
}

TEST(Ssa, FibonacciLoopHeadPhis) {
  auto p = ssa::simplify_ssa(ssa::lower_to_ssa(corpus::load_entry("fibonacci").ast));
  std::set<std::string> bases;
  for (const auto& b : p.blocks)
    if (cond_of(b))
      for (const auto& phi : b.phis) bases.insert(p.var_bases.at(phi.target));
  EXPECT_EQ(bases, (std::set<std::string>{"a", "b", "i"}));
  EXPECT_TRUE(ssa::verify(p).empty());
}

TEST(Ssa, VerifyHoldsBeforeAndAfterSimplify) {
  for (const auto& e : corpus::corpus_entries()) {
    auto raw = ssa::lower_to_ssa(e.ast);
    EXPECT_TRUE(ssa::verify(raw).empty()) << e.name;
    EXPECT_TRUE(ssa::verify(ssa::simplify_ssa(raw)).empty()) << e.name;
  }
}

TEST(Ssa, LoweringIsDeterministic) {
  auto f = corpus::load_entry("walk").ast;
  EXPECT_EQ(ssa::dump(ssa::lower_to_ssa(f)), ssa::dump(ssa::lower_to_ssa(f)));
}

TEST(Ssa, TrivialPhiAndUnreachableBlock) {
  auto p = diamond();
  ASSERT_TRUE(ssa::verify(p).empty());
  auto s = ssa::simplify_ssa(p);
  for (const auto& b : s.blocks) {
    EXPECT_TRUE(b.phis.empty());
    if (auto r = std::get_if<ssa::Ret>(&b.term)) EXPECT_NE(ssa::print_ir_expr(r->value), "7");
  }
  EXPECT_TRUE(ssa::verify(s).empty());
  for (std::int64_t a : {-3, 0, 5}) {
    NoOracle o1, o2;
    EXPECT_EQ(ssa::interpret_ssa(p, {Value::integer(a)}, o1), ssa::interpret_ssa(s, {Value::integer(a)}, o2));
  }
}

TEST(Ssa, VerifyRejectsBrokenPrograms) {
  auto p = diamond();
  p.blocks[1].assigns.push_back({"a", lit_int(1)});  // redefines a parameter
  EXPECT_FALSE(ssa::verify(p).empty());

  auto q = diamond();
  q.blocks[3].phis[0].args.pop_back();  // one argument short
  EXPECT_FALSE(ssa::verify(q).empty());

  auto r = diamond();
  r.blocks[1].assigns.push_back({"y", var("x")});  // x is not defined on this path
  EXPECT_FALSE(ssa::verify(r).empty());
}

TEST(Ssa, InterpretFibonacci) {
  auto p = ssa::simplify_ssa(ssa::lower_to_ssa(corpus::load_entry("fibonacci").ast));
  NoOracle o;
  EXPECT_EQ(ssa::interpret_ssa(p, {Value::integer(10)}, o), Value::integer(55));
}

TEST(Ssa, WalkMatchesReferenceAtSeed42) {
  auto e = corpus::load_entry("walk");
  auto p = ssa::simplify_ssa(ssa::lower_to_ssa(e.ast));
  std::vector<Value> args{Value::coord(0, 2), Value::integer(5), Value::integer(-5), Value::integer(10)};
  auto o1 = e.oracle(42);
  auto o2 = e.oracle(42);
  EXPECT_EQ(ssa::interpret_ssa(p, args, o1), interpret_ast(e.ast, args, o2));
}

}  // namespace
}  // namespace plaway

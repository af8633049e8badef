#include "support.hpp"

#include "plaway/error.hpp"
#include "plaway/interp.hpp"

namespace plaway {
namespace {

using testing::NoOracle;

const char* kMinimal = R"(CREATE FUNCTION zero() RETURNS int AS $$
BEGIN
  RETURN 0;
END;
$$ LANGUAGE plpgsql;)";

ErrorKind error_of(const std::string& src) {
  try {
    parse_function(src);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error for:\n" << src;
  return ErrorKind::Internal;
}

std::string wrap(const std::string& decls, const std::string& body, const std::string& params = "n int") {
  return "CREATE FUNCTION f(" + params + ") RETURNS int AS $$\nDECLARE\n" + decls + "\nBEGIN\n" + body +
         "\nEND;\n$$ LANGUAGE plpgsql;";
}

TEST(Frontend, WalkShape) {
  auto e = corpus::load_entry("walk");
  const FunctionAst& f = e.ast;
  EXPECT_EQ(f.name, "walk");
  ASSERT_EQ(f.params.size(), 4u);
  EXPECT_EQ(f.params[0].type, TypeTag::Coord);
  EXPECT_EQ(f.decls.size(), 4u);
  EXPECT_FALSE(f.decls[3].init);  // roll starts out NULL
  ASSERT_EQ(f.body.size(), 2u);
  const auto* loop = std::get_if<ForRange>(&f.body[0].node);
  ASSERT_NE(loop, nullptr);
  EXPECT_EQ(loop->var, "step");
  ASSERT_EQ(loop->body.size(), 5u);
  EXPECT_TRUE(std::holds_alternative<If>(loop->body[4].node));
  const auto* ret = std::get_if<Return>(&f.body[1].node);
  ASSERT_NE(ret, nullptr);
  EXPECT_EQ(as<Literal>(ret->value)->value, Value::integer(0));
}

TEST(Frontend, WalkQueries) {
  auto f = corpus::load_entry("walk").ast;
  auto qs = extract_embedded_queries(f);
  ASSERT_EQ(qs.size(), 3u);
  EXPECT_EQ(qs[0].id, 1);
  EXPECT_EQ(qs[0].params, std::vector<std::string>({"location"}));
  EXPECT_EQ(qs[1].params, std::vector<std::string>({"location", "movement", "roll"}));
  EXPECT_EQ(qs[2].params, std::vector<std::string>({"location"}));
  EXPECT_EQ(qs[1].result_type, TypeTag::Coord);
  EXPECT_EQ(compact_sql(qs[0].text()), "SELECT p.action FROM policy AS p WHERE :location = p.loc");
}

TEST(Frontend, FibonacciHasNoQueries) {
  EXPECT_TRUE(extract_embedded_queries(corpus::load_entry("fibonacci").ast).empty());
}

TEST(Frontend, SameQueryTextTwiceGetsTwoIds) {
  auto f = parse_function(wrap("x int;", "x = (SELECT t.v FROM t WHERE t.k = n);\n"
                                         "x = x + (SELECT t.v FROM t WHERE t.k = n);\nRETURN x;"));
  auto qs = extract_embedded_queries(f);
  ASSERT_EQ(qs.size(), 2u);
  EXPECT_NE(qs[0].id, qs[1].id);
  EXPECT_EQ(qs[0].text(), qs[1].text());
}

TEST(Frontend, MinimalFunction) {
  auto f = parse_function(kMinimal);
  EXPECT_TRUE(f.decls.empty());
  ASSERT_EQ(f.body.size(), 1u);
  const auto* ret = std::get_if<Return>(&f.body[0].node);
  ASSERT_NE(ret, nullptr);
  EXPECT_EQ(as<Literal>(ret->value)->value, Value::integer(0));
}

TEST(Frontend, ForeachIsUnsupported) {
  try {
    parse_function(testing::read_text(testing::fixture("foreach.sql")));
    FAIL() << "FOREACH accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Unsupported);
    EXPECT_NE(std::string(e.what()).find("FOREACH"), std::string::npos);
  }
}

TEST(Frontend, SyntaxErrorsCarryPosition) {
  try {
    parse_function(wrap("", "RETURN (1 + ;"));
    FAIL() << "accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Syntax);
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
  }
}

TEST(Frontend, SemanticErrors) {
  EXPECT_EQ(error_of(wrap("", "RETURN y;")), ErrorKind::Undeclared);
  EXPECT_EQ(error_of(wrap("n int;", "RETURN n;")), ErrorKind::Semantic);
  EXPECT_EQ(error_of(wrap("x float = 1.5;", "RETURN n + x;")), ErrorKind::TypeMismatch);
  EXPECT_EQ(error_of(wrap("", "n = n + 1;")), ErrorKind::Semantic);
  EXPECT_EQ(error_of(wrap("", "LOOP EXIT nowhere; END LOOP; RETURN 0;")), ErrorKind::Semantic);
}

TEST(Frontend, RoundTrip) {
  for (const auto& e : corpus::corpus_entries()) {
    std::string printed = print_function(e.ast);
    EXPECT_EQ(parse_function(printed), e.ast) << e.name;
    EXPECT_EQ(print_function(parse_function(printed)), printed) << e.name;
  }
}

TEST(Frontend, InterpretFibonacci) {
  auto f = corpus::load_entry("fibonacci").ast;
  for (std::int64_t n : {0, 1, 2, 10, 50, 90}) {
    NoOracle o;
    EXPECT_EQ(interpret_ast(f, {Value::integer(n)}, o), Value::integer(testing::fib_oracle(n))) << n;
  }
}

Value run1(const std::string& src, Value arg, const RunOptions& opts = {}) {
  NoOracle o;
  return interpret_ast(parse_function(src), {std::move(arg)}, o, opts);
}

ErrorKind run_error(const std::string& src, Value arg, const RunOptions& opts = {}) {
  try {
    run1(src, std::move(arg), opts);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a runtime error";
  return ErrorKind::Internal;
}

TEST(Frontend, IntegerSemantics) {
  EXPECT_EQ(run_error(wrap("", "RETURN n * n;"), Value::integer(3'037'000'500)), ErrorKind::Arithmetic);
  EXPECT_EQ(run1(wrap("", "RETURN n / 2;"), Value::integer(-7)), Value::integer(-3));
  EXPECT_EQ(run_error(wrap("", "RETURN n / 0;"), Value::integer(1)), ErrorKind::Arithmetic);
}

TEST(Frontend, UninitialisedIsNull) {
  EXPECT_TRUE(run1(wrap("x int;", "RETURN x;"), Value::integer(1)).is_null());
}

TEST(Frontend, IterationCap) {
  RunOptions opts;
  opts.iteration_cap = 100;
  EXPECT_EQ(run_error(wrap("", "LOOP n = n; END LOOP;\nRETURN 0;"), Value::integer(1), opts),
            ErrorKind::IterationCap);
}

TEST(Frontend, ExitAndContinueWithLabels) {
  std::string src = wrap("s int = 0;\ni int = 0;",
                         "<<outer>> LOOP\n"
                         "  i = i + 1;\n"
                         "  CONTINUE outer WHEN i % 2 = 0;\n"
                         "  EXIT outer WHEN i > n;\n"
                         "  s = s + i;\n"
                         "END LOOP;\nRETURN s;");
  EXPECT_EQ(run1(src, Value::integer(9)), Value::integer(1 + 3 + 5 + 7 + 9));
}

}  // namespace
}  // namespace plaway

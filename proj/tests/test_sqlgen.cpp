#include "support.hpp"

#include "plaway/error.hpp"

namespace plaway {
namespace {

using sqlgen::Dialect;
using sqlgen::Mode;

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + needle.size())) ++n;
  return n;
}

void count_leaves(const udf::UExprRef& e, std::size_t& calls, std::size_t& bases) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, udf::Case>) {
          for (const auto& a : n.arms) count_leaves(a.body, calls, bases);
          if (n.otherwise) count_leaves(n.otherwise, calls, bases);
        } else if constexpr (std::is_same_v<T, udf::LetChain>) {
          count_leaves(n.body, calls, bases);
        } else if constexpr (std::is_same_v<T, udf::RecCall>) {
          ++calls;
        } else if constexpr (std::is_same_v<T, udf::BaseCase>) {
          ++bases;
        }
      },
      e->node);
}

const udf::LetChain* first_chain(const udf::UExprRef& e) {
  if (auto c = std::get_if<udf::LetChain>(&e->node)) return c;
  if (auto c = std::get_if<udf::Case>(&e->node)) {
    for (const auto& a : c->arms)
      if (auto r = first_chain(a.body)) return r;
    if (c->otherwise) return first_chain(c->otherwise);
  }
  return nullptr;
}

class CorpusSql : public ::testing::TestWithParam<std::string> {
 protected:
  pipeline::Compiled compiled() const { return pipeline::compile(corpus::load_entry(GetParam()).ast); }
};

TEST_P(CorpusSql, StageGoldens) {
  auto c = compiled();
  testing::expect_golden(GetParam() + ".ssa.txt", pipeline::render(c, pipeline::Stage::Ssa));
  testing::expect_golden(GetParam() + ".anf.txt", pipeline::render(c, pipeline::Stage::Anf));
  testing::expect_golden(GetParam() + ".udf.txt", pipeline::render(c, pipeline::Stage::Udf));
  testing::expect_golden(GetParam() + ".postgres.sql", sqlgen::emit_cte(c.udf, Dialect::Postgres).text);
  testing::expect_golden(GetParam() + ".sqlite.sql", sqlgen::emit_cte(c.udf, Dialect::Sqlite).text);
}

TEST_P(CorpusSql, TemplateStructure) {
  auto c = compiled();
  std::string sql = sqlgen::emit_cte(c.udf, Dialect::Postgres).text;
  EXPECT_EQ(sql.rfind("WITH RECURSIVE run(\"call?\", ", 0), 0u);
  EXPECT_EQ(count(sql, "WITH RECURSIVE"), 1u);
  EXPECT_EQ(count(sql, "SELECT true AS \"call?\""), 1u);
  EXPECT_EQ(count(sql, "UNION ALL"), 1u);
  EXPECT_EQ(count(sql, "WHERE  r.\"call?\""), 1u);
  EXPECT_EQ(count(sql, "WHERE  NOT r.\"call?\""), 1u);
  EXPECT_NE(sql.find("CAST(NULL AS " + std::string(type_name(c.udf.return_type)) + ") AS result"),
            std::string::npos);
  EXPECT_EQ(sql.find('\r'), std::string::npos);
  EXPECT_EQ(sql.find(';'), std::string::npos);
}

TEST_P(CorpusSql, LeafConservation) {
  auto c = compiled();
  std::size_t calls = 0, bases = 0;
  count_leaves(c.udf.body, calls, bases);
  std::string pg = sqlgen::emit_cte(c.udf, Dialect::Postgres).text;
  EXPECT_EQ(count(pg, "ROW(true, "), calls);
  EXPECT_EQ(count(pg, "ROW(false, "), bases);
  std::string lite = sqlgen::emit_cte(c.udf, Dialect::Sqlite).text;
  EXPECT_EQ(count(lite, "json_array(true, "), calls);
  EXPECT_EQ(count(lite, "json_array(false, "), bases);
  EXPECT_EQ(count(lite, "LATERAL"), 0u);
}

TEST_P(CorpusSql, IterateDiffersOnlyInKeyword) {
  auto c = compiled();
  std::string rec = sqlgen::emit_cte(c.udf, Dialect::Postgres, Mode::Recursive).text;
  std::string it = sqlgen::emit_cte(c.udf, Dialect::Postgres, Mode::Iterate).text;
  ASSERT_EQ(count(it, "WITH ITERATE"), 1u);
  it.replace(it.find("WITH ITERATE"), 12, "WITH RECURSIVE");
  EXPECT_EQ(it, rec);
}

TEST_P(CorpusSql, Deterministic) {
  EXPECT_EQ(sqlgen::emit_cte(compiled().udf, Dialect::Postgres).text,
            sqlgen::emit_cte(compiled().udf, Dialect::Postgres).text);
}

INSTANTIATE_TEST_SUITE_P(Corpus, CorpusSql, ::testing::ValuesIn(corpus::entry_names()));

TEST(Sqlgen, WalkLeaves) {
  auto c = pipeline::compile(corpus::load_entry("walk").ast);
  std::string sql = sqlgen::emit_cte(c.udf, Dialect::Postgres).text;
  EXPECT_NE(sql.find("ROW(false, NULL, r.step_1 * sign(reward_2))"), std::string::npos);
  EXPECT_NE(sql.find("ROW(true, ROW(2, r.reward_1, r.location_1, r.movement_1, r.step_1, r.win, r.loose, r.steps), NULL)"),
            std::string::npos);
  EXPECT_NE(sql.find("ELSE ROW(false, NULL, 0)"), std::string::npos);
}

TEST(Sqlgen, WalkLetChain) {
  auto c = pipeline::compile(corpus::load_entry("walk").ast);
  auto body = sqlgen::adapt_body(c.udf);
  const udf::LetChain* chain = first_chain(body);
  ASSERT_NE(chain, nullptr);
  ASSERT_EQ(chain->bindings.size(), 4u);
  // the chain's own layers, without the step_2 chain nested in its body
  udf::LetChain own{chain->bindings, udf::UExprRef(udf::UExpr{udf::RowLeaf{false, 0, {}, var("reward_2")}})};
  std::string pg = sqlgen::emit_let_chain(c.udf, own, Dialect::Postgres);
  EXPECT_EQ(count(pg, "LEFT JOIN LATERAL"), 3u);
  EXPECT_EQ(count(pg, "ON true"), 3u);
  std::string lite = sqlgen::emit_let_chain(c.udf, own, Dialect::Sqlite);
  EXPECT_EQ(count(lite, "LATERAL"), 0u);
  EXPECT_EQ(count(lite, ") AS _"), 4u);
  EXPECT_EQ(count(lite, ".*, "), 3u);  // outer layers re-project the inner alias
}

TEST(Sqlgen, EmptyChainIsBodyAlone) {
  auto c = pipeline::compile(corpus::load_entry("walk").ast);
  udf::LetChain chain{{}, udf::UExprRef(udf::UExpr{udf::RowLeaf{false, 0, {}, lit_int(7)}})};
  EXPECT_EQ(sqlgen::emit_let_chain(c.udf, chain, Dialect::Postgres), "ROW(false, NULL, 7)");
  EXPECT_EQ(sqlgen::emit_let_chain(c.udf, chain, Dialect::Sqlite), "json_array(false, NULL, 7)");
}

TEST(Sqlgen, AdaptQualifiesSlots) {
  auto c = pipeline::compile(corpus::load_entry("fibonacci").ast);
  std::string sql = sqlgen::emit_cte(c.udf, Dialect::Postgres).text;
  EXPECT_NE(sql.find("WHEN r.fn = "), std::string::npos);
  EXPECT_NE(sql.find("r.n"), std::string::npos);
}

TEST(Sqlgen, IterateOnSqliteIsUnsupported) {
  auto c = pipeline::compile(corpus::load_entry("fibonacci").ast);
  try {
    sqlgen::emit_cte(c.udf, Dialect::Sqlite, Mode::Iterate);
    FAIL() << "accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Unsupported);
  }
}

TEST(Sqlgen, WrapInline) {
  auto walk = pipeline::compile(corpus::load_entry("walk").ast);
  auto q = sqlgen::emit_cte(walk.udf, Dialect::Postgres);
  std::string w = sqlgen::wrap_inline(q);
  EXPECT_EQ(w.rfind("(WITH RECURSIVE", 0), 0u);
  EXPECT_EQ(w.back(), ')');
  for (const char* p : {":origin", ":win", ":loose", ":steps"}) EXPECT_NE(w.find(p), std::string::npos) << p;
  EXPECT_EQ(q.placeholders, (std::vector<std::string>{"origin", "win", "loose", "steps"}));

  auto answer = testing::compile_text(testing::read_text(testing::fixture("answer.sql")));
  auto aq = sqlgen::emit_cte(answer.udf, Dialect::Postgres);
  EXPECT_TRUE(aq.placeholders.empty());
  EXPECT_EQ(sqlgen::wrap_inline(aq).find(':'), std::string::npos);
}

TEST(Sqlgen, BindPlaceholders) {
  auto fib = pipeline::compile(corpus::load_entry("fibonacci").ast);
  auto q = sqlgen::emit_cte(fib.udf, Dialect::Postgres);
  std::string bound = pipeline::bind_arguments(q, fib.udf, {Value::integer(10)});
  EXPECT_EQ(bound.find(":n"), std::string::npos);
  EXPECT_NE(bound.find("10 AS n"), std::string::npos);
  EXPECT_EQ(sqlgen::bind_placeholders("SELECT ':x', :x, a::int, :xy", {{"x", "1"}}), "SELECT ':x', 1, a::int, :xy");

  auto walk = pipeline::compile(corpus::load_entry("walk").ast);
  auto lq = sqlgen::emit_cte(walk.udf, Dialect::Sqlite);
  EXPECT_EQ(lq.placeholders, (std::vector<std::string>{"origin_x", "origin_y", "win", "loose", "steps"}));
  std::string lb = pipeline::bind_arguments(
      lq, walk.udf, {Value::coord(0, 2), Value::integer(5), Value::integer(-5), Value::integer(10)});
  EXPECT_NE(lb.find("0 AS location_1_x, 2 AS location_1_y"), std::string::npos);
}

TEST(Sqlgen, Literals) {
  EXPECT_EQ(sqlgen::sql_literal(Value::text("it's"), Dialect::Postgres), "'it''s'");
  EXPECT_EQ(sqlgen::sql_literal(Value::floating(std::nan("")), Dialect::Postgres), "CAST('NaN' AS float)");
  EXPECT_EQ(sqlgen::sql_literal(Value::coord(1, 2), Dialect::Sqlite), "json_array(1, 2)");
  EXPECT_EQ(sqlgen::sql_literal(Value::null(), Dialect::Sqlite), "NULL");
}

}  // namespace
}  // namespace plaway

#include "support.hpp"

#include "plaway/error.hpp"
#include "plaway/interp.hpp"

namespace plaway {
namespace {

using sqlgen::Dialect;
using sqlgen::Mode;
using testing::NoOracle;

constexpr double kTwo32 = 4294967296.0;

std::vector<Value> walk_args() {
  return {Value::coord(0, 2), Value::integer(5), Value::integer(-5), Value::integer(10)};
}

sim::SimResult simulate(const corpus::Entry& e, const std::vector<Value>& args, Mode mode, std::uint32_t seed = 0,
                        Dialect dialect = Dialect::Postgres) {
  auto c = pipeline::compile(e.ast);
  auto o = e.oracle(seed);
  sim::SimOptions opts;
  opts.mode = mode;
  opts.dialect = dialect;
  opts.keep_trace = true;
  return sim::simulate_cte(c.udf, args, o, opts);
}

TEST(Random, LinearCongruentialSteps) {
  auto [v0, s0] = next_random(0);
  EXPECT_EQ(s0, 1013904223u);
  EXPECT_EQ(v0, 1013904223.0 / kTwo32);
  auto [v42, s42] = next_random(42);
  EXPECT_EQ(s42, 1083814273u);
  EXPECT_EQ(v42, 1083814273.0 / kTwo32);
  auto [vmax, smax] = next_random(0xFFFFFFFFu);
  EXPECT_EQ(smax, static_cast<std::uint32_t>((1664525ull * 0xFFFFFFFFull + 1013904223ull) % (1ull << 32)));
  EXPECT_LT(vmax, 1.0);
}

TEST(Random, StreamsAreReproducibleAndIndependentOfQueries) {
  auto e = corpus::load_entry("traverse");
  auto a = e.oracle(7);
  auto b = e.oracle(7);
  std::vector<double> xs, ys;
  for (int i = 0; i < 5; ++i) {
    xs.push_back(a.random());
    b.eval_query(1, {Value::integer(i)});
    ys.push_back(b.random());
  }
  EXPECT_EQ(xs, ys);
  EXPECT_EQ(a.random_count(), 5u);
  EXPECT_EQ(b.query_count(), 5u);
  EXPECT_EQ(b.call_log().size(), 10u);
}

TEST(Tables, WalkData) {
  auto e = corpus::load_entry("walk");
  const Tables& ts = *e.tables;
  const Table& cells = ts.at("cells");
  auto reward = [&](std::int64_t x, std::int64_t y) {
    for (const auto& r : cells.rows)
      if (r[cells.column("loc")] == Value::coord(x, y)) return r[cells.column("reward")];
    return Value::null();
  };
  EXPECT_EQ(reward(2, 0), Value::integer(-2));
  EXPECT_EQ(reward(3, 0), Value::integer(0));
  EXPECT_EQ(reward(4, 0), Value::integer(-1));

  const Table& actions = ts.at("actions");
  std::map<std::string, double> probs;
  for (const auto& r : actions.rows)
    if (r[actions.column("here")] == Value::coord(3, 2) && r[actions.column("action")] == Value::text("→"))
      probs[format_value(r[actions.column("there")])] = r[actions.column("prob")].as_float();
  EXPECT_EQ(probs, (std::map<std::string, double>{{"(4,2)", 0.8}, {"(3,3)", 0.1}, {"(3,2)", 0.1}}));
}

TEST(Tables, HeaderOnlyAndErrors) {
  Table t = parse_csv_table("t", "a:int:key,b:text\n", "t.csv");
  EXPECT_TRUE(t.rows.empty());
  EXPECT_EQ(t.columns.size(), 2u);

  auto kind_and_message = [](const std::string& text) -> std::pair<ErrorKind, std::string> {
    try {
      parse_csv_table("t", text, "t.csv");
    } catch (const Error& e) {
      return {e.kind(), e.what()};
    }
    return {ErrorKind::Internal, "no error"};
  };
  auto dup = kind_and_message("a:int:key,b:text\n1,x\n1,y\n");
  EXPECT_EQ(dup.first, ErrorKind::Data);
  EXPECT_NE(dup.second.find("t.csv:3"), std::string::npos) << dup.second;
  auto bad = kind_and_message("a:int,b:coord\n1,\"(1,2)\"\nx,\"(1,2)\"\n");
  EXPECT_EQ(bad.first, ErrorKind::Data);
  EXPECT_NE(bad.second.find("t.csv:3"), std::string::npos) << bad.second;
}

TEST(Tables, WalkProbabilitiesMustSumToOne) {
  Tables ts;
  ts["actions"] =
      parse_csv_table("actions", "here:coord,action:text,there:coord,prob:float\n\"(0,0)\",x,\"(0,1)\",0.7\n", "a");
  EXPECT_THROW(corpus::kit_for("walk").validate(ts), Error);
}

TEST(Evaluators, WalkMoveWindow) {
  auto e = corpus::load_entry("walk");
  auto move = [&](double roll) {
    auto o = e.oracle(0);
    return o.eval_query(2, {Value::coord(3, 2), Value::text("→"), Value::floating(roll)});
  };
  // destinations in (x, y) order: (3,2) 0.1, (3,3) 0.1, (4,2) 0.8
  EXPECT_EQ(move(0.0), Value::coord(3, 2));
  EXPECT_EQ(move(0.05), Value::coord(3, 2));
  EXPECT_EQ(move(0.15), Value::coord(3, 3));
  EXPECT_EQ(move(0.5), Value::coord(4, 2));
  EXPECT_EQ(move(0.999999), Value::coord(4, 2));
  auto o = e.oracle(0);
  EXPECT_TRUE(o.eval_query(2, {Value::null(), Value::text("→"), Value::floating(0.5)}).is_null());
}

TEST(Simulator, ConstantFunction) {
  auto c = testing::compile_text(testing::read_text(testing::fixture("answer.sql")));
  for (Mode m : {Mode::Recursive, Mode::Iterate}) {
    NoOracle o;
    sim::SimOptions opts;
    opts.mode = m;
    opts.keep_trace = true;
    auto r = sim::simulate_cte(c.udf, {}, o, opts);
    EXPECT_EQ(r.value, Value::integer(42));
    EXPECT_EQ(r.rows_emitted, 2u);
    EXPECT_EQ(r.max_working_set, 2u);
    ASSERT_EQ(r.trace.size(), 2u);
    EXPECT_TRUE(r.trace[0].call);
    EXPECT_FALSE(r.trace[1].call);
  }
}

TEST(Simulator, FibonacciRowAccounting) {
  auto e = corpus::load_entry("fibonacci");
  auto c = pipeline::compile(e.ast);
  NoOracle o;
  RunStats st;
  anf::interpret_anf(c.anf, {Value::integer(10)}, o, {}, &st);
  auto r = simulate(e, {Value::integer(10)}, Mode::Recursive);
  EXPECT_EQ(r.value, Value::integer(55));
  EXPECT_EQ(r.rows_emitted, st.activations + 1);
  EXPECT_EQ(r.max_working_set, r.rows_emitted);
}

TEST(Simulator, WalkBothModesMatchReference) {
  auto e = corpus::load_entry("walk");
  auto o = e.oracle(42);
  Value ref = interpret_ast(e.ast, walk_args(), o);
  auto rec = simulate(e, walk_args(), Mode::Recursive, 42);
  auto it = simulate(e, walk_args(), Mode::Iterate, 42);
  auto lite = simulate(e, walk_args(), Mode::Recursive, 42, Dialect::Sqlite);
  EXPECT_EQ(rec.value, ref);
  EXPECT_EQ(it.value, ref);
  EXPECT_EQ(lite.value, ref);
  EXPECT_EQ(rec.rows_emitted, it.rows_emitted);
  EXPECT_LE(it.max_working_set, 2u);
  for (const auto& row : rec.trace) {
    if (row.call) {
      EXPECT_TRUE(row.result.is_null());
    } else {
      for (const auto& a : row.args) EXPECT_TRUE(a.is_null());
    }
  }
}

TEST(Simulator, ParseSpaceLaw) {
  auto e = corpus::load_entry("parse");
  for (std::uint64_t n : {1u, 7u, 100u}) {
    std::vector<Value> args{Value::text(std::string(n, '1'))};
    auto rec = simulate(e, args, Mode::Recursive);
    auto it = simulate(e, args, Mode::Iterate);
    EXPECT_EQ(rec.retained_cells, n * (n + 1) / 2) << n;
    EXPECT_EQ(rec.rows_emitted, n + 1) << n;
    EXPECT_LE(it.max_working_set, 2u);
    EXPECT_EQ(rec.value, Value::boolean(true));
  }
}

TEST(Simulator, IterationCap) {
  auto e = corpus::load_entry("fibonacci");
  auto c = pipeline::compile(e.ast);
  NoOracle o;
  sim::SimOptions opts;
  opts.iteration_cap = 5;
  try {
    sim::simulate_cte(c.udf, {Value::integer(50)}, o, opts);
    FAIL() << "cap not enforced";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::IterationCap);
  }
}

TEST(Simulator, RowLayouts) {
  auto c = pipeline::compile(corpus::load_entry("walk").ast);
  sim::RunRow row{true, 2, {Value::integer(3), Value::coord(1, 4), Value::text("↑"), Value::integer(2),
                            Value::integer(5), Value::integer(-5), Value::integer(10)}, Value::null()};
  auto lite = sim::encode_row(c.udf, row, Dialect::Sqlite);
  EXPECT_EQ(lite.size(), sqlgen::run_columns(c.udf, Dialect::Sqlite).size());
  EXPECT_EQ(lite[0], Value::integer(1));
  EXPECT_EQ(lite[3], Value::integer(1));
  EXPECT_EQ(lite[4], Value::integer(4));
  auto back = sim::decode_row(c.udf, lite, Dialect::Sqlite);
  EXPECT_EQ(back.args, row.args);
  EXPECT_EQ(back.fn, 2);
  auto pg = sim::encode_row(c.udf, row, Dialect::Postgres);
  EXPECT_EQ(pg.size(), sqlgen::run_columns(c.udf, Dialect::Postgres).size());
  EXPECT_EQ(sim::decode_row(c.udf, pg, Dialect::Postgres).args, row.args);

  auto bad = pg;
  bad.back() = Value::integer(1);  // a call row that also carries a result
  EXPECT_THROW(sim::decode_row(c.udf, bad, Dialect::Postgres), Error);
  bad.pop_back();
  EXPECT_THROW(sim::decode_row(c.udf, bad, Dialect::Postgres), Error);
}

TEST(Simulator, BooleanSlotsSurviveSqliteLayout) {
  auto c = testing::compile_text(R"(CREATE FUNCTION flip(n int) RETURNS bool AS $$
DECLARE
  b bool = false;
BEGIN
  FOR i IN 1..n LOOP
    b = NOT b;
  END LOOP;
  RETURN b;
END;
$$ LANGUAGE plpgsql;)");
  for (std::int64_t n : {0, 1, 4, 7}) {
    NoOracle o1, o2;
    sim::SimOptions lite;
    lite.dialect = Dialect::Sqlite;
    EXPECT_EQ(sim::simulate_cte(c.udf, {Value::integer(n)}, o1, lite).value, Value::boolean(n % 2 == 1));
    EXPECT_EQ(udf::interpret_udf(c.udf, {Value::integer(n)}, o2), Value::boolean(n % 2 == 1));
  }
}

}  // namespace
}  // namespace plaway

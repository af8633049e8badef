#include "plaway/pipeline.hpp"

#include <random>
#include <sstream>

#include "plaway/error.hpp"
#include "plaway/interp.hpp"
#include "plaway/parser.hpp"

namespace plaway::pipeline {

std::optional<Stage> parse_stage(std::string_view s) {
  if (s == "ast") return Stage::Ast;
  if (s == "ssa") return Stage::Ssa;
  if (s == "anf") return Stage::Anf;
  if (s == "udf") return Stage::Udf;
  if (s == "sql") return Stage::Sql;
  return std::nullopt;
}

const std::vector<Engine>& all_engines() {
  static const std::vector<Engine> engines{Engine::Ast, Engine::Ssa,          Engine::Anf,
                                           Engine::Udf, Engine::CteRecursive, Engine::CteIterate};
  return engines;
}

std::string_view engine_name(Engine e) {
  switch (e) {
    case Engine::Ast: return "ast";
    case Engine::Ssa: return "ssa";
    case Engine::Anf: return "anf";
    case Engine::Udf: return "udf";
    case Engine::CteRecursive: return "cte-recursive";
    case Engine::CteIterate: return "cte-iterate";
  }
  return "?";
}

std::optional<Engine> parse_engine(std::string_view s) {
  for (Engine e : all_engines())
    if (engine_name(e) == s) return e;
  return std::nullopt;
}

namespace {

void require_empty(const std::vector<std::string>& problems, const std::string& stage) {
  if (problems.empty()) return;
  std::string msg = stage + " is malformed:";
  for (const auto& p : problems) msg += "\n  " + p;
  fail(ErrorKind::Internal, msg);
}

bool same_calls(const std::vector<OracleCall>& a, const std::vector<OracleCall>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].kind != b[i].kind || a[i].query_id != b[i].query_id || a[i].params != b[i].params ||
        !(a[i].result == b[i].result))
      return false;
  return true;
}

std::string format_args(const std::vector<Value>& args) {
  std::string out;
  for (std::size_t i = 0; i < args.size(); ++i) out += (i ? " " : "") + format_literal(args[i]);
  return out;
}

}  // namespace

Compiled compile(const FunctionAst& ast) {
  Compiled c;
  c.ast = ast;
  c.ssa = ssa::simplify_ssa(ssa::lower_to_ssa(ast));
  require_empty(ssa::verify(c.ssa), "SSA program");
  c.anf = anf::from_ssa(c.ssa);
  require_empty(anf::check_tail_positions(c.anf), "ANF program");
  c.udf = udf::defunctionalize(c.anf);
  return c;
}

std::string render(const Compiled& c, Stage stage, sqlgen::Dialect dialect, sqlgen::Mode mode) {
  switch (stage) {
    case Stage::Ast: return print_function(c.ast);
    case Stage::Ssa: return ssa::dump(c.ssa);
    case Stage::Anf: return anf::dump(c.anf);
    case Stage::Udf: return udf::dump(c.udf);
    case Stage::Sql: return sqlgen::emit_cte(c.udf, dialect, mode).text;
  }
  return {};
}

Outcome run_engine(const Compiled& c, Engine engine, const std::vector<Value>& args, QueryOracle& oracle,
                   sqlgen::Dialect dialect, const RunOptions& options) {
  Outcome o;
  std::size_t log_start = oracle.call_log().size();
  try {
    switch (engine) {
      case Engine::Ast: o.value = interpret_ast(c.ast, args, oracle, options, &o.stats); break;
      case Engine::Ssa: o.value = ssa::interpret_ssa(c.ssa, args, oracle, options, &o.stats); break;
      case Engine::Anf: o.value = anf::interpret_anf(c.anf, args, oracle, options, &o.stats); break;
      case Engine::Udf: o.value = udf::interpret_udf(c.udf, args, oracle, options, &o.stats); break;
      case Engine::CteRecursive:
      case Engine::CteIterate: {
        sim::SimOptions so;
        so.mode = engine == Engine::CteRecursive ? sqlgen::Mode::Recursive : sqlgen::Mode::Iterate;
        so.dialect = dialect;
        so.iteration_cap = options.iteration_cap;
        o.sim = sim::simulate_cte(c.udf, args, oracle, so);
        o.value = o.sim->value;
        o.stats = o.sim->stats;
        break;
      }
    }
    o.ok = true;
  } catch (const Error& e) {
    o.error_kind = e.kind();
    o.error = e.what();
  }
  const auto& log = oracle.call_log();
  o.calls.assign(log.begin() + static_cast<std::ptrdiff_t>(log_start), log.end());
  return o;
}

bool agree(const Outcome& a, const Outcome& b) {
  if (a.ok != b.ok) return false;
  if (a.ok ? !(a.value == b.value) : a.error_kind != b.error_kind) return false;
  return same_calls(a.calls, b.calls);
}

std::string describe(const Outcome& o) {
  std::string s = o.ok ? format_literal(o.value) : "error " + std::string(error_kind_name(o.error_kind)) + ": " + o.error;
  return s + " (" + std::to_string(o.calls.size()) + " oracle calls)";
}

DiffReport diff(const corpus::Entry& e, const Compiled& c, std::size_t trials, std::uint32_t seed) {
  DiffReport rep;
  rep.trials = trials;
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<Value> args = e.kit.random_args(*e.tables, rng);
    std::uint32_t oracle_seed = seed + static_cast<std::uint32_t>(t);

    std::vector<std::pair<std::string, Outcome>> runs;
    for (Engine eng : all_engines()) {
      TableOracle oracle = e.oracle(oracle_seed);
      runs.emplace_back(std::string(engine_name(eng)), run_engine(c, eng, args, oracle));
    }
    TableOracle oracle = e.oracle(oracle_seed);
    runs.emplace_back("cte-recursive/sqlite",
                      run_engine(c, Engine::CteRecursive, args, oracle, sqlgen::Dialect::Sqlite));

    bool ok = true;
    for (const auto& r : runs) ok = ok && agree(runs.front().second, r.second);
    if (ok) continue;
    std::ostringstream msg;
    msg << "trial " << t << ": " << e.name << "(" << format_args(args) << ") with oracle seed " << oracle_seed
        << "\n";
    for (const auto& [name, o] : runs) msg << "  " << name << ": " << describe(o) << "\n";
    rep.divergences.push_back({t, oracle_seed, args, msg.str()});
  }
  return rep;
}

std::string bind_arguments(const sqlgen::SqlQuery& q, const udf::Udf& u, const std::vector<Value>& args) {
  check_args(u.params, args);
  std::map<std::string, std::string> values;
  for (std::size_t i = 0; i < u.params.size(); ++i) {
    const auto& p = u.params[i];
    const Value& v = args[i];
    if (q.dialect == sqlgen::Dialect::Sqlite && p.type == TypeTag::Coord) {
      values[p.name + "_x"] = v.is_null() ? "NULL" : format_value(v.as_tuple()[0]);
      values[p.name + "_y"] = v.is_null() ? "NULL" : format_value(v.as_tuple()[1]);
    } else {
      values[p.name] = sqlgen::sql_literal(v, q.dialect);
    }
  }
  return sqlgen::bind_placeholders(q.text, values);
}

}  // namespace plaway::pipeline

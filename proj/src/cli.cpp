#include "plaway/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "plaway/error.hpp"

namespace plaway::cli {

namespace {

/// Raised for bad flags or arguments; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

corpus::Entry resolve(const std::string& fn, const std::string& data_dir) {
  for (const auto& n : corpus::entry_names())
    if (n == fn) {
      corpus::Entry e = corpus::load_entry(fn);
      if (!data_dir.empty()) {
        e.tables = std::make_shared<const Tables>(load_tables(data_dir));
        if (e.kit.validate) e.kit.validate(*e.tables);
      }
      return e;
    }
  if (!std::filesystem::exists(fn)) throw UsageError("no corpus function or file named " + fn);
  return corpus::load_file(fn, data_dir);
}

std::vector<Value> parse_args(const FunctionAst& ast, const std::vector<std::string>& raw) {
  if (raw.size() != ast.params.size())
    throw UsageError(ast.name + " takes " + std::to_string(ast.params.size()) + " arguments, got " +
                     std::to_string(raw.size()));
  std::vector<Value> out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    try {
      out.push_back(parse_value(raw[i], ast.params[i].type));
    } catch (const Error& e) {
      throw UsageError(std::string("argument ") + ast.params[i].name + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::int64_t> parse_grid(const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto v = parse_int(item);
    if (!v || *v < 0) throw UsageError("bad grid point '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

void write_output(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Data, "cannot write " + path);
  f << text;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

}  // namespace

std::string run_live(const std::string& sql, const std::string& dsn) {
  auto tmp = std::filesystem::temp_directory_path() / ("plaway-" + std::to_string(::getpid()) + ".sql");
  {
    std::ofstream f(tmp, std::ios::binary);
    f << sql << ";\n";
  }
  std::string cmd = "psql " + shell_quote(dsn) + " -X -q -A -t -v ON_ERROR_STOP=1 -f " + shell_quote(tmp.string()) +
                    " 2>&1";
  std::string text;
  if (FILE* p = ::popen(cmd.c_str(), "r")) {
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) text.append(buf, n);
    int status = ::pclose(p);
    std::filesystem::remove(tmp);
    if (status != 0) throw Error(ErrorKind::Oracle, "psql failed: " + text);
  } else {
    std::filesystem::remove(tmp);
    throw Error(ErrorKind::Oracle, "cannot start psql");
  }
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

int cmd_diff(const corpus::Entry& e, std::size_t trials, std::uint32_t seed, std::ostream& out, std::ostream& err) {
  pipeline::Compiled c = pipeline::compile(e.ast);
  pipeline::DiffReport rep = pipeline::diff(e, c, trials, seed);
  for (const auto& d : rep.divergences) err << d.report;
  out << e.name << ": " << rep.trials - rep.divergences.size() << "/" << rep.trials
      << " trials agree across ast, ssa, anf, udf, cte-recursive, cte-iterate (seed " << seed << ")\n";
  return rep.divergences.empty() ? 0 : 1;
}

std::string bench_csv(const corpus::Entry& e, const pipeline::Compiled& c, const std::vector<std::int64_t>& grid) {
  std::ostringstream csv;
  csv << "iterations,rows_emitted,max_working_set_recursive,retained_cells_recursive,max_working_set_iterate,"
         "retained_cells_iterate\n";
  for (std::int64_t n : grid) {
    std::vector<Value> args = e.kit.bench_args(n);
    sim::SimOptions rec;
    sim::SimOptions it;
    it.mode = sqlgen::Mode::Iterate;
    TableOracle o1 = e.oracle(0);
    TableOracle o2 = e.oracle(0);
    sim::SimResult r = sim::simulate_cte(c.udf, args, o1, rec);
    sim::SimResult i = sim::simulate_cte(c.udf, args, o2, it);
    csv << n << "," << r.rows_emitted << "," << r.max_working_set << "," << r.retained_cells << ","
        << i.max_working_set << "," << i.retained_cells << "\n";
  }
  return csv.str();
}

int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"plaway: compile PL/pgSQL functions into recursive SQL queries"};
  app.require_subcommand(1);

  std::string file, stage = "sql", dialect = "postgres", mode = "recursive", output;
  bool inline_form = false;
  auto* compile = app.add_subcommand("compile", "Print a compilation stage or the emitted SQL");
  compile->add_option("file", file, "PL/pgSQL source file")->required();
  compile->add_option("--stage", stage, "ast, ssa, anf, udf or sql")
      ->check(CLI::IsMember({"ast", "ssa", "anf", "udf", "sql"}));
  compile->add_option("--dialect", dialect, "postgres or sqlite")->check(CLI::IsMember({"postgres", "sqlite"}));
  compile->add_option("--mode", mode, "recursive or iterate")->check(CLI::IsMember({"recursive", "iterate"}));
  compile->add_flag("--inline", inline_form, "Wrap the query for inlining at a call site");
  compile->add_option("-o,--out", output, "Output file (default: standard output)");

  std::string fn, engine = "ast", data_dir, dsn;
  std::vector<std::string> raw_args;
  std::uint32_t seed = 0;
  auto* run = app.add_subcommand("run", "Evaluate a function with one of the evaluators");
  run->add_option("function", fn, "Corpus function name or source file")->required();
  run->add_option("--args", raw_args, "Arguments in order")->allow_extra_args();
  run->add_option("--seed", seed, "Seed of random()");
  run->add_option("--engine", engine, "ast, ssa, anf, udf, cte-recursive or cte-iterate")
      ->check(CLI::IsMember({"ast", "ssa", "anf", "udf", "cte-recursive", "cte-iterate"}));
  run->add_option("--data-dir", data_dir, "Directory of table CSV files");
  run->add_option("--dialect", dialect, "Row layout of the simulated CTE")
      ->check(CLI::IsMember({"postgres", "sqlite"}));
  auto* dsn_opt = run->add_option("--dsn", dsn, "Also execute the emitted SQL via psql")->envname("PLAWAY_DSN");

  std::size_t trials = 50;
  std::uint32_t diff_seed = 0;
  auto* diff = app.add_subcommand("diff", "Compare all evaluators on random arguments");
  diff->add_option("function", fn, "Corpus function name")->required();
  diff->add_option("--trials", trials, "Number of argument vectors");
  diff->add_option("--seed", diff_seed, "Seed for arguments and random()");

  std::string grid;
  auto* bench = app.add_subcommand("bench", "CSV of simulator row counts over an iteration grid");
  bench->add_option("function", fn, "Corpus function name")->required();
  bench->add_option("--grid", grid, "Comma-separated iteration counts");

  try {
    std::vector<std::string> args(argv.rbegin(), argv.rend());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (compile->parsed()) {
      corpus::Entry e = corpus::load_file(file);
      pipeline::Compiled c = pipeline::compile(e.ast);
      auto d = *sqlgen::parse_dialect(dialect);
      auto m = *sqlgen::parse_mode(mode);
      std::string text;
      if (*pipeline::parse_stage(stage) == pipeline::Stage::Sql) {
        sqlgen::SqlQuery q = sqlgen::emit_cte(c.udf, d, m);
        text = inline_form ? sqlgen::wrap_inline(q) + "\n" : q.text;
      } else {
        text = pipeline::render(c, *pipeline::parse_stage(stage), d, m);
      }
      write_output(text, output, out);
      return 0;
    }
    if (run->parsed()) {
      corpus::Entry e = resolve(fn, data_dir);
      pipeline::Compiled c = pipeline::compile(e.ast);
      std::vector<Value> args = parse_args(e.ast, raw_args);
      pipeline::Engine eng = *pipeline::parse_engine(engine);
      auto d = *sqlgen::parse_dialect(dialect);
      TableOracle oracle = e.oracle(seed);
      pipeline::Outcome o = pipeline::run_engine(c, eng, args, oracle, d);
      if (!o.ok) {
        err << "error (" << error_kind_name(o.error_kind) << "): " << o.error << "\n";
        return 1;
      }
      nlohmann::ordered_json j;
      j["function"] = e.name;
      j["engine"] = engine;
      j["value"] = nlohmann::json::parse(corpus::value_json(o.value));
      j["queries"] = oracle.query_count();
      j["randoms"] = oracle.random_count();
      if (o.sim) {
        j["dialect"] = dialect;
        j["rows_emitted"] = o.sim->rows_emitted;
        j["max_working_set"] = o.sim->max_working_set;
        j["retained_cells"] = o.sim->retained_cells;
      }
      if (dsn_opt->count() > 0 && !dsn.empty()) {
        sqlgen::SqlQuery q = sqlgen::emit_cte(c.udf, sqlgen::Dialect::Postgres);
        j["live"] = run_live(pipeline::bind_arguments(q, c.udf, args), dsn);
      }
      out << j.dump() << "\n";
      return 0;
    }
    if (diff->parsed()) {
      corpus::Entry e = resolve(fn, "");
      if (!e.kit.random_args) throw UsageError("diff needs a corpus function");
      return cmd_diff(e, trials, diff_seed, out, err);
    }
    if (bench->parsed()) {
      corpus::Entry e = resolve(fn, "");
      if (!e.kit.bench_args) throw UsageError("bench needs a corpus function");
      out << bench_csv(e, pipeline::compile(e.ast), parse_grid(grid));
      return 0;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error (" << error_kind_name(e.kind()) << "): " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace plaway::cli

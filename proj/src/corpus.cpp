#include "plaway/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "plaway/error.hpp"
#include "plaway/eval.hpp"
#include "plaway/parser.hpp"

#ifndef PLAWAY_CORPUS_DIR
#define PLAWAY_CORPUS_DIR "corpus"
#endif

namespace plaway::corpus {

namespace {

using Row = std::vector<Value>;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorKind::Data, "cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const Table& table(const Tables& ts, const std::string& name) {
  auto it = ts.find(name);
  if (it == ts.end()) fail(ErrorKind::Oracle, "table " + name + " is not loaded");
  return it->second;
}

/// Scalar subquery over one table: the `result` column of the row whose
/// `keys` columns equal `values`; NULL when a value is NULL or nothing matches.
Value lookup(const Tables& ts, const std::string& name, const std::vector<std::string>& keys, const Row& values,
             const std::string& result) {
  for (const auto& v : values)
    if (v.is_null()) return Value::null();
  const Table& t = table(ts, name);
  std::vector<std::size_t> cols;
  for (const auto& k : keys) cols.push_back(t.column(k));
  std::size_t out = t.column(result);
  const Row* hit = nullptr;
  for (const auto& row : t.rows) {
    bool match = true;
    for (std::size_t i = 0; i < cols.size() && match; ++i) match = row[cols[i]] == values[i];
    if (!match) continue;
    if (hit) fail(ErrorKind::Oracle, "more than one row returned by a subquery over " + name);
    hit = &row;
  }
  return hit ? (*hit)[out] : Value::null();
}

/// First code point of a UTF-8 string, as left(s, 1) sees it.
std::string first_char(const std::string& s) {
  if (s.empty()) return s;
  std::size_t n = 1;
  while (n < s.size() && (static_cast<unsigned char>(s[n]) & 0xC0) == 0x80) ++n;
  return s.substr(0, n);
}

std::int64_t pick(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

Value walk_move(const Tables& ts, const Row& p) {
  const Value& loc = p[0];
  const Value& movement = p[1];
  const Value& roll = p[2];
  if (loc.is_null() || movement.is_null() || roll.is_null()) return Value::null();
  const Table& a = table(ts, "actions");
  std::size_t here = a.column("here"), action = a.column("action"), there = a.column("there"),
              prob = a.column("prob");
  std::vector<const Row*> rows;
  for (const auto& r : a.rows)
    if (r[here] == loc && r[action] == movement) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [&](const Row* x, const Row* y) {
    const auto& cx = (*x)[there];
    const auto& cy = (*y)[there];
    if (cx.is_null() || cy.is_null()) return !cx.is_null() && cy.is_null();
    return compare_values(cx, cy) < 0;
  });
  double r = roll.as_float();
  double lo = 0.0;
  for (const Row* row : rows) {
    const Value& pv = (*row)[prob];
    double hi = pv.is_null() ? lo : lo + pv.as_float();
    if (lo <= r && r < hi) return (*row)[there];
    lo = hi;
  }
  return Value::null();
}

void validate_walk(const Tables& ts) {
  const Table& a = table(ts, "actions");
  std::size_t here = a.column("here"), action = a.column("action"), prob = a.column("prob");
  std::map<std::pair<std::string, std::string>, double> sums;
  for (const auto& r : a.rows) sums[{format_value(r[here]), format_value(r[action])}] += r[prob].as_float();
  for (const auto& [k, s] : sums)
    if (std::abs(s - 1.0) > 1e-9)
      fail(ErrorKind::Data, "actions for " + k.first + " " + k.second + " sum to " + format_float(s) + ", not 1");
}

Kit walk_kit() {
  Kit k;
  k.evaluators[1] = [](const Tables& ts, const Row& p) { return lookup(ts, "policy", {"loc"}, {p[0]}, "action"); };
  k.evaluators[2] = walk_move;
  k.evaluators[3] = [](const Tables& ts, const Row& p) { return lookup(ts, "cells", {"loc"}, {p[0]}, "reward"); };
  k.random_args = [](const Tables& ts, std::mt19937_64& rng) -> Row {
    const Table& cells = table(ts, "cells");
    Value origin = cells.rows.empty() ? Value::coord(0, 0)
                                      : cells.rows[static_cast<std::size_t>(pick(rng, 0, static_cast<std::int64_t>(
                                                                                           cells.rows.size() - 1)))]
                                                  [cells.column("loc")];
    std::int64_t win = pick(rng, 1, 6);
    std::int64_t loose = pick(rng, -6, -1);
    std::int64_t steps = pick(rng, 0, 30);
    return {origin, Value::integer(win), Value::integer(loose), Value::integer(steps)};
  };
  k.bench_args = [](std::int64_t n) -> Row {
    return {Value::coord(0, 2), Value::integer(1'000'000'000), Value::integer(-1'000'000'000), Value::integer(n)};
  };
  k.validate = validate_walk;
  return k;
}

Kit fibonacci_kit() {
  Kit k;
  k.random_args = [](const Tables&, std::mt19937_64& rng) -> Row { return {Value::integer(pick(rng, -2, 90))}; };
  k.bench_args = [](std::int64_t n) -> Row { return {Value::integer(std::min<std::int64_t>(n, 91))}; };
  return k;
}

Kit parse_kit() {
  Kit k;
  k.evaluators[1] = [](const Tables& ts, const Row& p) -> Value {
    if (p[1].is_null()) return Value::null();
    return lookup(ts, "transitions", {"source", "symbol"}, {p[0], Value::text(first_char(p[1].as_text()))},
                  "target");
  };
  k.evaluators[2] = [](const Tables& ts, const Row& p) {
    return lookup(ts, "states", {"state"}, {p[0]}, "accepting");
  };
  k.random_args = [](const Tables&, std::mt19937_64& rng) -> Row {
    static const std::string alphabet = "0123456789+-.x";
    std::string s;
    std::int64_t n = pick(rng, 0, 12);
    for (std::int64_t i = 0; i < n; ++i)
      s += alphabet[static_cast<std::size_t>(pick(rng, 0, static_cast<std::int64_t>(alphabet.size()) - 1))];
    return {Value::text(s)};
  };
  k.bench_args = [](std::int64_t n) -> Row { return {Value::text(std::string(static_cast<std::size_t>(n), '1'))}; };
  return k;
}

Kit traverse_kit() {
  Kit k;
  k.evaluators[1] = [](const Tables& ts, const Row& p) { return lookup(ts, "edges", {"src"}, {p[0]}, "dst"); };
  k.random_args = [](const Tables&, std::mt19937_64& rng) -> Row {
    return {Value::integer(pick(rng, 0, 15)), Value::integer(pick(rng, -1, 20))};
  };
  k.bench_args = [](std::int64_t n) -> Row { return {Value::integer(2), Value::integer(n)}; };
  return k;
}

Value value_from_json(const nlohmann::json& j, TypeTag type) {
  if (j.is_null()) return Value::null();
  auto bad = [&]() -> Value {
    fail(ErrorKind::Data, "expectation value " + j.dump() + " is not a " + std::string(type_name(type)));
  };
  switch (type) {
    case TypeTag::Int:
      return j.is_number_integer() ? Value::integer(j.get<std::int64_t>()) : bad();
    case TypeTag::Float:
      if (j.is_number()) return Value::floating(j.get<double>());
      return j.is_string() ? parse_value(j.get<std::string>(), type) : bad();
    case TypeTag::Text:
      return j.is_string() ? Value::text(j.get<std::string>()) : bad();
    case TypeTag::Bool:
      return j.is_boolean() ? Value::boolean(j.get<bool>()) : bad();
    case TypeTag::Coord:
      if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) return bad();
      return Value::coord(j[0].get<std::int64_t>(), j[1].get<std::int64_t>());
  }
  return bad();
}

nlohmann::json value_to_json(const Value& v) {
  if (v.is_null()) return nullptr;
  if (v.is_bool()) return v.as_bool();
  if (v.is_int()) return v.as_int();
  if (v.is_float()) {
    if (!std::isfinite(v.as_float())) return format_float(v.as_float());
    return v.as_float();
  }
  if (v.is_text()) return v.as_text();
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& x : v.as_tuple()) arr.push_back(value_to_json(x));
  return arr;
}

}  // namespace

TableOracle Entry::oracle(std::uint32_t seed) const { return TableOracle(tables, kit.evaluators, seed); }

std::filesystem::path default_root() {
  if (const char* env = std::getenv("PLAWAY_CORPUS")) return env;
  return PLAWAY_CORPUS_DIR;
}

std::vector<std::string> entry_names() { return {"walk", "fibonacci", "parse", "traverse"}; }

Kit kit_for(const std::string& name) {
  if (name == "walk") return walk_kit();
  if (name == "fibonacci") return fibonacci_kit();
  if (name == "parse") return parse_kit();
  if (name == "traverse") return traverse_kit();
  fail(ErrorKind::Data, "no corpus function named " + name);
}

Entry load_file(const std::filesystem::path& file, const std::filesystem::path& data_dir) {
  Entry e;
  e.dir = file.parent_path();
  e.source = read_file(file);
  e.ast = parse_function(e.source);
  e.name = e.ast.name;
  e.tables = std::make_shared<const Tables>(
      !data_dir.empty() && std::filesystem::is_directory(data_dir) ? load_tables(data_dir) : Tables{});
  return e;
}

Entry load_entry(const std::string& name, const std::filesystem::path& root) {
  Kit kit = kit_for(name);
  std::filesystem::path dir = root / name;
  Entry e = load_file(dir / "function.sql", dir / "data");
  e.name = name;
  e.dir = dir;
  e.kit = std::move(kit);
  for (const auto& q : e.ast.queries)
    if (!e.kit.evaluators.count(q.id))
      fail(ErrorKind::Internal, "corpus function " + name + " has no evaluator for Q" + std::to_string(q.id));
  if (e.kit.validate) e.kit.validate(*e.tables);
  if (std::filesystem::exists(dir / "expect.json"))
    e.expectations = read_expectations(read_file(dir / "expect.json"), e.ast);
  return e;
}

std::vector<Entry> corpus_entries(const std::filesystem::path& root) {
  std::vector<Entry> out;
  for (const auto& n : entry_names()) out.push_back(load_entry(n, root));
  return out;
}

std::vector<Expectation> read_expectations(const std::string& json, const FunctionAst& ast) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::Data, std::string("expect.json: ") + ex.what());
  }
  std::vector<Expectation> out;
  for (const auto& c : doc.at("cases")) {
    Expectation x;
    const auto& args = c.at("args");
    if (args.size() != ast.params.size())
      fail(ErrorKind::Data, "expect.json: case has " + std::to_string(args.size()) + " arguments, " + ast.name +
                                " takes " + std::to_string(ast.params.size()));
    for (std::size_t i = 0; i < args.size(); ++i) x.args.push_back(value_from_json(args[i], ast.params[i].type));
    x.seed = c.value("seed", 0u);
    x.expected = value_from_json(c.at("expected"), ast.return_type);
    out.push_back(std::move(x));
  }
  return out;
}

std::string write_expectations(const std::vector<Expectation>& pins, const FunctionAst&) {
  nlohmann::ordered_json doc;
  doc["cases"] = nlohmann::ordered_json::array();
  for (const auto& p : pins) {
    nlohmann::ordered_json c;
    c["args"] = nlohmann::ordered_json::array();
    for (const auto& a : p.args) c["args"].push_back(nlohmann::ordered_json(value_to_json(a)));
    c["seed"] = p.seed;
    c["expected"] = nlohmann::ordered_json(value_to_json(p.expected));
    doc["cases"].push_back(std::move(c));
  }
  return doc.dump(2) + "\n";
}

std::string value_json(const Value& v) { return value_to_json(v).dump(); }

}  // namespace plaway::corpus

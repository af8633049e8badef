#include "plaway/simulate.hpp"

#include <algorithm>

#include "plaway/error.hpp"

namespace plaway::sim {

namespace {

std::uint64_t payload(const std::vector<Value>& columns) {
  std::uint64_t n = 0;
  for (const auto& v : columns) n += text_payload(v);
  return n;
}

void check_row(const RunRow& row) {
  if (row.call && !row.result.is_null()) fail(ErrorKind::Internal, "malformed run row: call row carries a result");
  if (!row.call)
    for (const auto& a : row.args)
      if (!a.is_null()) fail(ErrorKind::Internal, "malformed run row: base row carries arguments");
}

/// SQLite has no boolean type; booleans travel as 0/1 integers.
Value to_sqlite(const Value& v) { return v.is_bool() ? Value::integer(v.as_bool() ? 1 : 0) : v; }

Value from_sqlite(const Value& v, TypeTag type) {
  if (type == TypeTag::Bool && v.is_int()) return Value::boolean(v.as_int() != 0);
  return v;
}

}  // namespace

std::vector<Value> encode_row(const udf::Udf& u, const RunRow& row, sqlgen::Dialect dialect) {
  bool flat = dialect == sqlgen::Dialect::Sqlite;
  std::vector<Value> out;
  out.push_back(flat ? Value::integer(row.call ? 1 : 0) : Value::boolean(row.call));
  if (u.has_fn) out.push_back(row.call ? Value::integer(row.fn) : Value::null());
  for (std::size_t i = 0; i < u.slots.size(); ++i) {
    const Value& v = row.call ? row.args.at(i) : Value();
    if (flat && u.slots[i].type == TypeTag::Coord) {
      out.push_back(v.is_null() ? Value::null() : v.as_tuple()[0]);
      out.push_back(v.is_null() ? Value::null() : v.as_tuple()[1]);
    } else {
      out.push_back(flat ? to_sqlite(v) : v);
    }
  }
  out.push_back(flat ? to_sqlite(row.result) : row.result);
  return out;
}

RunRow decode_row(const udf::Udf& u, const std::vector<Value>& columns, sqlgen::Dialect dialect) {
  bool flat = dialect == sqlgen::Dialect::Sqlite;
  std::size_t want = sqlgen::run_columns(u, dialect).size();
  if (columns.size() != want)
    fail(ErrorKind::Internal, "malformed run row: " + std::to_string(columns.size()) + " columns, expected " +
                                  std::to_string(want));
  std::size_t k = 0;
  RunRow row;
  const Value& call = columns[k++];
  if (flat ? !call.is_int() : !call.is_bool()) fail(ErrorKind::Internal, "malformed run row: \"call?\" is not boolean");
  row.call = flat ? call.as_int() != 0 : call.as_bool();
  if (u.has_fn) {
    const Value& fn = columns[k++];
    if (row.call && !fn.is_int()) fail(ErrorKind::Internal, "malformed run row: fn is not an integer");
    row.fn = row.call ? static_cast<int>(fn.as_int()) : 0;
  } else {
    row.fn = u.initial_call.target;
  }
  for (const auto& s : u.slots) {
    if (flat && s.type == TypeTag::Coord) {
      const Value& x = columns[k++];
      const Value& y = columns[k++];
      if (x.is_null() != y.is_null()) fail(ErrorKind::Internal, "malformed run row: half-NULL coord " + s.name);
      row.args.push_back(x.is_null() ? Value::null() : Value::coord(x.as_int(), y.as_int()));
    } else {
      row.args.push_back(flat ? from_sqlite(columns[k++], s.type) : columns[k++]);
    }
  }
  row.result = flat ? from_sqlite(columns[k], u.return_type) : columns[k];
  check_row(row);
  return row;
}

SimResult simulate_cte(const udf::Udf& u, const std::vector<Value>& args, QueryOracle& oracle,
                       const SimOptions& options) {
  if (options.mode == sqlgen::Mode::Iterate && options.dialect == sqlgen::Dialect::Sqlite)
    fail(ErrorKind::Unsupported, "WITH ITERATE is not available for the sqlite dialect");
  check_args(u.params, args);

  SimResult res;
  EvalContext base;
  base.oracle = &oracle;
  base.queries = &u.queries;
  base.stats = &res.stats;

  const udf::UExprRef body = sqlgen::adapt_body(u);
  const bool iterate = options.mode == sqlgen::Mode::Iterate;

  RunRow seed{true, u.initial_call.target, udf::initial_slots(u, args, base), Value::null()};
  std::vector<Value> current = encode_row(u, seed, options.dialect);
  if (options.keep_trace) res.trace.push_back(seed);
  res.rows_emitted = 1;
  res.max_working_set = 1;
  res.retained_cells = payload(current);

  for (;;) {
    RunRow r = decode_row(u, current, options.dialect);
    if (!r.call) {
      check_value_type(r.result, u.return_type, "result");
      res.value = r.result;
      break;
    }
    if (res.rows_emitted > options.iteration_cap)
      fail(ErrorKind::IterationCap, "iteration cap of " + std::to_string(options.iteration_cap) + " exceeded");

    ++res.stats.activations;
    udf::Step s = udf::evaluate_step(u, body, r.fn, r.args, base);
    RunRow next;
    next.call = s.call;
    if (s.call) {
      ++res.stats.tail_calls;
      next.fn = s.target;
      for (std::size_t i = 0; i < s.args.size(); ++i)
        check_value_type(s.args[i], u.slots[i].type, "argument " + u.slots[i].name);
      next.args = std::move(s.args);
      next.result = Value::null();
    } else {
      next.args.assign(u.slots.size(), Value::null());
      next.result = std::move(s.result);
    }
    check_row(next);
    std::vector<Value> encoded = encode_row(u, next, options.dialect);
    ++res.rows_emitted;
    if (options.keep_trace) res.trace.push_back(next);

    if (iterate) {
      res.max_working_set = std::max<std::uint64_t>(res.max_working_set, 2);
      res.retained_cells = std::max(res.retained_cells, payload(current) + payload(encoded));
    } else {
      res.max_working_set = res.rows_emitted;
      res.retained_cells += payload(encoded);
    }
    current = std::move(encoded);
  }
  res.stats.max_depth = 1;
  return res;
}

}  // namespace plaway::sim

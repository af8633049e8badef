#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "plaway/udf.hpp"

namespace plaway::sqlgen {

enum class Dialect { Postgres, Sqlite };
enum class Mode { Recursive, Iterate };

std::string_view dialect_name(Dialect d);
std::optional<Dialect> parse_dialect(std::string_view s);
std::string_view mode_name(Mode m);
std::optional<Mode> parse_mode(std::string_view s);

struct SqlQuery {
  std::string text;
  Dialect dialect = Dialect::Postgres;
  Mode mode = Mode::Recursive;
  TypeTag result_type = TypeTag::Int;
  std::vector<std::string> placeholders;  ///< parameter names, without the colon
};

/// Replaces calls by (true, (fn, args), NULL) rows and base cases by
/// (false, NULL, v) rows; slot and `fn` reads become qualified `r.x` reads.
udf::UExprRef adapt_body(const udf::Udf& u);

/// One let chain of the adapted body: LEFT JOIN LATERAL joins on postgres,
/// nested derived tables on sqlite.
std::string emit_let_chain(const udf::Udf& u, const udf::LetChain& chain, Dialect dialect);

/// Instantiates the WITH RECURSIVE template; parameters appear as `:name`
/// (`:name_x`/`:name_y` for coords on sqlite).
SqlQuery emit_cte(const udf::Udf& u, Dialect dialect, Mode mode = Mode::Recursive);

/// Parenthesized scalar subquery for textual inlining at a call site.
std::string wrap_inline(const SqlQuery& q);

/// Replaces `:name` placeholders by the given SQL fragments.
std::string bind_placeholders(const std::string& text, const std::map<std::string, std::string>& values);

/// Columns of the run table, `"call?"` first and `result` last.
std::vector<std::string> run_columns(const udf::Udf& u, Dialect dialect);

/// SQL literal for a value in the given dialect.
std::string sql_literal(const Value& v, Dialect dialect);

}  // namespace plaway::sqlgen

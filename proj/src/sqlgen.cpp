#include "plaway/sqlgen.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "plaway/error.hpp"

namespace plaway::sqlgen {

std::string_view dialect_name(Dialect d) { return d == Dialect::Postgres ? "postgres" : "sqlite"; }

std::optional<Dialect> parse_dialect(std::string_view s) {
  if (s == "postgres" || s == "postgresql" || s == "pg") return Dialect::Postgres;
  if (s == "sqlite") return Dialect::Sqlite;
  return std::nullopt;
}

std::string_view mode_name(Mode m) { return m == Mode::Recursive ? "recursive" : "iterate"; }

std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "recursive") return Mode::Recursive;
  if (s == "iterate") return Mode::Iterate;
  return std::nullopt;
}

namespace {

using udf::UExpr;
using udf::UExprRef;

UExprRef uexpr(UExpr e) { return UExprRef(std::move(e)); }

std::string type_sql(TypeTag t, Dialect d) {
  if (d == Dialect::Postgres) return std::string(type_name(t));
  switch (t) {
    case TypeTag::Int:
    case TypeTag::Bool: return "INTEGER";
    case TypeTag::Float: return "REAL";
    case TypeTag::Text:
    case TypeTag::Coord: return "TEXT";
  }
  return "TEXT";
}

std::string join(const std::vector<std::string>& xs, const std::string& sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
  return out;
}

class Adapter {
 public:
  explicit Adapter(const udf::Udf& u) : u_(u) {}

  UExprRef adapt(const UExprRef& e) {
    return std::visit(
        [&](const auto& n) -> UExprRef {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, udf::Case>) {
            udf::Case c;
            for (const auto& arm : n.arms) c.arms.push_back({qualify(arm.guard), adapt(arm.body), arm.label});
            if (n.otherwise) c.otherwise = adapt(n.otherwise);
            return uexpr({std::move(c)});
          } else if constexpr (std::is_same_v<T, udf::LetChain>) {
            udf::LetChain ch;
            std::size_t mark = lets_.size();
            for (const auto& b : n.bindings) {
              ch.bindings.push_back({b.var, qualify(b.value)});
              lets_.push_back(b.var);
            }
            ch.body = adapt(n.body);
            lets_.resize(mark);
            return uexpr({std::move(ch)});
          } else if constexpr (std::is_same_v<T, udf::RecCall>) {
            udf::RowLeaf row{true, n.target, {}, {}};
            for (const auto& a : n.args) row.args.push_back(qualify(a));
            return uexpr({std::move(row)});
          } else if constexpr (std::is_same_v<T, udf::BaseCase>) {
            return uexpr({udf::RowLeaf{false, 0, {}, qualify(n.value)}});
          } else {
            return e;
          }
        },
        e->node);
  }

 private:
  ExprRef qualify(const ExprRef& e) const {
    return substitute(e, [&](const VarRef& v) -> ExprRef {
      if (v.qualified) return {};
      for (const auto& l : lets_)
        if (l == v.name) return {};
      bool slot = u_.slot_index(v.name) != std::string::npos || (u_.has_fn && v.name == "fn");
      return slot ? var(v.name, true) : ExprRef{};
    });
  }

  const udf::Udf& u_;
  std::vector<std::string> lets_;
};

/// Renders expressions and leaves of the adapted body for one dialect.
class Emitter {
 public:
  Emitter(const udf::Udf& u, Dialect d) : u_(u), d_(d) {
    hooks_.literal = [this](const Value& v) { return sql_literal(v, d_); };
    hooks_.type = [this](TypeTag t) { return type_sql(t, d_); };
    hooks_.var = [this](const VarRef& v) { return var_text(v); };
    hooks_.query = [this](const Query& q, const std::vector<std::string>& args) {
      const QueryTemplate* t = find_query(q.id);
      std::vector<std::string> wrapped;
      for (std::size_t i = 0; i < args.size(); ++i)
        wrapped.push_back(is_atom(q.args[i]) ? args[i] : "(" + args[i] + ")");
      return "(" + compact_sql(t->render(wrapped)) + ")";
    };
    if (d_ == Dialect::Sqlite) hooks_.call = sqlite_call;
  }

  std::string expr(const ExprRef& e) const { return print_expr(e, hooks_); }

  bool is_coord_slot(const std::string& name) const {
    std::size_t i = u_.slot_index(name);
    return i != std::string::npos && u_.slots[i].type == TypeTag::Coord;
  }

  /// Row constructor for a leaf.
  std::string leaf(const udf::RowLeaf& row) const {
    std::string open = d_ == Dialect::Postgres ? "ROW(" : "json_array(";
    if (!row.call) {
      std::string v = expr(row.result);
      if (d_ == Dialect::Sqlite && u_.return_type == TypeTag::Coord) v = "json(" + v + ")";
      return open + "false, NULL, " + v + ")";
    }
    std::vector<std::string> args;
    if (u_.has_fn) args.push_back(std::to_string(row.target));
    for (std::size_t i = 0; i < row.args.size(); ++i) {
      if (d_ == Dialect::Sqlite && u_.slots[i].type == TypeTag::Coord) {
        auto parts = split_coord(row.args[i]);
        args.push_back(parts.first);
        args.push_back(parts.second);
      } else {
        args.push_back(expr(row.args[i]));
      }
    }
    return open + "true, " + open + join(args) + "), NULL)";
  }

  std::string guard(int label) const { return "r.fn = " + std::to_string(label); }

  /// The two flattened columns of a coord-valued expression on sqlite.
  std::pair<std::string, std::string> split_coord(const ExprRef& e) const {
    if (auto v = as<VarRef>(e); v && v->qualified && is_coord_slot(v->name))
      return {"r." + v->name + "_x", "r." + v->name + "_y"};
    if (auto l = as<Literal>(e)) {
      if (l->value.is_null()) return {"NULL", "NULL"};
      if (l->value.is_coord()) {
        const auto& t = l->value.as_tuple();
        return {format_value(t[0]), format_value(t[1])};
      }
    }
    std::string s = expr(e);
    return {"json_extract(" + s + ", '$[0]')", "json_extract(" + s + ", '$[1]')"};
  }

  udf::RenderHooks render_hooks() const {
    udf::RenderHooks h;
    h.expr = [this](const ExprRef& e, const std::vector<std::string>&) { return expr(e); };
    h.guard = [this](int label) { return guard(label); };
    h.leaf = [this](const UExpr& e, const std::vector<std::string>&) -> std::vector<std::string> {
      return {leaf(std::get<udf::RowLeaf>(e.node))};
    };
    return h;
  }

  /// Nested derived tables, one per binding; the body reads the outermost.
  std::vector<std::string> onion(const udf::LetChain& ch, int& alias,
                                 const std::function<std::vector<std::string>(const UExprRef&)>& body) const {
    std::vector<std::string> layer;
    std::string inner;
    for (std::size_t i = 0; i < ch.bindings.size(); ++i) {
      const auto& b = ch.bindings[i];
      std::string name = "_" + std::to_string(alias++);
      if (i == 0) {
        layer = {"(SELECT " + expr(b.value) + " AS " + b.var + ") AS " + name};
      } else {
        std::vector<std::string> next{"(SELECT " + inner + ".*, " + expr(b.value) + " AS " + b.var};
        next.push_back(" FROM " + layer[0]);
        for (std::size_t k = 1; k < layer.size(); ++k) next.push_back("      " + layer[k]);
        next.back() += ") AS " + name;
        layer = std::move(next);
      }
      inner = name;
    }
    std::vector<std::string> out{"(SELECT"};
    for (const auto& l : body(ch.body)) out.push_back("   " + l);
    out.push_back(" FROM");
    for (const auto& l : layer) out.push_back("  " + l);
    out.back() += ")";
    return out;
  }

  std::vector<std::string> render(const UExprRef& e, int& alias) const {
    if (d_ == Dialect::Postgres) return udf::render_expr(e, render_hooks(), alias);
    return render_sqlite(e, alias);
  }

 private:
  std::vector<std::string> render_sqlite(const UExprRef& e, int& alias) const {
    if (auto ch = std::get_if<udf::LetChain>(&e->node))
      return onion(*ch, alias, [&](const UExprRef& b) { return render_sqlite(b, alias); });
    if (auto c = std::get_if<udf::Case>(&e->node)) {
      std::vector<std::string> out{"CASE"};
      for (const auto& arm : c->arms) {
        out.push_back("  WHEN " + (arm.label >= 0 ? guard(arm.label) : expr(arm.guard)) + " THEN");
        for (const auto& l : render_sqlite(arm.body, alias)) out.push_back("       " + l);
      }
      if (c->otherwise) {
        auto body = render_sqlite(c->otherwise, alias);
        if (body.size() == 1) {
          out.push_back("  ELSE " + body[0]);
        } else {
          out.push_back("  ELSE");
          for (const auto& l : body) out.push_back("       " + l);
        }
      }
      out.push_back("END");
      return out;
    }
    return {leaf(std::get<udf::RowLeaf>(e->node))};
  }

  std::string var_text(const VarRef& v) const {
    if (!v.qualified) return v.name;
    if (d_ == Dialect::Sqlite && is_coord_slot(v.name))
      return "json_array(r." + v.name + "_x, r." + v.name + "_y)";
    return "r." + v.name;
  }

  const QueryTemplate* find_query(int id) const {
    for (const auto& q : u_.queries)
      if (q.id == id) return &q;
    fail(ErrorKind::Internal, "no template for query Q" + std::to_string(id));
  }

  static std::optional<std::string> sqlite_call(const Call& c, const std::vector<std::string>& a) {
    if (c.name == "random") return "(random() / 18446744073709551616.0 + 0.5)";
    if (c.name == "left") return "substr(" + a[0] + ", 1, " + a[1] + ")";
    if (c.name == "right") return "substr(" + a[0] + ", max(length(" + a[0] + ") - (" + a[1] + ") + 1, 1))";
    if (c.name == "least") return "min(" + join(a) + ")";
    if (c.name == "greatest") return "max(" + join(a) + ")";
    if (c.name == "mod") return "((" + a[0] + ") % (" + a[1] + "))";
    if (c.name == "row") return "json_array(" + join(a) + ")";
    return std::nullopt;
  }

  const udf::Udf& u_;
  Dialect d_;
  PrintHooks hooks_;
};

std::vector<std::string> indent(std::vector<std::string> lines, std::size_t n) {
  for (auto& l : lines) l = std::string(n, ' ') + l;
  return lines;
}

}  // namespace

std::string sql_literal(const Value& v, Dialect d) {
  if (v.is_float() && !std::isfinite(v.as_float())) {
    std::string s = format_float(v.as_float());
    return d == Dialect::Postgres ? "CAST('" + s + "' AS float)" : "CAST('" + s + "' AS REAL)";
  }
  if (v.is_coord() && d == Dialect::Sqlite) {
    const auto& t = v.as_tuple();
    return "json_array(" + format_value(t[0]) + ", " + format_value(t[1]) + ")";
  }
  return format_literal(v);
}

udf::UExprRef adapt_body(const udf::Udf& u) { return Adapter(u).adapt(u.body); }

std::string emit_let_chain(const udf::Udf& u, const udf::LetChain& chain, Dialect dialect) {
  Emitter em(u, dialect);
  int alias = 0;
  auto lines = em.render(chain.bindings.empty() ? chain.body : uexpr({chain}), alias);
  return join(lines, "\n");
}

std::vector<std::string> run_columns(const udf::Udf& u, Dialect dialect) {
  std::vector<std::string> cols{"\"call?\""};
  if (u.has_fn) cols.push_back("fn");
  for (const auto& s : u.slots) {
    if (dialect == Dialect::Sqlite && s.type == TypeTag::Coord) {
      cols.push_back(s.name + "_x");
      cols.push_back(s.name + "_y");
    } else {
      cols.push_back(s.name);
    }
  }
  cols.push_back("result");
  return cols;
}

SqlQuery emit_cte(const udf::Udf& u, Dialect dialect, Mode mode) {
  if (mode == Mode::Iterate && dialect == Dialect::Sqlite)
    fail(ErrorKind::Unsupported, "WITH ITERATE is not available for the sqlite dialect");
  SqlQuery q;
  q.dialect = dialect;
  q.mode = mode;
  q.result_type = u.return_type;
  for (const auto& p : u.params) {
    if (dialect == Dialect::Sqlite && p.type == TypeTag::Coord) {
      q.placeholders.push_back(p.name + "_x");
      q.placeholders.push_back(p.name + "_y");
    } else {
      q.placeholders.push_back(p.name);
    }
  }

  Emitter em(u, dialect);
  auto cols = run_columns(u, dialect);

  // Seed row: the wrapper's initial call, parameters as placeholders.
  PrintHooks seed_hooks;
  seed_hooks.literal = [&](const Value& v) { return sql_literal(v, dialect); };
  seed_hooks.var = [](const VarRef& v) { return ":" + v.name; };
  std::vector<std::string> seed{"true AS \"call?\""};
  if (u.has_fn) seed.push_back(std::to_string(u.initial_call.target) + " AS fn");
  for (std::size_t i = 0; i < u.slots.size(); ++i) {
    const auto& s = u.slots[i];
    const ExprRef& a = u.initial_call.args[i];
    bool null = as<Literal>(a) && as<Literal>(a)->value.is_null();
    if (dialect == Dialect::Sqlite && s.type == TypeTag::Coord) {
      std::string x, y;
      if (null) {
        x = y = "CAST(NULL AS INTEGER)";
      } else if (auto v = as<VarRef>(a)) {
        x = ":" + v->name + "_x";
        y = ":" + v->name + "_y";
      } else {
        const auto& t = as<Literal>(a)->value.as_tuple();
        x = format_value(t[0]);
        y = format_value(t[1]);
      }
      seed.push_back(x + " AS " + s.name + "_x");
      seed.push_back(y + " AS " + s.name + "_y");
    } else {
      std::string v = null ? "CAST(NULL AS " + type_sql(s.type, dialect) + ")" : print_expr(a, seed_hooks);
      seed.push_back(v + " AS " + s.name);
    }
  }
  seed.push_back("CAST(NULL AS " + type_sql(u.return_type, dialect) + ") AS result");

  auto adapted = adapt_body(u);
  int alias = 0;
  auto body = em.render(adapted, alias);

  std::vector<std::string> out;
  out.push_back(std::string(mode == Mode::Recursive ? "WITH RECURSIVE" : "WITH ITERATE") + " run(" + join(cols) +
                ") AS (");
  out.push_back("  -- original function call");
  out.push_back("  SELECT " + join(seed));
  out.push_back("    UNION ALL");
  out.push_back("  -- subsequent recursive calls and base cases");
  if (dialect == Dialect::Postgres) {
    out.push_back("  SELECT iter.*");
    out.push_back("  FROM   run AS r,");
    out.push_back("         LATERAL (SELECT");
    for (const auto& l : indent(body, 20)) out.push_back(l);
    out.back() += ") AS iter(" + join(cols) + ")";
  } else {
    std::vector<std::string> picks{"json_extract(iter.step, '$[0]')"};
    std::size_t k = 0;
    for (std::size_t c = 1; c + 1 < cols.size(); ++c)
      picks.push_back("json_extract(iter.step, '$[1][" + std::to_string(k++) + "]')");
    picks.push_back("json_extract(iter.step, '$[2]')");
    out.push_back("  SELECT " + join(picks));
    out.push_back("  FROM   run AS r,");
    out.push_back("         (SELECT");
    for (const auto& l : indent(body, 12)) out.push_back(l);
    out.push_back("          AS step) AS iter");
  }
  out.push_back("  WHERE  r.\"call?\"");
  out.push_back(")");
  out.push_back("-- extract result of final recursive function invocation");
  out.push_back("SELECT r.result");
  out.push_back("FROM   run AS r");
  out.push_back("WHERE  NOT r.\"call?\"");
  q.text = join(out, "\n") + "\n";
  return q;
}

std::string wrap_inline(const SqlQuery& q) {
  std::string t = q.text;
  while (!t.empty() && t.back() == '\n') t.pop_back();
  return "(" + t + ")";
}

std::string bind_placeholders(const std::string& text, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  bool quoted = false;
  while (i < text.size()) {
    char c = text[i];
    if (c == '\'') quoted = !quoted;
    bool ident_before = i > 0 && (std::isalnum(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == '_' ||
                                  text[i - 1] == ':');
    if (!quoted && c == ':' && !ident_before && i + 1 < text.size() &&
        (std::isalpha(static_cast<unsigned char>(text[i + 1])) || text[i + 1] == '_')) {
      std::size_t j = i + 1;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
      std::string name = text.substr(i + 1, j - i - 1);
      if (auto it = values.find(name); it != values.end()) {
        out += it->second;
        i = j;
        continue;
      }
    }
    out += c;
    ++i;
  }
  return out;
}

}  // namespace plaway::sqlgen

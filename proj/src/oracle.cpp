#include "plaway/oracle.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "plaway/error.hpp"

namespace plaway {

std::pair<double, std::uint32_t> next_random(std::uint32_t state) {
  std::uint32_t next = 1664525u * state + 1013904223u;
  return {static_cast<double>(next) / 4294967296.0, next};
}

std::size_t Table::column(const std::string& col) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == col) return i;
  fail(ErrorKind::Data, "table " + name + " has no column " + col);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line, const std::string& where) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = was_quoted = true;
    } else if (c == ',') {
      out.push_back(cell);
      cell.clear();
      was_quoted = false;
    } else {
      cell += c;
    }
  }
  if (quoted) fail(ErrorKind::Data, where + ": unterminated quote");
  (void)was_quoted;
  out.push_back(cell);
  return out;
}

}  // namespace

Table parse_csv_table(const std::string& name, const std::string& text, const std::string& origin) {
  Table t;
  t.name = name;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool header = true;
  std::set<std::string> keys;
  auto key_of = [&](const std::vector<Value>& row) {
    std::string k;
    for (std::size_t i = 0; i < t.columns.size(); ++i)
      if (t.columns[i].key) k += format_literal(row[i]) + '\x1f';
    return k;
  };
  bool has_key = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string where = origin + ":" + std::to_string(lineno);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto cells = split_csv_line(line, where);
    if (header) {
      for (const auto& cell : cells) {
        Column c;
        auto first = cell.find(':');
        if (first == std::string::npos) fail(ErrorKind::Data, where + ": header cell '" + cell + "' lacks a type");
        c.name = cell.substr(0, first);
        std::string rest = cell.substr(first + 1);
        auto second = rest.find(':');
        std::string type = rest.substr(0, second);
        if (second != std::string::npos) {
          if (rest.substr(second + 1) != "key") fail(ErrorKind::Data, where + ": bad header cell '" + cell + "'");
          c.key = true;
          has_key = true;
        }
        auto tag = parse_type_name(type);
        if (!tag) fail(ErrorKind::Data, where + ": unknown type '" + type + "'");
        c.type = *tag;
        t.columns.push_back(c);
      }
      header = false;
      continue;
    }
    if (cells.size() != t.columns.size())
      fail(ErrorKind::Data, where + ": expected " + std::to_string(t.columns.size()) + " fields, found " +
                                std::to_string(cells.size()));
    std::vector<Value> row;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      try {
        row.push_back(parse_value(cells[i], t.columns[i].type));
      } catch (const Error& e) {
        fail(ErrorKind::Data, where + ": " + e.what());
      }
    }
    if (has_key && !keys.insert(key_of(row)).second)
      fail(ErrorKind::Data, where + ": duplicate key in table " + name);
    t.rows.push_back(std::move(row));
  }
  if (header) fail(ErrorKind::Data, origin + ": missing header row");
  return t;
}

Tables load_tables(const std::filesystem::path& dir) {
  Tables out;
  if (!std::filesystem::is_directory(dir)) fail(ErrorKind::Data, "no table directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string name = path.stem().string();
    out[name] = parse_csv_table(name, buf.str(), path.string());
  }
  return out;
}

Value QueryOracle::eval_query(int id, const std::vector<Value>& params) {
  Value result = do_query(id, params);
  log_.push_back({OracleCall::Kind::Query, id, params, result});
  return result;
}

double QueryOracle::random() {
  double r = do_random();
  log_.push_back({OracleCall::Kind::Random, 0, {}, Value::floating(r)});
  return r;
}

std::size_t QueryOracle::query_count() const {
  return static_cast<std::size_t>(std::count_if(log_.begin(), log_.end(), [](const OracleCall& c) {
    return c.kind == OracleCall::Kind::Query;
  }));
}

std::size_t QueryOracle::random_count() const { return log_.size() - query_count(); }

TableOracle::TableOracle(std::shared_ptr<const Tables> tables, Evaluators evaluators, std::uint32_t seed)
    : tables_(tables ? std::move(tables) : std::make_shared<const Tables>()),
      evaluators_(std::move(evaluators)),
      state_(seed) {}

Value TableOracle::do_query(int id, const std::vector<Value>& params) {
  auto it = evaluators_.find(id);
  if (it == evaluators_.end()) fail(ErrorKind::Oracle, "no evaluator registered for Q" + std::to_string(id));
  return it->second(*tables_, params);
}

double TableOracle::do_random() {
  auto [value, next] = next_random(state_);
  state_ = next;
  return value;
}

}  // namespace plaway

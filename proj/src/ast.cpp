#include "plaway/ast.hpp"

#include <cctype>

namespace plaway {

std::string QueryTemplate::text() const {
  std::vector<std::string> names;
  for (const auto& p : params) names.push_back(":" + p);
  return render(names);
}

std::string QueryTemplate::render(const std::vector<std::string>& args) const {
  std::string out;
  for (const auto& seg : segments) {
    if (auto s = std::get_if<std::string>(&seg)) out += *s;
    else out += args.at(std::get<Hole>(seg).param);
  }
  return out;
}

std::string compact_sql(const std::string& text) {
  std::string out;
  char quote = 0;
  bool pending_space = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quote) {
      out += c;
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '-' && i + 1 < text.size() && text[i + 1] == '-') return text;
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') return text;
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    if (c == '\'' || c == '"') quote = c;
    out += c;
  }
  return out;
}

}  // namespace plaway

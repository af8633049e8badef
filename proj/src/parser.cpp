#include "plaway/parser.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "plaway/error.hpp"

namespace plaway {

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Ident, QuotedIdent, Number, String, Symbol, Dollar, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t begin = 0, end = 0;  ///< byte offsets into the lexed text
  int line = 1, col = 1;
};

std::string where(int line, int col) {
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

class Lexer {
 public:
  Lexer(std::string_view src, int line, int col) : src_(src), line_(line), col_(col) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.begin = pos_;
      t.line = line_;
      t.col = col_;
      if (pos_ >= src_.size()) {
        t.kind = Tok::End;
        t.end = pos_;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (c == '$') {
        lex_dollar(t);
      } else if (c == '\'') {
        lex_quoted(t, '\'', Tok::String);
      } else if (c == '"') {
        lex_quoted(t, '"', Tok::QuotedIdent);
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        lex_number(t);
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
                 (static_cast<unsigned char>(c) & 0x80)) {
        while (pos_ < src_.size() && is_ident_char(src_[pos_])) advance();
        t.kind = Tok::Ident;
        t.text = std::string(src_.substr(t.begin, pos_ - t.begin));
        std::transform(t.text.begin(), t.text.end(), t.text.begin(),
                       [](unsigned char ch) { return std::tolower(ch); });
      } else {
        lex_symbol(t);
      }
      t.end = pos_;
      out.push_back(t);
    }
  }

 private:
  static bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$' ||
           (static_cast<unsigned char>(c) & 0x80);
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else if ((static_cast<unsigned char>(src_[pos_]) & 0xC0) != 0x80) {
      ++col_;
    }
    ++pos_;
  }

  bool at(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorKind::Syntax, msg + " at " + where(line_, col_));
  }

  void skip_space() {
    for (;;) {
      if (pos_ >= src_.size()) return;
      if (std::isspace(static_cast<unsigned char>(src_[pos_]))) {
        advance();
      } else if (at("--")) {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (at("/*")) {
        int depth = 0;
        do {
          if (pos_ >= src_.size()) error("unterminated comment");
          if (at("/*")) {
            ++depth;
            advance();
          } else if (at("*/")) {
            --depth;
            advance();
          }
          advance();
        } while (depth > 0);
      } else {
        return;
      }
    }
  }

  void lex_dollar(Token& t) {
    std::size_t p = pos_ + 1;
    while (p < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[p])) || src_[p] == '_'))
      ++p;
    if (p >= src_.size() || src_[p] != '$') error("unexpected '$'");
    std::string delim(src_.substr(pos_, p - pos_ + 1));
    while (pos_ <= p) advance();
    auto close = src_.find(delim, pos_);
    if (close == std::string_view::npos) error("unterminated dollar-quoted string");
    t.kind = Tok::Dollar;
    t.begin = pos_;
    t.line = line_;
    t.col = col_;
    t.text = std::string(src_.substr(pos_, close - pos_));
    while (pos_ < close + delim.size()) advance();
  }

  void lex_quoted(Token& t, char quote, Tok kind) {
    advance();
    std::string value;
    for (;;) {
      if (pos_ >= src_.size()) error("unterminated quoted text");
      char c = src_[pos_];
      advance();
      if (c == quote) {
        if (pos_ < src_.size() && src_[pos_] == quote) {
          value += quote;
          advance();
          continue;
        }
        break;
      }
      value += c;
    }
    t.kind = kind;
    t.text = value;
  }

  void lex_number(Token& t) {
    auto digits = [&] {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    };
    digits();
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' && src_[pos_ + 1] != '.') {
      advance();
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      int line = line_, col = col_;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        digits();
      } else {
        pos_ = save;
        line_ = line;
        col_ = col;
      }
    }
    t.kind = Tok::Number;
    t.text = std::string(src_.substr(t.begin, pos_ - t.begin));
  }

  void lex_symbol(Token& t) {
    static const char* two[] = {":=", "::", "..", "<=", ">=", "<>", "!=", "||", "<<", ">>"};
    t.kind = Tok::Symbol;
    for (auto s : two) {
      if (at(s)) {
        t.text = s;
        advance();
        advance();
        return;
      }
    }
    static const std::string_view one = "()[],;+-*/%=<>.:^|&~!@#?{}";
    if (one.find(src_[pos_]) == std::string_view::npos)
      error(std::string("unexpected character '") + src_[pos_] + "'");
    t.text = std::string(1, src_[pos_]);
    advance();
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_, col_;
};

// ---------------------------------------------------------------------------
// Parser

const std::set<std::string> kUnsupportedStatements = {
    "foreach", "raise",  "perform", "case",   "begin",    "declare", "execute",
    "select",  "insert", "update",  "delete", "get",      "open",    "fetch",
    "close",   "move",   "call",    "commit", "rollback", "assert",  "goto"};

struct VarInfo {
  TypeTag type;
  bool loop_var = false;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::string_view text) : toks_(std::move(toks)), text_(text) {}

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }

  bool is_kw(const Token& t, std::string_view kw) const { return t.kind == Tok::Ident && t.text == kw; }
  bool is_sym(const Token& t, std::string_view s) const { return t.kind == Tok::Symbol && t.text == s; }
  bool accept_kw(std::string_view kw) {
    if (!is_kw(peek(), kw)) return false;
    next();
    return true;
  }
  bool accept_sym(std::string_view s) {
    if (!is_sym(peek(), s)) return false;
    next();
    return true;
  }

  [[noreturn]] void error_at(const Token& t, const std::string& msg) const {
    fail(ErrorKind::Syntax, msg + " at " + where(t.line, t.col));
  }
  [[noreturn]] void unexpected(const std::string& wanted) const {
    const Token& t = peek();
    std::string got = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    error_at(t, "expected " + wanted + " but found " + got);
  }

  void expect_kw(std::string_view kw) {
    std::string upper(kw);
    std::transform(upper.begin(), upper.end(), upper.begin(), ::toupper);
    if (!accept_kw(kw)) unexpected(upper);
  }
  void expect_sym(std::string_view s) {
    if (!accept_sym(s)) unexpected("'" + std::string(s) + "'");
  }
  std::string expect_ident(const std::string& what) {
    if (peek().kind != Tok::Ident) unexpected(what);
    return next().text;
  }

  TypeTag parse_type() {
    const Token& t = peek();
    std::string name = expect_ident("a type name");
    if (name == "setof" || name == "table" || name == "record" || name == "void")
      fail(ErrorKind::Unsupported, "unsupported construct " + to_upper(name) + " at " + where(t.line, t.col));
    if (name == "double") {
      expect_kw("precision");
      name = "double precision";
    }
    if (name == "varchar" || name == "character") {
      accept_kw("varying");
      if (accept_sym("(")) {
        next();
        expect_sym(")");
      }
      name = "text";
    }
    auto tag = parse_type_name(name);
    if (!tag) fail(ErrorKind::Unsupported, "unsupported type " + name + " at " + where(t.line, t.col));
    if (is_sym(peek(), "[")) fail(ErrorKind::Unsupported, "unsupported construct arrays at " + where(peek().line, peek().col));
    return *tag;
  }

  static std::string to_upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), ::toupper);
    return s;
  }

  // -- function header -------------------------------------------------------

  FunctionAst parse_header(std::string_view source) {
    FunctionAst f;
    expect_kw("create");
    if (accept_kw("or")) expect_kw("replace");
    if (is_kw(peek(), "procedure"))
      fail(ErrorKind::Unsupported, "unsupported construct PROCEDURE at " + where(peek().line, peek().col));
    expect_kw("function");
    f.name = expect_ident("a function name");
    expect_sym("(");
    if (!accept_sym(")")) {
      do {
        const Token& t = peek();
        if (is_kw(t, "out") || is_kw(t, "inout") || is_kw(t, "variadic"))
          fail(ErrorKind::Unsupported, "unsupported construct " + to_upper(t.text) + " parameters at " + where(t.line, t.col));
        if (is_kw(t, "in")) next();
        std::string name = expect_ident("a parameter name");
        TypeTag type = parse_type();
        if (is_kw(peek(), "default") || is_sym(peek(), "="))
          fail(ErrorKind::Unsupported, "unsupported construct parameter defaults at " + where(peek().line, peek().col));
        for (const auto& p : f.params)
          if (p.name == name) fail(ErrorKind::Semantic, "duplicate parameter " + name + " at " + where(t.line, t.col));
        f.params.push_back({name, type});
      } while (accept_sym(","));
      expect_sym(")");
    }
    expect_kw("returns");
    f.return_type = parse_type();

    std::optional<Token> body;
    std::optional<std::string> language;
    for (;;) {
      if (accept_kw("as")) {
        const Token& t = next();
        if (t.kind != Tok::Dollar && t.kind != Tok::String) error_at(t, "expected a quoted function body");
        body = t;
        if (t.kind == Tok::String) {
          // Body in single quotes: positions inside are approximate.
          body->line = t.line;
          body->col = t.col + 1;
        }
      } else if (accept_kw("language")) {
        const Token& t = next();
        language = t.text;
        if (t.kind == Tok::String) {
          std::transform(language->begin(), language->end(), language->begin(), ::tolower);
        }
      } else if (peek().kind == Tok::Ident &&
                 (peek().text == "immutable" || peek().text == "stable" || peek().text == "volatile" ||
                  peek().text == "strict" || peek().text == "parallel" || peek().text == "safe" ||
                  peek().text == "unsafe" || peek().text == "restricted")) {
        next();
      } else {
        break;
      }
    }
    accept_sym(";");
    if (peek().kind != Tok::End) unexpected("end of input");
    if (!body) unexpected("AS $$ ... $$");
    if (!language) fail(ErrorKind::Syntax, "missing LANGUAGE clause");
    if (*language != "plpgsql")
      fail(ErrorKind::Unsupported, "unsupported construct LANGUAGE " + *language);
    (void)source;
    body_ = *body;
    return f;
  }

  Token body_;

  // -- body --------------------------------------------------------------------

  void parse_body(FunctionAst& f) {
    fn_ = &f;
    for (const auto& p : f.params) scope_[p.name] = {p.type, false};
    if (is_sym(peek(), "<<")) {
      next();
      expect_ident("a label");
      expect_sym(">>");
    }
    if (accept_kw("declare")) {
      while (!is_kw(peek(), "begin")) {
        const Token& t = peek();
        if (t.kind == Tok::End) unexpected("BEGIN");
        std::string name = expect_ident("a variable name");
        if (is_kw(peek(), "constant"))
          fail(ErrorKind::Unsupported, "unsupported construct CONSTANT at " + where(peek().line, peek().col));
        if (is_kw(peek(), "alias") || is_kw(peek(), "cursor") || is_kw(peek(), "refcursor"))
          fail(ErrorKind::Unsupported, "unsupported construct " + to_upper(peek().text) + " at " + where(peek().line, peek().col));
        TypeTag type = parse_type();
        if (is_kw(peek(), "not"))
          fail(ErrorKind::Unsupported, "unsupported construct NOT NULL at " + where(peek().line, peek().col));
        ExprRef init;
        if (accept_sym(":=") || accept_sym("=") || accept_kw("default")) init = parse_expr();
        expect_sym(";");
        if (scope_.count(name))
          fail(ErrorKind::Semantic, "duplicate declaration of " + name + " at " + where(t.line, t.col));
        scope_[name] = {type, false};
        f.decls.push_back({name, type, init});
      }
    }
    expect_kw("begin");
    f.body = parse_stmts();
    if (is_kw(peek(), "exception"))
      fail(ErrorKind::Unsupported, "unsupported construct EXCEPTION at " + where(peek().line, peek().col));
    expect_kw("end");
    if (peek().kind == Tok::Ident) next();
    accept_sym(";");
    if (peek().kind != Tok::End) unexpected("end of function body");
  }

  bool at_block_end() const {
    const Token& t = peek();
    return t.kind == Tok::End || is_kw(t, "end") || is_kw(t, "else") || is_kw(t, "elsif") ||
           is_kw(t, "elseif") || is_kw(t, "exception");
  }

  StmtList parse_stmts() {
    StmtList out;
    while (!at_block_end()) {
      if (auto s = parse_stmt()) out.push_back(std::move(*s));
    }
    return out;
  }

  std::optional<Stmt> parse_stmt() {
    std::optional<std::string> label;
    if (is_sym(peek(), "<<")) {
      next();
      label = expect_ident("a label");
      expect_sym(">>");
      if (!is_kw(peek(), "for") && !is_kw(peek(), "while") && !is_kw(peek(), "loop")) {
        if (is_kw(peek(), "begin") || is_kw(peek(), "declare"))
          fail(ErrorKind::Unsupported, "unsupported construct nested block at " + where(peek().line, peek().col));
        unexpected("FOR, WHILE or LOOP after a label");
      }
    }
    const Token& t = peek();
    if (t.kind != Tok::Ident) unexpected("a statement");
    if (t.text == "if") return parse_if();
    if (t.text == "for") return parse_for(label);
    if (t.text == "while") return parse_while(label);
    if (t.text == "loop") return parse_loop(label);
    if (t.text == "exit" || t.text == "continue") return parse_exit();
    if (t.text == "return") return parse_return();
    if (t.text == "null" && is_sym(peek(1), ";")) {
      next();
      next();
      return std::nullopt;
    }
    if (kUnsupportedStatements.count(t.text))
      fail(ErrorKind::Unsupported, "unsupported construct " + to_upper(t.text) + " at " + where(t.line, t.col));
    if (is_sym(peek(1), ":=") || is_sym(peek(1), "=")) {
      std::string target = next().text;
      next();
      auto it = scope_.find(target);
      if (it == scope_.end())
        fail(ErrorKind::Undeclared, "undeclared variable " + target + " at " + where(t.line, t.col));
      if (it->second.loop_var)
        fail(ErrorKind::Semantic, "cannot assign to loop variable " + target + " at " + where(t.line, t.col));
      ExprRef value = parse_expr();
      expect_sym(";");
      return Stmt{Assign{target, value}};
    }
    if (is_sym(peek(1), "[") || is_sym(peek(1), "."))
      fail(ErrorKind::Unsupported, "unsupported construct field or element assignment at " + where(t.line, t.col));
    unexpected("a statement");
  }

  Stmt parse_if() {
    next();
    ExprRef cond = parse_expr();
    expect_kw("then");
    StmtList then_branch = parse_stmts();
    StmtList else_branch;
    if (is_kw(peek(), "elsif") || is_kw(peek(), "elseif")) {
      else_branch.push_back(parse_if());
      return Stmt{If{cond, std::move(then_branch), std::move(else_branch)}};
    }
    if (accept_kw("else")) else_branch = parse_stmts();
    expect_kw("end");
    expect_kw("if");
    expect_sym(";");
    return Stmt{If{cond, std::move(then_branch), std::move(else_branch)}};
  }

  void end_loop(const std::optional<std::string>& label) {
    expect_kw("end");
    expect_kw("loop");
    if (peek().kind == Tok::Ident) {
      const Token& t = next();
      if (!label || *label != t.text) error_at(t, "END LOOP label " + t.text + " does not match");
    }
    expect_sym(";");
  }

  Stmt parse_for(const std::optional<std::string>& label) {
    next();
    const Token& vt = peek();
    std::string var = expect_ident("a loop variable");
    expect_kw("in");
    if (is_kw(peek(), "reverse"))
      fail(ErrorKind::Unsupported, "unsupported construct REVERSE at " + where(peek().line, peek().col));
    if (is_kw(peek(), "select") || is_kw(peek(), "execute") || is_kw(peek(), "with") ||
        (is_sym(peek(), "(") && (is_kw(peek(1), "select") || is_kw(peek(1), "with"))))
      fail(ErrorKind::Unsupported, "unsupported construct FOR over a query at " + where(peek().line, peek().col));
    ExprRef lo = parse_expr();
    if (!is_sym(peek(), "..")) {
      fail(ErrorKind::Unsupported, "unsupported construct FOR over a query at " + where(vt.line, vt.col));
    }
    next();
    ExprRef hi = parse_expr();
    if (is_kw(peek(), "by"))
      fail(ErrorKind::Unsupported, "unsupported construct FOR ... BY at " + where(peek().line, peek().col));
    expect_kw("loop");
    if (scope_.count(var))
      fail(ErrorKind::Semantic, "loop variable " + var + " shadows another variable at " + where(vt.line, vt.col));
    scope_[var] = {TypeTag::Int, true};
    loops_.push_back(label);
    StmtList body = parse_stmts();
    loops_.pop_back();
    scope_.erase(var);
    end_loop(label);
    return Stmt{ForRange{label, var, lo, hi, std::move(body)}};
  }

  Stmt parse_while(const std::optional<std::string>& label) {
    next();
    ExprRef cond = parse_expr();
    expect_kw("loop");
    loops_.push_back(label);
    StmtList body = parse_stmts();
    loops_.pop_back();
    end_loop(label);
    return Stmt{While{label, cond, std::move(body)}};
  }

  Stmt parse_loop(const std::optional<std::string>& label) {
    next();
    loops_.push_back(label);
    StmtList body = parse_stmts();
    loops_.pop_back();
    end_loop(label);
    return Stmt{Loop{label, std::move(body)}};
  }

  Stmt parse_exit() {
    const Token& t = next();
    bool is_exit = t.text == "exit";
    std::optional<std::string> label;
    if (peek().kind == Tok::Ident && !is_kw(peek(), "when")) label = next().text;
    ExprRef cond;
    if (accept_kw("when")) cond = parse_expr();
    expect_sym(";");
    std::string what = is_exit ? "EXIT" : "CONTINUE";
    if (loops_.empty()) fail(ErrorKind::Semantic, what + " outside a loop at " + where(t.line, t.col));
    if (label && std::find(loops_.begin(), loops_.end(), label) == loops_.end())
      fail(ErrorKind::Semantic, what + " names unknown loop label " + *label + " at " + where(t.line, t.col));
    if (is_exit) return Stmt{Exit{label, cond}};
    return Stmt{Continue{label, cond}};
  }

  Stmt parse_return() {
    const Token& t = next();
    if (is_kw(peek(), "next") || is_kw(peek(), "query"))
      fail(ErrorKind::Unsupported, "unsupported construct RETURN " + to_upper(peek().text) + " at " + where(peek().line, peek().col));
    if (is_sym(peek(), ";")) fail(ErrorKind::Semantic, "RETURN needs a value at " + where(t.line, t.col));
    ExprRef value = parse_expr();
    expect_sym(";");
    return Stmt{Return{value}};
  }

  // -- expressions ---------------------------------------------------------------

  ExprRef parse_expr() { return parse_or(); }

  ExprRef parse_or() {
    ExprRef e = parse_and();
    while (accept_kw("or")) e = binary(BinOp::Or, e, parse_and());
    return e;
  }

  ExprRef parse_and() {
    ExprRef e = parse_not();
    while (accept_kw("and")) e = binary(BinOp::And, e, parse_not());
    return e;
  }

  ExprRef parse_not() {
    if (accept_kw("not")) return unary(UnOp::Not, parse_not());
    return parse_is();
  }

  ExprRef parse_is() {
    ExprRef e = parse_cmp();
    while (is_kw(peek(), "is")) {
      const Token& t = next();
      bool negated = accept_kw("not");
      if (!accept_kw("null")) {
        if (is_kw(peek(), "distinct") || is_kw(peek(), "true") || is_kw(peek(), "false"))
          fail(ErrorKind::Unsupported, "unsupported construct IS " + to_upper(peek().text) + " at " + where(t.line, t.col));
        unexpected("NULL");
      }
      e = unary(negated ? UnOp::IsNotNull : UnOp::IsNull, e);
    }
    return e;
  }

  std::optional<BinOp> cmp_op(const Token& t) const {
    if (t.kind != Tok::Symbol) return std::nullopt;
    if (t.text == "=") return BinOp::Eq;
    if (t.text == "<>" || t.text == "!=") return BinOp::Ne;
    if (t.text == "<") return BinOp::Lt;
    if (t.text == "<=") return BinOp::Le;
    if (t.text == ">") return BinOp::Gt;
    if (t.text == ">=") return BinOp::Ge;
    return std::nullopt;
  }

  ExprRef parse_cmp() {
    ExprRef e = parse_concat();
    if (auto op = cmp_op(peek())) {
      next();
      e = binary(*op, e, parse_concat());
      if (cmp_op(peek())) error_at(peek(), "comparison operators do not associate; add parentheses");
    }
    if (is_kw(peek(), "between") || is_kw(peek(), "like") || is_kw(peek(), "in") || is_kw(peek(), "ilike"))
      fail(ErrorKind::Unsupported, "unsupported construct " + to_upper(peek().text) + " at " + where(peek().line, peek().col));
    return e;
  }

  ExprRef parse_concat() {
    ExprRef e = parse_add();
    while (accept_sym("||")) e = binary(BinOp::Concat, e, parse_add());
    return e;
  }

  ExprRef parse_add() {
    ExprRef e = parse_mul();
    for (;;) {
      if (accept_sym("+")) e = binary(BinOp::Add, e, parse_mul());
      else if (accept_sym("-")) e = binary(BinOp::Sub, e, parse_mul());
      else return e;
    }
  }

  ExprRef parse_mul() {
    ExprRef e = parse_unary();
    for (;;) {
      if (accept_sym("*")) e = binary(BinOp::Mul, e, parse_unary());
      else if (accept_sym("/")) e = binary(BinOp::Div, e, parse_unary());
      else if (accept_sym("%")) e = binary(BinOp::Mod, e, parse_unary());
      else return e;
    }
  }

  ExprRef parse_unary() {
    if (is_sym(peek(), "-")) {
      if (peek(1).kind == Tok::Number) {
        next();
        const Token& num = next();
        return parse_postfix(number_literal(num, true));
      }
      next();
      return unary(UnOp::Neg, parse_unary());
    }
    if (accept_sym("+")) return parse_unary();
    return parse_postfix(parse_primary());
  }

  ExprRef parse_postfix(ExprRef e) {
    while (accept_sym("::")) e = cast(e, parse_type());
    if (is_sym(peek(), "[") || is_sym(peek(), "."))
      fail(ErrorKind::Unsupported, "unsupported construct field or element access at " + where(peek().line, peek().col));
    return e;
  }

  ExprRef number_literal(const Token& t, bool negative) {
    std::string text = (negative ? "-" : "") + t.text;
    if (t.text.find_first_of(".eE") != std::string::npos) {
      auto d = parse_float(text);
      if (!d) error_at(t, "bad number " + text);
      return lit(Value::floating(*d));
    }
    auto i = parse_int(text);
    if (!i) error_at(t, "integer out of range: " + text);
    return lit(Value::integer(*i));
  }

  std::vector<ExprRef> parse_args() {
    std::vector<ExprRef> args;
    expect_sym("(");
    if (accept_sym(")")) return args;
    do {
      args.push_back(parse_expr());
    } while (accept_sym(","));
    expect_sym(")");
    return args;
  }

  ExprRef parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number:
        next();
        return number_literal(t, false);
      case Tok::String:
        next();
        return lit(Value::text(t.text));
      case Tok::Symbol:
        if (t.text == "(") {
          if (is_kw(peek(1), "select") || is_kw(peek(1), "with") || is_kw(peek(1), "values"))
            return parse_query();
          next();
          std::vector<ExprRef> items{parse_expr()};
          while (accept_sym(",")) items.push_back(parse_expr());
          expect_sym(")");
          if (items.size() == 1) return items[0];
          if (items.size() != 2)
            fail(ErrorKind::Unsupported, "unsupported construct row of arity " + std::to_string(items.size()) + " at " + where(t.line, t.col));
          return call("row", items);
        }
        unexpected("an expression");
      case Tok::Ident:
        break;
      default:
        unexpected("an expression");
    }
    if (t.text == "true" || t.text == "false") {
      next();
      return lit(Value::boolean(t.text == "true"));
    }
    if (t.text == "null") {
      next();
      return lit(Value::null());
    }
    if (t.text == "cast" && is_sym(peek(1), "(")) {
      next();
      next();
      ExprRef arg = parse_expr();
      expect_kw("as");
      TypeTag type = parse_type();
      expect_sym(")");
      return cast(arg, type);
    }
    if (t.text == "case" || t.text == "exists" || t.text == "array")
      fail(ErrorKind::Unsupported, "unsupported construct " + to_upper(t.text) + " at " + where(t.line, t.col));
    if (t.text == "row" && is_sym(peek(1), "(")) {
      next();
      auto args = parse_args();
      if (args.size() != 2)
        fail(ErrorKind::Unsupported, "unsupported construct row of arity " + std::to_string(args.size()) + " at " + where(t.line, t.col));
      return call("row", args);
    }
    next();
    if (is_sym(peek(), "(")) {
      if (!is_builtin(t.text))
        fail(ErrorKind::Unsupported, "unsupported function " + t.text + "() at " + where(t.line, t.col));
      return call(t.text, parse_args());
    }
    if (!scope_.count(t.text))
      fail(ErrorKind::Undeclared, "undeclared variable " + t.text + " at " + where(t.line, t.col));
    return var(t.text);
  }

  ExprRef parse_query() {
    std::size_t open = pos_;
    next();
    int depth = 1;
    std::size_t close = pos_;
    for (;;) {
      const Token& t = peek();
      if (t.kind == Tok::End) error_at(toks_[open], "unterminated embedded query");
      if (is_sym(t, "(")) ++depth;
      if (is_sym(t, ")") && --depth == 0) {
        close = pos_;
        next();
        break;
      }
      next();
    }
    QueryTemplate q;
    q.id = static_cast<int>(fn_->queries.size()) + 1;
    std::size_t cursor = toks_[open].end;
    for (std::size_t i = open + 1; i < close; ++i) {
      const Token& t = toks_[i];
      if (t.kind != Tok::Ident || !scope_.count(t.text)) continue;
      const Token& prev = toks_[i - 1];
      const Token& after = toks_[i + 1];
      if (is_sym(prev, ".") || is_sym(prev, "::") || is_sym(after, "(") || is_sym(after, ".")) continue;
      q.segments.emplace_back(std::string(text_.substr(cursor, t.begin - cursor)));
      auto it = std::find(q.params.begin(), q.params.end(), t.text);
      std::size_t index = static_cast<std::size_t>(it - q.params.begin());
      if (it == q.params.end()) q.params.push_back(t.text);
      q.segments.emplace_back(QueryTemplate::Hole{index});
      cursor = t.end;
    }
    q.segments.emplace_back(std::string(text_.substr(cursor, toks_[close].begin - cursor)));
    std::vector<ExprRef> args;
    for (const auto& p : q.params) args.push_back(var(p));
    fn_->queries.push_back(std::move(q));
    unresolved_.insert(fn_->queries.back().id);
    return query(fn_->queries.back().id, std::move(args));
  }

  std::set<int> unresolved_;

 private:
  std::vector<Token> toks_;
  std::string_view text_;
  std::size_t pos_ = 0;
  FunctionAst* fn_ = nullptr;
  std::map<std::string, VarInfo> scope_;
  std::vector<std::optional<std::string>> loops_;
};

// ---------------------------------------------------------------------------
// Static checks: query result types, expression types, definite return

class Checker {
 public:
  Checker(FunctionAst& f, std::set<int> unresolved) : f_(f), unresolved_(std::move(unresolved)) {
    for (const auto& p : f.params) types_[p.name] = p.type;
    for (const auto& d : f.decls) types_[d.name] = d.type;
  }

  void run() {
    for (const auto& d : f_.decls)
      if (d.init) check(d.init, d.type, "initialiser of " + d.name);
    check_list(f_.body);
    if (!returns(f_.body))
      fail(ErrorKind::Semantic, "control reaches the end of function " + f_.name + " without RETURN");
  }

 private:
  std::optional<TypeTag> type_of_var(const VarRef& v) const {
    auto it = types_.find(v.name);
    if (it == types_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<TypeTag> query_type(const Query& q) const {
    if (unresolved_.count(q.id)) return std::nullopt;
    return f_.queries[static_cast<std::size_t>(q.id - 1)].result_type;
  }

  std::optional<TypeTag> infer(const ExprRef& e) const {
    return infer_type(
        e, [&](const VarRef& v) { return type_of_var(v); },
        [&](const Query& q) { return query_type(q); });
  }

  /// Gives each embedded query the type its context demands.
  void resolve(const ExprRef& e, std::optional<TypeTag> expected) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Query>) {
            for (const auto& a : n.args) resolve(a, std::nullopt);
            if (unresolved_.count(n.id)) {
              if (!expected)
                fail(ErrorKind::TypeMismatch,
                     "cannot infer the result type of embedded query Q" + std::to_string(n.id) +
                         "; wrap it in CAST(... AS type)");
              f_.queries[static_cast<std::size_t>(n.id - 1)].result_type = *expected;
              unresolved_.erase(n.id);
            }
          } else if constexpr (std::is_same_v<T, Cast>) {
            resolve(n.arg, n.type);
          } else if constexpr (std::is_same_v<T, Unary>) {
            if (n.op == UnOp::Neg) resolve(n.arg, expected);
            else if (n.op == UnOp::Not) resolve(n.arg, TypeTag::Bool);
            else resolve(n.arg, std::nullopt);
          } else if constexpr (std::is_same_v<T, Binary>) {
            switch (n.op) {
              case BinOp::And:
              case BinOp::Or:
                resolve(n.lhs, TypeTag::Bool);
                resolve(n.rhs, TypeTag::Bool);
                break;
              case BinOp::Concat:
                resolve(n.lhs, TypeTag::Text);
                resolve(n.rhs, TypeTag::Text);
                break;
              case BinOp::Mod:
                resolve(n.lhs, TypeTag::Int);
                resolve(n.rhs, TypeTag::Int);
                break;
              default: {
                bool arithmetic = n.op == BinOp::Add || n.op == BinOp::Sub || n.op == BinOp::Mul ||
                                  n.op == BinOp::Div;
                pair(n.lhs, n.rhs, arithmetic ? expected : std::nullopt);
              }
            }
          } else if constexpr (std::is_same_v<T, Call>) {
            const std::string& name = n.name;
            for (std::size_t i = 0; i < n.args.size(); ++i) {
              std::optional<TypeTag> hint;
              if (name == "sign" || name == "abs" || name == "coalesce" || name == "least" ||
                  name == "greatest")
                hint = expected;
              else if (name == "row" || name == "mod") hint = TypeTag::Int;
              else if (name == "floor" || name == "ceil" || name == "round") hint = TypeTag::Float;
              else if (name == "length" || name == "upper") hint = TypeTag::Text;
              else if (name == "substr" || name == "left" || name == "right")
                hint = i == 0 ? TypeTag::Text : TypeTag::Int;
              if ((name == "coalesce" || name == "least" || name == "greatest") && !hint) {
                for (const auto& other : n.args)
                  if (!as<Query>(other))
                    if (auto t = infer_partial(other)) hint = t;
              }
              resolve(n.args[i], hint);
            }
          }
        },
        e->node);
  }

  /// Type of an expression whose embedded queries may still be unresolved.
  std::optional<TypeTag> infer_partial(const ExprRef& e) const {
    try {
      return infer(e);
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  void pair(const ExprRef& a, const ExprRef& b, std::optional<TypeTag> expected) {
    bool qa = as<Query>(a) != nullptr, qb = as<Query>(b) != nullptr;
    if (qa && !qb) {
      resolve(b, expected);
      auto t = infer_partial(b);
      resolve(a, t ? t : expected);
    } else if (qb) {
      resolve(a, expected);
      auto t = infer_partial(a);
      resolve(b, t ? t : expected);
    } else {
      resolve(a, expected);
      resolve(b, expected);
    }
  }

  void check(const ExprRef& e, std::optional<TypeTag> expected, const std::string& what) {
    resolve(e, expected);
    auto t = infer(e);
    if (expected && t && *t != *expected)
      fail(ErrorKind::TypeMismatch, what + " has type " + std::string(type_name(*t)) + ", expected " +
                                        std::string(type_name(*expected)));
  }

  void check_list(const StmtList& list) {
    for (const auto& s : list) check_stmt(s);
  }

  void check_stmt(const Stmt& s) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Assign>) {
            check(n.value, types_.at(n.target), "assignment to " + n.target);
          } else if constexpr (std::is_same_v<T, If>) {
            check(n.cond, TypeTag::Bool, "IF condition");
            check_list(n.then_branch);
            check_list(n.else_branch);
          } else if constexpr (std::is_same_v<T, ForRange>) {
            check(n.lo, TypeTag::Int, "FOR lower bound");
            check(n.hi, TypeTag::Int, "FOR upper bound");
            types_[n.var] = TypeTag::Int;
            check_list(n.body);
          } else if constexpr (std::is_same_v<T, While>) {
            check(n.cond, TypeTag::Bool, "WHILE condition");
            check_list(n.body);
          } else if constexpr (std::is_same_v<T, Loop>) {
            check_list(n.body);
          } else if constexpr (std::is_same_v<T, Exit> || std::is_same_v<T, Continue>) {
            if (n.cond) check(n.cond, TypeTag::Bool, "WHEN condition");
          } else {
            check(n.value, f_.return_type, "RETURN value");
          }
        },
        s.node);
  }

  static bool returns(const StmtList& list) {
    for (const auto& s : list)
      if (always_returns(s)) return true;
    return false;
  }

  static bool always_returns(const Stmt& s) {
    if (std::holds_alternative<Return>(s.node)) return true;
    if (auto i = std::get_if<If>(&s.node)) return returns(i->then_branch) && returns(i->else_branch);
    if (auto l = std::get_if<Loop>(&s.node)) return !exits(l->body, l->label, true);
    return false;
  }

  /// True if some EXIT in `list` leaves the loop labelled `label` (or the
  /// innermost loop, when `innermost`).
  static bool exits(const StmtList& list, const std::optional<std::string>& label, bool innermost) {
    for (const auto& s : list) {
      if (auto e = std::get_if<Exit>(&s.node)) {
        if (!e->label ? innermost : (label && *e->label == *label)) return true;
      } else if (auto i = std::get_if<If>(&s.node)) {
        if (exits(i->then_branch, label, innermost) || exits(i->else_branch, label, innermost)) return true;
      } else if (auto f = std::get_if<ForRange>(&s.node)) {
        if (exits(f->body, label, false)) return true;
      } else if (auto w = std::get_if<While>(&s.node)) {
        if (exits(w->body, label, false)) return true;
      } else if (auto l = std::get_if<Loop>(&s.node)) {
        if (exits(l->body, label, false)) return true;
      }
    }
    return false;
  }

  FunctionAst& f_;
  std::set<int> unresolved_;
  std::map<std::string, TypeTag> types_;
};

// ---------------------------------------------------------------------------
// Printing

class SourcePrinter {
 public:
  explicit SourcePrinter(const FunctionAst& f) : f_(f) {}

  std::string expr(const ExprRef& e) const { return print_source_expr(e, f_.queries); }

  void stmts(const StmtList& list, int indent) {
    for (const auto& s : list) stmt(s, indent);
  }

  void line(int indent, const std::string& text) { out_ += std::string(static_cast<std::size_t>(indent), ' ') + text + "\n"; }

  void label(int indent, const std::optional<std::string>& l) {
    if (l) line(indent, "<<" + *l + ">>");
  }

  void stmt(const Stmt& s, int indent) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Assign>) {
            line(indent, n.target + " = " + expr(n.value) + ";");
          } else if constexpr (std::is_same_v<T, If>) {
            line(indent, "IF " + expr(n.cond) + " THEN");
            if_tail(n, indent);
          } else if constexpr (std::is_same_v<T, ForRange>) {
            label(indent, n.label);
            line(indent, "FOR " + n.var + " IN " + expr(n.lo) + ".." + expr(n.hi) + " LOOP");
            stmts(n.body, indent + 2);
            line(indent, "END LOOP;");
          } else if constexpr (std::is_same_v<T, While>) {
            label(indent, n.label);
            line(indent, "WHILE " + expr(n.cond) + " LOOP");
            stmts(n.body, indent + 2);
            line(indent, "END LOOP;");
          } else if constexpr (std::is_same_v<T, Loop>) {
            label(indent, n.label);
            line(indent, "LOOP");
            stmts(n.body, indent + 2);
            line(indent, "END LOOP;");
          } else if constexpr (std::is_same_v<T, Exit> || std::is_same_v<T, Continue>) {
            std::string text = std::is_same_v<T, Exit> ? "EXIT" : "CONTINUE";
            if (n.label) text += " " + *n.label;
            if (n.cond) text += " WHEN " + expr(n.cond);
            line(indent, text + ";");
          } else {
            line(indent, "RETURN " + expr(n.value) + ";");
          }
        },
        s.node);
  }

  void if_tail(const If& n, int indent) {
    stmts(n.then_branch, indent + 2);
    if (n.else_branch.size() == 1) {
      if (auto inner = std::get_if<If>(&n.else_branch[0].node)) {
        line(indent, "ELSIF " + expr(inner->cond) + " THEN");
        if_tail(*inner, indent);
        return;
      }
    }
    if (!n.else_branch.empty()) {
      line(indent, "ELSE");
      stmts(n.else_branch, indent + 2);
    }
    line(indent, "END IF;");
  }

  std::string run() {
    std::string params;
    for (std::size_t i = 0; i < f_.params.size(); ++i) {
      if (i) params += ", ";
      params += f_.params[i].name + " " + std::string(type_name(f_.params[i].type));
    }
    out_ += "CREATE FUNCTION " + f_.name + "(" + params + ")\n";
    out_ += "RETURNS " + std::string(type_name(f_.return_type)) + " AS $$\n";
    if (!f_.decls.empty()) {
      out_ += "DECLARE\n";
      for (const auto& d : f_.decls) {
        std::string text = d.name + " " + std::string(type_name(d.type));
        if (d.init) text += " = " + expr(d.init);
        line(2, text + ";");
      }
    }
    out_ += "BEGIN\n";
    stmts(f_.body, 2);
    out_ += "END;\n$$ LANGUAGE plpgsql\n";
    return out_;
  }

 private:
  const FunctionAst& f_;
  std::string out_;
};

}  // namespace

FunctionAst parse_function(std::string_view source) {
  Parser outer(Lexer(source, 1, 1).run(), source);
  FunctionAst f = outer.parse_header(source);
  const Token& body = outer.body_;
  Parser inner(Lexer(body.text, body.line, body.col).run(), body.text);
  inner.parse_body(f);
  Checker(f, inner.unresolved_).run();
  return f;
}

std::vector<QueryTemplate> extract_embedded_queries(const FunctionAst& ast) { return ast.queries; }

std::string print_source_expr(const ExprRef& e, const std::vector<QueryTemplate>& queries) {
  PrintHooks hooks;
  hooks.query = [&](const Query& q, const std::vector<std::string>& args) {
    return "(" + queries.at(static_cast<std::size_t>(q.id - 1)).render(args) + ")";
  };
  return print_expr(e, hooks);
}

std::string print_function(const FunctionAst& ast) { return SourcePrinter(ast).run(); }

}  // namespace plaway

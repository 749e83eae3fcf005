#include "subleq/cc/parser.hpp"

#include <cstdint>

#include "subleq/cc/lexer.hpp"
#include "subleq/error.hpp"

namespace subleq::cc {

namespace {

class Parser {
public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Unit unit() {
    Unit u;
    while (!at_eof()) external(u);
    return u;
  }

  Expr lone_expression() {
    Expr e = expression();
    if (!at_eof()) fail("unexpected '" + cur().text + "' after expression");
    return e;
  }

private:
  // --- token helpers -------------------------------------------------------

  const Token& cur() const { return toks_[i_]; }
  const Token& look(std::size_t k) const {
    return toks_[std::min(i_ + k, toks_.size() - 1)];
  }
  bool at_eof() const { return cur().kind == TokenKind::eof; }
  bool is_punct(std::string_view p) const { return cur().kind == TokenKind::punct && cur().text == p; }
  bool is_keyword(std::string_view k) const { return cur().kind == TokenKind::keyword && cur().text == k; }
  bool is_type() const { return is_keyword("int") || is_keyword("char") || is_keyword("void"); }

  Token take() { return toks_[i_++]; }

  bool accept(std::string_view p) {
    if (!is_punct(p)) return false;
    ++i_;
    return true;
  }

  void expect(std::string_view p) {
    if (!accept(p)) fail("expected '" + std::string(p) + "'");
  }

  std::string expect_identifier() {
    if (cur().kind != TokenKind::identifier) fail("expected identifier");
    return take().text;
  }

  [[noreturn]] void unsupported(const std::string& what) const {
    throw Error(Errc::unsupported_construct, what + " is not supported", cur().pos.line, cur().pos.column);
  }

  [[noreturn]] void fail(const std::string& msg) const {
    std::string found = at_eof() ? "end of input" : "'" + cur().text + "'";
    if (cur().kind == TokenKind::number) found = "number";
    if (cur().kind == TokenKind::string) found = "string literal";
    throw Error(Errc::syntax_error, msg + ", found " + found, cur().pos.line, cur().pos.column);
  }

  // --- declarations --------------------------------------------------------

  void skip_type() {
    if (!is_type()) fail("expected type");
    ++i_;
  }

  void external(Unit& u) {
    SourcePos at = cur().pos;
    skip_type();
    while (accept("*")) {
    }
    std::string name = expect_identifier();
    if (accept("(")) {
      Function fn;
      fn.name = name;
      fn.pos = at;
      fn.params = parameters();
      if (accept(";")) {
        u.prototypes.push_back(name);
        return;
      }
      if (!is_punct("{")) fail("expected '{' or ';' after function declarator");
      fn.body = block_items();
      u.functions.push_back(std::move(fn));
      return;
    }
    u.globals.push_back(declarator_rest(std::move(name), at));
    while (accept(",")) u.globals.push_back(declarator());
    expect(";");
  }

  std::vector<Declarator> parameters() {
    std::vector<Declarator> ps;
    if (accept(")")) return ps;
    if (is_keyword("void") && look(1).kind == TokenKind::punct && look(1).text == ")") {
      i_ += 2;
      return ps;
    }
    do {
      Declarator d;
      d.pos = cur().pos;
      skip_type();
      while (accept("*")) {
      }
      d.name = expect_identifier();
      if (accept("[")) {
        if (cur().kind == TokenKind::number) ++i_;
        expect("]");
      }
      ps.push_back(std::move(d));
    } while (accept(","));
    expect(")");
    return ps;
  }

  Declarator declarator() {
    SourcePos at = cur().pos;
    while (accept("*")) {
    }
    return declarator_rest(expect_identifier(), at);
  }

  Declarator declarator_rest(std::string name, SourcePos at) {
    Declarator d;
    d.name = std::move(name);
    d.pos = at;
    if (accept("[")) {
      d.is_array = true;
      if (!is_punct("]")) {
        SourcePos sp = cur().pos;
        auto n = fold_constant(conditional());
        if (!n || *n <= 0) throw Error(Errc::syntax_error, "array size must be a positive constant", sp.line, sp.column);
        d.array_size = *n;
      }
      expect("]");
    }
    if (accept("=")) {
      if (accept("{")) {
        if (!d.is_array) fail("brace initializer on a scalar");
        if (!is_punct("}")) {
          do {
            if (is_punct("}")) break;
            d.init.push_back(assignment());
          } while (accept(","));
        }
        expect("}");
        if (d.array_size == 0) d.array_size = static_cast<int>(d.init.size());
        if (static_cast<int>(d.init.size()) > d.array_size) fail("too many initializers");
      } else {
        if (d.is_array) fail("array initializer must be a brace list");
        d.init.push_back(assignment());
      }
    }
    if (d.is_array && d.array_size == 0) fail("array size required");
    return d;
  }

  // --- statements ----------------------------------------------------------

  std::vector<Stmt> block_items() {
    expect("{");
    std::vector<Stmt> items;
    while (!accept("}")) {
      if (at_eof()) fail("expected '}'");
      items.push_back(statement());
    }
    return items;
  }

  Stmt statement() {
    Stmt s;
    s.pos = cur().pos;
    if (is_type()) {
      s.kind = Stmt::Kind::decl;
      skip_type();
      do s.decls.push_back(declarator());
      while (accept(","));
      expect(";");
      return s;
    }
    if (is_punct("{")) {
      s.kind = Stmt::Kind::block;
      s.body = block_items();
      return s;
    }
    if (accept(";")) return s;
    if (cur().kind == TokenKind::identifier && look(1).kind == TokenKind::punct && look(1).text == ":") {
      s.kind = Stmt::Kind::label;
      s.name = take().text;
      ++i_;
      // A label directly before '}' labels an empty statement.
      if (is_punct("}")) s.body.push_back(Stmt{});
      else s.body.push_back(statement());
      return s;
    }
    if (cur().kind == TokenKind::keyword) {
      const std::string kw = take().text;
      if (kw == "if") {
        s.kind = Stmt::Kind::if_;
        expect("(");
        s.expr = expression();
        expect(")");
        s.body.push_back(statement());
        if (is_keyword("else")) {
          ++i_;
          s.body.push_back(statement());
        }
        return s;
      }
      if (kw == "while") {
        s.kind = Stmt::Kind::while_;
        expect("(");
        s.expr = expression();
        expect(")");
        s.body.push_back(statement());
        return s;
      }
      if (kw == "for") {
        s.kind = Stmt::Kind::for_;
        expect("(");
        if (is_type()) {
          s.init.push_back(statement());
        } else if (!accept(";")) {
          Stmt e;
          e.kind = Stmt::Kind::expr;
          e.pos = cur().pos;
          e.expr = expression();
          expect(";");
          s.init.push_back(std::move(e));
        }
        if (!is_punct(";")) s.expr = expression();
        expect(";");
        if (!is_punct(")")) s.step = expression();
        expect(")");
        s.body.push_back(statement());
        return s;
      }
      if (kw == "goto") {
        s.kind = Stmt::Kind::goto_;
        s.name = expect_identifier();
        expect(";");
        return s;
      }
      if (kw == "break" || kw == "continue") {
        s.kind = kw == "break" ? Stmt::Kind::break_ : Stmt::Kind::continue_;
        expect(";");
        return s;
      }
      if (kw == "return") {
        s.kind = Stmt::Kind::return_;
        if (!is_punct(";")) s.expr = expression();
        expect(";");
        return s;
      }
      --i_;
      fail("unexpected keyword");
    }
    s.kind = Stmt::Kind::expr;
    s.expr = expression();
    expect(";");
    return s;
  }

  // --- expressions ---------------------------------------------------------

  static Expr make(Expr::Kind k, SourcePos at, Op op = Op::none) {
    Expr e;
    e.kind = k;
    e.op = op;
    e.pos = at;
    return e;
  }

  Expr expression() {
    Expr e = assignment();
    if (is_punct(",")) unsupported("the comma operator");
    return e;
  }

  Expr assignment() {
    Expr lhs = conditional();
    static constexpr std::pair<std::string_view, Op> kAssign[] = {
        {"=", Op::none}, {"+=", Op::add}, {"-=", Op::sub},
        {"*=", Op::mul}, {"/=", Op::div}, {"%=", Op::mod}};
    for (auto [text, op] : kAssign) {
      if (is_punct(text)) {
        SourcePos at = take().pos;
        Expr e = make(Expr::Kind::assign, at, op);
        e.args.push_back(std::move(lhs));
        e.args.push_back(assignment());
        return e;
      }
    }
    return lhs;
  }

  Expr conditional() { return logical_or(); }

  template <typename Next>
  Expr binary_level(Next next, std::initializer_list<std::pair<std::string_view, Op>> ops) {
    Expr lhs = (this->*next)();
    for (;;) {
      bool matched = false;
      for (auto [text, op] : ops) {
        if (is_punct(text)) {
          SourcePos at = take().pos;
          Expr e = make(Expr::Kind::binary, at, op);
          e.args.push_back(std::move(lhs));
          e.args.push_back((this->*next)());
          lhs = std::move(e);
          matched = true;
          break;
        }
      }
      if (!matched) return lhs;
    }
  }

  Expr logical_or() { return binary_level(&Parser::logical_and, {{"||", Op::lor}}); }
  Expr logical_and() {
    Expr e = binary_level(&Parser::equality, {{"&&", Op::land}});
    if (is_punct("&")) unsupported("bitwise '&'");
    return e;
  }
  Expr equality() { return binary_level(&Parser::relational, {{"==", Op::eq}, {"!=", Op::ne}}); }
  Expr relational() {
    return binary_level(&Parser::additive,
                        {{"<=", Op::le}, {">=", Op::ge}, {"<", Op::lt}, {">", Op::gt}});
  }
  Expr additive() { return binary_level(&Parser::term, {{"+", Op::add}, {"-", Op::sub}}); }
  Expr term() {
    return binary_level(&Parser::unary, {{"*", Op::mul}, {"/", Op::div}, {"%", Op::mod}});
  }

  Expr unary() {
    SourcePos at = cur().pos;
    if (accept("-")) return unary_node(Op::neg, at);
    if (accept("!")) return unary_node(Op::lnot, at);
    if (accept("*")) return unary_node(Op::deref, at);
    if (accept("&")) return unary_node(Op::addr, at);
    if (accept("+")) return unary();
    if (accept("++")) return inc_node(Expr::Kind::pre_inc, at, unary());
    if (accept("--")) return inc_node(Expr::Kind::pre_dec, at, unary());
    if (is_punct("(") && look(1).kind == TokenKind::keyword &&
        (look(1).text == "int" || look(1).text == "char" || look(1).text == "void"))
      throw Error(Errc::unsupported_construct, "casts are not supported", at.line, at.column);
    return postfix();
  }

  Expr unary_node(Op op, SourcePos at) {
    Expr e = make(Expr::Kind::unary, at, op);
    e.args.push_back(unary());
    return e;
  }

  static Expr inc_node(Expr::Kind k, SourcePos at, Expr operand) {
    Expr e = make(k, at);
    e.args.push_back(std::move(operand));
    return e;
  }

  Expr postfix() {
    Expr e = primary();
    for (;;) {
      SourcePos at = cur().pos;
      if (accept("[")) {
        Expr idx = make(Expr::Kind::index, at);
        idx.args.push_back(std::move(e));
        idx.args.push_back(expression());
        expect("]");
        e = std::move(idx);
      } else if (accept("(")) {
        Expr call = make(Expr::Kind::call, at);
        call.args.push_back(std::move(e));
        if (!accept(")")) {
          do call.args.push_back(assignment());
          while (accept(","));
          expect(")");
        }
        e = std::move(call);
      } else if (accept("++")) {
        e = inc_node(Expr::Kind::post_inc, at, std::move(e));
      } else if (accept("--")) {
        e = inc_node(Expr::Kind::post_dec, at, std::move(e));
      } else {
        return e;
      }
    }
  }

  Expr primary() {
    const Token& t = cur();
    SourcePos at = t.pos;
    if (t.kind == TokenKind::number) {
      Expr e = make(Expr::Kind::number, at);
      e.value = take().value;
      return e;
    }
    if (t.kind == TokenKind::identifier) {
      Expr e = make(Expr::Kind::name, at);
      e.name = take().text;
      return e;
    }
    if (t.kind == TokenKind::string) {
      Expr e = make(Expr::Kind::string, at);
      e.text = take().text;
      while (cur().kind == TokenKind::string) e.text += take().text;
      return e;
    }
    if (accept("(")) {
      Expr e = expression();
      expect(")");
      return e;
    }
    fail("expected expression");
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

Word wrap(std::int64_t v) { return static_cast<Word>(static_cast<std::uint32_t>(v)); }

}  // namespace

Unit parse_c(std::string_view source) { return Parser(tokenize(source)).unit(); }

Expr parse_expression(std::string_view source) { return Parser(tokenize(source)).lone_expression(); }

std::optional<Word> fold_constant(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::number:
      return e.value;
    case Expr::Kind::unary: {
      auto v = fold_constant(e.args[0]);
      if (!v) return std::nullopt;
      if (e.op == Op::neg) return wrap(-static_cast<std::int64_t>(*v));
      if (e.op == Op::lnot) return *v == 0 ? 1 : 0;
      return std::nullopt;
    }
    case Expr::Kind::binary: {
      auto a = fold_constant(e.args[0]);
      auto b = fold_constant(e.args[1]);
      if (!a || !b) return std::nullopt;
      std::int64_t x = *a, y = *b;
      switch (e.op) {
        case Op::add: return wrap(x + y);
        case Op::sub: return wrap(x - y);
        case Op::mul: return wrap(x * y);
        case Op::div: return y == 0 ? std::nullopt : std::optional<Word>(wrap(x / y));
        case Op::mod: return y == 0 ? std::nullopt : std::optional<Word>(wrap(x % y));
        case Op::eq: return x == y;
        case Op::ne: return x != y;
        case Op::lt: return x < y;
        case Op::gt: return x > y;
        case Op::le: return x <= y;
        case Op::ge: return x >= y;
        case Op::land: return x && y;
        case Op::lor: return x || y;
        default: return std::nullopt;
      }
    }
    default:
      return std::nullopt;
  }
}

}  // namespace subleq::cc

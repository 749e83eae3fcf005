#include "subleq/assembler.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <iomanip>
#include <sstream>

#include "subleq/error.hpp"

namespace subleq::assembler {

Expr Expr::number(Word v, SourcePos at) {
  Expr e;
  e.kind = Kind::number;
  e.value = v;
  e.pos = at;
  return e;
}

Expr Expr::symbol(std::string n, SourcePos at) {
  Expr e;
  e.kind = Kind::symbol;
  e.name = std::move(n);
  e.pos = at;
  return e;
}

Expr Expr::here(SourcePos at) {
  Expr e;
  e.kind = Kind::here;
  e.pos = at;
  return e;
}

namespace {

enum class Tok {
  ident,
  number,
  char_lit,
  string_lit,
  question,
  plus,
  minus,
  lparen,
  rparen,
  colon,
  semicolon,
  data_marker,
  newline,
  eof,
};

struct Token {
  Tok kind;
  std::string text;  // identifier name or decoded literal bytes
  Word value = 0;
  SourcePos pos;
};

class Lexer {
public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    bool line_start = true;
    while (i_ < src_.size()) {
      const char ch = src_[i_];
      if (ch == '\n') {
        out.push_back({Tok::newline, {}, 0, here()});
        advance();
        line_start = true;
        continue;
      }
      if (ch == ' ' || ch == '\t' || ch == '\r') {
        advance();
        continue;
      }
      if (ch == '#') {
        while (i_ < src_.size() && src_[i_] != '\n') advance();
        continue;
      }
      const SourcePos at = here();
      if (ch == '.' && line_start) {
        advance();
        out.push_back({Tok::data_marker, {}, 0, at});
        line_start = false;
        continue;
      }
      line_start = false;
      if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
        std::size_t j = i_;
        while (j < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_'))
          ++j;
        out.push_back({Tok::ident, std::string(src_.substr(i_, j - i_)), 0, at});
        advance(j - i_);
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(ch))) {
        std::size_t j = i_;
        while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(src_.data() + i_, src_.data() + j, v);
        if (ec != std::errc{} || v > 0xffffffffull)
          throw Error(Errc::syntax_error, "integer literal out of range", at.line, at.column);
        out.push_back({Tok::number, {}, static_cast<Word>(static_cast<std::uint32_t>(v)), at});
        advance(j - i_);
        continue;
      }
      if (ch == '\'' || ch == '"') {
        out.push_back(quoted(ch, at));
        continue;
      }
      Tok kind;
      switch (ch) {
        case '?': kind = Tok::question; break;
        case '+': kind = Tok::plus; break;
        case '-': kind = Tok::minus; break;
        case '(': kind = Tok::lparen; break;
        case ')': kind = Tok::rparen; break;
        case ':': kind = Tok::colon; break;
        case ';': kind = Tok::semicolon; break;
        default:
          throw Error(Errc::syntax_error, std::string("unexpected character '") + ch + "'",
                      at.line, at.column);
      }
      out.push_back({kind, {}, 0, at});
      advance();
    }
    out.push_back({Tok::newline, {}, 0, here()});
    out.push_back({Tok::eof, {}, 0, here()});
    return out;
  }

private:
  SourcePos here() const { return {line_, col_}; }

  void advance(std::size_t n = 1) {
    for (std::size_t k = 0; k < n && i_ < src_.size(); ++k) {
      if (src_[i_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++i_;
    }
  }

  Token quoted(char quote, SourcePos at) {
    advance();
    std::string bytes;
    for (;;) {
      if (i_ >= src_.size() || src_[i_] == '\n')
        throw Error(Errc::unterminated_string, "missing closing quote", at.line, at.column);
      char ch = src_[i_];
      if (ch == quote) {
        advance();
        break;
      }
      if (ch == '\\') {
        const SourcePos esc = here();
        advance();
        if (i_ >= src_.size())
          throw Error(Errc::unterminated_string, "missing closing quote", at.line, at.column);
        switch (src_[i_]) {
          case 'n': bytes.push_back('\n'); break;
          case 't': bytes.push_back('\t'); break;
          case '0': bytes.push_back('\0'); break;
          case '\\': bytes.push_back('\\'); break;
          case '"': bytes.push_back('"'); break;
          case '\'': bytes.push_back('\''); break;
          default:
            throw Error(Errc::bad_escape, std::string("unknown escape \\") + src_[i_], esc.line,
                        esc.column);
        }
        advance();
        continue;
      }
      bytes.push_back(ch);
      advance();
    }
    if (quote == '\'') {
      if (bytes.size() != 1)
        throw Error(Errc::syntax_error, "character literal must hold one character", at.line,
                    at.column);
      return {Tok::char_lit, bytes, static_cast<unsigned char>(bytes[0]), at};
    }
    return {Tok::string_lit, bytes, 0, at};
  }

  std::string_view src_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  ParsedSource run() {
    while (peek().kind != Tok::eof) {
      if (peek().kind == Tok::newline) {
        ++pos_;
        continue;
      }
      if (peek().kind == Tok::data_marker) {
        ++pos_;
        data_line();
      } else {
        instruction_line();
      }
    }
    out_.trailing_labels = std::move(pending_);
    return std::move(out_);
  }

private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }

  [[noreturn]] void fail(const Token& t, const std::string& what) const {
    throw Error(Errc::syntax_error, what, t.pos.line, t.pos.column);
  }

  bool at_label() const { return peek().kind == Tok::ident && peek(1).kind == Tok::colon; }

  void take_labels(std::vector<std::string>& into) {
    while (at_label()) {
      into.push_back(peek().text);
      pos_ += 2;
    }
  }

  bool starts_term() const {
    switch (peek().kind) {
      case Tok::ident:
      case Tok::number:
      case Tok::char_lit:
      case Tok::string_lit:
      case Tok::question:
      case Tok::minus:
      case Tok::lparen:
        return true;
      default:
        return false;
    }
  }

  Expr term() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::number:
      case Tok::char_lit:
        ++pos_;
        return Expr::number(t.value, t.pos);
      case Tok::string_lit:
        if (t.text.size() != 1) fail(t, "multi-character string inside an expression");
        ++pos_;
        return Expr::number(static_cast<unsigned char>(t.text[0]), t.pos);
      case Tok::ident:
        if (peek(1).kind == Tok::colon) fail(t, "label '" + t.text + "' inside an expression");
        ++pos_;
        return Expr::symbol(t.text, t.pos);
      case Tok::question:
        ++pos_;
        return Expr::here(t.pos);
      case Tok::minus: {
        ++pos_;
        Expr e;
        e.kind = Expr::Kind::neg;
        e.pos = t.pos;
        e.children.push_back(term());
        return e;
      }
      case Tok::lparen: {
        ++pos_;
        Expr inner = expression();
        if (peek().kind != Tok::rparen) fail(peek(), "expected ')'");
        ++pos_;
        return inner;
      }
      default:
        fail(t, "expected an operand");
    }
  }

  // Binary +/- continue an expression across whitespace, so `Z Z-1 ?`
  // has the operands Z, Z-1 and ?.
  Expr expression() {
    Expr lhs = term();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      const Token& op = peek();
      ++pos_;
      Expr node;
      node.kind = op.kind == Tok::plus ? Expr::Kind::add : Expr::Kind::sub;
      node.pos = op.pos;
      node.children.push_back(std::move(lhs));
      node.children.push_back(term());
      lhs = std::move(node);
    }
    return lhs;
  }

  void data_line() {
    Item item;
    item.kind = Item::Kind::data;
    item.line = peek().pos.line;
    while (peek().kind != Tok::newline) {
      std::vector<std::string> labels = std::move(pending_);
      pending_.clear();
      take_labels(labels);
      if (peek().kind == Tok::newline) {
        pending_ = std::move(labels);
        break;
      }
      if (!starts_term()) fail(peek(), "expected a data value");
      const Token& start = peek();
      if (start.kind == Tok::string_lit && start.text.size() != 1 &&
          peek(1).kind != Tok::plus && peek(1).kind != Tok::minus) {
        ++pos_;
        if (start.text.empty()) {
          // "" emits nothing; its labels move on to the next cell.
          pending_ = std::move(labels);
          continue;
        }
        for (std::size_t k = 0; k < start.text.size(); ++k) {
          Cell cell;
          if (k == 0) cell.labels = std::move(labels);
          cell.expr = Expr::number(static_cast<unsigned char>(start.text[k]), start.pos);
          cell.pos = start.pos;
          item.cells.push_back(std::move(cell));
        }
        continue;
      }
      Cell cell;
      cell.labels = std::move(labels);
      cell.pos = start.pos;
      cell.expr = expression();
      item.cells.push_back(std::move(cell));
    }
    if (!item.cells.empty()) out_.items.push_back(std::move(item));
  }

  void instruction_line() {
    for (;;) {
      Item item;
      item.kind = Item::Kind::instruction;
      item.line = peek().pos.line;
      while (peek().kind != Tok::newline && peek().kind != Tok::semicolon) {
        std::vector<std::string> labels;
        if (item.cells.empty()) {
          labels = std::move(pending_);
          pending_.clear();
        }
        take_labels(labels);
        if (peek().kind == Tok::newline || peek().kind == Tok::semicolon) {
          if (!item.cells.empty())
            fail(peek(), "label '" + labels.back() + "' does not precede an operand");
          pending_ = std::move(labels);
          break;
        }
        if (item.cells.size() == 3) fail(peek(), "an instruction takes at most three operands");
        if (peek().kind == Tok::data_marker) fail(peek(), "'.' is only valid at line start");
        Cell cell;
        cell.labels = std::move(labels);
        cell.pos = peek().pos;
        cell.expr = expression();
        item.cells.push_back(std::move(cell));
      }
      if (!item.cells.empty()) out_.items.push_back(std::move(item));
      if (peek().kind == Tok::semicolon) {
        ++pos_;
        continue;
      }
      return;
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  ParsedSource out_;
  std::vector<std::string> pending_;
};

Expr shifted_copy(const Expr& e, int shift) {
  Expr copy = e;
  if (copy.kind == Expr::Kind::here) copy.here_shift += shift;
  for (auto& child : copy.children) child = shifted_copy(child, shift);
  return copy;
}

}  // namespace

ParsedSource parse_source(std::string_view source) {
  return Parser(Lexer(source).run()).run();
}

std::vector<Item> parse(std::string_view source) { return parse_source(source).items; }

std::vector<Cell> expand(const Item& item) {
  if (item.kind == Item::Kind::data) return item.cells;
  std::vector<Cell> cells = item.cells;
  if (cells.size() == 1) {
    Cell second;
    second.expr = shifted_copy(cells[0].expr, -1);
    second.pos = cells[0].pos;
    cells.push_back(std::move(second));
  }
  if (cells.size() == 2) {
    Cell third;
    third.expr = Expr::here(cells[1].pos);
    third.pos = cells[1].pos;
    cells.push_back(std::move(third));
  }
  return cells;
}

Word evaluate(const Expr& expr, const SymbolTable& symbols, Word next_cell) {
  switch (expr.kind) {
    case Expr::Kind::number:
      return expr.value;
    case Expr::Kind::symbol: {
      auto it = symbols.find(expr.name);
      if (it == symbols.end())
        throw Error(Errc::undefined_label, "undefined label '" + expr.name + "'", expr.pos.line,
                    expr.pos.column);
      return it->second;
    }
    case Expr::Kind::here:
      return static_cast<Word>(next_cell + expr.here_shift);
    case Expr::Kind::neg:
      return wrapping_sub(0, evaluate(expr.children[0], symbols, next_cell));
    case Expr::Kind::add:
      return wrapping_sub(evaluate(expr.children[0], symbols, next_cell),
                          wrapping_sub(0, evaluate(expr.children[1], symbols, next_cell)));
    case Expr::Kind::sub:
      return wrapping_sub(evaluate(expr.children[0], symbols, next_cell),
                          evaluate(expr.children[1], symbols, next_cell));
  }
  return 0;
}

AssemblyOutput assemble(std::string_view source) {
  ParsedSource parsed = parse_source(source);
  std::vector<std::vector<Cell>> expanded;
  expanded.reserve(parsed.items.size());
  for (const Item& item : parsed.items) expanded.push_back(expand(item));

  AssemblyOutput out;
  auto define = [&](const std::string& name, Word address, SourcePos at) {
    if (!out.symbols.emplace(name, address).second)
      throw Error(Errc::duplicate_label, "label '" + name + "' defined twice", at.line,
                  at.column);
  };

  Word address = 0;
  for (const auto& cells : expanded) {
    for (const Cell& cell : cells) {
      for (const auto& label : cell.labels) define(label, address, cell.pos);
      ++address;
    }
  }
  for (const auto& label : parsed.trailing_labels) define(label, address, {});

  out.image.reserve(static_cast<std::size_t>(address));
  out.listing.reserve(static_cast<std::size_t>(address));
  address = 0;
  for (const auto& cells : expanded) {
    for (const Cell& cell : cells) {
      out.image.push_back(evaluate(cell.expr, out.symbols, address + 1));
      out.listing.push_back(cell.pos);
      ++address;
    }
  }
  return out;
}

std::string format_symbols(const SymbolTable& symbols) {
  std::vector<std::pair<std::string, Word>> sorted(symbols.begin(), symbols.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  std::ostringstream out;
  for (const auto& [name, address] : sorted) out << name << ' ' << address << '\n';
  return out.str();
}

std::string format_listing(const AssemblyOutput& output, std::string_view source) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    std::size_t eol = source.find('\n', pos);
    if (eol == std::string_view::npos) eol = source.size();
    lines.push_back(source.substr(pos, eol - pos));
    pos = eol + 1;
  }
  std::ostringstream out;
  int last_line = -1;
  for (std::size_t i = 0; i < output.image.size(); ++i) {
    const SourcePos at = output.listing[i];
    out << std::setw(6) << i << ": " << std::setw(11) << output.image[i];
    if (at.line != last_line && at.line > 0 && static_cast<std::size_t>(at.line) <= lines.size()) {
      out << "    " << at.line << ":" << at.column << "  " << lines[at.line - 1];
      last_line = at.line;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace subleq::assembler

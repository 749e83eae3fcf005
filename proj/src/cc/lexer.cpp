#include "subleq/cc/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "subleq/error.hpp"

namespace subleq::cc {

namespace {

constexpr std::array<std::string_view, 11> kKeywords = {
    "int", "char", "void", "if", "else", "while", "for",
    "goto", "break", "continue", "return"};

constexpr std::array<std::string_view, 20> kUnsupported = {
    "float", "double", "struct", "union", "enum", "typedef", "switch",
    "case", "default", "do", "sizeof", "unsigned", "signed", "long",
    "short", "static", "extern", "const", "volatile", "register"};

// Longest first so that maximal munch works with a linear scan.
constexpr std::array<std::string_view, 36> kPunct = {
    "<<=", ">>=",
    "++", "--", "+=", "-=", "*=", "/=", "%=", "==", "!=", "<=", ">=",
    "&&", "||", "<<", ">>", "->",
    "+", "-", "*", "/", "%", "=", "<", ">", "!", "&", "(", ")", "{", "}",
    "[", "]", ";", ":"};

constexpr std::string_view kUnsupportedPunct = "| ^ ~ ? .";

class Lexer {
public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      if (at_end()) break;
      out.push_back(next());
    }
    out.push_back(Token{TokenKind::eof, "", 0, here()});
    return out;
  }

private:
  bool at_end() const { return i_ >= src_.size(); }
  char peek(std::size_t k = 0) const { return i_ + k < src_.size() ? src_[i_ + k] : '\0'; }
  SourcePos here() const { return {line_, col_}; }

  char advance() {
    char c = src_[i_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  [[noreturn]] void fail(Errc code, const std::string& msg, SourcePos at) const {
    throw Error(code, msg, at.line, at.column);
  }

  void skip_space() {
    for (;;) {
      if (at_end()) return;
      char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (!at_end() && peek() != '\n') advance();
      } else if (c == '/' && peek(1) == '*') {
        SourcePos start = here();
        advance();
        advance();
        while (!(peek() == '*' && peek(1) == '/')) {
          if (at_end()) fail(Errc::syntax_error, "unterminated comment", start);
          advance();
        }
        advance();
        advance();
      } else if (c == '#') {
        fail(Errc::unsupported_construct, "preprocessor directives are not supported", here());
      } else {
        return;
      }
    }
  }

  char escape(SourcePos at) {
    if (at_end()) fail(Errc::syntax_error, "unterminated escape", at);
    char c = advance();
    switch (c) {
      case 'n': return '\n';
      case 't': return '\t';
      case '0': return '\0';
      case '\\': return '\\';
      case '"': return '"';
      case '\'': return '\'';
      default: fail(Errc::syntax_error, std::string("unknown escape \\") + c, at);
    }
  }

  Token next() {
    SourcePos at = here();
    char c = peek();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string word;
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') word += advance();
      if (std::find(kUnsupported.begin(), kUnsupported.end(), word) != kUnsupported.end())
        fail(Errc::unsupported_construct, "'" + word + "' is not supported", at);
      bool kw = std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
      return Token{kw ? TokenKind::keyword : TokenKind::identifier, word, 0, at};
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return number(at);
    if (c == '\'') {
      advance();
      char v = peek() == '\\' ? (advance(), escape(at)) : advance();
      if (peek() != '\'') fail(Errc::syntax_error, "unterminated character constant", at);
      advance();
      return Token{TokenKind::number, "'", static_cast<unsigned char>(v), at};
    }
    if (c == '"') {
      advance();
      std::string body;
      while (peek() != '"') {
        if (at_end() || peek() == '\n') fail(Errc::syntax_error, "unterminated string", at);
        char ch = advance();
        body += ch == '\\' ? escape(at) : ch;
      }
      advance();
      return Token{TokenKind::string, body, 0, at};
    }
    for (std::string_view p : kPunct) {
      if (src_.substr(i_, p.size()) == p) {
        if (p == "<<=" || p == ">>=" || p == "<<" || p == ">>" || p == "->")
          fail(Errc::unsupported_construct, "operator '" + std::string(p) + "' is not supported", at);
        for (std::size_t k = 0; k < p.size(); ++k) advance();
        return Token{TokenKind::punct, std::string(p), 0, at};
      }
    }
    if (c == ',') {
      advance();
      return Token{TokenKind::punct, ",", 0, at};
    }
    if (kUnsupportedPunct.find(c) != std::string_view::npos)
      fail(Errc::unsupported_construct, std::string("operator '") + c + "' is not supported", at);
    fail(Errc::syntax_error, std::string("unexpected character '") + c + "'", at);
  }

  Token number(SourcePos at) {
    std::uint64_t v = 0;
    int base = 10;
    if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X')) {
      advance();
      advance();
      base = 16;
      if (!std::isxdigit(static_cast<unsigned char>(peek())))
        fail(Errc::syntax_error, "malformed hex constant", at);
    }
    while (std::isxdigit(static_cast<unsigned char>(peek()))) {
      char ch = peek();
      int d = std::isdigit(static_cast<unsigned char>(ch)) ? ch - '0'
                                                           : std::tolower(ch) - 'a' + 10;
      if (d >= base) break;
      advance();
      v = v * base + d;
      if (v > 0xFFFFFFFFull) fail(Errc::syntax_error, "integer constant out of range", at);
    }
    if (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '.')
      fail(Errc::syntax_error, "malformed number", at);
    return Token{TokenKind::number, "", static_cast<Word>(static_cast<std::uint32_t>(v)), at};
  }

  std::string_view src_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace subleq::cc

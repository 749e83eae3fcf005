#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "subleq/cc/ast.hpp"

namespace subleq::cc {

enum class TokenKind { identifier, keyword, number, string, punct, eof };

struct Token {
  TokenKind kind = TokenKind::eof;
  std::string text;  // identifier/keyword/punctuator spelling, decoded string body
  Word value = 0;    // number and character constants
  SourcePos pos;
};

// Comments are skipped. Unsupported keywords (float, struct, ...) and
// preprocessor lines raise UnsupportedConstruct.
std::vector<Token> tokenize(std::string_view source);

}  // namespace subleq::cc

#pragma once

#include <string_view>

#include "subleq/cc/ast.hpp"

namespace subleq::cc {

Unit parse_c(std::string_view source);

// Parses a single expression; used by tests and the constant folder.
Expr parse_expression(std::string_view source);

// Folds integer-constant expressions (wrapping arithmetic); nullopt when
// the expression references anything but constants.
std::optional<Word> fold_constant(const Expr& e);

}  // namespace subleq::cc

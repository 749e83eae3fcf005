#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "subleq/cc/ast.hpp"

namespace subleq::testing {

// Straightforward tree-walking interpreter for the compiled C subset.
// Word arithmetic wraps; comparisons are exact; x/0 = 0 and x%0 = x
// (matching the runtime library). Evaluation order matches the compiler:
// binary operands left to right, call arguments right to left, assignment
// right-hand side before its target.
struct RefResult {
  std::string output;
  Word main_return = 0;
};

RefResult interpret(const cc::Unit& unit, std::uint64_t max_ops = 200'000'000);
RefResult interpret(std::string_view source, std::uint64_t max_ops = 200'000'000);

}  // namespace subleq::testing

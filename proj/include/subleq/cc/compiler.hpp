#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "subleq/cc/ast.hpp"

namespace subleq::cc {

struct CompileOptions {
  bool pool_temporaries = true;
  // Emit an `S<n>:` label in front of every statement so tests can check
  // register invariants at statement boundaries.
  bool statement_marks = false;
};

struct FrameLayout {
  std::string function;
  std::vector<std::pair<std::string, int>> slots;  // name, offset from bp; ascending offset
  int stack_size = 0;                              // local words, arrays at full length
};

struct StatementMark {
  std::string label;
  std::string function;
};

struct CompileResult {
  std::string assembly;
  std::vector<FrameLayout> frames;               // user functions, then runtime routines
  std::map<std::string, int> temporaries;        // function -> distinct temporaries it uses
  std::vector<std::string> runtime_routines;     // emitted runtime functions, e.g. "mul"
  std::vector<StatementMark> marks;
};

CompileResult compile(std::string_view source, const CompileOptions& options = {});
CompileResult compile(const Unit& unit, const CompileOptions& options = {});

// Per function: a `function <name> stack_size <n>` header followed by
// `<name> <offset>` lines.
std::string format_frame_map(const std::vector<FrameLayout>& frames);

// Runtime library source, written in the compiled C subset.
std::string_view runtime_source();

// Assembly label of a C-level global or function name.
std::string mangle(std::string_view name);

}  // namespace subleq::cc

#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "subleq/vm.hpp"

namespace subleq::assembler {

struct SourcePos {
  int line = 0;
  int column = 0;
};

// Operand / data-cell expression. `here` is the '?' marker: the address of
// the cell following the one holding the expression, shifted by
// `here_shift` (used when a reduced instruction duplicates an operand, so
// the copy keeps the value of the original).
struct Expr {
  enum class Kind { number, symbol, here, neg, add, sub };

  Kind kind = Kind::number;
  Word value = 0;
  std::string name;
  int here_shift = 0;
  std::vector<Expr> children;
  SourcePos pos;

  static Expr number(Word v, SourcePos at = {});
  static Expr symbol(std::string n, SourcePos at = {});
  static Expr here(SourcePos at = {});
};

struct Cell {
  std::vector<std::string> labels;
  Expr expr;
  SourcePos pos;
};

struct Item {
  enum class Kind { instruction, data };

  Kind kind = Kind::instruction;
  std::vector<Cell> cells;  // instruction: 1..3 operands as written
  int line = 0;
};

using SymbolTable = std::map<std::string, Word>;

struct AssemblyOutput {
  std::vector<Word> image;
  SymbolTable symbols;
  std::vector<SourcePos> listing;  // one entry per image cell
};

// Labels that trail the last item bind to the address one past the end.
struct ParsedSource {
  std::vector<Item> items;
  std::vector<std::string> trailing_labels;
};

ParsedSource parse_source(std::string_view source);
std::vector<Item> parse(std::string_view source);

// Reduced forms: `A` is `A A ?`, `A B` is `A B ?`. Data items are
// returned unchanged.
std::vector<Cell> expand(const Item& item);

Word evaluate(const Expr& expr, const SymbolTable& symbols, Word next_cell);

AssemblyOutput assemble(std::string_view source);

// `name address` per line, sorted by address then name.
std::string format_symbols(const SymbolTable& symbols);

// `address: value    line:col  source-text` per cell.
std::string format_listing(const AssemblyOutput& output, std::string_view source);

}  // namespace subleq::assembler

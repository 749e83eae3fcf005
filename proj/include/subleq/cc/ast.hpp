#pragma once

#include <optional>
#include <string>
#include <vector>

#include "subleq/vm.hpp"

namespace subleq::cc {

struct SourcePos {
  int line = 0;
  int column = 0;
};

enum class Op {
  none,
  // binary
  add, sub, mul, div, mod,
  eq, ne, lt, gt, le, ge,
  land, lor,
  // unary
  neg, lnot, deref, addr,
};

struct Expr {
  enum class Kind {
    number,    // value
    name,      // name
    string,    // text (printf format only)
    unary,     // op, args[0]
    binary,    // op, args[0], args[1]
    assign,    // op is none for '=', else the compound operator; args = {lhs, rhs}
    index,     // args = {base, index}
    call,      // args[0] callee, args[1..] arguments
    pre_inc, pre_dec, post_inc, post_dec,  // args[0]
  };

  Kind kind = Kind::number;
  Op op = Op::none;
  Word value = 0;
  std::string name;
  std::string text;
  std::vector<Expr> args;
  SourcePos pos;
};

struct Declarator {
  std::string name;
  bool is_array = false;
  int array_size = 0;        // words; 0 for an unsized array parameter
  std::vector<Expr> init;    // scalar: at most one; array: brace list
  SourcePos pos;
};

struct Stmt {
  enum class Kind {
    empty, expr, block, decl,
    if_, while_, for_,
    goto_, label, break_, continue_, return_,
  };

  Kind kind = Kind::empty;
  std::optional<Expr> expr;   // expression, condition or return value
  std::optional<Expr> step;   // for-step
  std::vector<Stmt> init;     // for-init, zero or one statement
  std::vector<Stmt> body;     // block items; if {then, else?}; loop {body}; label {stmt}
  std::vector<Declarator> decls;
  std::string name;           // goto target / label name
  SourcePos pos;
};

struct Function {
  std::string name;
  std::vector<Declarator> params;
  std::vector<Stmt> body;
  SourcePos pos;
};

struct Unit {
  std::vector<Declarator> globals;
  std::vector<Function> functions;
  std::vector<std::string> prototypes;  // declared without a body
};

}  // namespace subleq::cc

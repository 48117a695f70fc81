#pragma once

#include <stdexcept>
#include <string>

#include "psdo/expr.hpp"

namespace psdo::symbols {

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, size_t offset);
  size_t offset;
};

// Grammar (whitespace insensitive):
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := ('+' | '-') unary | power
//   power  := atom ('^' unary)?          exponent must fold to a real constant
//   atom   := number | 'i' | var | call | '(' expr ')'
//   var    := ('x' | 'k') digits         1-based, bounded by dim
//   call   := ('exp' | 'log' | 'recip') '(' expr ')'
//           | ('angle' | 'anglex' | 'anglek') '(' ')'
// Division is lowered to recip, subtraction to a (-1) factor.
SymbolExpr parse_symbol(const std::string& text, int dim);

}  // namespace psdo::symbols

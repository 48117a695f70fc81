#include "psdo/parser.hpp"

#include <cctype>
#include <cstdlib>

namespace psdo::symbols {

ParseError::ParseError(const std::string& what, size_t offset)
    : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
      offset(offset) {}

namespace {

class Parser {
 public:
  Parser(const std::string& text, int dim) : text_(text), dim_(dim) {}

  ExprPtr run() {
    ExprPtr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input after expression");
    return e;
  }

 private:
  const std::string& text_;
  int dim_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool consume(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  ExprPtr parse_expr() {
    ExprPtr e = parse_term();
    for (;;) {
      char c = peek();
      if (c == '+') {
        ++pos_;
        e = add(std::move(e), parse_term());
      } else if (c == '-') {
        ++pos_;
        e = add(std::move(e), scale(-1.0, parse_term()));
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_unary();
    for (;;) {
      char c = peek();
      if (c == '*') {
        ++pos_;
        e = mul(std::move(e), parse_unary());
      } else if (c == '/') {
        ++pos_;
        size_t at = pos_;
        ExprPtr rhs = parse_unary();
        if (rhs->kind == Kind::Constant && rhs->constant == Complex{})
          throw ParseError("division by constant zero", at);
        e = mul(std::move(e), make_recip(std::move(rhs)));
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_unary() {
    char c = peek();
    if (c == '-') {
      ++pos_;
      return scale(-1.0, parse_unary());
    }
    if (c == '+') {
      ++pos_;
      return parse_unary();
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    if (peek() != '^') return base;
    ++pos_;
    size_t at = pos_;
    ExprPtr raw = parse_unary();  // right associative, allows signed exponents
    if (raw->kind != Kind::Constant || raw->constant.imag() != 0.0)
      throw ParseError("exponent must fold to a real constant", at);
    return make_power(std::move(base), raw->constant.real());
  }

  ExprPtr parse_atom() {
    char c = peek();
    if (c == '(') {
      ++pos_;
      ExprPtr e = parse_expr();
      if (!consume(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return parse_identifier();
    fail("expected a number, variable, function, or '('");
  }

  ExprPtr parse_number() {
    const char* start = text_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(start, &end);
    if (end == start) fail("malformed number");
    pos_ += static_cast<size_t>(end - start);
    return make_constant(dim_, v);
  }

  ExprPtr parse_identifier() {
    size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_'))
      ++pos_;
    std::string name = text_.substr(start, pos_ - start);

    if (name == "i") return make_constant(dim_, Complex(0.0, 1.0));

    if (name == "exp" || name == "log" || name == "recip") {
      if (!consume('(')) fail("expected '(' after function name");
      ExprPtr arg = parse_expr();
      if (!consume(')')) fail("expected ')'");
      if (name == "exp") return make_exp(std::move(arg));
      if (name == "log") {
        if (arg->kind == Kind::Constant && arg->constant == Complex{}) {
          pos_ = start;
          fail("log of constant zero");
        }
        return make_log(std::move(arg));
      }
      if (arg->kind == Kind::Constant && arg->constant == Complex{}) {
        pos_ = start;
        fail("recip of constant zero");
      }
      return make_recip(std::move(arg));
    }

    if (name == "angle" || name == "anglex" || name == "anglek") {
      if (!consume('(')) fail("expected '(' after function name");
      if (!consume(')')) fail("expected ')' (bracket functions take no arguments)");
      if (name == "angle") return make_angle_joint(dim_);
      if (name == "anglex") return make_angle_x(dim_);
      return make_angle_k(dim_);
    }

    if ((name[0] == 'x' || name[0] == 'k') && name.size() > 1) {
      bool digits = true;
      for (size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
      if (digits) {
        int idx = std::atoi(name.c_str() + 1);
        if (idx < 1 || idx > dim_) {
          pos_ = start;
          fail("variable index out of range for dimension " +
               std::to_string(dim_));
        }
        return make_var(dim_, name[0] == 'x' ? Axis::X : Axis::Xi, idx - 1);
      }
    }

    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }
};

}  // namespace

SymbolExpr parse_symbol(const std::string& text, int dim) {
  Parser p(text, dim);
  return SymbolExpr(p.run());
}

}  // namespace psdo::symbols

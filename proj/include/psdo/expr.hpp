#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "psdo/multi_index.hpp"

namespace psdo::symbols {

using Complex = std::complex<double>;

// Phase-space symbols a(x, xi) as immutable expression trees. Construction
// goes through the builder functions below, which fold constants and flatten
// nested sums/products but perform no other rewriting. Derivatives of shared
// subtrees are cached, so iterated differentiation reuses structure instead
// of expanding it.
enum class Kind : uint8_t {
  Constant,
  Var,        // x_i or xi_i
  Sum,
  Product,
  Power,      // real exponent, integer exponents evaluated exactly
  Recip,
  Exp,
  Log,
  AngleJoint,  // (1 + |x|^2 + |xi|^2)^(1/2)
  AngleX,      // (1 + |x|^2)^(1/2)
  AngleK       // (1 + |xi|^2)^(1/2)
};

enum class Axis : uint8_t { X, Xi };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  Kind kind;
  int dim = 1;
  Complex constant{};            // Kind::Constant
  Axis axis = Axis::X;           // Kind::Var
  int index = 0;                 // Kind::Var, 0-based
  double exponent = 0.0;         // Kind::Power
  std::vector<ExprPtr> kids;
  size_t hash = 0;
  uint64_t dep_mask = 0;         // bit i: depends on x_i; bit d+i: depends on xi_i
};

ExprPtr make_constant(int dim, Complex c);
ExprPtr make_var(int dim, Axis axis, int index);
ExprPtr make_sum(std::vector<ExprPtr> kids);
ExprPtr make_product(std::vector<ExprPtr> kids);
ExprPtr make_power(ExprPtr base, double exponent);
ExprPtr make_recip(ExprPtr u);
ExprPtr make_exp(ExprPtr u);
ExprPtr make_log(ExprPtr u);
ExprPtr make_angle_joint(int dim);
ExprPtr make_angle_x(int dim);
ExprPtr make_angle_k(int dim);

// Small conveniences used all over the calculus code.
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr mul(ExprPtr a, ExprPtr b);
ExprPtr scale(Complex c, ExprPtr e);

bool structurally_equal(const ExprPtr& a, const ExprPtr& b);

class SymbolExpr {
 public:
  SymbolExpr() = default;
  explicit SymbolExpr(ExprPtr root);

  int dim() const;
  const ExprPtr& node() const { return root_; }
  bool valid() const { return root_ != nullptr; }

  Complex eval(std::span<const double> x, std::span<const double> xi) const;
  bool depends_on_x() const;
  bool depends_on_xi() const;
  std::string str() const;  // parses back to a structurally equal tree

 private:
  ExprPtr root_;
};

bool structurally_equal(const SymbolExpr& a, const SymbolExpr& b);

// Number of distinct nodes reachable from the root (shared subtrees count
// once). Cheap proxy for memory and evaluation cost.
size_t node_count(const ExprPtr& root);

// Reusable evaluator that memoizes shared subtrees per point. Worth it for
// the recursion-built trees, where the same factors occur many times.
class Evaluator {
 public:
  Complex operator()(const SymbolExpr& e, std::span<const double> x,
                     std::span<const double> xi);

 private:
  std::unordered_map<const Expr*, Complex> memo_;
};

enum class DiffConvention {
  Partial,  // plain partial derivatives
  DOp       // D = -i * partial per differentiated order
};

// Single partial derivative, cached process-wide by (node, coordinate).
SymbolExpr partial_derivative(const SymbolExpr& a, Axis axis, int index);

// Iterated derivative: alpha orders in xi, beta orders in x. With DOp the
// result carries the factor (-i)^(|alpha| + |beta|).
SymbolExpr differentiate(const SymbolExpr& a, const MultiIndex& alpha_xi,
                         const MultiIndex& beta_x,
                         DiffConvention conv = DiffConvention::Partial,
                         int order_cap = 16);

}  // namespace psdo::symbols

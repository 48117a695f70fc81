#pragma once

#include <span>
#include <string>
#include <vector>

#include "psdo/expr.hpp"
#include "psdo/symbol_checks.hpp"
#include "psdo/weights.hpp"

namespace psdo::parametrix {

using symbols::SymbolExpr;
using weights::WeightSequence;

// Graded family p_0..p_J produced by the inversion recursion, together with
// the class data the grading refers to. Term j is only trusted where
// <x> >= B*m_j or <xi> >= B*m_j, with m_j = M_j/M_{j-1}; inside that box the
// term may be singular and is never evaluated by the checks below.
struct FormalSymbolSum {
  std::vector<SymbolExpr> terms;  // p_0 .. p_J
  WeightSequence M;               // growth sequence, sets the domain radii
  WeightSequence A;               // derivative sequence, sets the j-grading
  double rho = 1.0;
  double B = 1.0;

  int J() const { return static_cast<int>(terms.size()) - 1; }
  int dim() const { return terms.empty() ? 0 : terms.front().dim(); }
  double term_radius(int j) const;  // B * m_j; zero for j = 0
};

// Builds p_0 = 1/a and
//   p_j = -p_0 * sum_{0 < |nu| <= j} (1/nu!) d_xi^nu p_{j-|nu|} * D_x^nu a
// as shared expression trees. The distinct-node total across all terms is
// capped by node_budget; exceeding it aborts with the last completed order
// in the message. The symbol must be nonvanishing wherever the terms are
// later evaluated; that is the caller's hypoellipticity check.
FormalSymbolSum parametrix_terms(const SymbolExpr& a, int J,
                                 const WeightSequence& M,
                                 const WeightSequence& A, double rho, double B,
                                 size_t node_budget = 2'000'000);

// c_j = sum_{s+|nu| = j} (1/nu!) d_xi^nu p_s * D_x^nu a, the order-j term of
// the composition expansion of p(x,D) a(x,D). For p = parametrix_terms(a, .)
// these collapse to c_0 = 1 and c_j = 0, up to rounding, at every point off
// the zero set of a; the trees themselves are not normalized that far.
std::vector<SymbolExpr> composition_terms(const FormalSymbolSum& p,
                                          const SymbolExpr& a, int J);

// C-infinity transition profile: 0 for t <= 0, 1 for t >= 1 (exactly, by
// branch), strictly increasing in between.
double smooth_step(double t);

// Radial excision windows chi_j(<(x,xi)>): identically 0 up to inner_j,
// identically 1 from outer_j on.
struct CutoffSpec {
  std::vector<double> inner, outer;
};

// inner_j = 2 * max(B,1) * max(m_j,1), outer_j = 2 * inner_j. The factor 2
// keeps the far region (all windows = 1) safely inside every term's trusted
// set, so grid checks never touch a transition annulus.
CutoffSpec default_cutoffs(const FormalSymbolSum& p);

// Numeric evaluator for b_N = sum_{j < N} chi_j(<(x,xi)>) p_j(x,xi).
// Terms whose window vanishes at the point are skipped entirely, so b_N is
// evaluable everywhere even when the raw terms are singular near the origin.
class TruncatedSum {
 public:
  TruncatedSum(std::vector<SymbolExpr> terms, std::vector<double> inner,
               std::vector<double> outer);

  int N() const { return static_cast<int>(terms_.size()); }
  double cutoff(int j, double bracket) const;  // chi_j at <(x,xi)> = bracket
  symbols::Complex operator()(std::span<const double> x,
                              std::span<const double> xi) const;

 private:
  std::vector<SymbolExpr> terms_;
  std::vector<double> inner_, outer_;
};

// Validates N <= J+1 and inner_j >= B*m_j for j < N, then packages the first
// N terms with their windows. Where every window equals 1 the result is the
// plain partial sum, exactly.
TruncatedSum truncate_with_cutoffs(const FormalSymbolSum& p, int N,
                                   const CutoffSpec& cut);

// Sup over j <= J, |alpha|+|beta| <= K, and the grid restricted to term j's
// trusted region, of
//   |d_xi^alpha d_x^beta p_j| <w>^{rho(|a|+|b|+2j)} e^{-M(m|x|)-M(m|xi|)}
//     / (h^{|a|+|b|+2j} A_alpha A_beta A_j^2).
// curve rows are (j, per-term sup); pass means the trend in j does not grow.
// Throws invalid_argument when some term's trusted region misses the grid.
checks::FitReport check_fs_membership(const FormalSymbolSum& p, double h,
                                      double m, int K,
                                      const checks::BoxSpec& grid);

// Remainder check for the truncations of p against their own J-term
// reference: on the far region (all windows = 1, so the truncation equals
// the plain partial sum) the N-th remainder is exactly sum_{N <= j < J} p_j,
// graded like the membership integrand with (N, A_N^2) in place of
// (j, A_j^2). curve rows are (N, sup). pass means the fitted per-step growth
// of those sups (constants["n_growth_factor"]) stays within what the
// h^(2N) grading can absorb, a factor 100 per step at the h scan's ceiling;
// trend_in_order reports the raw trend at the given h. For d = 1 the
// constants also carry ray_slope_N, the fitted log-log slope of
// |remainder_N / p_0| along x = xi = t, t in [3, 30]; the expected value is
// -2*rho*N. Throws invalid_argument when the far region misses the grid.
checks::FitReport check_equivalence(const FormalSymbolSum& p,
                                    const CutoffSpec& cut, int K,
                                    const checks::BoxSpec& grid, double h = 1.0,
                                    double m = 1.0);

// Diagnostic: index of the smallest-magnitude term at (x, xi) among the
// terms trusted there. Classical optimal-truncation heuristic; never applied
// silently by the other operations.
int recommend_truncation(const FormalSymbolSum& p, std::span<const double> x,
                         std::span<const double> xi);

// JSON round trip: dim, rho, B, both weight sequences (tag + log values),
// and the terms in the DSL's printed form.
void save_terms(const FormalSymbolSum& p, const std::string& path);
FormalSymbolSum load_terms(const std::string& path);

}  // namespace psdo::parametrix

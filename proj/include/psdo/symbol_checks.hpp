#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "psdo/expr.hpp"
#include "psdo/weights.hpp"

namespace psdo::checks {

using symbols::SymbolExpr;
using weights::AssociatedValue;
using weights::WeightSequence;

// Evaluation box [-L, L]^{2d} sampled with an odd per-axis count, so the
// grid always contains 0 and both endpoints.
struct BoxSpec {
  double L = 10.0;
  int points_per_axis = 21;
};

std::vector<double> axis_values(const BoxSpec& box);

enum class Trend { Decreasing, Flat, Growing };
std::string to_string(Trend t);

// Quantifier order for the (h, m) scans: Beurling fixes the constant for
// every h (resp. demands smallness in m), Roumieu asks for a single
// feasible h (resp. every m).
enum class Mode { Beurling, Roumieu };
std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

// Growth weight shape: Split is M(m|x|) + M(m|xi|); Joint is M(m(|x|+|xi|)),
// the variant available for factorial-power sequences.
enum class WeightCombination { Split, Joint };

// Denominator weights for the derivative-quotient scan: the defining form
// uses the product A_alpha * A_beta, the reciprocal-symbol bound uses the
// single A_{alpha+beta}. The two are equivalent up to constant refit.
enum class QuotientWeights { Product, Joint };

struct PhasePoint {
  std::vector<double> x, xi;
  double value = 0.0;
};
std::string format_point(const PhasePoint& p);

struct FitReport {
  bool pass = false;
  double value = 0.0;  // fitted sup or constant
  std::map<std::string, double> constants;
  std::vector<std::pair<double, double>> curve;  // meaning set by the op
  Trend trend_in_order = Trend::Flat;
  Trend trend_in_radius = Trend::Flat;
  double sup_at_boundary = 0.0;
  std::optional<PhasePoint> witness;
  std::string caveats;
};

// Sup over the grid and all |alpha|+|beta| <= K of
//   |D^alpha_xi D^beta_x a| <w>^{rho(|a|+|b|)} e^{-weight} / (h^{|a|+|b|} A_a A_b)
// together with its trend in the derivative order and in the radius.
// pass means neither trend grows on the tested box; membership proper would
// need the sup bounded as L grows, which callers probe with a box sweep.
// curve rows are (order, per-order sup). Throws domain_error with the
// offending point if the symbol evaluates singularly on the grid.
FitReport estimate_class_membership(const SymbolExpr& a,
                                    const WeightSequence& M,
                                    const WeightSequence& A, double rho,
                                    double h, double m, int K,
                                    const BoxSpec& grid,
                                    WeightCombination comb = WeightCombination::Split);

struct HypoellipticityReport {
  double B = 0.0;
  int K = 0;
  Mode mode = Mode::Beurling;
  std::string grid_desc;

  // lower bound |a| >= c e^{-M(m|x|)-M(m|xi|)} on the tested part of Q_B^c
  bool lower_bound_pass = false;
  double c_fit = 0.0;
  double m_fit = 0.0;
  std::vector<std::pair<double, double>> c_curve;  // (m, best c at that m)
  std::optional<PhasePoint> lower_witness;         // zero of a on failure

  // derivative quotients |D^a D^b a| <w>^{rho k} / (h^k |a| A_a A_b) <= C
  bool quotient_pass = false;
  double C_fit = 0.0;
  double h_fit = 0.0;
  std::vector<std::pair<double, double>> C_curve;  // (h, C(h))
  std::optional<PhasePoint> quotient_witness;

  std::string caveats;
  bool pass() const { return lower_bound_pass && quotient_pass; }
};

// Both conditions are checked on the grid restricted to Q_B^c, the set
// where <x> >= B or <xi> >= B. A zero of the symbol there fails the lower
// bound immediately with a witness. Scans over h and m are geometric with
// eight points per decade across [0.1, 10].
HypoellipticityReport check_hypoelliptic(const SymbolExpr& a,
                                         const WeightSequence& M,
                                         const WeightSequence& A, double rho,
                                         double B, int K, const BoxSpec& grid,
                                         Mode mode,
                                         WeightCombination comb = WeightCombination::Split,
                                         QuotientWeights qw = QuotientWeights::Product);

// Quotient bound for the reciprocal p0 = 1/a with the single weight
// A_{alpha+beta}: fits C(h) over the h scan, reports the smallest h whose C
// is within 10x of the curve's large-h asymptote. curve rows are (h, C(h)).
// pass means the curve is finite and nonincreasing. Throws domain_error if
// a vanishes on the tested region.
FitReport check_quotient_bound_p0(const SymbolExpr& a, const WeightSequence& A,
                                  double rho, double B, int K,
                                  const BoxSpec& grid);

}  // namespace psdo::checks

#pragma once

// Shared grid-scan plumbing for the class, hypoellipticity, and formal-sum
// checks. Internal to src/, not part of the installed interface.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "psdo/fitting.hpp"
#include "psdo/multi_index.hpp"
#include "psdo/symbol_checks.hpp"

namespace psdo::checks::detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kShells = 4;
inline const double kSlopeTol = std::log(1.2);

// geometric scan for h and m: eight points per decade across [0.1, 10]
inline std::vector<double> geometric_scan() {
  std::vector<double> v;
  for (int i = 0; i <= 16; ++i) v.push_back(std::pow(10.0, -1.0 + i / 8.0));
  return v;
}

struct PointSet {
  int d = 1;
  double L = 0.0;
  std::vector<PhasePoint> pts;
  std::vector<double> log_bracket;  // log <(x,xi)>
  std::vector<double> norm_x, norm_xi;
  std::vector<int> shell;      // nested max-norm bands, 0 innermost
  std::vector<bool> boundary;  // outermost max-norm band

  size_t size() const { return pts.size(); }
};

inline double euclid(const std::vector<double>& v) {
  double s = 0.0;
  for (double t : v) s += t * t;
  return std::sqrt(s);
}

inline double max_norm(const std::vector<double>& x,
                       const std::vector<double>& xi) {
  double m = 0.0;
  for (double t : x) m = std::max(m, std::fabs(t));
  for (double t : xi) m = std::max(m, std::fabs(t));
  return m;
}

// keep decides membership from (x, xi); used for the Q_B^c restriction
template <typename Keep>
PointSet build_points(int d, const BoxSpec& box, Keep keep) {
  const std::vector<double> ax = axis_values(box);
  PointSet ps;
  ps.d = d;
  ps.L = box.L;
  std::vector<size_t> idx(2 * d, 0);
  std::vector<double> x(d), xi(d);
  for (;;) {
    for (int i = 0; i < d; ++i) x[i] = ax[idx[i]];
    for (int i = 0; i < d; ++i) xi[i] = ax[idx[d + i]];
    if (keep(x, xi)) {
      PhasePoint p;
      p.x = x;
      p.xi = xi;
      double nx = euclid(x), nk = euclid(xi);
      ps.pts.push_back(std::move(p));
      ps.log_bracket.push_back(0.5 * std::log1p(nx * nx + nk * nk));
      ps.norm_x.push_back(nx);
      ps.norm_xi.push_back(nk);
      double frac = max_norm(x, xi) / box.L;
      int sh = std::min(kShells - 1, static_cast<int>(frac * kShells));
      ps.shell.push_back(sh);
      ps.boundary.push_back(sh == kShells - 1);
    }
    int c = 0;
    while (c < 2 * d && ++idx[c] == ax.size()) idx[c++] = 0;
    if (c == 2 * d) break;
  }
  return ps;
}

// points with <x> >= B or <xi> >= B (the complement of the excised box)
inline PointSet build_excised_points(int d, const BoxSpec& box, double B) {
  return build_points(d, box, [B](const auto& x, const auto& xi) {
    double bx = std::sqrt(1.0 + euclid(x) * euclid(x));
    double bk = std::sqrt(1.0 + euclid(xi) * euclid(xi));
    return bx >= B || bk >= B;
  });
}

struct DerivPair {
  MultiIndex alpha, beta;
  int k;
};

inline std::vector<DerivPair> deriv_pairs(int d, int K) {
  std::vector<DerivPair> out;
  for (int k = 0; k <= K; ++k)
    for (int ka = 0; ka <= k; ++ka)
      for (const auto& alpha : indices_of_order(d, ka))
        for (const auto& beta : indices_of_order(d, k - ka))
          out.push_back({alpha, beta, k});
  return out;
}

inline std::string point_context(const PhasePoint& p) {
  return " at " + format_point(p);
}

// |expr| on every point; evaluation errors are rethrown with the point
inline std::vector<double> eval_abs(const symbols::SymbolExpr& e,
                                    const PointSet& ps) {
  symbols::Evaluator ev;
  std::vector<double> out(ps.size());
  for (size_t i = 0; i < ps.size(); ++i) {
    try {
      out[i] = std::abs(ev(e, ps.pts[i].x, ps.pts[i].xi));
    } catch (const std::domain_error& err) {
      throw std::domain_error(std::string(err.what()) + point_context(ps.pts[i]));
    }
  }
  return out;
}

// log of the derivative magnitudes for each pair at each point
inline std::vector<std::vector<double>> eval_log_derivs(
    const symbols::SymbolExpr& a, const std::vector<DerivPair>& pairs,
    const PointSet& ps) {
  std::vector<std::vector<double>> out;
  out.reserve(pairs.size());
  for (const auto& pr : pairs) {
    symbols::SymbolExpr da = symbols::differentiate(a, pr.alpha, pr.beta);
    std::vector<double> vals = eval_abs(da, ps);
    std::vector<double> logs(vals.size());
    for (size_t i = 0; i < vals.size(); ++i)
      logs[i] = vals[i] > 0.0 ? std::log(vals[i]) : kNegInf;
    out.push_back(std::move(logs));
  }
  return out;
}

inline double assoc_at(const WeightSequence& M, double rho, bool& saturated) {
  if (rho <= 0.0) return 0.0;
  AssociatedValue v = associated_function(M, rho);
  saturated = saturated || v.saturated;
  return v.value;
}

inline double growth_weight(const WeightSequence& M, double m,
                            WeightCombination comb, double nx, double nxi,
                            bool& saturated) {
  if (comb == WeightCombination::Joint)
    return assoc_at(M, m * (nx + nxi), saturated);
  return assoc_at(M, m * nx, saturated) + assoc_at(M, m * nxi, saturated);
}

inline Trend trend_from_logs(std::span<const double> abscissae,
                             std::span<const double> logs) {
  std::vector<double> xs, ys;
  for (size_t i = 0; i < logs.size(); ++i)
    if (std::isfinite(logs[i])) {
      xs.push_back(abscissae[i]);
      ys.push_back(logs[i]);
    }
  if (xs.size() < 2) return Trend::Flat;
  LineFit f = fit_line(xs, ys);
  if (f.slope > kSlopeTol) return Trend::Growing;
  if (f.slope < -kSlopeTol) return Trend::Decreasing;
  return Trend::Flat;
}

// Growth toward the boundary is judged by dominance of the outermost band
// over the interior peak, by at least a factor of two in either direction.
// A least-squares fit would misread a broad interior peak as growth.
inline Trend radius_trend(const std::vector<double>& shell_logs) {
  double outer = shell_logs.back();
  double inner = kNegInf;
  for (size_t s = 0; s + 1 < shell_logs.size(); ++s)
    inner = std::max(inner, shell_logs[s]);
  if (!std::isfinite(outer) && !std::isfinite(inner)) return Trend::Flat;
  if (!std::isfinite(outer)) return Trend::Decreasing;
  if (!std::isfinite(inner)) return Trend::Growing;
  const double margin = std::log(2.0);
  if (outer > inner + margin) return Trend::Growing;
  if (outer < inner - margin) return Trend::Decreasing;
  return Trend::Flat;
}

inline void validate_class_args(const WeightSequence& A, double rho, int K) {
  if (!(rho > 0.0) || rho > 1.0)
    throw std::invalid_argument("rho must lie in (0, 1]");
  if (K < 0 || K > 12)
    throw std::invalid_argument("derivative order K must lie in [0, 12]");
  if (K > A.max_index())
    throw std::invalid_argument("weight sequence shorter than requested order");
}

inline std::string box_desc(int d, const BoxSpec& box) {
  std::ostringstream os;
  os << "[-" << box.L << ", " << box.L << "]^" << 2 * d << ", "
     << box.points_per_axis << " pts/axis";
  return os.str();
}

}  // namespace psdo::checks::detail

#include "psdo/symbol_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "grid_detail.hpp"

namespace psdo::checks {

using namespace detail;

namespace {

// per-order maxima of log(quotient at h = 1); C(h) follows by shifting
struct OrderMaxima {
  std::vector<double> max_log;   // index = derivative order
  std::vector<size_t> arg_pt;    // attaining point per order
};

double log_C_of_h(const OrderMaxima& om, double h, int* arg_order = nullptr) {
  double best = kNegInf;
  int barg = 0;
  for (size_t k = 0; k < om.max_log.size(); ++k) {
    double v = om.max_log[k] - static_cast<double>(k) * std::log(h);
    if (v > best) {
      best = v;
      barg = static_cast<int>(k);
    }
  }
  if (arg_order) *arg_order = barg;
  return best;
}

OrderMaxima quotient_maxima(const std::vector<DerivPair>& pairs,
                            const std::vector<std::vector<double>>& logd,
                            const std::vector<double>& log_ref,
                            const PointSet& ps, const WeightSequence& A,
                            double rho, int K, QuotientWeights qw) {
  OrderMaxima om;
  om.max_log.assign(K + 1, kNegInf);
  om.arg_pt.assign(K + 1, 0);
  for (size_t p = 0; p < pairs.size(); ++p) {
    const int k = pairs[p].k;
    const int ka = order(pairs[p].alpha), kb = order(pairs[p].beta);
    const double logAA = qw == QuotientWeights::Product
                             ? A.log_at(ka) + A.log_at(kb)
                             : A.log_at(ka + kb);
    for (size_t i = 0; i < ps.size(); ++i) {
      double v = logd[p][i];
      if (v == kNegInf) continue;
      v += rho * k * ps.log_bracket[i] - log_ref[i] - logAA;
      if (v > om.max_log[k]) {
        om.max_log[k] = v;
        om.arg_pt[k] = i;
      }
    }
  }
  return om;
}

}  // namespace

std::vector<double> axis_values(const BoxSpec& box) {
  if (!(box.L > 0.0)) throw std::invalid_argument("box half-width must be positive");
  if (box.points_per_axis < 3 || box.points_per_axis % 2 == 0)
    throw std::invalid_argument("points per axis must be odd and at least 3");
  std::vector<double> v(box.points_per_axis);
  const double step = 2.0 * box.L / (box.points_per_axis - 1);
  for (int i = 0; i < box.points_per_axis; ++i) v[i] = -box.L + i * step;
  v[(box.points_per_axis - 1) / 2] = 0.0;  // exact center
  return v;
}

std::string to_string(Trend t) {
  switch (t) {
    case Trend::Decreasing: return "decreasing";
    case Trend::Flat: return "flat";
    case Trend::Growing: return "growing";
  }
  return "?";
}

std::string to_string(Mode m) {
  return m == Mode::Beurling ? "beurling" : "roumieu";
}

Mode mode_from_string(const std::string& s) {
  if (s == "beurling") return Mode::Beurling;
  if (s == "roumieu") return Mode::Roumieu;
  throw std::invalid_argument("unknown mode '" + s + "' (beurling|roumieu)");
}

std::string format_point(const PhasePoint& p) {
  std::ostringstream os;
  os << "x=(";
  for (size_t i = 0; i < p.x.size(); ++i) os << (i ? "," : "") << p.x[i];
  os << ") xi=(";
  for (size_t i = 0; i < p.xi.size(); ++i) os << (i ? "," : "") << p.xi[i];
  os << ") value=" << p.value;
  return os.str();
}

FitReport estimate_class_membership(const SymbolExpr& a,
                                    const WeightSequence& M,
                                    const WeightSequence& A, double rho,
                                    double h, double m, int K,
                                    const BoxSpec& grid,
                                    WeightCombination comb) {
  validate_class_args(A, rho, K);
  if (!(h > 0.0) || !(m > 0.0))
    throw std::invalid_argument("h and m must be positive");
  const int d = a.dim();

  PointSet ps = build_points(d, grid, [](const auto&, const auto&) { return true; });
  std::vector<DerivPair> pairs = deriv_pairs(d, K);
  std::vector<std::vector<double>> logd = eval_log_derivs(a, pairs, ps);

  bool saturated = false;
  std::vector<double> wt(ps.size());
  for (size_t i = 0; i < ps.size(); ++i)
    wt[i] = growth_weight(M, m, comb, ps.norm_x[i], ps.norm_xi[i], saturated);

  std::vector<double> order_max(K + 1, kNegInf);
  std::vector<double> shell_max(kShells, kNegInf);
  double total = kNegInf, boundary = kNegInf;
  size_t arg_pt = 0;
  const double log_h = std::log(h);

  for (size_t p = 0; p < pairs.size(); ++p) {
    const int k = pairs[p].k;
    const double logAA =
        A.log_at(order(pairs[p].alpha)) + A.log_at(order(pairs[p].beta));
    for (size_t i = 0; i < ps.size(); ++i) {
      double v = logd[p][i];
      if (v == kNegInf) continue;
      v += rho * k * ps.log_bracket[i] - wt[i] - k * log_h - logAA;
      order_max[k] = std::max(order_max[k], v);
      shell_max[ps.shell[i]] = std::max(shell_max[ps.shell[i]], v);
      if (ps.boundary[i]) boundary = std::max(boundary, v);
      if (v > total) {
        total = v;
        arg_pt = i;
      }
    }
  }

  FitReport r;
  r.value = std::exp(total);
  r.sup_at_boundary = std::isfinite(boundary) ? std::exp(boundary) : 0.0;
  std::vector<double> orders(K + 1);
  for (int k = 0; k <= K; ++k) {
    orders[k] = k;
    r.curve.emplace_back(k, std::isfinite(order_max[k]) ? std::exp(order_max[k]) : 0.0);
  }
  r.trend_in_order = trend_from_logs(orders, order_max);
  r.trend_in_radius = radius_trend(shell_max);
  r.pass = r.trend_in_order != Trend::Growing && r.trend_in_radius != Trend::Growing;
  PhasePoint w = ps.pts[arg_pt];
  w.value = r.value;
  r.witness = std::move(w);
  r.constants = {{"h", h}, {"m", m}, {"rho", rho}, {"K", double(K)}, {"L", grid.L}};
  r.caveats = "sup taken on " + box_desc(d, grid) +
              "; boundedness beyond the box needs an L sweep";
  if (saturated)
    r.caveats += "; growth weight saturated its table, extend the sequence";
  return r;
}

HypoellipticityReport check_hypoelliptic(const SymbolExpr& a,
                                         const WeightSequence& M,
                                         const WeightSequence& A, double rho,
                                         double B, int K, const BoxSpec& grid,
                                         Mode mode, WeightCombination comb,
                                         QuotientWeights qw) {
  validate_class_args(A, rho, K);
  if (!(B > 0.0)) throw std::invalid_argument("excision radius B must be positive");
  const int d = a.dim();

  PointSet ps = build_excised_points(d, grid, B);
  if (ps.pts.empty())
    throw std::invalid_argument("no grid points outside the excised box; enlarge L");

  HypoellipticityReport rep;
  rep.B = B;
  rep.K = K;
  rep.mode = mode;
  rep.grid_desc = box_desc(d, grid) + ", restricted to <x> >= " +
                  std::to_string(B) + " or <xi> >= " + std::to_string(B);

  std::vector<double> abs_a = eval_abs(a, ps);
  std::optional<size_t> zero_at;
  for (size_t i = 0; i < ps.size(); ++i)
    if (abs_a[i] == 0.0) {
      zero_at = i;
      break;
    }

  bool saturated = false;
  const std::vector<double> scan = geometric_scan();

  if (zero_at) {
    rep.lower_bound_pass = false;
    PhasePoint w = ps.pts[*zero_at];
    w.value = 0.0;
    rep.lower_witness = w;
  } else {
    std::vector<double> log_a(ps.size());
    for (size_t i = 0; i < ps.size(); ++i) log_a[i] = std::log(abs_a[i]);
    for (double m : scan) {
      double lo = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < ps.size(); ++i) {
        double w = growth_weight(M, m, comb, ps.norm_x[i], ps.norm_xi[i], saturated);
        lo = std::min(lo, log_a[i] + w);
      }
      rep.c_curve.emplace_back(m, std::exp(lo));
    }
    rep.lower_bound_pass = true;
    if (mode == Mode::Beurling) {
      // any single m will do; prefer the smallest one with a clean constant
      size_t pick = rep.c_curve.size() - 1;
      for (size_t i = 0; i < rep.c_curve.size(); ++i)
        if (rep.c_curve[i].second >= 1.0) {
          pick = i;
          break;
        }
      rep.m_fit = rep.c_curve[pick].first;
      rep.c_fit = rep.c_curve[pick].second;
    } else {
      // every m must admit a constant; the smallest m is the binding one
      rep.m_fit = rep.c_curve.front().first;
      rep.c_fit = rep.c_curve.front().second;
    }
  }

  if (zero_at) {
    rep.quotient_pass = false;
    rep.quotient_witness = rep.lower_witness;
    rep.caveats = "symbol vanishes on the tested region";
    return rep;
  }

  std::vector<DerivPair> pairs = deriv_pairs(d, K);
  std::vector<std::vector<double>> logd = eval_log_derivs(a, pairs, ps);
  std::vector<double> log_a(ps.size());
  for (size_t i = 0; i < ps.size(); ++i) log_a[i] = std::log(abs_a[i]);
  OrderMaxima om = quotient_maxima(pairs, logd, log_a, ps, A, rho, K, qw);

  for (double h : scan) rep.C_curve.emplace_back(h, std::exp(log_C_of_h(om, h)));
  rep.quotient_pass = true;

  int arg_order = 0;
  if (mode == Mode::Beurling) {
    // every h admits a constant; report the curve and the value at h = 1
    rep.h_fit = 1.0;
    rep.C_fit = std::exp(log_C_of_h(om, 1.0, &arg_order));
  } else {
    // smallest h whose constant sits within 10x of the large-h asymptote
    double asym = rep.C_curve.back().second;
    rep.h_fit = rep.C_curve.back().first;
    rep.C_fit = asym;
    for (const auto& [h, C] : rep.C_curve)
      if (C <= 10.0 * asym) {
        rep.h_fit = h;
        rep.C_fit = C;
        break;
      }
    log_C_of_h(om, rep.h_fit, &arg_order);
  }
  PhasePoint w = ps.pts[om.arg_pt[arg_order]];
  w.value = rep.C_fit;
  rep.quotient_witness = std::move(w);

  rep.caveats = "constants fitted on the grid only; stability under box growth "
                "is the caller's sweep";
  if (saturated)
    rep.caveats += "; growth weight saturated its table, extend the sequence";
  return rep;
}

FitReport check_quotient_bound_p0(const SymbolExpr& a, const WeightSequence& A,
                                  double rho, double B, int K,
                                  const BoxSpec& grid) {
  validate_class_args(A, rho, K);
  if (!(B > 0.0)) throw std::invalid_argument("excision radius B must be positive");
  const int d = a.dim();

  PointSet ps = build_excised_points(d, grid, B);
  if (ps.pts.empty())
    throw std::invalid_argument("no grid points outside the excised box; enlarge L");

  SymbolExpr p0(symbols::make_recip(a.node()));
  std::vector<double> abs_p0 = eval_abs(p0, ps);  // throws on zeros of a
  std::vector<double> log_p0(ps.size());
  for (size_t i = 0; i < ps.size(); ++i) log_p0[i] = std::log(abs_p0[i]);

  std::vector<DerivPair> pairs = deriv_pairs(d, K);
  std::vector<std::vector<double>> logd = eval_log_derivs(p0, pairs, ps);
  OrderMaxima om = quotient_maxima(pairs, logd, log_p0, ps, A, rho, K,
                                   QuotientWeights::Joint);

  const std::vector<double> scan = geometric_scan();
  FitReport r;
  bool nonincreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (double h : scan) {
    double C = std::exp(log_C_of_h(om, h));
    r.curve.emplace_back(h, C);
    if (C > prev * (1.0 + 1e-9)) nonincreasing = false;
    prev = C;
  }

  double asym = r.curve.back().second;
  double h_fit = r.curve.back().first, C_fit = asym;
  for (const auto& [h, C] : r.curve)
    if (C <= 10.0 * asym) {
      h_fit = h;
      C_fit = C;
      break;
    }
  int arg_order = 0;
  log_C_of_h(om, h_fit, &arg_order);

  r.pass = nonincreasing && std::isfinite(asym);
  r.value = C_fit;
  r.constants = {{"h_min_feasible", h_fit},
                 {"C_asymptote", asym},
                 {"C_at_h1", std::exp(log_C_of_h(om, 1.0))},
                 {"rho", rho},
                 {"B", B},
                 {"K", double(K)}};
  std::vector<double> ks(om.max_log.size());
  for (size_t k = 0; k < ks.size(); ++k) ks[k] = double(k);
  r.trend_in_order = trend_from_logs(ks, om.max_log);
  PhasePoint w = ps.pts[om.arg_pt[arg_order]];
  w.value = C_fit;
  r.witness = std::move(w);
  r.caveats = "reciprocal-symbol quotient fitted on " + box_desc(d, grid);
  return r;
}

}  // namespace psdo::checks

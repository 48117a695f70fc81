#include "psdo/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "psdo/fitting.hpp"

namespace psdo::weights {

namespace {

constexpr double kNormTol = 1e-12;
// Slack for pointwise log-domain comparisons; equality cases (constant
// sequences) must pass, so the slack is strictly positive.
double point_tol(double scale) { return 1e-9 + 1e-12 * std::abs(scale); }

constexpr double kLogC0Cap = 27.7258872223978;  // log(2^40), cap for fitted constants
constexpr double kLogGridStep = 0.17328679513998632;  // log(2^(1/4))

}  // namespace

WeightSequence::WeightSequence(std::vector<double> log_values, std::string tag)
    : log_m_(std::move(log_values)), tag_(std::move(tag)) {
  if (log_m_.size() < 3)
    throw std::invalid_argument("weight sequence needs at least indices 0..2");
  if (std::abs(log_m_[0]) > kNormTol || std::abs(log_m_[1]) > kNormTol)
    throw std::invalid_argument("weight sequence must be normalized: M_0 = M_1 = 1");
  for (double v : log_m_)
    if (!std::isfinite(v)) throw std::invalid_argument("weight sequence has non-finite entries");
}

WeightSequence WeightSequence::gevrey(double s, int P) {
  if (s <= 0) throw std::invalid_argument("gevrey order must be positive");
  if (P < 2) throw std::invalid_argument("gevrey needs P >= 2");
  std::vector<double> lv(P + 1);
  for (int p = 0; p <= P; ++p) lv[p] = s * log_factorial(p);
  std::ostringstream tag;
  tag << "gevrey:" << s;
  return WeightSequence(std::move(lv), tag.str());
}

WeightSequence WeightSequence::ones(int P) {
  if (P < 2) throw std::invalid_argument("ones needs P >= 2");
  return WeightSequence(std::vector<double>(P + 1, 0.0), "ones");
}

WeightSequence WeightSequence::from_values(std::vector<double> values, std::string tag) {
  std::vector<double> lv(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0)) throw std::invalid_argument("weight values must be positive");
    lv[i] = std::log(values[i]);
  }
  return WeightSequence(std::move(lv), std::move(tag));
}

WeightSequence WeightSequence::from_log_values(std::vector<double> log_values, std::string tag) {
  return WeightSequence(std::move(log_values), std::move(tag));
}

double WeightSequence::log_at(int p) const {
  if (p < 0 || p > max_index()) throw std::out_of_range("weight index out of range");
  return log_m_[p];
}

double WeightSequence::at(int p) const { return std::exp(log_at(p)); }

double WeightSequence::log_ratio(int p) const {
  if (p < 1 || p > max_index()) throw std::out_of_range("ratio index out of range");
  return log_m_[p] - log_m_[p - 1];
}

double WeightSequence::ratio(int p) const {
  if (p == 0) return 0.0;
  return std::exp(log_ratio(p));
}

WeightSequence parse_sequence_spec(const std::string& spec, int default_P) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.empty()) throw std::invalid_argument("empty sequence spec");
  try {
    if (parts[0] == "gevrey") {
      if (parts.size() < 2) throw std::invalid_argument("gevrey spec needs an order");
      double s = std::stod(parts[1]);
      int P = parts.size() > 2 ? std::stoi(parts[2]) : default_P;
      return WeightSequence::gevrey(s, P);
    }
    if (parts[0] == "ones") {
      int P = parts.size() > 1 ? std::stoi(parts[1]) : default_P;
      return WeightSequence::ones(P);
    }
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed sequence spec: " + spec);
  }
  throw std::invalid_argument("unknown sequence family: " + parts[0]);
}

std::string to_string(Condition c) {
  switch (c) {
    case Condition::LogConvex: return "M1";
    case Condition::Factorizable: return "M2";
    case Condition::TailBound: return "M3";
    case Condition::TailSummable: return "M3p";
    case Condition::ShiftedLogConvex: return "M4";
  }
  return "?";
}

Condition condition_from_string(const std::string& name) {
  if (name == "M1") return Condition::LogConvex;
  if (name == "M2") return Condition::Factorizable;
  if (name == "M3") return Condition::TailBound;
  if (name == "M3p" || name == "M3'") return Condition::TailSummable;
  if (name == "M4") return Condition::ShiftedLogConvex;
  throw std::invalid_argument("unknown condition name: " + name);
}

namespace {

int clamp_range(const WeightSequence& M, int range, int slack) {
  if (range < 2) throw std::invalid_argument("condition range must be at least 2");
  return std::min(range, M.max_index() - slack);
}

// Pointwise log-convexity margins over an arbitrary log sequence.
ConditionReport convexity_report(const std::vector<double>& lv, int range) {
  ConditionReport r;
  r.range = range;
  r.holds = true;
  r.extremal = std::numeric_limits<double>::infinity();
  for (int p = 1; p + 1 <= range; ++p) {
    const double margin = lv[p - 1] + lv[p + 1] - 2.0 * lv[p];
    if (margin < r.extremal) {
      r.extremal = margin;
      r.extremal_index = p;
    }
    if (margin < -point_tol(lv[p]) && r.holds) {
      r.holds = false;
      r.violating_index = p;
    }
  }
  return r;
}

struct EnvelopeFit {
  bool feasible = false;
  double log_slope = 0.0;  // log H (or log L)
  double log_c0 = 0.0;
  int argmax = 0;
};

// Fits the smallest grid slope H = 2^(k/4) such that f(p) <= log c0 + p log H
// over p <= range with the binding index away from the tail. A binding index
// in the final stretch means the requirement is still growing at the cut and
// the fit would not survive a larger range.
EnvelopeFit fit_geometric_envelope(const std::vector<double>& f, int range, int k_max = 60) {
  for (int k = 0; k <= k_max; ++k) {
    const double log_h = k * kLogGridStep;
    double best = -std::numeric_limits<double>::infinity();
    int argmax = 0;
    for (int p = 0; p <= range; ++p) {
      const double r = f[p] - p * log_h;
      if (r > best) {
        best = r;
        argmax = p;
      }
    }
    if (argmax <= static_cast<int>(0.85 * range) && best <= kLogC0Cap)
      return {true, log_h, std::max(best, 0.0), argmax};
  }
  return {};
}

// Tail analysis for sum_p r_p truncated at `range`. Returns the bound added
// to the partial sum, or an explanation of why no bound is available.
struct TailAnalysis {
  enum class Verdict { Summable, Divergent, Inconclusive } verdict;
  double tail = 0.0;
  double theta = 0.0;  // fitted power decay exponent of r_p
  int bad_index = -1;
  std::string note;
};

TailAnalysis analyze_tail(const std::vector<double>& r, int range) {
  TailAnalysis t{};
  const int lo = std::max(2, range / 2);
  // Term test: summable sequences must decay; a ratio pinned near or above 1
  // in the tail window certifies divergence at a concrete index.
  for (int p = lo; p <= range; ++p) {
    if (r[p] >= 0.999) {
      t.verdict = TailAnalysis::Verdict::Divergent;
      t.bad_index = p;
      t.note = "tail terms do not decay";
      return t;
    }
  }
  // Geometric tail: consecutive quotients bounded below 1.
  double qmax = 0.0;
  for (int p = lo + 1; p <= range; ++p) qmax = std::max(qmax, r[p] / r[p - 1]);
  if (qmax <= 0.95) {
    t.verdict = TailAnalysis::Verdict::Summable;
    t.tail = r[range] * qmax / (1.0 - qmax);
    t.note = "geometric tail bound";
    return t;
  }
  // Power-law tail: fit r_p ~ p^(-theta) over the window and compare with
  // the integral test threshold theta = 1.
  std::vector<double> xs, ys;
  for (int p = lo; p <= range; ++p) {
    xs.push_back(std::log(static_cast<double>(p)));
    ys.push_back(std::log(r[p]));
  }
  const LineFit fit = fit_line(xs, ys);
  t.theta = -fit.slope;
  if (t.theta > 1.05) {
    t.verdict = TailAnalysis::Verdict::Summable;
    t.tail = r[range] * range / (t.theta - 1.0);
    t.note = "power-law tail bound";
  } else if (t.theta < 0.95) {
    t.verdict = TailAnalysis::Verdict::Divergent;
    t.bad_index = range;
    t.note = "fitted ratio decay exponent at most 1; divergent by comparison";
  } else {
    t.verdict = TailAnalysis::Verdict::Inconclusive;
    t.bad_index = range;
    t.note = "ratio decay too close to 1/p to classify at this range";
  }
  return t;
}

}  // namespace

ConditionReport check_condition(const WeightSequence& M, Condition c, int range) {
  ConditionReport out;
  out.condition = c;
  out.sequence_tag = M.tag();

  switch (c) {
    case Condition::LogConvex: {
      const int R = clamp_range(M, range, 1);
      std::vector<double> lv(R + 2);
      for (int p = 0; p <= R + 1; ++p) lv[p] = M.log_at(p);
      out = convexity_report(lv, R);
      out.condition = c;
      out.sequence_tag = M.tag();
      break;
    }
    case Condition::ShiftedLogConvex: {
      const int R = clamp_range(M, range, 1);
      std::vector<double> lv(R + 2);
      for (int p = 0; p <= R + 1; ++p) lv[p] = M.log_at(p) - log_factorial(p);
      out = convexity_report(lv, R);
      out.condition = c;
      out.sequence_tag = M.tag();
      break;
    }
    case Condition::Factorizable: {
      const int R = clamp_range(M, range, 0);
      out.range = R;
      std::vector<double> f(R + 1);
      for (int p = 0; p <= R; ++p) {
        double best = std::numeric_limits<double>::infinity();
        for (int q = 0; q <= p; ++q)
          best = std::min(best, M.log_at(p - q) + M.log_at(q));
        f[p] = M.log_at(p) - best;
      }
      const EnvelopeFit fit = fit_geometric_envelope(f, R);
      out.holds = fit.feasible;
      if (fit.feasible) {
        out.constants["H"] = std::exp(fit.log_slope);
        out.constants["c0"] = std::exp(fit.log_c0);
        out.extremal = fit.log_c0;
        out.extremal_index = fit.argmax;
      } else {
        out.violating_index = R;
        out.caveats = "no feasible (c0, H) on the search grid; requirement still growing at the range cut";
      }
      break;
    }
    case Condition::TailSummable: {
      const int R = clamp_range(M, range, 0);
      out.range = R;
      std::vector<double> r(R + 1, 0.0);
      double partial = 0.0;
      for (int p = 1; p <= R; ++p) {
        r[p] = std::exp(-M.log_ratio(p));
        partial += r[p];
      }
      const TailAnalysis tail = analyze_tail(r, R);
      out.constants["partial_sum"] = partial;
      out.extremal = partial;
      out.extremal_index = R;
      if (tail.verdict == TailAnalysis::Verdict::Summable) {
        out.holds = true;
        out.constants["sum_bound"] = partial + tail.tail;
        if (tail.theta != 0.0) out.constants["decay_exponent"] = tail.theta;
        out.caveats = tail.note;
      } else {
        out.holds = false;
        out.violating_index = tail.bad_index;
        if (tail.theta != 0.0) out.constants["decay_exponent"] = tail.theta;
        out.caveats = tail.note;
      }
      break;
    }
    case Condition::TailBound: {
      const int R = clamp_range(M, range, 1);
      out.range = R;
      std::vector<double> r(R + 2, 0.0);
      for (int p = 1; p <= R + 1; ++p) r[p] = std::exp(-M.log_ratio(p));
      const TailAnalysis tail = analyze_tail(r, R + 1);
      if (tail.verdict != TailAnalysis::Verdict::Summable) {
        out.holds = false;
        out.violating_index = tail.bad_index;
        out.caveats = "tail not summable: " + tail.note;
        break;
      }
      // suffix[q] = sum_{p > q} r_p, with the fitted bound standing in for
      // the part beyond the range cut.
      std::vector<double> suffix(R + 2, tail.tail);
      for (int p = R + 1; p >= 1; --p) suffix[p - 1] = suffix[p] + r[p];
      double c0 = 0.0;
      int argq = 1;
      for (int q = 1; q <= R; ++q) {
        const double rhs_unit = q * std::exp(M.log_at(q) - M.log_at(q + 1));
        const double need = suffix[q] / rhs_unit;
        if (need > c0) {
          c0 = need;
          argq = q;
        }
      }
      out.holds = std::isfinite(c0) && c0 > 0;
      out.constants["c0"] = std::max(c0, 1.0);
      out.extremal = c0;
      out.extremal_index = argq;
      out.caveats = tail.note;
      break;
    }
  }
  return out;
}

ConditionReport check_inclusion(const WeightSequence& A, const WeightSequence& M, int range) {
  ConditionReport out;
  out.condition = Condition::Factorizable;  // same fitted shape: A_p <= c0 L^p M_p
  out.sequence_tag = A.tag() + " in " + M.tag();
  const int R = std::min({range, A.max_index(), M.max_index()});
  out.range = R;
  std::vector<double> f(R + 1);
  for (int p = 0; p <= R; ++p) f[p] = A.log_at(p) - M.log_at(p);
  const EnvelopeFit fit = fit_geometric_envelope(f, R, 48);
  out.holds = fit.feasible;
  if (fit.feasible) {
    out.constants["L"] = std::exp(fit.log_slope);
    out.constants["c0"] = std::exp(fit.log_c0);
    out.extremal = fit.log_c0;
    out.extremal_index = fit.argmax;
    out.caveats = "certified on the tested range only";
  } else {
    out.violating_index = R;
    out.caveats = "no feasible (c0, L) on the search grid";
  }
  return out;
}

AssociatedValue associated_function(const WeightSequence& M, double rho) {
  if (!(rho > 0)) throw std::invalid_argument("associated function needs rho > 0");
  AssociatedValue out;
  // For rho <= 1 and sequences with M_p >= 1 every term p log(rho) - log M_p
  // is nonpositive, so the log+ sup is exactly 0; the scan below returns that
  // without a special case (best starts at 0).
  const double lr = std::log(rho);
  double best = 0.0;
  int argmax = 0;
  double prev = -std::numeric_limits<double>::infinity();
  int p = 0;
  for (; p <= M.max_index(); ++p) {
    const double term = p * lr - M.log_at(p);
    if (term > best) {
      best = term;
      argmax = p;
    }
    // Log-convex M makes the terms concave in p: once they turn downward and
    // fall below the incumbent, the sup is settled.
    if (p > 0 && term < prev && term < best) break;
    prev = term;
  }
  out.value = best;
  out.argmax = argmax;
  out.saturated = (p > M.max_index()) && (argmax == M.max_index());
  return out;
}

ConditionReport check_root_monotone(const WeightSequence& M, int P) {
  ConditionReport out;
  out.condition = Condition::ShiftedLogConvex;
  out.sequence_tag = M.tag();
  const int R = clamp_range(M, P, 0);
  out.range = R;
  out.holds = true;
  out.extremal = std::numeric_limits<double>::infinity();
  // g(p) = log(M_p/p!)/(p-1) must be nondecreasing for p >= 2; tested as the
  // full double sweep to stay an independent brute-force check.
  for (int q = 2; q <= R && out.holds; ++q) {
    const double gq = (M.log_at(q) - log_factorial(q)) / (q - 1);
    for (int p = q; p <= R; ++p) {
      const double gp = (M.log_at(p) - log_factorial(p)) / (p - 1);
      const double margin = gp - gq;
      if (margin < out.extremal) {
        out.extremal = margin;
        out.extremal_index = p;
      }
      if (margin < -point_tol(gq)) {
        out.holds = false;
        out.violating_index = p;
        break;
      }
    }
  }
  return out;
}

ConditionReport check_leibniz_budget(const WeightSequence& M, int dim, int max_order,
                                     long scan_cap) {
  ConditionReport out;
  out.condition = Condition::ShiftedLogConvex;
  out.sequence_tag = M.tag();
  out.range = max_order;
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  if (max_order > M.max_index() - 1)
    throw std::invalid_argument("max_order exceeds the tabulated sequence");
  if (index_pair_count(dim, max_order) > scan_cap)
    throw std::invalid_argument("index scan larger than the configured cap");

  out.holds = true;
  out.extremal = std::numeric_limits<double>::infinity();
  for (const auto& a : indices_up_to_order(dim, max_order)) {
    const int na = order(a);
    if (na < 2) continue;
    const double rhs = std::log(static_cast<double>(na)) + M.log_at(na - 1);
    for (const auto& b : indices_below(a)) {
      const int nb = order(b);
      if (nb < 1 || nb > na - 1) continue;
      const double lhs = std::log(binomial(a, b)) + M.log_at(na - nb) + M.log_at(nb);
      const double margin = rhs - lhs;
      if (margin < out.extremal) {
        out.extremal = margin;
        out.extremal_index = na;
      }
      if (margin < -point_tol(rhs)) {
        out.holds = false;
        out.violating_index = na;
        return out;
      }
    }
  }
  return out;
}

Rho0Estimate estimate_rho0(const WeightSequence& A, const WeightSequence& M, int range) {
  const int R = std::min({range, A.max_index(), M.max_index()});
  if (R < 8) throw std::invalid_argument("estimate_rho0 needs a usable range");
  // Inclusion sanity first: with the L grid pinned to {1}, feasibility at a
  // given rho means sup_p (log A_p - rho log M_p) stays within the c0 cap.
  const double cap = std::log(4096.0);  // 2^12
  auto sup_gap = [&](double rho, int upto) {
    double m = -std::numeric_limits<double>::infinity();
    for (int p = 0; p <= upto; ++p) m = std::max(m, A.log_at(p) - rho * M.log_at(p));
    return m;
  };
  auto least_feasible = [&](int upto) {
    for (int k = 1; k <= 200; ++k) {
      const double rho = 0.005 * k;
      if (sup_gap(rho, upto) <= cap) return rho;
    }
    return 1.005;  // sentinel: infeasible even at 1
  };

  Rho0Estimate out;
  const double at_full = least_feasible(R);
  out.feasible_at_one = sup_gap(1.0, R) <= cap;
  if (!out.feasible_at_one)
    throw std::domain_error("inclusion infeasible at rho = 1 on the tested range");
  out.rho = at_full;
  out.constants["c0"] = std::exp(std::max(sup_gap(at_full, R), 0.0));
  out.constants["rho_half_range"] = least_feasible(R / 2);
  out.caveats =
      "upper estimate: geometric slack L is pinned to 1, so pairs whose inclusion "
      "needs L > 1 read high; tightens as the range grows";
  return out;
}

}  // namespace psdo::weights

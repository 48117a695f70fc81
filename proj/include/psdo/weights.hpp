#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psdo/multi_index.hpp"

namespace psdo::weights {

// Weight sequence M_p, p = 0..P, kept in log domain so factorial-power
// families stay finite far past the range where M_p itself overflows.
// Normalization M_0 = M_1 = 1 is enforced at construction.
class WeightSequence {
 public:
  static WeightSequence gevrey(double s, int P);  // M_p = (p!)^s, s > 0
  static WeightSequence ones(int P);              // M_p = 1
  static WeightSequence from_values(std::vector<double> values, std::string tag);
  static WeightSequence from_log_values(std::vector<double> log_values, std::string tag);

  int max_index() const { return static_cast<int>(log_m_.size()) - 1; }
  double log_at(int p) const;
  double at(int p) const;           // exp(log M_p); may overflow for large p
  double log_ratio(int p) const;    // log(M_p / M_{p-1}), p >= 1
  double ratio(int p) const;        // m_p = M_p / M_{p-1}; m_0 = 0 by convention
  const std::string& tag() const { return tag_; }

 private:
  WeightSequence(std::vector<double> log_values, std::string tag);
  std::vector<double> log_m_;
  std::string tag_;
};

// Parses "gevrey:2", "gevrey:1.5:400" (explicit P), or "ones:200".
WeightSequence parse_sequence_spec(const std::string& spec, int default_P = 400);

enum class Condition {
  LogConvex,        // M_p^2 <= M_{p-1} M_{p+1}
  Factorizable,     // M_p <= c0 H^p min_q M_{p-q} M_q
  TailBound,        // sum_{p>q} M_{p-1}/M_p <= c0 q M_q/M_{q+1}
  TailSummable,     // sum_p M_{p-1}/M_p < infinity
  ShiftedLogConvex  // (M_p/p!)^2 <= (M_{p-1}/(p-1)!)(M_{p+1}/(p+1)!)
};
std::string to_string(Condition c);
Condition condition_from_string(const std::string& name);

struct ConditionReport {
  Condition condition{};
  std::string sequence_tag;
  int range = 0;
  bool holds = false;
  std::map<std::string, double> constants;  // fitted c0, H, L, exponents
  std::optional<int> violating_index;       // populated whenever holds is false
  double extremal = 0.0;                    // tightest tested margin (log domain)
  int extremal_index = -1;
  std::string caveats;
};

// Checks one condition over indices p <= range. Fitted constants (c0, H)
// are searched on geometric grids 2^(k/4); for the summability conditions the
// truncated tail is bounded from the ratio decay and noted in caveats.
ConditionReport check_condition(const WeightSequence& M, Condition c, int range);

// Inclusion A_p <= c0 L^p M_p with (c0, L) fitted like check_condition above.
ConditionReport check_inclusion(const WeightSequence& A, const WeightSequence& M, int range);

// Associated function M(rho) = sup_p log+(rho^p / M_p). Under log-convexity
// the terms are concave in p, so the scan stops at the first descent.
struct AssociatedValue {
  double value = 0.0;
  int argmax = 0;
  bool saturated = false;  // sup still climbing at p = P; enlarge P to trust the value
};
AssociatedValue associated_function(const WeightSequence& M, double rho);

// Two-sided comparison lemmas used by the calculus; both hold whenever the
// shifted log-convexity condition does, so a failure flags a bug upstream.
//
//   root_monotone:  (M_q/q!)^{1/(q-1)} <= (M_p/p!)^{1/(p-1)} for 2 <= q <= p
//   leibniz_budget: binom(a,b) M_{a-b} M_b <= |a| M_{|a|-1} for 0 < |b| < |a|
ConditionReport check_root_monotone(const WeightSequence& M, int P);
ConditionReport check_leibniz_budget(const WeightSequence& M, int dim, int max_order,
                                     long scan_cap = 2'000'000);

// Least rho on a 0.005 grid with A_p <= c0 L^p M_p^rho certified over the
// tested range. The L grid is pinned to {1}: at desk-scale P any L > 1
// absorbs the growth the estimate is trying to measure, so the returned
// value is an upper estimate that tightens as P grows (exact for pairs
// whose inclusion needs no geometric factor).
struct Rho0Estimate {
  double rho = 1.0;
  bool feasible_at_one = false;
  std::map<std::string, double> constants;  // c0 at the returned rho, half-range estimate
  std::string caveats;
};
Rho0Estimate estimate_rho0(const WeightSequence& A, const WeightSequence& M, int range);

}  // namespace psdo::weights

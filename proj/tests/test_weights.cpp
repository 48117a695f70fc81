#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "psdo/weights.hpp"

using namespace psdo;
using namespace psdo::weights;

namespace {

// Brute-force sup of log+(rho^p / M_p), independent of the scanning
// implementation under test.
double assoc_brute(const WeightSequence& M, double rho) {
  double best = 0.0;
  for (int p = 0; p <= M.max_index(); ++p)
    best = std::max(best, p * std::log(rho) - M.log_at(p));
  return best;
}

}  // namespace

TEST_CASE("gevrey tabulation matches factorial powers") {
  const auto g1 = WeightSequence::gevrey(1.0, 4);
  const double expect1[] = {1, 1, 2, 6, 24};
  for (int p = 0; p <= 4; ++p) CHECK(g1.at(p) == doctest::Approx(expect1[p]).epsilon(1e-14));

  const auto g2 = WeightSequence::gevrey(2.0, 3);
  const double expect2[] = {1, 1, 4, 36};
  for (int p = 0; p <= 3; ++p) CHECK(g2.at(p) == doctest::Approx(expect2[p]).epsilon(1e-14));

  const auto g15 = WeightSequence::gevrey(1.5, 4);
  CHECK(g15.at(2) == doctest::Approx(std::pow(2.0, 1.5)).epsilon(1e-14));
}

TEST_CASE("construction guards") {
  CHECK_THROWS_AS(WeightSequence::gevrey(0.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(WeightSequence::gevrey(-1.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(WeightSequence::gevrey(2.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(WeightSequence::from_values({1, 2, 4}, "bad"), std::invalid_argument);
  CHECK_NOTHROW(WeightSequence::from_values({1, 1, 4}, "ok"));
}

TEST_CASE("sequence spec parsing") {
  const auto g = parse_sequence_spec("gevrey:2:100");
  CHECK(g.max_index() == 100);
  CHECK(g.at(3) == doctest::Approx(36.0));
  CHECK(parse_sequence_spec("ones:50").max_index() == 50);
  CHECK_THROWS_AS(parse_sequence_spec("foo:1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_sequence_spec("gevrey"), std::invalid_argument);
}

TEST_CASE("log-convexity and its shifted variant on gevrey families") {
  for (double s : {1.0, 1.5, 2.0, 3.0}) {
    const auto M = WeightSequence::gevrey(s, 220);
    CHECK(check_condition(M, Condition::LogConvex, 200).holds);
    CHECK(check_condition(M, Condition::ShiftedLogConvex, 200).holds);
  }
  // Equality case: the constant sequence is log-convex with zero margin.
  const auto one = WeightSequence::ones(100);
  CHECK(check_condition(one, Condition::LogConvex, 90).holds);
}

TEST_CASE("shifted log-convexity implies plain log-convexity on test families") {
  for (double s : {1.0, 1.5, 2.0, 2.5, 3.0}) {
    const auto M = WeightSequence::gevrey(s, 120);
    const auto shifted = check_condition(M, Condition::ShiftedLogConvex, 100);
    const auto plain = check_condition(M, Condition::LogConvex, 100);
    if (shifted.holds) CHECK(plain.holds);
  }
}

TEST_CASE("factorization condition: fitted constants") {
  const auto M = WeightSequence::gevrey(2.0, 60);
  const auto rep = check_condition(M, Condition::Factorizable, 50);
  CHECK(rep.holds);
  // Binomial bound: C(p,q)^2 <= 4^p makes (c0, H) = (1, 4) feasible, and no
  // smaller grid H survives the growth test.
  CHECK(rep.constants.at("H") == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(rep.constants.at("c0") == doctest::Approx(1.0).epsilon(1e-9));

  const auto one = WeightSequence::ones(60);
  const auto rep1 = check_condition(one, Condition::Factorizable, 50);
  CHECK(rep1.holds);
  CHECK(rep1.constants.at("H") == doctest::Approx(1.0));
  CHECK(rep1.constants.at("c0") == doctest::Approx(1.0));
}

TEST_CASE("tail summability verdicts") {
  // Constant sequence: terms M_{p-1}/M_p = 1 never decay.
  const auto one = WeightSequence::ones(60);
  const auto bad = check_condition(one, Condition::TailSummable, 50);
  CHECK_FALSE(bad.holds);
  REQUIRE(bad.violating_index.has_value());
  // Re-checking the reported index reproduces the violation.
  const int p = *bad.violating_index;
  CHECK(one.at(p - 1) / one.at(p) >= 0.999);

  // Gevrey s > 1: ratios p^(-s) are summable.
  for (double s : {1.5, 2.0, 3.0}) {
    const auto M = WeightSequence::gevrey(s, 220);
    const auto rep = check_condition(M, Condition::TailSummable, 200);
    CHECK(rep.holds);
    CHECK(rep.constants.at("decay_exponent") == doctest::Approx(s).epsilon(0.05));
  }

  // Gevrey s = 1: ratios 1/p, the harmonic boundary case, must not pass.
  const auto g1 = WeightSequence::gevrey(1.0, 220);
  CHECK_FALSE(check_condition(g1, Condition::TailSummable, 200).holds);
}

TEST_CASE("full tail bound with per-index budget") {
  const auto M = WeightSequence::gevrey(2.0, 220);
  const auto rep = check_condition(M, Condition::TailBound, 200);
  CHECK(rep.holds);
  // Oracle at q = 1: sum_{p >= 2} p^(-2) = pi^2/6 - 1 against budget
  // c0 * 1 * M_1/M_2 = c0/4, so c0 must be at least ~2.58.
  CHECK(rep.constants.at("c0") >= 2.0);
  CHECK(rep.constants.at("c0") <= 4.0);
}

TEST_CASE("associated function: exact small values") {
  const auto g1 = WeightSequence::gevrey(1.0, 50);
  // sup_p (p - log p!) at rho = e is reached at p = 2 with value 2 - log 2.
  const auto v = associated_function(g1, std::exp(1.0));
  CHECK(v.value == doctest::Approx(2.0 - std::log(2.0)).epsilon(1e-12));
  CHECK(v.argmax == 2);
  CHECK_FALSE(v.saturated);

  for (double rho : {0.1, 0.5, 1.0}) {
    const auto z = associated_function(g1, rho);
    CHECK(z.value == 0.0);
  }
  CHECK_THROWS_AS(associated_function(g1, 0.0), std::invalid_argument);
}

TEST_CASE("associated function agrees with brute force and is monotone") {
  const auto M = WeightSequence::gevrey(2.0, 300);
  double prev = -1.0;
  for (double rho : {0.5, 1.0, 2.0, 8.0, 64.0, 512.0, 4096.0}) {
    const auto v = associated_function(M, rho);
    CHECK(v.value == doctest::Approx(assoc_brute(M, rho)).epsilon(1e-13));
    CHECK(v.value >= prev);
    prev = v.value;
  }
}

TEST_CASE("associated function growth window for gevrey families") {
  const auto g2 = WeightSequence::gevrey(2.0, 1200);
  const auto g3 = WeightSequence::gevrey(3.0, 300);
  for (double rho = 10.0; rho <= 1.0e6; rho *= 3.1623) {
    const auto v2 = associated_function(g2, rho);
    CHECK_FALSE(v2.saturated);
    const double ratio2 = v2.value / std::sqrt(rho);
    CHECK(ratio2 >= 0.1);
    CHECK(ratio2 <= 10.0);
    const auto v3 = associated_function(g3, rho);
    CHECK_FALSE(v3.saturated);
    const double ratio3 = v3.value / std::cbrt(rho);
    CHECK(ratio3 >= 0.1);
    CHECK(ratio3 <= 10.0);
  }
}

TEST_CASE("saturation is reported when the range is too short") {
  const auto tiny = WeightSequence::gevrey(2.0, 5);
  const auto v = associated_function(tiny, 1.0e8);
  CHECK(v.saturated);
}

TEST_CASE("root monotonicity lemma on gevrey families") {
  for (double s : {1.0, 1.5, 2.0, 3.0}) {
    const auto M = WeightSequence::gevrey(s, 70);
    const auto rep = check_root_monotone(M, 60);
    CHECK(rep.holds);
  }
  // Oracle point s = 2, q = 2, p = 3: 4/2 = 2 <= sqrt(36/6) = sqrt(6).
  const auto M = WeightSequence::gevrey(2.0, 10);
  const double lhs = std::pow(M.at(2) / 2.0, 1.0);
  const double rhs = std::pow(M.at(3) / 6.0, 0.5);
  CHECK(lhs <= rhs);
}

TEST_CASE("derivative budget lemma on gevrey families") {
  for (double s : {1.0, 2.0, 3.0}) {
    const auto M = WeightSequence::gevrey(s, 20);
    for (int d : {1, 2, 3}) {
      const auto rep = check_leibniz_budget(M, d, 8);
      CHECK(rep.holds);
    }
  }
  // Hand oracle in d = 2: alpha = (2,0), beta = (1,0), s = 2 gives equality
  // 2 * M_1 * M_1 = |alpha| * M_1.
  const auto M2 = WeightSequence::gevrey(2.0, 10);
  CHECK(2.0 * M2.at(1) * M2.at(1) == doctest::Approx(2.0 * M2.at(1)));
  CHECK_THROWS_AS(check_leibniz_budget(M2, 3, 8, 10), std::invalid_argument);
}

TEST_CASE("derivative budget fails for a cooked non-convex sequence") {
  // Spike at p = 2 breaks the shifted convexity chain badly enough that the
  // budget inequality fails at small orders.
  const auto bad = WeightSequence::from_values({1, 1, 40, 41, 42, 43, 44, 45, 46, 47, 48}, "spike");
  const auto rep = check_leibniz_budget(bad, 1, 6);
  CHECK_FALSE(rep.holds);
  CHECK(rep.violating_index.has_value());
}

TEST_CASE("rho0 estimate for gevrey pairs") {
  const auto A1 = WeightSequence::gevrey(1.0, 200);
  const auto M2 = WeightSequence::gevrey(2.0, 200);
  const auto est = estimate_rho0(A1, M2, 200);
  CHECK(est.rho == doctest::Approx(0.5).epsilon(0.04));  // 0.5 +- 0.02
  CHECK(std::abs(est.rho - 0.5) <= 0.02);
  CHECK(est.feasible_at_one);

  const auto A15 = WeightSequence::gevrey(1.5, 200);
  const auto M3 = WeightSequence::gevrey(3.0, 200);
  const auto est2 = estimate_rho0(A15, M3, 200);
  CHECK(std::abs(est2.rho - 0.5) <= 0.02);

  // Identity pair: the infimum is attained at 1.
  const auto self = estimate_rho0(M2, M2, 200);
  CHECK(self.rho <= 1.0);
  CHECK(self.rho >= 0.95);

  // Reversed pair is not included at rho = 1.
  CHECK_THROWS_AS(estimate_rho0(M2, A1, 200), std::domain_error);
}

TEST_CASE("inclusion check fits trivial constants for matched pairs") {
  const auto A = WeightSequence::gevrey(1.0, 120);
  const auto M = WeightSequence::gevrey(2.0, 120);
  const auto rep = check_inclusion(A, M, 100);
  CHECK(rep.holds);
  CHECK(rep.constants.at("L") == doctest::Approx(1.0));
}

TEST_CASE("ratio helpers and normalization invariants") {
  const auto M = WeightSequence::gevrey(2.0, 50);
  CHECK(M.ratio(0) == 0.0);
  CHECK(M.ratio(1) == doctest::Approx(1.0));
  CHECK(M.ratio(2) == doctest::Approx(4.0));
  CHECK(M.ratio(3) == doctest::Approx(9.0));
  // Ratios of a log-convex normalized sequence are nondecreasing and >= 1.
  double prev = 0.0;
  for (int p = 1; p <= 50; ++p) {
    CHECK(M.ratio(p) >= prev);
    CHECK(M.ratio(p) >= 1.0 - 1e-12);
    prev = M.ratio(p);
  }
}

TEST_CASE("shifted convexity implies factorial floor and step bound") {
  // For sequences passing the shifted convexity check, A_p >= p! and
  // p * A_{p-1} <= A_p must follow; probe the gevrey family.
  std::mt19937_64 rng(20260818);
  std::uniform_real_distribution<double> pick_s(1.0, 3.5);
  for (int trial = 0; trial < 20; ++trial) {
    const double s = pick_s(rng);
    const auto A = WeightSequence::gevrey(s, 60);
    REQUIRE(check_condition(A, Condition::ShiftedLogConvex, 50).holds);
    for (int p = 2; p <= 50; ++p) {
      CHECK(A.log_at(p) >= log_factorial(p) - 1e-9);
      CHECK(std::log(static_cast<double>(p)) + A.log_at(p - 1) <= A.log_at(p) + 1e-9);
    }
  }
}

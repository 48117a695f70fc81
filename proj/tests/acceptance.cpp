// Acceptance gate: eight release criteria, one verdict line each, details
// indented underneath. Numeric tolerances are pinned right here, except the
// two bars that are frozen in config/thresholds.json by design; the gate
// reads that file so a refit there is visible here. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "psdo/expr.hpp"
#include "psdo/harness.hpp"
#include "psdo/multi_index.hpp"
#include "psdo/parametrix.hpp"
#include "psdo/parser.hpp"
#include "psdo/quantize.hpp"
#include "psdo/symbol_checks.hpp"
#include "psdo/weights.hpp"

using psdo::MultiIndex;
using psdo::checks::BoxSpec;
using psdo::checks::HypoellipticityReport;
using psdo::parametrix::CutoffSpec;
using psdo::parametrix::FormalSymbolSum;
using psdo::quantize::GridFunction;
using psdo::quantize::HermiteBasis;
using psdo::symbols::Complex;
using psdo::symbols::SymbolExpr;
using psdo::weights::Condition;
using psdo::weights::WeightSequence;

namespace {

std::vector<std::string> details;

void note(std::string line) { details.push_back(std::move(line)); }

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

SymbolExpr sym(const std::string& text, int dim = 1) {
  return psdo::symbols::parse_symbol(text, dim);
}

Complex at(const SymbolExpr& e, std::span<const double> x,
           std::span<const double> xi) {
  return e.eval(x, xi);
}

Complex at1(const SymbolExpr& e, double x, double xi) {
  return e.eval(std::span(&x, 1), std::span(&xi, 1));
}

double rel_l2(const GridFunction& a, const GridFunction& b) {
  const auto& av = a.samples();
  const auto& bv = b.samples();
  double diff = 0.0, ref = 0.0;
  for (size_t i = 0; i < av.size(); ++i) {
    diff += std::norm(av[i] - bv[i]);
    ref += std::norm(bv[i]);
  }
  return std::sqrt(diff / ref);
}

double sup_rel_diff(const GridFunction& a, const std::vector<Complex>& want) {
  double diff = 0.0, ref = 0.0;
  for (size_t i = 0; i < want.size(); ++i) {
    diff = std::max(diff, std::abs(a.samples()[i] - want[i]));
    ref = std::max(ref, std::abs(want[i]));
  }
  return diff / ref;
}

double spread(const std::vector<double>& vals) {
  double lo = vals[0], hi = vals[0];
  for (double v : vals) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

// 1: the factorial-power families satisfy every sequence condition the
// calculus rests on, over ranges far past what any later check touches,
// within a minute.
bool criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  for (double s : {1.5, 2.0, 3.0}) {
    const WeightSequence M = WeightSequence::gevrey(s, 400);
    for (Condition c : {Condition::LogConvex, Condition::Factorizable,
                        Condition::TailSummable, Condition::ShiftedLogConvex})
      if (!psdo::weights::check_condition(M, c, 200).holds) {
        note("s = " + num(s) + ": " + to_string(c) + " fails by order 200");
        ok = false;
      }
    if (!psdo::weights::check_root_monotone(M, 60).holds) {
      note("s = " + num(s) + ": root monotonicity fails by order 60");
      ok = false;
    }
    for (int d : {1, 2, 3})
      if (!psdo::weights::check_leibniz_budget(M, d, 8).holds) {
        note("s = " + num(s) + ": Leibniz budget fails in dimension " +
             std::to_string(d));
        ok = false;
      }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  note("conditions to order 200, root monotonicity to 60, Leibniz budget to "
       "order 8 in dimensions 1..3, for s in {1.5, 2, 3}; " +
       num(secs) + " s");
  if (secs >= 60.0) {
    note("budget exceeded: " + num(secs) + " s >= 60 s");
    ok = false;
  }
  return ok;
}

// 2: associated function values. Zero at and below radius 1 exactly, the
// s = 1 value at rho = e in closed form, and rho^(1/s) growth for the
// square and cube families across five decades.
bool criterion2() {
  bool ok = true;
  const WeightSequence g1 = WeightSequence::gevrey(1.0, 400);
  for (double rho : {0.1, 0.6, 1.0}) {
    const auto v = psdo::weights::associated_function(g1, rho);
    if (v.value != 0.0) {
      note("value at rho = " + num(rho) + " is " + num(v.value) +
           ", want exactly 0");
      ok = false;
    }
  }
  const double at_e =
      psdo::weights::associated_function(g1, std::exp(1.0)).value;
  const double want_e = 2.0 - std::log(2.0);
  note("s = 1 value at e: " + num(at_e) + ", closed form " + num(want_e));
  if (std::abs(at_e - want_e) > 1e-12) ok = false;

  for (double s : {2.0, 3.0}) {
    const WeightSequence M =
        WeightSequence::gevrey(s, s == 2.0 ? 1600 : 400);
    double lo = 1e300, hi = 0.0;
    for (int k = 0; k <= 12; ++k) {
      const double rho = std::pow(10.0, 1.0 + 5.0 * k / 12.0);
      const auto v = psdo::weights::associated_function(M, rho);
      if (v.saturated) {
        note("s = " + num(s) + ": scan saturated at rho = " + num(rho));
        ok = false;
        continue;
      }
      const double r = v.value / std::pow(rho, 1.0 / s);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      if (r < 0.1 || r > 10.0) ok = false;
    }
    note("s = " + num(s) + ": value / rho^(1/s) in [" + num(lo) + ", " +
         num(hi) + "] over rho in [10, 1e6], want within [0.1, 10]");
  }
  return ok;
}

// 3: composing the correction family against its base symbol telescopes to
// the identity: c_0 = 1 and c_j = 0 up to rounding measured against the
// largest cancelling summand, at 1000 seeded points per symbol with
// bracket >= 3.
bool criterion3() {
  struct Case {
    std::string text;
    int dim;
    int J;
  };
  const std::vector<Case> cases = {{"1 + x1^2 + k1^2", 1, 4},
                                   {"angle()^2", 1, 4},
                                   {"1 + x1^2 + x2^2 + k1^2 + k2^2", 2, 2}};
  const WeightSequence M = WeightSequence::gevrey(2.0, 60);
  const WeightSequence A = WeightSequence::gevrey(1.0, 60);
  bool ok = true;
  for (const Case& cs : cases) {
    const SymbolExpr a = sym(cs.text, cs.dim);
    const FormalSymbolSum p =
        psdo::parametrix::parametrix_terms(a, cs.J, M, A, 1.0, 1.0);
    const std::vector<SymbolExpr> c =
        psdo::parametrix::composition_terms(p, a, cs.J);

    // the summands of c_j, to size the cancellation at each point
    const MultiIndex zero(cs.dim, 0);
    std::vector<std::vector<SymbolExpr>> parts(cs.J + 1);
    for (int j = 0; j <= cs.J; ++j)
      for (int l = 0; l <= j; ++l)
        for (const MultiIndex& nu : psdo::indices_of_order(cs.dim, l)) {
          SymbolExpr dp =
              psdo::symbols::differentiate(p.terms[j - l], nu, zero);
          SymbolExpr da = psdo::symbols::differentiate(
              a, zero, nu, psdo::symbols::DiffConvention::DOp);
          parts[j].emplace_back(psdo::symbols::make_product(
              {psdo::symbols::make_constant(cs.dim,
                                            1.0 / psdo::factorial(nu)),
               dp.node(), da.node()}));
        }

    std::mt19937_64 rng(20260818);
    std::uniform_real_distribution<double> coord(-6.0, 6.0);
    double worst0 = 0.0, worstj = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> x(cs.dim), xi(cs.dim);
      double br2;
      do {
        br2 = 1.0;
        for (int i = 0; i < cs.dim; ++i) {
          x[i] = coord(rng);
          xi[i] = coord(rng);
          br2 += x[i] * x[i] + xi[i] * xi[i];
        }
      } while (br2 < 9.0);
      worst0 = std::max(worst0, std::abs(at(c[0], x, xi) - 1.0));
      for (int j = 1; j <= cs.J; ++j) {
        double scale = 0.0;
        for (const auto& part : parts[j])
          scale = std::max(scale, std::abs(at(part, x, xi)));
        worstj = std::max(
            worstj, std::abs(at(c[j], x, xi)) / (1.0 + scale));
      }
    }
    note(cs.text + ": |c_0 - 1| <= " + num(worst0) +
         ", scaled |c_j| <= " + num(worstj) + ", want < 1e-09");
    if (worst0 >= 1e-9 || worstj >= 1e-9) ok = false;
  }
  return ok;
}

// 4: the first correction for 1 + x^2 + xi^2 equals -4 i x xi / a^3.
bool criterion4() {
  const FormalSymbolSum p = psdo::parametrix::parametrix_terms(
      sym("angle()^2"), 1, WeightSequence::gevrey(2.0, 60),
      WeightSequence::gevrey(1.0, 60), 1.0, 1.0);
  std::mt19937_64 rng(20260818);
  std::uniform_real_distribution<double> coord(-8.0, 8.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double x = coord(rng), xi = coord(rng);
    const double a = 1.0 + x * x + xi * xi;
    const Complex want(0.0, -4.0 * x * xi / (a * a * a));
    const double err = std::abs(at1(p.terms[1], x, xi) - want) /
                       std::max(1.0, std::abs(want));
    worst = std::max(worst, err);
  }
  note("worst scaled deviation over 1000 points: " + num(worst) +
       ", want < 1e-12");
  return worst < 1e-12;
}

// 5: quantization ground truths on the [-12, 12) grid with 256 points:
// identity symbol, the Fourier multiplier xi against the analytic
// derivative, and the oscillator eigenpairs through n = 32.
bool criterion5() {
  const double L = 12.0;
  const int N = 256;
  bool ok = true;

  const GridFunction f =
      GridFunction::sample(1, L, N, [](std::span<const double> x) {
        return Complex(std::pow(M_PI, -0.25) * std::exp(-0.5 * x[0] * x[0]),
                       0.0);
      });

  const GridFunction id = psdo::quantize::apply_operator(sym("1"), f);
  const double id_err = sup_rel_diff(id, f.samples());
  note("identity symbol: sup deviation " + num(id_err) + ", want <= 1e-08");
  if (id_err > 1e-8) ok = false;

  const GridFunction df = psdo::quantize::apply_operator(sym("k1"), f);
  std::vector<Complex> want(f.size());
  {
    const std::vector<double> ax = f.axis();
    for (size_t i = 0; i < want.size(); ++i)
      want[i] = Complex(0.0, ax[i]) * f.samples()[i];
  }
  const double d_err = sup_rel_diff(df, want);
  note("multiplier xi vs analytic -i d/dx on a Gaussian: sup deviation " +
       num(d_err) + ", want <= 1e-06");
  if (d_err > 1e-6) ok = false;

  const HermiteBasis basis(L, N, 40);
  const SymbolExpr osc = sym("1 + x1^2 + k1^2");
  double worst_eig = 0.0;
  for (int n = 0; n <= 32; ++n) {
    const GridFunction g =
        psdo::quantize::apply_operator(osc, basis.function(n));
    const double lambda = 2.0 * n + 2.0;
    std::vector<Complex> ref(g.size());
    for (size_t i = 0; i < ref.size(); ++i)
      ref[i] = lambda * basis.function(n).samples()[i];
    worst_eig = std::max(worst_eig, sup_rel_diff(g, ref));
  }
  note("oscillator eigenpairs n <= 32: worst sup deviation " +
       num(worst_eig) + ", want <= 1e-06");
  if (worst_eig > 1e-6) ok = false;
  return ok;
}

// 6: the truncated inverses do their job on the oscillator, in the
// configured window design: residuals against the eigenexpansion inverse
// do not increase with the truncation order, adding corrections buys at
// least the frozen improvement factor, and the output of the deepest
// truncation keeps the input's fitted coefficient-decay exponent to the
// frozen relative tolerance.
bool criterion6() {
  const auto cfg = psdo::harness::load_config("config/e2.json");
  const auto th = psdo::harness::Thresholds::load(cfg.thresholds_path);
  const double improve_min = th.at("e2.oracle_improvement_min");
  const double gamma_tol = th.at("e2.decay_gamma_rel_tol");
  const double mono_slack = th.at("e2.residual_monotone_slack");

  const SymbolExpr osc = sym("1 + x1^2 + k1^2");
  const FormalSymbolSum p = psdo::parametrix::parametrix_terms(
      osc, cfg.J, psdo::weights::parse_sequence_spec(cfg.M_spec),
      psdo::weights::parse_sequence_spec(cfg.A_spec), cfg.rho, cfg.B);
  const CutoffSpec cut{cfg.cut_inner, cfg.cut_outer};
  const HermiteBasis basis(cfg.L, cfg.N, cfg.n_max);

  const auto apply_sum = [&](int N, const GridFunction& g) {
    const psdo::parametrix::TruncatedSum tr =
        psdo::parametrix::truncate_with_cutoffs(p, N, cut);
    return psdo::quantize::apply_operator(
        psdo::quantize::PhaseSymbol(
            [tr](std::span<const double> x, std::span<const double> xi) {
              return tr(x, xi);
            }),
        g);
  };
  const auto coeff_fit =
      [&basis](const GridFunction& g) -> std::optional<psdo::quantize::DecayFit> {
    const std::vector<Complex> cs = basis.coefficients(g);
    std::vector<double> mags(cs.size());
    for (size_t i = 0; i < cs.size(); ++i) mags[i] = std::abs(cs[i]);
    try {
      return psdo::quantize::decay_fit(mags);
    } catch (const std::runtime_error&) {
      return std::nullopt;
    }
  };

  bool ok = true;

  const GridFunction h0 = basis.function(0);
  const GridFunction osc_h0 = psdo::quantize::apply_operator(osc, h0);
  std::vector<double> resid;
  std::string resid_text;
  for (int N = 1; N <= 4; ++N) {
    resid.push_back(rel_l2(apply_sum(N, osc_h0), h0));
    resid_text += (N > 1 ? " " : "") + num(resid.back());
  }
  bool monotone = true;
  for (size_t k = 1; k < resid.size(); ++k)
    monotone = monotone && resid[k] <= resid[k - 1] + mono_slack * resid[0];
  note("left-composition residuals on the ground state, orders 1..4: " +
       resid_text + (monotone ? " (nonincreasing)" : " (INCREASES)"));
  if (!monotone) ok = false;

  bool any_gamma = false;
  for (const std::string v_name : {"h0", "mixture"}) {
    const GridFunction v = psdo::harness::e2_input(v_name, cfg.L, cfg.N);
    const GridFunction u = psdo::quantize::spectral_solve(v, basis);
    std::vector<double> errs;
    GridFunction b3v = v;
    for (int N = 1; N <= 4; ++N) {
      const GridFunction bv = apply_sum(N, v);
      if (N == 3) b3v = bv;
      errs.push_back(rel_l2(bv, u));
    }
    if (v_name == "h0") {
      const double gain = errs[0] / errs[2];
      note("oracle-error improvement on h0, order 1 over order 3: " +
           num(gain) + ", frozen bar " + num(improve_min));
      if (!(gain >= improve_min)) ok = false;
    }
    const auto in_fit = coeff_fit(v);
    const auto out_fit = coeff_fit(b3v);
    if (in_fit && out_fit) {
      any_gamma = true;
      const double rel =
          std::abs(out_fit->gamma - in_fit->gamma) / in_fit->gamma;
      note("coefficient-decay exponent, " + v_name + ": output " +
           num(out_fit->gamma) + " vs input " + num(in_fit->gamma) +
           ", relative gap " + num(rel) + ", frozen tolerance " +
           num(gamma_tol));
      if (rel > gamma_tol) ok = false;
    } else {
      note("coefficient-decay exponent, " + v_name + ": " +
           (in_fit ? "output" : "input") +
           " magnitudes lack the dynamic range for a fit; pair skipped");
    }
  }
  if (!any_gamma) {
    note("no input admitted a coefficient fit; the decay clause never ran");
    ok = false;
  }
  return ok;
}

// 7: the hypoellipticity verdicts. Three bounded-below families pass both
// conditions on every box; two vanishing controls fail the lower bound
// with a located zero; fitted constants stay within a factor 2 across the
// box sweep.
bool criterion7() {
  struct Case {
    std::string label, text, seq;
    bool family;
  };
  const std::vector<Case> cases = {
      {"<w>^2", "angle()^2", "gevrey:2:60", true},
      {"<w>^-2", "1/angle()^2", "gevrey:2:60", true},
      {"exp(<w>^(1/3))", "exp(angle()^" + psdo::harness::fmt17(1.0 / 3.0) + ")",
       "gevrey:3:60", true},
      {"k1^2", "k1^2", "gevrey:2:60", false},
      {"x1*k1", "x1*k1", "gevrey:2:60", false},
  };
  bool ok = true;
  for (const Case& cs : cases) {
    const SymbolExpr a = sym(cs.text);
    const WeightSequence M = psdo::weights::parse_sequence_spec(cs.seq);
    std::vector<double> c_fits, C_fits;
    bool all_pass = true, all_fail = true, witnessed = true;
    std::string witness_text;
    for (double L : {10.0, 20.0, 30.0}) {
      const HypoellipticityReport hr = psdo::checks::check_hypoelliptic(
          a, M, M, 1.0, 2.0, 2, BoxSpec{L, 21}, psdo::checks::Mode::Beurling);
      all_pass = all_pass && hr.pass();
      all_fail = all_fail && !hr.lower_bound_pass;
      witnessed = witnessed && hr.lower_witness.has_value();
      if (hr.lower_witness && witness_text.empty())
        witness_text = psdo::checks::format_point(*hr.lower_witness);
      c_fits.push_back(hr.c_fit);
      C_fits.push_back(hr.C_fit);
    }
    if (cs.family) {
      const double cs_spread = spread(c_fits), CS_spread = spread(C_fits);
      note(cs.label + ": both conditions " +
           (all_pass ? "pass" : "FAIL") + " on every box; constant spreads " +
           num(cs_spread) + " and " + num(CS_spread) + ", want <= 2");
      if (!all_pass || cs_spread > 2.0 || CS_spread > 2.0) ok = false;
    } else {
      note(cs.label + ": lower bound " + (all_fail ? "fails" : "HOLDS") +
           " on every box" +
           (witnessed ? ", zero at " + witness_text : ", NO witness"));
      if (!all_fail || !witnessed) ok = false;
    }
  }
  return ok;
}

// 8: along the diagonal ray the windowed remainders of the oscillator
// inverse decay with log-log slope -2N, within 15 percent, for the first
// three truncation depths.
bool criterion8() {
  const FormalSymbolSum p = psdo::parametrix::parametrix_terms(
      sym("angle()^2"), 4, WeightSequence::gevrey(2.0, 60),
      WeightSequence::gevrey(1.0, 60), 1.0, 0.5);
  const CutoffSpec cut{{1.0, 1.0, 2.5, 5.0}, {2.0, 2.0, 5.0, 7.0}};
  const psdo::checks::FitReport eq = psdo::parametrix::check_equivalence(
      p, cut, 2, BoxSpec{10.0, 21});
  bool ok = true;
  for (int N = 1; N <= 3; ++N) {
    const double slope =
        eq.constants.at("ray_slope_" + std::to_string(N));
    const double want = -2.0 * N;
    const double rel = std::abs(slope - want) / std::abs(want);
    note("depth " + std::to_string(N) + ": fitted ray slope " + num(slope) +
         " vs " + num(want) + ", relative gap " + num(rel) +
         ", want <= 0.15");
    if (rel > 0.15) ok = false;
  }
  return ok;
}

}  // namespace

int main() {
  struct Entry {
    const char* what;
    bool (*run)();
  };
  const Entry entries[] = {
      {"weight families (p!)^s: every sequence condition holds", criterion1},
      {"associated function: exact zeros, closed-form value, power growth",
       criterion2},
      {"composition terms telescope to the identity", criterion3},
      {"first correction matches its closed form", criterion4},
      {"quantization reproduces identity, derivative, and eigenpairs",
       criterion5},
      {"truncated inverses: monotone residuals, frozen improvement bar, "
       "coefficient-decay match",
       criterion6},
      {"hypoellipticity verdicts with witnesses and stable constants",
       criterion7},
      {"windowed remainders fall along the ray at slope -2N", criterion8},
  };

  int failed = 0;
  for (int i = 0; i < 8; ++i) {
    bool ok = false;
    details.clear();
    try {
      ok = entries[i].run();
    } catch (const std::exception& e) {
      note(std::string("exception: ") + e.what());
    }
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", i + 1,
                entries[i].what);
    for (const std::string& d : details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    if (!ok) ++failed;
  }
  std::printf("%d of 8 criteria passed\n", 8 - failed);
  return failed;
}

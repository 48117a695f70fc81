#include "psdo/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "psdo/parametrix.hpp"
#include "psdo/parser.hpp"
#include "psdo/quantize.hpp"
#include "psdo/symbol_checks.hpp"
#include "psdo/weights.hpp"

#ifndef PSDO_VERSION
#define PSDO_VERSION "0.0.0"
#endif

namespace psdo::harness {

namespace fs = std::filesystem;
using quantize::GridFunction;
using symbols::Complex;
using symbols::SymbolExpr;
using weights::WeightSequence;

namespace {

// Inputs referenced by relative path should work from the build tree too,
// so fall back to the source checkout when the cwd has no such file.
std::string resolve_input(const std::string& path) {
  if (fs::exists(path)) return path;
  const fs::path alt = fs::path(PSDO_SOURCE_DIR) / path;
  if (fs::exists(alt)) return alt.string();
  return path;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["id"] = c.id;
  j["symbol"] = c.symbol;
  j["dim"] = c.dim;
  j["M"] = c.M_spec;
  j["A"] = c.A_spec;
  j["rho"] = c.rho;
  j["B"] = c.B;
  j["J"] = c.J;
  j["K"] = c.K;
  j["L"] = c.L;
  j["N"] = c.N;
  j["n_max"] = c.n_max;
  j["box_points"] = c.box_points;
  j["box_sweep"] = c.box_sweep;
  j["cut_inner"] = c.cut_inner;
  j["cut_outer"] = c.cut_outer;
  j["s"] = c.s;
  j["h"] = c.h;
  j["m"] = c.m;
  j["seed"] = c.seed;
  j["thresholds"] = c.thresholds_path;
  j["out_dir"] = c.out_dir;
  return j;
}

void config_from_json(const nlohmann::json& j, ExperimentConfig& c) {
  if (!j.contains("id"))
    throw std::runtime_error("experiment config needs an \"id\" field");
  c.id = j.at("id").get<std::string>();
  c.symbol = j.value("symbol", c.symbol);
  c.dim = j.value("dim", c.dim);
  c.M_spec = j.value("M", c.M_spec);
  c.A_spec = j.value("A", c.A_spec);
  c.rho = j.value("rho", c.rho);
  c.B = j.value("B", c.B);
  c.J = j.value("J", c.J);
  c.K = j.value("K", c.K);
  c.L = j.value("L", c.L);
  c.N = j.value("N", c.N);
  c.n_max = j.value("n_max", c.n_max);
  c.box_points = j.value("box_points", c.box_points);
  c.box_sweep = j.value("box_sweep", c.box_sweep);
  c.cut_inner = j.value("cut_inner", c.cut_inner);
  c.cut_outer = j.value("cut_outer", c.cut_outer);
  c.s = j.value("s", c.s);
  c.h = j.value("h", c.h);
  c.m = j.value("m", c.m);
  c.seed = j.value("seed", c.seed);
  c.thresholds_path = j.value("thresholds", c.thresholds_path);
  c.out_dir = j.value("out_dir", c.out_dir);
}

// Collects per-property verdicts; the report passes only if every asserted
// line came out ok. Controls are asserted to fail, so a passing control
// lands here as a FAIL line exactly like the invariant demands.
struct CheckLog {
  RunReport* report;
  void require(bool ok, const std::string& what) {
    report->checks.push_back((ok ? "ok: " : "FAIL: ") + what);
    if (!ok) report->pass = false;
  }
};

RunReport make_report(const ExperimentConfig& cfg) {
  RunReport r;
  r.id = cfg.id;
  r.config_hash = config_hash(cfg);
  r.config_echo = canonical_json(cfg);
  r.seed = cfg.seed;
  r.tool_version = PSDO_VERSION;
  r.pass = true;
  return r;
}

double rel_l2(const GridFunction& a, const GridFunction& b) {
  const auto& av = a.samples();
  const auto& bv = b.samples();
  if (av.size() != bv.size())
    throw std::invalid_argument("relative error needs matching grids");
  double diff = 0.0, ref = 0.0;
  for (size_t i = 0; i < av.size(); ++i) {
    diff += std::norm(av[i] - bv[i]);
    ref += std::norm(bv[i]);
  }
  return std::sqrt(diff / ref);
}

std::string witness_cell(const std::optional<checks::PhasePoint>& w) {
  return w ? checks::format_point(*w) : std::string("");
}

double ratio_spread(const std::vector<double>& vals) {
  double lo = vals[0], hi = vals[0];
  for (double v : vals) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

struct HypoCase {
  std::string label;
  std::string text;
  std::string seq;   // pair spec, M = A
  bool family;       // true: must pass; false: control, must fail (i)
};

}  // namespace

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ExperimentConfig load_config(const std::string& path) {
  const std::string where = resolve_input(path);
  std::ifstream in(where);
  if (!in) throw std::runtime_error("cannot read config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  ExperimentConfig cfg;
  config_from_json(j, cfg);
  return cfg;
}

std::string canonical_json(const ExperimentConfig& cfg) {
  return config_to_json(cfg).dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string s = config_to_json(cfg).dump();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Thresholds Thresholds::load(const std::string& path) {
  const std::string where = resolve_input(path);
  std::ifstream in(where);
  if (!in) throw std::runtime_error("cannot read thresholds " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  Thresholds t;
  t.path_ = path;
  // Numeric leaves become dotted keys; prose (derivation notes) is skipped.
  std::function<void(const nlohmann::json&, const std::string&)> walk =
      [&](const nlohmann::json& node, const std::string& prefix) {
        if (node.is_object()) {
          for (auto it = node.begin(); it != node.end(); ++it)
            walk(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key());
        } else if (node.is_number()) {
          t.values_[prefix] = node.get<double>();
        }
      };
  walk(j, "");
  return t;
}

double Thresholds::at(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw std::runtime_error("threshold \"" + key + "\" missing from " + path_);
  return it->second;
}

bool Thresholds::has(const std::string& key) const {
  return values_.count(key) > 0;
}

GridFunction e2_input(const std::string& which, double L, int N) {
  if (which == "h0") {
    return GridFunction::sample(1, L, N, [](std::span<const double> x) {
      return Complex(std::pow(std::numbers::pi, -0.25) *
                         std::exp(-0.5 * x[0] * x[0]),
                     0.0);
    });
  }
  if (which == "mixture") {
    // Off-center packets with spectral mass across several oscillator
    // modes. Parked near the origin on purpose: this exercises the
    // inverse where the core region dominates, the regime the residual
    // study cares about. Far-out packets make the relative error look
    // worse, not better: the true inverse decays like a Gaussian between
    // packets while the quantized parametrix leaks exponential tails
    // there (the terms are rational with poles one unit off the real
    // axis), and corrections vanish on that untrusted region.
    return GridFunction::sample(1, L, N, [](std::span<const double> x) {
      const double g1 = std::exp(-0.5 * (x[0] - 1.0) * (x[0] - 1.0));
      const double g2 = std::exp(-0.5 * (x[0] + 2.0) * (x[0] + 2.0));
      return Complex(0.8 * g1 + 0.5 * g2, 0.0);
    });
  }
  throw std::invalid_argument("unknown reference input " + which);
}

RunReport run_e1_hypo_sweep(const ExperimentConfig& cfg) {
  RunReport report = make_report(cfg);
  CheckLog log{&report};
  const Thresholds th = Thresholds::load(cfg.thresholds_path);
  const double stability = th.at("e1.box_stability_factor");

  const std::vector<HypoCase> cases = {
      {"<w>^2", "angle()^2", "gevrey:2:60", true},
      {"<w>^-2", "1/angle()^2", "gevrey:2:60", true},
      {"exp(<w>^(1/2.5))", "exp(angle()^0.4)", "gevrey:2.5:60", true},
      {"exp(<w>^(1/3))", "exp(angle()^" + fmt17(1.0 / 3.0) + ")",
       "gevrey:3:60", true},
      {"k1^2 (control)", "k1^2", "gevrey:2:60", false},
      {"x1*k1 (control)", "x1*k1", "gevrey:2:60", false},
  };

  Table table{"hypo",
              {"symbol", "L", "lower_bound", "quotient", "c_fit", "m_fit",
               "C_fit", "h_fit", "witness"},
              {}};
  Table stab{"stability", {"symbol", "c_spread", "C_spread", "bound"}, {}};

  for (const HypoCase& hc : cases) {
    const SymbolExpr a = symbols::parse_symbol(hc.text, cfg.dim);
    const WeightSequence M = weights::parse_sequence_spec(hc.seq);
    std::vector<double> c_fits, C_fits;
    bool all_pass = true, all_fail_lower = true, all_witnessed = true;
    for (double L : cfg.box_sweep) {
      const checks::BoxSpec box{L, cfg.box_points};
      const checks::HypoellipticityReport hr = checks::check_hypoelliptic(
          a, M, M, cfg.rho, cfg.B, cfg.K, box, checks::Mode::Beurling);
      table.rows.push_back({hc.label, fmt17(L),
                            hr.lower_bound_pass ? "pass" : "fail",
                            hr.quotient_pass ? "pass" : "fail",
                            fmt17(hr.c_fit), fmt17(hr.m_fit), fmt17(hr.C_fit),
                            fmt17(hr.h_fit), witness_cell(hr.lower_witness)});
      all_pass = all_pass && hr.pass();
      all_fail_lower = all_fail_lower && !hr.lower_bound_pass;
      all_witnessed = all_witnessed && hr.lower_witness.has_value();
      c_fits.push_back(hr.c_fit);
      C_fits.push_back(hr.C_fit);
    }
    if (hc.family) {
      log.require(all_pass,
                  hc.label + " passes both conditions at every box");
      const double cs = ratio_spread(c_fits);
      const double Cs = ratio_spread(C_fits);
      stab.rows.push_back(
          {hc.label, fmt17(cs), fmt17(Cs), fmt17(stability)});
      log.require(cs <= stability && Cs <= stability,
                  hc.label + " fitted constants stable across the box sweep");
    } else {
      log.require(all_fail_lower && all_witnessed,
                  hc.label + " fails the lower bound with a witness");
    }
  }

  report.tables.push_back(std::move(table));
  report.tables.push_back(std::move(stab));
  std::ostringstream gd;
  gd << "boxes L in {";
  for (size_t i = 0; i < cfg.box_sweep.size(); ++i)
    gd << (i ? ", " : "") << cfg.box_sweep[i];
  gd << "}, " << cfg.box_points << " points per axis, B = " << cfg.B
     << ", K = " << cfg.K;
  report.grid_desc = gd.str();
  return report;
}

RunReport run_e2_oscillator_parametrix(const ExperimentConfig& cfg) {
  RunReport report = make_report(cfg);
  CheckLog log{&report};
  const Thresholds th = Thresholds::load(cfg.thresholds_path);
  const double improve_min = th.at("e2.oracle_improvement_min");
  const double mono_slack = th.at("e2.residual_monotone_slack");

  const SymbolExpr osc = symbols::parse_symbol("1 + x1^2 + k1^2", 1);
  if (!cfg.symbol.empty() &&
      !structurally_equal(symbols::parse_symbol(cfg.symbol, 1), osc))
    throw std::invalid_argument(
        "this experiment studies the symbol 1 + x1^2 + k1^2");
  if (cfg.J < 3 || cfg.J > 4)
    throw std::invalid_argument(
        "need J in [3, 4]: four truncations, at most four corrections");

  const WeightSequence M = weights::parse_sequence_spec(cfg.M_spec);
  const WeightSequence A = weights::parse_sequence_spec(cfg.A_spec);
  const parametrix::FormalSymbolSum p =
      parametrix::parametrix_terms(osc, cfg.J, M, A, cfg.rho, cfg.B);
  const parametrix::CutoffSpec cut =
      cfg.cut_inner.empty()
          ? parametrix::default_cutoffs(p)
          : parametrix::CutoffSpec{cfg.cut_inner, cfg.cut_outer};

  const quantize::HermiteBasis basis(cfg.L, cfg.N, cfg.n_max);

  const auto apply_sum = [&](const parametrix::FormalSymbolSum& sum, int N,
                             const GridFunction& g) {
    const parametrix::TruncatedSum tr =
        parametrix::truncate_with_cutoffs(sum, N, cut);
    return quantize::apply_operator(
        quantize::PhaseSymbol(
            [tr](std::span<const double> x, std::span<const double> xi) {
              return tr(x, xi);
            }),
        g);
  };

  // Left-composition residuals b_N(x,D) a(x,D) phi vs phi.
  Table resid{"residual", {"N", "phi", "residual"}, {}};
  std::vector<double> h0_resid;
  for (int i = 0; i <= 2; ++i) {
    const std::string phi = "h" + std::to_string(i);
    const GridFunction aphi = quantize::apply_operator(osc, basis.function(i));
    for (int N = 1; N <= 4; ++N) {
      const double r = rel_l2(apply_sum(p, N, aphi), basis.function(i));
      resid.rows.push_back({std::to_string(N), phi, fmt17(r)});
      if (i == 0) h0_resid.push_back(r);
    }
  }
  // Corrections whose windows sit past the input's support change the
  // residual at rounding level with either sign; the slack absorbs those
  // ties without masking a real increase.
  bool monotone = true;
  for (size_t k = 1; k < h0_resid.size(); ++k)
    monotone =
        monotone && h0_resid[k] <= h0_resid[k - 1] + mono_slack * h0_resid[0];
  log.require(monotone, "residual for h0 is nonincreasing over N = 1..4");

  // Against the eigenexpansion inverse.
  Table oracle{"oracle", {"N", "v", "err"}, {}};
  Table decay{"decay",
              {"v", "gamma_coeff_in", "gamma_coeff_b3", "c_coeff_b3",
               "rms_coeff_b3", "gamma_spec_in", "gamma_spec_b3"},
              {}};
  const auto coeff_fit = [&basis](const GridFunction& f)
      -> std::optional<quantize::DecayFit> {
    const std::vector<Complex> cs = basis.coefficients(f);
    std::vector<double> mags(cs.size());
    for (size_t i = 0; i < cs.size(); ++i) mags[i] = std::abs(cs[i]);
    try {
      return quantize::decay_fit(mags);
    } catch (const std::runtime_error&) {
      return std::nullopt;
    }
  };
  for (const std::string v_name : {"h0", "mixture"}) {
    const GridFunction v = e2_input(v_name, cfg.L, cfg.N);
    const GridFunction u = quantize::spectral_solve(v, basis);
    std::vector<double> errs;
    GridFunction b3v = v;  // placeholder, reassigned at N = 3
    for (int N = 1; N <= 4; ++N) {
      const GridFunction bv = apply_sum(p, N, v);
      if (N == 3) b3v = bv;
      const double e = rel_l2(bv, u);
      errs.push_back(e);
      oracle.rows.push_back({std::to_string(N), v_name, fmt17(e)});
    }
    if (v_name == "h0")
      log.require(errs[0] >= improve_min * errs[2],
                  "oracle error for h0 improves from N = 1 to N = 3 by at "
                  "least the pinned factor " +
                      fmt17(improve_min));

    const quantize::DecayFit spec_in = quantize::decay_fit(v);
    const quantize::DecayFit spec_out = quantize::decay_fit(b3v);
    const std::optional<quantize::DecayFit> cf_in = coeff_fit(v);
    const std::optional<quantize::DecayFit> cf_out = coeff_fit(b3v);
    decay.rows.push_back({v_name, cf_in ? fmt17(cf_in->gamma) : "n/a",
                          cf_out ? fmt17(cf_out->gamma) : "n/a",
                          cf_out ? fmt17(cf_out->c) : "n/a",
                          cf_out ? fmt17(cf_out->rms) : "n/a",
                          fmt17(spec_in.gamma), fmt17(spec_out.gamma)});
    // The asserted property is the regularizing signature itself: the
    // output's coefficient tail fits a stretched exponential with
    // exponent below 1. The input column is reported for comparison
    // where its own tail has enough range to fit.
    log.require(cf_out && cf_out->gamma < 1.0,
                "b3 output for " + std::string(v_name) +
                    " shows sub-exponential coefficient decay");
    if (!cf_in)
      report.caveats.push_back("coefficient fit for input " +
                               std::string(v_name) +
                               " lacks dynamic range; input column is n/a");
  }

  // Control: flipping the sign of the first correction must sink the
  // improvement below the pinned bar.
  parametrix::FormalSymbolSum bad = p;
  bad.terms[1] = SymbolExpr(symbols::scale(-1.0, p.terms[1].node()));
  {
    const GridFunction v = e2_input("h0", cfg.L, cfg.N);
    const GridFunction u = quantize::spectral_solve(v, basis);
    const double e1 = rel_l2(apply_sum(bad, 1, v), u);
    const double e3 = rel_l2(apply_sum(bad, 3, v), u);
    oracle.rows.push_back({"1", "h0 (sign-flip control)", fmt17(e1)});
    oracle.rows.push_back({"3", "h0 (sign-flip control)", fmt17(e3)});
    log.require(!(e1 >= improve_min * e3),
                "sign-flipped p1 control misses the improvement bar");
  }

  report.tables.push_back(std::move(resid));
  report.tables.push_back(std::move(oracle));
  report.tables.push_back(std::move(decay));
  std::ostringstream gd;
  gd << "quantize grid [-" << cfg.L << ", " << cfg.L << "), N = " << cfg.N
     << "; basis n_max = " << cfg.n_max << "; J = " << cfg.J
     << ", B = " << cfg.B;
  report.grid_desc = gd.str();
  return report;
}

RunReport run_e3_exp_symbol(const ExperimentConfig& cfg) {
  RunReport report = make_report(cfg);
  CheckLog log{&report};
  const Thresholds th = Thresholds::load(cfg.thresholds_path);
  const double stability = th.at("e3.box_stability_factor");

  if (!(cfg.s > 1.0) || !(cfg.s <= 4.0))
    throw std::invalid_argument("exp-symbol exponent s must be in (1, 4]");
  const std::string text = cfg.symbol.empty()
                               ? "exp(angle()^" + fmt17(1.0 / cfg.s) + ")"
                               : cfg.symbol;
  const SymbolExpr a = symbols::parse_symbol(text, cfg.dim);
  const WeightSequence M = weights::parse_sequence_spec(cfg.M_spec);
  const WeightSequence A = weights::parse_sequence_spec(cfg.A_spec);

  Table memb{"membership",
             {"symbol", "L", "sup", "trend_order", "trend_radius", "pass"},
             {}};
  Table hypo{"hypo",
             {"symbol", "L", "lower_bound", "quotient", "c_fit", "m_fit",
              "C_fit", "h_fit", "witness"},
             {}};

  bool memb_all = true, hypo_all = true;
  std::vector<double> c_fits, C_fits;
  for (double L : cfg.box_sweep) {
    const checks::BoxSpec box{L, cfg.box_points};
    const checks::FitReport fr = checks::estimate_class_membership(
        a, M, A, cfg.rho, cfg.h, cfg.m, cfg.K, box);
    memb.rows.push_back({text, fmt17(L), fmt17(fr.value),
                         checks::to_string(fr.trend_in_order),
                         checks::to_string(fr.trend_in_radius),
                         fr.pass ? "pass" : "fail"});
    memb_all = memb_all && fr.pass;

    const checks::HypoellipticityReport hr = checks::check_hypoelliptic(
        a, M, A, cfg.rho, cfg.B, cfg.K, box, checks::Mode::Beurling);
    hypo.rows.push_back({text, fmt17(L),
                         hr.lower_bound_pass ? "pass" : "fail",
                         hr.quotient_pass ? "pass" : "fail", fmt17(hr.c_fit),
                         fmt17(hr.m_fit), fmt17(hr.C_fit), fmt17(hr.h_fit),
                         witness_cell(hr.lower_witness)});
    hypo_all = hypo_all && hr.pass();
    c_fits.push_back(hr.c_fit);
    C_fits.push_back(hr.C_fit);
  }
  log.require(memb_all, "class membership estimate passes at every box");
  log.require(hypo_all, "both hypoellipticity conditions pass at every box");
  log.require(ratio_spread(c_fits) <= stability &&
                  ratio_spread(C_fits) <= stability,
              "fitted constants stable across the box sweep");

  // Control: pure e^{<w>} outruns these weights and must be rejected.
  const SymbolExpr ctrl = symbols::parse_symbol("exp(angle())", cfg.dim);
  const checks::BoxSpec big{cfg.box_sweep.back(), cfg.box_points};
  const checks::FitReport cf = checks::estimate_class_membership(
      ctrl, M, A, cfg.rho, cfg.h, cfg.m, cfg.K, big);
  memb.rows.push_back({"exp(angle()) (control)", fmt17(big.L),
                       fmt17(cf.value), checks::to_string(cf.trend_in_order),
                       checks::to_string(cf.trend_in_radius),
                       cf.pass ? "pass" : "fail"});
  log.require(!cf.pass, "exp(angle()) control is rejected by the estimate");

  report.tables.push_back(std::move(memb));
  report.tables.push_back(std::move(hypo));
  std::ostringstream gd;
  gd << "boxes L in {";
  for (size_t i = 0; i < cfg.box_sweep.size(); ++i)
    gd << (i ? ", " : "") << cfg.box_sweep[i];
  gd << "}, " << cfg.box_points << " points per axis, s = " << cfg.s
     << ", h = " << cfg.h << ", m = " << cfg.m;
  report.grid_desc = gd.str();
  return report;
}

RunReport run_e4_lemma_suite(const ExperimentConfig& cfg) {
  RunReport report = make_report(cfg);
  CheckLog log{&report};
  const Thresholds th = Thresholds::load(cfg.thresholds_path);
  const double slope_tol = th.at("e4.ray_slope_rel_tol");
  const double eq_tol = th.at("e4.tec_equality_tol");

  Table lemmas{"lemmas",
               {"check", "sequence", "range", "holds", "extremal",
                "extremal_index"},
               {}};

  const WeightSequence g2 = weights::parse_sequence_spec("gevrey:2:60");
  const WeightSequence g1 = weights::parse_sequence_spec("gevrey:1:60");

  const weights::ConditionReport zkk = weights::check_leibniz_budget(g2, 2, 8);
  lemmas.rows.push_back({"leibniz_budget", g2.tag(), "d=2, |a|<=8",
                         zkk.holds ? "yes" : "no", fmt17(zkk.extremal),
                         std::to_string(zkk.extremal_index)});
  log.require(zkk.holds, "derivative budget bound holds for gevrey:2 in d=2");

  const weights::ConditionReport tec = weights::check_root_monotone(g1, 60);
  lemmas.rows.push_back({"root_monotone", g1.tag(), "p<=60",
                         tec.holds ? "yes" : "no", fmt17(tec.extremal),
                         std::to_string(tec.extremal_index)});
  log.require(tec.holds && std::abs(tec.extremal) <= eq_tol,
              "root comparison is an equality for gevrey:1");

  // Control: a mid-course dip breaks shifted log-convexity and the root
  // comparison must reject it.
  std::vector<double> dipped;
  for (int p = 0; p <= 30; ++p) dipped.push_back(g2.log_at(p));
  dipped[10] -= 2.0;
  const WeightSequence broke =
      WeightSequence::from_log_values(dipped, "gevrey:2-dipped");
  const weights::ConditionReport rm = weights::check_root_monotone(broke, 30);
  lemmas.rows.push_back({"root_monotone", broke.tag() + " (control)", "p<=30",
                         rm.holds ? "yes" : "no", fmt17(rm.extremal),
                         std::to_string(rm.extremal_index)});
  log.require(!rm.holds && rm.violating_index.has_value(),
              "dipped sequence control is rejected with an index");

  // Remainder decay along the diagonal ray, against the graded expectation.
  const SymbolExpr osc = symbols::parse_symbol("1 + x1^2 + k1^2", 1);
  const WeightSequence M = weights::parse_sequence_spec(cfg.M_spec);
  const WeightSequence A = weights::parse_sequence_spec(cfg.A_spec);
  const parametrix::FormalSymbolSum p =
      parametrix::parametrix_terms(osc, cfg.J, M, A, cfg.rho, cfg.B);
  const parametrix::CutoffSpec cut =
      cfg.cut_inner.empty()
          ? parametrix::default_cutoffs(p)
          : parametrix::CutoffSpec{cfg.cut_inner, cfg.cut_outer};
  const checks::BoxSpec box{cfg.L, cfg.box_points};
  const checks::FitReport eq =
      parametrix::check_equivalence(p, cut, cfg.K, box, cfg.h, cfg.m);

  Table ray{"ray", {"N", "slope", "expected", "rel_err"}, {}};
  bool slopes_ok = true;
  for (int N = 1; N <= 3; ++N) {
    const std::string key = "ray_slope_" + std::to_string(N);
    const auto it = eq.constants.find(key);
    if (it == eq.constants.end()) {
      slopes_ok = false;
      ray.rows.push_back({std::to_string(N), "missing", fmt17(-2.0 * cfg.rho * N), ""});
      continue;
    }
    const double want = -2.0 * cfg.rho * N;
    const double rel = std::abs(it->second - want) / std::abs(want);
    ray.rows.push_back({std::to_string(N), fmt17(it->second), fmt17(want),
                        fmt17(rel)});
    slopes_ok = slopes_ok && rel <= slope_tol;
  }
  log.require(slopes_ok,
              "remainder ray slopes sit within " + fmt17(slope_tol) +
                  " of -2*rho*N for N = 1..3");

  // The reciprocal-symbol quotient bound and the graded-sum membership on
  // the same oscillator data.
  const checks::FitReport qb =
      checks::check_quotient_bound_p0(osc, A, cfg.rho, cfg.B, cfg.K, box);
  lemmas.rows.push_back({"quotient_bound_p0", A.tag(),
                         "K<=" + std::to_string(cfg.K),
                         qb.pass ? "yes" : "no", fmt17(qb.value), ""});
  log.require(qb.pass, "reciprocal quotient bound fit is finite and tame");

  const checks::FitReport fsm =
      parametrix::check_fs_membership(p, cfg.h, cfg.m, cfg.K, box);
  lemmas.rows.push_back({"fs_membership", M.tag() + "/" + A.tag(),
                         "J=" + std::to_string(cfg.J),
                         fsm.pass ? "yes" : "no", fmt17(fsm.value), ""});
  log.require(fsm.pass, "graded sum stays in the target class on the box");

  report.tables.push_back(std::move(lemmas));
  report.tables.push_back(std::move(ray));
  std::ostringstream gd;
  gd << "box L = " << cfg.L << ", " << cfg.box_points
     << " points per axis; J = " << cfg.J << ", B = " << cfg.B
     << ", K = " << cfg.K;
  report.grid_desc = gd.str();
  return report;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.id == "E1") return run_e1_hypo_sweep(cfg);
  if (cfg.id == "E2") return run_e2_oscillator_parametrix(cfg);
  if (cfg.id == "E3") return run_e3_exp_symbol(cfg);
  if (cfg.id == "E4") return run_e4_lemma_suite(cfg);
  throw std::invalid_argument("unknown experiment id \"" + cfg.id +
                              "\" (known: E1, E2, E3, E4)");
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

void write_report(const RunReport& report, const std::string& out_dir) {
  fs::create_directories(out_dir);
  for (const Table& t : report.tables) {
    const fs::path path = fs::path(out_dir) / (report.id + "_" + t.name + ".csv");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "# " << report.id << " " << t.name << " config=" << report.config_hash
        << " seed=" << report.seed << " version=" << report.tool_version
        << "\n";
    for (size_t i = 0; i < t.columns.size(); ++i)
      out << (i ? "," : "") << csv_escape(t.columns[i]);
    out << "\n";
    for (const auto& row : t.rows) {
      if (row.size() != t.columns.size())
        throw std::runtime_error("table " + t.name + " has a ragged row");
      for (size_t i = 0; i < row.size(); ++i)
        out << (i ? "," : "") << csv_escape(row[i]);
      out << "\n";
    }
  }

  nlohmann::json meta;
  meta["id"] = report.id;
  meta["config_hash"] = report.config_hash;
  meta["config"] = nlohmann::json::parse(report.config_echo);
  meta["seed"] = report.seed;
  meta["tool_version"] = report.tool_version;
  meta["grid"] = report.grid_desc;
  meta["pass"] = report.pass;
  meta["checks"] = report.checks;
  meta["caveats"] = report.caveats;
  meta["float_caveat"] =
      "values reproduce bit for bit when the same binary reruns the same "
      "config on the same platform; other libm builds may differ in ulps";
  std::vector<std::string> names;
  for (const Table& t : report.tables) names.push_back(t.name);
  meta["tables"] = names;
  const fs::path path = fs::path(out_dir) / (report.id + "_report.json");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << meta.dump(2) << "\n";
}

}  // namespace psdo::harness

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "psdo/quantize.hpp"

namespace psdo::harness {

// One experiment run, fully described: pair it with the seed and the run is
// reproducible bit for bit on the same platform. Loaded from JSON; unknown
// ids are rejected at dispatch.
struct ExperimentConfig {
  std::string id;          // E1 | E2 | E3 | E4
  std::string symbol;      // primary symbol DSL text (empty = experiment default)
  int dim = 1;
  std::string M_spec = "gevrey:2:60";
  std::string A_spec = "gevrey:1:60";
  double rho = 1.0;
  double B = 1.0;
  int J = 4;
  int K = 2;
  double L = 12.0;   // quantize half-width (E2) / base check box (others)
  int N = 256;       // grid points per axis (E2)
  int n_max = 40;    // oscillator basis size (E2)
  int box_points = 21;
  std::vector<double> box_sweep = {10.0, 20.0, 30.0};
  std::vector<double> cut_inner;  // truncation windows; empty = defaults
  std::vector<double> cut_outer;
  double s = 3.0;  // exp-symbol exponent (E3)
  double h = 1.0;  // class-estimate scales (E3, E4)
  double m = 1.0;
  uint64_t seed = 20260818;
  std::string thresholds_path = "config/thresholds.json";
  std::string out_dir = "results";
};

ExperimentConfig load_config(const std::string& path);
std::string canonical_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);  // FNV-1a 64, hex

// Numeric assertion bounds shared by every experiment, one file for the
// whole suite. Flattened to dotted keys: at("e2.oracle_improvement_min").
class Thresholds {
 public:
  static Thresholds load(const std::string& path);
  double at(const std::string& key) const;
  bool has(const std::string& key) const;

 private:
  std::map<std::string, double> values_;
  std::string path_;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

// Everything an experiment emits. `checks` holds one "ok: ..." or
// "FAIL: ..." line per asserted property (negative controls are asserted to
// fail); pass is their conjunction.
struct RunReport {
  std::string id;
  std::string config_hash;
  std::string config_echo;  // canonical config JSON
  uint64_t seed = 0;
  std::string tool_version;
  std::string grid_desc;
  bool pass = false;
  std::vector<Table> tables;
  std::vector<std::string> checks;
  std::vector<std::string> caveats;
};

RunReport run_e1_hypo_sweep(const ExperimentConfig& cfg);
RunReport run_e2_oscillator_parametrix(const ExperimentConfig& cfg);
RunReport run_e3_exp_symbol(const ExperimentConfig& cfg);
RunReport run_e4_lemma_suite(const ExperimentConfig& cfg);
RunReport run_experiment(const ExperimentConfig& cfg);

// out_dir/<id>_<table>.csv per table (comma separated, header row, one
// provenance comment line) and out_dir/<id>_report.json with the metadata.
void write_report(const RunReport& report, const std::string& out_dir);

// Fixed-width float formatting used in every table cell, wide enough that
// equal runs emit equal bytes.
std::string fmt17(double v);

// Reference inputs for the oscillator studies: "h0" is the normalized
// ground state, "mixture" a two-bump Gaussian sum well inside the basis span.
quantize::GridFunction e2_input(const std::string& which, double L, int N);

}  // namespace psdo::harness

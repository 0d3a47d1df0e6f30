// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ksl/config.hpp"
#include "ksl/functionals.hpp"
#include "ksl/odi.hpp"

namespace ksl {

struct Verdict {
  std::string criterion;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

/// Where a constant came from: "formula", "spectrum", "fitted:<id>" or
/// "configured".
struct ThresholdEntry {
  std::string name;
  double value = 0.0;
  std::string provenance;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(const std::vector<double>& values);
};

struct ExperimentReport {
  std::string name;
  Table runs;
  std::vector<Verdict> verdicts;
  std::vector<ThresholdEntry> thresholds;
  /// Labelled traces written next to the report.
  std::vector<std::pair<std::string, std::vector<FunctionalRecord>>> traces;

  bool pass() const;
  const Verdict* find(const std::string& criterion) const;
  double threshold(const std::string& name) const;
};

/// <name>_verdicts.csv, <name>_runs.csv, <name>_thresholds.csv and one
/// <name>_<label>.csv per trace.
void write_report(const ExperimentReport& rep, const std::filesystem::path& dir);

/// Constants fitted on a 3D grid and the thresholds built from them.
struct FittedConstants {
  DomainConstants domain;
  GnFit gn;
  ConstantChain chain;
  ThresholdSet thresholds;
  std::string fit_id;
};

FittedConstants fit_constants(const Grid& g, double mu, int gn_samples, int embed_samples,
                              std::uint64_t seed);

/// D(delta) = sup{xi >= 0 : xi - c4 delta^(1/p) xi^beta <= c3 sqrt(delta)},
/// beta = 1 - (4-p)/(2p). Requires p in (3,4).
double d_delta_eval(double delta, double p_exp, double c3, double c4);

struct KInputs {
  double p_exp = 3.5;
  double c3 = 1.0;
  double c4 = 1.0;
  double c5 = 1.0;
  double c8 = 1.0;
  double c_p = 1.0;
  double c_omega = 0.0;
  double omega_vol = 1.0;
};

/// (1 + 1/sqrt(4 + 8 C_Omega)) / sqrt(|Omega|).
double k_delta_c7(const KInputs& in);
/// D + c5 delta^(1/4) + c5 D (1 + sqrt(pi)) + 2 c8 C_P |Omega|^(1/4) delta^(1/4)
///   + C7 delta^(1/2) + 2 D.
double k_delta_eval(double delta, const KInputs& in);

/// Time after which s stays below `level` (linear interpolation between
/// records); NaN when the last value is not below it.
double settle_time(const std::vector<double>& t, const std::vector<double>& s, double level);

/// One run from the config: records every cadence and keeps snapshots per
/// snapshot_every.
Trace simulate(const RunConfig& cfg);
/// trace.csv, trace.json and u_<k>.bin / v_<k>.bin for the snapshots.
void write_simulation(const Trace& tr, const std::filesystem::path& dir);

ExperimentReport report_from_bounds(const std::string& name, const BoundReport& rep);

ExperimentReport run_decay(const RunConfig& cfg);
ExperimentReport run_bound_sweep(const RunConfig& cfg);
ExperimentReport run_absorbing(const RunConfig& cfg);
ExperimentReport run_eps_limit(const RunConfig& cfg);
ExperimentReport run_smallness(const RunConfig& cfg);
ExperimentReport run_ddelta(const RunConfig& cfg);
ExperimentReport run_semigroup(const RunConfig& cfg);
ExperimentReport run_thresholds(const RunConfig& cfg);

const std::vector<std::string>& experiment_names();
/// Dispatches on experiment_names(); unknown names are rejected.
ExperimentReport run_experiment(const std::string& name, const RunConfig& cfg);

/// Python/matplotlib script that plots every trace CSV in `dir`.
std::string plot_script();
std::filesystem::path write_plot_script(const std::filesystem::path& dir);

/// Runs fn(0..n-1) on up to hardware_concurrency threads; results keep
/// index order. The first exception is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace ksl

// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ksl/grid.hpp"
#include "ksl/solver.hpp"

namespace ksl {

/// u0 = base + amp * shape(x). Shapes: flat, cosine (prod cos(pi x_a/L_a)),
/// bump (Gaussian of width L/10 at the centre), random (lowest modes with
/// normal coefficients, scaled to max |.| = 1).
struct InitialSpec {
  std::string shape = "cosine";
  double base = 1.0;
  double amp = 0.5;
};

struct RunConfig {
  int dim = 1;
  std::vector<double> extents{1.0};
  std::vector<int> cells{256};
  ModelParams params;
  StepperConfig stepper;
  double t_end = 10.0;
  double cadence = 0.1;
  /// Keep a snapshot every n-th record; 0 keeps none.
  int snapshot_every = 0;
  InitialSpec u0{"cosine", 1.0, 0.5};
  InitialSpec v0{"cosine", 0.5, 0.3};
  std::uint64_t seed = 1;
  std::string output = "out";

  // sweeps and experiment knobs
  std::vector<double> kappas;
  std::vector<double> mus;
  std::vector<double> thresholds{0.5, 0.1, 0.02};
  int ensemble = 3;
  std::vector<double> kappa_fractions{0.125, 0.25, 0.5};
  /// Run length as a multiple of 1/kappa in the absorbing experiment.
  double horizon = 4.0;
  double spread_tol = 0.2;
  int j_max = 7;
  double eps_tol = 0.05;
  double barrier_tol = 0.1;
  double bound_tol = 0.05;
  double ledger_tol = 0.1;
  int gn_samples = 200;
  int embed_samples = 200;
  std::vector<double> q_list{2.0, 4.0};
  int trials = 64;
  double p_exp = 3.5;
  double c3 = 1.0;
  double c4 = 1.0;
  double c5 = 1.0;
  double c8 = 1.0;

  Grid grid() const;
  /// Rejects inconsistent grids, invalid parameters and cadence > t_end.
  void validate() const;
};

/// All recognised keys in documentation order.
const std::vector<std::string>& config_keys();

/// Sets one key from its text form; unknown keys raise an error naming the key.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

/// `key = value` lines; `#` starts a comment; blank lines are ignored.
RunConfig parse_config(std::istream& in, const std::string& origin = "<input>");
RunConfig load_config(const std::filesystem::path& path);
/// Applies `--key=value` arguments in order.
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& args);
/// Text form readable by parse_config.
std::string dump_config(const RunConfig& cfg);

/// Initial state from the config. With eps > 0 the data are prepared by
/// make_initial_data. Rejects negative initial data.
State initial_state(const RunConfig& cfg);
Field initial_field(const Grid& g, const InitialSpec& spec, std::uint64_t seed);

}  // namespace ksl

// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ksl/grid.hpp"
#include "ksl/solver.hpp"

namespace ksl {

/// Integral functionals of one state. Pointwise |grad v|^2 is the face
/// average of grad_sq, so grad_v_l2sq is the face energy exactly.
struct FunctionalRecord {
  double t = 0.0;
  double mass_u = 0.0;
  double mass_v = 0.0;
  double u_l2sq = 0.0;
  double v_l2sq = 0.0;
  double grad_v_l2sq = 0.0;
  double lap_v_l2sq = 0.0;
  double grad_v_l4 = 0.0;
  double grad_v_l6 = 0.0;
  double y = 0.0;
  double entropy = 0.0;
  double dissipation = 0.0;
  double u2log = 0.0;
  double eps_theta = 0.0;
  double sup_u = 0.0;
  double sup_v = 0.0;
  double sup_grad_v = 0.0;
  double energy = 0.0;
  /// eps * int u^theta log(1+u); extra column used by the log-weighted bound.
  double eps_theta_log = 0.0;

  bool operator==(const FunctionalRecord&) const = default;
};

/// CSV column names in output order.
const std::vector<std::string>& record_columns();
/// Mutable access by column position, matching record_columns().
double& record_field(FunctionalRecord& r, std::size_t column);
double record_field(const FunctionalRecord& r, std::size_t column);

FunctionalRecord compute_record(const State& s);

struct TraceMeta {
  ModelParams params;
  Grid grid;
  double dt = 0.0;
  double cadence = 0.0;
};

struct Trace {
  TraceMeta meta;
  std::vector<FunctionalRecord> records;
  /// Optional (u, v) states, typically one per record.
  std::vector<Snapshot> snapshots;

  /// Rejects records whose t does not exceed the last one.
  void append(const FunctionalRecord& r);
};

/// Runs `st` from s0 to t_end recording every `cadence`; keeps a snapshot at
/// every `snapshot_every`-th record (0 keeps none).
Trace record_run(const Stepper& st, const State& s0, double t_end, double cadence,
                 int snapshot_every = 0);

struct BoundCheck {
  std::string name;
  double theoretical = 0.0;
  double observed = 0.0;
  double margin = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  /// Short free-form note, e.g. "informational".
  std::string note;
};

struct BoundReport {
  std::vector<BoundCheck> checks;
  bool all_pass() const;
  const BoundCheck* find(const std::string& name) const;
};

/// Appends a check with margin = theoretical - observed and
/// pass <=> margin >= -tolerance.
void add_check(BoundReport& rep, std::string name, double theoretical, double observed,
               double tolerance, std::string note = {});

struct BoundOptions {
  double rel_tol = 0.05;
  /// Absolute slack added to every tolerance.
  double abs_tol = 1e-12;
};

/// Trapezoid rule over the record times for one column.
double trapezoid(const std::vector<FunctionalRecord>& recs, double FunctionalRecord::*col,
                 std::size_t upto = static_cast<std::size_t>(-1));

/// The L^1/L^2 a-priori bounds (a)-(g) for the trace, plus monotone mass
/// decay when kappa <= 0.
BoundReport verify_apriori_bounds(const Trace& tr, const BoundOptions& opt = {});

/// Constant of the log-weighted dissipation bound assembled from the
/// bounds (a)-(f).
double equi_constant(const ModelParams& p, double volume, double mass_u0, double energy0,
                     double entropy0, double T);

/// Separable test function phi(t,x) = psi(t) chi(x). chi must have zero
/// normal derivative on the box boundary.
struct TestFunction {
  std::function<double(double)> psi;
  std::function<double(double)> dpsi;
  std::function<double(const Point&)> chi;
  std::function<Point(const Point&)> grad_chi;
  std::function<double(const Point&)> lap_chi;
};

/// psi = (1 - t/T)^2, chi = prod_a cos(pi x_a / L_a) over the active axes.
TestFunction cosine_test_function(const Grid& g, double T);

struct WeakResidual {
  double r_u = 0.0;
  double r_v = 0.0;
  double h = 0.0;
  double dt = 0.0;
};

/// Residuals of the weak formulation over the snapshot window [t_0, t_last].
/// Requires phi to vanish at t_last.
WeakResidual weak_residual(const Trace& tr, const TestFunction& phi);

void write_trace_csv(const std::filesystem::path& path, const std::vector<FunctionalRecord>& recs);
/// Rejects files whose header lacks any record column.
std::vector<FunctionalRecord> read_trace_csv(const std::filesystem::path& path);

void write_trace_meta(const std::filesystem::path& path, const TraceMeta& meta);
TraceMeta read_trace_meta(const std::filesystem::path& path);

/// Shortest round-trip decimal form.
std::string format_double(double x);

}  // namespace ksl

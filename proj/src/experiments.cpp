// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ksl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include "ksl/semigroup.hpp"

namespace ksl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_rows(const std::filesystem::path& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << csv_escape(header[i]);
  out << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << csv_escape(r[i]);
    out << "\n";
  }
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

std::string label(double x) {
  std::string s = format_double(x);
  std::replace(s.begin(), s.end(), '-', 'm');
  return s;
}

void verdict(ExperimentReport& rep, std::string name, bool pass, double value, double tol,
             std::string detail = {}) {
  rep.verdicts.push_back({std::move(name), pass, value, tol, std::move(detail)});
}

Trace run_config(const RunConfig& cfg, int snapshot_every) {
  Stepper st(cfg.grid(), cfg.stepper);
  return record_run(st, initial_state(cfg), cfg.t_end, cfg.cadence, snapshot_every);
}

std::vector<double> column(const std::vector<FunctionalRecord>& recs, double FunctionalRecord::*c) {
  std::vector<double> out;
  out.reserve(recs.size());
  for (const auto& r : recs) out.push_back(r.*c);
  return out;
}

bool homogeneous(const InitialSpec& s) { return s.shape == "flat" || s.amp == 0.0; }

}  // namespace

void Table::add(const std::vector<double>& values) {
  std::vector<std::string> row;
  for (double v : values) row.push_back(format_double(v));
  rows.push_back(std::move(row));
}

bool ExperimentReport::pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

const Verdict* ExperimentReport::find(const std::string& criterion) const {
  for (const auto& v : verdicts)
    if (v.criterion == criterion) return &v;
  return nullptr;
}

double ExperimentReport::threshold(const std::string& n) const {
  for (const auto& t : thresholds)
    if (t.name == n) return t.value;
  fail(ErrorCode::InvalidArgument, "report has no threshold '" + n + "'");
}

void write_report(const ExperimentReport& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::vector<std::string>> rows;
  for (const auto& v : rep.verdicts)
    rows.push_back({v.criterion, v.pass ? "pass" : "fail", format_double(v.value), format_double(v.tolerance), v.detail});
  write_rows(dir / (rep.name + "_verdicts.csv"), {"criterion", "status", "value", "tolerance", "detail"}, rows);
  write_rows(dir / (rep.name + "_runs.csv"), rep.runs.columns, rep.runs.rows);
  rows.clear();
  for (const auto& t : rep.thresholds) rows.push_back({t.name, format_double(t.value), t.provenance});
  write_rows(dir / (rep.name + "_thresholds.csv"), {"name", "value", "provenance"}, rows);
  for (const auto& [lab, recs] : rep.traces) write_trace_csv(dir / (rep.name + "_" + lab + ".csv"), recs);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  std::exception_ptr first;
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        if (!first) first = std::current_exception();
      }
    }
    if (first) std::rethrow_exception(first);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(m);
          if (!first) first = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

// ---------------------------------------------------------------- constants

FittedConstants fit_constants(const Grid& g, double mu, int gn_samples, int embed_samples,
                              std::uint64_t seed) {
  require(g.dim() == 3, "fitted constants need a 3D grid");
  FittedConstants fc;
  fc.domain = domain_constants(g, embed_samples, seed);
  fc.gn = fit_gagliardo_nirenberg(g, gn_samples, seed + 1);
  fc.chain = assemble_constants(fc.gn.c1, fc.gn.c2, mu);
  fc.thresholds = select_thresholds(fc.chain.a_const, fc.domain.c_p, fc.domain.c_omega, g.volume(), mu);
  fc.fit_id = std::to_string(g.cells(0)) + "x" + std::to_string(g.cells(1)) + "x" + std::to_string(g.cells(2)) +
              "-s" + std::to_string(seed) + "-n" + std::to_string(gn_samples) + "/" + std::to_string(embed_samples);
  return fc;
}

namespace {

void add_constant_entries(ExperimentReport& rep, const FittedConstants& fc, const std::string& prefix = {}) {
  const std::string fit = "fitted:" + fc.fit_id;
  const auto& th = fc.thresholds;
  const auto& ch = fc.chain;
  rep.thresholds.push_back({prefix + "c_p", fc.domain.c_p, "spectrum"});
  rep.thresholds.push_back({prefix + "c_omega", fc.domain.c_omega, fit});
  rep.thresholds.push_back({prefix + "gn_c1", ch.c1, fit});
  rep.thresholds.push_back({prefix + "gn_c2", ch.c2, "formula"});
  rep.thresholds.push_back({prefix + "c_half", ch.c_half, "formula"});
  rep.thresholds.push_back({prefix + "c_eighth", ch.c_eighth, "formula"});
  rep.thresholds.push_back({prefix + "c_young", ch.c_young, "formula"});
  rep.thresholds.push_back({prefix + "c_unaunav", ch.c_unaunav, "formula"});
  rep.thresholds.push_back({prefix + "a_const", ch.a_const, "formula"});
  rep.thresholds.push_back({prefix + "nu0", th.nu0, "formula"});
  rep.thresholds.push_back({prefix + "nu", th.nu, "formula"});
  rep.thresholds.push_back({prefix + "kappa_tilde", th.kappa_tilde, "formula"});
  rep.thresholds.push_back({prefix + "eta", th.eta, "formula"});
  rep.thresholds.push_back({prefix + "x_m", th.x_m, "formula"});
  rep.thresholds.push_back({prefix + "delta", th.delta, "formula"});
  rep.thresholds.push_back({prefix + "upper", th.upper, "formula"});
  rep.thresholds.push_back({prefix + "kappa0", th.kappa0, "formula"});
}

}  // namespace

// ---------------------------------------------------------------- D and K

double d_delta_eval(double delta, double p_exp, double c3, double c4) {
  require(p_exp > 3.0 && p_exp < 4.0, "d_delta_eval: p must lie in (3,4)");
  require(delta >= 0.0 && c3 >= 0.0 && c4 >= 0.0, "d_delta_eval: negative input");
  if (delta == 0.0) return 0.0;
  const double beta = 1.0 - (4.0 - p_exp) / (2.0 * p_exp);
  const double a = c4 * std::pow(delta, 1.0 / p_exp);
  const double rhs = c3 * std::sqrt(delta);
  if (a == 0.0) return rhs;
  auto f = [&](double x) { return x - a * std::pow(x, beta); };
  // f decreases up to xi* and increases beyond it
  double lo = std::pow(a * beta, 1.0 / (1.0 - beta));
  double hi = std::max(2.0 * lo, rhs + lo + 1e-300);
  while (f(hi) <= rhs) hi *= 2.0;
  for (int it = 0; it < 400 && hi - lo > 1e-15 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) <= rhs ? lo : hi) = mid;
  }
  return lo;
}

double k_delta_c7(const KInputs& in) {
  return (1.0 + 1.0 / std::sqrt(4.0 + 8.0 * in.c_omega)) / std::sqrt(in.omega_vol);
}

double k_delta_eval(double delta, const KInputs& in) {
  double d = d_delta_eval(delta, in.p_exp, in.c3, in.c4);
  double q = std::pow(delta, 0.25);
  return d + in.c5 * q + in.c5 * d * (1.0 + std::sqrt(std::numbers::pi)) +
         2.0 * in.c8 * in.c_p * std::pow(in.omega_vol, 0.25) * q + k_delta_c7(in) * std::sqrt(delta) + 2.0 * d;
}

double settle_time(const std::vector<double>& t, const std::vector<double>& s, double level) {
  require(t.size() == s.size() && !t.empty(), "settle_time: mismatched series");
  if (!(s.back() < level)) return kNaN;
  std::size_t k = s.size();
  while (k > 0 && s[k - 1] < level) --k;
  if (k == 0) return t.front();
  // s[k-1] >= level > s[k]
  double w = (s[k - 1] - level) / (s[k - 1] - s[k]);
  return t[k - 1] + w * (t[k] - t[k - 1]);
}

// ---------------------------------------------------------------- simulate

Trace simulate(const RunConfig& cfg) { return run_config(cfg, cfg.snapshot_every); }

void write_simulation(const Trace& tr, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_trace_csv(dir / "trace.csv", tr.records);
  write_trace_meta(dir / "trace.json", tr.meta);
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    write_snapshot(dir / ("u_" + std::to_string(k) + ".bin"), tr.snapshots[k].u, tr.snapshots[k].t);
    write_snapshot(dir / ("v_" + std::to_string(k) + ".bin"), tr.snapshots[k].v, tr.snapshots[k].t);
  }
}

ExperimentReport report_from_bounds(const std::string& name, const BoundReport& b) {
  ExperimentReport rep;
  rep.name = name;
  rep.runs.columns = {"check", "theoretical", "observed", "margin", "tolerance", "pass"};
  for (const auto& c : b.checks) {
    rep.runs.rows.push_back({c.name, format_double(c.theoretical), format_double(c.observed), format_double(c.margin),
                             format_double(c.tolerance), c.pass ? "1" : "0"});
    verdict(rep, c.name, c.pass, c.margin, c.tolerance, c.note);
  }
  return rep;
}

// ---------------------------------------------------------------- decay

namespace {

// Spatially homogeneous ODE u' = k u - mu u^2 - eps u^theta, v' = u - v, RK4.
void homogeneous_oracle(const ModelParams& p, int dim, double u0, double v0, double t_end,
                        std::vector<double>& t, std::vector<double>& su, std::vector<double>& sum) {
  const double h = 1e-3;
  const double th = p.theta_for(dim);
  auto fu = [&](double u) { return p.kappa * u - p.mu * u * u - p.eps * std::pow(std::max(u, 0.0), th); };
  double u = u0, v = v0, s = 0.0;
  t.push_back(0.0);
  su.push_back(u);
  sum.push_back(u + v);
  while (s < t_end - 1e-12) {
    double k1u = fu(u), k1v = u - v;
    double k2u = fu(u + 0.5 * h * k1u), k2v = (u + 0.5 * h * k1u) - (v + 0.5 * h * k1v);
    double k3u = fu(u + 0.5 * h * k2u), k3v = (u + 0.5 * h * k2u) - (v + 0.5 * h * k2v);
    double k4u = fu(u + h * k3u), k4v = (u + h * k3u) - (v + h * k3v);
    u += h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
    v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    s += h;
    t.push_back(s);
    su.push_back(std::abs(u));
    sum.push_back(std::abs(u) + std::abs(v));
  }
}

}  // namespace

ExperimentReport run_decay(const RunConfig& cfg) {
  cfg.validate();
  std::vector<double> kappas = cfg.kappas.empty() ? std::vector<double>{cfg.params.kappa} : cfg.kappas;
  for (double k : kappas) require(k <= 0.0, "decay experiment needs kappa <= 0");
  require(!cfg.thresholds.empty(), "decay experiment needs a threshold ladder");
  ExperimentReport rep;
  rep.name = "decay";
  rep.runs.columns = {"kappa", "mu"};
  for (double th : cfg.thresholds) {
    rep.runs.columns.push_back("settle_" + format_double(th));
    rep.runs.columns.push_back("oracle_" + format_double(th));
    rep.runs.columns.push_back("settle_u_" + format_double(th));
    rep.runs.columns.push_back("oracle_u_" + format_double(th));
  }
  std::vector<Trace> traces(kappas.size());
  parallel_for(kappas.size(), [&](std::size_t i) {
    RunConfig c = cfg;
    c.params.kappa = kappas[i];
    traces[i] = run_config(c, 0);
  });
  const bool homog = homogeneous(cfg.u0) && homogeneous(cfg.v0);
  double smallest = *std::min_element(cfg.thresholds.begin(), cfg.thresholds.end());
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    const auto& R = traces[i].records;
    std::vector<double> t = column(R, &FunctionalRecord::t);
    std::vector<double> su = column(R, &FunctionalRecord::sup_u);
    std::vector<double> sum(R.size());
    for (std::size_t k = 0; k < R.size(); ++k) sum[k] = R[k].sup_u + R[k].sup_v;
    std::vector<double> ot, osu, osum;
    if (homog) {
      ModelParams p = cfg.params;
      p.kappa = kappas[i];
      homogeneous_oracle(p, cfg.dim, R.front().sup_u, R.front().sup_v, cfg.t_end, ot, osu, osum);
    }
    std::vector<double> row{kappas[i], cfg.params.mu};
    std::string tag = "k" + label(kappas[i]);
    for (double th : cfg.thresholds) {
      double a = settle_time(t, sum, th);
      double b = homog ? settle_time(ot, osum, th) : kNaN;
      double c = settle_time(t, su, th);
      double d = homog ? settle_time(ot, osu, th) : kNaN;
      row.insert(row.end(), {a, b, c, d});
      if (homog && std::isfinite(b) && b > 0.0) {
        double err = std::abs(a - b) / b;
        verdict(rep, tag + "_oracle_" + format_double(th), std::isfinite(a) && err <= 0.1, err, 0.1,
                "sup_u+sup_v settle time against the homogeneous ODE");
      }
      if (homog && std::isfinite(d) && d > 0.0) {
        double err = std::abs(c - d) / d;
        verdict(rep, tag + "_oracle_u_" + format_double(th), std::isfinite(c) && err <= 0.1, err, 0.1,
                "sup_u settle time against the homogeneous ODE");
      }
    }
    double reach = settle_time(t, sum, smallest);
    verdict(rep, tag + "_reaches_" + format_double(smallest), std::isfinite(reach), reach, cfg.t_end,
            "settles below the smallest threshold by t_end");
    rep.runs.add(row);
    rep.traces.emplace_back(tag, R);
  }
  return rep;
}

// ---------------------------------------------------------------- bounds

ExperimentReport run_bound_sweep(const RunConfig& cfg) {
  cfg.validate();
  std::vector<double> kappas = cfg.kappas.empty() ? std::vector<double>{cfg.params.kappa} : cfg.kappas;
  std::vector<double> mus = cfg.mus.empty() ? std::vector<double>{cfg.params.mu} : cfg.mus;
  std::vector<std::pair<double, double>> grid_pts;
  for (double k : kappas)
    for (double m : mus) grid_pts.emplace_back(k, m);
  std::vector<BoundReport> reps(grid_pts.size());
  std::vector<Trace> traces(grid_pts.size());
  parallel_for(grid_pts.size(), [&](std::size_t i) {
    RunConfig c = cfg;
    c.params.kappa = grid_pts[i].first;
    c.params.mu = grid_pts[i].second;
    traces[i] = run_config(c, 0);
    BoundOptions opt;
    opt.rel_tol = cfg.bound_tol;
    reps[i] = verify_apriori_bounds(traces[i], opt);
  });
  ExperimentReport rep;
  rep.name = "bounds";
  rep.runs.columns = {"kappa", "mu", "check", "theoretical", "observed", "margin", "tolerance", "pass"};
  for (std::size_t i = 0; i < grid_pts.size(); ++i) {
    auto [k, m] = grid_pts[i];
    std::string tag = "k" + label(k) + "_m" + label(m);
    for (const auto& c : reps[i].checks) {
      rep.runs.rows.push_back({format_double(k), format_double(m), c.name, format_double(c.theoretical),
                               format_double(c.observed), format_double(c.margin), format_double(c.tolerance),
                               c.pass ? "1" : "0"});
      verdict(rep, tag + "_" + c.name, c.pass, c.margin, c.tolerance, c.note);
    }
    rep.traces.emplace_back(tag, traces[i].records);
  }
  return rep;
}

// ---------------------------------------------------------------- absorbing

ExperimentReport run_absorbing(const RunConfig& cfg) {
  cfg.validate();
  Grid g = cfg.grid();
  require(g.dim() == 3, "absorbing experiment needs a 3D grid");
  FittedConstants fc = fit_constants(g, cfg.params.mu, cfg.gn_samples, cfg.embed_samples, cfg.seed);
  const double k0 = fc.thresholds.kappa0;
  ExperimentReport rep;
  rep.name = "absorbing";
  add_constant_entries(rep, fc);
  std::vector<double> fr = cfg.kappa_fractions;
  std::sort(fr.begin(), fr.end());
  const std::size_t ne = static_cast<std::size_t>(cfg.ensemble);
  std::vector<double> R(fr.size() * ne, kNaN);
  std::vector<std::vector<FunctionalRecord>> recs(R.size());
  parallel_for(R.size(), [&](std::size_t idx) {
    RunConfig c = cfg;
    c.params.kappa = fr[idx / ne] * k0;
    c.seed = cfg.seed + idx % ne;
    if (cfg.horizon > 0.0) c.t_end = cfg.horizon / c.params.kappa;
    c.cadence = c.t_end / 400.0;
    Trace tr = run_config(c, 0);
    double r = 0.0;
    for (const auto& rec : tr.records)
      if (rec.t >= 0.75 * c.t_end) r = std::max(r, rec.sup_u + rec.sup_grad_v);
    R[idx] = r;
    recs[idx] = std::move(tr.records);
  });
  rep.runs.columns = {"kappa", "fraction", "member", "t_end", "R", "kappa_over_mu"};
  std::vector<double> mean(fr.size(), 0.0);
  for (std::size_t i = 0; i < fr.size(); ++i) {
    double k = fr[i] * k0;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t e = 0; e < ne; ++e) {
      double r = R[i * ne + e];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      mean[i] += r / static_cast<double>(ne);
      rep.runs.add({k, fr[i], static_cast<double>(e), recs[i * ne + e].back().t, r, k / cfg.params.mu});
      rep.traces.emplace_back("f" + label(fr[i]) + "_e" + std::to_string(e), recs[i * ne + e]);
    }
    double spread = hi > 0.0 ? (hi - lo) / hi : 0.0;
    verdict(rep, "spread_f" + format_double(fr[i]), std::isfinite(spread) && spread <= cfg.spread_tol, spread,
            cfg.spread_tol, "ensemble spread of R");
  }
  for (std::size_t i = 0; i + 1 < fr.size(); ++i) {
    double ratio = mean[i] / mean[i + 1];
    verdict(rep, "monotone_f" + format_double(fr[i]), ratio <= 1.0 + cfg.spread_tol, ratio, 1.0 + cfg.spread_tol,
            "R(kappa) over R(next larger kappa)");
  }
  if (fr.size() >= 2) {
    double ratio = mean.front() / mean.back();
    double target = fr.front() / fr.back();
    verdict(rep, "toward_zero", ratio <= target * (1.0 + cfg.spread_tol), ratio, target * (1.0 + cfg.spread_tol),
            "R(smallest kappa) / R(largest kappa) against the kappa ratio");
  }
  return rep;
}

// ---------------------------------------------------------------- eps limit

ExperimentReport run_eps_limit(const RunConfig& cfg) {
  cfg.validate();
  const int J = cfg.j_max;
  std::vector<Trace> tr(static_cast<std::size_t>(J + 1));
  std::vector<std::string> status(tr.size(), "ok");
  parallel_for(tr.size(), [&](std::size_t j) {
    RunConfig c = cfg;
    c.params.eps = std::ldexp(1.0, -static_cast<int>(j));
    try {
      tr[j] = run_config(c, 1);
    } catch (const RunError& e) {
      status[j] = std::string("escaped at t=") + format_double(e.time());
    }
  });
  ExperimentReport rep;
  rep.name = "eps_limit";
  rep.runs.columns = {"j", "eps", "d_u", "d_v", "eps_theta_integral", "halving_ratio", "ok"};
  std::vector<double> d(J, kNaN), dv(J, kNaN), E(J + 1, kNaN);
  for (int j = 0; j <= J; ++j)
    if (status[j] == "ok") E[j] = trapezoid(tr[j].records, &FunctionalRecord::eps_theta);
  for (int j = 0; j < J; ++j) {
    if (status[j] != "ok" || status[j + 1] != "ok") continue;
    const auto& a = tr[j].snapshots;
    const auto& b = tr[j + 1].snapshots;
    require(a.size() == b.size(), "eps runs sampled at different times");
    std::vector<FunctionalRecord> du(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      du[k].t = a[k].t;
      Field x = a[k].u - b[k].u;
      Field y = a[k].v - b[k].v;
      du[k].u_l2sq = inner(x, x);
      du[k].v_l2sq = inner(y, y);
    }
    d[j] = std::sqrt(trapezoid(du, &FunctionalRecord::u_l2sq));
    dv[j] = std::sqrt(trapezoid(du, &FunctionalRecord::v_l2sq));
  }
  for (int j = 0; j <= J; ++j) {
    double ratio = j < J ? E[j] / E[j + 1] : kNaN;
    rep.runs.add({static_cast<double>(j), std::ldexp(1.0, -j), j < J ? d[j] : kNaN, j < J ? dv[j] : kNaN, E[j], ratio,
                  status[j] == "ok" ? 1.0 : 0.0});
    if (status[j] == "ok") rep.traces.emplace_back("j" + std::to_string(j), tr[j].records);
  }
  int inversions = 0;
  bool all_ok = true;
  for (int j = 0; j < J; ++j)
    if (!std::isfinite(d[j])) all_ok = false;
  for (int j = 0; j + 1 < J; ++j)
    if (!(d[j + 1] < d[j])) ++inversions;
  verdict(rep, "d_decreasing", all_ok && inversions == 0, inversions, 0.0, "inversions of d_j over j");
  verdict(rep, "d_final", all_ok && d[J - 1] <= cfg.eps_tol, d[J - 1], cfg.eps_tol, "last consecutive distance");
  double worst = 0.0;
  for (int j = 0; j < J; ++j) {
    double r = E[j] / E[j + 1];
    double dev = std::abs(r / 2.0 - 1.0);
    worst = std::isfinite(dev) ? std::max(worst, dev) : std::numeric_limits<double>::infinity();
  }
  verdict(rep, "eps_theta_halving", worst <= 0.2, worst, 0.2, "max |ratio/2 - 1| of eps int int u^theta");
  for (int j = 0; j <= J; ++j)
    if (status[j] != "ok") verdict(rep, "escaped_j" + std::to_string(j), true, j, 0.0, status[j]);
  return rep;
}

// ---------------------------------------------------------------- smallness

ExperimentReport run_smallness(const RunConfig& cfg) {
  cfg.validate();
  Grid g = cfg.grid();
  require(g.dim() == 3, "smallness experiment needs a 3D grid");
  FittedConstants fc = fit_constants(g, cfg.params.mu, cfg.gn_samples, cfg.embed_samples, cfg.seed);
  const ThresholdSet& th = fc.thresholds;
  RunConfig c = cfg;
  if (c.params.kappa <= 0.0) c.params.kappa = cfg.kappa_fractions.back() * th.kappa0;
  require(c.params.kappa < th.kappa0, "smallness experiment needs kappa < kappa0");
  const double kh = th.kappa0;
  Trace tr = run_config(c, std::max(1, cfg.snapshot_every));

  ExperimentReport rep;
  rep.name = "smallness";
  add_constant_entries(rep, fc);
  rep.thresholds.push_back({"kappa", c.params.kappa, "configured"});
  rep.thresholds.push_back({"kappa_hat", kh, "formula"});

  const auto& R = tr.records;
  const double mass_limit = 2.0 * kh * g.volume() / c.params.mu;
  double T0 = kNaN, t0 = kNaN;
  for (const auto& r : R)
    if (!std::isfinite(T0) && r.mass_u < mass_limit) T0 = r.t;
  std::size_t k0 = R.size();
  for (std::size_t k = 0; k < R.size(); ++k)
    if (R[k].y <= th.delta) {
      k0 = k;
      t0 = R[k].t;
      break;
    }
  double worst = 0.0;
  for (std::size_t k = k0; k < R.size(); ++k) worst = std::max(worst, R[k].y / th.delta);
  const bool crossed = k0 < R.size();
  verdict(rep, "barrier", crossed && worst <= 1.0 + cfg.barrier_tol, crossed ? worst : kNaN, 1.0 + cfg.barrier_tol,
          crossed ? "max y/delta after first y <= delta" : "y never reached delta");

  double start = std::isfinite(T0) ? T0 : 0.0;
  const auto& f0 = R.front();
  double T = smallness_window(th, kh, f0.mass_u, f0.grad_v_l2sq, f0.v_l2sq, start);
  double stop = std::min(R.back().t, start + T);
  std::vector<FunctionalRecord> win;
  for (const auto& r : R)
    if (r.t >= start && r.t <= stop) win.push_back(r);
  double avg = win.size() >= 2 ? trapezoid(win, &FunctionalRecord::y) / (win.back().t - win.front().t) : kNaN;
  rep.thresholds.push_back({"window_T", T, "formula"});
  rep.runs.columns = {"T0_emp", "t0_emp", "max_y_over_delta", "window_T", "window_avg_y", "delta", "y0"};
  rep.runs.add({T0, t0, worst, T, avg, th.delta, f0.y});
  verdict(rep, "window_average", true, avg, th.delta,
          stop < start + T ? "informational: window longer than the run" : "informational");

  LedgerOptions lo;
  lo.rel_tol = cfg.ledger_tol;
  lo.kappa_hat = kh;
  lo.window = T <= R.back().t ? T : 0.0;
  BoundReport led = odi_ledger_check(tr, th, fc.chain, lo);
  for (const auto& ch : led.checks)
    verdict(rep, "ledger_" + ch.name, ch.pass, ch.margin, ch.tolerance, ch.note);
  rep.traces.emplace_back("run", R);
  return rep;
}

// ---------------------------------------------------------------- D(delta)

ExperimentReport run_ddelta(const RunConfig& cfg) {
  cfg.validate();
  KInputs in;
  in.p_exp = cfg.p_exp;
  in.c3 = cfg.c3;
  in.c4 = cfg.c4;
  in.c5 = cfg.c5;
  in.c8 = cfg.c8;
  Grid g = cfg.grid();
  in.omega_vol = g.volume();
  DomainConstants dc = domain_constants(g, g.dim() == 3 ? cfg.embed_samples : 0, cfg.seed);
  in.c_p = dc.c_p;
  in.c_omega = dc.c_omega;

  ExperimentReport rep;
  rep.name = "ddelta";
  rep.thresholds = {{"p_exp", in.p_exp, "configured"}, {"c3", in.c3, "configured"}, {"c4", in.c4, "configured"},
                    {"c5", in.c5, "configured"},       {"c8", in.c8, "configured"}, {"c_p", in.c_p, "spectrum"},
                    {"c_omega", in.c_omega, g.dim() == 3 ? "fitted:embed" : "unused"},
                    {"c7", k_delta_c7(in), "formula"}};
  rep.runs.columns = {"k", "delta", "D", "K", "D_c4_zero", "c3_sqrt_delta"};
  std::vector<double> D, K;
  double exact_err = 0.0;
  for (int k = 1; k <= 8; ++k) {
    double delta = std::pow(10.0, -k);
    double d = d_delta_eval(delta, in.p_exp, in.c3, in.c4);
    double z = d_delta_eval(delta, in.p_exp, in.c3, 0.0);
    double ref = in.c3 * std::sqrt(delta);
    exact_err = std::max(exact_err, std::abs(z - ref));
    D.push_back(d);
    K.push_back(k_delta_eval(delta, in));
    rep.runs.add({static_cast<double>(k), delta, d, K.back(), z, ref});
  }
  bool mono = true, kmono = true;
  for (std::size_t i = 1; i < D.size(); ++i) {
    mono = mono && D[i] < D[i - 1];
    kmono = kmono && K[i] < K[i - 1];
  }
  verdict(rep, "D_monotone", mono, 0.0, 0.0, "D strictly increasing in delta on 10^-k");
  verdict(rep, "D_vanishes", D.back() < 1e-3 * D.front(), D.back() / D.front(), 1e-3, "D(1e-8) / D(1e-1)");
  verdict(rep, "c4_zero_exact", exact_err <= 1e-12, exact_err, 1e-12, "D = c3 sqrt(delta) when c4 = 0");
  verdict(rep, "K_monotone", kmono, K.back(), 0.0, "informational");
  return rep;
}

// ---------------------------------------------------------------- semigroup

ExperimentReport run_semigroup(const RunConfig& cfg) {
  cfg.validate();
  Grid g = cfg.grid();
  SpectralKernel k(g);
  ExperimentReport rep;
  rep.name = "semigroup";
  rep.runs.columns = {"q", "dim", "alpha_expected", "alpha_fit", "c_fit", "rel_error", "contraction", "c4_finite"};
  std::vector<SmoothingFit> fits(cfg.q_list.size());
  parallel_for(fits.size(), [&](std::size_t i) {
    SmoothingOptions o;
    o.trials = cfg.trials;
    o.seed = cfg.seed;
    fits[i] = smoothing_fit(k, cfg.q_list[i], o);
  });
  for (const auto& f : fits) {
    rep.runs.add({f.q, static_cast<double>(f.dim), f.alpha_expected, f.alpha_fit, f.c_fit, f.rel_error, f.contraction,
                  f.c4_finite ? 1.0 : 0.0});
    verdict(rep, "alpha_q" + format_double(f.q), f.rel_error <= 0.15, f.rel_error, 0.15,
            "fitted " + format_double(f.alpha_fit) + " expected " + format_double(f.alpha_expected));
    rep.thresholds.push_back({"c_fit_q" + format_double(f.q), f.c_fit, "fitted:smoothing-s" + std::to_string(cfg.seed)});
  }
  // semigroup property and positivity on random nonnegative fields
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double prop = 0.0, neg = 0.0;
  for (int s = 0; s < 10; ++s) {
    Field f(g);
    for (auto& x : f.values) x = uni(rng) < 0.1 ? uni(rng) : 0.0;
    double fm = std::max(f.max_abs(), 1e-300);
    double a = 0.05 * (1 + s), b = 0.03 * (1 + s);
    Field lhs = k.semigroup(a + b, f);
    Field rhs = k.semigroup(a, k.semigroup(b, f));
    prop = std::max(prop, (lhs - rhs).max_abs() / fm);
    neg = std::max(neg, -lhs.min() / fm);
  }
  verdict(rep, "semigroup_property", prop <= 1e-10, prop, 1e-10, "max |S(a+b)f - S(a)S(b)f| / |f|");
  verdict(rep, "positivity", neg <= 1e-12, neg, 1e-12, "max negative part of S(t)f / |f| for f >= 0");
  return rep;
}

// ---------------------------------------------------------------- thresholds

ExperimentReport run_thresholds(const RunConfig& cfg) {
  cfg.validate();
  Grid g = cfg.grid();
  require(g.dim() == 3, "thresholds need a 3D grid");
  std::vector<double> mus = cfg.mus.empty() ? std::vector<double>{cfg.params.mu} : cfg.mus;
  ExperimentReport rep;
  rep.name = "thresholds";
  rep.runs.columns = {"mu",    "c_p",   "c_omega", "gn_c1", "gn_c2",  "c_half", "c_eighth", "c_unaunav", "a_const",
                      "nu0",   "nu",    "kappa_tilde", "eta", "x_m", "delta", "upper", "kappa0"};
  for (double mu : mus) {
    FittedConstants fc = fit_constants(g, mu, cfg.gn_samples, cfg.embed_samples, cfg.seed);
    const auto& t = fc.thresholds;
    const auto& c = fc.chain;
    rep.runs.add({mu, fc.domain.c_p, fc.domain.c_omega, c.c1, c.c2, c.c_half, c.c_eighth, c.c_unaunav, c.a_const,
                  t.nu0, t.nu, t.kappa_tilde, t.eta, t.x_m, t.delta, t.upper, t.kappa0});
    add_constant_entries(rep, fc, "mu" + format_double(mu) + "_");
    OdiPolynomial p = t.polynomial(t.kappa_tilde);
    bool ok = nu_kappa_condition(t.nu, t.kappa_tilde, t.a_const, t.c_p, t.omega_vol, mu) && t.x_m <= t.delta &&
              t.delta <= t.upper && t.kappa0 <= 0.125 && std::abs(p_eval(p, t.delta)) <= 1e-10;
    verdict(rep, "consistent_mu" + format_double(mu), ok, t.delta, 0.0, "condition at kappa_tilde and ordering");
  }
  return rep;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"decay",    "bounds",    "absorbing", "eps_limit",
                                              "smallness", "ddelta",   "semigroup", "thresholds"};
  return names;
}

ExperimentReport run_experiment(const std::string& name, const RunConfig& cfg) {
  if (name == "decay") return run_decay(cfg);
  if (name == "bounds") return run_bound_sweep(cfg);
  if (name == "absorbing") return run_absorbing(cfg);
  if (name == "eps_limit") return run_eps_limit(cfg);
  if (name == "smallness") return run_smallness(cfg);
  if (name == "ddelta") return run_ddelta(cfg);
  if (name == "semigroup") return run_semigroup(cfg);
  if (name == "thresholds") return run_thresholds(cfg);
  fail(ErrorCode::InvalidArgument, "unknown experiment '" + name + "'");
}

// ---------------------------------------------------------------- plotting

std::string plot_script() {
  return R"PY(#!/usr/bin/env python3
# Plots every trace CSV in the directory given on the command line.
import csv
import pathlib
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

COLUMNS = ["mass_u", "y", "sup_u", "sup_grad_v", "energy", "eps_theta"]


def read(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return rows


def main():
    root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else ".")
    for path in sorted(root.glob("*.csv")):
        rows = read(path)
        if not rows or "t" not in rows[0] or "mass_u" not in rows[0]:
            continue
        t = [float(r["t"]) for r in rows]
        fig, axes = plt.subplots(2, 3, figsize=(12, 6))
        for ax, col in zip(axes.flat, COLUMNS):
            ax.plot(t, [float(r[col]) for r in rows])
            ax.set_title(col)
            ax.set_xlabel("t")
        fig.suptitle(path.stem)
        fig.tight_layout()
        fig.savefig(path.with_suffix(".png"), dpi=100)
        plt.close(fig)


if __name__ == "__main__":
    main()
)PY";
}

std::filesystem::path write_plot_script(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto path = dir / "plot_traces.py";
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << plot_script();
  return path;
}

}  // namespace ksl

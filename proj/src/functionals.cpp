// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ksl/functionals.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace ksl {

namespace {

using Col = double FunctionalRecord::*;

struct Column {
  const char* name;
  Col ptr;
};

constexpr Column kColumns[] = {
    {"t", &FunctionalRecord::t},
    {"mass_u", &FunctionalRecord::mass_u},
    {"mass_v", &FunctionalRecord::mass_v},
    {"u_l2sq", &FunctionalRecord::u_l2sq},
    {"v_l2sq", &FunctionalRecord::v_l2sq},
    {"grad_v_l2sq", &FunctionalRecord::grad_v_l2sq},
    {"lap_v_l2sq", &FunctionalRecord::lap_v_l2sq},
    {"grad_v_l4", &FunctionalRecord::grad_v_l4},
    {"grad_v_l6", &FunctionalRecord::grad_v_l6},
    {"y", &FunctionalRecord::y},
    {"entropy", &FunctionalRecord::entropy},
    {"dissipation", &FunctionalRecord::dissipation},
    {"u2log", &FunctionalRecord::u2log},
    {"eps_theta", &FunctionalRecord::eps_theta},
    {"sup_u", &FunctionalRecord::sup_u},
    {"sup_v", &FunctionalRecord::sup_v},
    {"sup_grad_v", &FunctionalRecord::sup_grad_v},
    {"energy", &FunctionalRecord::energy},
    {"eps_theta_log", &FunctionalRecord::eps_theta_log},
};
constexpr std::size_t kNumColumns = std::size(kColumns);

// int |grad u|^2 / (1+u) with the face gradient and the face-averaged u.
double face_dissipation(const Field& u) {
  const Grid& g = u.grid;
  FaceVector du = face_gradient(u);
  double sum = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    const std::size_t stride = g.stride(a);
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
      auto c = g.unravel(idx);
      if (c[a] == 0) continue;
      double d = du.comp[a][du.face_index(a, c[0], c[1], c[2])];
      double avg = 0.5 * (u.values[idx] + u.values[idx - stride]);
      sum += d * d / (1.0 + avg);
    }
  }
  return sum * g.cell_volume();
}

}  // namespace

const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& c : kColumns) v.emplace_back(c.name);
    return v;
  }();
  return names;
}

double& record_field(FunctionalRecord& r, std::size_t column) { return r.*kColumns[column].ptr; }
double record_field(const FunctionalRecord& r, std::size_t column) { return r.*kColumns[column].ptr; }

FunctionalRecord compute_record(const State& s) {
  const Field& u = s.u;
  const Field& v = s.v;
  const Grid& g = u.grid;
  const double vol = g.cell_volume();
  const double theta = s.params.theta_for(g.dim());
  const double eps = s.params.eps;

  Field gv2 = grad_sq(v);
  Field lap = laplacian(v);

  FunctionalRecord r;
  r.t = s.t;
  double gmax = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double ui = u.values[i];
    const double vi = v.values[i];
    const double q = gv2.values[i];
    const double l1 = std::log1p(ui);
    r.mass_u += ui;
    r.mass_v += vi;
    r.u_l2sq += ui * ui;
    r.v_l2sq += vi * vi;
    r.grad_v_l2sq += q;
    r.lap_v_l2sq += lap.values[i] * lap.values[i];
    r.grad_v_l4 += q * q;
    r.grad_v_l6 += q * q * q;
    r.entropy += (1.0 + ui) * l1;
    r.u2log += ui * ui * l1;
    if (eps > 0.0) {
      double ut = std::pow(std::max(ui, 0.0), theta);
      r.eps_theta += ut;
      r.eps_theta_log += ut * l1;
    }
    gmax = std::max(gmax, q);
  }
  for (double FunctionalRecord::*c :
       {&FunctionalRecord::mass_u, &FunctionalRecord::mass_v, &FunctionalRecord::u_l2sq,
        &FunctionalRecord::v_l2sq, &FunctionalRecord::grad_v_l2sq, &FunctionalRecord::lap_v_l2sq,
        &FunctionalRecord::grad_v_l4, &FunctionalRecord::grad_v_l6, &FunctionalRecord::entropy,
        &FunctionalRecord::u2log, &FunctionalRecord::eps_theta, &FunctionalRecord::eps_theta_log})
    r.*c *= vol;
  r.eps_theta *= eps;
  r.eps_theta_log *= eps;
  r.y = r.u_l2sq + r.grad_v_l4;
  r.dissipation = face_dissipation(u);
  r.sup_u = u.max_abs();
  r.sup_v = v.max_abs();
  r.sup_grad_v = std::sqrt(gmax);
  r.energy = r.grad_v_l2sq + r.mass_u / s.params.mu;
  return r;
}

void Trace::append(const FunctionalRecord& r) {
  if (!records.empty() && !(r.t > records.back().t)) {
    std::ostringstream os;
    os << "trace times must increase strictly: " << r.t << " after " << records.back().t;
    fail(ErrorCode::InvalidArgument, os.str());
  }
  records.push_back(r);
}

Trace record_run(const Stepper& st, const State& s0, double t_end, double cadence,
                 int snapshot_every) {
  Trace tr;
  tr.meta.params = s0.params;
  tr.meta.grid = s0.u.grid;
  tr.meta.dt = st.config().dt;
  tr.meta.cadence = cadence;
  long k = 0;
  st.run(s0, t_end, cadence, [&](const State& s) {
    tr.append(compute_record(s));
    if (snapshot_every > 0 && k % snapshot_every == 0) tr.snapshots.push_back({s.t, s.u, s.v});
    ++k;
  });
  return tr;
}

// ---------------------------------------------------------------- bounds

bool BoundReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.pass; });
}

const BoundCheck* BoundReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

void add_check(BoundReport& rep, std::string name, double theoretical, double observed,
               double tolerance, std::string note) {
  BoundCheck c;
  c.name = std::move(name);
  c.theoretical = theoretical;
  c.observed = observed;
  c.margin = theoretical - observed;
  c.tolerance = tolerance;
  c.pass = c.margin >= -tolerance;
  c.note = std::move(note);
  rep.checks.push_back(std::move(c));
}

double trapezoid(const std::vector<FunctionalRecord>& recs, double FunctionalRecord::*col,
                 std::size_t upto) {
  upto = std::min(upto, recs.size() ? recs.size() - 1 : 0);
  double s = 0.0;
  for (std::size_t k = 1; k <= upto && k < recs.size(); ++k)
    s += 0.5 * (recs[k].t - recs[k - 1].t) * (recs[k].*col + recs[k - 1].*col);
  return s;
}

double equi_constant(const ModelParams& p, double volume, double mass_u0, double energy0,
                     double entropy0, double T) {
  const double kp = p.kappa_plus();
  const double mu = p.mu;
  const double m0 = std::max(mass_u0, kp * volume / mu);
  const double u2 = (kp * m0 * T + mass_u0) / mu;
  const double lap = kp / mu * m0 * T + energy0;
  const double grad = T * std::max(energy0, (kp + 1.0) * m0 / mu);
  return (kp + 0.5) * u2 + m0 + 0.5 * lap + 0.5 * grad + entropy0;
}

namespace {

// Adds the worst point of theory(k) >= obs(k) over the trace.
void worst_over_trace(BoundReport& rep, const std::string& name, const std::vector<double>& theory,
                      const std::vector<double>& obs, const BoundOptions& opt) {
  std::size_t worst = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < theory.size(); ++k) {
    double slack = theory[k] - obs[k] + opt.rel_tol * std::abs(theory[k]);
    if (slack < worst_slack || std::isnan(slack)) {
      worst_slack = slack;
      worst = k;
      if (std::isnan(slack)) break;
    }
  }
  add_check(rep, name, theory[worst], obs[worst],
            opt.rel_tol * std::abs(theory[worst]) + opt.abs_tol);
}

}  // namespace

BoundReport verify_apriori_bounds(const Trace& tr, const BoundOptions& opt) {
  require(!tr.records.empty(), "bound verification needs a nonempty trace");
  const auto& R = tr.records;
  const ModelParams& p = tr.meta.params;
  require(p.mu > 0.0, "trace metadata lacks a positive mu");
  const double vol = tr.meta.grid.volume();
  require(vol > 0.0, "trace metadata lacks the domain volume");
  for (const auto& r : R) {
    for (std::size_t c = 0; c < kNumColumns; ++c)
      if (!std::isfinite(record_field(r, c)))
        fail(ErrorCode::InvalidArgument,
             std::string("trace has a missing or non-finite value in column ") + kColumns[c].name);
  }

  const double kp = p.kappa_plus();
  const double mu = p.mu;
  const double m0 = R.front().mass_u;
  const double M0 = std::max(m0, kp * vol / mu);
  const double t0 = R.front().t;
  const std::size_t n = R.size();

  std::vector<double> th(n), ob(n);
  BoundReport rep;

  for (std::size_t k = 0; k < n; ++k) th[k] = M0, ob[k] = R[k].mass_u;
  worst_over_trace(rep, "a_mass_u", th, ob, opt);

  double cum_u2 = 0.0, cum_eps = 0.0, cum_v2 = 0.0, cum_lap = 0.0, cum_g = 0.0;
  std::vector<double> th_b(n), ob_b(n), th_d(n), ob_d(n), th_f(n), ob_f(n), th_g(n), ob_g(n);
  const double E0 = R.front().energy;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) {
      double dt = R[k].t - R[k - 1].t;
      auto tz = [&](double FunctionalRecord::*c) { return 0.5 * dt * (R[k].*c + R[k - 1].*c); };
      cum_u2 += tz(&FunctionalRecord::u_l2sq);
      cum_eps += tz(&FunctionalRecord::eps_theta);
      cum_v2 += tz(&FunctionalRecord::v_l2sq);
      cum_lap += tz(&FunctionalRecord::lap_v_l2sq);
      cum_g += 0.5 * tz(&FunctionalRecord::dissipation) + mu * tz(&FunctionalRecord::u2log) +
               tz(&FunctionalRecord::eps_theta_log);
    }
    const double t = R[k].t - t0;
    th_b[k] = kp / mu * M0 * t + m0 / mu;
    ob_b[k] = cum_u2 + cum_eps / mu;
    th_d[k] = kp / mu * M0 * t + m0 / mu + R.front().v_l2sq;
    ob_d[k] = R[k].v_l2sq + cum_v2;
    th_f[k] = kp / mu * M0 * t + E0;
    ob_f[k] = cum_lap;
    th_g[k] = equi_constant(p, vol, m0, E0, R.front().entropy, t);
    ob_g[k] = cum_g;
  }
  // (b) and (g) bound integrals over the whole window: checked at its end.
  auto at_end = [&](const std::string& name, double th_T, double ob_T) {
    add_check(rep, name, th_T, ob_T, opt.rel_tol * std::abs(th_T) + opt.abs_tol);
  };
  at_end("b_u_l2_time_integral", th_b.back(), ob_b.back());

  const double vcap = std::max(M0, R.front().mass_v);
  for (std::size_t k = 0; k < n; ++k) th[k] = vcap, ob[k] = R[k].mass_v;
  worst_over_trace(rep, "c_mass_v", th, ob, opt);

  worst_over_trace(rep, "d_v_l2", th_d, ob_d, opt);

  const double ecap = std::max(E0, (kp + 1.0) * M0 / mu);
  for (std::size_t k = 0; k < n; ++k) th[k] = ecap, ob[k] = R[k].energy;
  worst_over_trace(rep, "e_energy", th, ob, opt);

  worst_over_trace(rep, "f_lap_v_time_integral", th_f, ob_f, opt);
  at_end("g_log_weighted_dissipation", th_g.back(), ob_g.back());

  if (p.kappa <= 0.0) {
    double rise = 0.0;
    for (std::size_t k = 1; k < n; ++k) rise = std::max(rise, R[k].mass_u - R[k - 1].mass_u);
    add_check(rep, "mass_nonincreasing", 0.0, rise, 1e-9 * std::max(1.0, m0) + opt.abs_tol);
  }
  return rep;
}

// ---------------------------------------------------------------- weak form

TestFunction cosine_test_function(const Grid& g, double T) {
  require(T > 0.0, "test function horizon must be positive");
  const int dim = g.dim();
  std::array<double, 3> k{};
  for (int a = 0; a < dim; ++a) k[a] = std::numbers::pi / g.extent(a);
  TestFunction f;
  f.psi = [T](double t) { return (1.0 - t / T) * (1.0 - t / T); };
  f.dpsi = [T](double t) { return -2.0 / T * (1.0 - t / T); };
  f.chi = [k, dim](const Point& x) {
    double p = 1.0;
    for (int a = 0; a < dim; ++a) p *= std::cos(k[a] * x[a]);
    return p;
  };
  f.grad_chi = [k, dim](const Point& x) {
    Point gr{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
      double p = -k[a] * std::sin(k[a] * x[a]);
      for (int b = 0; b < dim; ++b)
        if (b != a) p *= std::cos(k[b] * x[b]);
      gr[a] = p;
    }
    return gr;
  };
  f.lap_chi = [k, dim](const Point& x) {
    double p = 1.0, s = 0.0;
    for (int a = 0; a < dim; ++a) {
      p *= std::cos(k[a] * x[a]);
      s += k[a] * k[a];
    }
    return -s * p;
  };
  return f;
}

WeakResidual weak_residual(const Trace& tr, const TestFunction& phi) {
  const auto& S = tr.snapshots;
  require(S.size() >= 2, "weak residual needs at least two stored snapshots");
  const double T = S.back().t;
  const double scale = std::max(1.0, std::abs(phi.psi(S.front().t)));
  if (std::abs(phi.psi(T)) > 1e-12 * scale) {
    std::ostringstream os;
    os << "test function must vanish at the final snapshot time t=" << T;
    fail(ErrorCode::InvalidArgument, os.str());
  }
  const Grid& g = S.front().u.grid;
  const ModelParams& p = tr.meta.params;
  const double theta = p.theta_for(g.dim());
  const int dim = g.dim();

  std::vector<double> chi(g.size()), lchi(g.size());
  std::vector<Point> gchi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    Point x = g.center(i);
    chi[i] = phi.chi(x);
    lchi[i] = phi.lap_chi(x);
    gchi[i] = phi.grad_chi(x);
  }

  const std::size_t n = S.size();
  std::vector<double> au(n), bu(n), av(n), bv(n);
  double dt_max = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Field& u = S[k].u;
    const Field& v = S[k].v;
    VectorField gv = gradient(v);
    double uchi = 0, ulap = 0, uflux = 0, u2 = 0, uth = 0, vchi = 0, vgrad = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double ui = u.values[i];
      uchi += ui * chi[i];
      ulap += ui * lchi[i];
      double dot = 0.0;
      for (int a = 0; a < dim; ++a) dot += gv[a].values[i] * gchi[i][a];
      uflux += ui * dot;
      vgrad += dot;
      u2 += ui * ui * chi[i];
      if (p.eps > 0.0) uth += std::pow(std::max(ui, 0.0), theta) * chi[i];
      vchi += v.values[i] * chi[i];
    }
    const double w = g.cell_volume();
    const double ps = phi.psi(S[k].t), dps = phi.dpsi(S[k].t);
    au[k] = dps * uchi * w;
    av[k] = dps * vchi * w;
    bu[k] = ps * w * (ulap + uflux + p.kappa * uchi - p.mu * u2 - p.eps * uth);
    bv[k] = ps * w * (-vgrad - vchi + uchi);
    if (k > 0) dt_max = std::max(dt_max, S[k].t - S[k - 1].t);
  }
  auto trap = [&](const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t k = 1; k < n; ++k) s += 0.5 * (S[k].t - S[k - 1].t) * (f[k] + f[k - 1]);
    return s;
  };
  const double w = g.cell_volume();
  double u0chi = 0.0, v0chi = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    u0chi += S.front().u.values[i] * chi[i];
    v0chi += S.front().v.values[i] * chi[i];
  }
  const double ps0 = phi.psi(S.front().t);
  WeakResidual res;
  res.r_u = std::abs(-trap(au) - ps0 * u0chi * w - trap(bu));
  res.r_v = std::abs(-trap(av) - ps0 * v0chi * w - trap(bv));
  res.h = g.min_spacing();
  res.dt = dt_max;
  return res;
}

// ---------------------------------------------------------------- files

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) fail(ErrorCode::Internal, "number formatting failed");
  return std::string(buf, end);
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<FunctionalRecord>& recs) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorCode::Io, "cannot open trace for writing: " + path.string());
  for (std::size_t c = 0; c < kNumColumns; ++c) os << (c ? "," : "") << kColumns[c].name;
  os << '\n';
  for (const auto& r : recs) {
    for (std::size_t c = 0; c < kNumColumns; ++c) os << (c ? "," : "") << format_double(record_field(r, c));
    os << '\n';
  }
  if (!os) fail(ErrorCode::Io, "failed writing trace: " + path.string());
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) {
    while (!cur.empty() && (cur.back() == '\r' || cur.back() == ' ')) cur.pop_back();
    std::size_t b = cur.find_first_not_of(' ');
    out.push_back(b == std::string::npos ? std::string() : cur.substr(b));
  }
  return out;
}

}  // namespace

std::vector<FunctionalRecord> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::Io, "cannot open trace: " + path.string());
  std::string line;
  if (!std::getline(is, line)) fail(ErrorCode::InvalidArgument, "empty trace file: " + path.string());
  auto header = split_csv(line);
  std::vector<int> pos(kNumColumns, -1);
  for (std::size_t c = 0; c < kNumColumns; ++c) {
    auto it = std::find(header.begin(), header.end(), kColumns[c].name);
    if (it == header.end())
      fail(ErrorCode::InvalidArgument,
           std::string("trace is missing required column '") + kColumns[c].name + "': " + path.string());
    pos[c] = static_cast<int>(it - header.begin());
  }
  std::vector<FunctionalRecord> recs;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv(line);
    FunctionalRecord r;
    for (std::size_t c = 0; c < kNumColumns; ++c) {
      const auto idx = static_cast<std::size_t>(pos[c]);
      double x = std::numeric_limits<double>::quiet_NaN();
      if (idx < cells.size() && !cells[idx].empty()) {
        const std::string& s = cells[idx];
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
        if (ec != std::errc{} || p != s.data() + s.size()) {
          std::ostringstream os;
          os << "bad number '" << s << "' in column " << kColumns[c].name << " at line " << lineno;
          fail(ErrorCode::InvalidArgument, os.str());
        }
      }
      record_field(r, c) = x;
    }
    recs.push_back(r);
  }
  return recs;
}

void write_trace_meta(const std::filesystem::path& path, const TraceMeta& m) {
  nlohmann::ordered_json j;
  j["kappa"] = m.params.kappa;
  j["mu"] = m.params.mu;
  j["eps"] = m.params.eps;
  j["theta"] = m.params.theta_for(m.grid.dim());
  j["dim"] = m.grid.dim();
  std::vector<double> ext;
  std::vector<int> cells;
  for (int a = 0; a < m.grid.dim(); ++a) {
    ext.push_back(m.grid.extent(a));
    cells.push_back(m.grid.cells(a));
  }
  j["extents"] = ext;
  j["cells"] = cells;
  j["dt"] = m.dt;
  j["cadence"] = m.cadence;
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorCode::Io, "cannot open trace metadata for writing: " + path.string());
  os << j.dump(2) << '\n';
}

TraceMeta read_trace_meta(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::Io, "cannot open trace metadata: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
    TraceMeta m;
    m.params.kappa = j.at("kappa").get<double>();
    m.params.mu = j.at("mu").get<double>();
    m.params.eps = j.at("eps").get<double>();
    m.params.theta = j.at("theta").get<double>();
    auto ext = j.at("extents").get<std::vector<double>>();
    auto cells = j.at("cells").get<std::vector<int>>();
    m.grid = build_grid(j.at("dim").get<int>(), ext, cells);
    m.dt = j.value("dt", 0.0);
    m.cadence = j.value("cadence", 0.0);
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, "malformed trace metadata " + path.string() + ": " + e.what());
  }
}

}  // namespace ksl

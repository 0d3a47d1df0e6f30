// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ksl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "ksl/functionals.hpp"

namespace ksl {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::string t = trim(v);
  double x = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    fail(ErrorCode::InvalidArgument, "config key '" + key + "': not a number: '" + v + "'");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  std::string t = trim(v);
  long long x = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    fail(ErrorCode::InvalidArgument, "config key '" + key + "': not an integer: '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  fail(ErrorCode::InvalidArgument, "config key '" + key + "': not a boolean: '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
  return out;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>)
      s += format_double(xs[i]);
    else
      s += std::to_string(xs[i]);
  }
  return s;
}

struct KeyDef {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

KeyDef num(std::string name, double RunConfig::*m) {
  return {name, [m, name](RunConfig& c, const std::string& v) { c.*m = to_double(name, v); },
          [m](const RunConfig& c) { return format_double(c.*m); }};
}

KeyDef integer(std::string name, int RunConfig::*m) {
  return {name, [m, name](RunConfig& c, const std::string& v) { c.*m = static_cast<int>(to_int(name, v)); },
          [m](const RunConfig& c) { return std::to_string(c.*m); }};
}

KeyDef list(std::string name, std::vector<double> RunConfig::*m) {
  return {name, [m, name](RunConfig& c, const std::string& v) { c.*m = to_doubles(name, v); },
          [m](const RunConfig& c) { return join(c.*m); }};
}

KeyDef init(std::string name, InitialSpec RunConfig::*spec, int field) {
  return {name,
          [=](RunConfig& c, const std::string& v) {
            InitialSpec& s = c.*spec;
            if (field == 0) {
              std::string t = trim(v);
              if (t != "flat" && t != "cosine" && t != "bump" && t != "random")
                fail(ErrorCode::InvalidArgument, "config key '" + name + "': unknown shape '" + t + "'");
              s.shape = t;
            } else {
              (field == 1 ? s.base : s.amp) = to_double(name, v);
            }
          },
          [=](const RunConfig& c) {
            const InitialSpec& s = c.*spec;
            return field == 0 ? s.shape : format_double(field == 1 ? s.base : s.amp);
          }};
}

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = [] {
    std::vector<KeyDef> t;
    t.push_back({"dim", [](RunConfig& c, const std::string& v) { c.dim = static_cast<int>(to_int("dim", v)); },
                 [](const RunConfig& c) { return std::to_string(c.dim); }});
    t.push_back(list("extents", &RunConfig::extents));
    t.push_back({"cells",
                 [](RunConfig& c, const std::string& v) {
                   c.cells.clear();
                   for (const auto& s : split_list(v)) c.cells.push_back(static_cast<int>(to_int("cells", s)));
                 },
                 [](const RunConfig& c) { return join(c.cells); }});
    t.push_back({"kappa", [](RunConfig& c, const std::string& v) { c.params.kappa = to_double("kappa", v); },
                 [](const RunConfig& c) { return format_double(c.params.kappa); }});
    t.push_back({"mu", [](RunConfig& c, const std::string& v) { c.params.mu = to_double("mu", v); },
                 [](const RunConfig& c) { return format_double(c.params.mu); }});
    t.push_back({"eps", [](RunConfig& c, const std::string& v) { c.params.eps = to_double("eps", v); },
                 [](const RunConfig& c) { return format_double(c.params.eps); }});
    t.push_back({"theta", [](RunConfig& c, const std::string& v) { c.params.theta = to_double("theta", v); },
                 [](const RunConfig& c) { return format_double(c.params.theta); }});
    t.push_back({"dt", [](RunConfig& c, const std::string& v) { c.stepper.dt = to_double("dt", v); },
                 [](const RunConfig& c) { return format_double(c.stepper.dt); }});
    t.push_back({"safety", [](RunConfig& c, const std::string& v) { c.stepper.safety = to_double("safety", v); },
                 [](const RunConfig& c) { return format_double(c.stepper.safety); }});
    t.push_back({"solver_tol",
                 [](RunConfig& c, const std::string& v) { c.stepper.solver_tol = to_double("solver_tol", v); },
                 [](const RunConfig& c) { return format_double(c.stepper.solver_tol); }});
    t.push_back({"blowup_ceiling",
                 [](RunConfig& c, const std::string& v) { c.stepper.blowup_ceiling = to_double("blowup_ceiling", v); },
                 [](const RunConfig& c) { return format_double(c.stepper.blowup_ceiling); }});
    t.push_back({"diffusion_limit",
                 [](RunConfig& c, const std::string& v) { c.stepper.diffusion_limit = to_bool("diffusion_limit", v); },
                 [](const RunConfig& c) { return std::string(c.stepper.diffusion_limit ? "true" : "false"); }});
    t.push_back(num("t_end", &RunConfig::t_end));
    t.push_back(num("cadence", &RunConfig::cadence));
    t.push_back(integer("snapshot_every", &RunConfig::snapshot_every));
    t.push_back(init("u0_shape", &RunConfig::u0, 0));
    t.push_back(init("u0_base", &RunConfig::u0, 1));
    t.push_back(init("u0_amp", &RunConfig::u0, 2));
    t.push_back(init("v0_shape", &RunConfig::v0, 0));
    t.push_back(init("v0_base", &RunConfig::v0, 1));
    t.push_back(init("v0_amp", &RunConfig::v0, 2));
    t.push_back({"seed",
                 [](RunConfig& c, const std::string& v) {
                   long long s = to_int("seed", v);
                   require(s >= 0, "config key 'seed': must be nonnegative");
                   c.seed = static_cast<std::uint64_t>(s);
                 },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    t.push_back({"output", [](RunConfig& c, const std::string& v) { c.output = trim(v); },
                 [](const RunConfig& c) { return c.output; }});
    t.push_back(list("kappas", &RunConfig::kappas));
    t.push_back(list("mus", &RunConfig::mus));
    t.push_back(list("thresholds", &RunConfig::thresholds));
    t.push_back(integer("ensemble", &RunConfig::ensemble));
    t.push_back(list("kappa_fractions", &RunConfig::kappa_fractions));
    t.push_back(num("horizon", &RunConfig::horizon));
    t.push_back(num("spread_tol", &RunConfig::spread_tol));
    t.push_back(integer("j_max", &RunConfig::j_max));
    t.push_back(num("eps_tol", &RunConfig::eps_tol));
    t.push_back(num("barrier_tol", &RunConfig::barrier_tol));
    t.push_back(num("bound_tol", &RunConfig::bound_tol));
    t.push_back(num("ledger_tol", &RunConfig::ledger_tol));
    t.push_back(integer("gn_samples", &RunConfig::gn_samples));
    t.push_back(integer("embed_samples", &RunConfig::embed_samples));
    t.push_back(list("q_list", &RunConfig::q_list));
    t.push_back(integer("trials", &RunConfig::trials));
    t.push_back(num("p_exp", &RunConfig::p_exp));
    t.push_back(num("c3", &RunConfig::c3));
    t.push_back(num("c4", &RunConfig::c4));
    t.push_back(num("c5", &RunConfig::c5));
    t.push_back(num("c8", &RunConfig::c8));
    return t;
  }();
  return table;
}

const KeyDef& find_key(const std::string& key) {
  for (const auto& k : key_table())
    if (k.name == key) return k;
  fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
}

}  // namespace

Grid RunConfig::grid() const {
  require(static_cast<int>(extents.size()) == dim, "config: extents must list one value per dimension");
  require(static_cast<int>(cells.size()) == dim, "config: cells must list one value per dimension");
  return build_grid(dim, extents, cells);
}

void RunConfig::validate() const {
  Grid g = grid();
  params.validate(g.dim());
  require(t_end > 0.0, "config: t_end must be positive");
  require(cadence > 0.0 && cadence <= t_end, "config: cadence must lie in (0, t_end]");
  require(snapshot_every >= 0, "config: snapshot_every must be nonnegative");
  require(stepper.dt > 0.0 && stepper.safety > 0.0 && stepper.safety <= 1.0, "config: invalid stepper settings");
  require(ensemble >= 1, "config: ensemble must be at least 1");
  require(j_max >= 1, "config: j_max must be at least 1");
  require(trials >= 10, "config: trials must be at least 10");
  for (double m : mus) require(m > 0.0, "config: mus must be positive");
  for (double f : kappa_fractions) require(f > 0.0 && f < 1.0, "config: kappa_fractions must lie in (0,1)");
  for (double t : thresholds) require(t > 0.0, "config: thresholds must be positive");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& k : key_table()) n.push_back(k.name);
    return n;
  }();
  return names;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  find_key(key).set(cfg, value);
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) { return find_key(key).get(cfg); }

RunConfig parse_config(std::istream& in, const std::string& origin) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::InvalidArgument, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    try {
      set_config_value(cfg, key, trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      fail(e.code(), origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config " + path.string());
  return parse_config(in, path.string());
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& args) {
  for (const auto& a : args) {
    require(a.rfind("--", 0) == 0, "override must look like --key=value: '" + a + "'");
    auto eq = a.find('=');
    require(eq != std::string::npos, "override must look like --key=value: '" + a + "'");
    set_config_value(cfg, a.substr(2, eq - 2), a.substr(eq + 1));
  }
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : key_table()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

Field initial_field(const Grid& g, const InitialSpec& spec, std::uint64_t seed) {
  Field shape(g);
  if (spec.shape == "flat") {
    // zero shape
  } else if (spec.shape == "cosine") {
    shape = Field::sample(g, [&](const Point& x) {
      double s = 1.0;
      for (int a = 0; a < g.dim(); ++a) s *= std::cos(std::numbers::pi * x[a] / g.extent(a));
      return s;
    });
  } else if (spec.shape == "bump") {
    shape = Field::sample(g, [&](const Point& x) {
      double r2 = 0.0;
      for (int a = 0; a < g.dim(); ++a) {
        double w = 0.1 * g.extent(a);
        double d = x[a] - 0.5 * g.extent(a);
        r2 += d * d / (w * w);
      }
      return std::exp(-0.5 * r2);
    });
  } else if (spec.shape == "random") {
    auto pairs = neumann_eigenpairs(g, std::min<std::size_t>(10, g.size()));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t j = 1; j < pairs.size(); ++j) {
      double c = normal(rng);
      for (std::size_t i = 0; i < shape.size(); ++i) shape.values[i] += c * pairs[j].field.values[i];
    }
    double m = shape.max_abs();
    if (m > 0.0) shape *= 1.0 / m;
  } else {
    fail(ErrorCode::InvalidArgument, "unknown initial shape '" + spec.shape + "'");
  }
  Field f(g, spec.base);
  for (std::size_t i = 0; i < f.size(); ++i) f.values[i] += spec.amp * shape.values[i];
  return f;
}

State initial_state(const RunConfig& cfg) {
  cfg.validate();
  Grid g = cfg.grid();
  State s;
  s.params = cfg.params;
  s.u = initial_field(g, cfg.u0, cfg.seed);
  s.v = initial_field(g, cfg.v0, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  require(s.u.min() >= 0.0, "initial u must be nonnegative");
  require(s.v.min() >= 0.0, "initial v must be nonnegative");
  if (cfg.params.eps > 0.0) std::tie(s.u, s.v) = make_initial_data(s.u, s.v, cfg.params.eps);
  return s;
}

}  // namespace ksl

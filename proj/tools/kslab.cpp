// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the library only through ksl.h.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ksl/ksl.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFailed = 2;

struct Failure {
  std::string msg;
};

void check(ksl_status s, const std::string& what) {
  if (s != KSL_OK) throw Failure{what + ": " + ksl_last_error()};
}

using ConfigPtr = std::unique_ptr<ksl_config, decltype(&ksl_config_free)>;
using TracePtr = std::unique_ptr<ksl_trace, decltype(&ksl_trace_free)>;
using ReportPtr = std::unique_ptr<ksl_report, decltype(&ksl_report_free)>;

ConfigPtr make_config(const std::string& path, const std::vector<std::string>& extras) {
  ksl_config* c = nullptr;
  if (path.empty())
    check(ksl_config_new(&c), "config");
  else
    check(ksl_config_load(path.c_str(), &c), "config");
  ConfigPtr cfg(c, ksl_config_free);
  for (const auto& a : extras) {
    auto eq = a.find('=');
    if (a.rfind("--", 0) != 0 || eq == std::string::npos)
      throw Failure{"unexpected argument '" + a + "' (overrides take the form --key=value)"};
    std::string key = a.substr(2, eq - 2), value = a.substr(eq + 1);
    check(ksl_config_set(cfg.get(), key.c_str(), value.c_str()), "override " + key);
  }
  return cfg;
}

std::string config_value(const ksl_config* cfg, const char* key) {
  size_t n = 0;
  check(ksl_config_get(cfg, key, nullptr, 0, &n), key);
  std::string s(n, '\0');
  check(ksl_config_get(cfg, key, s.data(), n, nullptr), key);
  s.resize(n - 1);
  return s;
}

int print_report(const ksl_report* rep, const std::string& out) {
  size_t n = ksl_report_count(rep);
  for (size_t i = 0; i < n; ++i) {
    const char *crit = nullptr, *detail = nullptr;
    int pass = 0;
    double value = 0, tol = 0;
    check(ksl_report_verdict(rep, i, &crit, &pass, &value, &tol, &detail), "verdict");
    std::printf("%s  %-40s value=%-14.6g tol=%-12.6g %s\n", pass ? "PASS" : "FAIL", crit, value, tol, detail);
  }
  size_t nt = ksl_report_threshold_count(rep);
  for (size_t i = 0; i < nt; ++i) {
    const char *name = nullptr, *prov = nullptr;
    double value = 0;
    check(ksl_report_threshold(rep, i, &name, &value, &prov), "threshold");
    std::printf("      %-28s %-16.8g [%s]\n", name, value, prov);
  }
  check(ksl_report_write(rep, out.c_str()), "write report");
  bool ok = ksl_report_passed(rep);
  std::printf("%s: %s (%zu verdicts, written to %s)\n", ksl_report_name(rep), ok ? "pass" : "FAIL", n, out.c_str());
  return ok ? kExitOk : kExitFailed;
}

int run_named(const std::string& name, const std::string& cfg_path, const std::vector<std::string>& extras,
              std::string out) {
  ConfigPtr cfg = make_config(cfg_path, extras);
  if (out.empty()) out = config_value(cfg.get(), "output");
  ksl_report* r = nullptr;
  check(ksl_experiment(name.c_str(), cfg.get(), &r), name);
  ReportPtr rep(r, ksl_report_free);
  return print_report(rep.get(), out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kslab: numerical lab for the logistic Keller-Segel system"};
  app.set_version_flag("--version", std::string(ksl_version()));
  app.require_subcommand(1);

  std::string cfg_path, out;
  std::string name, trace_dir;
  double tol = 0.05;
  bool dump = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", cfg_path, "config file (key = value lines)")->check(CLI::ExistingFile);
    sub->add_option("-o,--output", out, "output directory (default: the config's output key)");
    sub->allow_extras();
    sub->footer("Any config key can be overridden with --key=value.");
  };

  auto* sim = app.add_subcommand("simulate", "run one simulation and write its trace");
  add_common(sim);
  sim->add_flag("--dump-config", dump, "print the effective config and exit");

  auto* ver = app.add_subcommand("verify", "check the a-priori bounds on a written trace");
  ver->add_option("trace", trace_dir, "directory holding trace.csv and trace.json")->required();
  ver->add_option("--tol", tol, "relative tolerance")->check(CLI::NonNegativeNumber);
  ver->add_option("-o,--output", out, "output directory (default: the trace directory)");

  auto* thr = app.add_subcommand("thresholds", "fit constants and print the threshold set");
  add_common(thr);

  auto* exp = app.add_subcommand("experiment", "run a named experiment");
  std::vector<std::string> names;
  for (size_t i = 0; i < ksl_experiment_count(); ++i) names.emplace_back(ksl_experiment_name(i));
  exp->add_option("name", name, "experiment name")->required()->check(CLI::IsMember(names));
  add_common(exp);

  auto* sem = app.add_subcommand("semigroup", "fit the heat semigroup smoothing rates");
  add_common(sem);

  auto* plot = app.add_subcommand("plot", "write the plotting script");
  plot->add_option("-o,--output", out, "directory for plot_traces.py")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    if (*sim) {
      ConfigPtr cfg = make_config(cfg_path, sim->remaining());
      if (dump) {
        size_t n = 0;
        check(ksl_config_dump(cfg.get(), nullptr, 0, &n), "dump");
        std::string s(n, '\0');
        check(ksl_config_dump(cfg.get(), s.data(), n, nullptr), "dump");
        std::fputs(s.c_str(), stdout);
        return kExitOk;
      }
      if (out.empty()) out = config_value(cfg.get(), "output");
      ksl_trace* t = nullptr;
      check(ksl_simulate(cfg.get(), &t), "simulate");
      TracePtr tr(t, ksl_trace_free);
      check(ksl_trace_write(tr.get(), out.c_str()), "write trace");
      size_t n = ksl_trace_size(tr.get());
      double tl = 0, mass = 0, y = 0;
      check(ksl_trace_value(tr.get(), n - 1, "t", &tl), "trace");
      check(ksl_trace_value(tr.get(), n - 1, "mass_u", &mass), "trace");
      check(ksl_trace_value(tr.get(), n - 1, "y", &y), "trace");
      std::printf("simulate: %zu records to t=%g, mass_u=%.8g, y=%.8g, written to %s\n", n, tl, mass, y, out.c_str());
      return kExitOk;
    }
    if (*ver) {
      ksl_trace* t = nullptr;
      check(ksl_trace_load(trace_dir.c_str(), &t), "load trace");
      TracePtr tr(t, ksl_trace_free);
      ksl_report* r = nullptr;
      check(ksl_verify(tr.get(), tol, &r), "verify");
      ReportPtr rep(r, ksl_report_free);
      return print_report(rep.get(), out.empty() ? trace_dir : out);
    }
    if (*thr) return run_named("thresholds", cfg_path, thr->remaining(), out);
    if (*exp) return run_named(name, cfg_path, exp->remaining(), out);
    if (*sem) return run_named("semigroup", cfg_path, sem->remaining(), out);
    if (*plot) {
      check(ksl_write_plot_script(out.c_str()), "plot");
      std::printf("wrote %s/plot_traces.py; run it with the directory holding the CSVs\n", out.c_str());
      return kExitOk;
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "kslab: %s\n", f.msg.c_str());
    return kExitError;
  }
  return kExitError;
}

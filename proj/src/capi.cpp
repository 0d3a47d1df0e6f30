// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ksl/ksl.h"

#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <string>

#include "ksl/experiments.hpp"

struct ksl_config {
  ksl::RunConfig cfg;
};

struct ksl_trace {
  ksl::Trace tr;
};

struct ksl_report {
  ksl::ExperimentReport rep;
};

namespace {

thread_local std::string last_error;

ksl_status status_of(ksl::ErrorCode c) {
  switch (c) {
    case ksl::ErrorCode::InvalidArgument: return KSL_ERR_INVALID;
    case ksl::ErrorCode::Io: return KSL_ERR_IO;
    case ksl::ErrorCode::SolverFailure: return KSL_ERR_SOLVER;
    case ksl::ErrorCode::Blowup: return KSL_ERR_BLOWUP;
    case ksl::ErrorCode::Internal: return KSL_ERR_INTERNAL;
  }
  return KSL_ERR_INTERNAL;
}

ksl_status set_error(ksl_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class F>
ksl_status guarded(F&& f) {
  try {
    f();
    return KSL_OK;
  } catch (const ksl::Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return set_error(KSL_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(KSL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(KSL_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(KSL_ERR_INTERNAL, "unknown error");
  }
}

#define KSL_REQUIRE_ARG(p) \
  if (!(p)) return set_error(KSL_ERR_INVALID, std::string(__func__) + ": null argument " #p)

ksl_status copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (!buf) return KSL_OK;
  if (cap < s.size() + 1) return set_error(KSL_ERR_INVALID, "buffer too small");
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return KSL_OK;
}

}  // namespace

extern "C" {

const char* ksl_version(void) { return "1.0.0"; }

const char* ksl_last_error(void) { return last_error.c_str(); }

ksl_status ksl_config_new(ksl_config** out) {
  KSL_REQUIRE_ARG(out);
  return guarded([&] { *out = new ksl_config{}; });
}

ksl_status ksl_config_load(const char* path, ksl_config** out) {
  KSL_REQUIRE_ARG(path);
  KSL_REQUIRE_ARG(out);
  return guarded([&] { *out = new ksl_config{ksl::load_config(path)}; });
}

ksl_status ksl_config_set(ksl_config* cfg, const char* key, const char* value) {
  KSL_REQUIRE_ARG(cfg);
  KSL_REQUIRE_ARG(key);
  KSL_REQUIRE_ARG(value);
  return guarded([&] { ksl::set_config_value(cfg->cfg, key, value); });
}

ksl_status ksl_config_get(const ksl_config* cfg, const char* key, char* buf, size_t cap, size_t* needed) {
  KSL_REQUIRE_ARG(cfg);
  KSL_REQUIRE_ARG(key);
  std::string v;
  ksl_status s = guarded([&] { v = ksl::get_config_value(cfg->cfg, key); });
  return s == KSL_OK ? copy_out(v, buf, cap, needed) : s;
}

ksl_status ksl_config_dump(const ksl_config* cfg, char* buf, size_t cap, size_t* needed) {
  KSL_REQUIRE_ARG(cfg);
  std::string v;
  ksl_status s = guarded([&] { v = ksl::dump_config(cfg->cfg); });
  return s == KSL_OK ? copy_out(v, buf, cap, needed) : s;
}

void ksl_config_free(ksl_config* cfg) { delete cfg; }

ksl_status ksl_simulate(const ksl_config* cfg, ksl_trace** out) {
  KSL_REQUIRE_ARG(cfg);
  KSL_REQUIRE_ARG(out);
  return guarded([&] {
    cfg->cfg.validate();
    *out = new ksl_trace{ksl::simulate(cfg->cfg)};
  });
}

ksl_status ksl_trace_write(const ksl_trace* tr, const char* dir) {
  KSL_REQUIRE_ARG(tr);
  KSL_REQUIRE_ARG(dir);
  return guarded([&] { ksl::write_simulation(tr->tr, dir); });
}

ksl_status ksl_trace_load(const char* dir, ksl_trace** out) {
  KSL_REQUIRE_ARG(dir);
  KSL_REQUIRE_ARG(out);
  return guarded([&] {
    std::filesystem::path d(dir);
    auto t = std::make_unique<ksl_trace>();
    t->tr.meta = ksl::read_trace_meta(d / "trace.json");
    for (const auto& r : ksl::read_trace_csv(d / "trace.csv")) t->tr.append(r);
    *out = t.release();
  });
}

size_t ksl_trace_size(const ksl_trace* tr) { return tr ? tr->tr.records.size() : 0; }

ksl_status ksl_trace_value(const ksl_trace* tr, size_t row, const char* column, double* out) {
  KSL_REQUIRE_ARG(tr);
  KSL_REQUIRE_ARG(column);
  KSL_REQUIRE_ARG(out);
  if (row >= tr->tr.records.size()) return set_error(KSL_ERR_INVALID, "trace row out of range");
  const auto& cols = ksl::record_columns();
  for (std::size_t c = 0; c < cols.size(); ++c)
    if (cols[c] == column) {
      *out = ksl::record_field(tr->tr.records[row], c);
      return KSL_OK;
    }
  return set_error(KSL_ERR_INVALID, std::string("unknown trace column '") + column + "'");
}

void ksl_trace_free(ksl_trace* tr) { delete tr; }

ksl_status ksl_verify(const ksl_trace* tr, double rel_tol, ksl_report** out) {
  KSL_REQUIRE_ARG(tr);
  KSL_REQUIRE_ARG(out);
  return guarded([&] {
    ksl::require(rel_tol >= 0.0, "verify: tolerance must be nonnegative");
    ksl::BoundOptions opt;
    opt.rel_tol = rel_tol;
    *out = new ksl_report{ksl::report_from_bounds("verify", ksl::verify_apriori_bounds(tr->tr, opt))};
  });
}

ksl_status ksl_experiment(const char* name, const ksl_config* cfg, ksl_report** out) {
  KSL_REQUIRE_ARG(name);
  KSL_REQUIRE_ARG(cfg);
  KSL_REQUIRE_ARG(out);
  return guarded([&] { *out = new ksl_report{ksl::run_experiment(name, cfg->cfg)}; });
}

size_t ksl_experiment_count(void) { return ksl::experiment_names().size(); }

const char* ksl_experiment_name(size_t i) {
  const auto& n = ksl::experiment_names();
  return i < n.size() ? n[i].c_str() : nullptr;
}

const char* ksl_report_name(const ksl_report* rep) { return rep ? rep->rep.name.c_str() : nullptr; }

int ksl_report_passed(const ksl_report* rep) { return rep && rep->rep.pass() ? 1 : 0; }

size_t ksl_report_count(const ksl_report* rep) { return rep ? rep->rep.verdicts.size() : 0; }

ksl_status ksl_report_verdict(const ksl_report* rep, size_t i, const char** criterion, int* pass, double* value,
                              double* tolerance, const char** detail) {
  KSL_REQUIRE_ARG(rep);
  if (i >= rep->rep.verdicts.size()) return set_error(KSL_ERR_INVALID, "verdict index out of range");
  const auto& v = rep->rep.verdicts[i];
  if (criterion) *criterion = v.criterion.c_str();
  if (pass) *pass = v.pass ? 1 : 0;
  if (value) *value = v.value;
  if (tolerance) *tolerance = v.tolerance;
  if (detail) *detail = v.detail.c_str();
  return KSL_OK;
}

size_t ksl_report_threshold_count(const ksl_report* rep) { return rep ? rep->rep.thresholds.size() : 0; }

ksl_status ksl_report_threshold(const ksl_report* rep, size_t i, const char** name, double* value,
                                const char** provenance) {
  KSL_REQUIRE_ARG(rep);
  if (i >= rep->rep.thresholds.size()) return set_error(KSL_ERR_INVALID, "threshold index out of range");
  const auto& t = rep->rep.thresholds[i];
  if (name) *name = t.name.c_str();
  if (value) *value = t.value;
  if (provenance) *provenance = t.provenance.c_str();
  return KSL_OK;
}

ksl_status ksl_report_write(const ksl_report* rep, const char* dir) {
  KSL_REQUIRE_ARG(rep);
  KSL_REQUIRE_ARG(dir);
  return guarded([&] { ksl::write_report(rep->rep, dir); });
}

void ksl_report_free(ksl_report* rep) { delete rep; }

ksl_status ksl_write_plot_script(const char* dir) {
  KSL_REQUIRE_ARG(dir);
  return guarded([&] { ksl::write_plot_script(dir); });
}

}  // extern "C"

/* Copyright 2026 The kslab Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface of libksl. Every handle is opaque and owned by the caller once
 * returned; release it with the matching *_free. Functions returning
 * ksl_status leave a message retrievable with ksl_last_error() on failure.
 * The message is per thread and valid until the next failing call.
 */
#ifndef KSL_KSL_H
#define KSL_KSL_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define KSL_API __declspec(dllexport)
#else
#define KSL_API __attribute__((visibility("default")))
#endif

typedef enum ksl_status {
  KSL_OK = 0,
  KSL_ERR_INVALID = 1,
  KSL_ERR_IO = 2,
  KSL_ERR_SOLVER = 3,
  KSL_ERR_BLOWUP = 4,
  KSL_ERR_INTERNAL = 5
} ksl_status;

typedef struct ksl_config ksl_config;
typedef struct ksl_trace ksl_trace;
typedef struct ksl_report ksl_report;

KSL_API const char* ksl_version(void);
KSL_API const char* ksl_last_error(void);

/* Configuration. Keys and values use the text form of the config file. */
KSL_API ksl_status ksl_config_new(ksl_config** out);
KSL_API ksl_status ksl_config_load(const char* path, ksl_config** out);
KSL_API ksl_status ksl_config_set(ksl_config* cfg, const char* key, const char* value);
/* Copies the value with its terminator into buf when cap is large enough;
 * *needed (optional) receives the size including the terminator. */
KSL_API ksl_status ksl_config_get(const ksl_config* cfg, const char* key, char* buf, size_t cap,
                                  size_t* needed);
KSL_API ksl_status ksl_config_dump(const ksl_config* cfg, char* buf, size_t cap, size_t* needed);
KSL_API void ksl_config_free(ksl_config* cfg);

/* Runs and traces. */
KSL_API ksl_status ksl_simulate(const ksl_config* cfg, ksl_trace** out);
/* trace.csv, trace.json and the snapshot files. */
KSL_API ksl_status ksl_trace_write(const ksl_trace* tr, const char* dir);
/* Reads trace.csv and trace.json from a directory written by ksl_trace_write. */
KSL_API ksl_status ksl_trace_load(const char* dir, ksl_trace** out);
KSL_API size_t ksl_trace_size(const ksl_trace* tr);
KSL_API ksl_status ksl_trace_value(const ksl_trace* tr, size_t row, const char* column, double* out);
KSL_API void ksl_trace_free(ksl_trace* tr);

/* Reports. */
KSL_API ksl_status ksl_verify(const ksl_trace* tr, double rel_tol, ksl_report** out);
KSL_API ksl_status ksl_experiment(const char* name, const ksl_config* cfg, ksl_report** out);
KSL_API size_t ksl_experiment_count(void);
KSL_API const char* ksl_experiment_name(size_t i);

KSL_API const char* ksl_report_name(const ksl_report* rep);
KSL_API int ksl_report_passed(const ksl_report* rep);
KSL_API size_t ksl_report_count(const ksl_report* rep);
/* Any output pointer may be NULL. Strings live as long as the report. */
KSL_API ksl_status ksl_report_verdict(const ksl_report* rep, size_t i, const char** criterion, int* pass,
                                      double* value, double* tolerance, const char** detail);
KSL_API size_t ksl_report_threshold_count(const ksl_report* rep);
KSL_API ksl_status ksl_report_threshold(const ksl_report* rep, size_t i, const char** name, double* value,
                                        const char** provenance);
KSL_API ksl_status ksl_report_write(const ksl_report* rep, const char* dir);
KSL_API void ksl_report_free(ksl_report* rep);

KSL_API ksl_status ksl_write_plot_script(const char* dir);

#ifdef __cplusplus
}
#endif

#endif /* KSL_KSL_H */

/* SPDX-License-Identifier: Apache-2.0
 *
 * fddcov: uplink-to-downlink spatial covariance conversion for dual-polarized arrays
 * Copyright (C) 2026 The fddcov Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 * ------------------------------------------------------------------------ */

#ifndef FDDCOV_H
#define FDDCOV_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(FDDCOV_BUILDING_LIBRARY)
#define FDDCOV_API __declspec(dllexport)
#else
#define FDDCOV_API __declspec(dllimport)
#endif
#else
#define FDDCOV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fddcov_status
{
    FDDCOV_OK = 0,
    FDDCOV_ERR_ARGUMENT = 1,  /* invalid argument or state */
    FDDCOV_ERR_CONFIG = 2,    /* malformed configuration */
    FDDCOV_ERR_NUMERICAL = 3, /* decomposition failure, non-finite result */
    FDDCOV_ERR_IO = 4,        /* unreadable or malformed file */
    FDDCOV_ERR_INTERNAL = 5
} fddcov_status;

typedef enum fddcov_method
{
    FDDCOV_METHOD_ALG1 = 1, /* minimum-norm projection, precomputed operator */
    FDDCOV_METHOD_ALG2 = 2  /* alternating projections with nonnegativity */
} fddcov_method;

typedef struct fddcov_config fddcov_config;
typedef struct fddcov_converter fddcov_converter;
typedef struct fddcov_matrix fddcov_matrix;

/* Message of the last failed call on this thread; never NULL */
FDDCOV_API const char *fddcov_last_error(void);
/* 1-based config line of the last FDDCOV_ERR_CONFIG, 0 if unknown */
FDDCOV_API size_t fddcov_last_error_line(void);
FDDCOV_API const char *fddcov_version(void);

/* Configuration. An empty file or a fresh handle holds the built-in defaults. */
FDDCOV_API fddcov_status fddcov_config_new(fddcov_config **out);
FDDCOV_API fddcov_status fddcov_config_load(const char *path, fddcov_config **out);
FDDCOV_API fddcov_status fddcov_config_set(fddcov_config *cfg, const char *key, const char *value);
/* Copies the value into buf (NUL-terminated); *needed receives the full length + 1 */
FDDCOV_API fddcov_status fddcov_config_get(const fddcov_config *cfg, const char *key, char *buf, size_t len,
                                           size_t *needed);
FDDCOV_API fddcov_status fddcov_config_validate(const fddcov_config *cfg);
FDDCOV_API void fddcov_config_free(fddcov_config *cfg);
/* Measurement count of the array in cfg: structured (full == 0) or full vectorization */
FDDCOV_API fddcov_status fddcov_kernel_rows(const fddcov_config *cfg, int full, size_t *rows);

/* Complex N x N matrices; data is interleaved (re, im), row-major */
FDDCOV_API fddcov_status fddcov_matrix_new(size_t n, const double *data, fddcov_matrix **out);
FDDCOV_API fddcov_status fddcov_matrix_read(const char *path, fddcov_matrix **out);
/* binary != 0 writes FCOV1, otherwise FCOV-TEXT */
FDDCOV_API fddcov_status fddcov_matrix_write(const fddcov_matrix *m, const char *path, int binary);
FDDCOV_API size_t fddcov_matrix_size(const fddcov_matrix *m);
FDDCOV_API fddcov_status fddcov_matrix_data(const fddcov_matrix *m, double *out, size_t len);
FDDCOV_API void fddcov_matrix_free(fddcov_matrix *m);

/* Builds kernels and the conversion operator for cfg. When the config names an
 * operator_cache file that exists, the operator is loaded from it instead;
 * kernels are then built only if with_kernels is nonzero. */
FDDCOV_API fddcov_status fddcov_converter_new(const fddcov_config *cfg, int with_kernels, fddcov_converter **out);
FDDCOV_API fddcov_status fddcov_converter_save(const fddcov_converter *conv, const char *path);
/* Rank of the truncated UL system; 0 when kernels were not built */
FDDCOV_API size_t fddcov_converter_rank(const fddcov_converter *conv);

typedef struct fddcov_convert_info
{
    size_t iterations; /* 0 for FDDCOV_METHOD_ALG1 */
    double residual;   /* relative UL residual; NaN when unknown */
    int converged;
} fddcov_convert_info;

FDDCOV_API fddcov_status fddcov_convert(const fddcov_converter *conv, const fddcov_matrix *r_ul, fddcov_method method,
                                        fddcov_matrix **r_dl, fddcov_convert_info *info);
FDDCOV_API void fddcov_converter_free(fddcov_converter *conv);

typedef struct fddcov_error_metrics
{
    double frobenius_se;
    double grassmann_se;
    size_t grassmann_rank;
    int grassmann_tie;
} fddcov_error_metrics;

FDDCOV_API fddcov_status fddcov_metrics(const fddcov_matrix *r_true, const fddcov_matrix *r_est,
                                        fddcov_error_metrics *out);

typedef struct fddcov_campaign_info
{
    size_t n_trials;
    size_t n_failed;
} fddcov_campaign_info;

/* Runs the Monte Carlo campaign and writes trials.csv, cdf_*.csv and summary.csv
 * into out_dir (the config's out key when NULL). threads = 0 uses FDDCOV_THREADS
 * or the hardware concurrency. conv may be NULL. */
FDDCOV_API fddcov_status fddcov_simulate(const fddcov_config *cfg, const fddcov_converter *conv, const char *out_dir,
                                         size_t threads, fddcov_campaign_info *info);

#ifdef __cplusplus
}
#endif

#endif

// SPDX-License-Identifier: Apache-2.0
//
// fddcov: uplink-to-downlink spatial covariance conversion for dual-polarized arrays
// Copyright (C) 2026 The fddcov Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "fddcov/fddcov.h"

#include "fddcov/config.hpp"
#include "fddcov/conversion.hpp"
#include "fddcov/errors.hpp"
#include "fddcov/io.hpp"
#include "fddcov/metrics.hpp"
#include "fddcov/simharness.hpp"

#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <new>
#include <string>

struct fddcov_config
{
    fddcov::CampaignConfig cfg;
};

struct fddcov_converter
{
    std::shared_ptr<const fddcov::Converter> conv;
    fddcov::CampaignConfig cfg;
};

struct fddcov_matrix
{
    fddcov::CovarianceMatrix m;
};

namespace
{
    thread_local std::string last_error;
    thread_local std::size_t last_line = 0;

    fddcov_status fail(fddcov_status status, const std::string &message, std::size_t line = 0)
    {
        last_error = message;
        last_line = line;
        return status;
    }

    // Maps exceptions thrown by the core onto status codes
    template <class F>
    fddcov_status guard(F &&f)
    {
        try
        {
            last_error.clear();
            last_line = 0;
            f();
            return FDDCOV_OK;
        }
        catch (const fddcov::ConfigError &e)
        {
            return fail(FDDCOV_ERR_CONFIG, e.what(), e.line());
        }
        catch (const fddcov::NumericalError &e)
        {
            return fail(FDDCOV_ERR_NUMERICAL, e.what());
        }
        catch (const fddcov::FormatError &e)
        {
            return fail(FDDCOV_ERR_IO, e.what());
        }
        catch (const std::domain_error &e)
        {
            return fail(FDDCOV_ERR_NUMERICAL, e.what());
        }
        catch (const std::invalid_argument &e)
        {
            return fail(FDDCOV_ERR_ARGUMENT, e.what());
        }
        catch (const std::logic_error &e)
        {
            return fail(FDDCOV_ERR_ARGUMENT, e.what());
        }
        catch (const std::bad_alloc &)
        {
            return fail(FDDCOV_ERR_INTERNAL, "out of memory");
        }
        catch (const std::runtime_error &e)
        {
            return fail(FDDCOV_ERR_NUMERICAL, e.what());
        }
        catch (...)
        {
            return fail(FDDCOV_ERR_INTERNAL, "unknown error");
        }
    }

#define FDDCOV_REQUIRE(cond, what)                                  \
    do                                                              \
    {                                                               \
        if (!(cond))                                                \
            return fail(FDDCOV_ERR_ARGUMENT, std::string(what));    \
    } while (0)
} // namespace

extern "C" {

const char *fddcov_last_error(void)
{
    return last_error.c_str();
}

size_t fddcov_last_error_line(void)
{
    return last_line;
}

const char *fddcov_version(void)
{
    return "0.1.0";
}

fddcov_status fddcov_config_new(fddcov_config **out)
{
    FDDCOV_REQUIRE(out, "fddcov_config_new: null output");
    return guard([&] { *out = new fddcov_config{}; });
}

fddcov_status fddcov_config_load(const char *path, fddcov_config **out)
{
    FDDCOV_REQUIRE(path && out, "fddcov_config_load: null argument");
    return guard([&] { *out = new fddcov_config{fddcov::load_config(path)}; });
}

fddcov_status fddcov_config_set(fddcov_config *cfg, const char *key, const char *value)
{
    FDDCOV_REQUIRE(cfg && key && value, "fddcov_config_set: null argument");
    return guard([&] { fddcov::apply_setting(cfg->cfg, key, value); });
}

fddcov_status fddcov_config_get(const fddcov_config *cfg, const char *key, char *buf, size_t len, size_t *needed)
{
    FDDCOV_REQUIRE(cfg && key, "fddcov_config_get: null argument");
    return guard(
        [&]
        {
            const std::string v = fddcov::get_setting(cfg->cfg, key);
            if (needed)
                *needed = v.size() + 1;
            if (buf && len)
            {
                const std::size_t n = std::min(len - 1, v.size());
                std::memcpy(buf, v.data(), n);
                buf[n] = '\0';
            }
        });
}

fddcov_status fddcov_config_validate(const fddcov_config *cfg)
{
    FDDCOV_REQUIRE(cfg, "fddcov_config_validate: null config");
    return guard([&] { cfg->cfg.validate(); });
}

void fddcov_config_free(fddcov_config *cfg)
{
    delete cfg;
}

fddcov_status fddcov_kernel_rows(const fddcov_config *cfg, int full, size_t *rows)
{
    FDDCOV_REQUIRE(cfg && rows, "fddcov_kernel_rows: null argument");
    return guard(
        [&]
        {
            *rows = fddcov::kernel_rows(cfg->cfg.geometry(), full ? fddcov::VectorizationMode::full
                                                                  : fddcov::VectorizationMode::structured);
        });
}

fddcov_status fddcov_matrix_new(size_t n, const double *data, fddcov_matrix **out)
{
    FDDCOV_REQUIRE(out && data && n > 0, "fddcov_matrix_new: invalid argument");
    return guard(
        [&]
        {
            auto m = std::make_unique<fddcov_matrix>();
            const auto ni = Eigen::Index(n);
            m->m.resize(ni, ni);
            for (Eigen::Index i = 0; i < ni; ++i)
                for (Eigen::Index j = 0; j < ni; ++j)
                {
                    const double *p = data + 2 * (i * ni + j);
                    m->m(i, j) = {p[0], p[1]};
                }
            if (!m->m.allFinite())
                throw std::invalid_argument("fddcov_matrix_new: non-finite entries");
            *out = m.release();
        });
}

fddcov_status fddcov_matrix_read(const char *path, fddcov_matrix **out)
{
    FDDCOV_REQUIRE(path && out, "fddcov_matrix_read: null argument");
    return guard([&] { *out = new fddcov_matrix{fddcov::read_covariance(path)}; });
}

fddcov_status fddcov_matrix_write(const fddcov_matrix *m, const char *path, int binary)
{
    FDDCOV_REQUIRE(m && path, "fddcov_matrix_write: null argument");
    return guard(
        [&]
        {
            if (binary)
                fddcov::write_covariance_binary(m->m, path);
            else
                fddcov::write_covariance_text(m->m, path);
        });
}

size_t fddcov_matrix_size(const fddcov_matrix *m)
{
    return m ? size_t(m->m.rows()) : 0;
}

fddcov_status fddcov_matrix_data(const fddcov_matrix *m, double *out, size_t len)
{
    FDDCOV_REQUIRE(m && out, "fddcov_matrix_data: null argument");
    const auto n = m->m.rows();
    FDDCOV_REQUIRE(len >= size_t(2 * n * n), "fddcov_matrix_data: buffer too small");
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
        {
            out[2 * (i * n + j)] = m->m(i, j).real();
            out[2 * (i * n + j) + 1] = m->m(i, j).imag();
        }
    return FDDCOV_OK;
}

void fddcov_matrix_free(fddcov_matrix *m)
{
    delete m;
}

fddcov_status fddcov_converter_new(const fddcov_config *cfg, int with_kernels, fddcov_converter **out)
{
    FDDCOV_REQUIRE(cfg && out, "fddcov_converter_new: null argument");
    return guard(
        [&]
        {
            const fddcov::CampaignConfig &c = cfg->cfg;
            c.validate();
            auto grid = std::make_shared<const fddcov::AngularGrid>(c.grid_azimuth, c.grid_zenith, c.measure);
            std::shared_ptr<const fddcov::Converter> conv;
            if (!c.operator_cache.empty() && std::ifstream(c.operator_cache).good())
                conv = std::make_shared<const fddcov::Converter>(c.geometry(), c.ul_hz, c.dl_hz, grid, c.converter,
                                                                 fddcov::load_operator(c.operator_cache),
                                                                 with_kernels != 0);
            else
                conv = std::make_shared<const fddcov::Converter>(c.geometry(), c.ul_hz, c.dl_hz, grid, c.converter);
            *out = new fddcov_converter{std::move(conv), c};
        });
}

fddcov_status fddcov_converter_save(const fddcov_converter *conv, const char *path)
{
    FDDCOV_REQUIRE(conv && path, "fddcov_converter_save: null argument");
    return guard([&] { fddcov::save_operator(conv->conv->conversion_operator(), path); });
}

size_t fddcov_converter_rank(const fddcov_converter *conv)
{
    return conv && conv->conv->has_kernels() ? conv->conv->projector().rank() : 0;
}

fddcov_status fddcov_convert(const fddcov_converter *conv, const fddcov_matrix *r_ul, fddcov_method method,
                             fddcov_matrix **r_dl, fddcov_convert_info *info)
{
    FDDCOV_REQUIRE(conv && r_ul && r_dl, "fddcov_convert: null argument");
    FDDCOV_REQUIRE(method == FDDCOV_METHOD_ALG1 || method == FDDCOV_METHOD_ALG2, "fddcov_convert: unknown method");
    return guard(
        [&]
        {
            const auto res = conv->conv->convert(r_ul->m, method == FDDCOV_METHOD_ALG1 ? fddcov::Method::alg1
                                                                                       : fddcov::Method::alg2);
            if (info)
                *info = {res.iterations, res.residual, res.converged ? 1 : 0};
            *r_dl = new fddcov_matrix{res.r_d};
        });
}

void fddcov_converter_free(fddcov_converter *conv)
{
    delete conv;
}

fddcov_status fddcov_metrics(const fddcov_matrix *r_true, const fddcov_matrix *r_est, fddcov_error_metrics *out)
{
    FDDCOV_REQUIRE(r_true && r_est && out, "fddcov_metrics: null argument");
    return guard(
        [&]
        {
            const auto g = fddcov::grassmann_distance(r_true->m, r_est->m);
            *out = {fddcov::normalized_frobenius_se(r_true->m, r_est->m), g.se, g.rank, g.tie ? 1 : 0};
        });
}

fddcov_status fddcov_simulate(const fddcov_config *cfg, const fddcov_converter *conv, const char *out_dir,
                              size_t threads, fddcov_campaign_info *info)
{
    FDDCOV_REQUIRE(cfg, "fddcov_simulate: null config");
    return guard(
        [&]
        {
            const std::unique_ptr<fddcov::Campaign> campaign =
                conv ? std::make_unique<fddcov::Campaign>(cfg->cfg, conv->conv)
                     : std::make_unique<fddcov::Campaign>(cfg->cfg);
            const std::string dir = out_dir ? out_dir : cfg->cfg.out_dir;
            const auto res = fddcov::run_campaign(*campaign, dir, threads);
            if (info)
            {
                info->n_trials = res.records.size();
                info->n_failed = 0;
                for (const auto &r : res.records)
                    info->n_failed += r.failed ? 1 : 0;
            }
        });
}

} // extern "C"

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

// Command-line front end; talks to the library only through fddcov.h.

#include "fddcov/fddcov.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace
{
    constexpr int kExitOk = 0;
    constexpr int kExitFailure = 1;
    constexpr int kExitConfig = 2;
    constexpr int kExitNumerical = 3;

    struct CliError
    {
        int code;
    };

    int exit_code(fddcov_status s)
    {
        switch (s)
        {
        case FDDCOV_OK:
            return kExitOk;
        case FDDCOV_ERR_CONFIG:
            return kExitConfig;
        case FDDCOV_ERR_NUMERICAL:
            return kExitNumerical;
        default:
            return kExitFailure;
        }
    }

    void check(fddcov_status s)
    {
        if (s == FDDCOV_OK)
            return;
        std::fprintf(stderr, "fddcov: error: %s\n", fddcov_last_error());
        throw CliError{exit_code(s)};
    }

    struct ConfigDeleter
    {
        void operator()(fddcov_config *c) const { fddcov_config_free(c); }
    };
    struct ConverterDeleter
    {
        void operator()(fddcov_converter *c) const { fddcov_converter_free(c); }
    };
    struct MatrixDeleter
    {
        void operator()(fddcov_matrix *m) const { fddcov_matrix_free(m); }
    };
    using ConfigPtr = std::unique_ptr<fddcov_config, ConfigDeleter>;
    using ConverterPtr = std::unique_ptr<fddcov_converter, ConverterDeleter>;
    using MatrixPtr = std::unique_ptr<fddcov_matrix, MatrixDeleter>;

    // Options shared by the subcommands that need a configuration
    struct Common
    {
        std::string config;
        std::optional<std::uint64_t> seed;
        std::optional<std::size_t> trials;
        std::string method;
        std::string grid;
        bool wideband = false;
        std::string out;
    };

    void add_config_options(CLI::App *app, Common &c)
    {
        app->add_option("--config", c.config, "Configuration file (key = value)");
        app->add_option("--grid", c.grid, "Reconstruction grid AxZ (azimuth x zenith nodes)");
    }

    void set(fddcov_config *cfg, const char *key, const std::string &value)
    {
        const fddcov_status s = fddcov_config_set(cfg, key, value.c_str());
        if (s != FDDCOV_OK)
        {
            std::fprintf(stderr, "fddcov: error: command line: %s\n", fddcov_last_error());
            throw CliError{exit_code(s)};
        }
    }

    ConfigPtr load(const Common &c)
    {
        fddcov_config *raw = nullptr;
        if (c.config.empty())
            check(fddcov_config_new(&raw));
        else
            check(fddcov_config_load(c.config.c_str(), &raw));
        ConfigPtr cfg(raw);
        if (c.seed)
            set(cfg.get(), "seed", std::to_string(*c.seed));
        if (c.trials)
            set(cfg.get(), "n_trials", std::to_string(*c.trials));
        if (!c.method.empty())
            set(cfg.get(), "methods", c.method);
        if (!c.grid.empty())
            set(cfg.get(), "grid", c.grid);
        if (c.wideband)
            set(cfg.get(), "wideband", "true");
        check(fddcov_config_validate(cfg.get()));
        return cfg;
    }

    std::string get(const fddcov_config *cfg, const char *key)
    {
        std::size_t needed = 0;
        check(fddcov_config_get(cfg, key, nullptr, 0, &needed));
        std::string out(needed, '\0');
        check(fddcov_config_get(cfg, key, out.data(), out.size(), nullptr));
        out.resize(needed - 1);
        return out;
    }

    int kernel_build(const Common &c)
    {
        ConfigPtr cfg = load(c);
        std::string path = get(cfg.get(), "operator_cache");
        if (!c.out.empty())
        {
            std::filesystem::create_directories(c.out);
            path = (std::filesystem::path(c.out) / "operator.fcnv").string();
        }
        else if (path.empty())
            path = "operator.fcnv";
        // Always rebuild: do not pick up a stale cache at the target path
        set(cfg.get(), "operator_cache", "");
        fddcov_converter *raw = nullptr;
        check(fddcov_converter_new(cfg.get(), 1, &raw));
        ConverterPtr conv(raw);
        check(fddcov_converter_save(conv.get(), path.c_str()));
        std::size_t structured = 0, full = 0;
        check(fddcov_kernel_rows(cfg.get(), 0, &structured));
        check(fddcov_kernel_rows(cfg.get(), 1, &full));
        std::printf("operator written to %s (rank %zu; measurements: structured %zu, full %zu)\n", path.c_str(),
                    fddcov_converter_rank(conv.get()), structured, full);
        return kExitOk;
    }

    int convert(const Common &c, const std::string &input, const std::string &output, bool binary)
    {
        const std::string method = c.method.empty() ? "alg1" : c.method;
        if (method != "alg1" && method != "alg2")
        {
            std::fprintf(stderr, "fddcov: error: convert takes --method alg1 or alg2\n");
            return kExitConfig;
        }
        Common cc = c;
        cc.method = method;
        ConfigPtr cfg = load(cc);
        fddcov_matrix *raw_in = nullptr;
        check(fddcov_matrix_read(input.c_str(), &raw_in));
        MatrixPtr in(raw_in);
        fddcov_converter *raw = nullptr;
        check(fddcov_converter_new(cfg.get(), method == "alg2", &raw));
        ConverterPtr conv(raw);
        fddcov_matrix *raw_out = nullptr;
        fddcov_convert_info info{};
        check(fddcov_convert(conv.get(), in.get(),
                             method == "alg1" ? FDDCOV_METHOD_ALG1 : FDDCOV_METHOD_ALG2, &raw_out, &info));
        MatrixPtr out(raw_out);
        check(fddcov_matrix_write(out.get(), output.c_str(), binary ? 1 : 0));
        std::fprintf(stderr, "method=%s iterations=%zu residual=%.6g converged=%d\n", method.c_str(), info.iterations,
                     info.residual, info.converged);
        return kExitOk;
    }

    int simulate(const Common &c, std::size_t threads)
    {
        ConfigPtr cfg = load(c);
        const std::string out = c.out.empty() ? get(cfg.get(), "out") : c.out;
        fddcov_campaign_info info{};
        check(fddcov_simulate(cfg.get(), nullptr, out.c_str(), threads, &info));
        std::printf("%zu trials (%zu failed), results in %s\n", info.n_trials, info.n_failed, out.c_str());
        return kExitOk;
    }

    int metrics(const std::string &truth, const std::string &estimate)
    {
        fddcov_matrix *a = nullptr, *b = nullptr;
        check(fddcov_matrix_read(truth.c_str(), &a));
        MatrixPtr ta(a);
        check(fddcov_matrix_read(estimate.c_str(), &b));
        MatrixPtr tb(b);
        fddcov_error_metrics m{};
        check(fddcov_metrics(ta.get(), tb.get(), &m));
        std::printf("frobenius_se,grassmann_se,grassmann_rank,tie\n%.17g,%.17g,%zu,%d\n", m.frobenius_se,
                    m.grassmann_se, m.grassmann_rank, m.grassmann_tie);
        return kExitOk;
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"fddcov: uplink-to-downlink covariance conversion for cross-polarized planar arrays"};
    app.require_subcommand(1);
    app.set_version_flag("--version", fddcov_version());

    Common common;
    std::size_t threads = 0;
    std::string input, output, truth, estimate;
    bool binary = false;

    CLI::App *kernel = app.add_subcommand("kernel", "Kernel and operator cache");
    kernel->require_subcommand(1);
    CLI::App *build = kernel->add_subcommand("build", "Build the conversion operator and write the cache");
    add_config_options(build, common);
    build->add_option("--out", common.out, "Output directory (operator.fcnv)");

    CLI::App *conv = app.add_subcommand("convert", "Convert one UL covariance file to a DL covariance file");
    add_config_options(conv, common);
    conv->add_option("--method", common.method, "alg1 or alg2")->check(CLI::IsMember({"alg1", "alg2", "both"}));
    conv->add_option("input", input, "UL covariance (FCOV-TEXT or FCOV1)")->required();
    conv->add_option("output", output, "DL covariance to write")->required();
    conv->add_flag("--binary", binary, "Write FCOV1 instead of text");

    CLI::App *sim = app.add_subcommand("simulate", "Run the Monte Carlo campaign");
    add_config_options(sim, common);
    sim->add_option("--seed", common.seed, "Master seed");
    sim->add_option("--trials", common.trials, "Number of trials")->check(CLI::PositiveNumber);
    sim->add_option("--method", common.method, "alg1, alg2 or both")->check(CLI::IsMember({"alg1", "alg2", "both"}));
    sim->add_flag("--wideband", common.wideband, "OFDM snapshots");
    sim->add_option("--out", common.out, "Output directory");
    sim->add_option("--threads", threads, "Worker threads (default: FDDCOV_THREADS or all cores)");

    CLI::App *met = app.add_subcommand("metrics", "Compare two covariance files");
    met->add_option("truth", truth, "Reference covariance")->required();
    met->add_option("estimate", estimate, "Estimated covariance")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try
    {
        if (build->parsed())
            return kernel_build(common);
        if (conv->parsed())
            return convert(common, input, output, binary);
        if (sim->parsed())
            return simulate(common, threads);
        if (met->parsed())
            return metrics(truth, estimate);
    }
    catch (const CliError &e)
    {
        return e.code;
    }
    catch (const std::exception &e)
    {
        std::fprintf(stderr, "fddcov: error: %s\n", e.what());
        return kExitFailure;
    }
    return kExitFailure;
}

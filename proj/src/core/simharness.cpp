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

#include "fddcov/simharness.hpp"
#include "fddcov/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <thread>

namespace fddcov
{
    namespace
    {
        std::shared_ptr<const Converter> make_converter(const CampaignConfig &cfg)
        {
            const UpaGeometry geom = cfg.geometry();
            auto grid = std::make_shared<const AngularGrid>(cfg.grid_azimuth, cfg.grid_zenith, cfg.measure);
            if (!cfg.operator_cache.empty() && std::filesystem::exists(cfg.operator_cache))
                return std::make_shared<const Converter>(geom, cfg.ul_hz, cfg.dl_hz, grid, cfg.converter,
                                                         load_operator(cfg.operator_cache), cfg.run_alg2);
            auto conv = std::make_shared<const Converter>(geom, cfg.ul_hz, cfg.dl_hz, grid, cfg.converter);
            if (!cfg.operator_cache.empty())
                save_operator(conv->conversion_operator(), cfg.operator_cache);
            return conv;
        }

        void add_noise(Eigen::Ref<Eigen::VectorXcd> h, double variance, Rng &rng)
        {
            if (variance <= 0.0)
                return;
            std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 * variance));
            for (Eigen::Index i = 0; i < h.size(); ++i)
            {
                const double re = gauss(rng);
                const double im = gauss(rng);
                h(i) += std::complex<double>(re, im);
            }
        }

        double noise_variance(const CovarianceMatrix &r, double snr_db)
        {
            if (std::isinf(snr_db))
                return 0.0;
            return r.trace().real() / (double(r.rows()) * std::pow(10.0, snr_db / 10.0));
        }

        std::string fmt(double x)
        {
            if (std::isnan(x))
                return "nan";
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", x);
            return buf;
        }

        std::string join_flags(const std::vector<std::string> &flags)
        {
            std::string out;
            for (const auto &f : flags)
                out += (out.empty() ? "" : "|") + f;
            return out;
        }

        double metric_value(const MethodOutcome &o, const std::string &metric)
        {
            if (metric == "frobenius")
                return o.error.frobenius_se;
            if (metric == "grassmann")
                return o.error.grassmann_se;
            throw std::invalid_argument("unknown metric '" + metric + "'");
        }

        std::vector<double> collect(const std::vector<TrialRecord> &records, const std::string &method,
                                    const std::string &metric)
        {
            std::vector<double> v;
            for (const auto &r : records)
                for (const auto &o : r.outcomes)
                    if (o.method == method && !r.failed)
                    {
                        const double x = metric_value(o, metric);
                        if (std::isfinite(x))
                            v.push_back(x);
                    }
            std::sort(v.begin(), v.end());
            return v;
        }

        // Linear interpolation between order statistics
        double quantile(const std::vector<double> &sorted, double p)
        {
            if (sorted.empty())
                return std::numeric_limits<double>::quiet_NaN();
            const double h = p * double(sorted.size() - 1);
            const auto lo = std::size_t(std::floor(h));
            const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
            return sorted[lo] + (h - double(lo)) * (sorted[hi] - sorted[lo]);
        }

        std::ofstream open_out(const std::string &path)
        {
            std::ofstream os(path, std::ios::binary | std::ios::trunc);
            if (!os)
                throw FormatError("cannot open " + path + " for writing");
            return os;
        }
    } // namespace

    std::vector<std::string> methods_of(const CampaignConfig &cfg)
    {
        std::vector<std::string> m;
        if (cfg.run_alg1)
            m.push_back("alg1");
        if (cfg.run_alg2)
            m.push_back("alg2");
        m.insert(m.end(), {"dl_sample", "ul_sample", "zero"});
        return m;
    }

    CovarianceMatrix estimate_covariance(const Eigen::MatrixXcd &snapshots, const UpaGeometry &geom)
    {
        return upa_average(psd_projection(sample_covariance(snapshots)), geom);
    }

    Campaign::Campaign(CampaignConfig cfg) : Campaign(cfg, make_converter((cfg.validate(), cfg))) {}

    Campaign::Campaign(CampaignConfig cfg, std::shared_ptr<const Converter> converter)
        : cfg_(std::move(cfg)), converter_(std::move(converter))
    {
        cfg_.validate();
        if (!converter_)
            throw std::invalid_argument("Campaign: null converter");
        geom_ = cfg_.geometry();
        if (geometry_hash(converter_->geometry()) != geometry_hash(geom_))
            throw std::invalid_argument("Campaign: converter was built for a different array");
        if (cfg_.run_alg2 && !converter_->has_kernels())
            throw std::invalid_argument("Campaign: the iterative method needs a converter with kernels");
        truth_grid_ = std::make_shared<const AngularGrid>(cfg_.truth_azimuth, cfg_.truth_zenith, cfg_.measure);
        mean_inv_xpr_ = mean_inverse_xpr(cfg_.scenario.xpr_mu_db, cfg_.scenario.xpr_sigma_db);
    }

    TrialRecord Campaign::run_trial(std::uint64_t trial_id, TrialData *data) const
    {
        TrialRecord rec;
        rec.trial_id = trial_id;
        rec.seed = trial_seed(trial_id);
        try
        {
            Rng rng(rec.seed);
            const ScenarioDraw scenario = draw_scenario(rng, cfg_.scenario);
            const UePattern ue(scenario.ue_rotation);
            const PolarizedAps aps = aps_from_scenario(scenario, ue, truth_grid_, mean_inv_xpr_);
            const ArrayModel bs_ul(geom_, cfg_.ul_hz);
            const ArrayModel bs_dl(geom_, cfg_.dl_hz);
            const CovarianceMatrix r_ul = covariance_from_aps(aps, bs_ul, *truth_grid_);
            const CovarianceMatrix r_dl = covariance_from_aps(aps, bs_dl, *truth_grid_);
            const double var_ul = noise_variance(r_ul, cfg_.snr_db);
            const double var_dl = noise_variance(r_dl, cfg_.snr_db);

            const auto n = Eigen::Index(geom_.n_antennas());
            const auto ns = Eigen::Index(cfg_.n_snapshots);
            Eigen::MatrixXcd y_ul(n, ns), y_dl(n, ns);
            double signal_ul = 0.0, noise_ul = 0.0;
            const WidebandConfig &wb = cfg_.scenario.wideband_config;
            std::uniform_int_distribution<std::size_t> pick(0, wb.n_subcarriers - 1);
            for (Eigen::Index s = 0; s < ns; ++s)
            {
                const std::vector<Subpath> sub = draw_subpaths(rng, scenario);
                if (cfg_.scenario.wideband)
                {
                    const auto k = Eigen::Index(pick(rng));
                    y_ul.col(s) = synthesize_ofdm_channel(sub, scenario, bs_ul, ue, Link::uplink, wb).col(k);
                    y_dl.col(s) = synthesize_ofdm_channel(sub, scenario, bs_dl, ue, Link::downlink, wb).col(k);
                }
                else
                {
                    y_ul.col(s) = synthesize_channel(sub, scenario, bs_ul, ue, Link::uplink);
                    y_dl.col(s) = synthesize_channel(sub, scenario, bs_dl, ue, Link::downlink);
                }
                const Eigen::VectorXcd clean = y_ul.col(s);
                add_noise(y_ul.col(s), var_ul, rng);
                add_noise(y_dl.col(s), var_dl, rng);
                signal_ul += clean.squaredNorm();
                noise_ul += (y_ul.col(s) - clean).squaredNorm();
            }

            const CovarianceMatrix s_ul = sample_covariance(y_ul);
            const UpaStructure structure(geom_);
            rec.structure_violation = structure.max_violation(s_ul);
            const CovarianceMatrix r_ul_hat = structure.average(psd_projection(s_ul));
            const CovarianceMatrix r_dl_hat = estimate_covariance(y_dl, geom_);

            auto add = [&](const std::string &method, const CovarianceMatrix &est) -> MethodOutcome &
            {
                MethodOutcome o;
                o.method = method;
                o.error = evaluate(trial_id, method, r_dl, est);
                if (o.error.grassmann_tie)
                    o.flags.push_back("tie");
                rec.outcomes.push_back(std::move(o));
                return rec.outcomes.back();
            };

            if (cfg_.run_alg1)
            {
                const ConvertResult res = converter_->convert(r_ul_hat, Method::alg1);
                add("alg1", res.r_d).residual = res.residual;
            }
            if (cfg_.run_alg2)
            {
                const ConvertResult res = converter_->convert(r_ul_hat, Method::alg2);
                MethodOutcome &o = add("alg2", res.r_d);
                o.eapm_iterations = res.iterations;
                o.residual = res.residual;
                if (!res.converged)
                    o.flags.push_back("nonconverged");
            }
            add("dl_sample", r_dl_hat);
            add("ul_sample", r_ul_hat);
            add("zero", CovarianceMatrix::Zero(n, n));

            if (data)
                *data = {scenario, r_ul, r_dl, s_ul, r_ul_hat, r_dl_hat, var_ul, var_dl,
                         signal_ul / double(n * ns), noise_ul / double(n * ns)};
        }
        catch (const std::exception &e)
        {
            rec.failed = true;
            rec.failure = e.what();
            rec.outcomes.clear();
            for (const auto &m : methods_of(cfg_))
            {
                MethodOutcome o;
                o.method = m;
                o.error = {trial_id, m, std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::quiet_NaN(), false};
                o.flags.push_back("failed");
                rec.outcomes.push_back(std::move(o));
            }
        }
        return rec;
    }

    std::size_t worker_count(std::size_t requested)
    {
        if (requested > 0)
            return requested;
        if (const char *env = std::getenv("FDDCOV_THREADS"))
        {
            char *end = nullptr;
            const unsigned long v = std::strtoul(env, &end, 10);
            if (end != env && *end == '\0' && v > 0)
                return std::size_t(v);
        }
        return std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }

    std::vector<TrialRecord> Campaign::run(std::size_t threads) const
    {
        std::vector<TrialRecord> records(cfg_.n_trials);
        std::atomic<std::size_t> next{0};
        auto worker = [&]
        {
            for (std::size_t i = next++; i < records.size(); i = next++)
                records[i] = run_trial(i);
        };
        const std::size_t workers = std::min(worker_count(threads), records.size());
        if (workers <= 1)
            worker();
        else
        {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < workers; ++t)
                pool.emplace_back(worker);
            for (auto &t : pool)
                t.join();
        }
        return records;
    }

    std::vector<QuantileSummary> summarize(const std::vector<TrialRecord> &records)
    {
        std::vector<std::string> methods;
        for (const auto &r : records)
            for (const auto &o : r.outcomes)
                if (std::find(methods.begin(), methods.end(), o.method) == methods.end())
                    methods.push_back(o.method);
        std::vector<QuantileSummary> out;
        for (const auto &m : methods)
            for (const char *metric : {"frobenius", "grassmann"})
            {
                const auto v = collect(records, m, metric);
                double mean = std::numeric_limits<double>::quiet_NaN();
                if (!v.empty())
                {
                    mean = 0.0;
                    for (double x : v)
                        mean += x;
                    mean /= double(v.size());
                }
                out.push_back({m, metric, v.size(), quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75), mean});
            }
        return out;
    }

    void write_trials_csv(const std::vector<TrialRecord> &records, const std::string &path)
    {
        std::ofstream os = open_out(path);
        os << "trial_id,seed,method,frobenius_se,grassmann_se,eapm_iters,residual,flags\n";
        for (const auto &r : records)
            for (const auto &o : r.outcomes)
                os << r.trial_id << ',' << r.seed << ',' << o.method << ',' << fmt(o.error.frobenius_se) << ','
                   << fmt(o.error.grassmann_se) << ',' << o.eapm_iterations << ',' << fmt(o.residual) << ','
                   << join_flags(o.flags) << '\n';
        if (!os)
            throw FormatError("write to " + path + " failed");
    }

    void write_cdf_csv(const std::vector<TrialRecord> &records, const std::string &method, const std::string &metric,
                       const std::string &path)
    {
        const auto v = collect(records, method, metric);
        std::ofstream os = open_out(path);
        os << "se_value,empirical_cdf\n";
        for (std::size_t i = 0; i < v.size(); ++i)
            os << fmt(v[i]) << ',' << fmt(double(i + 1) / double(v.size())) << '\n';
        if (!os)
            throw FormatError("write to " + path + " failed");
    }

    void write_summary_csv(const std::vector<QuantileSummary> &summary, const std::string &path)
    {
        std::ofstream os = open_out(path);
        os << "method,metric,count,q1,median,q3,mean\n";
        for (const auto &s : summary)
            os << s.method << ',' << s.metric << ',' << s.count << ',' << fmt(s.q1) << ',' << fmt(s.median) << ','
               << fmt(s.q3) << ',' << fmt(s.mean) << '\n';
        if (!os)
            throw FormatError("write to " + path + " failed");
    }

    CampaignResult run_campaign(const Campaign &campaign, const std::string &out_dir, std::size_t threads)
    {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec)
            throw FormatError("cannot create output directory " + out_dir + ": " + ec.message());

        CampaignResult res;
        res.records = campaign.run(threads);
        res.summary = summarize(res.records);

        const std::filesystem::path dir(out_dir);
        auto file = [&](const std::string &name)
        {
            res.files.push_back((dir / name).string());
            return res.files.back();
        };
        write_trials_csv(res.records, file("trials.csv"));
        for (const auto &m : methods_of(campaign.config()))
            for (const char *metric : {"frobenius", "grassmann"})
                write_cdf_csv(res.records, m, metric, file("cdf_" + m + "_" + metric + ".csv"));
        write_summary_csv(res.summary, file("summary.csv"));

        std::string failures;
        for (const auto &r : res.records)
            if (r.failed)
                failures += "trial " + std::to_string(r.trial_id) + ": " + r.failure + "\n";
        const auto log = (dir / "failures.log").string();
        if (!failures.empty())
        {
            std::ofstream os = open_out(file("failures.log"));
            os << failures;
        }
        else
            std::filesystem::remove(log, ec);
        return res;
    }

} // namespace fddcov

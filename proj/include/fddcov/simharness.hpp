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

#ifndef FDDCOV_SIMHARNESS_HPP
#define FDDCOV_SIMHARNESS_HPP

#include "fddcov/channel.hpp"
#include "fddcov/config.hpp"
#include "fddcov/conversion.hpp"
#include "fddcov/covariance.hpp"
#include "fddcov/metrics.hpp"

#include <cstdint>
#include <memory>
#include <limits>
#include <string>
#include <vector>

namespace fddcov
{
    struct MethodOutcome
    {
        std::string method; // alg1, alg2, dl_sample, ul_sample, zero
        SquaredErrorRecord error;
        std::size_t eapm_iterations = 0;
        double residual = std::numeric_limits<double>::quiet_NaN();
        std::vector<std::string> flags;
    };

    struct TrialRecord
    {
        std::uint64_t trial_id = 0;
        std::uint64_t seed = 0;
        std::vector<MethodOutcome> outcomes;
        double structure_violation = 0.0; // of the UL sample covariance before averaging
        bool failed = false;
        std::string failure;
    };

    // Covariances of one trial, kept for inspection and tests
    struct TrialData
    {
        ScenarioDraw scenario;
        CovarianceMatrix r_ul;        // analytic
        CovarianceMatrix r_dl;        // analytic
        CovarianceMatrix r_ul_sample; // sample covariance, before PSD projection and averaging
        CovarianceMatrix r_ul_hat;    // estimation pipeline output
        CovarianceMatrix r_dl_hat;
        double noise_variance_ul = 0.0;
        double noise_variance_dl = 0.0;
        // Per-antenna powers of the generated UL snapshots
        double signal_power_ul = 0.0;
        double noise_power_ul = 0.0;
    };

    std::vector<std::string> methods_of(const CampaignConfig &cfg);

    class Campaign
    {
    public:
        // Builds the conversion operator and kernels, or loads the operator from
        // cfg.operator_cache when that file exists.
        explicit Campaign(CampaignConfig cfg);
        Campaign(CampaignConfig cfg, std::shared_ptr<const Converter> converter);

        const CampaignConfig &config() const { return cfg_; }
        const Converter &converter() const { return *converter_; }

        std::uint64_t trial_seed(std::uint64_t trial_id) const { return mix_seed(cfg_.seed, trial_id); }

        // Never throws for stage failures; they are reported in the record
        TrialRecord run_trial(std::uint64_t trial_id, TrialData *data = nullptr) const;

        // Trials 0 .. n_trials-1 on `threads` workers (0: FDDCOV_THREADS or the
        // hardware concurrency); records are ordered by trial id.
        std::vector<TrialRecord> run(std::size_t threads = 0) const;

    private:
        CampaignConfig cfg_;
        UpaGeometry geom_;
        std::shared_ptr<const AngularGrid> truth_grid_;
        std::shared_ptr<const Converter> converter_;
        double mean_inv_xpr_;
    };

    std::size_t worker_count(std::size_t requested);

    // Sample covariance, PSD projection, then UPA averaging (used on both links)
    CovarianceMatrix estimate_covariance(const Eigen::MatrixXcd &snapshots, const UpaGeometry &geom);

    struct QuantileSummary
    {
        std::string method;
        std::string metric;
        std::size_t count;
        double q1;
        double median;
        double q3;
        double mean;
    };

    std::vector<QuantileSummary> summarize(const std::vector<TrialRecord> &records);

    // Output files inside `dir`: trials.csv, cdf_<method>_<metric>.csv, summary.csv,
    // failures.log (only when a trial failed)
    void write_trials_csv(const std::vector<TrialRecord> &records, const std::string &path);
    void write_cdf_csv(const std::vector<TrialRecord> &records, const std::string &method, const std::string &metric,
                       const std::string &path);
    void write_summary_csv(const std::vector<QuantileSummary> &summary, const std::string &path);

    struct CampaignResult
    {
        std::vector<TrialRecord> records;
        std::vector<QuantileSummary> summary;
        std::vector<std::string> files;
    };

    CampaignResult run_campaign(const Campaign &campaign, const std::string &out_dir, std::size_t threads = 0);

} // namespace fddcov

#endif

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

#ifndef FDDCOV_CONFIG_HPP
#define FDDCOV_CONFIG_HPP

#include "fddcov/channel.hpp"
#include "fddcov/conversion.hpp"
#include "fddcov/geometry.hpp"

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

namespace fddcov
{
    struct CampaignConfig
    {
        double ul_hz = 1.8e9;
        double dl_hz = 1.9e9;
        // Array; the spacing is given in UL wavelengths and resolved by geometry()
        std::size_t n_vertical = 8;
        std::size_t n_horizontal = 4;
        double spacing_wavelengths = 0.5;
        double slant_deg[2] = {45.0, -45.0};
        ElementPattern pattern{};

        ScenarioConfig scenario{};

        std::size_t n_snapshots = 1000;
        double snr_db = 10.0; // +inf disables noise
        std::size_t n_trials = 200;
        std::uint64_t seed = 1;

        std::size_t grid_azimuth = 120;
        std::size_t grid_zenith = 60;
        AngularMeasure measure = AngularMeasure::lebesgue;
        // Grid for the ground-truth covariances
        std::size_t truth_azimuth = 720;
        std::size_t truth_zenith = 360;

        ConverterSettings converter{};
        bool run_alg1 = true;
        bool run_alg2 = true;

        std::string operator_cache; // empty: build in memory
        std::string out_dir = "fddcov_out";

        UpaGeometry geometry() const;
        // Throws ConfigError
        void validate() const;
    };

    // Applies one `key = value` setting; throws ConfigError (line 0) on unknown
    // keys or malformed values.
    void apply_setting(CampaignConfig &cfg, const std::string &key, const std::string &value);

    // Current value of `key` in the textual form accepted by apply_setting
    std::string get_setting(const CampaignConfig &cfg, const std::string &key);

    const std::vector<std::string> &config_keys();

    // Flat `key = value` lines, `#` starts a comment. Errors carry the line number.
    CampaignConfig parse_config(std::istream &is);
    CampaignConfig load_config(const std::string &path);

    // Every key with its value, one per line, loadable by parse_config
    std::string dump_config(const CampaignConfig &cfg);

} // namespace fddcov

#endif

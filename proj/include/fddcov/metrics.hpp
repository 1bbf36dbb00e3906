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

#ifndef FDDCOV_METRICS_HPP
#define FDDCOV_METRICS_HPP

#include "fddcov/covariance.hpp"

#include <cstdint>
#include <string>

namespace fddcov
{
    // ||R_true - R_est||_F^2 / ||R_true||_F^2
    double normalized_frobenius_se(const CovarianceMatrix &r_true, const CovarianceMatrix &r_est);

    // Smallest r with lambda_1 + ... + lambda_r >= fraction * tr(R)
    std::size_t energy_rank(const CovarianceMatrix &r, double energy_fraction = 0.9);

    struct GrassmannResult
    {
        double se;
        std::size_t rank;
        bool tie; // eigenvalues r and r+1 coincide, frame chosen by the canonical order
    };

    // ||U U^H - V V^H||_F^2 / (2r), where U and V hold the leading r eigenvectors of
    // R_true and R_est and r = energy_rank(R_true)
    GrassmannResult grassmann_distance(const CovarianceMatrix &r_true, const CovarianceMatrix &r_est,
                                       double energy_fraction = 0.9);
    double grassmann_se(const CovarianceMatrix &r_true, const CovarianceMatrix &r_est, double energy_fraction = 0.9);

    // Leading-r orthonormal eigenvectors, ordered by eigenvalue (descending) and,
    // within ties, by the lexicographic order of the phase-normalized vectors
    Eigen::MatrixXcd leading_eigenvectors(const CovarianceMatrix &r, std::size_t count, bool *tie = nullptr);

    struct SquaredErrorRecord
    {
        std::uint64_t trial_id = 0;
        std::string method;
        double frobenius_se = 0.0;
        double grassmann_se = 0.0;
        bool grassmann_tie = false;
    };

    SquaredErrorRecord evaluate(std::uint64_t trial_id, const std::string &method, const CovarianceMatrix &r_true,
                                const CovarianceMatrix &r_est);

} // namespace fddcov

#endif

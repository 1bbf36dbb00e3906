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

#ifndef FDDCOV_CHANNEL_HPP
#define FDDCOV_CHANNEL_HPP

#include "fddcov/covariance.hpp"
#include "fddcov/geometry.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <random>
#include <vector>

namespace fddcov
{
    using Rng = std::mt19937_64;

    // Stream `stream` of master seed `seed`; streams are independent of the order
    // in which they are created.
    Rng make_rng(std::uint64_t seed, std::uint64_t stream);
    std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

    struct Interval
    {
        double lo;
        double hi;
    };

    struct WidebandConfig
    {
        std::size_t n_subcarriers = 64; // OFDM block length
        std::size_t impulse_length = 16;

        void validate(std::size_t n_clusters) const;
    };

    // Distribution of the slow (per-window) parameters. Angles in radians.
    struct ScenarioConfig
    {
        std::size_t n_clusters = 5;
        std::size_t n_subpaths = 20;
        Interval azimuth_mean{-2.0 * kPi / 3.0, 2.0 * kPi / 3.0};
        Interval zenith_mean{kPi / 4.0, 3.0 * kPi / 4.0};
        Interval bs_azimuth_spread{deg2rad(3.0), deg2rad(5.0)};
        Interval bs_zenith_spread{deg2rad(1.0), deg2rad(3.0)};
        Interval ue_azimuth_spread{deg2rad(5.0), deg2rad(10.0)};
        Interval ue_zenith_spread{deg2rad(3.0), deg2rad(5.0)};
        double xpr_mu_db = 7.0;
        double xpr_sigma_db = 3.0;
        Interval ue_rotation{0.0, kPi / 6.0};
        bool wideband = false;
        WidebandConfig wideband_config{};

        void validate() const;
    };

    // Independent Gaussians in azimuth and zenith, truncated to [-pi, pi] x [0, pi]
    class AngularGaussian
    {
    public:
        AngularGaussian(Direction mean, double sigma_azimuth, double sigma_zenith);

        const Direction &mean() const { return mean_; }
        double sigma_azimuth() const { return sigma_azimuth_; }
        double sigma_zenith() const { return sigma_zenith_; }

        // Rejection sampling from the untruncated Gaussian
        Direction sample(Rng &rng) const;
        // Probability of the cell [a0, a1] x [z0, z1] under the truncated density
        double cell_probability(double a0, double a1, double z0, double z1) const;
        // Truncated density at dir (per unit azimuth x zenith)
        double density(const Direction &dir) const;

        double azimuth_cdf(double a) const;
        double zenith_cdf(double z) const;

    private:
        Direction mean_;
        double sigma_azimuth_;
        double sigma_zenith_;
        double mass_; // probability of the domain under the untruncated Gaussian
    };

    struct ClusterParams
    {
        double power;
        AngularGaussian bs;
        AngularGaussian ue;
        std::size_t delay_tap = 0;
    };

    struct ScenarioDraw
    {
        std::vector<ClusterParams> clusters;
        std::size_t n_subpaths = 20;
        double xpr_mu_db = 7.0;
        double xpr_sigma_db = 3.0;
        EulerRotation ue_rotation{};

        void validate() const;
    };

    ScenarioDraw draw_scenario(Rng &rng, const ScenarioConfig &cfg);

    // Fast parameters of one subpath. Directions and XPR are shared by both links;
    // the phase tuples (VV, VH, HV, HH) are independent per link.
    struct Subpath
    {
        std::size_t cluster;
        Direction dod;
        Direction doa;
        std::array<double, 4> phases_ul;
        std::array<double, 4> phases_dl;
        double xpr;
    };

    enum class Link
    {
        uplink,
        downlink
    };

    std::vector<Subpath> draw_subpaths(Rng &rng, const ScenarioDraw &scenario);

    // Per-cluster channel vectors h_c as the columns of an N x N_c matrix
    Eigen::MatrixXcd cluster_channels(const std::vector<Subpath> &subpaths, const ScenarioDraw &scenario,
                                      const ArrayModel &bs, const UePattern &ue, Link link);

    Eigen::VectorXcd synthesize_channel(const std::vector<Subpath> &subpaths, const ScenarioDraw &scenario,
                                        const ArrayModel &bs, const UePattern &ue, Link link);

    // N x N_s matrix; column k = sum_c h_c exp(-j 2 pi k l_c / N_s)
    Eigen::MatrixXcd synthesize_ofdm_channel(const std::vector<Subpath> &subpaths, const ScenarioDraw &scenario,
                                             const ArrayModel &bs, const UePattern &ue, Link link,
                                             const WidebandConfig &wb);

    // Draws distinct delay taps in [0, L) for every cluster
    void draw_delay_taps(Rng &rng, ScenarioDraw &scenario, const WidebandConfig &wb);

    // E[1/K] for 10 log10 K ~ N(mu_db, sigma_db^2)
    double mean_inverse_xpr(double mu_db, double sigma_db);
    double mean_inverse_xpr_monte_carlo(Rng &rng, double mu_db, double sigma_db, std::size_t n);

    enum class ApsSampling
    {
        cell_average, // mean of the density over each grid cell (exact Gaussian mass)
        point         // density evaluated at the node
    };

    // rho_V(theta) = sum_c alpha_c f_BS,c(theta) E_UE,c[b_V^2 + b_H^2 / K], and the
    // symmetric rho_H; the UE-side expectation is computed by quadrature.
    PolarizedAps aps_from_scenario(const ScenarioDraw &scenario, const UePattern &ue,
                                   std::shared_ptr<const AngularGrid> grid, double mean_inv_xpr,
                                   ApsSampling sampling = ApsSampling::cell_average);

    // Per-cluster UE-side weights (E[b_V^2 + b_H^2/K], E[b_H^2 + b_V^2/K])
    std::array<double, 2> ue_polarization_weights(const AngularGaussian &ue_dist, const UePattern &ue,
                                                  double mean_inv_xpr);

} // namespace fddcov

#endif

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

#include "fddcov/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fddcov
{
    std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream)
    {
        // splitmix64 finalizer over both words
        auto mix = [](std::uint64_t z)
        {
            z += 0x9e3779b97f4a7c15ULL;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            return z ^ (z >> 31);
        };
        return mix(mix(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 0x2545f4914f6cdd1dULL));
    }

    Rng make_rng(std::uint64_t seed, std::uint64_t stream)
    {
        return Rng(mix_seed(seed, stream));
    }

    void WidebandConfig::validate(std::size_t n_clusters) const
    {
        if (n_subcarriers < 1 || impulse_length < 1)
            throw std::invalid_argument("WidebandConfig: subcarrier count and impulse length must be positive");
        if (impulse_length > n_subcarriers)
            throw std::invalid_argument("WidebandConfig: impulse length exceeds the OFDM block length");
        if (impulse_length < n_clusters)
            throw std::invalid_argument("WidebandConfig: impulse length " + std::to_string(impulse_length) +
                                        " cannot hold " + std::to_string(n_clusters) + " distinct delay taps");
    }

    void ScenarioConfig::validate() const
    {
        if (n_clusters < 1)
            throw std::invalid_argument("ScenarioConfig: at least one cluster is required");
        if (n_subpaths < 1)
            throw std::invalid_argument("ScenarioConfig: at least one subpath per cluster is required");
        auto check = [](const Interval &iv, const char *name, double lo, double hi)
        {
            if (!(iv.lo <= iv.hi) || iv.lo < lo || iv.hi > hi)
                throw std::invalid_argument(std::string("ScenarioConfig: invalid interval for ") + name);
        };
        check(azimuth_mean, "azimuth_mean", -kPi, kPi);
        check(zenith_mean, "zenith_mean", 0.0, kPi);
        check(bs_azimuth_spread, "bs_azimuth_spread", 1e-12, kPi);
        check(bs_zenith_spread, "bs_zenith_spread", 1e-12, kPi);
        check(ue_azimuth_spread, "ue_azimuth_spread", 1e-12, kPi);
        check(ue_zenith_spread, "ue_zenith_spread", 1e-12, kPi);
        check(ue_rotation, "ue_rotation", -2.0 * kPi, 2.0 * kPi);
        if (!(xpr_sigma_db >= 0.0) || !std::isfinite(xpr_mu_db))
            throw std::invalid_argument("ScenarioConfig: invalid XPR parameters");
        if (wideband)
            wideband_config.validate(n_clusters);
    }

    namespace
    {
        double normal_cdf(double x, double mu, double sigma)
        {
            return 0.5 * std::erfc(-(x - mu) / (sigma * std::numbers::sqrt2));
        }

        double normal_pdf(double x, double mu, double sigma)
        {
            const double t = (x - mu) / sigma;
            return std::exp(-0.5 * t * t) / (sigma * std::sqrt(2.0 * kPi));
        }

        constexpr double kTailMass = 1e-15;

        double uniform(Rng &rng, const Interval &iv)
        {
            return std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng);
        }
    } // namespace

    AngularGaussian::AngularGaussian(Direction mean, double sigma_azimuth, double sigma_zenith)
        : mean_(mean), sigma_azimuth_(sigma_azimuth), sigma_zenith_(sigma_zenith)
    {
        if (!(sigma_azimuth > 0.0) || !(sigma_zenith > 0.0))
            throw std::invalid_argument("AngularGaussian: spreads must be positive");
        mass_ = (normal_cdf(kPi, mean.azimuth(), sigma_azimuth) - normal_cdf(-kPi, mean.azimuth(), sigma_azimuth)) *
                (normal_cdf(kPi, mean.zenith(), sigma_zenith) - normal_cdf(0.0, mean.zenith(), sigma_zenith));
    }

    Direction AngularGaussian::sample(Rng &rng) const
    {
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (;;)
        {
            const double a = mean_.azimuth() + sigma_azimuth_ * gauss(rng);
            const double z = mean_.zenith() + sigma_zenith_ * gauss(rng);
            if (a >= -kPi && a <= kPi && z >= 0.0 && z <= kPi)
                return Direction(a, z);
        }
    }

    double AngularGaussian::azimuth_cdf(double a) const
    {
        return normal_cdf(a, mean_.azimuth(), sigma_azimuth_);
    }

    double AngularGaussian::zenith_cdf(double z) const
    {
        return normal_cdf(z, mean_.zenith(), sigma_zenith_);
    }

    double AngularGaussian::cell_probability(double a0, double a1, double z0, double z1) const
    {
        a0 = std::max(a0, -kPi);
        a1 = std::min(a1, kPi);
        z0 = std::max(z0, 0.0);
        z1 = std::min(z1, kPi);
        if (a1 <= a0 || z1 <= z0)
            return 0.0;
        return (azimuth_cdf(a1) - azimuth_cdf(a0)) * (zenith_cdf(z1) - zenith_cdf(z0)) / mass_;
    }

    double AngularGaussian::density(const Direction &dir) const
    {
        return normal_pdf(dir.azimuth(), mean_.azimuth(), sigma_azimuth_) *
               normal_pdf(dir.zenith(), mean_.zenith(), sigma_zenith_) / mass_;
    }

    void ScenarioDraw::validate() const
    {
        if (clusters.empty())
            throw std::invalid_argument("ScenarioDraw: no clusters");
        if (n_subpaths < 1)
            throw std::invalid_argument("ScenarioDraw: no subpaths");
        for (const auto &c : clusters)
            if (!(c.power > 0.0))
                throw std::invalid_argument("ScenarioDraw: cluster power must be positive");
    }

    ScenarioDraw draw_scenario(Rng &rng, const ScenarioConfig &cfg)
    {
        cfg.validate();
        ScenarioDraw out;
        out.n_subpaths = cfg.n_subpaths;
        out.xpr_mu_db = cfg.xpr_mu_db;
        out.xpr_sigma_db = cfg.xpr_sigma_db;

        std::vector<double> power(cfg.n_clusters);
        for (auto &p : power)
        {
            do
                p = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            while (p <= 0.0);
        }
        const double total = std::accumulate(power.begin(), power.end(), 0.0);

        for (std::size_t c = 0; c < cfg.n_clusters; ++c)
        {
            const double bs_a = uniform(rng, cfg.azimuth_mean);
            const double bs_z = uniform(rng, cfg.zenith_mean);
            const double ue_a = uniform(rng, cfg.azimuth_mean);
            const double ue_z = uniform(rng, cfg.zenith_mean);
            const double bs_sa = uniform(rng, cfg.bs_azimuth_spread);
            const double bs_sz = uniform(rng, cfg.bs_zenith_spread);
            const double ue_sa = uniform(rng, cfg.ue_azimuth_spread);
            const double ue_sz = uniform(rng, cfg.ue_zenith_spread);
            out.clusters.push_back(ClusterParams{power[c] / total,
                                                 AngularGaussian(Direction(bs_a, bs_z), bs_sa, bs_sz),
                                                 AngularGaussian(Direction(ue_a, ue_z), ue_sa, ue_sz), 0});
        }
        out.ue_rotation.alpha = uniform(rng, cfg.ue_rotation);
        out.ue_rotation.beta = uniform(rng, cfg.ue_rotation);
        out.ue_rotation.gamma = uniform(rng, cfg.ue_rotation);

        if (cfg.wideband)
            draw_delay_taps(rng, out, cfg.wideband_config);
        return out;
    }

    void draw_delay_taps(Rng &rng, ScenarioDraw &scenario, const WidebandConfig &wb)
    {
        wb.validate(scenario.clusters.size());
        std::vector<std::size_t> taps(wb.impulse_length);
        std::iota(taps.begin(), taps.end(), std::size_t(0));
        // Partial Fisher-Yates: the first N_c entries are distinct uniform taps
        for (std::size_t c = 0; c < scenario.clusters.size(); ++c)
        {
            std::uniform_int_distribution<std::size_t> pick(c, taps.size() - 1);
            std::swap(taps[c], taps[pick(rng)]);
            scenario.clusters[c].delay_tap = taps[c];
        }
    }

    std::vector<Subpath> draw_subpaths(Rng &rng, const ScenarioDraw &scenario)
    {
        scenario.validate();
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> phase(-kPi, kPi);
        std::vector<Subpath> out;
        out.reserve(scenario.clusters.size() * scenario.n_subpaths);
        for (std::size_t c = 0; c < scenario.clusters.size(); ++c)
        {
            const ClusterParams &cl = scenario.clusters[c];
            for (std::size_t i = 0; i < scenario.n_subpaths; ++i)
            {
                const Direction dod = cl.bs.sample(rng);
                const Direction doa = cl.ue.sample(rng);
                const double xpr_db = scenario.xpr_mu_db + scenario.xpr_sigma_db * gauss(rng);
                Subpath s{c, dod, doa, {}, {}, std::pow(10.0, 0.1 * xpr_db)};
                for (auto &p : s.phases_ul)
                    p = phase(rng);
                for (auto &p : s.phases_dl)
                    p = phase(rng);
                out.push_back(s);
            }
        }
        return out;
    }

    Eigen::MatrixXcd cluster_channels(const std::vector<Subpath> &subpaths, const ScenarioDraw &scenario,
                                      const ArrayModel &bs, const UePattern &ue, Link link)
    {
        const auto n = Eigen::Index(bs.n_antennas());
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, Eigen::Index(scenario.clusters.size()));
        Eigen::VectorXcd av(n), ah(n);
        for (const Subpath &s : subpaths)
        {
            if (s.cluster >= scenario.clusters.size())
                throw std::invalid_argument("cluster_channels: subpath refers to a missing cluster");
            bs.response_into(s.dod, av, ah);
            const UeField b = ue.response(s.doa);
            const auto &ph = link == Link::uplink ? s.phases_ul : s.phases_dl;
            const double cross = 1.0 / std::sqrt(s.xpr);
            // A M B^H with M = [e^{jVV}, e^{jVH}/sqrt(K); e^{jHV}/sqrt(K), e^{jHH}]
            const std::complex<double> cv = std::polar(b.vertical, ph[0]) + std::polar(cross * b.horizontal, ph[1]);
            const std::complex<double> ch = std::polar(cross * b.vertical, ph[2]) + std::polar(b.horizontal, ph[3]);
            const double scale = std::sqrt(scenario.clusters[s.cluster].power / double(scenario.n_subpaths));
            h.col(Eigen::Index(s.cluster)) += scale * (cv * av + ch * ah);
        }
        return h;
    }

    Eigen::VectorXcd synthesize_channel(const std::vector<Subpath> &subpaths, const ScenarioDraw &scenario,
                                        const ArrayModel &bs, const UePattern &ue, Link link)
    {
        return cluster_channels(subpaths, scenario, bs, ue, link).rowwise().sum();
    }

    Eigen::MatrixXcd synthesize_ofdm_channel(const std::vector<Subpath> &subpaths, const ScenarioDraw &scenario,
                                             const ArrayModel &bs, const UePattern &ue, Link link,
                                             const WidebandConfig &wb)
    {
        wb.validate(1);
        for (const auto &c : scenario.clusters)
            if (c.delay_tap >= wb.impulse_length)
                throw std::invalid_argument("synthesize_ofdm_channel: delay tap outside the impulse response");
        const Eigen::MatrixXcd hc = cluster_channels(subpaths, scenario, bs, ue, link);
        const auto ns = Eigen::Index(wb.n_subcarriers);
        Eigen::MatrixXcd taps(hc.cols(), ns);
        for (Eigen::Index c = 0; c < hc.cols(); ++c)
        {
            const double l = double(scenario.clusters[std::size_t(c)].delay_tap);
            for (Eigen::Index k = 0; k < ns; ++k)
            {
                // Reduce k*l modulo N_s before scaling so the phase stays exact
                const double kl = std::fmod(double(k) * l, double(ns));
                taps(c, k) = std::polar(1.0, -2.0 * kPi * kl / double(ns));
            }
        }
        return hc * taps;
    }

    double mean_inverse_xpr(double mu_db, double sigma_db)
    {
        const double s = std::log(10.0) / 10.0;
        return std::exp(-mu_db * s + 0.5 * (sigma_db * s) * (sigma_db * s));
    }

    double mean_inverse_xpr_monte_carlo(Rng &rng, double mu_db, double sigma_db, std::size_t n)
    {
        if (n == 0)
            throw std::invalid_argument("mean_inverse_xpr_monte_carlo: zero samples");
        std::normal_distribution<double> gauss(mu_db, sigma_db);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += std::pow(10.0, -0.1 * gauss(rng));
        return acc / double(n);
    }

    std::array<double, 2> ue_polarization_weights(const AngularGaussian &ue_dist, const UePattern &ue,
                                                  double mean_inv_xpr)
    {
        constexpr int cells = 64;
        constexpr double half_width = 7.0; // in standard deviations
        const double a0 = std::max(-kPi, ue_dist.mean().azimuth() - half_width * ue_dist.sigma_azimuth());
        const double a1 = std::min(kPi, ue_dist.mean().azimuth() + half_width * ue_dist.sigma_azimuth());
        const double z0 = std::max(0.0, ue_dist.mean().zenith() - half_width * ue_dist.sigma_zenith());
        const double z1 = std::min(kPi, ue_dist.mean().zenith() + half_width * ue_dist.sigma_zenith());
        const double da = (a1 - a0) / cells, dz = (z1 - z0) / cells;

        std::array<double, cells + 1> ca{}, cz{};
        for (int i = 0; i <= cells; ++i)
        {
            ca[std::size_t(i)] = ue_dist.azimuth_cdf(a0 + i * da);
            cz[std::size_t(i)] = ue_dist.zenith_cdf(z0 + i * dz);
        }

        double mass = 0.0, vv = 0.0, hh = 0.0;
        for (int i = 0; i < cells; ++i)
            for (int j = 0; j < cells; ++j)
            {
                const double w = (ca[std::size_t(i + 1)] - ca[std::size_t(i)]) * (cz[std::size_t(j + 1)] - cz[std::size_t(j)]);
                const UeField b = ue.response(Direction(a0 + (i + 0.5) * da, z0 + (j + 0.5) * dz));
                mass += w;
                vv += w * b.vertical * b.vertical;
                hh += w * b.horizontal * b.horizontal;
            }
        vv /= mass;
        hh /= mass;
        return {vv + mean_inv_xpr * hh, hh + mean_inv_xpr * vv};
    }

    PolarizedAps aps_from_scenario(const ScenarioDraw &scenario, const UePattern &ue,
                                   std::shared_ptr<const AngularGrid> grid, double mean_inv_xpr, ApsSampling sampling)
    {
        scenario.validate();
        if (!(mean_inv_xpr >= 0.0))
            throw std::invalid_argument("aps_from_scenario: 1/K must be nonnegative");
        const AngularGrid &g = *grid;
        const std::size_t na = g.n_azimuth(), nz = g.n_zenith();
        Eigen::VectorXd rho_v = Eigen::VectorXd::Zero(Eigen::Index(g.size()));
        Eigen::VectorXd rho_h = Eigen::VectorXd::Zero(Eigen::Index(g.size()));

        std::vector<double> fa(na), fz(nz);
        for (const ClusterParams &c : scenario.clusters)
        {
            const auto w = ue_polarization_weights(c.ue, ue, mean_inv_xpr);
            if (sampling == ApsSampling::cell_average)
            {
                // Separable cell masses, divided by the cell area
                for (std::size_t ia = 0; ia < na; ++ia)
                    fa[ia] = c.bs.azimuth_cdf(g.azimuth_edge(ia + 1)) - c.bs.azimuth_cdf(g.azimuth_edge(ia));
                for (std::size_t iz = 0; iz < nz; ++iz)
                    fz[iz] = c.bs.zenith_cdf(g.zenith_edge(iz + 1)) - c.bs.zenith_cdf(g.zenith_edge(iz));
                // Far-tail cells carry < 1e-15 of the mass; dropping them keeps the support compact
                for (auto *v : {&fa, &fz})
                    for (double &m : *v)
                        if (m < kTailMass)
                            m = 0.0;
                const double norm = 1.0 / ((c.bs.azimuth_cdf(kPi) - c.bs.azimuth_cdf(-kPi)) *
                                           (c.bs.zenith_cdf(kPi) - c.bs.zenith_cdf(0.0)));
                const double scale = c.power * norm;
                for (std::size_t ia = 0; ia < na; ++ia)
                {
                    if (fa[ia] == 0.0)
                        continue;
                    for (std::size_t iz = 0; iz < nz; ++iz)
                    {
                        const auto q = Eigen::Index(ia * nz + iz);
                        const double m = scale * fa[ia] * fz[iz] / g.weight(std::size_t(q));
                        rho_v(q) += w[0] * m;
                        rho_h(q) += w[1] * m;
                    }
                }
            }
            else
            {
                for (std::size_t q = 0; q < g.size(); ++q)
                {
                    const Direction dir = g.node(q);
                    double f = c.power * c.bs.density(dir);
                    if (g.measure() == AngularMeasure::solid_angle)
                        f /= std::sin(dir.zenith());
                    rho_v(Eigen::Index(q)) += w[0] * f;
                    rho_h(Eigen::Index(q)) += w[1] * f;
                }
            }
        }
        return PolarizedAps(std::move(grid), std::move(rho_v), std::move(rho_h));
    }

} // namespace fddcov

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

#include "doctest.h"
#include "test_support.hpp"

#include "fddcov/channel.hpp"
#include "fddcov/covariance.hpp"

#include <cmath>
#include <numeric>

using namespace fddcov;

namespace
{
    ScenarioDraw single_cluster(Direction bs, double power = 1.0, std::size_t subpaths = 1)
    {
        ScenarioDraw s;
        s.n_subpaths = subpaths;
        s.clusters.push_back({power, AngularGaussian(bs, 1e-9, 1e-9), AngularGaussian(Direction(0.3, 1.4), 1e-9, 1e-9), 0});
        return s;
    }

    Subpath zero_phase_path(std::size_t cluster, Direction dod)
    {
        return Subpath{cluster, dod, Direction(0.3, 1.4), {0, 0, 0, 0}, {0, 0, 0, 0},
                       std::numeric_limits<double>::infinity()};
    }

    Eigen::MatrixXcd sample_cov_of(std::uint64_t seed, const ScenarioDraw &sc, const ArrayModel &arr, Link link,
                                   std::size_t n)
    {
        Rng rng(seed);
        const UePattern ue(sc.ue_rotation);
        Eigen::MatrixXcd y(Eigen::Index(arr.n_antennas()), Eigen::Index(n));
        for (std::size_t s = 0; s < n; ++s)
            y.col(Eigen::Index(s)) = synthesize_channel(draw_subpaths(rng, sc), sc, arr, ue, link);
        return sample_covariance(y);
    }
}

TEST_SUITE("channel")
{
    TEST_CASE("rng streams")
    {
        Rng a = make_rng(5, 1), b = make_rng(5, 1), c = make_rng(5, 2);
        CHECK(a() == b());
        CHECK(make_rng(5, 1)() != c());
        CHECK(mix_seed(5, 1) != mix_seed(5, 2));
        CHECK(mix_seed(5, 1) != mix_seed(6, 1));
    }

    TEST_CASE("scenario draws")
    {
        ScenarioConfig one;
        one.n_clusters = 1;
        CHECK(test::draw(3, one).clusters[0].power == 1.0);

        const ScenarioConfig cfg;
        for (std::uint64_t seed = 0; seed < 50; ++seed)
        {
            const ScenarioDraw s = test::draw(seed, cfg);
            REQUIRE(s.clusters.size() == 5);
            double total = 0.0;
            for (const auto &c : s.clusters)
            {
                total += c.power;
                CHECK(c.power > 0.0);
                CHECK(c.bs.mean().azimuth() >= cfg.azimuth_mean.lo);
                CHECK(c.bs.mean().azimuth() <= cfg.azimuth_mean.hi);
                CHECK(c.bs.mean().zenith() >= cfg.zenith_mean.lo);
                CHECK(c.bs.mean().zenith() <= cfg.zenith_mean.hi);
                CHECK(c.bs.sigma_azimuth() >= cfg.bs_azimuth_spread.lo);
                CHECK(c.bs.sigma_azimuth() <= cfg.bs_azimuth_spread.hi);
                CHECK(c.bs.sigma_zenith() >= cfg.bs_zenith_spread.lo);
                CHECK(c.bs.sigma_zenith() <= cfg.bs_zenith_spread.hi);
                CHECK(c.ue.sigma_azimuth() >= cfg.ue_azimuth_spread.lo);
                CHECK(c.ue.sigma_azimuth() <= cfg.ue_azimuth_spread.hi);
                CHECK(c.ue.sigma_zenith() >= cfg.ue_zenith_spread.lo);
                CHECK(c.ue.sigma_zenith() <= cfg.ue_zenith_spread.hi);
            }
            CHECK(std::abs(total - 1.0) < 1e-14);
            CHECK(s.ue_rotation.alpha >= cfg.ue_rotation.lo);
            CHECK(s.ue_rotation.alpha <= cfg.ue_rotation.hi);
        }

        const ScenarioDraw a = test::draw(77), b = test::draw(77);
        for (std::size_t c = 0; c < a.clusters.size(); ++c)
        {
            CHECK(a.clusters[c].power == b.clusters[c].power);
            CHECK(a.clusters[c].bs.mean().azimuth() == b.clusters[c].bs.mean().azimuth());
            CHECK(a.clusters[c].ue.sigma_zenith() == b.clusters[c].ue.sigma_zenith());
        }
        CHECK(a.ue_rotation.gamma == b.ue_rotation.gamma);

        ScenarioConfig bad;
        bad.n_clusters = 0;
        CHECK_THROWS_AS(test::draw(1, bad), std::invalid_argument);
    }

    TEST_CASE("vanishing spreads put every subpath on the cluster mean")
    {
        ScenarioConfig cfg;
        cfg.bs_azimuth_spread = cfg.bs_zenith_spread = {1e-10, 1e-10};
        cfg.ue_azimuth_spread = cfg.ue_zenith_spread = {1e-10, 1e-10};
        Rng rng(4);
        const ScenarioDraw s = draw_scenario(rng, cfg);
        for (const Subpath &p : draw_subpaths(rng, s))
        {
            const auto &c = s.clusters[p.cluster];
            CHECK(std::abs(p.dod.azimuth() - c.bs.mean().azimuth()) < 1e-8);
            CHECK(std::abs(p.dod.zenith() - c.bs.mean().zenith()) < 1e-8);
            CHECK(std::abs(p.doa.azimuth() - c.ue.mean().azimuth()) < 1e-8);
            CHECK(std::abs(p.doa.zenith() - c.ue.mean().zenith()) < 1e-8);
        }
    }

    TEST_CASE("XPR statistics")
    {
        Rng rng(8);
        ScenarioDraw s = test::draw(1);
        s.n_subpaths = 20000; // 5 clusters -> 1e5 draws
        double acc = 0.0;
        std::size_t n = 0;
        for (const Subpath &p : draw_subpaths(rng, s))
        {
            acc += 10.0 * std::log10(p.xpr);
            ++n;
        }
        CHECK(n == 100000);
        CHECK(std::abs(acc / double(n) - 7.0) <= 0.1);

        // E[1/K] against an independent Monte Carlo average of 10^(-X/10), X ~ N(7, 9)
        std::mt19937_64 g(1234);
        std::normal_distribution<double> x(7.0, 3.0);
        double mc = 0.0;
        for (int i = 0; i < 1000000; ++i)
            mc += std::pow(10.0, -x(g) / 10.0);
        mc /= 1e6;
        const double exact = mean_inverse_xpr(7.0, 3.0);
        CHECK(std::abs(exact - mc) <= 0.005 * mc);
        // lognormal mean exp(m + s^2 / 2) with m = -0.7 ln 10, s = 0.3 ln 10
        const double ln10 = std::log(10.0);
        CHECK(exact == doctest::Approx(std::exp(-0.7 * ln10 + 0.5 * 0.09 * ln10 * ln10)).epsilon(1e-14));
        Rng r2(2);
        CHECK(std::abs(mean_inverse_xpr_monte_carlo(r2, 7.0, 3.0, 1000000) - exact) <= 0.005 * exact);
    }

    TEST_CASE("single co-polarized path")
    {
        const UpaGeometry g = test::default_geometry();
        const ArrayModel arr(g, 1.8e9);
        const Direction dod(0.2, 1.7);
        const double alpha = 1.0;
        const ScenarioDraw s = single_cluster(dod, alpha);
        const std::vector<Subpath> paths{zero_phase_path(0, dod)};
        const Eigen::VectorXcd h = synthesize_channel(paths, s, arr, UePattern(), Link::uplink);
        const auto a = arr.response(dod);
        CHECK((h - std::sqrt(alpha) * a.vertical).norm() <= 1e-12 * a.vertical.norm());

        const double lambda = 3.7;
        const ScenarioDraw scaled = single_cluster(dod, lambda * alpha);
        const Eigen::VectorXcd hs = synthesize_channel(paths, scaled, arr, UePattern(), Link::uplink);
        CHECK(hs.norm() == doctest::Approx(std::sqrt(lambda) * h.norm()).epsilon(1e-12));
    }

    TEST_CASE("OFDM responses")
    {
        const UpaGeometry g = test::default_geometry();
        const ArrayModel arr(g, 1.8e9);
        const WidebandConfig wb;
        Rng rng(12);
        ScenarioDraw s = test::draw(12);
        const auto paths = draw_subpaths(rng, s);
        const UePattern ue(s.ue_rotation);

        const Eigen::VectorXcd narrow = synthesize_channel(paths, s, arr, ue, Link::downlink);
        const Eigen::MatrixXcd flat = synthesize_ofdm_channel(paths, s, arr, ue, Link::downlink, wb);
        REQUIRE(flat.cols() == 64);
        for (Eigen::Index k = 0; k < flat.cols(); ++k)
            CHECK((flat.col(k) - narrow).norm() <= 1e-12 * narrow.norm());

        ScenarioDraw one = single_cluster(Direction(0.1, 1.5), 1.0, 20);
        one.clusters[0].delay_tap = 1;
        const auto p1 = draw_subpaths(rng, one);
        const Eigen::VectorXcd h1 = synthesize_channel(p1, one, arr, UePattern(), Link::uplink);
        const Eigen::MatrixXcd taps = synthesize_ofdm_channel(p1, one, arr, UePattern(), Link::uplink, wb);
        for (Eigen::Index k = 0; k < taps.cols(); ++k)
        {
            const std::complex<double> f = std::polar(1.0, -2.0 * kPi * double(k) / 64.0);
            CHECK((taps.col(k) - h1 * f).norm() <= 1e-12 * h1.norm());
            CHECK(taps.col(k).norm() == doctest::Approx(h1.norm()).epsilon(1e-12));
        }

        ScenarioConfig wcfg;
        wcfg.wideband = true;
        const ScenarioDraw w = test::draw(5, wcfg);
        std::vector<std::size_t> used;
        for (const auto &c : w.clusters)
        {
            CHECK(c.delay_tap < wcfg.wideband_config.impulse_length);
            used.push_back(c.delay_tap);
        }
        std::sort(used.begin(), used.end());
        CHECK(std::adjacent_find(used.begin(), used.end()) == used.end());

        WidebandConfig tight{64, 4};
        CHECK_THROWS_AS(tight.validate(5), std::invalid_argument);
    }

    TEST_CASE("subcarrier covariances coincide")
    {
        const UpaGeometry g = test::default_geometry();
        const ArrayModel arr(g, 1.8e9);
        ScenarioConfig cfg;
        cfg.wideband = true;
        const ScenarioDraw s = test::draw(31, cfg);
        const UePattern ue(s.ue_rotation);
        Rng rng(31);
        const std::size_t n = 10000;
        const Eigen::Index ks[3] = {0, 16, 32};
        Eigen::MatrixXcd y[3];
        for (auto &m : y)
            m.resize(64, Eigen::Index(n));
        for (std::size_t i = 0; i < n; ++i)
        {
            const Eigen::MatrixXcd h = synthesize_ofdm_channel(draw_subpaths(rng, s), s, arr, ue, Link::uplink,
                                                               cfg.wideband_config);
            for (int j = 0; j < 3; ++j)
                y[j].col(Eigen::Index(i)) = h.col(ks[j]);
        }
        Eigen::MatrixXcd r[3];
        for (int j = 0; j < 3; ++j)
            r[j] = sample_covariance(y[j]);
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b)
            {
                const double d = (r[a] - r[b]).norm() / r[a].norm();
                INFO("k = ", ks[a], " vs ", ks[b], ": ", d);
                CHECK(d <= 0.03);
            }
    }

    TEST_CASE("channels have zero mean")
    {
        const UpaGeometry g = test::default_geometry();
        const ArrayModel arr(g, 1.8e9);
        const ScenarioDraw s = test::draw(40);
        const UePattern ue(s.ue_rotation);
        Rng rng(40);
        const int n = 10000;
        Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(64);
        Eigen::VectorXd power = Eigen::VectorXd::Zero(64);
        for (int i = 0; i < n; ++i)
        {
            const Eigen::VectorXcd h = synthesize_channel(draw_subpaths(rng, s), s, arr, ue, Link::uplink);
            mean += h;
            power += h.cwiseAbs2();
        }
        mean /= double(n);
        power /= double(n);
        for (Eigen::Index i = 0; i < 64; ++i)
            CHECK(std::abs(mean(i)) < 5.0 * std::sqrt(power(i)) / std::sqrt(double(n)));
    }

    TEST_CASE("channel power matches the analytic trace")
    {
        const UpaGeometry g = test::default_geometry();
        const auto grid = test::make_grid(360, 180);
        const ArrayModel arr(g, 1.8e9);
        for (std::uint64_t seed : {50u, 51u, 52u})
        {
            const ScenarioDraw s = test::draw(seed);
            const UePattern ue(s.ue_rotation);
            const PolarizedAps aps = aps_from_scenario(s, ue, grid, mean_inverse_xpr(7.0, 3.0));
            const double tr = covariance_from_aps(aps, arr, *grid).trace().real();
            Rng rng(seed);
            double acc = 0.0;
            const int n = 10000;
            for (int i = 0; i < n; ++i)
                acc += synthesize_channel(draw_subpaths(rng, s), s, arr, ue, Link::uplink).squaredNorm();
            CHECK(std::abs(acc / n - tr) <= 0.02 * tr);
        }
    }

    TEST_CASE("both carriers match covariances of one spectrum")
    {
        const UpaGeometry g = test::default_geometry();
        const auto grid = test::make_grid(360, 180);
        const ScenarioDraw s = test::draw(60);
        const UePattern ue(s.ue_rotation);
        // the spectrum takes no carrier: one APS serves both links
        const PolarizedAps aps = aps_from_scenario(s, ue, grid, mean_inverse_xpr(7.0, 3.0));
        for (auto [f, link] : {std::pair{1.8e9, Link::uplink}, std::pair{1.9e9, Link::downlink}})
        {
            const ArrayModel arr(g, f);
            const Eigen::MatrixXcd r = covariance_from_aps(aps, arr, *grid);
            const Eigen::MatrixXcd sc = sample_cov_of(61, s, arr, link, 40000);
            CHECK(test::rel_fro(sc, r) <= 0.05);
        }
    }

    TEST_CASE("spectrum examples")
    {
        const auto grid = test::make_grid(120, 60);
        const ScenarioDraw s = test::draw(70);

        // no horizontal field at the UE and no cross coupling
        const PolarizedAps none = aps_from_scenario(s, UePattern(), grid, 0.0);
        CHECK(none.rho_h().cwiseAbs().maxCoeff() <= 1e-12 * none.rho_v().maxCoeff());
        CHECK(none.min_value() >= 0.0);

        // unit total power of the BS densities, cross-polar share 1/K
        const double inv_k = mean_inverse_xpr(7.0, 3.0);
        ScenarioConfig inner;
        inner.zenith_mean = {kPi / 3, 2 * kPi / 3};
        const ScenarioDraw si = test::draw(71, inner);
        const PolarizedAps aps = aps_from_scenario(si, UePattern(), grid, inv_k);
        CHECK(aps.total_power() == doctest::Approx(1.0 + inv_k).epsilon(1e-6));
        // independent quadrature at 4x resolution of the same spectrum in point sampling
        const auto fine = test::make_grid(480, 240);
        const PolarizedAps pf = aps_from_scenario(si, UePattern(), fine, inv_k, ApsSampling::point);
        CHECK(pf.total_power() == doctest::Approx(1.0 + inv_k).epsilon(1e-3));

        // delta limit
        ScenarioConfig narrow;
        narrow.n_clusters = 1;
        narrow.bs_azimuth_spread = narrow.bs_zenith_spread = {1e-6, 1e-6};
        const ScenarioDraw sd = test::draw(72, narrow);
        const PolarizedAps pd = aps_from_scenario(sd, UePattern(), grid, inv_k);
        const std::size_t q = grid->nearest(sd.clusters[0].bs.mean());
        CHECK(pd.rho_v()(Eigen::Index(q)) * grid->weight(q) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(pd.rho_h()(Eigen::Index(q)) * grid->weight(q) == doctest::Approx(inv_k).epsilon(1e-6));
    }
}

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

#include "fddcov/geometry.hpp"

#include <cmath>
#include <random>

using namespace fddcov;

TEST_SUITE("geometry")
{
    TEST_CASE("directions outside the domain are rejected")
    {
        CHECK_THROWS_AS(Direction(4.0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(Direction(0.0, -0.1), std::invalid_argument);
        CHECK_THROWS_AS(Direction(0.0, 3.2), std::invalid_argument);
        CHECK_NOTHROW(Direction(-kPi, kPi));
    }

    TEST_CASE("element positions")
    {
        UpaGeometry g = test::small_geometry(1, 1);
        auto p = element_positions(g);
        REQUIRE(p.size() == 1);
        CHECK(p[0].norm() == 0.0);

        g = test::small_geometry(2, 1);
        g.spacing_m = 0.1;
        p = element_positions(g);
        REQUIRE(p.size() == 2);
        CHECK(p[0].norm() == 0.0);
        CHECK(p[1].x() == 0.0);
        CHECK(p[1].y() == 0.0);
        CHECK(p[1].z() == doctest::Approx(0.1));

        g = test::default_geometry();
        const double d = 0.5 * wavelength(1.8e9);
        CHECK(g.spacing_m == doctest::Approx(d));
        p = element_positions(g);
        REQUIRE(p.size() == 32);
        double ymax = 0, zmax = 0;
        for (const auto &q : p)
        {
            CHECK(q.x() == 0.0);
            ymax = std::max(ymax, q.y());
            zmax = std::max(zmax, q.z());
        }
        CHECK(ymax == doctest::Approx(3 * d));
        CHECK(zmax == doctest::Approx(7 * d));
    }

    TEST_CASE("element field at boresight")
    {
        const ElementPattern pat;
        const Direction bore(0.0, kPi / 2);
        const double peak = std::pow(10.0, pat.max_gain_dbi / 20.0);

        auto f = bs_element_field(bore, 0.0, pat);
        CHECK(std::abs(f.vertical) == doctest::Approx(peak).epsilon(1e-14));
        CHECK(std::abs(f.horizontal) == 0.0);

        f = bs_element_field(bore, kPi / 4, pat);
        CHECK(std::abs(f.vertical) == doctest::Approx(peak / std::sqrt(2.0)).epsilon(1e-14));
        CHECK(std::abs(f.horizontal) == doctest::Approx(peak / std::sqrt(2.0)).epsilon(1e-14));
    }

    TEST_CASE("parabolic pattern attenuation")
    {
        const ElementPattern pat; // 65 deg beamwidths
        // 12 (phi / phi_3dB)^2 evaluated by hand
        CHECK(pat.relative_gain_db(Direction(deg2rad(32.5), kPi / 2)) == doctest::Approx(-3.0).epsilon(1e-12));
        CHECK(pat.relative_gain_db(Direction(deg2rad(65.0), kPi / 2)) == doctest::Approx(-12.0).epsilon(1e-12));
        CHECK(pat.relative_gain_db(Direction(0.0, deg2rad(90.0 + 32.5))) == doctest::Approx(-3.0).epsilon(1e-12));
        // floor at the front-to-back ratio
        CHECK(pat.relative_gain_db(Direction(kPi, kPi / 2)) == doctest::Approx(-30.0));
        CHECK(pat.relative_gain_db(Direction(0.0, 0.0)) == doctest::Approx(-12.0 * (90.0 / 65.0) * (90.0 / 65.0)));
        CHECK(pat.relative_gain_db(Direction(kPi / 2, 0.1)) == doctest::Approx(-30.0));
    }

    TEST_CASE("slant preserves element power")
    {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> ua(-kPi, kPi), uz(0.0, kPi), us(-kPi, kPi);
        const ElementPattern pat;
        for (int i = 0; i < 500; ++i)
        {
            const Direction d(ua(rng), uz(rng));
            const auto f0 = bs_element_field(d, 0.0, pat);
            const double p0 = std::norm(f0.vertical) + std::norm(f0.horizontal);
            const auto f1 = bs_element_field(d, us(rng), pat);
            const double p1 = std::norm(f1.vertical) + std::norm(f1.horizontal);
            CHECK(std::abs(p1 - p0) <= 1e-12 * p0);
        }
    }

    TEST_CASE("single unslanted isotropic element")
    {
        UpaGeometry g = test::small_geometry(1, 1);
        g.pattern = test::isotropic_pattern();
        g.slant_rad[0] = 0.0;
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> ua(-kPi, kPi), uz(0.0, kPi);
        for (int i = 0; i < 20; ++i)
        {
            const auto a = array_response(g, 1.8e9, Direction(ua(rng), uz(rng)));
            CHECK(std::abs(a.vertical(0) - std::complex<double>(1.0, 0.0)) < 1e-15);
            CHECK(std::abs(a.horizontal(0)) < 1e-15);
        }
    }

    TEST_CASE("co-located slanted pair at boresight")
    {
        UpaGeometry g = test::small_geometry(1, 1);
        g.pattern = test::isotropic_pattern();
        const auto a = array_response(g, 1.8e9, Direction(0.0, kPi / 2));
        const double r = 1.0 / std::sqrt(2.0);
        CHECK(std::abs(a.vertical(0) - r) < 1e-15);
        CHECK(std::abs(a.vertical(1) - r) < 1e-15);
        CHECK(std::abs(a.horizontal(0) - r) < 1e-15);
        CHECK(std::abs(a.horizontal(1) + r) < 1e-15);
    }

    TEST_CASE("steering phases follow the element positions")
    {
        UpaGeometry g = test::default_geometry();
        const Direction dir(0.4, 1.2);
        const auto a = array_response(g, 1.8e9, dir);
        // independent evaluation: centred positions, k <p, u>
        const auto pos = element_positions(g);
        Eigen::Vector3d c = Eigen::Vector3d::Zero();
        for (const auto &p : pos)
            c += p;
        c /= double(pos.size());
        const Eigen::Vector3d u(std::sin(1.2) * std::cos(0.4), std::sin(1.2) * std::sin(0.4), std::cos(1.2));
        const double k = 2 * kPi * 1.8e9 / kSpeedOfLight;
        const auto f0 = bs_element_field(dir, kPi / 4, g.pattern);
        const auto f1 = bs_element_field(dir, -kPi / 4, g.pattern);
        for (std::size_t n = 0; n < pos.size(); ++n)
        {
            const std::complex<double> ph = std::polar(1.0, k * (pos[n] - c).dot(u));
            CHECK(std::abs(a.vertical(Eigen::Index(n)) - f0.vertical * ph) < 1e-12);
            CHECK(std::abs(a.horizontal(Eigen::Index(n)) - f0.horizontal * ph) < 1e-12);
            CHECK(std::abs(a.vertical(Eigen::Index(n + 32)) - f1.vertical * ph) < 1e-12);
            CHECK(std::abs(a.horizontal(Eigen::Index(n + 32)) - f1.horizontal * ph) < 1e-12);
        }
    }

    TEST_CASE("phases scale with the carrier frequency")
    {
        UpaGeometry g = test::default_geometry();
        g.pattern = test::isotropic_pattern();
        const double f1 = 1.8e9, f2 = 1.9e9;

        // near boresight every phase is inside (-pi, pi) at both carriers
        {
            const Direction dir(0.05, kPi / 2 + 0.05);
            const auto a1 = array_response(g, f1, dir), a2 = array_response(g, f2, dir);
            for (Eigen::Index n = 0; n < a1.vertical.size(); ++n)
            {
                CHECK(std::abs(a2.vertical(n)) == doctest::Approx(std::abs(a1.vertical(n))).epsilon(1e-14));
                const double lhs = std::arg(a2.vertical(n) / a1.vertical(n));
                const double rhs = (f2 / f1) * std::arg(a1.vertical(n)) - std::arg(a1.vertical(n));
                CHECK(std::abs(lhs - rhs) < 1e-9);
                CHECK(std::abs(std::arg(a2.vertical(n)) - (f2 / f1) * std::arg(a1.vertical(n))) < 1e-9);
            }
        }
        // anywhere: the unwrapped phase scales, checked modulo 2 pi
        {
            const Direction dir(-1.1, 0.7);
            const auto a1 = array_response(g, f1, dir), a2 = array_response(g, f2, dir);
            const auto pos = element_positions(g);
            Eigen::Vector3d c = Eigen::Vector3d::Zero();
            for (const auto &p : pos)
                c += p;
            c /= double(pos.size());
            const double k1 = 2 * kPi * f1 / kSpeedOfLight;
            for (std::size_t n = 0; n < pos.size(); ++n)
            {
                const double phi1 = k1 * (pos[n] - c).dot(dir.unit_vector());
                const std::complex<double> expect = std::polar(1.0, (f2 / f1) * phi1);
                const std::complex<double> got = a2.vertical(Eigen::Index(n)) / std::abs(a2.vertical(Eigen::Index(n)));
                CHECK(std::abs(got - expect) < 1e-9);
                CHECK(std::abs(std::abs(a2.vertical(Eigen::Index(n))) - std::abs(a1.vertical(Eigen::Index(n)))) < 1e-14);
            }
        }
    }

    TEST_CASE("adjacent grid nodes have close responses")
    {
        const UpaGeometry g = test::default_geometry();
        const AngularGrid grid(60, 30);
        const auto resp = array_response(g, 1.8e9, grid);
        const double k = 2 * kPi * 1.8e9 / kSpeedOfLight;
        const double amax = std::pow(10.0, g.pattern.max_gain_dbi / 20.0);
        const double step = std::max(grid.azimuth_step(), grid.zenith_step());
        const double bound = k * g.spacing_m * double(g.n_vertical + g.n_horizontal) * step * amax;
        double worst = 0.0;
        for (std::size_t ia = 0; ia + 1 < grid.n_azimuth(); ++ia)
            for (std::size_t iz = 0; iz + 1 < grid.n_zenith(); ++iz)
            {
                const auto q = Eigen::Index(ia * grid.n_zenith() + iz);
                const auto qa = q + Eigen::Index(grid.n_zenith()), qz = q + 1;
                for (auto other : {qa, qz})
                {
                    worst = std::max(worst, (resp.vertical.col(q) - resp.vertical.col(other)).cwiseAbs().maxCoeff());
                    worst = std::max(worst, (resp.horizontal.col(q) - resp.horizontal.col(other)).cwiseAbs().maxCoeff());
                }
            }
        CHECK(worst <= bound);
    }

    TEST_CASE("grid nodes and weights")
    {
        const AngularGrid grid(120, 60);
        CHECK(grid.size() == 7200);
        CHECK(grid.weights().sum() == doctest::Approx(2 * kPi * kPi).epsilon(1e-12));
        const Direction n0 = grid.node(0);
        CHECK(n0.azimuth() == doctest::Approx(-kPi + kPi / 120));
        CHECK(n0.zenith() == doctest::Approx(kPi / 120));
        CHECK(grid.nearest(grid.node(4321)) == 4321);

        const AngularGrid sa(120, 60, AngularMeasure::solid_angle);
        CHECK(sa.weights().sum() == doctest::Approx(4 * kPi).epsilon(1e-12));
        CHECK_FALSE(sa == grid);
    }

    TEST_CASE("UE pattern")
    {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> ua(-kPi, kPi), uz(0.0, kPi), ur(-kPi, kPi);

        const UePattern plain;
        for (int i = 0; i < 50; ++i)
        {
            const auto b = plain.response(Direction(ua(rng), uz(rng)));
            CHECK(b.vertical == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(std::abs(b.horizontal) < 1e-12);
        }

        const UePattern turned(EulerRotation{2 * kPi, 0.0, 0.0});
        for (int i = 0; i < 50; ++i)
        {
            const Direction d(ua(rng), uz(rng));
            CHECK(std::abs(turned.response(d).vertical - plain.response(d).vertical) < 1e-12);
            CHECK(std::abs(turned.response(d).horizontal - plain.response(d).horizontal) < 1e-12);
        }

        const UePattern tilted(EulerRotation{kPi / 6, kPi / 6, kPi / 6});
        const auto b = tilted.response(Direction(0.0, kPi / 2));
        CHECK(std::abs(b.horizontal) > 1e-3);
        CHECK(b.vertical * b.vertical + b.horizontal * b.horizontal == doctest::Approx(1.0).epsilon(1e-12));

        for (int i = 0; i < 500; ++i)
        {
            const UePattern p(EulerRotation{ur(rng), ur(rng), ur(rng)});
            const auto r = p.response(Direction(ua(rng), uz(rng)));
            CHECK(std::abs(r.vertical * r.vertical + r.horizontal * r.horizontal - 1.0) <= 1e-12);
        }
    }
}

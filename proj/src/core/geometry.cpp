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

#include "fddcov/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fddcov
{
    Direction::Direction(double azimuth, double zenith)
        : azimuth_(azimuth), zenith_(zenith)
    {
        if (!(azimuth >= -kPi && azimuth <= kPi))
            throw std::invalid_argument("Direction: azimuth " + std::to_string(azimuth) + " outside [-pi, pi]");
        if (!(zenith >= 0.0 && zenith <= kPi))
            throw std::invalid_argument("Direction: zenith " + std::to_string(zenith) + " outside [0, pi]");
    }

    Eigen::Vector3d Direction::unit_vector() const
    {
        const double sz = std::sin(zenith_);
        return {sz * std::cos(azimuth_), sz * std::sin(azimuth_), std::cos(zenith_)};
    }

    AngularGrid::AngularGrid(std::size_t n_azimuth, std::size_t n_zenith, AngularMeasure measure)
        : n_azimuth_(n_azimuth), n_zenith_(n_zenith), measure_(measure)
    {
        if (n_azimuth == 0 || n_zenith == 0)
            throw std::invalid_argument("AngularGrid: both dimensions must be positive");
        weights_.resize(Eigen::Index(size()));
        for (std::size_t ia = 0; ia < n_azimuth_; ++ia)
            for (std::size_t iz = 0; iz < n_zenith_; ++iz)
            {
                const double dz = measure_ == AngularMeasure::lebesgue
                                      ? zenith_step()
                                      : std::cos(zenith_edge(iz)) - std::cos(zenith_edge(iz + 1));
                weights_(Eigen::Index(ia * n_zenith_ + iz)) = azimuth_step() * dz;
            }
    }

    Direction AngularGrid::node(std::size_t q) const
    {
        if (q >= size())
            throw std::out_of_range("AngularGrid::node: index out of range");
        const std::size_t ia = q / n_zenith_;
        const std::size_t iz = q % n_zenith_;
        return Direction(-kPi + (double(ia) + 0.5) * azimuth_step(), (double(iz) + 0.5) * zenith_step());
    }

    std::size_t AngularGrid::nearest(const Direction &dir) const
    {
        auto ia = std::size_t(std::floor((dir.azimuth() + kPi) / azimuth_step()));
        auto iz = std::size_t(std::floor(dir.zenith() / zenith_step()));
        ia = std::min(ia, n_azimuth_ - 1);
        iz = std::min(iz, n_zenith_ - 1);
        return ia * n_zenith_ + iz;
    }

    double ElementPattern::relative_gain_db(const Direction &dir) const
    {
        const double theta_deg = rad2deg(dir.zenith());
        const double phi_deg = rad2deg(dir.azimuth());
        const double tv = (theta_deg - 90.0) / vertical_beamwidth_deg;
        const double th = phi_deg / horizontal_beamwidth_deg;
        const double att_v = std::min(12.0 * tv * tv, side_lobe_db);
        const double att_h = std::min(12.0 * th * th, front_back_db);
        return -std::min(att_v + att_h, front_back_db);
    }

    double ElementPattern::power_linear(const Direction &dir) const
    {
        return std::pow(10.0, 0.1 * power_db(dir));
    }

    PolarizedField bs_element_field(const Direction &dir, double slant, const ElementPattern &pattern)
    {
        const double amplitude = std::sqrt(pattern.power_linear(dir));
        return {amplitude * std::cos(slant), amplitude * std::sin(slant)};
    }

    void UpaGeometry::validate() const
    {
        if (n_vertical < 1 || n_horizontal < 1)
            throw std::invalid_argument("UpaGeometry: N_V and N_H must be at least 1");
        if (!(spacing_m > 0.0) || !std::isfinite(spacing_m))
            throw std::invalid_argument("UpaGeometry: element spacing must be positive");
        if (!(pattern.vertical_beamwidth_deg > 0.0) || !(pattern.horizontal_beamwidth_deg > 0.0))
            throw std::invalid_argument("UpaGeometry: beamwidths must be positive");
    }

    std::vector<Eigen::Vector3d> element_positions(const UpaGeometry &geom)
    {
        geom.validate();
        std::vector<Eigen::Vector3d> out;
        out.reserve(geom.n_elements());
        for (std::size_t u = 0; u < geom.n_vertical; ++u)
            for (std::size_t v = 0; v < geom.n_horizontal; ++v)
                out.emplace_back(0.0, double(v) * geom.spacing_m, double(u) * geom.spacing_m);
        return out;
    }

    ArrayModel::ArrayModel(const UpaGeometry &geom, double carrier_hz)
        : geom_(geom), carrier_hz_(carrier_hz)
    {
        if (!(carrier_hz > 0.0) || !std::isfinite(carrier_hz))
            throw std::invalid_argument("ArrayModel: carrier frequency must be positive");
        const auto pos = element_positions(geom);
        positions_.resize(Eigen::Index(pos.size()), 3);
        for (std::size_t n = 0; n < pos.size(); ++n)
            positions_.row(Eigen::Index(n)) = pos[n].transpose();
        const Eigen::RowVector3d centroid = positions_.colwise().mean();
        positions_.rowwise() -= centroid;
        wavenumber_ = 2.0 * kPi * carrier_hz / kSpeedOfLight;
    }

    void ArrayModel::response_into(const Direction &dir, Eigen::Ref<Eigen::VectorXcd> vertical,
                                   Eigen::Ref<Eigen::VectorXcd> horizontal) const
    {
        const Eigen::Index ne = positions_.rows();
        const auto nv = Eigen::Index(geom_.n_vertical), nh = Eigen::Index(geom_.n_horizontal);
        const Eigen::Vector3d u = dir.unit_vector();
        const PolarizedField f0 = bs_element_field(dir, geom_.slant_rad[0], geom_.pattern);
        const PolarizedField f1 = bs_element_field(dir, geom_.slant_rad[1], geom_.pattern);
        // lattice phase: exp(j k z_u u_z) * exp(j k y_v u_y)
        Eigen::VectorXcd ey(nh);
        for (Eigen::Index v = 0; v < nh; ++v)
            ey(v) = std::polar(1.0, wavenumber_ * positions_(v, 1) * u.y());
        for (Eigen::Index r = 0; r < nv; ++r)
        {
            const std::complex<double> ez = std::polar(1.0, wavenumber_ * positions_(r * nh, 2) * u.z());
            for (Eigen::Index v = 0; v < nh; ++v)
            {
                const Eigen::Index n = r * nh + v;
                const std::complex<double> ph = ez * ey(v);
                vertical(n) = f0.vertical * ph;
                horizontal(n) = f0.horizontal * ph;
                vertical(ne + n) = f1.vertical * ph;
                horizontal(ne + n) = f1.horizontal * ph;
            }
        }
    }

    SteeringResponse ArrayModel::response(const Direction &dir) const
    {
        const Eigen::Index n = Eigen::Index(n_antennas());
        SteeringResponse out{Eigen::VectorXcd(n), Eigen::VectorXcd(n)};
        response_into(dir, out.vertical, out.horizontal);
        return out;
    }

    GridResponse ArrayModel::responses(const std::vector<Direction> &dirs) const
    {
        const Eigen::Index n = Eigen::Index(n_antennas());
        GridResponse out{Eigen::MatrixXcd(n, Eigen::Index(dirs.size())), Eigen::MatrixXcd(n, Eigen::Index(dirs.size()))};
        for (std::size_t q = 0; q < dirs.size(); ++q)
            response_into(dirs[q], out.vertical.col(Eigen::Index(q)), out.horizontal.col(Eigen::Index(q)));
        return out;
    }

    GridResponse ArrayModel::responses(const AngularGrid &grid) const
    {
        const Eigen::Index n = Eigen::Index(n_antennas());
        GridResponse out{Eigen::MatrixXcd(n, Eigen::Index(grid.size())), Eigen::MatrixXcd(n, Eigen::Index(grid.size()))};
        for (std::size_t q = 0; q < grid.size(); ++q)
            response_into(grid.node(q), out.vertical.col(Eigen::Index(q)), out.horizontal.col(Eigen::Index(q)));
        return out;
    }

    SteeringResponse array_response(const UpaGeometry &geom, double carrier_hz, const Direction &dir)
    {
        return ArrayModel(geom, carrier_hz).response(dir);
    }

    GridResponse array_response(const UpaGeometry &geom, double carrier_hz, const AngularGrid &grid)
    {
        return ArrayModel(geom, carrier_hz).responses(grid);
    }

    Eigen::Matrix3d EulerRotation::matrix() const
    {
        return (Eigen::AngleAxisd(alpha, Eigen::Vector3d::UnitZ()) *
                Eigen::AngleAxisd(beta, Eigen::Vector3d::UnitY()) *
                Eigen::AngleAxisd(gamma, Eigen::Vector3d::UnitX()))
            .toRotationMatrix();
    }

    UePattern::UePattern(EulerRotation rotation)
        : rotation_(rotation), matrix_(rotation.matrix())
    {
    }

    UeField UePattern::response(const Direction &dir) const
    {
        const double th = dir.zenith();
        const double ph = dir.azimuth();
        const Eigen::Vector3d theta_hat(std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph), -std::sin(th));
        const Eigen::Vector3d phi_hat(-std::sin(ph), std::cos(ph), 0.0);

        // Direction in the antenna's local frame
        const Eigen::Vector3d local = matrix_.transpose() * dir.unit_vector();
        const double th_l = std::acos(std::clamp(local.z(), -1.0, 1.0));
        const double ph_l = std::atan2(local.y(), local.x());
        const Eigen::Vector3d theta_hat_l(std::cos(th_l) * std::cos(ph_l), std::cos(th_l) * std::sin(ph_l), -std::sin(th_l));

        // Isotropic, purely theta-polarized local pattern
        const Eigen::Vector3d field = matrix_ * theta_hat_l;
        return {theta_hat.dot(field), phi_hat.dot(field)};
    }

} // namespace fddcov

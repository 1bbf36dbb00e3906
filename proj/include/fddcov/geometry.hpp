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

#ifndef FDDCOV_GEOMETRY_HPP
#define FDDCOV_GEOMETRY_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace fddcov
{
    inline constexpr double kPi = std::numbers::pi;
    inline constexpr double kSpeedOfLight = 299792458.0; // m/s

    inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
    inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

    inline double wavelength(double carrier_hz) { return kSpeedOfLight / carrier_hz; }

    // A point of [-pi, pi] x [0, pi] (azimuth, zenith). Out-of-range values are
    // rejected with std::invalid_argument; nothing is wrapped.
    class Direction
    {
    public:
        Direction(double azimuth, double zenith);

        double azimuth() const { return azimuth_; }
        double zenith() const { return zenith_; }

        // Propagation unit vector (sin z cos a, sin z sin a, cos z); boresight is +x.
        Eigen::Vector3d unit_vector() const;

    private:
        double azimuth_;
        double zenith_;
    };

    enum class AngularMeasure
    {
        lebesgue,   // d(azimuth) d(zenith)
        solid_angle // sin(zenith) d(azimuth) d(zenith)
    };

    // Midpoint product grid on [-pi, pi] x [0, pi]; weight q is the measure of cell q.
    // Node q = ia * n_zenith + iz.
    class AngularGrid
    {
    public:
        AngularGrid(std::size_t n_azimuth, std::size_t n_zenith, AngularMeasure measure = AngularMeasure::lebesgue);

        std::size_t size() const { return n_azimuth_ * n_zenith_; }
        std::size_t n_azimuth() const { return n_azimuth_; }
        std::size_t n_zenith() const { return n_zenith_; }

        double azimuth_step() const { return 2.0 * kPi / double(n_azimuth_); }
        double zenith_step() const { return kPi / double(n_zenith_); }

        Direction node(std::size_t q) const;
        AngularMeasure measure() const { return measure_; }
        double weight(std::size_t q) const { return weights_(Eigen::Index(q)); }
        const Eigen::VectorXd &weights() const { return weights_; }

        // Cell edges along each axis (n + 1 entries)
        double azimuth_edge(std::size_t ia) const { return -kPi + double(ia) * azimuth_step(); }
        double zenith_edge(std::size_t iz) const { return double(iz) * zenith_step(); }

        // Index of the cell containing dir
        std::size_t nearest(const Direction &dir) const;

        bool operator==(const AngularGrid &other) const
        {
            return n_azimuth_ == other.n_azimuth_ && n_zenith_ == other.n_zenith_ && measure_ == other.measure_;
        }

    private:
        std::size_t n_azimuth_;
        std::size_t n_zenith_;
        AngularMeasure measure_;
        Eigen::VectorXd weights_;
    };

    // 3GPP 3D-UMa parabolic-in-dB BS element pattern
    struct ElementPattern
    {
        double max_gain_dbi = 8.0;
        double vertical_beamwidth_deg = 65.0;
        double horizontal_beamwidth_deg = 65.0;
        double side_lobe_db = 30.0;
        double front_back_db = 30.0;

        // Attenuation relative to boresight in dB (<= 0)
        double relative_gain_db(const Direction &dir) const;
        double power_db(const Direction &dir) const { return max_gain_dbi + relative_gain_db(dir); }
        double power_linear(const Direction &dir) const;
    };

    struct PolarizedField
    {
        std::complex<double> vertical;
        std::complex<double> horizontal;
    };

    // Field of one element with polarization slant `slant` (radians):
    // f_V = sqrt(G) cos(slant), f_H = sqrt(G) sin(slant).
    PolarizedField bs_element_field(const Direction &dir, double slant, const ElementPattern &pattern);

    // Cross-polarized uniform planar array in the y-z plane. Element (u, v, k),
    // zero-based, sits at (0, v*d, u*d) and maps to vector index
    // k*N_V*N_H + u*N_H + v. Slant k = 0 is +45 deg, k = 1 is -45 deg.
    struct UpaGeometry
    {
        std::size_t n_vertical = 8;
        std::size_t n_horizontal = 4;
        double spacing_m = 0.5 * wavelength(1.8e9);
        double slant_rad[2] = {kPi / 4.0, -kPi / 4.0};
        ElementPattern pattern{};

        void validate() const;
        std::size_t n_elements() const { return n_vertical * n_horizontal; }
        std::size_t n_antennas() const { return 2 * n_elements(); }
        std::size_t index(std::size_t u, std::size_t v, std::size_t k) const
        {
            return k * n_elements() + u * n_horizontal + v;
        }
    };

    // Element positions in metres, ordered u-major (index u*N_H + v). Both slants of
    // an element share a point.
    std::vector<Eigen::Vector3d> element_positions(const UpaGeometry &geom);

    struct SteeringResponse
    {
        Eigen::VectorXcd vertical;
        Eigen::VectorXcd horizontal;
    };

    // Array responses for a list of directions, stored column-wise (N x Q).
    struct GridResponse
    {
        Eigen::MatrixXcd vertical;
        Eigen::MatrixXcd horizontal;
    };

    // A geometry at one carrier frequency, with the centred element positions cached.
    class ArrayModel
    {
    public:
        ArrayModel(const UpaGeometry &geom, double carrier_hz);

        const UpaGeometry &geometry() const { return geom_; }
        double carrier_hz() const { return carrier_hz_; }
        std::size_t n_antennas() const { return geom_.n_antennas(); }

        SteeringResponse response(const Direction &dir) const;
        // Writes both polarizations into preallocated N-vectors
        void response_into(const Direction &dir, Eigen::Ref<Eigen::VectorXcd> vertical,
                           Eigen::Ref<Eigen::VectorXcd> horizontal) const;
        GridResponse responses(const std::vector<Direction> &dirs) const;
        GridResponse responses(const AngularGrid &grid) const;

    private:
        UpaGeometry geom_;
        double carrier_hz_;
        Eigen::MatrixX3d positions_; // relative to the centroid
        double wavenumber_;
    };

    // a[n] = f(element n) * exp(j k <p_n - centroid, u(dir)>), k = 2 pi f_c / c
    SteeringResponse array_response(const UpaGeometry &geom, double carrier_hz, const Direction &dir);
    GridResponse array_response(const UpaGeometry &geom, double carrier_hz, const AngularGrid &grid);

    // Intrinsic z-y-x rotation (alpha about z, beta about y, gamma about x)
    struct EulerRotation
    {
        double alpha = 0.0;
        double beta = 0.0;
        double gamma = 0.0;

        Eigen::Matrix3d matrix() const;
    };

    struct UeField
    {
        double vertical;
        double horizontal;
    };

    // Single vertically polarized isotropic UE antenna, optionally rotated as in
    // 3GPP TR 36.873 / TR 38.901 (local pattern mapped through the rotation and
    // re-projected on the global theta/phi unit vectors).
    class UePattern
    {
    public:
        UePattern() = default;
        explicit UePattern(EulerRotation rotation);

        const EulerRotation &rotation() const { return rotation_; }
        UeField response(const Direction &dir) const;

    private:
        EulerRotation rotation_{};
        Eigen::Matrix3d matrix_ = Eigen::Matrix3d::Identity();
    };

} // namespace fddcov

#endif

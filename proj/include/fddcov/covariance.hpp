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

#ifndef FDDCOV_COVARIANCE_HPP
#define FDDCOV_COVARIANCE_HPP

#include "fddcov/geometry.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

namespace fddcov
{
    // Spatial covariance matrices are plain complex Eigen matrices; functions that
    // need Hermitian/PSD input check it and throw std::invalid_argument otherwise.
    using CovarianceMatrix = Eigen::MatrixXcd;

    // Vertical and horizontal angular power spectra sampled on an AngularGrid.
    // Stacked as x = [rho_v; rho_h] (length 2Q) for the linear solvers.
    class PolarizedAps
    {
    public:
        PolarizedAps(std::shared_ptr<const AngularGrid> grid, Eigen::VectorXd rho_v, Eigen::VectorXd rho_h);
        PolarizedAps(std::shared_ptr<const AngularGrid> grid, const Eigen::VectorXd &stacked);

        static PolarizedAps zeros(std::shared_ptr<const AngularGrid> grid);

        const AngularGrid &grid() const { return *grid_; }
        const std::shared_ptr<const AngularGrid> &grid_ptr() const { return grid_; }
        const Eigen::VectorXd &rho_v() const { return rho_v_; }
        const Eigen::VectorXd &rho_h() const { return rho_h_; }
        Eigen::VectorXd stacked() const;

        // Integral of rho_v + rho_h over the domain (quadrature)
        double total_power() const;
        double min_value() const;

    private:
        std::shared_ptr<const AngularGrid> grid_;
        Eigen::VectorXd rho_v_;
        Eigen::VectorXd rho_h_;
    };

    // R = sum_q w_q (rho_v(q) a_V a_V^H + rho_h(q) a_H a_H^H). Nodes where both spectra
    // vanish are skipped. Throws std::invalid_argument if aps is not on `grid`.
    CovarianceMatrix covariance_from_aps(const PolarizedAps &aps, const ArrayModel &array, const AngularGrid &grid);
    CovarianceMatrix covariance_from_aps(const PolarizedAps &aps, const UpaGeometry &geom, double carrier_hz,
                                         const AngularGrid &grid);

    // (1/n) sum h h^H over the columns of `snapshots` (N x n)
    CovarianceMatrix sample_covariance(const Eigen::MatrixXcd &snapshots);
    CovarianceMatrix sample_covariance(const std::vector<Eigen::VectorXcd> &snapshots);

    // max |R - R^H| relative to ||R||_F (0 for the zero matrix)
    double hermitian_violation(const CovarianceMatrix &r);

    // Nearest PSD matrix in Frobenius norm: clips negative eigenvalues. Rejects input
    // whose Hermitian violation exceeds `tolerance`.
    CovarianceMatrix psd_projection(const CovarianceMatrix &h, double tolerance = 1e-10);

    // vec([Re R, Im R]), column-major: 2 N^2 reals
    Eigen::VectorXd full_vectorize(const CovarianceMatrix &r);
    CovarianceMatrix full_devectorize(const Eigen::VectorXd &v, std::size_t n);

    // Number of reals of the compressed UPA layout, 6 (N_H + (N_V - 1)(N_H^2 - N_H + 1))
    std::size_t structured_length(std::size_t n_vertical, std::size_t n_horizontal);

    // Block structure of a cross-polarized UPA covariance. With h = [h_1; h_2],
    // R = [B_1 B_2^H; B_2 B_3], each B_l Hermitian, block lower-Toeplitz in the
    // vertical index with N_H x N_H blocks B_{l,i}; B_{l,1} Hermitian Toeplitz and
    // every B_{l,i} with a constant diagonal.
    //
    // Compressed layout, for l = 1, 2, 3 in turn (each entry stored as Re, Im):
    //   t_l[0..N_H-1]   first column of B_{l,1} (t_l[0] is real; its Im slot is 0)
    //   for i = 2..N_V: the common diagonal of B_{l,i}, then its off-diagonal
    //                   entries (a, b), a != b, in row-major order
    class UpaStructure
    {
    public:
        explicit UpaStructure(const UpaGeometry &geom);

        std::size_t n_antennas() const { return n_; }
        std::size_t length() const { return length_; }
        std::size_t n_parameters() const { return n_params_; }

        // Orthogonal projection (real Frobenius inner product) onto structured matrices:
        // each entry is replaced by the mean of all entries the structure ties to it.
        CovarianceMatrix average(const CovarianceMatrix &r) const;

        // Largest deviation of an entry from the mean of its class, relative to ||R||_F
        double max_violation(const CovarianceMatrix &r) const;

        // Reads the generator entries. Throws std::domain_error when the structure
        // violation exceeds `tolerance`.
        Eigen::VectorXd vectorize(const CovarianceMatrix &r, double tolerance = 1e-6) const;
        CovarianceMatrix devectorize(const Eigen::VectorXd &v) const;

        // Position of the (row, col) entry used for layout slot pair p (Re at 2p, Im at 2p+1)
        struct Slot
        {
            std::size_t row;
            std::size_t col;
            bool real_only; // diagonal of a Hermitian block
        };
        const std::vector<Slot> &slots() const { return slots_; }

    private:
        struct Occurrence
        {
            std::uint32_t param;
            bool conjugate;
        };

        std::size_t n_;
        std::size_t length_;
        std::size_t n_params_;
        std::vector<Slot> slots_;             // one per complex parameter
        std::vector<Occurrence> occurrence_; // column-major over the N x N entries
        std::vector<std::uint32_t> count_;    // occurrences per parameter
    };

    // Convenience wrappers
    CovarianceMatrix upa_average(const CovarianceMatrix &r, const UpaGeometry &geom);
    Eigen::VectorXd structured_vectorize(const CovarianceMatrix &r, const UpaGeometry &geom, double tolerance = 1e-6);
    CovarianceMatrix structured_devectorize(const Eigen::VectorXd &v, const UpaGeometry &geom);

} // namespace fddcov

#endif

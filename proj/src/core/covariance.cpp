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

#include "fddcov/covariance.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>

namespace fddcov
{
    PolarizedAps::PolarizedAps(std::shared_ptr<const AngularGrid> grid, Eigen::VectorXd rho_v, Eigen::VectorXd rho_h)
        : grid_(std::move(grid)), rho_v_(std::move(rho_v)), rho_h_(std::move(rho_h))
    {
        if (!grid_)
            throw std::invalid_argument("PolarizedAps: null grid");
        const auto q = Eigen::Index(grid_->size());
        if (rho_v_.size() != q || rho_h_.size() != q)
            throw std::invalid_argument("PolarizedAps: spectrum length does not match the grid");
        if (!rho_v_.allFinite() || !rho_h_.allFinite())
            throw std::invalid_argument("PolarizedAps: non-finite entries");
    }

    PolarizedAps::PolarizedAps(std::shared_ptr<const AngularGrid> grid, const Eigen::VectorXd &stacked)
        : PolarizedAps(grid, stacked.head(stacked.size() / 2), stacked.tail(stacked.size() / 2))
    {
        if (stacked.size() != 2 * Eigen::Index(grid_->size()))
            throw std::invalid_argument("PolarizedAps: stacked length must be twice the grid size");
    }

    PolarizedAps PolarizedAps::zeros(std::shared_ptr<const AngularGrid> grid)
    {
        const auto q = Eigen::Index(grid->size());
        return PolarizedAps(std::move(grid), Eigen::VectorXd::Zero(q), Eigen::VectorXd::Zero(q));
    }

    Eigen::VectorXd PolarizedAps::stacked() const
    {
        Eigen::VectorXd x(2 * rho_v_.size());
        x << rho_v_, rho_h_;
        return x;
    }

    double PolarizedAps::total_power() const
    {
        return grid_->weights().dot(rho_v_ + rho_h_);
    }

    double PolarizedAps::min_value() const
    {
        return std::min(rho_v_.minCoeff(), rho_h_.minCoeff());
    }

    CovarianceMatrix covariance_from_aps(const PolarizedAps &aps, const ArrayModel &array, const AngularGrid &grid)
    {
        if (!(aps.grid() == grid))
            throw std::invalid_argument("covariance_from_aps: spectrum is sampled on a different grid");

        std::vector<Direction> dirs;
        std::vector<double> wv, wh;
        for (std::size_t q = 0; q < grid.size(); ++q)
        {
            const double v = aps.rho_v()(Eigen::Index(q));
            const double h = aps.rho_h()(Eigen::Index(q));
            if (v == 0.0 && h == 0.0)
                continue;
            dirs.push_back(grid.node(q));
            wv.push_back(grid.weight(q) * v);
            wh.push_back(grid.weight(q) * h);
        }

        const auto n = Eigen::Index(array.n_antennas());
        CovarianceMatrix r = CovarianceMatrix::Zero(n, n);
        if (dirs.empty())
            return r;

        // Chunked to bound the response matrices for fine grids
        constexpr std::size_t chunk = 4096;
        for (std::size_t first = 0; first < dirs.size(); first += chunk)
        {
            const std::size_t last = std::min(dirs.size(), first + chunk);
            const std::vector<Direction> part(dirs.begin() + std::ptrdiff_t(first), dirs.begin() + std::ptrdiff_t(last));
            const GridResponse a = array.responses(part);
            const auto len = Eigen::Index(last - first);
            const Eigen::Map<const Eigen::VectorXd> dv(wv.data() + first, len);
            const Eigen::Map<const Eigen::VectorXd> dh(wh.data() + first, len);
            r.noalias() += (a.vertical * dv.asDiagonal()) * a.vertical.adjoint();
            r.noalias() += (a.horizontal * dh.asDiagonal()) * a.horizontal.adjoint();
        }
        // Hermitian to the last bit
        CovarianceMatrix out = 0.5 * (r + r.adjoint());
        for (Eigen::Index i = 0; i < n; ++i)
            out(i, i) = out(i, i).real();
        return out;
    }

    CovarianceMatrix covariance_from_aps(const PolarizedAps &aps, const UpaGeometry &geom, double carrier_hz,
                                         const AngularGrid &grid)
    {
        return covariance_from_aps(aps, ArrayModel(geom, carrier_hz), grid);
    }

    CovarianceMatrix sample_covariance(const Eigen::MatrixXcd &snapshots)
    {
        if (snapshots.cols() == 0)
            throw std::invalid_argument("sample_covariance: no snapshots");
        const Eigen::Index n = snapshots.rows();
        CovarianceMatrix s = CovarianceMatrix::Zero(n, n);
        s.selfadjointView<Eigen::Lower>().rankUpdate(snapshots, 1.0 / double(snapshots.cols()));
        CovarianceMatrix out = s.selfadjointView<Eigen::Lower>();
        for (Eigen::Index i = 0; i < n; ++i)
            out(i, i) = out(i, i).real();
        return out;
    }

    CovarianceMatrix sample_covariance(const std::vector<Eigen::VectorXcd> &snapshots)
    {
        if (snapshots.empty())
            throw std::invalid_argument("sample_covariance: no snapshots");
        Eigen::MatrixXcd x(snapshots.front().size(), Eigen::Index(snapshots.size()));
        for (std::size_t i = 0; i < snapshots.size(); ++i)
        {
            if (snapshots[i].size() != x.rows())
                throw std::invalid_argument("sample_covariance: snapshots differ in length");
            x.col(Eigen::Index(i)) = snapshots[i];
        }
        return sample_covariance(x);
    }

    double hermitian_violation(const CovarianceMatrix &r)
    {
        if (r.rows() != r.cols())
            throw std::invalid_argument("hermitian_violation: matrix is not square");
        const double scale = r.norm();
        if (scale == 0.0)
            return 0.0;
        return (r - r.adjoint()).cwiseAbs().maxCoeff() / scale;
    }

    CovarianceMatrix psd_projection(const CovarianceMatrix &h, double tolerance)
    {
        const double violation = hermitian_violation(h);
        if (violation > tolerance)
            throw std::invalid_argument("psd_projection: input is not Hermitian (violation " +
                                        std::to_string(violation) + ")");
        const CovarianceMatrix sym = 0.5 * (h + h.adjoint());
        Eigen::SelfAdjointEigenSolver<CovarianceMatrix> eig(sym);
        if (eig.info() != Eigen::Success)
            throw std::runtime_error("psd_projection: eigendecomposition failed");
        const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
        const CovarianceMatrix p = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().adjoint();
        CovarianceMatrix out = 0.5 * (p + p.adjoint());
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            out(i, i) = out(i, i).real();
        return out;
    }

    Eigen::VectorXd full_vectorize(const CovarianceMatrix &r)
    {
        const Eigen::Index nn = r.size();
        Eigen::VectorXd v(2 * nn);
        Eigen::Map<Eigen::MatrixXd>(v.data(), r.rows(), r.cols()) = r.real();
        Eigen::Map<Eigen::MatrixXd>(v.data() + nn, r.rows(), r.cols()) = r.imag();
        return v;
    }

    CovarianceMatrix full_devectorize(const Eigen::VectorXd &v, std::size_t n)
    {
        const auto ni = Eigen::Index(n);
        if (v.size() != 2 * ni * ni)
            throw std::invalid_argument("full_devectorize: expected 2 N^2 entries");
        CovarianceMatrix r(ni, ni);
        r.real() = Eigen::Map<const Eigen::MatrixXd>(v.data(), ni, ni);
        r.imag() = Eigen::Map<const Eigen::MatrixXd>(v.data() + ni * ni, ni, ni);
        return r;
    }

} // namespace fddcov

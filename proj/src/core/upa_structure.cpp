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

#include <cmath>
#include <stdexcept>
#include <string>

namespace fddcov
{
    std::size_t structured_length(std::size_t n_vertical, std::size_t n_horizontal)
    {
        return 6 * (n_horizontal + (n_vertical - 1) * (n_horizontal * n_horizontal - n_horizontal + 1));
    }

    UpaStructure::UpaStructure(const UpaGeometry &geom)
    {
        geom.validate();
        const std::size_t nv = geom.n_vertical;
        const std::size_t nh = geom.n_horizontal;
        const std::size_t ne = geom.n_elements();
        n_ = geom.n_antennas();

        // Parameters of one macro-block, in layout order
        const std::size_t per_block = nh + (nv - 1) * (nh * nh - nh + 1);
        n_params_ = 3 * per_block;
        length_ = 2 * n_params_;

        // Parameter index of B_{l,i}[a][b] in lower-triangular block coordinates
        auto toeplitz_param = [&](std::size_t l, std::size_t delta)
        { return l * per_block + delta; };
        auto block_param = [&](std::size_t l, std::size_t i, std::size_t a, std::size_t b)
        {
            // i >= 2 (1-based lag); diagonal first, then off-diagonal in row-major order
            std::size_t base = l * per_block + nh + (i - 2) * (nh * nh - nh + 1);
            if (a == b)
                return base;
            const std::size_t offdiag = a * (nh - 1) + (b < a ? b : b - 1);
            return base + 1 + offdiag;
        };

        // Canonical positions: macro l = 0 -> (h_1, h_1), l = 1 -> (h_2, h_1), l = 2 -> (h_2, h_2)
        slots_.resize(n_params_);
        const std::size_t row_k[3] = {0, 1, 1};
        const std::size_t col_k[3] = {0, 0, 1};
        for (std::size_t l = 0; l < 3; ++l)
        {
            for (std::size_t delta = 0; delta < nh; ++delta)
                slots_[toeplitz_param(l, delta)] = {row_k[l] * ne + delta, col_k[l] * ne, delta == 0};
            for (std::size_t i = 2; i <= nv; ++i)
                for (std::size_t a = 0; a < nh; ++a)
                    for (std::size_t b = 0; b < nh; ++b)
                        slots_[block_param(l, i, a, b)] = {row_k[l] * ne + (i - 1) * nh + a, col_k[l] * ne + b, false};
        }

        occurrence_.resize(n_ * n_);
        count_.assign(n_params_, 0);
        for (std::size_t col = 0; col < n_; ++col)
            for (std::size_t row = 0; row < n_; ++row)
            {
                std::size_t k = row / ne, kk = col / ne;
                std::size_t u = (row % ne) / nh, a = row % nh;
                std::size_t uu = (col % ne) / nh, b = col % nh;
                bool conj = false;

                std::size_t l;
                if (k == 0 && kk == 0)
                    l = 0;
                else if (k == 1 && kk == 1)
                    l = 2;
                else
                {
                    l = 1;
                    if (k == 0) // upper-right macro-block holds B_2^H
                    {
                        std::swap(u, uu);
                        std::swap(a, b);
                        conj = !conj;
                    }
                }

                if (u < uu) // B_l is Hermitian
                {
                    std::swap(u, uu);
                    std::swap(a, b);
                    conj = !conj;
                }

                std::size_t p;
                if (u == uu) // B_{l,1} Hermitian Toeplitz
                {
                    if (a >= b)
                        p = toeplitz_param(l, a - b);
                    else
                    {
                        p = toeplitz_param(l, b - a);
                        conj = !conj;
                    }
                }
                else
                    p = block_param(l, u - uu + 1, a, b);

                occurrence_[col * n_ + row] = {std::uint32_t(p), conj};
                ++count_[p];
            }
    }

    namespace
    {
        inline std::complex<double> adjust(std::complex<double> z, bool conjugate)
        {
            return conjugate ? std::conj(z) : z;
        }
    } // namespace

    CovarianceMatrix UpaStructure::average(const CovarianceMatrix &r) const
    {
        if (std::size_t(r.rows()) != n_ || std::size_t(r.cols()) != n_)
            throw std::invalid_argument("upa_average: matrix is " + std::to_string(r.rows()) + "x" +
                                        std::to_string(r.cols()) + ", geometry needs " + std::to_string(n_));
        std::vector<std::complex<double>> sum(n_params_, 0.0);
        for (std::size_t e = 0; e < occurrence_.size(); ++e)
            sum[occurrence_[e].param] += adjust(r.data()[e], occurrence_[e].conjugate);
        for (std::size_t p = 0; p < n_params_; ++p)
        {
            sum[p] /= double(count_[p]);
            if (slots_[p].real_only)
                sum[p] = sum[p].real();
        }
        CovarianceMatrix out(r.rows(), r.cols());
        for (std::size_t e = 0; e < occurrence_.size(); ++e)
            out.data()[e] = adjust(sum[occurrence_[e].param], occurrence_[e].conjugate);
        return out;
    }

    double UpaStructure::max_violation(const CovarianceMatrix &r) const
    {
        const double scale = r.norm();
        if (scale == 0.0)
            return 0.0;
        const CovarianceMatrix avg = average(r);
        return (r - avg).cwiseAbs().maxCoeff() / scale;
    }

    Eigen::VectorXd UpaStructure::vectorize(const CovarianceMatrix &r, double tolerance) const
    {
        const double violation = max_violation(r);
        if (violation > tolerance)
            throw std::domain_error("structured_vectorize: structure violation " + std::to_string(violation) +
                                    " exceeds tolerance " + std::to_string(tolerance));
        Eigen::VectorXd v(static_cast<Eigen::Index>(length_));
        for (std::size_t p = 0; p < n_params_; ++p)
        {
            const std::complex<double> z = r(Eigen::Index(slots_[p].row), Eigen::Index(slots_[p].col));
            v(Eigen::Index(2 * p)) = z.real();
            v(Eigen::Index(2 * p + 1)) = slots_[p].real_only ? 0.0 : z.imag();
        }
        return v;
    }

    CovarianceMatrix UpaStructure::devectorize(const Eigen::VectorXd &v) const
    {
        if (std::size_t(v.size()) != length_)
            throw std::invalid_argument("structured_devectorize: expected " + std::to_string(length_) + " entries, got " +
                                        std::to_string(v.size()));
        std::vector<std::complex<double>> param(n_params_);
        for (std::size_t p = 0; p < n_params_; ++p)
            param[p] = {v(Eigen::Index(2 * p)), slots_[p].real_only ? 0.0 : v(Eigen::Index(2 * p + 1))};
        const auto n = Eigen::Index(n_);
        CovarianceMatrix out(n, n);
        for (std::size_t e = 0; e < occurrence_.size(); ++e)
            out.data()[e] = adjust(param[occurrence_[e].param], occurrence_[e].conjugate);
        return out;
    }

    CovarianceMatrix upa_average(const CovarianceMatrix &r, const UpaGeometry &geom)
    {
        return UpaStructure(geom).average(r);
    }

    Eigen::VectorXd structured_vectorize(const CovarianceMatrix &r, const UpaGeometry &geom, double tolerance)
    {
        return UpaStructure(geom).vectorize(r, tolerance);
    }

    CovarianceMatrix structured_devectorize(const Eigen::VectorXd &v, const UpaGeometry &geom)
    {
        return UpaStructure(geom).devectorize(v);
    }

} // namespace fddcov

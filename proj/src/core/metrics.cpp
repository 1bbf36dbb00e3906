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

#include "fddcov/metrics.hpp"
#include "fddcov/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace fddcov
{
    namespace
    {
        void check_pair(const CovarianceMatrix &a, const CovarianceMatrix &b, const char *what)
        {
            if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
                throw std::invalid_argument(std::string(what) + ": matrices must be square and of equal size");
            if (!a.allFinite() || !b.allFinite())
                throw std::invalid_argument(std::string(what) + ": non-finite entries");
        }

        void check_hermitian(const CovarianceMatrix &r, const char *what)
        {
            if (hermitian_violation(r) > 1e-8)
                throw std::invalid_argument(std::string(what) + ": input is not Hermitian");
        }

        constexpr double kTieTolerance = 1e-12;

        // Eigenpairs in descending order of eigenvalue
        struct Eig
        {
            Eigen::VectorXd values;
            Eigen::MatrixXcd vectors;
        };

        Eig descending_eig(const CovarianceMatrix &r)
        {
            Eigen::SelfAdjointEigenSolver<CovarianceMatrix> eig(0.5 * (r + r.adjoint()));
            if (eig.info() != Eigen::Success)
                throw NumericalError("eigendecomposition failed");
            return {eig.eigenvalues().reverse(), eig.eigenvectors().rowwise().reverse()};
        }

        Eigen::VectorXcd canonical_phase(const Eigen::VectorXcd &v)
        {
            for (Eigen::Index i = 0; i < v.size(); ++i)
                if (std::abs(v(i)) > 1e-12)
                    return v * (std::abs(v(i)) / v(i));
            return v;
        }

        bool lexicographic_less(const Eigen::VectorXcd &a, const Eigen::VectorXcd &b)
        {
            for (Eigen::Index i = 0; i < a.size(); ++i)
            {
                if (a(i).real() != b(i).real())
                    return a(i).real() < b(i).real();
                if (a(i).imag() != b(i).imag())
                    return a(i).imag() < b(i).imag();
            }
            return false;
        }
    } // namespace

    double normalized_frobenius_se(const CovarianceMatrix &r_true, const CovarianceMatrix &r_est)
    {
        check_pair(r_true, r_est, "normalized_frobenius_se");
        const double den = r_true.squaredNorm();
        if (den == 0.0)
            throw std::invalid_argument("normalized_frobenius_se: true matrix is zero");
        return (r_true - r_est).squaredNorm() / den;
    }

    std::size_t energy_rank(const CovarianceMatrix &r, double energy_fraction)
    {
        if (!(energy_fraction > 0.0 && energy_fraction <= 1.0))
            throw std::invalid_argument("energy_rank: energy fraction must lie in (0, 1]");
        check_hermitian(r, "energy_rank");
        const Eigen::VectorXd lambda = descending_eig(r).values.cwiseMax(0.0);
        const double total = lambda.sum();
        if (!(total > 0.0))
            throw std::invalid_argument("energy_rank: matrix has no positive energy");
        double acc = 0.0;
        for (Eigen::Index i = 0; i < lambda.size(); ++i)
        {
            acc += lambda(i);
            // relative slack absorbs rounding in the cumulative sum
            if (acc >= energy_fraction * total * (1.0 - 1e-14))
                return std::size_t(i + 1);
        }
        return std::size_t(lambda.size());
    }

    Eigen::MatrixXcd leading_eigenvectors(const CovarianceMatrix &r, std::size_t count, bool *tie)
    {
        const Eig e = descending_eig(r);
        const Eigen::Index n = e.values.size();
        if (count > std::size_t(n))
            throw std::invalid_argument("leading_eigenvectors: count exceeds dimension");
        const double scale = std::max(std::abs(e.values(0)), std::abs(e.values(n - 1)));
        const double tol = kTieTolerance * std::max(scale, 1.0);

        std::vector<Eigen::VectorXcd> canon(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i)
            canon[std::size_t(i)] = canonical_phase(e.vectors.col(i));

        // Eigenvalues within tol form a cluster; order each cluster by vector
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index(0));
        Eigen::Index begin = 0;
        while (begin < n)
        {
            Eigen::Index end = begin + 1;
            while (end < n && e.values(end - 1) - e.values(end) <= tol)
                ++end;
            std::sort(order.begin() + begin, order.begin() + end, [&](Eigen::Index a, Eigen::Index b)
                      { return lexicographic_less(canon[std::size_t(a)], canon[std::size_t(b)]); });
            begin = end;
        }

        if (tie)
            *tie = count > 0 && Eigen::Index(count) < n &&
                   e.values(Eigen::Index(count) - 1) - e.values(Eigen::Index(count)) <= tol;

        Eigen::MatrixXcd out(n, Eigen::Index(count));
        for (std::size_t i = 0; i < count; ++i)
            out.col(Eigen::Index(i)) = canon[std::size_t(order[i])];
        return out;
    }

    GrassmannResult grassmann_distance(const CovarianceMatrix &r_true, const CovarianceMatrix &r_est,
                                       double energy_fraction)
    {
        check_pair(r_true, r_est, "grassmann_se");
        check_hermitian(r_true, "grassmann_se");
        check_hermitian(r_est, "grassmann_se");
        const std::size_t r = energy_rank(r_true, energy_fraction);
        bool tie_true = false, tie_est = false;
        const Eigen::MatrixXcd u = leading_eigenvectors(r_true, r, &tie_true);
        const Eigen::MatrixXcd v = leading_eigenvectors(r_est, r, &tie_est);
        // ||UU^H - VV^H||_F^2 = 2r - 2 ||U^H V||_F^2
        const double overlap = (u.adjoint() * v).squaredNorm();
        const double se = std::clamp((double(r) - overlap) / double(r), 0.0, 1.0);
        return {se, r, tie_true || tie_est};
    }

    double grassmann_se(const CovarianceMatrix &r_true, const CovarianceMatrix &r_est, double energy_fraction)
    {
        return grassmann_distance(r_true, r_est, energy_fraction).se;
    }

    SquaredErrorRecord evaluate(std::uint64_t trial_id, const std::string &method, const CovarianceMatrix &r_true,
                                const CovarianceMatrix &r_est)
    {
        const GrassmannResult g = grassmann_distance(r_true, r_est);
        return {trial_id, method, normalized_frobenius_se(r_true, r_est), g.se, g.tie};
    }

} // namespace fddcov

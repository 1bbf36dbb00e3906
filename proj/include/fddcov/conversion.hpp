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

#ifndef FDDCOV_CONVERSION_HPP
#define FDDCOV_CONVERSION_HPP

#include "fddcov/covariance.hpp"
#include "fddcov/geometry.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace fddcov
{
    enum class VectorizationMode
    {
        full,      // vec([Re R, Im R]), 2 N^2 rows
        structured // UpaStructure layout
    };

    std::size_t kernel_rows(const UpaGeometry &geom, VectorizationMode mode);

    // Discretized measurement system r = K x, x = [rho_v; rho_h] on the grid.
    // K(m, q) = w_q g_{V,m}(theta_q) and K(m, Q + q) = w_q g_{H,m}(theta_q), where
    // g_{.,m} is the m-th coordinate of the chosen vectorization of a_. a_.^H.
    class KernelOperator
    {
    public:
        KernelOperator(const UpaGeometry &geom, double carrier_hz, std::shared_ptr<const AngularGrid> grid,
                       VectorizationMode mode);

        const Eigen::MatrixXd &matrix() const { return matrix_; }
        double carrier_hz() const { return carrier_hz_; }
        const AngularGrid &grid() const { return *grid_; }
        const std::shared_ptr<const AngularGrid> &grid_ptr() const { return grid_; }
        VectorizationMode mode() const { return mode_; }
        const UpaGeometry &geometry() const { return geom_; }
        std::size_t rows() const { return std::size_t(matrix_.rows()); }

        Eigen::VectorXd apply(const PolarizedAps &aps) const;

        // Vectorization matching the row layout (structured mode checks the structure)
        Eigen::VectorXd vectorize(const CovarianceMatrix &r, double structure_tolerance = 1e-6) const;
        CovarianceMatrix devectorize(const Eigen::VectorXd &v) const;

    private:
        UpaGeometry geom_;
        double carrier_hz_;
        std::shared_ptr<const AngularGrid> grid_;
        VectorizationMode mode_;
        std::shared_ptr<const UpaStructure> structure_;
        Eigen::MatrixXd matrix_;
    };

    // Metric projection onto the affine variety {x : K x = r} in the weighted inner
    // product <x, y> = sum_q w_q (x_v y_v + x_h y_h). Built from the thin SVD of
    // K W^{-1/2}; singular values below truncation * sigma_max are discarded.
    class VarietyProjector
    {
    public:
        explicit VarietyProjector(std::shared_ptr<const KernelOperator> kernel, double truncation = 1e-8);

        std::size_t rank() const { return std::size_t(s_.size()); }
        double truncation() const { return truncation_; }
        const Eigen::VectorXd &singular_values() const { return all_singular_values_; }
        const KernelOperator &kernel() const { return *kernel_; }

        struct Result
        {
            PolarizedAps aps;
            double residual; // ||K x - r|| / ||r||
            bool consistent; // residual below 1e-8
        };
        Result project(const PolarizedAps &from, const Eigen::VectorXd &r) const;

        // Operations in scaled coordinates z = W^{1/2} x, used by the iterative solver
        Eigen::VectorXd to_scaled(const Eigen::VectorXd &x) const { return x.cwiseProduct(sqrt_w_); }
        Eigen::VectorXd from_scaled(const Eigen::VectorXd &z) const { return z.cwiseQuotient(sqrt_w_); }
        // s = Sigma^{-1} U^T r
        Eigen::VectorXd range_coefficients(const Eigen::VectorXd &r) const;
        const Eigen::MatrixXd &u() const { return u_; }
        const Eigen::VectorXd &s() const { return s_; }
        const Eigen::MatrixXd &v() const { return v_; }
        const Eigen::VectorXd &sqrt_weights() const { return sqrt_w_; }

    private:
        std::shared_ptr<const KernelOperator> kernel_;
        double truncation_;
        Eigen::VectorXd sqrt_w_;
        Eigen::VectorXd all_singular_values_;
        Eigen::MatrixXd u_; // M x k
        Eigen::VectorXd s_; // k
        Eigen::MatrixXd v_; // 2Q x k
    };

    struct OperatorProvenance
    {
        std::string geometry_hash;
        double ul_hz = 0.0;
        double dl_hz = 0.0;
        std::size_t grid_azimuth = 0;
        std::size_t grid_zenith = 0;
        AngularMeasure measure = AngularMeasure::lebesgue;
        double truncation = 0.0;
        VectorizationMode mode = VectorizationMode::structured;

        bool operator==(const OperatorProvenance &) const = default;
    };

    std::string geometry_hash(const UpaGeometry &geom);

    // r_d = F r_u, F = K_d W^{-1} K_u^T (K_u W^{-1} K_u^T)^+ with the truncated pseudo-inverse
    struct ConversionOperator
    {
        Eigen::MatrixXd matrix; // M_d x M_u
        OperatorProvenance provenance;
    };

    ConversionOperator build_conversion_operator(const VarietyProjector &projector_u, const KernelOperator &kernel_d);

    // Binary cache: "FCNV1", u32 M_d, u32 M_u, M_d*M_u little-endian doubles (row-major),
    // then UTF-8 key=value provenance lines.
    void save_operator(const ConversionOperator &op, const std::string &path);
    ConversionOperator load_operator(const std::string &path);

    struct Algorithm1Result
    {
        PolarizedAps aps;
        Eigen::VectorXd r_d;
        double residual;
    };

    // Minimum-norm point of the UL variety, read out through the DL kernel
    Algorithm1Result algorithm1(const VarietyProjector &projector_u, const KernelOperator &kernel_d,
                                const Eigen::VectorXd &r_u);

    struct EapmParams
    {
        std::size_t max_iterations = 300;
        double residual_tolerance = 1e-3;
        bool extrapolation = true;
        double max_extrapolation = 100.0;

        void validate() const;
    };

    struct EapmResult
    {
        PolarizedAps aps; // nonnegative
        Eigen::VectorXd r_d;
        std::size_t iterations;
        double residual;  // Phi of the returned point
        bool converged;
        // Per iteration k: Phi(x_k), and the distance from P_Z(x_k) to the variety in
        // the weighted metric, relative to the norm of the minimum-norm solution
        std::vector<double> residual_history;
        std::vector<double> infeasibility_history;
    };

    // Alternating projections between the UL variety and the nonnegative cone,
    // warm-started from the minimum-norm solution, with optional extrapolation.
    EapmResult algorithm2_eapm(const VarietyProjector &projector_u, const KernelOperator &kernel_d,
                               const Eigen::VectorXd &r_u, const EapmParams &params);

    PolarizedAps project_onto_cone(const PolarizedAps &aps);

    enum class Method
    {
        alg1,
        alg2
    };

    struct ConverterSettings
    {
        VectorizationMode mode = VectorizationMode::structured;
        double truncation = 1e-8;
        double structure_tolerance = 1e-6;
        EapmParams eapm{};
    };

    struct ConvertResult
    {
        CovarianceMatrix r_d;
        std::size_t iterations = 0;
        double residual = 0.0;
        bool converged = true;
    };

    // End-to-end conversion: UPA averaging, vectorization, alg1 or alg2,
    // devectorization at the DL carrier and PSD projection.
    class Converter
    {
    public:
        Converter(const UpaGeometry &geom, double ul_hz, double dl_hz, std::shared_ptr<const AngularGrid> grid,
                  ConverterSettings settings = {});

        // Uses a cached operator for alg1. Kernels are built only when
        // `with_kernels` is set (required for alg2). Throws std::invalid_argument
        // if the cached provenance does not match.
        Converter(const UpaGeometry &geom, double ul_hz, double dl_hz, std::shared_ptr<const AngularGrid> grid,
                  ConverterSettings settings, ConversionOperator cached, bool with_kernels);

        const ConversionOperator &conversion_operator() const { return op_; }
        const ConverterSettings &settings() const { return settings_; }
        const UpaGeometry &geometry() const { return geom_; }
        bool has_kernels() const { return projector_ != nullptr; }
        const VarietyProjector &projector() const;
        const KernelOperator &kernel_ul() const;
        const KernelOperator &kernel_dl() const;

        ConvertResult convert(const CovarianceMatrix &r_u, Method method) const;

    private:
        void build_kernels();

        UpaGeometry geom_;
        double ul_hz_;
        double dl_hz_;
        std::shared_ptr<const AngularGrid> grid_;
        ConverterSettings settings_;
        std::shared_ptr<const UpaStructure> structure_;
        std::shared_ptr<const KernelOperator> kernel_u_;
        std::shared_ptr<const KernelOperator> kernel_d_;
        std::shared_ptr<const VarietyProjector> projector_;
        ConversionOperator op_;
    };

} // namespace fddcov

#endif

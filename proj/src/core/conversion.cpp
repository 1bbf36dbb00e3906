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

#include "fddcov/conversion.hpp"
#include "fddcov/errors.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fddcov
{
    namespace
    {
        void check_carrier(double hz, const char *what)
        {
            if (!std::isfinite(hz) || hz <= 0.0)
                throw std::invalid_argument(std::string(what) + ": carrier frequency must be positive");
        }

        std::string format_double(double x)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", x);
            return buf;
        }

        const char *mode_name(VectorizationMode mode)
        {
            return mode == VectorizationMode::full ? "full" : "structured";
        }
    } // namespace

    std::size_t kernel_rows(const UpaGeometry &geom, VectorizationMode mode)
    {
        geom.validate();
        if (mode == VectorizationMode::full)
            return 2 * geom.n_antennas() * geom.n_antennas();
        return structured_length(geom.n_vertical, geom.n_horizontal);
    }

    KernelOperator::KernelOperator(const UpaGeometry &geom, double carrier_hz, std::shared_ptr<const AngularGrid> grid,
                                   VectorizationMode mode)
        : geom_(geom), carrier_hz_(carrier_hz), grid_(std::move(grid)), mode_(mode)
    {
        check_carrier(carrier_hz, "KernelOperator");
        if (!grid_)
            throw std::invalid_argument("KernelOperator: null grid");
        geom_.validate();
        if (mode_ == VectorizationMode::structured)
            structure_ = std::make_shared<UpaStructure>(geom_);

        const GridResponse a = ArrayModel(geom_, carrier_hz_).responses(*grid_);
        const auto q = Eigen::Index(grid_->size());
        const auto n = Eigen::Index(geom_.n_antennas());
        const Eigen::VectorXd &w = grid_->weights();
        matrix_.resize(Eigen::Index(kernel_rows(geom_, mode_)), 2 * q);

        if (mode_ == VectorizationMode::full)
        {
            const Eigen::Index nn = n * n;
            Eigen::MatrixXcd outer(n, n);
            for (int pol = 0; pol < 2; ++pol)
            {
                const Eigen::MatrixXcd &resp = pol == 0 ? a.vertical : a.horizontal;
                for (Eigen::Index j = 0; j < q; ++j)
                {
                    outer.noalias() = resp.col(j) * resp.col(j).adjoint();
                    const Eigen::Map<const Eigen::VectorXcd> flat(outer.data(), nn);
                    auto col = matrix_.col(pol * q + j);
                    col.head(nn) = w(j) * flat.real();
                    col.tail(nn) = w(j) * flat.imag();
                }
            }
            return;
        }

        const auto &slots = structure_->slots();
        Eigen::RowVectorXcd prod(q);
        for (std::size_t p = 0; p < slots.size(); ++p)
        {
            const auto row = Eigen::Index(slots[p].row);
            const auto col = Eigen::Index(slots[p].col);
            for (int pol = 0; pol < 2; ++pol)
            {
                const Eigen::MatrixXcd &resp = pol == 0 ? a.vertical : a.horizontal;
                prod = resp.row(row).cwiseProduct(resp.row(col).conjugate());
                matrix_.block(Eigen::Index(2 * p), pol * q, 1, q) = prod.real().cwiseProduct(w.transpose());
                if (slots[p].real_only)
                    matrix_.block(Eigen::Index(2 * p + 1), pol * q, 1, q).setZero();
                else
                    matrix_.block(Eigen::Index(2 * p + 1), pol * q, 1, q) = prod.imag().cwiseProduct(w.transpose());
            }
        }
    }

    Eigen::VectorXd KernelOperator::apply(const PolarizedAps &aps) const
    {
        if (!(aps.grid() == *grid_))
            throw std::invalid_argument("KernelOperator::apply: spectrum is sampled on a different grid");
        return matrix_ * aps.stacked();
    }

    Eigen::VectorXd KernelOperator::vectorize(const CovarianceMatrix &r, double structure_tolerance) const
    {
        const auto n = Eigen::Index(geom_.n_antennas());
        if (r.rows() != n || r.cols() != n)
            throw std::invalid_argument("KernelOperator::vectorize: matrix is " + std::to_string(r.rows()) + "x" +
                                        std::to_string(r.cols()) + ", geometry needs " + std::to_string(n));
        if (mode_ == VectorizationMode::full)
            return full_vectorize(r);
        return structure_->vectorize(r, structure_tolerance);
    }

    CovarianceMatrix KernelOperator::devectorize(const Eigen::VectorXd &v) const
    {
        if (mode_ == VectorizationMode::full)
        {
            const CovarianceMatrix r = full_devectorize(v, geom_.n_antennas());
            return 0.5 * (r + r.adjoint());
        }
        return structure_->devectorize(v);
    }

    VarietyProjector::VarietyProjector(std::shared_ptr<const KernelOperator> kernel, double truncation)
        : kernel_(std::move(kernel)), truncation_(truncation)
    {
        if (!kernel_)
            throw std::invalid_argument("VarietyProjector: null kernel");
        if (!(truncation_ > 0.0 && truncation_ < 1.0))
            throw std::invalid_argument("VarietyProjector: truncation must lie in (0, 1)");

        const Eigen::VectorXd &w = kernel_->grid().weights();
        sqrt_w_.resize(2 * w.size());
        sqrt_w_ << w.cwiseSqrt(), w.cwiseSqrt();

        // A = K W^{-1/2} is wide. Factor A^T = Q R, then A = (R^T) Q^T and the SVD of
        // the small square factor gives U, sigma and V = Q V_r.
        const Eigen::MatrixXd &k = kernel_->matrix();
        const Eigen::Index m = k.rows();
        const Eigen::Index cols = k.cols();
        if (cols < m)
            throw std::invalid_argument("VarietyProjector: grid is too coarse (" + std::to_string(cols / 2) +
                                        " nodes for " + std::to_string(m) + " measurements)");

        Eigen::MatrixXd at = (k * sqrt_w_.cwiseInverse().asDiagonal()).transpose();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(at);
        at.resize(0, 0);
        const Eigen::MatrixXd r_small = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
        Eigen::BDCSVD<Eigen::MatrixXd> svd(r_small.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
        if (svd.info() != Eigen::Success)
            throw NumericalError("VarietyProjector: SVD did not converge");

        all_singular_values_ = svd.singularValues();
        if (!all_singular_values_.allFinite())
            throw NumericalError("VarietyProjector: non-finite singular values");
        const double smax = all_singular_values_.size() ? all_singular_values_(0) : 0.0;
        Eigen::Index rank = 0;
        while (rank < all_singular_values_.size() && all_singular_values_(rank) > truncation_ * smax)
            ++rank;

        u_ = svd.matrixU().leftCols(rank);
        s_ = all_singular_values_.head(rank);
        Eigen::MatrixXd vr = Eigen::MatrixXd::Zero(cols, rank);
        vr.topRows(m) = svd.matrixV().leftCols(rank);
        v_ = qr.householderQ() * vr;
    }

    Eigen::VectorXd VarietyProjector::range_coefficients(const Eigen::VectorXd &r) const
    {
        if (r.size() != u_.rows())
            throw std::invalid_argument("VarietyProjector: expected " + std::to_string(u_.rows()) +
                                        " measurements, got " + std::to_string(r.size()));
        return (u_.transpose() * r).cwiseQuotient(s_);
    }

    namespace
    {
        double relative(double num, double den)
        {
            return den > 0.0 ? num / den : num;
        }
    } // namespace

    VarietyProjector::Result VarietyProjector::project(const PolarizedAps &from, const Eigen::VectorXd &r) const
    {
        if (!(from.grid() == kernel_->grid()))
            throw std::invalid_argument("VarietyProjector::project: spectrum is sampled on a different grid");
        const Eigen::VectorXd s = range_coefficients(r);
        Eigen::VectorXd z = to_scaled(from.stacked());
        const Eigen::VectorXd c = v_.transpose() * z;
        z.noalias() += v_ * (s - c);
        PolarizedAps aps(from.grid_ptr(), from_scaled(z));
        const double residual = relative((kernel_->matrix() * aps.stacked() - r).norm(), r.norm());
        return {std::move(aps), residual, residual <= 1e-8};
    }

    std::string geometry_hash(const UpaGeometry &geom)
    {
        const ElementPattern &p = geom.pattern;
        std::ostringstream os;
        os << "nv=" << geom.n_vertical << ";nh=" << geom.n_horizontal << ";d=" << format_double(geom.spacing_m)
           << ";slant=" << format_double(geom.slant_rad[0]) << "," << format_double(geom.slant_rad[1])
           << ";gmax=" << format_double(p.max_gain_dbi) << ";bw=" << format_double(p.vertical_beamwidth_deg) << ","
           << format_double(p.horizontal_beamwidth_deg) << ";sla=" << format_double(p.side_lobe_db)
           << ";fb=" << format_double(p.front_back_db);
        // FNV-1a, 64 bit
        std::uint64_t h = 14695981039346656037ull;
        for (unsigned char ch : os.str())
        {
            h ^= ch;
            h *= 1099511628211ull;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    ConversionOperator build_conversion_operator(const VarietyProjector &projector_u, const KernelOperator &kernel_d)
    {
        const KernelOperator &kernel_u = projector_u.kernel();
        if (!(kernel_u.grid() == kernel_d.grid()))
            throw std::invalid_argument("build_conversion_operator: UL and DL kernels use different grids");
        if (kernel_u.mode() != kernel_d.mode())
            throw std::invalid_argument("build_conversion_operator: UL and DL kernels use different vectorizations");
        if (geometry_hash(kernel_u.geometry()) != geometry_hash(kernel_d.geometry()))
            throw std::invalid_argument("build_conversion_operator: UL and DL kernels use different arrays");

        // F = K_d W^{-1/2} V_k Sigma_k^{-1} U_k^T
        const Eigen::MatrixXd kdv =
            (kernel_d.matrix() * projector_u.sqrt_weights().cwiseInverse().asDiagonal()) * projector_u.v();
        ConversionOperator op;
        op.matrix = (kdv * projector_u.s().cwiseInverse().asDiagonal()) * projector_u.u().transpose();
        if (!op.matrix.allFinite())
            throw NumericalError("build_conversion_operator: non-finite operator");
        op.provenance.geometry_hash = geometry_hash(kernel_u.geometry());
        op.provenance.ul_hz = kernel_u.carrier_hz();
        op.provenance.dl_hz = kernel_d.carrier_hz();
        op.provenance.grid_azimuth = kernel_u.grid().n_azimuth();
        op.provenance.grid_zenith = kernel_u.grid().n_zenith();
        op.provenance.measure = kernel_u.grid().measure();
        op.provenance.truncation = projector_u.truncation();
        op.provenance.mode = kernel_u.mode();
        return op;
    }

    namespace
    {
        constexpr char kOperatorMagic[5] = {'F', 'C', 'N', 'V', '1'};

        void put_u32(std::ostream &os, std::uint32_t v)
        {
            const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
            os.write(reinterpret_cast<const char *>(b), 4);
        }

        std::uint32_t get_u32(const unsigned char *b)
        {
            return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
                   std::uint32_t(b[3]) << 24;
        }

        void put_f64(std::ostream &os, double x)
        {
            const auto bits = std::bit_cast<std::uint64_t>(x);
            unsigned char b[8];
            for (int i = 0; i < 8; ++i)
                b[i] = static_cast<unsigned char>(bits >> (8 * i));
            os.write(reinterpret_cast<const char *>(b), 8);
        }

        double get_f64(const unsigned char *b)
        {
            std::uint64_t bits = 0;
            for (int i = 0; i < 8; ++i)
                bits |= std::uint64_t(b[i]) << (8 * i);
            return std::bit_cast<double>(bits);
        }
    } // namespace

    void save_operator(const ConversionOperator &op, const std::string &path)
    {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os)
            throw FormatError("save_operator: cannot open " + path + " for writing");
        os.write(kOperatorMagic, sizeof kOperatorMagic);
        put_u32(os, std::uint32_t(op.matrix.rows()));
        put_u32(os, std::uint32_t(op.matrix.cols()));
        for (Eigen::Index i = 0; i < op.matrix.rows(); ++i)
            for (Eigen::Index j = 0; j < op.matrix.cols(); ++j)
                put_f64(os, op.matrix(i, j));
        const OperatorProvenance &p = op.provenance;
        os << "geometry_hash=" << p.geometry_hash << "\n"
           << "ul_hz=" << format_double(p.ul_hz) << "\n"
           << "dl_hz=" << format_double(p.dl_hz) << "\n"
           << "grid_azimuth=" << p.grid_azimuth << "\n"
           << "grid_zenith=" << p.grid_zenith << "\n"
           << "measure=" << (p.measure == AngularMeasure::lebesgue ? "lebesgue" : "solid_angle") << "\n"
           << "truncation=" << format_double(p.truncation) << "\n"
           << "vectorization=" << mode_name(p.mode) << "\n";
        if (!os)
            throw FormatError("save_operator: write to " + path + " failed");
    }

    ConversionOperator load_operator(const std::string &path)
    {
        std::ifstream is(path, std::ios::binary);
        if (!is)
            throw FormatError("load_operator: cannot open " + path);
        const std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        const auto *bytes = reinterpret_cast<const unsigned char *>(data.data());
        if (data.size() < 13 || std::memcmp(data.data(), kOperatorMagic, sizeof kOperatorMagic) != 0)
            throw FormatError("load_operator: " + path + " is not an FCNV1 file");
        const std::uint32_t rows = get_u32(bytes + 5);
        const std::uint32_t cols = get_u32(bytes + 9);
        const std::size_t payload = std::size_t(rows) * cols * 8;
        if (data.size() < 13 + payload)
            throw FormatError("load_operator: " + path + " is truncated");

        ConversionOperator op;
        op.matrix.resize(rows, cols);
        const unsigned char *p = bytes + 13;
        for (std::uint32_t i = 0; i < rows; ++i)
            for (std::uint32_t j = 0; j < cols; ++j, p += 8)
                op.matrix(i, j) = get_f64(p);
        if (!op.matrix.allFinite())
            throw FormatError("load_operator: " + path + " holds non-finite entries");

        std::map<std::string, std::string> kv;
        std::istringstream footer(data.substr(13 + payload));
        std::string line;
        while (std::getline(footer, line))
        {
            if (line.empty())
                continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw FormatError("load_operator: malformed provenance line '" + line + "'");
            kv[line.substr(0, eq)] = line.substr(eq + 1);
        }
        auto get = [&](const char *key) -> const std::string &
        {
            auto it = kv.find(key);
            if (it == kv.end())
                throw FormatError(std::string("load_operator: provenance lacks '") + key + "'");
            return it->second;
        };
        try
        {
            OperatorProvenance &prov = op.provenance;
            prov.geometry_hash = get("geometry_hash");
            prov.ul_hz = std::stod(get("ul_hz"));
            prov.dl_hz = std::stod(get("dl_hz"));
            prov.grid_azimuth = std::stoul(get("grid_azimuth"));
            prov.grid_zenith = std::stoul(get("grid_zenith"));
            prov.truncation = std::stod(get("truncation"));
            const std::string &measure = get("measure");
            if (measure == "lebesgue")
                prov.measure = AngularMeasure::lebesgue;
            else if (measure == "solid_angle")
                prov.measure = AngularMeasure::solid_angle;
            else
                throw FormatError("load_operator: unknown measure '" + measure + "'");
            const std::string &mode = get("vectorization");
            if (mode == "full")
                prov.mode = VectorizationMode::full;
            else if (mode == "structured")
                prov.mode = VectorizationMode::structured;
            else
                throw FormatError("load_operator: unknown vectorization '" + mode + "'");
        }
        catch (const std::logic_error &)
        {
            throw FormatError("load_operator: unparsable provenance in " + path);
        }
        return op;
    }

    Algorithm1Result algorithm1(const VarietyProjector &projector_u, const KernelOperator &kernel_d,
                                const Eigen::VectorXd &r_u)
    {
        if (!(projector_u.kernel().grid() == kernel_d.grid()))
            throw std::invalid_argument("algorithm1: UL and DL kernels use different grids");
        const Eigen::VectorXd z = projector_u.v() * projector_u.range_coefficients(r_u);
        PolarizedAps aps(projector_u.kernel().grid_ptr(), projector_u.from_scaled(z));
        const double residual = relative((projector_u.kernel().matrix() * aps.stacked() - r_u).norm(), r_u.norm());
        Eigen::VectorXd r_d = kernel_d.matrix() * aps.stacked();
        return {std::move(aps), std::move(r_d), residual};
    }

    void EapmParams::validate() const
    {
        if (max_iterations < 1)
            throw std::invalid_argument("EapmParams: max_iterations must be at least 1");
        if (!(residual_tolerance > 0.0))
            throw std::invalid_argument("EapmParams: residual_tolerance must be positive");
        if (!(max_extrapolation >= 1.0))
            throw std::invalid_argument("EapmParams: max_extrapolation must be at least 1");
    }

    PolarizedAps project_onto_cone(const PolarizedAps &aps)
    {
        return PolarizedAps(aps.grid_ptr(), aps.rho_v().cwiseMax(0.0), aps.rho_h().cwiseMax(0.0));
    }

    EapmResult algorithm2_eapm(const VarietyProjector &projector_u, const KernelOperator &kernel_d,
                               const Eigen::VectorXd &r_u, const EapmParams &params)
    {
        params.validate();
        if (!(projector_u.kernel().grid() == kernel_d.grid()))
            throw std::invalid_argument("algorithm2_eapm: UL and DL kernels use different grids");

        // Scaled coordinates z = W^{1/2} x: both projections are Euclidean there.
        // The variety is {z : A z = U U^T r}, i.e. the least-squares solutions when
        // r has a component outside the range of the kernel.
        const Eigen::VectorXd &sigma = projector_u.s();
        const Eigen::MatrixXd &v = projector_u.v();
        const Eigen::VectorXd s = projector_u.range_coefficients(r_u);
        const double r_norm = r_u.norm();
        const double s_norm = s.norm();

        Eigen::VectorXd z = v * s;
        Eigen::VectorXd y(z.size());
        Eigen::VectorXd best_y;
        Eigen::VectorXd c(s.size());
        Eigen::VectorXd step(z.size());
        double best_phi = std::numeric_limits<double>::infinity();

        EapmResult out{PolarizedAps::zeros(projector_u.kernel().grid_ptr()), {}, 0, 0.0, false, {}, {}};
        std::size_t k = 0;
        for (;; ++k)
        {
            y = z.cwiseMax(0.0);
            c.noalias() = v.transpose() * y;
            const Eigen::VectorXd gap = s - c;
            // A y - U U^T r = U Sigma (c - s)
            const double phi = relative(sigma.cwiseProduct(gap).norm(), r_norm);
            const double dist = relative(gap.norm(), s_norm);
            if (!std::isfinite(phi))
                throw NumericalError("algorithm2_eapm: non-finite iterate");
            out.residual_history.push_back(phi);
            out.infeasibility_history.push_back(dist);
            if (phi < best_phi)
            {
                best_phi = phi;
                best_y = y;
            }
            if (phi <= params.residual_tolerance)
            {
                out.converged = true;
                break;
            }
            if (k == params.max_iterations)
                break;

            // P_V(y) - z, with z on the variety
            step = y - z;
            const double num = step.squaredNorm();
            step.noalias() += v * gap;
            double nu = 1.0;
            if (params.extrapolation)
            {
                const double den = step.squaredNorm();
                nu = den > 0.0 ? std::clamp(num / den, 1.0, params.max_extrapolation) : 1.0;
            }
            z.noalias() += nu * step;
        }

        out.iterations = k;
        out.residual = best_phi;
        out.aps = PolarizedAps(projector_u.kernel().grid_ptr(), projector_u.from_scaled(best_y));
        out.r_d = kernel_d.matrix() * out.aps.stacked();
        return out;
    }

    Converter::Converter(const UpaGeometry &geom, double ul_hz, double dl_hz, std::shared_ptr<const AngularGrid> grid,
                         ConverterSettings settings)
        : geom_(geom), ul_hz_(ul_hz), dl_hz_(dl_hz), grid_(std::move(grid)), settings_(settings)
    {
        check_carrier(ul_hz, "Converter");
        check_carrier(dl_hz, "Converter");
        if (!grid_)
            throw std::invalid_argument("Converter: null grid");
        settings_.eapm.validate();
        structure_ = std::make_shared<UpaStructure>(geom_);
        build_kernels();
        op_ = build_conversion_operator(*projector_, *kernel_d_);
    }

    Converter::Converter(const UpaGeometry &geom, double ul_hz, double dl_hz, std::shared_ptr<const AngularGrid> grid,
                         ConverterSettings settings, ConversionOperator cached, bool with_kernels)
        : geom_(geom), ul_hz_(ul_hz), dl_hz_(dl_hz), grid_(std::move(grid)), settings_(settings),
          op_(std::move(cached))
    {
        check_carrier(ul_hz, "Converter");
        check_carrier(dl_hz, "Converter");
        if (!grid_)
            throw std::invalid_argument("Converter: null grid");
        settings_.eapm.validate();
        structure_ = std::make_shared<UpaStructure>(geom_);

        OperatorProvenance expected;
        expected.geometry_hash = geometry_hash(geom_);
        expected.ul_hz = ul_hz_;
        expected.dl_hz = dl_hz_;
        expected.grid_azimuth = grid_->n_azimuth();
        expected.grid_zenith = grid_->n_zenith();
        expected.measure = grid_->measure();
        expected.truncation = settings_.truncation;
        expected.mode = settings_.mode;
        if (!(op_.provenance == expected))
            throw std::invalid_argument("Converter: cached operator was built for a different configuration");
        const auto m = Eigen::Index(kernel_rows(geom_, settings_.mode));
        if (op_.matrix.rows() != m || op_.matrix.cols() != m)
            throw std::invalid_argument("Converter: cached operator has the wrong dimensions");
        if (with_kernels)
            build_kernels();
    }

    void Converter::build_kernels()
    {
        kernel_u_ = std::make_shared<KernelOperator>(geom_, ul_hz_, grid_, settings_.mode);
        kernel_d_ = std::make_shared<KernelOperator>(geom_, dl_hz_, grid_, settings_.mode);
        projector_ = std::make_shared<VarietyProjector>(kernel_u_, settings_.truncation);
    }

    const VarietyProjector &Converter::projector() const
    {
        if (!projector_)
            throw std::logic_error("Converter: kernels were not built");
        return *projector_;
    }

    const KernelOperator &Converter::kernel_ul() const
    {
        if (!kernel_u_)
            throw std::logic_error("Converter: kernels were not built");
        return *kernel_u_;
    }

    const KernelOperator &Converter::kernel_dl() const
    {
        if (!kernel_d_)
            throw std::logic_error("Converter: kernels were not built");
        return *kernel_d_;
    }

    ConvertResult Converter::convert(const CovarianceMatrix &r_u, Method method) const
    {
        const auto n = Eigen::Index(geom_.n_antennas());
        if (r_u.rows() != n || r_u.cols() != n)
            throw std::invalid_argument("convert: matrix is " + std::to_string(r_u.rows()) + "x" +
                                        std::to_string(r_u.cols()) + ", geometry needs " + std::to_string(n));
        if (!r_u.allFinite())
            throw std::invalid_argument("convert: non-finite input");

        const CovarianceMatrix avg = structure_->average(r_u);
        const Eigen::VectorXd v = settings_.mode == VectorizationMode::structured
                                      ? structure_->vectorize(avg, settings_.structure_tolerance)
                                      : full_vectorize(avg);

        ConvertResult out;
        Eigen::VectorXd r_d;
        if (method == Method::alg1)
        {
            r_d = op_.matrix * v;
            if (projector_)
            {
                const Eigen::VectorXd in_range = projector_->u() * (projector_->u().transpose() * v);
                out.residual = relative((v - in_range).norm(), v.norm());
            }
            else
                out.residual = std::numeric_limits<double>::quiet_NaN();
        }
        else
        {
            if (!projector_)
                throw std::logic_error("convert: the iterative method needs the kernels");
            EapmResult res = algorithm2_eapm(*projector_, *kernel_d_, v, settings_.eapm);
            r_d = std::move(res.r_d);
            out.iterations = res.iterations;
            out.residual = res.residual;
            out.converged = res.converged;
        }
        if (!r_d.allFinite())
            throw NumericalError("convert: non-finite downlink estimate");

        CovarianceMatrix r;
        if (settings_.mode == VectorizationMode::structured)
            r = structure_->devectorize(r_d);
        else
        {
            r = full_devectorize(r_d, geom_.n_antennas());
            r = (0.5 * (r + r.adjoint())).eval();
        }
        out.r_d = psd_projection(r);
        return out;
    }

} // namespace fddcov

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

#include "fddcov/io.hpp"
#include "fddcov/errors.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace fddcov
{
    namespace
    {
        constexpr char kTextMagic[] = "FCOV-TEXT";
        constexpr char kBinaryMagic[5] = {'F', 'C', 'O', 'V', '1'};
        constexpr std::uint32_t kMaxDimension = 1u << 14;

        std::string slurp(const std::string &path)
        {
            std::ifstream is(path, std::ios::binary);
            if (!is)
                throw FormatError("cannot open " + path);
            return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        }

        bool parse_double(const std::string &tok, double &out)
        {
            const char *b = tok.data();
            const char *e = b + tok.size();
            auto [p, ec] = std::from_chars(b, e, out);
            return ec == std::errc() && p == e;
        }

        bool parse_size(const std::string &tok, std::size_t &out)
        {
            const char *b = tok.data();
            const char *e = b + tok.size();
            auto [p, ec] = std::from_chars(b, e, out);
            return ec == std::errc() && p == e;
        }
    } // namespace

    void write_covariance_text(const CovarianceMatrix &r, const std::string &path)
    {
        if (r.rows() != r.cols())
            throw std::invalid_argument("write_covariance_text: matrix is not square");
        std::FILE *f = std::fopen(path.c_str(), "w");
        if (!f)
            throw FormatError("cannot open " + path + " for writing");
        std::fprintf(f, "%s %lld\n", kTextMagic, static_cast<long long>(r.rows()));
        for (Eigen::Index i = 0; i < r.rows(); ++i)
            for (Eigen::Index j = 0; j < r.cols(); ++j)
                std::fprintf(f, "%lld %lld %.16e %.16e\n", static_cast<long long>(i), static_cast<long long>(j),
                             r(i, j).real(), r(i, j).imag());
        const bool ok = std::ferror(f) == 0;
        if (std::fclose(f) != 0 || !ok)
            throw FormatError("write to " + path + " failed");
    }

    CovarianceMatrix read_covariance_text(const std::string &path)
    {
        std::istringstream is(slurp(path));
        std::string line;
        std::size_t lineno = 0;
        auto fail = [&](const std::string &what)
        { return FormatError(path + ":" + std::to_string(lineno) + ": " + what); };

        if (!std::getline(is, line))
            throw FormatError(path + ": empty file");
        ++lineno;
        std::istringstream head(line);
        std::string magic, ntok;
        std::size_t n = 0;
        if (!(head >> magic >> ntok) || magic != kTextMagic || !parse_size(ntok, n) || n == 0 || n > kMaxDimension)
            throw fail("expected 'FCOV-TEXT N'");

        const auto ni = Eigen::Index(n);
        CovarianceMatrix r(ni, ni);
        std::vector<bool> seen(n * n, false);
        std::size_t entries = 0;
        while (std::getline(is, line))
        {
            ++lineno;
            std::istringstream ls(line);
            std::string ti, tj, tre, tim, extra;
            if (!(ls >> ti))
                continue; // blank line
            std::size_t i = 0, j = 0;
            double re = 0.0, im = 0.0;
            if (!(ls >> tj >> tre >> tim) || (ls >> extra))
                throw fail("expected 'i j re im'");
            if (!parse_size(ti, i) || !parse_size(tj, j) || i >= n || j >= n)
                throw fail("index out of range");
            if (!parse_double(tre, re) || !parse_double(tim, im) || !std::isfinite(re) || !std::isfinite(im))
                throw fail("malformed number");
            if (seen[i * n + j])
                throw fail("duplicate entry (" + std::to_string(i) + ", " + std::to_string(j) + ")");
            seen[i * n + j] = true;
            r(Eigen::Index(i), Eigen::Index(j)) = {re, im};
            ++entries;
        }
        if (entries != n * n)
            throw FormatError(path + ": expected " + std::to_string(n * n) + " entries, found " +
                              std::to_string(entries));
        return r;
    }

    void write_covariance_binary(const CovarianceMatrix &r, const std::string &path)
    {
        if (r.rows() != r.cols())
            throw std::invalid_argument("write_covariance_binary: matrix is not square");
        const Eigen::VectorXd v = full_vectorize(r);
        std::vector<unsigned char> buf;
        buf.reserve(9 + 8 * std::size_t(v.size()));
        buf.insert(buf.end(), kBinaryMagic, kBinaryMagic + 5);
        const auto n = std::uint32_t(r.rows());
        for (int i = 0; i < 4; ++i)
            buf.push_back(static_cast<unsigned char>(n >> (8 * i)));
        for (Eigen::Index k = 0; k < v.size(); ++k)
        {
            const auto bits = std::bit_cast<std::uint64_t>(v(k));
            for (int i = 0; i < 8; ++i)
                buf.push_back(static_cast<unsigned char>(bits >> (8 * i)));
        }
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os)
            throw FormatError("cannot open " + path + " for writing");
        os.write(reinterpret_cast<const char *>(buf.data()), std::streamsize(buf.size()));
        if (!os)
            throw FormatError("write to " + path + " failed");
    }

    CovarianceMatrix read_covariance_binary(const std::string &path)
    {
        const std::string data = slurp(path);
        const auto *b = reinterpret_cast<const unsigned char *>(data.data());
        if (data.size() < 9 || std::memcmp(data.data(), kBinaryMagic, 5) != 0)
            throw FormatError(path + ": not an FCOV1 file");
        const std::uint32_t n = std::uint32_t(b[5]) | std::uint32_t(b[6]) << 8 | std::uint32_t(b[7]) << 16 |
                                std::uint32_t(b[8]) << 24;
        if (n == 0 || n > kMaxDimension)
            throw FormatError(path + ": implausible dimension " + std::to_string(n));
        const std::size_t count = 2 * std::size_t(n) * n;
        if (data.size() != 9 + 8 * count)
            throw FormatError(path + ": expected " + std::to_string(9 + 8 * count) + " bytes, found " +
                              std::to_string(data.size()));
        Eigen::VectorXd v(static_cast<Eigen::Index>(count));
        for (std::size_t k = 0; k < count; ++k)
        {
            std::uint64_t bits = 0;
            for (int i = 0; i < 8; ++i)
                bits |= std::uint64_t(b[9 + 8 * k + std::size_t(i)]) << (8 * i);
            v(Eigen::Index(k)) = std::bit_cast<double>(bits);
        }
        if (!v.allFinite())
            throw FormatError(path + ": non-finite entries");
        return full_devectorize(v, n);
    }

    CovarianceMatrix read_covariance(const std::string &path)
    {
        std::ifstream is(path, std::ios::binary);
        if (!is)
            throw FormatError("cannot open " + path);
        char head[9] = {};
        is.read(head, sizeof head);
        if (is.gcount() >= 5 && std::memcmp(head, kBinaryMagic, 5) == 0)
            return read_covariance_binary(path);
        if (is.gcount() == 9 && std::memcmp(head, kTextMagic, 9) == 0)
            return read_covariance_text(path);
        throw FormatError(path + ": unknown covariance format");
    }

} // namespace fddcov

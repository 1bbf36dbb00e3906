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

#ifndef FDDCOV_IO_HPP
#define FDDCOV_IO_HPP

#include "fddcov/covariance.hpp"

#include <string>

namespace fddcov
{
    // Text: "FCOV-TEXT N", then N^2 lines "i j re im" (zero-based, row-major,
    // 17 significant digits).
    void write_covariance_text(const CovarianceMatrix &r, const std::string &path);
    CovarianceMatrix read_covariance_text(const std::string &path);

    // Binary: "FCOV1", little-endian u32 N, 2 N^2 little-endian doubles in
    // full_vectorize order.
    void write_covariance_binary(const CovarianceMatrix &r, const std::string &path);
    CovarianceMatrix read_covariance_binary(const std::string &path);

    // Detects the format from the leading magic
    CovarianceMatrix read_covariance(const std::string &path);

} // namespace fddcov

#endif

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

#ifndef FDDCOV_ERRORS_HPP
#define FDDCOV_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fddcov
{
    // Malformed configuration; line() is 1-based, 0 when not tied to a line.
    // key() names the offending setting when there is a single one.
    class ConfigError : public std::invalid_argument
    {
    public:
        explicit ConfigError(const std::string &message, std::size_t line = 0, const std::string &source = {},
                             const std::string &key = {})
            : std::invalid_argument(format(message, line, source)), message_(message), key_(key), line_(line)
        {
        }
        std::size_t line() const { return line_; }
        const std::string &message() const { return message_; }
        const std::string &key() const { return key_; }

    private:
        static std::string format(const std::string &message, std::size_t line, const std::string &source)
        {
            std::string where = source;
            if (line)
                where += (where.empty() ? "line " : ":") + std::to_string(line);
            return where.empty() ? message : where + ": " + message;
        }

        std::string message_;
        std::string key_;
        std::size_t line_;
    };

    // Unreadable or malformed file
    class FormatError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Decomposition failure or non-finite intermediate result
    class NumericalError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

} // namespace fddcov

#endif

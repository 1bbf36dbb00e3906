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

#include "fddcov/config.hpp"
#include "fddcov/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace fddcov
{
    namespace
    {
        std::string trim(const std::string &s)
        {
            const auto b = s.find_first_not_of(" \t\r\n");
            if (b == std::string::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r\n");
            return s.substr(b, e - b + 1);
        }

        std::string fmt(double x)
        {
            if (std::isinf(x))
                return x > 0 ? "inf" : "-inf";
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", x);
            return buf;
        }

        double to_double(const std::string &key, const std::string &v)
        {
            const std::string t = trim(v);
            if (t == "inf" || t == "+inf")
                return std::numeric_limits<double>::infinity();
            double out = 0.0;
            auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
            if (t.empty() || ec != std::errc() || p != t.data() + t.size() || !std::isfinite(out))
                throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
            return out;
        }

        double to_finite(const std::string &key, const std::string &v)
        {
            const double x = to_double(key, v);
            if (!std::isfinite(x))
                throw ConfigError("'" + key + "' must be finite");
            return x;
        }

        std::uint64_t to_u64(const std::string &key, const std::string &v)
        {
            const std::string t = trim(v);
            std::uint64_t out = 0;
            auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
            if (t.empty() || ec != std::errc() || p != t.data() + t.size())
                throw ConfigError("'" + key + "' expects a nonnegative integer, got '" + v + "'");
            return out;
        }

        std::size_t to_size(const std::string &key, const std::string &v)
        {
            return std::size_t(to_u64(key, v));
        }

        bool to_bool(const std::string &key, const std::string &v)
        {
            const std::string t = trim(v);
            if (t == "true" || t == "1" || t == "yes" || t == "on")
                return true;
            if (t == "false" || t == "0" || t == "no" || t == "off")
                return false;
            throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
        }

        std::vector<double> to_list(const std::string &key, const std::string &v, std::size_t count)
        {
            std::string t = v;
            std::replace(t.begin(), t.end(), ',', ' ');
            std::istringstream is(t);
            std::vector<double> out;
            std::string tok;
            while (is >> tok)
                out.push_back(to_finite(key, tok));
            if (out.size() != count)
                throw ConfigError("'" + key + "' expects " + std::to_string(count) + " numbers, got '" + v + "'");
            return out;
        }

        // Interval stored in radians, written in degrees
        Interval to_interval_deg(const std::string &key, const std::string &v)
        {
            const auto x = to_list(key, v, 2);
            if (x[0] > x[1])
                throw ConfigError("'" + key + "' lower bound exceeds upper bound");
            return {deg2rad(x[0]), deg2rad(x[1])};
        }

        std::string fmt_interval_deg(const Interval &i)
        {
            return fmt(rad2deg(i.lo)) + " " + fmt(rad2deg(i.hi));
        }

        std::pair<std::size_t, std::size_t> to_grid(const std::string &key, const std::string &v)
        {
            const std::string t = trim(v);
            const auto x = t.find_first_of("xX");
            if (x == std::string::npos)
                throw ConfigError("'" + key + "' expects AxZ, got '" + v + "'");
            const std::size_t a = to_size(key, t.substr(0, x));
            const std::size_t z = to_size(key, t.substr(x + 1));
            if (a == 0 || z == 0)
                throw ConfigError("'" + key + "' dimensions must be positive");
            return {a, z};
        }

        struct Entry
        {
            std::function<void(CampaignConfig &, const std::string &, const std::string &)> set;
            std::function<std::string(const CampaignConfig &)> get;
        };

        using Table = std::vector<std::pair<std::string, Entry>>;

        Table make_table()
        {
            Table t;
            auto num = [&](const char *key, auto member)
            {
                t.push_back({key,
                             {[member](CampaignConfig &c, const std::string &k, const std::string &v)
                              { member(c) = to_finite(k, v); },
                              [member](const CampaignConfig &c)
                              { return fmt(member(const_cast<CampaignConfig &>(c))); }}});
            };
            auto count = [&](const char *key, auto member)
            {
                t.push_back({key,
                             {[member](CampaignConfig &c, const std::string &k, const std::string &v)
                              { member(c) = to_size(k, v); },
                              [member](const CampaignConfig &c)
                              { return std::to_string(member(const_cast<CampaignConfig &>(c))); }}});
            };
            auto interval = [&](const char *key, auto member)
            {
                t.push_back({key,
                             {[member](CampaignConfig &c, const std::string &k, const std::string &v)
                              { member(c) = to_interval_deg(k, v); },
                              [member](const CampaignConfig &c)
                              { return fmt_interval_deg(member(const_cast<CampaignConfig &>(c))); }}});
            };
            auto flag = [&](const char *key, auto member)
            {
                t.push_back({key,
                             {[member](CampaignConfig &c, const std::string &k, const std::string &v)
                              { member(c) = to_bool(k, v); },
                              [member](const CampaignConfig &c)
                              { return std::string(member(const_cast<CampaignConfig &>(c)) ? "true" : "false"); }}});
            };

            num("ul_hz", [](CampaignConfig &c) -> double & { return c.ul_hz; });
            num("dl_hz", [](CampaignConfig &c) -> double & { return c.dl_hz; });
            count("n_vertical", [](CampaignConfig &c) -> std::size_t & { return c.n_vertical; });
            count("n_horizontal", [](CampaignConfig &c) -> std::size_t & { return c.n_horizontal; });
            num("spacing_wavelengths", [](CampaignConfig &c) -> double & { return c.spacing_wavelengths; });
            t.push_back({"slant_deg",
                         {[](CampaignConfig &c, const std::string &k, const std::string &v)
                          {
                              const auto x = to_list(k, v, 2);
                              c.slant_deg[0] = x[0];
                              c.slant_deg[1] = x[1];
                          },
                          [](const CampaignConfig &c) { return fmt(c.slant_deg[0]) + " " + fmt(c.slant_deg[1]); }}});
            num("max_gain_dbi", [](CampaignConfig &c) -> double & { return c.pattern.max_gain_dbi; });
            num("beamwidth_vertical_deg", [](CampaignConfig &c) -> double & { return c.pattern.vertical_beamwidth_deg; });
            num("beamwidth_horizontal_deg",
                [](CampaignConfig &c) -> double & { return c.pattern.horizontal_beamwidth_deg; });
            num("side_lobe_db", [](CampaignConfig &c) -> double & { return c.pattern.side_lobe_db; });
            num("front_back_db", [](CampaignConfig &c) -> double & { return c.pattern.front_back_db; });

            count("n_clusters", [](CampaignConfig &c) -> std::size_t & { return c.scenario.n_clusters; });
            count("n_subpaths", [](CampaignConfig &c) -> std::size_t & { return c.scenario.n_subpaths; });
            interval("cluster_azimuth_deg", [](CampaignConfig &c) -> Interval & { return c.scenario.azimuth_mean; });
            interval("cluster_zenith_deg", [](CampaignConfig &c) -> Interval & { return c.scenario.zenith_mean; });
            interval("bs_azimuth_spread_deg",
                     [](CampaignConfig &c) -> Interval & { return c.scenario.bs_azimuth_spread; });
            interval("bs_zenith_spread_deg", [](CampaignConfig &c) -> Interval & { return c.scenario.bs_zenith_spread; });
            interval("ue_azimuth_spread_deg",
                     [](CampaignConfig &c) -> Interval & { return c.scenario.ue_azimuth_spread; });
            interval("ue_zenith_spread_deg", [](CampaignConfig &c) -> Interval & { return c.scenario.ue_zenith_spread; });
            num("xpr_mu_db", [](CampaignConfig &c) -> double & { return c.scenario.xpr_mu_db; });
            num("xpr_sigma_db", [](CampaignConfig &c) -> double & { return c.scenario.xpr_sigma_db; });
            interval("ue_rotation_deg", [](CampaignConfig &c) -> Interval & { return c.scenario.ue_rotation; });
            flag("wideband", [](CampaignConfig &c) -> bool & { return c.scenario.wideband; });
            count("n_subcarriers",
                  [](CampaignConfig &c) -> std::size_t & { return c.scenario.wideband_config.n_subcarriers; });
            count("impulse_length",
                  [](CampaignConfig &c) -> std::size_t & { return c.scenario.wideband_config.impulse_length; });

            count("n_snapshots", [](CampaignConfig &c) -> std::size_t & { return c.n_snapshots; });
            t.push_back({"snr_db",
                         {[](CampaignConfig &c, const std::string &k, const std::string &v)
                          {
                              const double x = to_double(k, v);
                              if (std::isinf(x) && x < 0)
                                  throw ConfigError("'snr_db' cannot be -inf");
                              c.snr_db = x;
                          },
                          [](const CampaignConfig &c) { return fmt(c.snr_db); }}});
            count("n_trials", [](CampaignConfig &c) -> std::size_t & { return c.n_trials; });
            t.push_back({"seed",
                         {[](CampaignConfig &c, const std::string &k, const std::string &v) { c.seed = to_u64(k, v); },
                          [](const CampaignConfig &c) { return std::to_string(c.seed); }}});

            t.push_back({"grid",
                         {[](CampaignConfig &c, const std::string &k, const std::string &v)
                          { std::tie(c.grid_azimuth, c.grid_zenith) = to_grid(k, v); },
                          [](const CampaignConfig &c)
                          { return std::to_string(c.grid_azimuth) + "x" + std::to_string(c.grid_zenith); }}});
            t.push_back({"truth_grid",
                         {[](CampaignConfig &c, const std::string &k, const std::string &v)
                          { std::tie(c.truth_azimuth, c.truth_zenith) = to_grid(k, v); },
                          [](const CampaignConfig &c)
                          { return std::to_string(c.truth_azimuth) + "x" + std::to_string(c.truth_zenith); }}});
            t.push_back({"measure",
                         {[](CampaignConfig &c, const std::string &, const std::string &v)
                          {
                              const std::string x = trim(v);
                              if (x == "lebesgue")
                                  c.measure = AngularMeasure::lebesgue;
                              else if (x == "solid_angle")
                                  c.measure = AngularMeasure::solid_angle;
                              else
                                  throw ConfigError("'measure' expects lebesgue or solid_angle, got '" + v + "'");
                          },
                          [](const CampaignConfig &c)
                          { return std::string(c.measure == AngularMeasure::lebesgue ? "lebesgue" : "solid_angle"); }}});
            t.push_back({"vectorization",
                         {[](CampaignConfig &c, const std::string &, const std::string &v)
                          {
                              const std::string x = trim(v);
                              if (x == "structured")
                                  c.converter.mode = VectorizationMode::structured;
                              else if (x == "full")
                                  c.converter.mode = VectorizationMode::full;
                              else
                                  throw ConfigError("'vectorization' expects structured or full, got '" + v + "'");
                          },
                          [](const CampaignConfig &c)
                          {
                              return std::string(c.converter.mode == VectorizationMode::structured ? "structured"
                                                                                                  : "full");
                          }}});
            num("truncation", [](CampaignConfig &c) -> double & { return c.converter.truncation; });
            num("structure_tolerance", [](CampaignConfig &c) -> double & { return c.converter.structure_tolerance; });
            t.push_back({"methods",
                         {[](CampaignConfig &c, const std::string &, const std::string &v)
                          {
                              const std::string x = trim(v);
                              if (x == "alg1")
                                  c.run_alg1 = true, c.run_alg2 = false;
                              else if (x == "alg2")
                                  c.run_alg1 = false, c.run_alg2 = true;
                              else if (x == "both")
                                  c.run_alg1 = true, c.run_alg2 = true;
                              else
                                  throw ConfigError("'methods' expects alg1, alg2 or both, got '" + v + "'");
                          },
                          [](const CampaignConfig &c)
                          { return std::string(c.run_alg1 && c.run_alg2 ? "both" : c.run_alg1 ? "alg1" : "alg2"); }}});
            count("eapm_max_iterations", [](CampaignConfig &c) -> std::size_t & { return c.converter.eapm.max_iterations; });
            num("eapm_tolerance", [](CampaignConfig &c) -> double & { return c.converter.eapm.residual_tolerance; });
            flag("eapm_extrapolation", [](CampaignConfig &c) -> bool & { return c.converter.eapm.extrapolation; });
            num("eapm_max_extrapolation", [](CampaignConfig &c) -> double & { return c.converter.eapm.max_extrapolation; });
            t.push_back({"operator_cache",
                         {[](CampaignConfig &c, const std::string &, const std::string &v) { c.operator_cache = trim(v); },
                          [](const CampaignConfig &c) { return c.operator_cache; }}});
            t.push_back({"out",
                         {[](CampaignConfig &c, const std::string &, const std::string &v)
                          {
                              if (trim(v).empty())
                                  throw ConfigError("'out' must not be empty");
                              c.out_dir = trim(v);
                          },
                          [](const CampaignConfig &c) { return c.out_dir; }}});
            return t;
        }

        const Table &table()
        {
            static const Table t = make_table();
            return t;
        }

        const Entry &lookup(const std::string &key)
        {
            for (const auto &[k, e] : table())
                if (k == key)
                    return e;
            throw ConfigError("unknown key '" + key + "'");
        }
    } // namespace

    UpaGeometry CampaignConfig::geometry() const
    {
        UpaGeometry g;
        g.n_vertical = n_vertical;
        g.n_horizontal = n_horizontal;
        g.spacing_m = spacing_wavelengths * wavelength(ul_hz);
        g.slant_rad[0] = deg2rad(slant_deg[0]);
        g.slant_rad[1] = deg2rad(slant_deg[1]);
        g.pattern = pattern;
        return g;
    }

    void CampaignConfig::validate() const
    {
        if (!(ul_hz > 0.0) || !(dl_hz > 0.0))
            throw ConfigError("carrier frequencies must be positive", 0, {}, ul_hz > 0.0 ? "dl_hz" : "ul_hz");
        if (!(spacing_wavelengths > 0.0))
            throw ConfigError("'spacing_wavelengths' must be positive", 0, {}, "spacing_wavelengths");
        if (n_snapshots < 1)
            throw ConfigError("'n_snapshots' must be at least 1", 0, {}, "n_snapshots");
        if (n_trials < 1)
            throw ConfigError("'n_trials' must be at least 1", 0, {}, "n_trials");
        if (std::isnan(snr_db))
            throw ConfigError("'snr_db' must be a number", 0, {}, "snr_db");
        if (!(converter.truncation > 0.0 && converter.truncation < 1.0))
            throw ConfigError("'truncation' must lie in (0, 1)", 0, {}, "truncation");
        if (!(converter.structure_tolerance > 0.0))
            throw ConfigError("'structure_tolerance' must be positive", 0, {}, "structure_tolerance");
        if (!run_alg1 && !run_alg2)
            throw ConfigError("no conversion method selected", 0, {}, "methods");
        try
        {
            geometry().validate();
            scenario.validate();
            converter.eapm.validate();
        }
        catch (const ConfigError &)
        {
            throw;
        }
        catch (const std::invalid_argument &e)
        {
            throw ConfigError(e.what());
        }
    }

    void apply_setting(CampaignConfig &cfg, const std::string &key, const std::string &value)
    {
        lookup(key).set(cfg, key, value);
    }

    std::string get_setting(const CampaignConfig &cfg, const std::string &key)
    {
        return lookup(key).get(cfg);
    }

    const std::vector<std::string> &config_keys()
    {
        static const std::vector<std::string> keys = []
        {
            std::vector<std::string> k;
            for (const auto &e : table())
                k.push_back(e.first);
            return k;
        }();
        return keys;
    }

    CampaignConfig parse_config(std::istream &is)
    {
        CampaignConfig cfg;
        std::map<std::string, std::size_t> seen;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(is, line))
        {
            ++lineno;
            const auto hash = line.find('#');
            const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
            if (body.empty())
                continue;
            const auto eq = body.find('=');
            if (eq == std::string::npos)
                throw ConfigError("expected 'key = value', got '" + body + "'", lineno);
            const std::string key = trim(body.substr(0, eq));
            const std::string value = trim(body.substr(eq + 1));
            if (key.empty())
                throw ConfigError("missing key before '='", lineno);
            if (auto it = seen.find(key); it != seen.end())
                throw ConfigError("duplicate key '" + key + "' (first set on line " + std::to_string(it->second) + ")",
                                  lineno);
            seen[key] = lineno;
            try
            {
                apply_setting(cfg, key, value);
            }
            catch (const ConfigError &e)
            {
                throw ConfigError(e.message(), lineno, {}, key);
            }
        }
        try
        {
            cfg.validate();
        }
        catch (const ConfigError &e)
        {
            // point at the line that set the offending key, if the file set it
            const auto it = seen.find(e.key());
            throw ConfigError(e.message(), it == seen.end() ? 0 : it->second, {}, e.key());
        }
        return cfg;
    }

    CampaignConfig load_config(const std::string &path)
    {
        std::ifstream is(path);
        if (!is)
            throw ConfigError("cannot open config file " + path);
        try
        {
            return parse_config(is);
        }
        catch (const ConfigError &e)
        {
            throw ConfigError(e.message(), e.line(), path, e.key());
        }
    }

    std::string dump_config(const CampaignConfig &cfg)
    {
        std::string out;
        for (const auto &[k, e] : table())
            out += k + " = " + e.get(cfg) + "\n";
        return out;
    }

} // namespace fddcov

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

// Runs the command-line tool as a subprocess

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "test_support.hpp"

#include "fddcov/io.hpp"
#include "fddcov/metrics.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fddcov;
namespace fs = std::filesystem;

namespace
{
    struct Run
    {
        int code;
        std::string out;
        std::string err;
    };

    fs::path work_dir()
    {
        static const fs::path dir = []
        {
            const fs::path d = fs::temp_directory_path() / "fddcov_cli_test";
            fs::remove_all(d);
            fs::create_directories(d);
            return d;
        }();
        return dir;
    }

    std::string slurp(const fs::path &p)
    {
        std::ifstream is(p, std::ios::binary);
        std::ostringstream os;
        os << is.rdbuf();
        return os.str();
    }

    Run run(const std::string &args, const std::string &env = {})
    {
        const fs::path out = work_dir() / "stdout.txt", err = work_dir() / "stderr.txt";
        const std::string cmd = env + (env.empty() ? "" : " ") + "\"" FDDCOV_CLI_PATH "\" " + args + " >\"" +
                                out.string() + "\" 2>\"" + err.string() + "\"";
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
    }

    fs::path write_config(const std::string &name, const std::string &text)
    {
        const fs::path p = work_dir() / name;
        std::ofstream os(p);
        os << text;
        return p;
    }

    // Small campaign: coarse grids, few snapshots
    const char *kQuick = "grid = 40x20\n"
                         "truth_grid = 180x90\n"
                         "n_snapshots = 100\n"
                         "eapm_max_iterations = 30\n";
}

TEST_CASE("usage errors exit with code 2")
{
    CHECK(run("").code == 2);
    CHECK(run("frobnicate").code == 2);
    CHECK(run("--help").code == 0);
    CHECK(run("simulate --trials 0").code == 2);
    CHECK(run("simulate --method alg9").code == 2);
    CHECK(run("simulate --grid 12by6 --trials 1").code == 2);

    const fs::path bad = write_config("bad.cfg", "# header\nseed = 4\nn_snapshots = lots\n");
    const Run r = run("simulate --config \"" + bad.string() + "\"");
    CHECK(r.code == 2);
    CHECK(r.err.find(bad.string() + ":3:") != std::string::npos);
    CHECK(r.err.find("n_snapshots") != std::string::npos);

    const fs::path dup = write_config("dup.cfg", "seed = 4\n\nseed = 5\n");
    const Run d = run("kernel build --config \"" + dup.string() + "\"");
    CHECK(d.code == 2);
    CHECK(d.err.find(":3:") != std::string::npos);

    CHECK(run("convert --config \"" + (work_dir() / "missing.cfg").string() + "\" a b").code == 2);
}

TEST_CASE("convert at equal carriers returns the input")
{
    const fs::path cfg = write_config("identity.cfg", std::string(kQuick) + "ul_hz = 1.8e9\ndl_hz = 1.8e9\n");
    std::mt19937_64 rng(3);
    const UpaGeometry g = test::default_geometry();
    const auto grid = test::make_grid(40, 20);
    const Eigen::MatrixXcd r = covariance_from_aps(test::random_aps(grid, rng, 0.2), g, 1.8e9, *grid);
    const fs::path in = work_dir() / "ul.txt", out = work_dir() / "dl.txt", outb = work_dir() / "dl.fcov";
    write_covariance_text(r, in.string());

    const Run a = run("convert --config \"" + cfg.string() + "\" \"" + in.string() + "\" \"" + out.string() + "\"");
    REQUIRE(a.code == 0);
    const Eigen::MatrixXcd back = read_covariance(out.string());
    CHECK((back - r).norm() <= 1e-8 * r.norm());

    const Run b = run("convert --binary --method alg1 --config \"" + cfg.string() + "\" \"" + in.string() + "\" \"" +
                      outb.string() + "\"");
    REQUIRE(b.code == 0);
    CHECK(read_covariance(outb.string()) == back);

    // metrics on the pair
    const Run m = run("metrics \"" + in.string() + "\" \"" + out.string() + "\"");
    REQUIRE(m.code == 0);
    CHECK(m.out.rfind("frobenius_se,grassmann_se,grassmann_rank,tie\n", 0) == 0);
    const std::string row = m.out.substr(m.out.find('\n') + 1);
    CHECK(std::stod(row.substr(0, row.find(','))) <= 1e-16);

    CHECK(run("convert --config \"" + cfg.string() + "\" \"" + (work_dir() / "none.txt").string() + "\" x").code == 1);
}

TEST_CASE("non-finite results exit with code 3")
{
    const fs::path cfg = write_config("overflow.cfg", kQuick);
    const UpaGeometry g = test::default_geometry();
    const auto grid = test::make_grid(40, 20);
    std::mt19937_64 rng(4);
    Eigen::MatrixXcd r = covariance_from_aps(test::random_aps(grid, rng), g, 1.8e9, *grid);
    r *= 1.7e308 / r.cwiseAbs().maxCoeff();
    const fs::path in = work_dir() / "huge.txt";
    write_covariance_text(r, in.string());
    const Run a = run("convert --config \"" + cfg.string() + "\" \"" + in.string() + "\" \"" +
                      (work_dir() / "huge_out.txt").string() + "\"");
    CHECK(a.code == 3);
    CHECK(a.err.find("non-finite") != std::string::npos);
}

TEST_CASE("simulate is reproducible")
{
    const fs::path cfg = write_config("sim.cfg", kQuick);
    const std::string base = "simulate --config \"" + cfg.string() + "\" --trials 2 --seed 7 ";
    const fs::path a = work_dir() / "sim_a", b = work_dir() / "sim_b", c = work_dir() / "sim_c";
    REQUIRE(run(base + "--out \"" + a.string() + "\"", "FDDCOV_THREADS=1").code == 0);
    REQUIRE(run(base + "--out \"" + b.string() + "\"", "FDDCOV_THREADS=1").code == 0);
    REQUIRE(run(base + "--out \"" + c.string() + "\"", "FDDCOV_THREADS=4").code == 0);
    std::size_t files = 0;
    for (const auto &e : fs::directory_iterator(a))
    {
        ++files;
        const auto name = e.path().filename();
        CHECK_MESSAGE(slurp(e.path()) == slurp(b / name), name.string());
        CHECK_MESSAGE(slurp(e.path()) == slurp(c / name), name.string());
    }
    CHECK(files == 1 + 5 * 2 + 1);

    const Run w = run(base + "--wideband --method alg1 --out \"" + (work_dir() / "sim_w").string() + "\"");
    CHECK(w.code == 0);
    CHECK(fs::exists(work_dir() / "sim_w" / "cdf_alg1_grassmann.csv"));
    CHECK_FALSE(fs::exists(work_dir() / "sim_w" / "cdf_alg2_grassmann.csv"));
}

TEST_CASE("cached operator gives the in-memory records")
{
    const fs::path ops = work_dir() / "ops";
    const Run k = run("kernel build --grid 40x20 --out \"" + ops.string() + "\"");
    REQUIRE(k.code == 0);
    CHECK(k.out.find("structured 570") != std::string::npos);
    CHECK(k.out.find("full 8192") != std::string::npos);
    const fs::path op = ops / "operator.fcnv";
    REQUIRE(fs::exists(op));
    CHECK(slurp(op).rfind("FCNV1", 0) == 0);

    const fs::path with = write_config("cached.cfg", std::string(kQuick) + "operator_cache = " + op.string() + "\n");
    const fs::path without = write_config("memory.cfg", kQuick);
    const fs::path a = work_dir() / "cached_run", b = work_dir() / "memory_run";
    REQUIRE(run("simulate --config \"" + with.string() + "\" --trials 2 --seed 3 --out \"" + a.string() + "\"").code == 0);
    REQUIRE(run("simulate --config \"" + without.string() + "\" --trials 2 --seed 3 --out \"" + b.string() + "\"").code == 0);
    CHECK(slurp(a / "trials.csv") == slurp(b / "trials.csv"));
    CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));

    // a cache from another grid is refused
    const Run bad = run("simulate --config \"" + with.string() + "\" --grid 30x15 --trials 1 --out \"" +
                        (work_dir() / "x").string() + "\"");
    CHECK(bad.code != 0);
}

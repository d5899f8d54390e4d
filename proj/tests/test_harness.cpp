// SPDX-License-Identifier: Apache-2.0
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
#include "simrp/harness.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

using namespace simrp;

namespace
{
    std::string csv_of(const experiment_spec &spec)
    {
        std::ostringstream out;
        write_csv(out, spec, run_experiment(spec));
        return out.str();
    }

    std::size_t count_lines(const std::string &s)
    {
        return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
    }
}

TEST_CASE("empty configuration gives the reference defaults")
{
    const auto spec = parse_config("");
    const auto &sc = spec.scenario;
    CHECK(sc.m_t == 8);
    CHECK(sc.m_r == 8);
    CHECK(sc.n_rf == 3);
    CHECK(sc.ris_rows == 8);
    CHECK(sc.ris_cols == 8);
    CHECK(sc.wavelength == 0.125);
    CHECK(sc.d_brbt() == doctest::Approx(0.375));
    CHECK(sc.d_ra() == doctest::Approx(0.0625));
    CHECK(sc.ul_users == 3);
    CHECK(sc.dl_users == 3);
    CHECK(sc.user_dist_min == 100.0);
    CHECK(sc.user_dist_max == 140.0);
    CHECK(sc.bs_power_dbm == 30.0);
    CHECK(sc.ul_power_dbm == 10.0);
    CHECK(sc.noise_dbm == -96.0);
    CHECK(sc.enob == 12);
    CHECK_FALSE(sc.ris_bits.has_value());
    CHECK(sc.sigma2 == 0.0);
    CHECK_FALSE(sc.user_interference);
    const auto &os = spec.optimizer;
    CHECK(os.eps1 == 1e-5);
    CHECK(os.eps2 == 1e-5);
    CHECK(os.eps3 == 1e-5);
    CHECK(os.omega1 == 0.5);
    CHECK(os.xi == 0.6);
    CHECK(os.max_alternations == 50);
    CHECK(spec.trials == 1);
    CHECK(spec.sweep == sweep_axis::none);
    CHECK(spec.modes.size() == 3);
    CHECK_FALSE(spec.strict);
}

TEST_CASE("parsing values, comments and errors")
{
    const auto spec = parse_config("# comment\n  enob = inf  # trailing\nris_bits=3\nsweep = sigma2\n"
                                   "sweep_values = 0, 0.01,0.1\nmodes = simrp, rafdd\nstrict = yes\n");
    CHECK_FALSE(spec.scenario.enob.has_value());
    CHECK(spec.scenario.ris_bits == 3);
    CHECK(spec.sweep == sweep_axis::sigma2);
    REQUIRE(spec.sweep_values.size() == 3);
    CHECK(spec.sweep_values[1] == 0.01);
    CHECK(spec.modes.size() == 2);
    CHECK(spec.strict);
    CHECK(spec.at_point(2).sigma2 == 0.1);

    CHECK_THROWS_AS(parse_config("n_rf = 9\n"), config_error);
    try
    {
        parse_config("foo = 1\nm_t = 8\nbar = 2\n");
        FAIL("expected a config error");
    }
    catch (const config_error &e)
    {
        CHECK(std::string(e.what()).find("unknown keys: foo, bar") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("m_t = eight\n"), config_error);
    CHECK_THROWS_AS(parse_config("m_t = 8.5\n"), config_error);
    CHECK_THROWS_AS(parse_config("strict = maybe\n"), config_error);
    CHECK_THROWS_AS(parse_config("m_t 8\n"), config_error);
    CHECK_THROWS_AS(parse_config("m_t = 8\nm_t = 8\n"), config_error);
    CHECK_THROWS_AS(parse_config("modes = simrp, tdd\n"), config_error);
    CHECK_THROWS_AS(parse_config("sweep = enob\n"), config_error); // no values
    CHECK_THROWS_AS(parse_config("sweep = enob\nsweep_values = 0\n"), config_error);
    CHECK_THROWS_AS(parse_config("sweep = ris_bits\nsweep_values = 2.5\n"), config_error);
    CHECK_THROWS_AS(parse_config("trials = 0\n"), config_error);
    CHECK_THROWS_AS(parse_config("xi = 1.5\n"), config_error);
    CHECK_THROWS_AS(parse_config("sweep = sigma2\nsweep_values = inf\n"), config_error);
}

TEST_CASE("single settings override parsed values")
{
    auto spec = parse_config("trials = 5\nenob = 10\n");
    apply_setting(spec, "trials", "7");
    apply_setting(spec, "enob", "inf");
    apply_setting(spec, "modes", "rafdd");
    CHECK(spec.trials == 7);
    CHECK_FALSE(spec.scenario.enob.has_value());
    REQUIRE(spec.modes.size() == 1);
    CHECK(spec.modes[0] == duplex_mode::rafdd);
    CHECK_THROWS_AS(apply_setting(spec, "nope", "1"), config_error);
    CHECK_THROWS_AS(apply_setting(spec, "trials", "x"), config_error);
    apply_setting(spec, "n_rf", "9"); // accepted here, rejected by validate
    CHECK_THROWS_AS(spec.validate(), config_error);
}

TEST_CASE("serialisation is canonical")
{
    const std::string text = "ris_bits = 2\nsweep = enob\nsweep_values = 8, 10, inf\nseed = 42\nwavelength = 0.1\n"
                             "modes = rafdd\ntrace_dir = /tmp/x\n";
    const auto once = serialize_config(parse_config(text));
    const auto twice = serialize_config(parse_config(once));
    CHECK(once == twice);
    CHECK(serialize_config(parse_config("")) == serialize_config(experiment_spec{}));
    const auto spec = parse_config(once);
    CHECK(spec.seed == 42);
    CHECK(spec.scenario.wavelength == 0.1);
    CHECK(std::isinf(spec.sweep_values[2]));
    CHECK(spec.trace_dir == "/tmp/x");
}

TEST_CASE("statistics and number formatting")
{
    const auto [mean, half] = mean_ci95({1.0, 2.0, 3.0, 4.0});
    CHECK(mean == 2.5);
    // t_{0.975, 3} = 3.18244631, s = sqrt(5/3)
    CHECK(half == doctest::Approx(3.18244631 * std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-8));
    CHECK(std::isnan(mean_ci95({1.0}).second));
    CHECK(format_number(1.0 / 3.0) == "0.333333333");
    CHECK(format_number(1e-20) == "1e-20");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("experiment rows, determinism and shared optimisation")
{
    auto spec = parse_config("sweep = enob\nsweep_values = 8, 10, 12\ntrials = 2\nseed = 5\n");
    const auto res = run_experiment(spec);
    CHECK(res.rows.size() == 3u * 3u * 2u);
    CHECK(res.summary.size() == 9);
    // ideal IBFD ignores the ADCs; every enob point shares one optimisation per trial
    for (int t = 0; t < 2; ++t)
    {
        double first = -1.0;
        for (const auto &row : res.rows)
            if (row.trial == t && row.report.mode == duplex_mode::ideal_ibfd)
            {
                if (first < 0.0)
                    first = row.report.total;
                CHECK(row.report.total == first);
                CHECK(row.report.seed == 5u + static_cast<unsigned>(t));
            }
    }
    std::ostringstream out;
    write_csv(out, spec, res);
    const auto csv = out.str();
    CHECK(csv.rfind("# simrp-csv v1\nmode,seed,enob,ris_bits,sigma2,ul_sum,dl_sum,total\n", 0) == 0);
    CHECK(count_lines(csv) == 2 + 18);
    CHECK(csv.find("\nSIMRP,5,8,inf,0,") != std::string::npos);

    std::ostringstream sum;
    write_summary(sum, spec, res);
    CHECK(count_lines(sum.str()) == 2 + 9);

    auto single = parse_config("trials = 1\nseed = 3\n");
    CHECK(csv_of(single) == csv_of(single));
    auto threaded = parse_config("trials = 3\nseed = 3\nthreads = 3\n");
    auto serial = parse_config("trials = 3\nseed = 3\nthreads = 1\n");
    CHECK(csv_of(threaded) == csv_of(serial));
}

TEST_CASE("trace dump")
{
    const auto dir = std::filesystem::temp_directory_path() / "simrp_harness_traces";
    std::filesystem::remove_all(dir);
    auto spec = parse_config("trials = 2\nmodes = simrp\n");
    spec.trace_dir = dir.string();
    run_experiment(spec);
    CHECK(std::filesystem::exists(dir / "alternation_seed1_bitsinf_sigma20.csv"));
    CHECK(std::filesystem::exists(dir / "alternation_seed2_bitsinf_sigma20.csv"));
}

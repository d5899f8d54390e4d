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
#pragma once

#include "simrp/link_level.hpp"
#include "simrp/scenario.hpp"
#include "simrp/simrp.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace simrp
{
    // Invalid configuration text: unknown keys, unparsable values or violated
    // constraints. what() lists every problem found.
    class config_error : public std::invalid_argument
    {
    public:
        explicit config_error(std::vector<std::string> problems);
        const std::vector<std::string> &problems() const { return problems_; }

    private:
        std::vector<std::string> problems_;
    };

    enum class sweep_axis
    {
        none,
        enob,
        ris_bits,
        sigma2
    };

    std::string to_string(sweep_axis axis);

    struct experiment_spec
    {
        scenario_config scenario;
        optimizer_settings optimizer;
        sweep_axis sweep = sweep_axis::none;
        std::vector<double> sweep_values; // +inf encodes an unbounded enob / ris_bits
        int trials = 1;
        std::uint64_t seed = 1; // trial t uses seed + t
        std::vector<duplex_mode> modes{duplex_mode::simrp, duplex_mode::ideal_ibfd, duplex_mode::rafdd};
        std::string output = "results.csv";
        bool strict = false;
        std::string trace_dir; // empty: no traces
        int threads = 1;

        // Scenario of one sweep point (the swept field replaced).
        scenario_config at_point(std::size_t point) const;
        std::size_t points() const { return sweep == sweep_axis::none ? 1 : sweep_values.size(); }
        void validate() const; // throws config_error
    };

    // Flat "key = value" lines, '#' starts a comment. Omitted keys keep their
    // defaults. Throws config_error.
    experiment_spec parse_config(std::string_view text);
    // Sets one key as if it appeared in a config file, replacing any earlier
    // value. Does not re-validate the spec. Throws config_error.
    void apply_setting(experiment_spec &spec, std::string_view key, std::string_view value);

    // Canonical text form, every key in a fixed order; parse_config(serialize_config(s))
    // reproduces s.
    std::string serialize_config(const experiment_spec &spec);

    struct trial_row
    {
        std::size_t point = 0;
        int trial = 0;
        rate_report report;
        double suppression_db = 0.0;
        double residual_db = 0.0;
        bool stalled = false;
    };

    struct point_summary
    {
        std::size_t point = 0;
        duplex_mode mode = duplex_mode::simrp;
        int trials = 0;
        double mean_total = 0.0;
        double ci95_total = 0.0; // Student-t half-width, NaN for a single trial
        double mean_ul = 0.0;
        double mean_dl = 0.0;
        double median_suppression_db = 0.0;
        int stalls = 0;
    };

    struct experiment_result
    {
        std::vector<trial_row> rows; // (point, trial, mode) order
        std::vector<point_summary> summary;
        int stalls = 0;
    };

    // Runs every (sweep point, trial, mode). The RIS/PSN optimisation of a trial
    // is shared by all points that differ only in enob.
    experiment_result run_experiment(const experiment_spec &spec);

    // "# simrp-csv v1" then the header mode,seed,enob,ris_bits,sigma2,ul_sum,dl_sum,total.
    void write_csv(std::ostream &out, const experiment_spec &spec, const experiment_result &result);
    void write_summary(std::ostream &out, const experiment_spec &spec, const experiment_result &result);

    // Mean and 95% Student-t half-width.
    std::pair<double, double> mean_ci95(const std::vector<double> &values);

    // 9 significant digits, "inf" / "-inf" / "nan" for non-finite values.
    std::string format_number(double value);
}

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
#include "simrp/matrix_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace
{
    enum exit_code
    {
        ok = 0,
        io_error = 1,
        config_error = 2,
        stall = 3
    };

    std::string read_file(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot read " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Joint RIS / receive phase-shifter self-interference nulling: Monte-Carlo sum-rate sweeps"};

    std::string config_path;
    std::string output;
    std::string summary_path;
    std::string modes;
    std::string trace_dir;
    std::string dump_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<int> threads;
    bool strict = false;
    bool print_config = false;

    app.add_option("-c,--config", config_path, "key = value configuration file (omitted keys take defaults)");
    app.add_option("-o,--output", output, "CSV output path (overrides 'output')");
    app.add_option("--summary", summary_path, "also write the summary block to this file");
    app.add_option("--seed", seed, "base seed override; trial t uses seed + t");
    app.add_option("--trials", trials, "trials per sweep point override");
    app.add_option("--modes", modes, "comma-separated subset of SIMRP, IDEAL_IBFD, RAFDD");
    app.add_option("--trace-dir", trace_dir, "write one alternation trace per optimisation into this directory");
    app.add_option("--threads", threads, "worker threads for the trials");
    app.add_flag("--strict", strict, "exit with status 3 if any solver stalled");
    app.add_flag("--print-config", print_config, "print the canonical configuration and exit");
    app.add_option("--dump-channels", dump_dir, "write the self-interference matrices of the scenario into this directory and exit");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? ok : config_error;
    }

    simrp::experiment_spec spec;
    try
    {
        spec = simrp::parse_config(config_path.empty() ? std::string() : read_file(config_path));
        if (seed)
            simrp::apply_setting(spec, "seed", std::to_string(*seed));
        if (trials)
            simrp::apply_setting(spec, "trials", std::to_string(*trials));
        if (threads)
            simrp::apply_setting(spec, "threads", std::to_string(*threads));
        if (!modes.empty())
            simrp::apply_setting(spec, "modes", modes);
        if (!trace_dir.empty())
            simrp::apply_setting(spec, "trace_dir", trace_dir);
        if (!output.empty())
            simrp::apply_setting(spec, "output", output);
        if (strict)
            spec.strict = true;
        spec.validate();
    }
    catch (const simrp::config_error &e)
    {
        for (const auto &p : e.problems())
            std::cerr << "config error: " << p << '\n';
        return config_error;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return io_error;
    }

    if (print_config)
    {
        std::cout << simrp::serialize_config(spec);
        return ok;
    }

    try
    {
        if (!dump_dir.empty())
        {
            std::filesystem::create_directories(dump_dir);
            const auto channels = simrp::build_self_interference_channels(simrp::build_geometry(spec.scenario));
            simrp::dump_self_interference(channels, dump_dir);
            return ok;
        }

        const auto result = simrp::run_experiment(spec);
        std::ofstream csv(spec.output, std::ios::binary);
        if (!csv)
            throw std::runtime_error("cannot write " + spec.output);
        simrp::write_csv(csv, spec, result);
        csv.close();
        if (!csv)
            throw std::runtime_error("error writing " + spec.output);
        if (!summary_path.empty())
        {
            std::ofstream sum(summary_path, std::ios::binary);
            if (!sum)
                throw std::runtime_error("cannot write " + summary_path);
            simrp::write_summary(sum, spec, result);
        }
        simrp::write_summary(std::cout, spec, result);
        if (result.stalls > 0)
        {
            std::cerr << result.stalls << " optimisation(s) reported a solver stall\n";
            if (spec.strict)
                return stall;
        }
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return io_error;
    }
    return ok;
}

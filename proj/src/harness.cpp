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

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

namespace simrp
{
    namespace
    {
        std::string join(const std::vector<std::string> &parts, const char *sep)
        {
            std::string out;
            for (std::size_t i = 0; i < parts.size(); ++i)
            {
                if (i)
                    out += sep;
                out += parts[i];
            }
            return out;
        }

        std::string_view trim(std::string_view s)
        {
            const auto first = s.find_first_not_of(" \t\r");
            if (first == std::string_view::npos)
                return {};
            const auto last = s.find_last_not_of(" \t\r");
            return s.substr(first, last - first + 1);
        }

        std::string lower(std::string_view s)
        {
            std::string out(s);
            std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
            return out;
        }

        bool is_inf_token(std::string_view s)
        {
            const auto l = lower(s);
            return l == "inf" || l == "infinity" || l == "unbounded";
        }

        struct bad_value : std::invalid_argument
        {
            using std::invalid_argument::invalid_argument;
        };

        template <typename T> T parse_number(std::string_view s)
        {
            T value{};
            const auto *end = s.data() + s.size();
            const auto [ptr, ec] = std::from_chars(s.data(), end, value);
            if (ec != std::errc() || ptr != end || s.empty())
                throw bad_value("cannot parse '" + std::string(s) + "' as a number");
            return value;
        }

        double parse_real(std::string_view s)
        {
            if (is_inf_token(s))
                return std::numeric_limits<double>::infinity();
            const double v = parse_number<double>(s);
            if (!std::isfinite(v))
                throw bad_value("non-finite value '" + std::string(s) + "'");
            return v;
        }

        bool parse_bool(std::string_view s)
        {
            const auto l = lower(s);
            if (l == "true" || l == "1" || l == "yes" || l == "on")
                return true;
            if (l == "false" || l == "0" || l == "no" || l == "off")
                return false;
            throw bad_value("cannot parse '" + std::string(s) + "' as a boolean");
        }

        std::optional<int> parse_opt_int(std::string_view s)
        {
            if (is_inf_token(s))
                return std::nullopt;
            return parse_number<int>(s);
        }

        std::vector<std::string_view> split_list(std::string_view s)
        {
            std::vector<std::string_view> out;
            while (!s.empty())
            {
                const auto comma = s.find(',');
                const auto item = trim(s.substr(0, comma));
                if (!item.empty())
                    out.push_back(item);
                if (comma == std::string_view::npos)
                    break;
                s.remove_prefix(comma + 1);
            }
            return out;
        }

        std::string exact(double v)
        {
            if (std::isinf(v))
                return v > 0 ? "inf" : "-inf";
            // shortest text that parses back to the same double
            char buf[64];
            const auto end = std::to_chars(buf, buf + sizeof buf, v).ptr;
            return {buf, end};
        }

        std::string opt_int(const std::optional<int> &v) { return v ? std::to_string(*v) : "inf"; }
        const char *boolean(bool v) { return v ? "true" : "false"; }

        struct key_entry
        {
            const char *name;
            std::function<void(experiment_spec &, std::string_view)> set;
            std::function<std::string(const experiment_spec &)> get;
        };

#define SIMRP_INT(key, field)                                                                                         key_entry                                                                                                         {                                                                                                                     key, [](experiment_spec &s, std::string_view v) { s.field = parse_number<int>(v); },                                  [](const experiment_spec &s) { return std::to_string(s.field); }                                          }
#define SIMRP_REAL(key, field)                                                                                        key_entry                                                                                                         {                                                                                                                     key, [](experiment_spec &s, std::string_view v) { s.field = parse_real(v); },                                         [](const experiment_spec &s) { return exact(s.field); }                                                   }
#define SIMRP_BOOL(key, field)                                                                                        key_entry                                                                                                         {                                                                                                                     key, [](experiment_spec &s, std::string_view v) { s.field = parse_bool(v); },                                         [](const experiment_spec &s) { return std::string(boolean(s.field)); }                                    }
#define SIMRP_OPT_INT(key, field)                                                                                     key_entry                                                                                                         {                                                                                                                     key, [](experiment_spec &s, std::string_view v) { s.field = parse_opt_int(v); },                                      [](const experiment_spec &s) { return opt_int(s.field); }                                                 }

        const std::vector<key_entry> &key_table()
        {
            static const std::vector<key_entry> table{
                // arrays
                SIMRP_INT("m_t", scenario.m_t),
                SIMRP_INT("m_r", scenario.m_r),
                SIMRP_INT("n_rf", scenario.n_rf),
                SIMRP_INT("ris_rows", scenario.ris_rows),
                SIMRP_INT("ris_cols", scenario.ris_cols),
                SIMRP_REAL("wavelength", scenario.wavelength),
                SIMRP_REAL("d_brbt_lambda", scenario.d_brbt_lambda),
                SIMRP_REAL("d_ra_lambda", scenario.d_ra_lambda),
                // users
                SIMRP_INT("ul_users", scenario.ul_users),
                SIMRP_INT("dl_users", scenario.dl_users),
                SIMRP_REAL("user_dist_min", scenario.user_dist_min),
                SIMRP_REAL("user_dist_max", scenario.user_dist_max),
                SIMRP_REAL("user_azimuth_max_deg", scenario.user_azimuth_max_deg),
                SIMRP_INT("sv_paths", scenario.sv_paths),
                SIMRP_REAL("sv_scatter_db", scenario.sv_scatter_db),
                // powers and receiver
                SIMRP_REAL("bs_power_dbm", scenario.bs_power_dbm),
                SIMRP_REAL("ul_power_dbm", scenario.ul_power_dbm),
                SIMRP_REAL("noise_dbm", scenario.noise_dbm),
                SIMRP_OPT_INT("enob", scenario.enob),
                SIMRP_OPT_INT("ris_bits", scenario.ris_bits),
                SIMRP_REAL("sigma2", scenario.sigma2),
                SIMRP_BOOL("user_interference", scenario.user_interference),
                SIMRP_BOOL("digital_si_cancellation", scenario.digital_si_cancellation),
                // optimiser
                SIMRP_REAL("eps1", optimizer.eps1),
                SIMRP_REAL("eps2", optimizer.eps2),
                SIMRP_REAL("eps3", optimizer.eps3),
                SIMRP_REAL("omega1", optimizer.omega1),
                SIMRP_REAL("xi", optimizer.xi),
                SIMRP_INT("max_alternations", optimizer.max_alternations),
                SIMRP_INT("restarts", optimizer.restarts),
                SIMRP_INT("rcg_max_iters", optimizer.rcg.max_iters),
                SIMRP_REAL("armijo_c1", optimizer.rcg.armijo_c1),
                SIMRP_REAL("armijo_backtrack", optimizer.rcg.backtrack),
                SIMRP_INT("sqp_max_iters", optimizer.sqp.max_iters),
                // experiment
                key_entry{"sweep",
                          [](experiment_spec &s, std::string_view v) {
                              const auto l = lower(v);
                              if (l == "none")
                                  s.sweep = sweep_axis::none;
                              else if (l == "enob")
                                  s.sweep = sweep_axis::enob;
                              else if (l == "ris_bits")
                                  s.sweep = sweep_axis::ris_bits;
                              else if (l == "sigma2")
                                  s.sweep = sweep_axis::sigma2;
                              else
                                  throw bad_value("sweep must be one of none, enob, ris_bits, sigma2");
                          },
                          [](const experiment_spec &s) { return to_string(s.sweep); }},
                key_entry{"sweep_values",
                          [](experiment_spec &s, std::string_view v) {
                              s.sweep_values.clear();
                              for (auto item : split_list(v))
                                  s.sweep_values.push_back(parse_real(item));
                          },
                          [](const experiment_spec &s) {
                              std::vector<std::string> parts;
                              for (double v : s.sweep_values)
                                  parts.push_back(exact(v));
                              return join(parts, ", ");
                          }},
                SIMRP_INT("trials", trials),
                key_entry{"seed", [](experiment_spec &s, std::string_view v) { s.seed = parse_number<std::uint64_t>(v); },
                          [](const experiment_spec &s) { return std::to_string(s.seed); }},
                key_entry{"modes",
                          [](experiment_spec &s, std::string_view v) {
                              s.modes.clear();
                              for (auto item : split_list(v))
                              {
                                  try
                                  {
                                      s.modes.push_back(duplex_mode_from_string(item));
                                  }
                                  catch (const std::invalid_argument &e)
                                  {
                                      throw bad_value(e.what());
                                  }
                              }
                          },
                          [](const experiment_spec &s) {
                              std::vector<std::string> parts;
                              for (auto m : s.modes)
                                  parts.push_back(to_string(m));
                              return join(parts, ", ");
                          }},
                key_entry{"output", [](experiment_spec &s, std::string_view v) { s.output = std::string(v); },
                          [](const experiment_spec &s) { return s.output; }},
                SIMRP_BOOL("strict", strict),
                key_entry{"trace_dir", [](experiment_spec &s, std::string_view v) { s.trace_dir = std::string(v); },
                          [](const experiment_spec &s) { return s.trace_dir; }},
                SIMRP_INT("threads", threads),
            };
            return table;
        }

#undef SIMRP_INT
#undef SIMRP_REAL
#undef SIMRP_BOOL
#undef SIMRP_OPT_INT

        std::optional<int> as_opt_int(double v)
        {
            if (std::isinf(v))
                return std::nullopt;
            return static_cast<int>(v);
        }
    }

    config_error::config_error(std::vector<std::string> problems)
        : std::invalid_argument("invalid configuration: " + join(problems, "; ")), problems_(std::move(problems))
    {
    }

    std::string to_string(sweep_axis axis)
    {
        switch (axis)
        {
        case sweep_axis::none:
            return "none";
        case sweep_axis::enob:
            return "enob";
        case sweep_axis::ris_bits:
            return "ris_bits";
        case sweep_axis::sigma2:
            return "sigma2";
        }
        return "?";
    }

    scenario_config experiment_spec::at_point(std::size_t point) const
    {
        scenario_config s = scenario;
        if (sweep == sweep_axis::none)
            return s;
        const double v = sweep_values.at(point);
        switch (sweep)
        {
        case sweep_axis::enob:
            s.enob = as_opt_int(v);
            break;
        case sweep_axis::ris_bits:
            s.ris_bits = as_opt_int(v);
            break;
        case sweep_axis::sigma2:
            s.sigma2 = v;
            break;
        case sweep_axis::none:
            break;
        }
        return s;
    }

    void experiment_spec::validate() const
    {
        std::vector<std::string> problems;
        auto check = [&](auto &&fn) {
            try
            {
                fn();
            }
            catch (const std::invalid_argument &e)
            {
                problems.emplace_back(e.what());
            }
        };
        check([&] { scenario.validate(); });
        check([&] { optimizer.validate(); });
        if (trials < 1)
            problems.emplace_back("trials must be >= 1");
        if (threads < 1)
            problems.emplace_back("threads must be >= 1");
        if (modes.empty())
            problems.emplace_back("modes must name at least one duplex mode");
        if (sweep != sweep_axis::none)
        {
            if (sweep_values.empty())
                problems.emplace_back("sweep_values must be nonempty when sweep = " + to_string(sweep));
            for (double v : sweep_values)
            {
                if (sweep == sweep_axis::sigma2)
                {
                    if (!(v >= 0.0) || std::isinf(v))
                        problems.emplace_back("sigma2 sweep values must be finite and >= 0");
                }
                else if (!std::isinf(v) && (v < 1.0 || v != std::floor(v) || v > 30.0))
                    problems.emplace_back(to_string(sweep) + " sweep values must be integers in [1, 30] or inf");
            }
            for (std::size_t p = 0; p < sweep_values.size() && problems.empty(); ++p)
                check([&] { at_point(p).validate(); });
        }
        if (!problems.empty())
            throw config_error(std::move(problems));
    }

    experiment_spec parse_config(std::string_view text)
    {
        experiment_spec spec;
        std::vector<std::string> problems;
        std::vector<std::string> unknown;
        std::map<std::string, std::size_t> seen;
        const auto &table = key_table();

        std::size_t line_no = 0;
        while (!text.empty())
        {
            ++line_no;
            const auto nl = text.find('\n');
            std::string_view line = text.substr(0, nl);
            text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
            if (const auto hash = line.find('#'); hash != std::string_view::npos)
                line = line.substr(0, hash);
            line = trim(line);
            if (line.empty())
                continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
            {
                problems.push_back("line " + std::to_string(line_no) + ": expected 'key = value'");
                continue;
            }
            const std::string key = lower(trim(line.substr(0, eq)));
            const auto value = trim(line.substr(eq + 1));
            const auto it = std::find_if(table.begin(), table.end(), [&](const key_entry &e) { return key == e.name; });
            if (it == table.end())
            {
                unknown.push_back(key);
                continue;
            }
            if (const auto prev = seen.find(key); prev != seen.end())
                problems.push_back("line " + std::to_string(line_no) + ": duplicate key '" + key + "' (first on line " +
                                   std::to_string(prev->second) + ")");
            seen[key] = line_no;
            try
            {
                it->set(spec, value);
            }
            catch (const std::invalid_argument &e)
            {
                problems.push_back("line " + std::to_string(line_no) + ": " + key + ": " + e.what());
            }
        }
        if (!unknown.empty())
            problems.insert(problems.begin(), "unknown keys: " + join(unknown, ", "));
        if (!problems.empty())
            throw config_error(std::move(problems));
        spec.validate();
        return spec;
    }

    void apply_setting(experiment_spec &spec, std::string_view key, std::string_view value)
    {
        const auto &table = key_table();
        const std::string name = lower(trim(key));
        const auto it = std::find_if(table.begin(), table.end(), [&](const key_entry &e) { return name == e.name; });
        if (it == table.end())
            throw config_error({"unknown keys: " + name});
        try
        {
            it->set(spec, trim(value));
        }
        catch (const std::invalid_argument &e)
        {
            throw config_error({name + ": " + e.what()});
        }
    }

    std::string serialize_config(const experiment_spec &spec)
    {
        std::string out;
        for (const auto &e : key_table())
        {
            out += e.name;
            out += " = ";
            out += e.get(spec);
            out += '\n';
        }
        return out;
    }

    std::string format_number(double value)
    {
        if (std::isnan(value))
            return "nan";
        if (std::isinf(value))
            return value > 0 ? "inf" : "-inf";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.9g", value);
        return buf;
    }

    std::pair<double, double> mean_ci95(const std::vector<double> &values)
    {
        const auto n = values.size();
        if (n == 0)
            return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
        double mean = 0.0;
        for (double v : values)
            mean += v;
        mean /= static_cast<double>(n);
        if (n < 2)
            return {mean, std::numeric_limits<double>::quiet_NaN()};
        double ss = 0.0;
        for (double v : values)
            ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(n - 1));
        const boost::math::students_t dist(static_cast<double>(n - 1));
        const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
        return {mean, t * sd / std::sqrt(static_cast<double>(n))};
    }

    namespace
    {
        // Runs fn(0..count-1) on up to 'threads' workers; the first exception (by
        // index) is rethrown after all workers finish.
        void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)> &fn)
        {
            std::vector<std::exception_ptr> errors(count);
            std::atomic<std::size_t> next{0};
            auto worker = [&] {
                for (std::size_t i = next++; i < count; i = next++)
                {
                    try
                    {
                        fn(i);
                    }
                    catch (...)
                    {
                        errors[i] = std::current_exception();
                    }
                }
            };
            const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, threads)), count);
            std::vector<std::thread> pool;
            for (std::size_t t = 1; t < n; ++t)
                pool.emplace_back(worker);
            worker();
            for (auto &t : pool)
                t.join();
            for (auto &e : errors)
                if (e)
                    std::rethrow_exception(e);
        }

        struct opt_key
        {
            std::optional<int> ris_bits;
            double sigma2 = 0.0;
            bool operator==(const opt_key &o) const { return ris_bits == o.ris_bits && sigma2 == o.sigma2; }
        };

        std::string trace_name(std::uint64_t seed, const opt_key &key)
        {
            return "alternation_seed" + std::to_string(seed) + "_bits" + opt_int(key.ris_bits) + "_sigma2" +
                   format_number(key.sigma2) + ".csv";
        }
    }

    experiment_result run_experiment(const experiment_spec &spec)
    {
        spec.validate();
        const auto points = spec.points();
        const auto trials = static_cast<std::size_t>(spec.trials);
        const geometry geo = build_geometry(spec.scenario);

        std::vector<opt_key> keys;
        std::vector<std::size_t> point_key(points);
        for (std::size_t p = 0; p < points; ++p)
        {
            const auto sc = spec.at_point(p);
            const opt_key k{sc.ris_bits, sc.sigma2};
            auto it = std::find(keys.begin(), keys.end(), k);
            point_key[p] = static_cast<std::size_t>(it - keys.begin());
            if (it == keys.end())
                keys.push_back(k);
        }

        std::vector<channel_set> truth(trials);
        parallel_for(trials, spec.threads, [&](std::size_t t) {
            truth[t] = build_channels(geo, spec.scenario, spec.seed + t);
        });

        std::vector<simrp_result> optimized(keys.size() * trials);
        parallel_for(optimized.size(), spec.threads, [&](std::size_t job) {
            const auto k = job / trials;
            const auto t = job % trials;
            const std::uint64_t seed = spec.seed + t;
            const channel_set estimate = perturb_cascaded_channels(truth[t], keys[k].sigma2, seed);
            optimizer_settings os = spec.optimizer;
            os.seed = seed;
            os.ris_bits = keys[k].ris_bits;
            optimized[job] = alternate_optimize(estimate, spec.scenario.n_rf, os);
        });

        if (!spec.trace_dir.empty())
        {
            std::filesystem::create_directories(spec.trace_dir);
            for (std::size_t job = 0; job < optimized.size(); ++job)
            {
                const auto path = std::filesystem::path(spec.trace_dir) /
                                  trace_name(spec.seed + job % trials, keys[job / trials]);
                std::ofstream f(path);
                if (!f)
                    throw std::runtime_error("cannot write trace file " + path.string());
                write_alternation_trace(f, optimized[job]);
            }
        }

        experiment_result res;
        for (std::size_t p = 0; p < points; ++p)
        {
            const auto sc_point = spec.at_point(p);
            for (std::size_t t = 0; t < trials; ++t)
            {
                const auto &opt = optimized[point_key[p] * trials + t];
                for (auto mode : spec.modes)
                {
                    scenario_config sc = sc_point;
                    sc.mode = mode;
                    trial_row row;
                    row.point = p;
                    row.trial = static_cast<int>(t);
                    row.report = evaluate_sum_rate(truth[t], opt.d.d, opt.psn.f, sc, spec.seed + t);
                    // residual against the true channels (differs from the optimiser's under CSI error)
                    const double residual = residual_si_power(opt.psn.f, opt.d.d, truth[t]);
                    row.residual_db = residual > 0.0 ? 10.0 * std::log10(residual)
                                                     : -std::numeric_limits<double>::infinity();
                    row.suppression_db = residual > 0.0 ? 10.0 * std::log10(opt.initial_objective / residual)
                                                        : std::numeric_limits<double>::infinity();
                    row.stalled = opt.stalled();
                    res.rows.push_back(std::move(row));
                }
            }
        }
        for (const auto &opt : optimized)
            res.stalls += opt.stalled() ? 1 : 0;

        for (std::size_t p = 0; p < points; ++p)
        {
            for (auto mode : spec.modes)
            {
                std::vector<double> total, ul, dl, supp;
                point_summary s;
                s.point = p;
                s.mode = mode;
                for (const auto &row : res.rows)
                {
                    if (row.point != p || row.report.mode != mode)
                        continue;
                    total.push_back(row.report.total);
                    ul.push_back(row.report.ul_sum);
                    dl.push_back(row.report.dl_sum);
                    supp.push_back(row.suppression_db);
                    s.stalls += row.stalled ? 1 : 0;
                }
                s.trials = static_cast<int>(total.size());
                std::tie(s.mean_total, s.ci95_total) = mean_ci95(total);
                s.mean_ul = mean_ci95(ul).first;
                s.mean_dl = mean_ci95(dl).first;
                std::sort(supp.begin(), supp.end());
                const auto n = supp.size();
                s.median_suppression_db = n % 2 ? supp[n / 2] : 0.5 * (supp[n / 2 - 1] + supp[n / 2]);
                res.summary.push_back(s);
            }
        }
        return res;
    }

    namespace
    {
        std::string point_value(const experiment_spec &spec, std::size_t p)
        {
            if (spec.sweep == sweep_axis::none)
                return "-";
            return format_number(spec.sweep_values[p]);
        }
    }

    void write_csv(std::ostream &out, const experiment_spec &spec, const experiment_result &result)
    {
        out << "# simrp-csv v1\n";
        out << "mode,seed,enob,ris_bits,sigma2,ul_sum,dl_sum,total\n";
        for (const auto &row : result.rows)
        {
            const auto sc = spec.at_point(row.point);
            out << to_string(row.report.mode) << ',' << row.report.seed << ',' << opt_int(sc.enob) << ','
                << opt_int(sc.ris_bits) << ',' << format_number(sc.sigma2) << ',' << format_number(row.report.ul_sum)
                << ',' << format_number(row.report.dl_sum) << ',' << format_number(row.report.total) << '\n';
        }
    }

    void write_summary(std::ostream &out, const experiment_spec &spec, const experiment_result &result)
    {
        out << "# simrp-summary v1\n";
        out << "sweep,value,mode,trials,mean_total,ci95_total,mean_ul,mean_dl,median_suppression_db,stalls\n";
        for (const auto &s : result.summary)
            out << to_string(spec.sweep) << ',' << point_value(spec, s.point) << ',' << to_string(s.mode) << ','
                << s.trials << ',' << format_number(s.mean_total) << ',' << format_number(s.ci95_total) << ','
                << format_number(s.mean_ul) << ',' << format_number(s.mean_dl) << ','
                << format_number(s.median_suppression_db) << ',' << s.stalls << '\n';
    }
}

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
#include "simrp/simrp.hpp"

#include "simrp/rng.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace simrp
{
    void optimizer_settings::validate() const
    {
        if (!(eps1 > 0.0) || !(eps2 > 0.0) || !(eps3 > 0.0))
            throw std::invalid_argument("optimizer: eps1, eps2, eps3 must be > 0");
        if (!(xi > 0.0 && xi < 1.0))
            throw std::invalid_argument("optimizer: xi must lie in (0, 1)");
        if (!(omega1 > 0.0))
            throw std::invalid_argument("optimizer: omega1 must be > 0");
        if (ris_bits && *ris_bits < 1)
            throw std::invalid_argument("optimizer: ris_bits must be >= 1");
        if (max_alternations < 1)
            throw std::invalid_argument("optimizer: max_alternations must be >= 1");
        if (restarts < 1)
            throw std::invalid_argument("optimizer: restarts must be >= 1");
    }

    rcg_settings optimizer_settings::ris_stage() const
    {
        rcg_settings r = rcg;
        r.tolerance = eps1;
        return r;
    }

    sqp_settings optimizer_settings::psn_stage() const
    {
        sqp_settings s = sqp;
        s.tolerance = eps2;
        s.omega1 = omega1;
        s.xi = xi;
        s.rcg = rcg;
        s.rcg.tolerance = eps1;
        s.seed = seed;
        return s;
    }

    const char *to_string(stage s)
    {
        switch (s)
        {
        case stage::init:
            return "init";
        case stage::psn:
            return "psn";
        case stage::ris:
            return "ris";
        case stage::quantize:
            return "quantize";
        }
        return "?";
    }

    double simrp_result::suppression_db() const
    {
        if (residual <= 0.0)
            return std::numeric_limits<double>::infinity();
        return 10.0 * std::log10(initial_objective / residual);
    }

    std::vector<double> simrp_result::objectives() const
    {
        std::vector<double> out;
        out.reserve(trace.size());
        for (const auto &r : trace)
            out.push_back(r.objective);
        return out;
    }

    double residual_si_power(const CMatrix &psn, const CVector &d, const channel_set &channels)
    {
        if (psn.cols() != channels.rx_tx.rows())
            throw std::invalid_argument("residual_si_power: PSN width does not match M_r");
        return (psn * effective_channel(channels, d)).squaredNorm();
    }

    CVector quantize_phases(const CVector &d, int bits)
    {
        if (bits < 1 || bits > 30)
            throw std::invalid_argument("quantize_phases: bits must lie in [1, 30]");
        const long levels = 1L << bits;
        const double step = two_pi / static_cast<double>(levels);
        CVector out(d.size());
        for (Eigen::Index i = 0; i < d.size(); ++i)
        {
            double phase = std::fmod(std::arg(d(i)), two_pi);
            if (phase < 0.0)
                phase += two_pi;
            long lo = static_cast<long>(std::floor(phase / step));
            if (lo >= levels)
                lo = levels - 1;
            const double below = phase - lo * step;
            const double above = (lo + 1) * step - phase;
            // ties go to the lower index; wraparound maps 'levels' back to 0
            long k = above < below ? lo + 1 : lo;
            if (k == levels)
                k = 0;
            // upper neighbour index 0 after wrap is lower than lo, so a tie there prefers 0
            if (lo + 1 == levels && above == below)
                k = 0;
            out(i) = std::polar(1.0, k * step);
        }
        return out;
    }

    CVector random_ris(int m_ris, std::uint64_t seed, std::uint64_t index)
    {
        auto rng = make_stream(seed, stream_id::ris_init, index);
        RVector phase(m_ris);
        for (int i = 0; i < m_ris; ++i)
            phase(i) = uniform(rng, 0.0, two_pi);
        return unit_phasors(phase);
    }

    psn_matrix random_psn(int n_rf, int m_r, std::uint64_t seed, std::uint64_t index)
    {
        auto rng = make_stream(seed, stream_id::psn_init, index);
        RMatrix phase(n_rf, m_r);
        for (int i = 0; i < n_rf; ++i)
            for (int j = 0; j < m_r; ++j)
                phase(i, j) = uniform(rng, 0.0, two_pi);
        return psn_matrix::from_phases(phase);
    }

    simrp_result alternate_from(const channel_set &channels, int n_rf, const CVector &d0, const psn_matrix &f0,
                                const optimizer_settings &settings)
    {
        settings.validate();
        if (d0.size() != channels.m_ris() || f0.rows() != n_rf || f0.cols() != channels.m_r())
            throw std::invalid_argument("alternate_from: starting point does not match the channels");
        const rcg_settings ris_cfg = settings.ris_stage();
        const sqp_settings psn_cfg = settings.psn_stage();

        simrp_result res;
        res.d = {d0, settings.ris_bits};
        res.psn = f0.max_offdiag_gram() > psn_cfg.orth_tolerance(channels.m_r()) ? orthogonalize_rows(f0, psn_cfg) : f0;
        double current = residual_si_power(res.psn.f, d0, channels);
        res.initial_objective = current;
        res.trace.push_back({0, stage::init, current, true});

        for (int a = 1; a <= settings.max_alternations; ++a)
        {
            res.alternations = a;
            const double before = current;

            const CMatrix g_channel = effective_channel(channels, res.d.d);
            auto psn = optimize_psn(g_channel, res.psn, psn_cfg);
            const double psn_value = (psn.psn.f * g_channel).squaredNorm();
            const bool psn_ok = psn.feasible && psn_value <= current;
            for (const auto &row : psn.rows)
            {
                res.sqp_accepted += row.accepted;
                res.sqp_rejected += row.rejected;
            }
            res.psn_stalled = res.psn_stalled || psn.stalled;
            res.psn_infeasible = res.psn_infeasible || !psn.feasible;
            if (psn_ok)
            {
                res.psn = std::move(psn.psn);
                current = psn_value;
            }
            res.trace.push_back({a, stage::psn, current, psn_ok});

            const auto q = build_quadratic(res.psn.f, channels);
            const auto ris = rcg_minimize(q, res.d.d, ris_cfg);
            res.rcg_iterations += ris.iterations;
            res.rcg_failed = res.rcg_failed || ris.status == rcg_status::line_search_failed;
            res.d.d = ris.d;
            current = ris.value();
            res.trace.push_back({a, stage::ris, current, true});

            if (settings.ris_bits)
            {
                const CVector dq = quantize_phases(res.d.d, *settings.ris_bits);
                const double vq = objective(q, dq);
                const bool take = vq < current;
                if (take)
                {
                    res.d.d = dq;
                    current = vq;
                    ++res.quantized_accepted;
                }
                res.trace.push_back({a, stage::quantize, current, take});
            }

            if (current <= 0.0 || before - current < settings.eps3 * before)
            {
                res.converged = true;
                break;
            }
        }

        res.residual = residual_si_power(res.psn.f, res.d.d, channels);
        res.residual_db = res.residual > 0.0 ? 10.0 * std::log10(res.residual)
                                             : -std::numeric_limits<double>::infinity();
        return res;
    }

    simrp_result alternate_optimize(const channel_set &channels, int n_rf, const optimizer_settings &settings)
    {
        settings.validate();
        simrp_result best;
        double initial = 0.0;
        for (int r = 0; r < settings.restarts; ++r)
        {
            const auto index = static_cast<std::uint64_t>(r);
            auto res = alternate_from(channels, n_rf, random_ris(channels.m_ris(), settings.seed, index),
                                      random_psn(n_rf, channels.m_r(), settings.seed, index), settings);
            if (r == 0)
                initial = res.initial_objective;
            res.best_restart = r;
            if (r == 0 || res.residual < best.residual)
                best = std::move(res);
        }
        best.initial_objective = initial;
        return best;
    }

    void write_alternation_trace(std::ostream &out, const simrp_result &result)
    {
        out << "alternation,stage,objective,accepted\n";
        for (const auto &r : result.trace)
            out << r.alternation << ',' << to_string(r.kind) << ',' << r.objective << ',' << (r.accepted ? 1 : 0)
                << '\n';
    }
}

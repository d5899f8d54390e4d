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

#include "simrp/geometry.hpp"
#include "simrp/psn_sqp.hpp"
#include "simrp/ris_rcg.hpp"
#include "simrp/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace simrp
{
    struct optimizer_settings
    {
        double eps1 = 1e-5; // RIS stage, relative
        double eps2 = 1e-5; // PSN rows, relative
        double eps3 = 1e-5; // alternation, relative
        double omega1 = 0.5;
        double xi = 0.6;
        std::optional<int> ris_bits; // nullopt: continuous phases
        int max_alternations = 50;
        int restarts = 4; // independent random starts, best final objective wins
        std::uint64_t seed = 0;
        rcg_settings rcg;
        sqp_settings sqp;

        // Throws std::invalid_argument on the first violated constraint.
        void validate() const;
        // rcg / sqp with the shared tolerances and trust-region parameters applied.
        rcg_settings ris_stage() const;
        sqp_settings psn_stage() const;
    };

    enum class stage
    {
        init,
        psn,
        ris,
        quantize
    };

    const char *to_string(stage s);

    struct stage_record
    {
        int alternation = 0;
        stage kind = stage::init;
        double objective = 0.0;
        bool accepted = true; // psn / quantize candidates are gated
    };

    struct simrp_result
    {
        ris_phases d;
        psn_matrix psn;
        std::vector<stage_record> trace; // init, then one record per stage
        double initial_objective = 0.0;  // random start of restart 0
        double residual = 0.0;
        double residual_db = 0.0; // 10 log10(residual), -inf for exact zero
        int alternations = 0;
        int rcg_iterations = 0;
        int sqp_accepted = 0;
        int sqp_rejected = 0;
        int quantized_accepted = 0;
        int best_restart = 0;
        bool converged = false; // eps3 test met before max_alternations
        bool psn_stalled = false;
        bool psn_infeasible = false; // some PSN candidate missed the orthogonality tolerance
        bool rcg_failed = false;     // line search gave up in some RIS stage (informational)

        bool stalled() const { return psn_stalled || psn_infeasible; }
        double suppression_db() const;
        std::vector<double> objectives() const;
    };

    // ||F (rx_ris diag(d) ris_tx + rx_tx)||_F^2.
    double residual_si_power(const CMatrix &psn, const CVector &d, const channel_set &channels);

    // Nearest point of the 2^bits uniform phase grid (circular distance, ties to
    // the lower grid index).
    CVector quantize_phases(const CVector &d, int bits);

    // Random unit-modulus starting points.
    CVector random_ris(int m_ris, std::uint64_t seed, std::uint64_t index = 0);
    psn_matrix random_psn(int n_rf, int m_r, std::uint64_t seed, std::uint64_t index = 0);

    // Alternating PSN / RIS minimisation of the residual SI from the given start.
    simrp_result alternate_from(const channel_set &channels, int n_rf, const CVector &d0, const psn_matrix &f0,
                                const optimizer_settings &settings);

    // Seeded random starts (settings.restarts of them), best final objective kept.
    simrp_result alternate_optimize(const channel_set &channels, int n_rf, const optimizer_settings &settings);

    // "alternation,stage,objective,accepted" lines.
    void write_alternation_trace(std::ostream &out, const simrp_result &result);
}

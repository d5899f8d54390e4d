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
#include "simrp/scenario.hpp"
#include "simrp/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace simrp
{
    // Quantisation noise of an ADC fed with the given power:
    // interference - (6.02 enob - 4.35) dB. Unbounded enob gives -inf.
    double sqnr_model(double interference_power_dbm, std::optional<int> enob);

    // Linear noise-to-input ratio 10^(-(6.02 enob - 4.35)/10); 0 for an ideal ADC.
    double quantization_factor(std::optional<int> enob);

    struct waterfill_result
    {
        RVector power;
        double level = 0.0; // common value of 1/gain + power over active streams
    };

    // Maximises sum log2(1 + p_k gains_k) subject to sum p_k = total, p >= 0.
    // gains are per-unit-power SNRs. Throws std::invalid_argument if all are zero.
    waterfill_result waterfill(double total_power, const RVector &gains);

    // Zero-forcing precoder of a users x M_t channel, unit-norm columns. Throws
    // rank_deficient when h has no full row rank.
    CMatrix zf_precode(const CMatrix &h);

    // users x M_t rows dl_direct^T + dl_ris^T diag(d) ris_tx.
    CMatrix downlink_channel(const channel_set &channels, const CVector &d);
    // M_r x users columns ul_direct + rx_ris diag(d) ul_ris.
    CMatrix uplink_channel(const channel_set &channels, const CVector &d);

    struct rate_report
    {
        std::vector<double> ul_rates;
        std::vector<double> dl_rates;
        double ul_sum = 0.0;
        double dl_sum = 0.0;
        double total = 0.0;
        duplex_mode mode = duplex_mode::simrp;
        std::uint64_t seed = 0;

        double si_chain_dbm = 0.0;  // largest residual SI power at an RF chain input
        bool regularized = false;   // some MMSE covariance needed the thermal floor
    };

    // Rates in bit/s/Hz of one trial. 'channels' are the true channels; d and
    // psn are the configuration in use (RAFDD ignores them for SI). The downlink
    // uses ZF + water-filling over the composite channels; the uplink uses
    // per-chain additive quantisation noise and linear MMSE over the N_RF streams.
    rate_report evaluate_sum_rate(const channel_set &channels, const CVector &d, const CMatrix &psn,
                                  const scenario_config &scenario, std::uint64_t seed);
}

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

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

namespace simrp
{
    enum class duplex_mode
    {
        simrp,
        ideal_ibfd,
        rafdd
    };

    std::string to_string(duplex_mode mode);
    duplex_mode duplex_mode_from_string(std::string_view text); // throws std::invalid_argument

    inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
    inline double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }
    inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
    inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

    // Array layout, user placement, power budgets and receiver model of one
    // simulated deployment. Defaults reproduce the reference 8x8 setup.
    struct scenario_config
    {
        // arrays
        int m_t = 8;
        int m_r = 8;
        int n_rf = 3;
        int ris_rows = 8;
        int ris_cols = 8;
        double wavelength = 0.125;  // m
        double d_brbt_lambda = 3.0; // Tx/Rx array centre spacing, in wavelengths
        double d_ra_lambda = 0.5;   // RIS plane offset behind the antennas, in wavelengths

        // users
        int ul_users = 3;
        int dl_users = 3;
        double user_dist_min = 100.0; // m
        double user_dist_max = 140.0; // m
        double user_azimuth_max_deg = 60.0;
        int sv_paths = 3;
        double sv_scatter_db = -10.0; // power of each non-dominant path relative to the dominant one

        // powers
        double bs_power_dbm = 30.0;
        double ul_power_dbm = 10.0;
        double noise_dbm = -96.0;

        // receiver
        std::optional<int> enob = 12; // nullopt: ideal ADC
        std::optional<int> ris_bits;  // nullopt: continuous RIS phases
        double sigma2 = 0.0;          // cascaded-channel estimation error level
        duplex_mode mode = duplex_mode::simrp;
        bool user_interference = false;      // UL users interfere with DL users
        bool digital_si_cancellation = true; // residual SI is removed after the ADCs

        double d_brbt() const { return d_brbt_lambda * wavelength; }
        double d_ra() const { return d_ra_lambda * wavelength; }
        int m_ris() const { return ris_rows * ris_cols; }

        // Throws std::invalid_argument describing the first violated constraint.
        void validate() const;
    };
}

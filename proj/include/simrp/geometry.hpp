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

#include "simrp/rng.hpp"
#include "simrp/scenario.hpp"
#include "simrp/types.hpp"

#include <vector>

namespace simrp
{
    // Element positions of the Tx ULA, Rx ULA and RIS UPA.
    //
    // Coordinate frame: the antenna plane is y = 0, both ULAs run along x and
    // sit at z = +d_brbt/2 (Tx) and z = -d_brbt/2 (Rx). The RIS lies in the
    // parallel plane y = -d_ra, centred on the midpoint of the two arrays, with
    // columns along x and rows along z. RIS element (r, c) has index r*cols + c.
    // Users are in the horizontal plane z = 0, in front of the arrays (y > 0),
    // at an azimuth measured from the y axis.
    struct geometry
    {
        double wavelength = 0.0;
        double d_brbt = 0.0;
        double d_ra = 0.0;
        int ris_rows = 0;
        int ris_cols = 0;
        std::vector<Point3> tx;
        std::vector<Point3> rx;
        std::vector<Point3> ris;

        int m_t() const { return static_cast<int>(tx.size()); }
        int m_r() const { return static_cast<int>(rx.size()); }
        int m_ris() const { return static_cast<int>(ris.size()); }
    };

    struct channel_set
    {
        CMatrix rx_tx;  // M_r x M_t, Tx antennas -> Rx antennas
        CMatrix rx_ris; // M_r x M_ris, RIS -> Rx antennas
        CMatrix ris_tx; // M_ris x M_t, Tx antennas -> RIS

        // One entry per single-antenna user. Uplink vectors map the user to the Rx
        // antennas / RIS elements, downlink vectors map the Tx antennas / RIS
        // elements to the user (the composite DL row is dl_direct^T + dl_ris^T D ris_tx).
        std::vector<CVector> ul_direct;
        std::vector<CVector> ul_ris;
        std::vector<CVector> dl_direct;
        std::vector<CVector> dl_ris;
        std::vector<Point3> ul_positions;
        std::vector<Point3> dl_positions;

        int m_t() const { return static_cast<int>(rx_tx.cols()); }
        int m_r() const { return static_cast<int>(rx_tx.rows()); }
        int m_ris() const { return static_cast<int>(ris_tx.rows()); }
    };

    // LOS near-field gain sqrt(beta) * exp(-j k d) with
    // beta = 1/4 * (1/(kd)^2 - 1/(kd)^4 + 1/(kd)^6) for omnidirectional elements.
    cplx near_field_gain(const Point3 &a, const Point3 &b, double wavelength);

    geometry build_geometry(int m_t, int m_r, int ris_rows, int ris_cols, double wavelength, double d_brbt,
                            double d_ra);
    geometry build_geometry(const scenario_config &scenario);

    // Deterministic near-field SI matrices (user fields left empty).
    channel_set build_self_interference_channels(const geometry &geo);

    // Fills the user part of a channel set: Saleh-Valenzuela paths with
    // free-space loss, fully determined by the seed.
    void build_user_channels(const geometry &geo, const scenario_config &scenario, std::uint64_t seed,
                             channel_set &channels);

    // SI + user channels for one trial.
    channel_set build_channels(const geometry &geo, const scenario_config &scenario, std::uint64_t seed);

    // Planar-wave response exp(j k u.p_n) of the given elements to direction u.
    CVector steering_vector(const std::vector<Point3> &elements, const Point3 &direction, double wavelength);

    // Adds i.i.d. CN(0, ||H||_F^2 sigma2 / (rows^2 cols^2)) errors to rx_ris and
    // ris_tx; rx_tx and all user channels are unchanged. The normalized draws
    // depend only on the seed, so different sigma2 values scale the same error.
    channel_set perturb_cascaded_channels(const channel_set &channels, double sigma2, std::uint64_t seed);
}

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
#include "simrp/link_level.hpp"

#include "simrp/psn_sqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace simrp
{
    std::string to_string(duplex_mode mode)
    {
        switch (mode)
        {
        case duplex_mode::simrp:
            return "SIMRP";
        case duplex_mode::ideal_ibfd:
            return "IDEAL_IBFD";
        case duplex_mode::rafdd:
            return "RAFDD";
        }
        return "?";
    }

    duplex_mode duplex_mode_from_string(std::string_view text)
    {
        std::string up(text);
        std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
        std::replace(up.begin(), up.end(), '-', '_');
        if (up == "SIMRP")
            return duplex_mode::simrp;
        if (up == "IDEAL_IBFD" || up == "IDEAL")
            return duplex_mode::ideal_ibfd;
        if (up == "RAFDD")
            return duplex_mode::rafdd;
        throw std::invalid_argument("unknown duplex mode '" + std::string(text) + "'");
    }

    void scenario_config::validate() const
    {
        auto fail = [](const std::string &msg) { throw std::invalid_argument("scenario: " + msg); };
        if (m_t < 1 || m_r < 1)
            fail("m_t and m_r must be >= 1");
        if (n_rf < 1 || n_rf > m_r)
            fail("n_rf must satisfy 1 <= n_rf <= m_r (n_rf = " + std::to_string(n_rf) +
                 ", m_r = " + std::to_string(m_r) + ")");
        if (ris_rows < 1 || ris_cols < 1)
            fail("ris_rows and ris_cols must be >= 1");
        if (!(wavelength > 0.0) || !(d_brbt_lambda > 0.0) || !(d_ra_lambda > 0.0))
            fail("wavelength, d_brbt_lambda and d_ra_lambda must be > 0");
        if (ul_users < 1 || ul_users > n_rf)
            fail("ul_users must satisfy 1 <= ul_users <= n_rf");
        if (dl_users < 1 || dl_users > m_t)
            fail("dl_users must satisfy 1 <= dl_users <= m_t");
        if (!(user_dist_min > 0.0) || !(user_dist_max >= user_dist_min))
            fail("user distances must satisfy 0 < user_dist_min <= user_dist_max");
        if (!(user_azimuth_max_deg >= 0.0 && user_azimuth_max_deg <= 90.0))
            fail("user_azimuth_max_deg must lie in [0, 90]");
        if (sv_paths < 1)
            fail("sv_paths must be >= 1");
        if (!std::isfinite(sv_scatter_db) || !std::isfinite(bs_power_dbm) || !std::isfinite(ul_power_dbm) ||
            !std::isfinite(noise_dbm))
            fail("powers must be finite");
        if (enob && *enob < 1)
            fail("enob must be >= 1");
        if (ris_bits && *ris_bits < 1)
            fail("ris_bits must be >= 1");
        if (!(sigma2 >= 0.0))
            fail("sigma2 must be >= 0");
    }

    double sqnr_model(double interference_power_dbm, std::optional<int> enob)
    {
        if (!enob)
            return -std::numeric_limits<double>::infinity();
        return interference_power_dbm - (6.02 * *enob - 4.35);
    }

    double quantization_factor(std::optional<int> enob)
    {
        if (!enob)
            return 0.0;
        return std::pow(10.0, -(6.02 * *enob - 4.35) / 10.0);
    }

    waterfill_result waterfill(double total_power, const RVector &gains)
    {
        if (!(total_power > 0.0))
            throw std::invalid_argument("waterfill: total power must be > 0");
        if (gains.size() == 0 || (gains.array() < 0.0).any() || !gains.allFinite())
            throw std::invalid_argument("waterfill: gains must be finite and >= 0");
        if ((gains.array() == 0.0).all())
            throw std::invalid_argument("waterfill: all channel gains are zero");

        // activate streams from the strongest down; the level for the k strongest
        // is (P + sum 1/g) / k, valid while it exceeds the k-th inverse gain
        std::vector<Eigen::Index> order(static_cast<std::size_t>(gains.size()));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return gains(a) > gains(b); });
        double inv_sum = 0.0;
        double level = 0.0;
        std::size_t active = 0;
        for (std::size_t k = 0; k < order.size(); ++k)
        {
            const double g = gains(order[k]);
            if (g <= 0.0)
                break;
            const double candidate = (total_power + inv_sum + 1.0 / g) / static_cast<double>(k + 1);
            if (k > 0 && candidate <= 1.0 / g)
                break;
            inv_sum += 1.0 / g;
            level = candidate;
            active = k + 1;
        }
        waterfill_result out;
        out.level = level;
        out.power = RVector::Zero(gains.size());
        for (std::size_t k = 0; k < active; ++k)
            out.power(order[k]) = std::max(0.0, level - 1.0 / gains(order[k]));
        // remove the rounding drift from the budget
        const double sum = out.power.sum();
        if (sum > 0.0)
            out.power *= total_power / sum;
        return out;
    }

    CMatrix zf_precode(const CMatrix &h)
    {
        if (h.rows() < 1 || h.rows() > h.cols())
            throw rank_deficient("zf_precode: need 1 <= users <= M_t");
        const Eigen::JacobiSVD<CMatrix> svd(h);
        const auto &s = svd.singularValues();
        const double smax = s(0);
        if (!(smax > 0.0) || s(s.size() - 1) <= 1e-12 * smax)
            throw rank_deficient("zf_precode: user channel matrix is rank deficient; use a regularized "
                                 "(MMSE) precoder or drop a user");
        const CMatrix gram = h * h.adjoint();
        CMatrix w = h.adjoint() * gram.llt().solve(CMatrix::Identity(h.rows(), h.rows()));
        for (Eigen::Index k = 0; k < w.cols(); ++k)
            w.col(k).normalize();
        return w;
    }

    CMatrix downlink_channel(const channel_set &channels, const CVector &d)
    {
        const auto users = static_cast<Eigen::Index>(channels.dl_direct.size());
        CMatrix h(users, channels.m_t());
        for (Eigen::Index k = 0; k < users; ++k)
        {
            const auto uk = static_cast<std::size_t>(k);
            h.row(k) = channels.dl_direct[uk].transpose() +
                       channels.dl_ris[uk].cwiseProduct(d).transpose() * channels.ris_tx;
        }
        return h;
    }

    CMatrix uplink_channel(const channel_set &channels, const CVector &d)
    {
        const auto users = static_cast<Eigen::Index>(channels.ul_direct.size());
        CMatrix h(channels.m_r(), users);
        for (Eigen::Index u = 0; u < users; ++u)
        {
            const auto uu = static_cast<std::size_t>(u);
            h.col(u) = channels.ul_direct[uu] + channels.rx_ris * d.cwiseProduct(channels.ul_ris[uu]);
        }
        return h;
    }

    namespace
    {
        double free_space_gain(const Point3 &a, const Point3 &b, double wavelength)
        {
            const double dist = (a - b).norm();
            if (dist == 0.0)
                throw degenerate_geometry("free_space_gain: users coincide");
            const double amp = wavelength / (4.0 * pi * dist);
            return amp * amp;
        }

        struct downlink_eval
        {
            std::vector<double> rates;
            CMatrix tx_cov;
        };

        downlink_eval evaluate_downlink(const channel_set &channels, const CVector &d, const scenario_config &sc)
        {
            const double noise = dbm_to_watt(sc.noise_dbm);
            const double p_ul = dbm_to_watt(sc.ul_power_dbm);
            const CMatrix h = downlink_channel(channels, d);
            const CMatrix w = zf_precode(h);
            const CMatrix hw = h * w;
            const auto users = h.rows();

            RVector interference = RVector::Constant(users, noise);
            if (sc.user_interference)
                for (Eigen::Index k = 0; k < users; ++k)
                    for (const auto &pos : channels.ul_positions)
                        interference(k) += p_ul * free_space_gain(pos, channels.dl_positions[static_cast<std::size_t>(k)],
                                                                  sc.wavelength);

            RVector gains(users);
            for (Eigen::Index k = 0; k < users; ++k)
                gains(k) = std::norm(hw(k, k)) / interference(k);
            const auto wf = waterfill(dbm_to_watt(sc.bs_power_dbm), gains);

            downlink_eval out;
            for (Eigen::Index k = 0; k < users; ++k)
                out.rates.push_back(std::log2(1.0 + wf.power(k) * gains(k)));
            out.tx_cov = w * wf.power.cast<cplx>().asDiagonal() * w.adjoint();
            return out;
        }

        // Linear MMSE per UL user after the PSN. si_cov is the residual SI
        // covariance at the chain inputs (zero for SI-free modes).
        std::vector<double> evaluate_uplink(const channel_set &channels, const CVector &d, const CMatrix &psn,
                                            const CMatrix &si_cov, double kappa, bool si_in_band,
                                            const scenario_config &sc, bool &regularized)
        {
            const double noise = dbm_to_watt(sc.noise_dbm);
            const double p_ul = dbm_to_watt(sc.ul_power_dbm);
            const CMatrix heff = psn * uplink_channel(channels, d);
            const auto n_rf = psn.rows();
            const auto users = heff.cols();

            const CMatrix signal_cov = p_ul * heff * heff.adjoint();
            const CMatrix thermal_cov = noise * psn * psn.adjoint();
            const CMatrix input_cov = signal_cov + thermal_cov + si_cov;
            CMatrix base = thermal_cov;
            for (Eigen::Index i = 0; i < n_rf; ++i)
                base(i, i) += kappa * input_cov(i, i).real();
            if (si_in_band)
                base += si_cov;

            std::vector<double> rates;
            for (Eigen::Index u = 0; u < users; ++u)
            {
                CMatrix r = base + signal_cov - p_ul * heff.col(u) * heff.col(u).adjoint();
                Eigen::LDLT<CMatrix> ldlt(r);
                if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                    ldlt.vectorD().real().minCoeff() <= 1e-14 * ldlt.vectorD().real().maxCoeff())
                {
                    r += noise * CMatrix::Identity(n_rf, n_rf);
                    ldlt.compute(r);
                    regularized = true;
                }
                const double sinr = p_ul * heff.col(u).dot(ldlt.solve(heff.col(u))).real();
                rates.push_back(std::log2(1.0 + std::max(0.0, sinr)));
            }
            return rates;
        }

        void finish(rate_report &rep)
        {
            rep.ul_sum = std::accumulate(rep.ul_rates.begin(), rep.ul_rates.end(), 0.0);
            rep.dl_sum = std::accumulate(rep.dl_rates.begin(), rep.dl_rates.end(), 0.0);
            rep.total = rep.ul_sum + rep.dl_sum;
        }
    }

    rate_report evaluate_sum_rate(const channel_set &channels, const CVector &d, const CMatrix &psn,
                                  const scenario_config &scenario, std::uint64_t seed)
    {
        if (d.size() != channels.m_ris() || psn.cols() != channels.m_r())
            throw std::invalid_argument("evaluate_sum_rate: configuration does not match the channels");
        if (channels.ul_direct.empty() || channels.dl_direct.empty())
            throw std::invalid_argument("evaluate_sum_rate: channel set has no users");

        rate_report rep;
        rep.mode = scenario.mode;
        rep.seed = seed;
        rep.si_chain_dbm = -std::numeric_limits<double>::infinity();

        // separate UL/DL bands in RAFDD: no user-to-user interference either
        scenario_config dl_scenario = scenario;
        if (scenario.mode == duplex_mode::rafdd)
            dl_scenario.user_interference = false;
        const auto dl = evaluate_downlink(channels, d, dl_scenario);
        rep.dl_rates = dl.rates;

        const auto n_rf = psn.rows();
        CMatrix si_cov = CMatrix::Zero(n_rf, n_rf);
        double kappa = quantization_factor(scenario.enob);
        if (scenario.mode == duplex_mode::simrp)
        {
            const CMatrix si = psn * effective_channel(channels, d);
            si_cov = si * dl.tx_cov * si.adjoint();
            double worst = 0.0;
            for (Eigen::Index i = 0; i < n_rf; ++i)
                worst = std::max(worst, si_cov(i, i).real());
            rep.si_chain_dbm = worst > 0.0 ? watt_to_dbm(worst) : -std::numeric_limits<double>::infinity();
        }
        else if (scenario.mode == duplex_mode::ideal_ibfd)
        {
            kappa = 0.0;
        }

        const bool si_in_band = scenario.mode == duplex_mode::simrp && !scenario.digital_si_cancellation;
        rep.ul_rates = evaluate_uplink(channels, d, psn, si_cov, kappa, si_in_band, scenario, rep.regularized);

        if (scenario.mode == duplex_mode::rafdd)
        {
            for (auto &r : rep.ul_rates)
                r *= 0.5;
            for (auto &r : rep.dl_rates)
                r *= 0.5;
        }
        finish(rep);
        return rep;
    }
}

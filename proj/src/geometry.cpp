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
#include "simrp/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace simrp
{
    cplx near_field_gain(const Point3 &a, const Point3 &b, double wavelength)
    {
        if (!(wavelength > 0.0))
            throw std::invalid_argument("near_field_gain: wavelength must be positive");
        const double d = (a - b).norm();
        if (!(d > 0.0))
            throw degenerate_geometry("near_field_gain: coincident points");
        const double kd = two_pi / wavelength * d;
        const double kd2 = kd * kd;
        const double beta = 0.25 * (1.0 / kd2 - 1.0 / (kd2 * kd2) + 1.0 / (kd2 * kd2 * kd2));
        return std::sqrt(beta) * std::polar(1.0, -kd);
    }

    geometry build_geometry(int m_t, int m_r, int ris_rows, int ris_cols, double wavelength, double d_brbt,
                            double d_ra)
    {
        if (m_t < 1 || m_r < 1 || ris_rows < 1 || ris_cols < 1)
            throw std::invalid_argument("build_geometry: element counts must be >= 1");
        if (!(wavelength > 0.0) || !(d_brbt > 0.0) || !(d_ra > 0.0))
            throw std::invalid_argument("build_geometry: wavelength and spacings must be positive");

        geometry geo;
        geo.wavelength = wavelength;
        geo.d_brbt = d_brbt;
        geo.d_ra = d_ra;
        geo.ris_rows = ris_rows;
        geo.ris_cols = ris_cols;

        const double step = wavelength / 2.0;
        auto centred = [step](int n, int count) { return (n - (count - 1) / 2.0) * step; };

        for (int n = 0; n < m_t; ++n)
            geo.tx.emplace_back(centred(n, m_t), 0.0, d_brbt / 2.0);
        for (int n = 0; n < m_r; ++n)
            geo.rx.emplace_back(centred(n, m_r), 0.0, -d_brbt / 2.0);
        for (int r = 0; r < ris_rows; ++r)
            for (int c = 0; c < ris_cols; ++c)
                geo.ris.emplace_back(centred(c, ris_cols), -d_ra, centred(r, ris_rows));
        return geo;
    }

    geometry build_geometry(const scenario_config &scenario)
    {
        return build_geometry(scenario.m_t, scenario.m_r, scenario.ris_rows, scenario.ris_cols, scenario.wavelength,
                              scenario.d_brbt(), scenario.d_ra());
    }

    namespace
    {
        CMatrix pairwise_gains(const std::vector<Point3> &to, const std::vector<Point3> &from, double wavelength)
        {
            CMatrix h(static_cast<Eigen::Index>(to.size()), static_cast<Eigen::Index>(from.size()));
            for (std::size_t i = 0; i < to.size(); ++i)
                for (std::size_t j = 0; j < from.size(); ++j)
                    h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        near_field_gain(to[i], from[j], wavelength);
            return h;
        }

        struct path
        {
            Point3 direction;
            cplx gain;
        };

        struct user_draw
        {
            Point3 position;
            std::vector<path> paths;
            double amplitude = 0.0; // free-space amplitude lambda / (4 pi d)
        };

        Point3 azimuth_direction(double azimuth)
        {
            return {std::sin(azimuth), std::cos(azimuth), 0.0};
        }

        user_draw draw_user(rng_engine &rng, const scenario_config &s)
        {
            user_draw u;
            const double dist = s.user_dist_max > s.user_dist_min ? uniform(rng, s.user_dist_min, s.user_dist_max)
                                                                  : s.user_dist_min;
            const double az_max = s.user_azimuth_max_deg * pi / 180.0;
            const double az = az_max > 0.0 ? uniform(rng, -az_max, az_max) : 0.0;
            u.position = dist * azimuth_direction(az);
            u.amplitude = s.wavelength / (4.0 * pi * dist);

            const double scatter = db_to_linear(s.sv_scatter_db);
            const double dominant = 1.0 / (1.0 + (s.sv_paths - 1) * scatter);
            u.paths.push_back({azimuth_direction(az), std::sqrt(dominant) * std::polar(1.0, uniform(rng, 0.0, two_pi))});
            for (int l = 1; l < s.sv_paths; ++l)
            {
                const double theta = uniform(rng, -pi / 2.0, pi / 2.0);
                u.paths.push_back({azimuth_direction(theta), complex_gaussian(rng, dominant * scatter)});
            }
            return u;
        }

        CVector array_response(const user_draw &u, const std::vector<Point3> &elements, double wavelength)
        {
            CVector h = CVector::Zero(static_cast<Eigen::Index>(elements.size()));
            for (const auto &p : u.paths)
                h += p.gain * steering_vector(elements, p.direction, wavelength);
            return u.amplitude * h;
        }
    }

    CVector steering_vector(const std::vector<Point3> &elements, const Point3 &direction, double wavelength)
    {
        const double k = two_pi / wavelength;
        CVector a(static_cast<Eigen::Index>(elements.size()));
        for (std::size_t n = 0; n < elements.size(); ++n)
            a(static_cast<Eigen::Index>(n)) = std::polar(1.0, k * direction.dot(elements[n]));
        return a;
    }

    channel_set build_self_interference_channels(const geometry &geo)
    {
        channel_set ch;
        ch.rx_tx = pairwise_gains(geo.rx, geo.tx, geo.wavelength);
        ch.rx_ris = pairwise_gains(geo.rx, geo.ris, geo.wavelength);
        ch.ris_tx = pairwise_gains(geo.ris, geo.tx, geo.wavelength);
        return ch;
    }

    void build_user_channels(const geometry &geo, const scenario_config &scenario, std::uint64_t seed,
                             channel_set &channels)
    {
        if (scenario.user_dist_min <= 0.0 || scenario.user_dist_max < scenario.user_dist_min)
            throw std::invalid_argument("build_user_channels: invalid user distance annulus");
        if (scenario.sv_paths < 1)
            throw std::invalid_argument("build_user_channels: at least one path per user is required");

        channels.ul_direct.clear();
        channels.ul_ris.clear();
        channels.dl_direct.clear();
        channels.dl_ris.clear();
        channels.ul_positions.clear();
        channels.dl_positions.clear();

        auto ul_rng = make_stream(seed, stream_id::ul_users);
        for (int u = 0; u < scenario.ul_users; ++u)
        {
            const auto draw = draw_user(ul_rng, scenario);
            channels.ul_direct.push_back(array_response(draw, geo.rx, geo.wavelength));
            channels.ul_ris.push_back(array_response(draw, geo.ris, geo.wavelength));
            channels.ul_positions.push_back(draw.position);
        }
        auto dl_rng = make_stream(seed, stream_id::dl_users);
        for (int u = 0; u < scenario.dl_users; ++u)
        {
            const auto draw = draw_user(dl_rng, scenario);
            channels.dl_direct.push_back(array_response(draw, geo.tx, geo.wavelength));
            channels.dl_ris.push_back(array_response(draw, geo.ris, geo.wavelength));
            channels.dl_positions.push_back(draw.position);
        }
    }

    channel_set build_channels(const geometry &geo, const scenario_config &scenario, std::uint64_t seed)
    {
        auto ch = build_self_interference_channels(geo);
        build_user_channels(geo, scenario, seed, ch);
        return ch;
    }

    namespace
    {
        CMatrix scaled_error(const CMatrix &h, double sigma2, rng_engine &rng)
        {
            const double rows = static_cast<double>(h.rows());
            const double cols = static_cast<double>(h.cols());
            const double variance = h.squaredNorm() / (rows * rows * cols * cols) * sigma2;
            const double scale = std::sqrt(variance);
            CMatrix delta(h.rows(), h.cols());
            // column-major fill; the draw order is part of the seeded contract
            for (Eigen::Index j = 0; j < h.cols(); ++j)
                for (Eigen::Index i = 0; i < h.rows(); ++i)
                    delta(i, j) = scale * complex_gaussian(rng);
            return delta;
        }
    }

    channel_set perturb_cascaded_channels(const channel_set &channels, double sigma2, std::uint64_t seed)
    {
        if (!(sigma2 >= 0.0))
            throw std::invalid_argument("perturb_cascaded_channels: sigma2 must be >= 0");
        channel_set out = channels;
        if (sigma2 == 0.0)
            return out;
        auto rng_rr = make_stream(seed, stream_id::perturb_rx_ris);
        auto rng_rt = make_stream(seed, stream_id::perturb_ris_tx);
        out.rx_ris += scaled_error(channels.rx_ris, sigma2, rng_rr);
        out.ris_tx += scaled_error(channels.ris_tx, sigma2, rng_rt);
        return out;
    }
}

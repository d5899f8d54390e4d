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
#include "simrp/matrix_io.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace simrp;

namespace
{
    // beta written out with long double as an independent evaluation
    double beta_oracle(double d, double wavelength)
    {
        const long double kd = 2.0L * 3.14159265358979323846264338327950288L / wavelength * d;
        return static_cast<double>(0.25L * (1.0L / (kd * kd) - 1.0L / std::pow(kd, 4) + 1.0L / std::pow(kd, 6)));
    }
}

TEST_CASE("near-field gain matches its closed form")
{
    const double lambda = 0.125;
    for (double d : {0.01, 0.0625, 0.2, 0.375, 1.0, 5.0})
    {
        const cplx h = near_field_gain(Point3(0, 0, 0), Point3(d, 0, 0), lambda);
        CHECK(std::norm(h) == doctest::Approx(beta_oracle(d, lambda)).epsilon(1e-12));
        const double kd = two_pi / lambda * d;
        CHECK(std::abs(std::arg(h * std::polar(1.0, kd))) < 1e-9);
    }
    // far field: |h|^2 -> 1/(4 (kd)^2), the Friis value (lambda / (4 pi d))^2
    const double d = 50.0;
    const double friis = std::pow(lambda / (4.0 * pi * d), 2);
    CHECK(std::norm(near_field_gain(Point3(0, 0, 0), Point3(0, d, 0), lambda)) == doctest::Approx(friis).epsilon(1e-6));
}

TEST_CASE("near-field gain rejects degenerate inputs")
{
    CHECK_THROWS_AS(near_field_gain(Point3(1, 2, 3), Point3(1, 2, 3), 0.125), degenerate_geometry);
    CHECK_THROWS_AS(near_field_gain(Point3(0, 0, 0), Point3(1, 0, 0), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(near_field_gain(Point3(0, 0, 0), Point3(1, 0, 0), -1.0), std::invalid_argument);
}

TEST_CASE("reference geometry layout")
{
    scenario_config sc;
    const auto geo = build_geometry(sc);
    REQUIRE(geo.m_t() == 8);
    REQUIRE(geo.m_r() == 8);
    REQUIRE(geo.m_ris() == 64);

    Point3 tx_c = Point3::Zero(), rx_c = Point3::Zero();
    for (int n = 0; n < 8; ++n)
    {
        tx_c += geo.tx[static_cast<std::size_t>(n)] / 8.0;
        rx_c += geo.rx[static_cast<std::size_t>(n)] / 8.0;
    }
    CHECK((tx_c - rx_c).norm() == doctest::Approx(3.0 * 0.125));
    for (std::size_t n = 1; n < 8; ++n)
        CHECK((geo.tx[n] - geo.tx[n - 1]).norm() == doctest::Approx(0.0625));
    for (const auto &p : geo.ris)
        CHECK(p.y() == doctest::Approx(-0.0625));
    // element (r, c) at index r*cols + c: columns step along x, rows along z
    CHECK((geo.ris[1] - geo.ris[0]).x() == doctest::Approx(0.0625));
    CHECK((geo.ris[8] - geo.ris[0]).z() == doctest::Approx(0.0625));

    // no element of one array coincides with another
    for (const auto &t : geo.tx)
    {
        for (const auto &r : geo.rx)
            CHECK((t - r).norm() > 0.1);
        for (const auto &s : geo.ris)
            CHECK((t - s).norm() > 0.06);
    }
    CHECK_THROWS_AS(build_geometry(0, 8, 8, 8, 0.125, 0.375, 0.0625), std::invalid_argument);
}

TEST_CASE("self-interference matrices are entrywise near-field gains")
{
    const auto geo = build_geometry(3, 4, 2, 3, 0.125, 0.375, 0.0625);
    const auto ch = build_self_interference_channels(geo);
    REQUIRE(ch.rx_tx.rows() == 4);
    REQUIRE(ch.rx_tx.cols() == 3);
    REQUIRE(ch.rx_ris.rows() == 4);
    REQUIRE(ch.rx_ris.cols() == 6);
    REQUIRE(ch.ris_tx.rows() == 6);
    REQUIRE(ch.ris_tx.cols() == 3);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j)
        {
            const double d = (geo.rx[static_cast<std::size_t>(i)] - geo.tx[static_cast<std::size_t>(j)]).norm();
            CHECK(std::norm(ch.rx_tx(i, j)) == doctest::Approx(beta_oracle(d, 0.125)).epsilon(1e-12));
        }
    for (int i = 0; i < 4; ++i)
        for (int s = 0; s < 6; ++s)
            CHECK(std::abs(ch.rx_ris(i, s) - near_field_gain(geo.rx[static_cast<std::size_t>(i)],
                                                             geo.ris[static_cast<std::size_t>(s)], 0.125)) == 0.0);
}

TEST_CASE("user channels are seeded and placed in the annulus")
{
    scenario_config sc;
    const auto geo = build_geometry(sc);
    const auto a = build_channels(geo, sc, 7);
    const auto b = build_channels(geo, sc, 7);
    const auto c = build_channels(geo, sc, 8);
    REQUIRE(a.ul_direct.size() == 3);
    REQUIRE(a.dl_direct.size() == 3);
    for (std::size_t u = 0; u < 3; ++u)
    {
        CHECK((a.ul_direct[u] - b.ul_direct[u]).norm() == 0.0);
        CHECK((a.dl_ris[u] - b.dl_ris[u]).norm() == 0.0);
        CHECK((a.ul_direct[u] - c.ul_direct[u]).norm() > 0.0);
        for (const auto &p : {a.ul_positions[u], a.dl_positions[u]})
        {
            CHECK(p.norm() >= 100.0);
            CHECK(p.norm() <= 140.0);
            CHECK(p.y() > 0.0);
            CHECK(std::abs(std::atan2(p.x(), p.y())) <= 60.0 * pi / 180.0 + 1e-12);
        }
        CHECK(a.ul_direct[u].size() == 8);
        CHECK(a.ul_ris[u].size() == 64);
        CHECK(a.dl_direct[u].size() == 8);
    }

    // a single LOS path is a plane wave with the free-space amplitude
    scenario_config los = sc;
    los.sv_paths = 1;
    const auto l = build_channels(geo, los, 3);
    const double amp = 0.125 / (4.0 * pi * l.ul_positions[0].norm());
    for (Eigen::Index n = 0; n < 8; ++n)
        CHECK(std::abs(l.ul_direct[0](n)) == doctest::Approx(amp).epsilon(1e-12));
}

TEST_CASE("steering vector phases")
{
    const std::vector<Point3> el{Point3(0, 0, 0), Point3(0.0625, 0, 0), Point3(0, 0.0625, 0)};
    const auto a = steering_vector(el, Point3(1, 0, 0), 0.125);
    CHECK(std::abs(a(0) - cplx(1, 0)) < 1e-15);
    CHECK(std::abs(a(1) - cplx(-1, 0)) < 1e-12); // half-wavelength along the direction
    CHECK(std::abs(a(2) - cplx(1, 0)) < 1e-15);  // orthogonal offset
}

TEST_CASE("cascaded-channel perturbation")
{
    scenario_config sc;
    const auto geo = build_geometry(sc);
    const auto ch = build_channels(geo, sc, 1);

    SUBCASE("zero level is the identity")
    {
        const auto p = perturb_cascaded_channels(ch, 0.0, 5);
        CHECK((p.rx_ris - ch.rx_ris).norm() == 0.0);
        CHECK((p.ris_tx - ch.ris_tx).norm() == 0.0);
    }
    SUBCASE("negative level rejected")
    {
        CHECK_THROWS_AS(perturb_cascaded_channels(ch, -0.1, 5), std::invalid_argument);
    }
    SUBCASE("only the cascaded matrices change, and the draws scale with sqrt(sigma2)")
    {
        const auto p1 = perturb_cascaded_channels(ch, 0.01, 5);
        const auto p4 = perturb_cascaded_channels(ch, 0.04, 5);
        CHECK((p1.rx_tx - ch.rx_tx).norm() == 0.0);
        CHECK((p1.ul_direct[0] - ch.ul_direct[0]).norm() == 0.0);
        const double e1 = (p1.rx_ris - ch.rx_ris).norm();
        const double e4 = (p4.rx_ris - ch.rx_ris).norm();
        CHECK(e4 / e1 == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("entry variance matches ||H||^2 sigma2 / (rows^2 cols^2)")
    {
        const double sigma2 = 0.1;
        double acc = 0.0;
        const int trials = 40;
        for (int t = 0; t < trials; ++t)
            acc += (perturb_cascaded_channels(ch, sigma2, 100 + t).ris_tx - ch.ris_tx).squaredNorm();
        const double rows = 64.0, cols = 8.0;
        const double expected = ch.ris_tx.squaredNorm() * sigma2 / (rows * rows * cols * cols);
        const double measured = acc / (trials * rows * cols);
        CHECK(measured == doctest::Approx(expected).epsilon(0.05));
    }
}

TEST_CASE("matrix text format round-trips exactly")
{
    auto rng = test::stream(11);
    const CMatrix m = test::random_matrix(rng, 3, 5);
    std::stringstream ss;
    write_matrix(ss, m);
    const CMatrix back = read_matrix(ss);
    CHECK((back - m).norm() == 0.0);

    std::istringstream bad("2 2\n1,0 0,0\n");
    CHECK_THROWS_AS(read_matrix(bad), std::runtime_error);

    const auto dir = std::filesystem::temp_directory_path() / "simrp_test_dump";
    std::filesystem::create_directories(dir);
    const auto ch = build_self_interference_channels(build_geometry(2, 2, 2, 2, 0.125, 0.375, 0.0625));
    dump_self_interference(ch, dir);
    std::ifstream f(dir / "rx_ris.txt");
    const CMatrix rr = read_matrix(f);
    CHECK((rr - ch.rx_ris).norm() == 0.0);
}

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
#include "simrp/psn_sqp.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <limits>

using namespace simrp;

namespace
{
    double quad(const CMatrix &e, const RVector &theta)
    {
        const CVector f = unit_phasors(theta);
        return f.dot(e.conjugate() * f).real();
    }

    // Minimum of x^T l + x^T q x / 2 over ||x|| <= radius in three dimensions by
    // a dense sweep of the sphere plus the interior Newton point.
    double tr_grid_oracle(const RMatrix &q, const RVector &l, double radius)
    {
        double best = std::numeric_limits<double>::infinity();
        const int n = 600;
        for (int i = 0; i <= n; ++i)
        {
            const double theta = pi * i / n;
            for (int j = 0; j < 2 * n; ++j)
            {
                const double phi = pi * j / n;
                const RVector x =
                    radius * RVector((RVector(3) << std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                                      std::cos(theta))
                                         .finished());
                best = std::min(best, l.dot(x) + 0.5 * x.dot(q * x));
            }
        }
        const Eigen::SelfAdjointEigenSolver<RMatrix> eig(q);
        if (eig.eigenvalues().minCoeff() > 0.0)
        {
            const RVector x = -q.ldlt().solve(l);
            if (x.norm() <= radius)
                best = std::min(best, l.dot(x) + 0.5 * x.dot(q * x));
        }
        return best;
    }

    RMatrix random_symmetric(rng_engine &rng, int n)
    {
        RMatrix a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                a(i, j) = uniform(rng, -1.0, 1.0);
        return 0.5 * (a + a.transpose());
    }

    RVector random_real(rng_engine &rng, int n)
    {
        RVector v(n);
        for (int i = 0; i < n; ++i)
            v(i) = uniform(rng, -1.0, 1.0);
        return v;
    }
}

TEST_CASE("PSN matrix phase conventions")
{
    auto rng = test::stream(1);
    const std::vector<RVector> thetas{test::random_phases(rng, 4), test::random_phases(rng, 4)};
    const auto p = psn_matrix::from_rows(thetas);
    REQUIRE(p.rows() == 2);
    REQUIRE(p.cols() == 4);
    for (int m = 0; m < 2; ++m)
    {
        // F(m, :) = f_m^H with f_m = exp(j theta_m)
        CHECK((p.f.row(m).transpose() - unit_phasors(thetas[static_cast<std::size_t>(m)]).conjugate()).norm() < 1e-15);
        CHECK((unit_phasors(p.row_theta(m)) - unit_phasors(thetas[static_cast<std::size_t>(m)])).norm() < 1e-15);
    }
    RMatrix ph(2, 2);
    ph << 0, 0, 0, pi;
    CHECK(psn_matrix::from_phases(ph).max_offdiag_gram() < 1e-28);
    ph(1, 1) = 0;
    CHECK(psn_matrix::from_phases(ph).max_offdiag_gram() == doctest::Approx(4.0));
}

TEST_CASE("g and h phase gradients and Hessians match finite differences")
{
    auto rng = test::stream(2);
    for (int t = 0; t < 20; ++t)
    {
        const int m_r = test::random_int(rng, 2, 8);
        const int m_t = test::random_int(rng, 1, 8);
        const CMatrix g = test::random_matrix(rng, m_r, m_t);
        const CMatrix fp = psn_matrix::from_phases(RMatrix::Random(test::random_int(rng, 1, m_r - 1), m_r) * pi).f;
        const auto state = make_row_state(g, fp, test::random_phases(rng, m_r), 2);

        const auto grads = grad_g_h(state);
        const auto fg = [&](const RVector &x) { return quad(state.e, x); };
        const auto fh = [&](const RVector &x) { return quad(state.j, x); };
        CHECK(state.g_value() == doctest::Approx((state.f().adjoint() * g).squaredNorm()));
        CHECK(state.h_value() == doctest::Approx((fp * state.f()).squaredNorm()));

        CHECK(test::rel_err(grads.g, test::fd_gradient(fg, state.theta)) < 1e-6);
        CHECK(test::rel_err(grads.h, test::fd_gradient(fh, state.theta)) < 1e-6);

        const RMatrix hg = phase_hessian(state.e, state.f());
        const RMatrix hh = phase_hessian(state.j, state.f());
        CHECK((hg - test::fd_hessian(fg, state.theta)).cwiseAbs().maxCoeff() < 1e-5 * (1.0 + hg.norm()));
        CHECK((hh - test::fd_hessian(fh, state.theta)).cwiseAbs().maxCoeff() < 1e-5 * (1.0 + hh.norm()));
        CHECK((hg - hg.transpose()).norm() == 0.0);
    }
}

TEST_CASE("Lagrange multiplier removes the constraint-gradient component")
{
    auto rng = test::stream(3);
    const RVector g = random_real(rng, 6), h = random_real(rng, 6);
    const auto m = lagrange_multiplier(g, h);
    CHECK_FALSE(m.degenerate);
    CHECK(std::abs((g + m.lambda * h).dot(h)) < 1e-14);
    const auto z = lagrange_multiplier(g, RVector::Zero(6));
    CHECK(z.degenerate);
    CHECK(z.lambda == 0.0);
}

TEST_CASE("null-space basis")
{
    auto rng = test::stream(4);
    for (int t = 0; t < 50; ++t)
    {
        const int n = test::random_int(rng, 2, 12);
        RVector h = random_real(rng, n);
        if (t % 5 == 0)
            h(0) = 0.0; // sign branch of the reflector
        const RMatrix z = nullspace_basis(h);
        REQUIRE(z.cols() == n - 1);
        CHECK((z.transpose() * h).norm() <= 1e-12 * h.norm());
        CHECK((z.transpose() * z - RMatrix::Identity(n - 1, n - 1)).norm() <= 1e-12);
    }
    CHECK_THROWS_AS(nullspace_basis(RVector::Zero(4)), std::invalid_argument);
}

TEST_CASE("gamma_opt matches a grid search of the feasibility model")
{
    auto rng = test::stream(5);
    for (int t = 0; t < 200; ++t)
    {
        const double hn = uniform(rng, 0.01, 3.0);
        const double hv = uniform(rng, -2.0, 2.0);
        const double omega = uniform(rng, 0.01, 1.0);
        const double xi = uniform(rng, 0.1, 0.9);
        const double bound = xi * omega / hn;
        auto model = [&](double g) { return std::pow(g * hn * hn + hv, 2); };
        const int n = 10000;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= n; ++i)
            best = std::min(best, model(-bound + 2.0 * bound * i / n));
        const double g = gamma_opt(hn, hv, omega, xi);
        CHECK(std::abs(g) <= bound * (1 + 1e-12));
        // one grid cell of slack
        const double cell = 2.0 * bound / n;
        const double slope = 2.0 * std::abs(g * hn * hn + hv) * hn * hn + 2.0 * hn * hn * hn * hn * cell;
        CHECK(model(g) <= best + 1e-12 + slope * cell);
    }
    CHECK_THROWS_AS(gamma_opt(0.0, 1.0, 0.5, 0.6), std::invalid_argument);
    CHECK_THROWS_AS(gamma_opt(1.0, 1.0, 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("truncated CG against an exact trust-region oracle on 3x3 indefinite problems")
{
    auto rng = test::stream(6);
    int indefinite = 0;
    for (int t = 0; t < 100; ++t)
    {
        RMatrix q = random_symmetric(rng, 3);
        const Eigen::SelfAdjointEigenSolver<RMatrix> eig(q);
        if (eig.eigenvalues().minCoeff() >= 0.0 || eig.eigenvalues().maxCoeff() <= 0.0)
            continue;
        ++indefinite;
        const RVector l = random_real(rng, 3);
        const double radius = uniform(rng, 0.1, 2.0);
        const auto res = tcg_solve(q, l, radius);
        const double oracle = tr_grid_oracle(q, l, radius);
        CHECK(res.x.norm() <= radius * (1 + 1e-10));
        CHECK(res.model == doctest::Approx(l.dot(res.x) + 0.5 * res.x.dot(q * res.x)));
        CHECK(res.model <= oracle + 0.05 * std::abs(oracle));
    }
    CHECK(indefinite > 30);
}

TEST_CASE("truncated CG interior and edge cases")
{
    auto rng = test::stream(7);
    RMatrix a = random_symmetric(rng, 5);
    const RMatrix q = a * a.transpose() + RMatrix::Identity(5, 5);
    const RVector l = random_real(rng, 5);
    const RVector newton = -q.ldlt().solve(l);

    tcg_settings tight;
    tight.forcing = 1e-12;
    const auto inner = tcg_solve(q, l, 10.0 * newton.norm(), tight);
    CHECK(inner.exit == tcg_exit::converged);
    CHECK((inner.x - newton).norm() < 1e-8 * newton.norm());

    const auto edge = tcg_solve(q, l, 0.1 * newton.norm(), tight);
    CHECK(edge.x.norm() == doctest::Approx(0.1 * newton.norm()));
    CHECK(edge.model < 0.0);

    const auto zero = tcg_solve(q, RVector::Zero(5), 1.0);
    CHECK(zero.exit == tcg_exit::zero_gradient);
    CHECK(zero.x.norm() == 0.0);
    CHECK_THROWS_AS(tcg_solve(q, l, -1.0), std::invalid_argument);

    // pure Steihaug without refinement still returns a feasible descent point
    tcg_settings plain;
    plain.refine = false;
    const RMatrix indef = random_symmetric(rng, 4) - 2.0 * RMatrix::Identity(4, 4);
    const auto s = tcg_solve(indef, random_real(rng, 4), 0.7, plain);
    CHECK(s.x.norm() <= 0.7 * (1 + 1e-12));
    CHECK(s.model <= 0.0);
    CHECK_FALSE(s.refined);
}

TEST_CASE("SQP step proposal")
{
    auto rng = test::stream(8);
    const int m_r = 6;
    const CMatrix g = test::random_matrix(rng, m_r, 4);
    const CMatrix fp = test::random_matrix(rng, 2, m_r);
    auto state = make_row_state(g, fp, test::random_phases(rng, m_r), 3);
    state.omega = 0.5;
    const auto grads = grad_g_h(state);
    state.lambda = lagrange_multiplier(grads.g, grads.h).lambda;
    const double hv = state.h_value();
    const auto step = propose_step(state, grads, hv, 0.6, {});
    CHECK(step.delta.norm() <= state.omega * (1 + 1e-10));
    CHECK((step.delta - step.gamma * grads.h - step.z * step.x).norm() < 1e-12);
    CHECK(std::abs(step.gamma) * step.h_norm <= 0.6 * state.omega * (1 + 1e-12));
    const RMatrix q = qp_hessian(state);
    CHECK(step.predicted == doctest::Approx(grads.g.dot(step.delta) + 0.5 * step.delta.dot(q * step.delta)));
    // the constraint is linearised to first order: h + grad_h^T delta moves toward 0
    CHECK(std::abs(hv + grads.h.dot(step.delta)) <= hv + 1e-12);
}

TEST_CASE("row optimisation keeps orthogonality and decreases g")
{
    auto rng = test::stream(9);
    sqp_settings s;
    for (int t = 0; t < 10; ++t)
    {
        const int m_r = 8;
        const CMatrix g = test::random_matrix(rng, m_r, 8, 0.01);
        const RVector t0 = test::random_phases(rng, m_r);
        CMatrix fp(1, m_r);
        fp.row(0) = unit_phasors(test::random_phases(rng, m_r)).adjoint();
        const auto res = sqp_row_minimize(g, fp, t0, s);
        CHECK(res.h_start <= s.restore_tol_scale * m_r * m_r);
        CHECK(res.h <= s.orth_tolerance(m_r));
        CHECK(res.g <= res.g_start);
        for (std::size_t i = 1; i < res.accepted_g.size(); ++i)
            CHECK(res.accepted_g[i] <= res.accepted_g[i - 1]);
        CHECK(std::abs((fp * unit_phasors(res.theta)).squaredNorm() - res.h) < 1e-12);
    }
}

TEST_CASE("orthogonality restoration")
{
    auto rng = test::stream(10);
    sqp_settings s;
    CMatrix fp(2, 8);
    fp.row(0) = unit_phasors(test::random_phases(rng, 8)).adjoint();
    fp.row(1) = unit_phasors(test::random_phases(rng, 8)).adjoint();
    const RVector theta = restore_orthogonality(fp, test::random_phases(rng, 8), s);
    CHECK((fp * unit_phasors(theta)).squaredNorm() <= s.restore_tol_scale * 64);
}

TEST_CASE("full PSN optimisation")
{
    auto rng = test::stream(11);
    for (auto method : {first_row_method::rcg, first_row_method::power})
    {
        sqp_settings s;
        s.first_row = method;
        const CMatrix g = test::random_matrix(rng, 8, 8, 0.01);
        RMatrix ph(3, 8);
        for (int i = 0; i < 3; ++i)
            ph.row(i) = test::random_phases(rng, 8).transpose();
        const auto init = psn_matrix::from_phases(ph);
        const auto res = optimize_psn(g, init, s);
        CHECK(res.feasible);
        CHECK(res.rows.size() == 2);
        CHECK(res.psn.max_offdiag_gram() <= s.orth_tolerance(8));
        CHECK(modulus_deviation(res.psn.f.row(2).transpose()) < 1e-12);
        CHECK(res.first_row.value <= (init.f.row(0) * g).squaredNorm());
        CHECK(res.first_row.value == doctest::Approx((res.psn.f.row(0) * g).squaredNorm()));
    }
    const auto ortho = orthogonalize_rows(psn_matrix::from_phases(RMatrix::Random(3, 8)), sqp_settings{});
    CHECK(ortho.max_offdiag_gram() <= 1e-12);
    CHECK_THROWS_AS(optimize_psn(CMatrix::Zero(8, 8), psn_matrix::from_phases(RMatrix::Zero(9, 8)), sqp_settings{}),
                    std::invalid_argument);
}

TEST_CASE("zero SI channel leaves the PSN optimisation trivially converged")
{
    const CMatrix g = CMatrix::Zero(4, 3);
    const auto res = optimize_psn(g, psn_matrix::from_phases(RMatrix::Random(2, 4)), sqp_settings{});
    CHECK(res.feasible);
    CHECK((res.psn.f * g).squaredNorm() == 0.0);
}

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

#include "simrp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace simrp
{
    psn_matrix psn_matrix::from_phases(const RMatrix &phase)
    {
        psn_matrix p;
        p.phase = phase;
        p.f.resize(phase.rows(), phase.cols());
        for (Eigen::Index i = 0; i < phase.rows(); ++i)
            for (Eigen::Index j = 0; j < phase.cols(); ++j)
                p.f(i, j) = std::polar(1.0, phase(i, j));
        return p;
    }

    psn_matrix psn_matrix::from_rows(const std::vector<RVector> &row_thetas)
    {
        if (row_thetas.empty())
            throw std::invalid_argument("psn_matrix: no rows");
        RMatrix phase(static_cast<Eigen::Index>(row_thetas.size()), row_thetas.front().size());
        for (std::size_t m = 0; m < row_thetas.size(); ++m)
            phase.row(static_cast<Eigen::Index>(m)) = -row_thetas[m].transpose();
        return from_phases(phase);
    }

    double psn_matrix::max_offdiag_gram() const
    {
        const CMatrix gram = f * f.adjoint();
        double worst = 0.0;
        for (Eigen::Index i = 0; i < gram.rows(); ++i)
            for (Eigen::Index j = 0; j < gram.cols(); ++j)
                if (i != j)
                    worst = std::max(worst, std::norm(gram(i, j)));
        return worst;
    }

    CMatrix effective_channel(const channel_set &channels, const CVector &d)
    {
        if (d.size() != channels.rx_ris.cols() || channels.ris_tx.rows() != d.size())
            throw std::invalid_argument("effective_channel: RIS dimension mismatch");
        return channels.rx_ris * d.asDiagonal() * channels.ris_tx + channels.rx_tx;
    }

    // ---------------------------------------------------------------- row state

    namespace
    {
        double quad_value(const CMatrix &e, const CVector &f)
        {
            // f^H conj(E) f, real for Hermitian E
            return f.dot(e.conjugate() * f).real();
        }
    }

    double sqp_row_state::g_value() const { return quad_value(e, f()); }
    double sqp_row_state::h_value() const { return quad_value(j, f()); }

    sqp_row_state make_row_state(const CMatrix &g_channel, const CMatrix &f_prev, const RVector &theta, int row)
    {
        if (f_prev.cols() != g_channel.rows() || theta.size() != g_channel.rows())
            throw std::invalid_argument("make_row_state: dimension mismatch");
        sqp_row_state s;
        s.row = row;
        s.theta = theta;
        s.e = g_channel.conjugate() * g_channel.transpose();
        s.j = f_prev.transpose() * f_prev.conjugate();
        return s;
    }

    RVector phase_gradient(const CMatrix &e, const CVector &f)
    {
        const CVector w = (e * f.conjugate()).cwiseProduct(f);
        return -2.0 * w.imag();
    }

    RMatrix phase_hessian(const CMatrix &e, const CVector &f)
    {
        const CVector w = (e * f.conjugate()).cwiseProduct(f);
        const CMatrix s = f * f.adjoint();
        CMatrix inner = -e.cwiseProduct(s);
        inner.diagonal() += w;
        RMatrix hess = -2.0 * inner.real();
        // exact symmetry; the two triangles differ only by rounding
        return 0.5 * (hess + hess.transpose());
    }

    gh_gradients grad_g_h(const sqp_row_state &state)
    {
        const CVector f = state.f();
        return {phase_gradient(state.e, f), phase_gradient(state.j, f)};
    }

    multiplier lagrange_multiplier(const RVector &g, const RVector &h)
    {
        const double hn2 = h.squaredNorm();
        if (hn2 == 0.0)
            return {0.0, true};
        return {-h.dot(g) / hn2, false};
    }

    RMatrix qp_hessian(const sqp_row_state &state)
    {
        const CVector f = state.f();
        return phase_hessian(state.e, f) + state.lambda * phase_hessian(state.j, f);
    }

    RMatrix nullspace_basis(const RVector &h)
    {
        const Eigen::Index n = h.size();
        const double norm = h.norm();
        if (n == 0 || norm == 0.0)
            throw std::invalid_argument("nullspace_basis: zero vector has no complement basis");
        RVector v = h;
        v(0) += (h(0) >= 0.0 ? 1.0 : -1.0) * norm;
        const RMatrix reflector = RMatrix::Identity(n, n) - (2.0 / v.squaredNorm()) * v * v.transpose();
        return reflector.rightCols(n - 1);
    }

    double gamma_opt(double h_norm, double h_val, double omega, double xi)
    {
        if (!(h_norm > 0.0) || !(omega > 0.0) || !(xi > 0.0 && xi < 1.0))
            throw std::invalid_argument("gamma_opt: requires h_norm > 0, omega > 0, 0 < xi < 1");
        const double ratio = -h_val / (xi * h_norm);
        if (ratio >= omega)
            return xi * omega / h_norm;
        if (-ratio >= omega)
            return -xi * omega / h_norm;
        return -h_val / (h_norm * h_norm);
    }

    // ---------------------------------------------------------------- TCG

    namespace
    {
        double model_value(const RMatrix &q, const RVector &linear, const RVector &x)
        {
            return linear.dot(x) + 0.5 * x.dot(q * x);
        }

        // Largest tau >= 0 with ||x + tau p|| = radius.
        double to_boundary(const RVector &x, const RVector &p, double radius)
        {
            const double a = p.squaredNorm();
            const double b = 2.0 * x.dot(p);
            const double c = x.squaredNorm() - radius * radius;
            const double disc = std::max(0.0, b * b - 4.0 * a * c);
            return (-b + std::sqrt(disc)) / (2.0 * a);
        }

        // min g^T y + y^T T y / 2, ||y|| = radius (or interior if convex and inside),
        // for small symmetric T via its eigendecomposition.
        RVector small_trust_region(const RMatrix &t, const RVector &g, double radius)
        {
            const Eigen::SelfAdjointEigenSolver<RMatrix> eig(t);
            const RVector lam = eig.eigenvalues();
            const RMatrix &v = eig.eigenvectors();
            const RVector coef = v.transpose() * g;
            const double lam_min = lam(0);
            const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());

            auto step_norm = [&](double mu) {
                double s = 0.0;
                for (Eigen::Index i = 0; i < lam.size(); ++i)
                {
                    const double den = lam(i) + mu;
                    if (den > 0.0)
                        s += coef(i) * coef(i) / (den * den);
                }
                return std::sqrt(s);
            };
            auto solution = [&](double mu) {
                RVector y = RVector::Zero(lam.size());
                for (Eigen::Index i = 0; i < lam.size(); ++i)
                {
                    const double den = lam(i) + mu;
                    if (den > 0.0)
                        y -= (coef(i) / den) * v.col(i);
                }
                return y;
            };

            if (lam_min > 0.0 && step_norm(0.0) <= radius)
                return solution(0.0);

            double lo = std::max(0.0, -lam_min);
            const double eps = 1e-14 * scale;
            if (step_norm(lo + eps) <= radius)
            {
                // hard case: fill up to the boundary along the lowest eigenvector
                RVector y = solution(lo + eps);
                const double tau = std::sqrt(std::max(0.0, radius * radius - y.squaredNorm()));
                return y + tau * v.col(0);
            }
            double hi = lo + g.norm() / radius + eps;
            while (step_norm(hi) > radius)
                hi *= 2.0;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it)
            {
                const double mid = 0.5 * (lo + hi);
                if (step_norm(mid) > radius)
                    lo = mid;
                else
                    hi = mid;
            }
            return solution(hi);
        }

        // Trust-region solution restricted to the Krylov space of (q, linear).
        RVector lanczos_krylov(const RMatrix &q, const RVector &linear, double radius, int max_dim)
        {
            const Eigen::Index n = linear.size();
            const int kmax = static_cast<int>(std::min<Eigen::Index>(n, max_dim));
            const double lnorm = linear.norm();
            RMatrix basis(n, kmax);
            RVector alpha(kmax), beta(kmax);
            basis.col(0) = linear / lnorm;
            int k = 0;
            const double qscale = std::max(1.0, q.cwiseAbs().maxCoeff());
            for (; k < kmax; ++k)
            {
                RVector w = q * basis.col(k);
                alpha(k) = basis.col(k).dot(w);
                for (int pass = 0; pass < 2; ++pass)
                    w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * w);
                beta(k) = w.norm();
                if (k + 1 == kmax || beta(k) <= 1e-12 * qscale)
                {
                    ++k;
                    break;
                }
                basis.col(k + 1) = w / beta(k);
            }
            RMatrix t = RMatrix::Zero(k, k);
            for (int i = 0; i < k; ++i)
            {
                t(i, i) = alpha(i);
                if (i + 1 < k)
                    t(i, i + 1) = t(i + 1, i) = beta(i);
            }
            RVector g = RVector::Zero(k);
            g(0) = lnorm;
            return basis.leftCols(k) * small_trust_region(t, g, radius);
        }
    }

    tcg_result tcg_solve(const RMatrix &q, const RVector &linear, double radius, const tcg_settings &settings)
    {
        if (!(radius >= 0.0))
            throw std::invalid_argument("tcg_solve: radius must be >= 0");
        const Eigen::Index n = linear.size();
        if (q.rows() != n || q.cols() != n)
            throw std::invalid_argument("tcg_solve: dimension mismatch");

        tcg_result res;
        res.x = RVector::Zero(n);
        const double r0 = linear.norm();
        if (radius == 0.0 || r0 == 0.0 || n == 0)
        {
            res.exit = tcg_exit::zero_gradient;
            return res;
        }

        const int max_iters = settings.max_iters > 0 ? settings.max_iters : static_cast<int>(n);
        RVector x = RVector::Zero(n);
        RVector r = -linear;
        RVector p = r;
        double rr = r.squaredNorm();
        res.exit = tcg_exit::max_iters;
        for (int it = 0; it < max_iters; ++it)
        {
            ++res.iterations;
            const RVector qp = q * p;
            const double curvature = p.dot(qp);
            if (curvature <= 0.0)
            {
                x += to_boundary(x, p, radius) * p;
                res.exit = tcg_exit::negative_curvature;
                break;
            }
            const double alpha = rr / curvature;
            const RVector x_next = x + alpha * p;
            if (x_next.norm() >= radius)
            {
                x += to_boundary(x, p, radius) * p;
                res.exit = tcg_exit::boundary;
                break;
            }
            x = x_next;
            r -= alpha * qp;
            const double rr_next = r.squaredNorm();
            if (std::sqrt(rr_next) <= settings.forcing * r0)
            {
                res.exit = tcg_exit::converged;
                break;
            }
            p = r + (rr_next / rr) * p;
            rr = rr_next;
        }

        res.x = x;
        res.model = model_value(q, linear, x);
        if (settings.refine)
        {
            const RVector y = lanczos_krylov(q, linear, radius, std::max<int>(max_iters, static_cast<int>(n)));
            const double my = model_value(q, linear, y);
            if (y.allFinite() && y.norm() <= radius * (1.0 + 1e-12) && my < res.model)
            {
                res.x = y;
                res.model = my;
                res.refined = true;
            }
        }
        return res;
    }

    // ---------------------------------------------------------------- SQP

    sqp_step propose_step(const sqp_row_state &state, const gh_gradients &grads, double h_val, double xi,
                          const tcg_settings &tcg)
    {
        const Eigen::Index n = state.theta.size();
        const RMatrix q = qp_hessian(state);
        sqp_step step;
        step.h_norm = grads.h.norm();
        RVector linear;
        if (step.h_norm == 0.0)
        {
            step.degenerate = true;
            step.z = RMatrix::Identity(n, n);
            step.gamma = 0.0;
            linear = grads.g;
        }
        else
        {
            step.gamma = gamma_opt(step.h_norm, h_val, state.omega, xi);
            step.gamma_interior = std::abs(step.gamma) * step.h_norm < xi * state.omega;
            step.z = nullspace_basis(grads.h);
            linear = step.z.transpose() * (grads.g + step.gamma * (q * grads.h));
        }
        const double used = step.gamma * step.gamma * step.h_norm * step.h_norm;
        const double radius = std::sqrt(std::max(0.0, state.omega * state.omega - used));
        const RMatrix qbar = step.z.transpose() * q * step.z;
        step.x = tcg_solve(qbar, linear, radius, tcg).x;
        step.delta = step.z * step.x;
        if (!step.degenerate)
            step.delta += step.gamma * grads.h;
        step.predicted = grads.g.dot(step.delta) + 0.5 * step.delta.dot(q * step.delta);
        return step;
    }

    RVector restore_orthogonality(const CMatrix &f_prev, const RVector &theta, const sqp_settings &settings)
    {
        const int m_r = static_cast<int>(theta.size());
        quadratic_form h_form{f_prev, CVector::Zero(f_prev.rows())};
        rcg_settings rs = settings.rcg;
        rs.tolerance = 0.0;
        rs.max_iters = settings.restore_max_iters;
        rs.target_value = settings.restore_tol_scale * m_r * m_r;
        const auto res = rcg_minimize(h_form, unit_phasors(theta), rs);
        return phases_of(res.d);
    }

    sqp_row_result sqp_row_minimize(const CMatrix &g_channel, const CMatrix &f_prev, const RVector &theta_init,
                                    const sqp_settings &settings)
    {
        if (f_prev.rows() < 1)
            throw std::invalid_argument("sqp_row_minimize: needs at least one previous row");
        const int m_r = static_cast<int>(theta_init.size());
        sqp_row_state state = make_row_state(g_channel, f_prev, theta_init, static_cast<int>(f_prev.rows()) + 1);
        state.omega = settings.omega1;

        const double restore_target = settings.restore_tol_scale * m_r * m_r;
        const double orth_tol = settings.orth_tolerance(m_r);
        tcg_settings tcg{settings.tcg_max_iters > 0 ? settings.tcg_max_iters : 5 * m_r, settings.tcg_forcing,
                         settings.tcg_refine};
        auto jitter_rng = make_stream(settings.seed, stream_id::psn_jitter, static_cast<std::uint64_t>(state.row));

        sqp_row_result res;
        if (state.h_value() > restore_target)
            state.theta = restore_orthogonality(f_prev, state.theta, settings);
        double g = state.g_value();
        double h = state.h_value();
        res.g_start = g;
        res.h_start = h;
        res.accepted_g.push_back(g);

        for (int k = 0; k < settings.max_iters; ++k)
        {
            const auto grads = grad_g_h(state);
            if (grads.h.squaredNorm() == 0.0 && h > orth_tol)
            {
                // constraint gradient vanished away from feasibility
                for (Eigen::Index i = 0; i < state.theta.size(); ++i)
                    state.theta(i) += uniform(jitter_rng, -settings.jitter, settings.jitter);
                state.theta = restore_orthogonality(f_prev, state.theta, settings);
                g = state.g_value();
                h = state.h_value();
                ++res.jitters;
                continue;
            }
            const auto mult = lagrange_multiplier(grads.g, grads.h);
            res.degenerate_multiplier = res.degenerate_multiplier || mult.degenerate;
            state.lambda = mult.lambda;

            const auto step = propose_step(state, grads, h, settings.xi, tcg);
            if (-step.predicted <= settings.tolerance * g)
            {
                res.exit = sqp_exit::model_converged;
                break;
            }

            RVector trial = state.theta + step.delta;
            trial = restore_orthogonality(f_prev, trial, settings);
            sqp_row_state probe = state;
            probe.theta = trial;
            const double g_trial = probe.g_value();
            const double h_trial = probe.h_value();

            if (!(g_trial <= g) || h_trial > orth_tol)
            {
                state.omega *= 0.5;
                ++res.rejected;
                res.trace.push_back({k, g_trial, h_trial, state.omega, false});
                if (state.omega < settings.omega_min)
                {
                    res.exit = sqp_exit::stalled;
                    break;
                }
                continue;
            }

            const double improvement = g - g_trial;
            if (settings.expand_ratio > 0.0 && improvement >= settings.expand_ratio * -step.predicted &&
                step.delta.norm() >= 0.99 * state.omega)
                state.omega = std::min(2.0 * state.omega, settings.omega_max);
            state.theta = trial;
            g = g_trial;
            h = h_trial;
            ++res.accepted;
            res.accepted_g.push_back(g);
            res.trace.push_back({k, g, h, state.omega, true});
            if (improvement < settings.tolerance * (g + improvement))
            {
                res.exit = sqp_exit::converged;
                break;
            }
        }

        res.theta = state.theta;
        res.g = g;
        res.h = h;
        return res;
    }

    first_row_result first_row_minimize(const CMatrix &g_channel, const CVector &f0, const sqp_settings &settings)
    {
        first_row_result out;
        if (settings.first_row == first_row_method::rcg)
        {
            quadratic_form form{g_channel.adjoint(), CVector::Zero(g_channel.cols())};
            rcg_settings rs = settings.rcg;
            const auto res = rcg_minimize(form, f0, rs);
            out.f = res.d;
            out.value = res.value();
            out.iterations = res.iterations;
            return out;
        }

        // Majorise-minimise: f <- retract((mu I - G G^H) f) never increases f^H G G^H f.
        const CMatrix m = g_channel * g_channel.adjoint();
        const double mu = 1.01 * m.trace().real() + 1e-300;
        CVector f = f0;
        double value = f.dot(m * f).real();
        int it = 0;
        for (; it < settings.power_max_iters; ++it)
        {
            CVector t = mu * f - m * f;
            for (Eigen::Index i = 0; i < t.size(); ++i)
                t(i) = std::abs(t(i)) > 0.0 ? t(i) / std::abs(t(i)) : f(i);
            const double next = t.dot(m * t).real();
            const double improvement = value - next;
            f = t;
            value = next;
            if (!(improvement >= settings.rcg.tolerance * (value + improvement)))
                break;
        }
        out.f = f;
        out.value = value;
        out.iterations = it;
        return out;
    }

    psn_result optimize_psn(const CMatrix &g_channel, const psn_matrix &init, const sqp_settings &settings)
    {
        const Eigen::Index n_rf = init.rows();
        const Eigen::Index m_r = g_channel.rows();
        if (init.cols() != m_r)
            throw std::invalid_argument("optimize_psn: initial PSN width does not match M_r");
        if (n_rf < 1 || n_rf > m_r)
            throw std::invalid_argument("optimize_psn: requires 1 <= N_RF <= M_r");

        psn_result out;
        out.first_row = first_row_minimize(g_channel, unit_phasors(init.row_theta(0)), settings);
        std::vector<RVector> thetas{phases_of(out.first_row.f)};

        CMatrix f_prev(1, m_r);
        f_prev.row(0) = out.first_row.f.adjoint();
        for (Eigen::Index m = 1; m < n_rf; ++m)
        {
            auto row = sqp_row_minimize(g_channel, f_prev, init.row_theta(m), settings);
            out.stalled = out.stalled || row.stalled();
            out.feasible = out.feasible && row.h <= settings.orth_tolerance(static_cast<int>(m_r));
            thetas.push_back(row.theta);
            f_prev.conservativeResize(m + 1, Eigen::NoChange);
            f_prev.row(m) = unit_phasors(row.theta).adjoint();
            out.rows.push_back(std::move(row));
        }
        out.psn = psn_matrix::from_rows(thetas);
        return out;
    }

    psn_matrix orthogonalize_rows(const psn_matrix &psn, const sqp_settings &settings)
    {
        std::vector<RVector> thetas{psn.row_theta(0)};
        CMatrix f_prev = psn.f.topRows(1);
        for (Eigen::Index m = 1; m < psn.rows(); ++m)
        {
            thetas.push_back(restore_orthogonality(f_prev, psn.row_theta(m), settings));
            f_prev.conservativeResize(m + 1, Eigen::NoChange);
            f_prev.row(m) = unit_phasors(thetas.back()).adjoint();
        }
        return psn_matrix::from_rows(thetas);
    }

    void write_row_trace(std::ostream &out, const sqp_row_result &row)
    {
        out << "k,g,h,omega,accepted\n";
        for (const auto &t : row.trace)
            out << t.k << ',' << t.g << ',' << t.h << ',' << t.omega << ',' << (t.accepted ? 1 : 0) << '\n';
    }
}

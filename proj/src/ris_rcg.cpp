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
#include "simrp/ris_rcg.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

namespace simrp
{
    void ris_phases::validate(double tol) const
    {
        if (modulus_deviation(d) > tol)
            throw std::invalid_argument("ris_phases: entry off the unit circle");
        if (!bits)
            return;
        if (*bits < 1)
            throw std::invalid_argument("ris_phases: bit resolution must be >= 1");
        const double step = two_pi / std::ldexp(1.0, *bits);
        for (Eigen::Index i = 0; i < d.size(); ++i)
        {
            double phase = std::arg(d(i));
            if (phase < 0.0)
                phase += two_pi;
            const double off = std::remainder(phase, step);
            if (std::abs(off) > tol)
                throw std::invalid_argument("ris_phases: phase off the " + std::to_string(*bits) + "-bit grid");
        }
    }

    quadratic_form build_quadratic(const CMatrix &a, const CMatrix &ris_tx, const CMatrix &b)
    {
        const Eigen::Index n = a.rows();
        const Eigen::Index m_ris = a.cols();
        const Eigen::Index m_t = ris_tx.cols();
        if (ris_tx.rows() != m_ris || b.rows() != n || b.cols() != m_t)
            throw std::invalid_argument("build_quadratic: dimension mismatch");

        quadratic_form q;
        q.c.resize(n * m_t, m_ris);
        q.b.resize(n * m_t);
        for (Eigen::Index j = 0; j < m_t; ++j)
        {
            // block j of vec(A diag(d) H) is A diag(H(:, j)) d
            q.c.middleRows(j * n, n) = a * ris_tx.col(j).asDiagonal();
            q.b.segment(j * n, n) = b.col(j);
        }
        return q;
    }

    quadratic_form build_quadratic(const CMatrix &psn, const channel_set &channels)
    {
        if (psn.cols() != channels.rx_tx.rows() || channels.rx_ris.rows() != channels.rx_tx.rows())
            throw std::invalid_argument("build_quadratic: PSN width does not match M_r");
        return build_quadratic(psn * channels.rx_ris, channels.ris_tx, psn * channels.rx_tx);
    }

    double objective(const quadratic_form &q, const CVector &d)
    {
        return (q.c * d + q.b).squaredNorm();
    }

    CVector euclidean_grad(const quadratic_form &q, const CVector &d)
    {
        return q.c.adjoint() * (q.c * d + q.b);
    }

    CVector riemannian_grad(const CVector &d, const CVector &egrad)
    {
        return transport(egrad, d);
    }

    CVector transport(const CVector &v, const CVector &d_new)
    {
        CVector out(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i)
            out(i) = v(i) - (v(i) * std::conj(d_new(i))).real() * d_new(i);
        return out;
    }

    CVector retract(const CVector &t)
    {
        CVector out(t.size());
        for (Eigen::Index i = 0; i < t.size(); ++i)
        {
            const double mag = std::abs(t(i));
            if (mag == 0.0)
                throw retraction_singularity("retract: zero entry at index " + std::to_string(i));
            out(i) = t(i) / mag;
        }
        return out;
    }

    namespace
    {
        double real_inner(const CVector &a, const CVector &b)
        {
            return a.dot(b).real(); // Eigen's dot conjugates the first argument
        }
    }

    rcg_result rcg_minimize(const quadratic_form &q, const CVector &d0, const rcg_settings &settings)
    {
        if (d0.size() != q.variables())
            throw std::invalid_argument("rcg_minimize: initial point has wrong length");
        if (!(settings.tolerance >= 0.0))
            throw std::invalid_argument("rcg_minimize: tolerance must be >= 0");
        if (modulus_deviation(d0) > 1e-9)
            throw std::invalid_argument("rcg_minimize: initial point is not unit modulus");

        rcg_result res;
        CVector d = d0;
        CVector residual = q.c * d + q.b;
        double f = residual.squaredNorm();
        if (!std::isfinite(f))
            throw numerical_failure("rcg_minimize: non-finite objective at the initial point");
        res.trace.push_back(f);

        CVector grad = riemannian_grad(d, q.c.adjoint() * residual);
        CVector dir = -grad;
        bool steepest = true;

        for (int it = 0; it < settings.max_iters; ++it)
        {
            if (f <= settings.target_value)
            {
                res.status = rcg_status::target_reached;
                break;
            }
            const double gnorm2 = grad.squaredNorm();
            if (gnorm2 == 0.0)
            {
                res.status = rcg_status::zero_gradient;
                break;
            }

            rcg_step step;
            step.f_before = f;
            double slope = 2.0 * real_inner(grad, dir);
            if (!(slope < 0.0))
            {
                dir = -grad;
                slope = -2.0 * gnorm2;
                step.restarted = true;
                steepest = true;
            }
            step.slope = slope;
            step.steepest = steepest;

            const CVector cdir = q.c * dir;
            double alpha = settings.initial_step;
            if (settings.init == step_init::quadratic_model)
            {
                const double curvature = cdir.squaredNorm();
                const double guess = -0.5 * slope / curvature;
                if (curvature > 0.0 && std::isfinite(guess) && guess > 0.0)
                    alpha = guess;
            }

            bool accepted = false;
            CVector d_trial;
            CVector r_trial;
            double f_trial = f;
            for (int bt = 0; bt <= settings.max_backtracks; ++bt)
            {
                d_trial = retract(d + alpha * dir);
                r_trial = q.c * d_trial + q.b;
                f_trial = r_trial.squaredNorm();
                ++res.armijo_evaluations;
                if (!std::isfinite(f_trial))
                    throw numerical_failure("rcg_minimize: non-finite objective during line search");
                if (f_trial <= f + settings.armijo_c1 * alpha * slope)
                {
                    accepted = true;
                    step.backtracks = bt;
                    break;
                }
                alpha *= settings.backtrack;
            }
            if (!accepted)
            {
                res.status = rcg_status::line_search_failed;
                break;
            }

            step.alpha = alpha;
            step.f_after = f_trial;
            res.steps.push_back(step);
            ++res.iterations;

            const CVector grad_new = riemannian_grad(d_trial, q.c.adjoint() * r_trial);
            const CVector grad_prev = transport(grad, d_trial);
            const CVector dir_prev = transport(dir, d_trial);
            const double denom = grad_prev.squaredNorm();
            double beta = 0.0;
            if (denom > 0.0)
            {
                if (settings.rule == conjugate_rule::fletcher_reeves)
                    beta = grad_new.squaredNorm() / denom;
                else
                    beta = std::max(0.0, real_inner(grad_new, grad_new - grad_prev) / denom);
            }

            const double improvement = f - f_trial;
            d = d_trial;
            f = f_trial;
            grad = grad_new;
            dir = -grad + beta * dir_prev;
            steepest = beta == 0.0;
            res.trace.push_back(f);

            if (f <= settings.target_value)
            {
                res.status = rcg_status::target_reached;
                break;
            }
            if (improvement < settings.tolerance * step.f_before)
            {
                // a stalled conjugate step restarts along -grad; only a stalled steepest step stops
                if (step.steepest)
                {
                    res.status = rcg_status::converged;
                    break;
                }
                dir = -grad;
                steepest = true;
            }
        }

        res.d = std::move(d);
        return res;
    }

    rcg_result rcg_minimize(const quadratic_form &q, const ris_phases &d0, const rcg_settings &settings)
    {
        return rcg_minimize(q, d0.d, settings);
    }

    void write_trace(std::ostream &out, const std::vector<double> &trace)
    {
        out << "iteration,objective\n";
        char buf[40];
        for (std::size_t i = 0; i < trace.size(); ++i)
        {
            std::snprintf(buf, sizeof buf, "%.9g", trace[i]);
            out << i << ',' << buf << '\n';
        }
    }
}

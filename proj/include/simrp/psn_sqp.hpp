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
#include "simrp/ris_rcg.hpp"
#include "simrp/types.hpp"

#include <iosfwd>
#include <vector>

namespace simrp
{
    // Analog receive phase-shifter network, N_RF x M_r, F = exp(j * phase).
    //
    // The row optimiser works on f_m = conj(F(m, :))^T = exp(j * theta_m), so a
    // row's optimisation phases are the negated entries of 'phase'.
    struct psn_matrix
    {
        CMatrix f;
        RMatrix phase;

        static psn_matrix from_phases(const RMatrix &phase);
        static psn_matrix from_rows(const std::vector<RVector> &row_thetas); // theta_m per row

        Eigen::Index rows() const { return f.rows(); }
        Eigen::Index cols() const { return f.cols(); }
        RVector row_theta(Eigen::Index m) const { return -phase.row(m).transpose(); }

        // Largest |(F F^H)_{ij}|^2 over i != j.
        double max_offdiag_gram() const;
    };

    // G = rx_ris diag(d) ris_tx + rx_tx.
    CMatrix effective_channel(const channel_set &channels, const CVector &d);

    enum class first_row_method
    {
        rcg,  // circle-manifold conjugate gradient on f^H G G^H f
        power // shifted power iteration on (mu I - G G^H) with retraction
    };

    struct sqp_settings
    {
        double omega1 = 0.5;
        double xi = 0.6;
        double tolerance = 1e-5; // relative improvement of g (accepted step and model)
        int max_iters = 200;     // outer iterations per row (accepted + rejected)
        int tcg_max_iters = 0;   // 0: 5 * M_r
        double tcg_forcing = 0.1;
        bool tcg_refine = true;
        double orth_tol_scale = 1e-6;     // eps_orth = orth_tol_scale * M_r^2
        double restore_tol_scale = 1e-14; // restoration target on h, times M_r^2
        int restore_max_iters = 500;
        double jitter = 1e-3;
        double omega_min = 1e-12;
        // Doubling of omega after a step that reached the trust-region boundary and
        // achieved at least expand_ratio of the predicted decrease (0 disables).
        double expand_ratio = 0.75;
        double omega_max = 4.0;
        first_row_method first_row = first_row_method::rcg;
        int power_max_iters = 2000;
        rcg_settings rcg;
        std::uint64_t seed = 0; // jitter stream

        double orth_tolerance(int m_r) const { return orth_tol_scale * m_r * m_r; }
    };

    // Quadratic forms of one row: g = f^H Mg f, h = f^H Mh f with Mg = G G^H and
    // Mh = F_prev^H F_prev. The phase derivatives use E = conj(Mg), J = conj(Mh).
    struct sqp_row_state
    {
        int row = 0;
        RVector theta;
        double omega = 0.5;
        double lambda = 0.0;
        CMatrix e;
        CMatrix j;

        CVector f() const { return unit_phasors(theta); }
        double g_value() const;
        double h_value() const;
    };

    sqp_row_state make_row_state(const CMatrix &g_channel, const CMatrix &f_prev, const RVector &theta, int row = 1);

    // -2 Im((E conj(f)) o f): gradient of f^H conj(E) f with respect to the phases of f.
    RVector phase_gradient(const CMatrix &e, const CVector &f);
    // -2 Re[diag((E conj(f)) o f) - E o (f f^H)].
    RMatrix phase_hessian(const CMatrix &e, const CVector &f);

    struct gh_gradients
    {
        RVector g;
        RVector h;
    };
    gh_gradients grad_g_h(const sqp_row_state &state);

    struct multiplier
    {
        double lambda = 0.0;
        bool degenerate = false; // ||h|| == 0, lambda forced to 0
    };
    multiplier lagrange_multiplier(const RVector &g, const RVector &h);

    // Hessian of the Lagrangian g + lambda h at state.theta (uses state.lambda).
    RMatrix qp_hessian(const sqp_row_state &state);

    // Orthonormal basis of the complement of h (Householder reflector). Throws
    // std::invalid_argument for h == 0.
    RMatrix nullspace_basis(const RVector &h);

    // Minimiser of (gamma ||h||^2 + h_val)^2 subject to |gamma| ||h|| <= xi * omega.
    double gamma_opt(double h_norm, double h_val, double omega, double xi);

    enum class tcg_exit
    {
        converged,         // residual below the forcing threshold
        negative_curvature,
        boundary,
        max_iters,
        zero_gradient
    };

    struct tcg_settings
    {
        int max_iters = 0; // 0: dimension of the problem
        double forcing = 0.1;
        // Also solve the subproblem exactly on the Lanczos basis of the full
        // Krylov space and keep the better of the two points. Plain Steihaug can
        // stop inside the region on an indefinite model.
        bool refine = true;
    };

    struct tcg_result
    {
        RVector x;
        double model = 0.0; // linear^T x + x^T Q x / 2
        int iterations = 0;
        tcg_exit exit = tcg_exit::max_iters;
        bool refined = false;
    };

    // Steihaug-Toint CG for min linear^T x + x^T Q x / 2 s.t. ||x|| <= radius.
    tcg_result tcg_solve(const RMatrix &q, const RVector &linear, double radius, const tcg_settings &settings = {});

    struct sqp_step
    {
        RVector delta; // gamma * h + Z x
        RVector x;
        RMatrix z;
        double gamma = 0.0;
        double h_norm = 0.0;
        double predicted = 0.0; // model change g^T delta + delta^T Q delta / 2
        bool gamma_interior = false;
        bool degenerate = false; // ||h|| == 0: full-space step, gamma = 0
    };

    // One trust-region SQP step proposal at state (state.lambda must be current).
    sqp_step propose_step(const sqp_row_state &state, const gh_gradients &grads, double h_val, double xi,
                          const tcg_settings &tcg);

    struct sqp_trace_entry
    {
        int k = 0;
        double g = 0.0;
        double h = 0.0;
        double omega = 0.0;
        bool accepted = false;
    };

    enum class sqp_exit
    {
        converged,       // accepted improvement below tolerance
        model_converged, // predicted improvement below tolerance
        stalled,         // trust radius underflow
        max_iters
    };

    struct sqp_row_result
    {
        RVector theta;
        double g = 0.0;
        double h = 0.0;
        double g_start = 0.0; // at the (restored) starting point
        double h_start = 0.0;
        std::vector<double> accepted_g; // g_start, then g after every accepted step
        std::vector<sqp_trace_entry> trace;
        int accepted = 0;
        int rejected = 0;
        int jitters = 0;
        bool degenerate_multiplier = false;
        sqp_exit exit = sqp_exit::max_iters;

        bool stalled() const { return exit == sqp_exit::stalled; }
    };

    // Minimises h = ||F_prev f||^2 over unit-modulus f starting from theta.
    RVector restore_orthogonality(const CMatrix &f_prev, const RVector &theta, const sqp_settings &settings);

    // Row m >= 2: min f^H G G^H f subject to F_prev f = 0, f = exp(j theta).
    // f_prev holds the previous PSN rows (F(0..m-2, :)).
    sqp_row_result sqp_row_minimize(const CMatrix &g_channel, const CMatrix &f_prev, const RVector &theta_init,
                                    const sqp_settings &settings);

    struct first_row_result
    {
        CVector f;
        double value = 0.0;
        int iterations = 0;
    };

    first_row_result first_row_minimize(const CMatrix &g_channel, const CVector &f0, const sqp_settings &settings);

    struct psn_result
    {
        psn_matrix psn;
        first_row_result first_row;
        std::vector<sqp_row_result> rows; // rows 2..N_RF
        bool stalled = false;
        bool feasible = true; // every row ended with h <= eps_orth
    };

    // Restores the orthogonality of rows 2..N_RF in order, each against the
    // rows above it (row 1 is kept).
    psn_matrix orthogonalize_rows(const psn_matrix &psn, const sqp_settings &settings);

    // Sequential row optimisation; 'init' supplies the starting phases of every row.
    psn_result optimize_psn(const CMatrix &g_channel, const psn_matrix &init, const sqp_settings &settings);

    // "k,g,h,omega,accepted" lines.
    void write_row_trace(std::ostream &out, const sqp_row_result &row);
}

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
#include "simrp/types.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace simrp
{
    // Unit-modulus RIS coefficients, optionally restricted to a 2^bits phase grid.
    struct ris_phases
    {
        CVector d;
        std::optional<int> bits;

        // Throws std::invalid_argument if an entry leaves the unit circle (or the
        // phase grid when bits is set) by more than tol.
        void validate(double tol = 1e-12) const;
    };

    // f(d) = ||C d + b||^2.
    struct quadratic_form
    {
        CMatrix c;
        CVector b;

        Eigen::Index variables() const { return c.cols(); }
    };

    // C = ris_tx^T (column-wise Khatri-Rao) A with A = F rx_ris, and
    // b = vec(F rx_tx), so that ||A diag(d) ris_tx + B||_F^2 = ||C d + b||^2.
    quadratic_form build_quadratic(const CMatrix &psn, const channel_set &channels);
    quadratic_form build_quadratic(const CMatrix &a, const CMatrix &ris_tx, const CMatrix &b);

    double objective(const quadratic_form &q, const CVector &d);

    // C^H (C d + b): conjugate-Wirtinger gradient; the real gradient is twice this.
    CVector euclidean_grad(const quadratic_form &q, const CVector &d);

    // Projection of a Euclidean gradient onto the tangent space at d.
    CVector riemannian_grad(const CVector &d, const CVector &egrad);

    // v - Re{v o conj(d_new)} o d_new.
    CVector transport(const CVector &v, const CVector &d_new);

    // Entrywise t_k / |t_k|; throws retraction_singularity on a zero entry.
    CVector retract(const CVector &t);

    enum class conjugate_rule
    {
        fletcher_reeves,
        polak_ribiere_plus
    };

    enum class step_init
    {
        quadratic_model, // exact minimiser of f along the ambient line d + a c
        fixed            // always start backtracking from initial_step
    };

    struct rcg_settings
    {
        double tolerance = 1e-5; // stop once f improves by less than tolerance * f in one iteration
        int max_iters = 500;
        double armijo_c1 = 1e-4;
        double backtrack = 0.5;
        double initial_step = 1.0;
        int max_backtracks = 30;
        double target_value = 0.0; // stop as soon as f <= target_value
        conjugate_rule rule = conjugate_rule::fletcher_reeves;
        step_init init = step_init::quadratic_model;
    };

    enum class rcg_status
    {
        converged,          // improvement below tolerance
        zero_gradient,      // Riemannian gradient vanished
        line_search_failed, // no Armijo point within max_backtracks
        target_reached,     // f <= target_value
        max_iters
    };

    struct rcg_step
    {
        double alpha = 0.0;
        double slope = 0.0; // 2 Re<grad, c>, the directional derivative along c
        double f_before = 0.0;
        double f_after = 0.0;
        int backtracks = 0;
        bool restarted = false;
        bool steepest = false; // direction was -grad
    };

    struct rcg_result
    {
        CVector d;
        std::vector<double> trace; // f(d0), then f after every accepted step
        std::vector<rcg_step> steps;
        int iterations = 0;
        int armijo_evaluations = 0;
        rcg_status status = rcg_status::max_iters;

        double value() const { return trace.back(); }
    };

    // Riemannian conjugate gradient on the product of unit circles. Throws
    // numerical_failure if the objective becomes non-finite.
    rcg_result rcg_minimize(const quadratic_form &q, const CVector &d0, const rcg_settings &settings = {});
    rcg_result rcg_minimize(const quadratic_form &q, const ris_phases &d0, const rcg_settings &settings = {});

    // "iteration,objective" lines.
    void write_trace(std::ostream &out, const std::vector<double> &trace);
}

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

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace simrp
{
    using cplx = std::complex<double>;
    using CMatrix = Eigen::MatrixXcd;
    using CVector = Eigen::VectorXcd;
    using RMatrix = Eigen::MatrixXd;
    using RVector = Eigen::VectorXd;
    using Point3 = Eigen::Vector3d;

    inline constexpr double pi = 3.14159265358979323846;
    inline constexpr double two_pi = 2.0 * pi;

    // Two points of a channel model coincide (the near-field gain is singular).
    class degenerate_geometry : public std::domain_error
    {
    public:
        using std::domain_error::domain_error;
    };

    // Retraction onto the unit-modulus manifold hit an exactly zero entry.
    class retraction_singularity : public std::domain_error
    {
    public:
        using std::domain_error::domain_error;
    };

    // An objective or gradient evaluated to NaN/Inf.
    class numerical_failure : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // A matrix required to be full rank is (numerically) rank deficient.
    class rank_deficient : public std::domain_error
    {
    public:
        using std::domain_error::domain_error;
    };

    // Entrywise e^{j*phase}.
    inline CVector unit_phasors(const RVector &phase)
    {
        CVector out(phase.size());
        for (Eigen::Index i = 0; i < phase.size(); ++i)
            out(i) = std::polar(1.0, phase(i));
        return out;
    }

    inline RVector phases_of(const CVector &v)
    {
        RVector out(v.size());
        for (Eigen::Index i = 0; i < v.size(); ++i)
            out(i) = std::arg(v(i));
        return out;
    }

    // Largest | |v_i| - 1 | over all entries.
    inline double modulus_deviation(const CVector &v)
    {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i)
            worst = std::max(worst, std::abs(std::abs(v(i)) - 1.0));
        return worst;
    }
}

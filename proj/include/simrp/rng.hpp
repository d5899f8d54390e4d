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

#include <complex>
#include <cstdint>
#include <random>

namespace simrp
{
    // Independent random streams. Each random quantity of a trial draws from its
    // own stream so adding draws to one consumer never shifts another.
    enum class stream_id : std::uint64_t
    {
        ul_users = 1,
        dl_users = 2,
        perturb_rx_ris = 3,
        perturb_ris_tx = 4,
        ris_init = 5,
        psn_init = 6,
        psn_jitter = 7,
        restart = 8,
        test = 100,
    };

    inline std::uint64_t splitmix64(std::uint64_t x)
    {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    inline std::uint64_t derive_seed(std::uint64_t seed, stream_id id, std::uint64_t index = 0)
    {
        return splitmix64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(id))) + index);
    }

    using rng_engine = std::mt19937_64;

    inline rng_engine make_stream(std::uint64_t seed, stream_id id, std::uint64_t index = 0)
    {
        return rng_engine(derive_seed(seed, id, index));
    }

    inline double uniform(rng_engine &rng, double lo, double hi)
    {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    }

    // Circularly-symmetric complex Gaussian with E|z|^2 = variance.
    inline std::complex<double> complex_gaussian(rng_engine &rng, double variance = 1.0)
    {
        std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
        const double re = n(rng);
        const double im = n(rng);
        return {re, im};
    }
}

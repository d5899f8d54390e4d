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

#include <filesystem>
#include <iosfwd>

namespace simrp
{
    // Text matrix format:
    //   line 1: "<rows> <cols>"
    //   then one line per row, entries separated by a single space, each entry
    //   written as "re,im" with 17 significant digits (round-trips exactly).
    void write_matrix(std::ostream &out, const CMatrix &m);
    CMatrix read_matrix(std::istream &in); // throws std::runtime_error on malformed input

    // Writes rx_tx.txt, rx_ris.txt and ris_tx.txt into dir.
    void dump_self_interference(const channel_set &channels, const std::filesystem::path &dir);
}

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
#include "simrp/matrix_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace simrp
{
    namespace
    {
        std::string format_double(double v)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        double parse_double(const std::string &token)
        {
            std::size_t used = 0;
            double v = 0.0;
            try
            {
                v = std::stod(token, &used);
            }
            catch (const std::exception &)
            {
                used = 0;
            }
            if (used != token.size() || token.empty())
                throw std::runtime_error("read_matrix: bad number '" + token + "'");
            return v;
        }
    }

    void write_matrix(std::ostream &out, const CMatrix &m)
    {
        out << m.rows() << ' ' << m.cols() << '\n';
        for (Eigen::Index i = 0; i < m.rows(); ++i)
        {
            for (Eigen::Index j = 0; j < m.cols(); ++j)
            {
                if (j > 0)
                    out << ' ';
                out << format_double(m(i, j).real()) << ',' << format_double(m(i, j).imag());
            }
            out << '\n';
        }
    }

    CMatrix read_matrix(std::istream &in)
    {
        long rows = -1, cols = -1;
        if (!(in >> rows >> cols) || rows < 0 || cols < 0)
            throw std::runtime_error("read_matrix: bad header");
        CMatrix m(rows, cols);
        for (long i = 0; i < rows; ++i)
            for (long j = 0; j < cols; ++j)
            {
                std::string token;
                if (!(in >> token))
                    throw std::runtime_error("read_matrix: truncated data");
                const auto comma = token.find(',');
                if (comma == std::string::npos)
                    throw std::runtime_error("read_matrix: entry without ',' separator");
                m(i, j) = cplx(parse_double(token.substr(0, comma)), parse_double(token.substr(comma + 1)));
            }
        return m;
    }

    void dump_self_interference(const channel_set &channels, const std::filesystem::path &dir)
    {
        std::filesystem::create_directories(dir);
        auto dump = [&](const char *name, const CMatrix &m) {
            std::ofstream f(dir / name);
            if (!f)
                throw std::runtime_error("cannot write " + (dir / name).string());
            write_matrix(f, m);
        };
        dump("rx_tx.txt", channels.rx_tx);
        dump("rx_ris.txt", channels.rx_ris);
        dump("ris_tx.txt", channels.ris_tx);
    }
}

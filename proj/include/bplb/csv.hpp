// Copyright 2026 The bplb Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Minimal CSV table with fixed numeric formatting.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace bplb
{
    /// 15 significant digits, "nan"/"inf"/"-inf" spelled out.
    inline std::string format_number(double v)
    {
        if (std::isnan(v))
        {
            return "nan";
        }
        if (std::isinf(v))
        {
            return v > 0 ? "inf" : "-inf";
        }
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.15g", v);
        return buf;
    }

    inline std::string format_number(std::uint64_t v) { return std::to_string(v); }

    inline std::string csv_escape(std::string_view s)
    {
        if (s.find_first_of(",\"\n\r") == std::string_view::npos)
        {
            return std::string(s);
        }
        std::string out = "\"";
        for (char c : s)
        {
            if (c == '"')
            {
                out += '"';
            }
            out += c;
        }
        out += '"';
        return out;
    }

    struct CsvTable
    {
        std::vector<std::string> header;
        std::vector<std::vector<std::string>> rows;

        /// Index of a header column, or header.size() when absent.
        std::size_t column(std::string_view name) const
        {
            for (std::size_t i = 0; i < header.size(); ++i)
            {
                if (header[i] == name)
                {
                    return i;
                }
            }
            return header.size();
        }

        const std::string &at(std::size_t row, std::string_view name) const
        {
            return rows.at(row).at(column(name));
        }

        void write(std::ostream &out) const
        {
            auto line = [&](const std::vector<std::string> &cells) {
                for (std::size_t i = 0; i < cells.size(); ++i)
                {
                    if (i > 0)
                    {
                        out << ',';
                    }
                    out << csv_escape(cells[i]);
                }
                out << '\n';
            };
            line(header);
            for (const auto &r : rows)
            {
                line(r);
            }
        }

        std::string str() const
        {
            std::ostringstream os;
            write(os);
            return os.str();
        }
    };
} // namespace bplb

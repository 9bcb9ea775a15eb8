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

#include <cmath>
#include <limits>
#include <span>

namespace bplb
{
    /// Across-replication estimate with a 95% normal-approximation interval.
    struct Estimate
    {
        double mean = 0.0;
        double std_error = 0.0;
        double half_width = 0.0;
        std::size_t samples = 0;
    };

    inline constexpr double normal_quantile_975 = 1.959963984540054;

    inline Estimate summarize(std::span<const double> xs)
    {
        Estimate e;
        e.samples = xs.size();
        if (xs.empty())
        {
            e.mean = std::numeric_limits<double>::quiet_NaN();
            return e;
        }
        double sum = 0.0;
        for (double x : xs)
        {
            sum += x;
        }
        e.mean = sum / static_cast<double>(xs.size());
        if (xs.size() < 2)
        {
            return e;
        }
        double ss = 0.0;
        for (double x : xs)
        {
            ss += (x - e.mean) * (x - e.mean);
        }
        const double var = ss / static_cast<double>(xs.size() - 1);
        e.std_error = std::sqrt(var / static_cast<double>(xs.size()));
        e.half_width = normal_quantile_975 * e.std_error;
        return e;
    }
} // namespace bplb

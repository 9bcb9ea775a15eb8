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

// Shared fixtures for the test suites.

#include "bplb/model.hpp"

#include <vector>

namespace bplb::testing
{
    /// 100 servers at rate 25/9 and 400 at 5/9 behind one port carrying
    /// load * 500 (total capacity is exactly 500).
    inline SystemSpec two_class_system(double load, std::int32_t buffer = 1'000'000)
    {
        return SystemSpec::from_counts({{25.0 / 9.0, 100}, {5.0 / 9.0, 400}}, {load * 500.0}, buffer);
    }

    /// Four equal-sized classes with rates 1, 1/2, 1/4, 1/8 at load 0.9 and
    /// `ports` equal-rate ports.
    inline SystemSpec four_class_system(std::uint32_t n, std::uint32_t ports, std::int32_t buffer = 5)
    {
        const double total = 0.9 * static_cast<double>(n) * 0.25 * (1.0 + 0.5 + 0.25 + 0.125);
        return SystemSpec::from_fractions({{1.0, 0.25}, {0.5, 0.25}, {0.25, 0.25}, {0.125, 0.25}}, n,
                                          std::vector<double>(ports, total / static_cast<double>(ports)), buffer);
    }

    /// Minimal theory record carrying only what the closed-form bound
    /// helpers read.
    inline TheoryParams bare_theory(double tau_1k, double epsilon)
    {
        TheoryParams t;
        t.tau_1K = tau_1k;
        t.epsilon = epsilon;
        return t;
    }
} // namespace bplb::testing

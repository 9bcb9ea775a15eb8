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

#include "bplb/rng.hpp"
#include "bplb/service.hpp"
#include "bplb/stats.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace bplb;
using Catch::Approx;

TEST_CASE("hyper-exponential moments in closed form")
{
    const auto h = ServiceModel::reference_hyperexponential();
    CHECK(h.base_mean() == Approx(0.01 / 0.01 + 0.99 / 1.0));
    CHECK(h.base_mean() == Approx(1.99));
    CHECK(h.base_second_moment() == Approx(0.01 * 2 * 100.0 * 100.0 + 0.99 * 2));
    CHECK(h.base_second_moment() == Approx(201.98));
    CHECK(h.base_cv() == Approx(std::sqrt(201.98 / (1.99 * 1.99) - 1.0)));
    CHECK(h.base_cv() == Approx(7.071).margin(0.001));
    CHECK(ServiceModel::exponential().base_cv() == Approx(1.0));
}

TEST_CASE("hyper-exponential sample mean")
{
    const auto h = ServiceModel::reference_hyperexponential();
    Rng rng(1);
    double sum = 0.0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i)
    {
        sum += h.sample_base(rng);
    }
    CHECK(std::abs(sum / n - 1.99) < 0.005 * 1.99);
}

TEST_CASE("class service times scale to the nominal rate")
{
    const auto h = ServiceModel::reference_hyperexponential();
    const auto e = ServiceModel::exponential();
    Rng rng(2);
    double he = 0.0;
    double ex = 0.0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i)
    {
        he += h.sample(2.0, rng);
        ex += e.sample(2.0, rng);
    }
    CHECK(std::abs(ex / n - 0.5) < 0.005 * 0.5);
    CHECK(std::abs(he / n - 0.5) < 0.02 * 0.5);
}

TEST_CASE("hyper-exponential validation")
{
    CHECK_THROWS_AS(ServiceModel::hyperexponential({}), ConfigError);
    CHECK_THROWS_AS(ServiceModel::hyperexponential({{0.5, 1.0}}), ConfigError);
    CHECK_THROWS_AS(ServiceModel::hyperexponential({{0.5, 1.0}, {0.5, 0.0}}), ConfigError);
    const auto one = ServiceModel::hyperexponential({{1.0, 4.0}});
    CHECK(one.base_mean() == Approx(0.25));
    CHECK(one.base_cv() == Approx(1.0));
}

TEST_CASE("rng is reproducible and its helpers are calibrated")
{
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 1000; ++i)
    {
        REQUIRE(a() == b());
    }
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));

    Rng rng(7);
    const int n = 200000;
    std::vector<int> counts(7, 0);
    double u = 0.0;
    double e = 0.0;
    for (int i = 0; i < n; ++i)
    {
        const auto k = rng.below(7);
        REQUIRE(k < 7);
        counts[k]++;
        const double x = rng.uniform();
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
        u += x;
        e += rng.exponential(4.0);
    }
    for (int c : counts)
    {
        CHECK(std::abs(c - n / 7.0) < 5 * std::sqrt(n / 7.0));
    }
    CHECK(u / n == Approx(0.5).margin(0.005));
    CHECK(e / n == Approx(0.25).margin(0.003));
    CHECK(rng.uniform_open_zero() > 0.0);
}

TEST_CASE("normal-approximation summaries")
{
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    const auto s = summarize(xs);
    CHECK(s.mean == Approx(2.5));
    const double sd = std::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 3.0);
    CHECK(s.std_error == Approx(sd / 2.0));
    CHECK(s.half_width == Approx(1.959963984540054 * sd / 2.0));
    CHECK(s.samples == 4);
    const std::vector<double> same{3.0, 3.0};
    CHECK(summarize(same).half_width == 0.0);
}

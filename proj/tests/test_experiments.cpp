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


#include "bplb/experiments.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

using namespace bplb;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace
{
    // Mean service time when arrivals fill the fastest servers first:
    // every unit of load sent to a class costs 1/rate.
    double greedy_service_time(std::vector<std::pair<double, double>> rate_capacity, double lambda)
    {
        std::sort(rate_capacity.begin(), rate_capacity.end(), [](auto a, auto b) { return a.first > b.first; });
        double left = lambda;
        double time = 0.0;
        for (auto [rate, cap] : rate_capacity)
        {
            const double take = std::min(left, cap);
            time += take / rate;
            left -= take;
        }
        return time / lambda;
    }

    const char *four_class_classes = R"([
        {"rate": 1.0, "fraction": 0.25}, {"rate": 0.5, "fraction": 0.25},
        {"rate": 0.25, "fraction": 0.25}, {"rate": 0.125, "fraction": 0.25}])";

    ExperimentConfig small_sweep(const std::string &loads = "[0.7, 0.3]", const std::string &extra = "")
    {
        return parse_config_text(R"({
            "seed": 11,
            "system": {
                "classes": [{"rate": 2.0, "count": 2}, {"rate": 1.0, "count": 3}],
                "ports": {"count": 2, "load": 0.5},
                "buffer": 4
            },
            "policies": ["jiq", "jfsq"],
            "simulation": {"horizon_arrivals": 20000, "replications": 2, "workers": 1})" +
                                 extra + R"(,
            "sweep": {"loads": )" + loads + R"(}
        })");
    }
} // namespace

TEST_CASE("bounds on the two-class system follow the greedy fill", "[experiments]")
{
    auto c = parse_config_text("{}");
    c.sweep.loads = {0.3, 0.5, 0.6, 0.9, 0.98};
    const auto t = cmd_bounds(c);
    REQUIRE(t.rows.size() == 5);
    const std::vector<std::pair<double, double>> classes{{25.0 / 9.0, 100 * 25.0 / 9.0}, {5.0 / 9.0, 400 * 5.0 / 9.0}};
    for (std::size_t i = 0; i < t.rows.size(); ++i)
    {
        const double load = c.sweep.loads[i];
        CHECK(std::stod(t.at(i, "load")) == Approx(load));
        CHECK(std::stod(t.at(i, "service_time_lb")) == Approx(greedy_service_time(classes, load * 500.0)));
        CHECK(t.at(i, "K") == (load * 500.0 < 100 * 25.0 / 9.0 ? "1" : "2"));
    }
    CHECK(std::stod(t.at(3, "c_star")) == Approx(0.82));
    CHECK(std::stod(t.at(3, "service_time_lb")) == Approx(0.9111111111111111));
    CHECK(t.column("seed") < t.header.size());
    CHECK(t.at(0, "version") == version_string());
}

TEST_CASE("bounds on the four-class system", "[experiments]")
{
    const auto c = parse_config_text(std::string(R"({"system": {"classes": )") + four_class_classes +
                                     R"(, "servers": 128, "ports": {"exponent": 1.5, "load": 0.9}}})");
    const auto t = cmd_bounds(c);
    REQUIRE(t.rows.size() == 1);
    const double n = 128;
    const double lambda = 0.9 * n * 0.25 * (1 + 0.5 + 0.25 + 0.125);
    const double lb = greedy_service_time({{1.0, n / 4}, {0.5, n / 8}, {0.25, n / 16}, {0.125, n / 32}}, lambda);
    CHECK(std::stod(t.at(0, "service_time_lb")) == Approx(lb));
    CHECK(std::stod(t.at(0, "service_time_lb")) == Approx(1.6296296296296));
    CHECK(t.at(0, "K") == "3");
    CHECK(t.at(0, "num_ports") == std::to_string(static_cast<int>(std::lround(std::pow(128.0, 1.5)))));
}

TEST_CASE("bounds refuse loads at or above capacity", "[experiments]")
{
    auto c = parse_config_text("{}");
    c.sweep.loads = {0.5, 1.0};
    CHECK_THROWS_WITH(cmd_bounds(c), ContainsSubstring("insufficient capacity"));
}

TEST_CASE("system construction from the config", "[experiments]")
{
    auto c = parse_config_text(std::string(R"({"system": {"classes": )") + four_class_classes +
                               R"(, "ports": {"count": 3, "total_rate": 6}}})");
    CHECK_THROWS_AS(build_spec(c), ConfigError);
    const auto spec = build_spec(c, {std::nullopt, 16u});
    CHECK(spec.num_servers() == 16);
    CHECK(spec.num_ports() == 3);
    CHECK(spec.total_arrival_rate() == Approx(6.0));

    const auto counts = small_sweep();
    CHECK(build_spec(counts).num_servers() == 5);
    CHECK_THROWS_AS(build_spec(counts, {std::nullopt, 6u}), ConfigError);
    const auto swept = build_spec(counts, {0.8, std::nullopt});
    CHECK(system_load(swept) == Approx(0.8));

    auto rates = parse_config_text(R"({"system": {"classes": [{"rate": 1, "count": 4}],
                                                   "ports": {"rates": [1.0, 0.5]}}})");
    CHECK(build_spec(rates).port_rates()[1] == Approx(0.5));
    const auto rescaled = build_spec(rates, {0.75, std::nullopt});
    CHECK(rescaled.port_rates()[0] == Approx(2.0));
    CHECK(rescaled.port_rates()[1] == Approx(1.0));
}

TEST_CASE("sweep-load rows are ordered and well formed", "[experiments]")
{
    const auto t = cmd_sweep_load(small_sweep());
    REQUIRE(t.rows.size() == 4);
    const std::vector<std::pair<std::string, std::string>> order{
        {"0.3", "jfsq"}, {"0.3", "jiq"}, {"0.7", "jfsq"}, {"0.7", "jiq"}};
    for (std::size_t i = 0; i < order.size(); ++i)
    {
        CHECK(std::stod(t.at(i, "load")) == Approx(std::stod(order[i].first)));
        CHECK(t.at(i, "policy") == order[i].second);
        CHECK(t.at(i, "error").empty());
        CHECK(t.at(i, "replications") == "2");
        CHECK(t.at(i, "horizon_arrivals") == "20000");
        CHECK(std::stod(t.at(i, "littles_residual")) < 0.05);
        CHECK(!t.at(i, "lower_bound").empty());
        CHECK(t.rows[i].size() == t.header.size());
    }
    CHECK(t.header.back() == "version");
    CHECK(t.at(0, "seed") == "11");
    CHECK(t.at(0, "config_hash") == config_hash(small_sweep()));

    CHECK_THROWS_AS(cmd_sweep_load(parse_config_text(R"({"system": {"classes": [{"rate": 1, "count": 1}],
                                                         "ports": {"count": 1, "load": 0.5}}})")),
                    ConfigError);
}

TEST_CASE("reruns are byte-identical regardless of worker count", "[experiments]")
{
    const auto a = cmd_sweep_load(small_sweep()).str();
    const auto b = cmd_sweep_load(small_sweep()).str();
    CHECK(a == b);
    auto parallel = small_sweep();
    parallel.simulation.workers = 3;
    CHECK(cmd_sweep_load(parallel).str() == a);
    auto reseeded = small_sweep();
    reseeded.seed = 12;
    CHECK(cmd_sweep_load(reseeded).str() != a);
}

TEST_CASE("a point's results do not depend on the rest of the grid", "[experiments]")
{
    const auto both = cmd_sweep_load(small_sweep("[0.3, 0.7]"));
    const auto alone = cmd_sweep_load(small_sweep("[0.7]"));
    REQUIRE(alone.rows.size() == 2);
    for (const char *col : {"mean_response", "blocking_prob", "admitted", "blocked"})
    {
        CHECK(both.at(2, col) == alone.at(0, col));
        CHECK(both.at(3, col) == alone.at(1, col));
    }
}

TEST_CASE("a failing policy marks only its own row", "[experiments]")
{
    auto c = parse_config_text(std::string(R"({"system": {"classes": )") + four_class_classes +
                               R"(, "servers": 8, "ports": {"count": 1, "load": 0.5}},
                                  "policies": ["jsq22", "jfsq"],
                                  "simulation": {"horizon_arrivals": 5000, "replications": 2}})");
    const auto t = cmd_simulate(c);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.at(0, "policy") == "jfsq");
    CHECK(t.at(0, "error").empty());
    CHECK(t.at(1, "policy") == "jsq22");
    CHECK_THAT(t.at(1, "error"), ContainsSubstring("JSQ-(2,2)"));
    CHECK(t.at(1, "mean_response").empty());
}

TEST_CASE("overloaded finite-buffer systems simulate without a bound", "[experiments]")
{
    const auto c = parse_config_text(R"({"system": {"classes": [{"rate": 1, "count": 1}],
                                                     "ports": {"count": 1, "total_rate": 2}, "buffer": 3},
                                         "simulation": {"horizon_arrivals": 20000, "replications": 2}})");
    const auto t = cmd_simulate(c);
    CHECK(t.at(0, "error").empty());
    CHECK(t.at(0, "lower_bound").empty());
    CHECK(std::stod(t.at(0, "blocking_prob")) > 0.4);
}

TEST_CASE("scale smoke run on the random topology", "[experiments]")
{
    const auto c = parse_config_text(std::string(R"({"system": {"classes": )") + four_class_classes +
                                     R"(, "servers": 128, "ports": {"exponent": 1.5, "load": 0.9}},
                                        "topology": {"kind": "sim-random"},
                                        "policies": ["jfsq"],
                                        "simulation": {"horizon_arrivals": 20000, "replications": 2},
                                        "sweep": {"servers": [128]},
                                        "check": {"trials": 20}})");
    const auto t = cmd_scale(c);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.at(0, "error").empty());
    CHECK(t.at(0, "num_ports") == "1448");
    CHECK(t.at(0, "topology") == "sim-random");
    CHECK_THAT(t.at(0, "assumption2"), ContainsSubstring("sampled:"));
    CHECK(std::stod(t.at(0, "gap")) > -0.05);
    CHECK(cmd_scale(c).str() == t.str());
}

TEST_CASE("default horizons", "[experiments]")
{
    auto c = parse_config_text(std::string(R"({"system": {"classes": )") + four_class_classes +
                               R"(, "servers": 64, "ports": {"count": 1, "load": 0.5}},
                                  "sweep": {"servers": [64, 1024],
                                            "overrides": [{"at": 64, "horizon_arrivals": 777, "replications": 3}]}})");
    const auto small = build_spec(c, {std::nullopt, 64u});
    const auto big = build_spec(c, {std::nullopt, 1024u});
    CHECK(effective_horizon(c, {{std::nullopt, 64u}, PolicyKind::jfsq, true}, small) == 777);
    CHECK(effective_replications(c, {std::nullopt, 64u}) == 3);
    CHECK(effective_horizon(c, {{std::nullopt, 1024u}, PolicyKind::jfsq, true}, big) == 2'000'000);
    CHECK(effective_horizon(c, {{std::nullopt, 1024u}, PolicyKind::jfsq, false}, big) == 1'000'000);
    CHECK(effective_replications(c, {std::nullopt, 1024u}) == 10);
    c.simulation.horizon_arrivals = 5;
    CHECK(effective_horizon(c, {{std::nullopt, 1024u}, PolicyKind::jfsq, true}, big) == 5);
}

TEST_CASE("exact command on single-server chains", "[experiments]")
{
    // M/M/1/b: pi_k proportional to rho^k.
    const auto oracle = [](double rho, int b) {
        double z = 0.0;
        double jobs = 0.0;
        for (int k = 0; k <= b; ++k)
        {
            z += std::pow(rho, k);
            jobs += k * std::pow(rho, k);
        }
        return std::pair{std::pow(rho, b) / z, jobs / z};
    };
    for (auto [rho, b] : {std::pair{0.5, 1}, std::pair{0.8, 5}, std::pair{1.5, 3}})
    {
        auto c = parse_config_text(R"({"system": {"classes": [{"rate": 1, "count": 1}],
                                                   "ports": {"count": 1, "total_rate": )" +
                                   format_number(rho) + R"(}, "buffer": )" + std::to_string(b) +
                                   R"(}, "policies": ["jfsq", "jsq"]})");
        std::ostringstream pi;
        const auto t = cmd_exact(c, &pi);
        REQUIRE(t.rows.size() == 2);
        const auto [blocking, jobs] = oracle(rho, b);
        for (std::size_t i = 0; i < 2; ++i)
        {
            CHECK(t.at(i, "error").empty());
            CHECK(t.at(i, "states") == std::to_string(b + 1));
            CHECK(std::stod(t.at(i, "blocking_prob")) == Approx(blocking).epsilon(1e-9));
            CHECK(std::stod(t.at(i, "mean_jobs_scaled")) == Approx(jobs).epsilon(1e-9));
            CHECK(std::stod(t.at(i, "mean_response")) == Approx(jobs / (rho * (1 - blocking))).epsilon(1e-9));
            CHECK(std::stod(t.at(i, "residual")) < 1e-10);
        }
        CHECK(t.at(0, "lower_bound").empty() == (rho >= 1.0));
        CHECK(!pi.str().empty());
    }
}

TEST_CASE("exact command reports budget failures per row", "[experiments]")
{
    auto c = parse_config_text(R"({"system": {"classes": [{"rate": 1, "count": 6}],
                                               "ports": {"count": 1, "load": 0.5}, "buffer": 5},
                                   "exact": {"state_budget": 10}})");
    const auto t = cmd_exact(c);
    REQUIRE(t.rows.size() == 1);
    CHECK(!t.at(0, "error").empty());
}

TEST_CASE("generated graphs round-trip and pass the exact check", "[experiments]")
{
    const auto c = parse_config_text(std::string(R"({"seed": 5, "system": {"classes": )") + four_class_classes +
                                     R"(, "servers": 12, "ports": {"count": 12, "load": 0.9}},
                                        "topology": {"kind": "thm34"},
                                        "check": {"method": "exact"}})");
    const auto g = cmd_gen_graph(c);
    CHECK(g.num_ports() == 12);
    CHECK(g.num_servers() == 12);
    CHECK(graph_from_string(graph_to_string(g)) == g);
    CHECK(cmd_gen_graph(c) == g);

    const auto out = check_graph(c, g);
    CHECK(out.report.method == CheckMethod::exact);
    REQUIRE(out.table.rows.size() == 2);
    CHECK(out.table.at(0, "method") == "exact");
    CHECK(out.table.at(0, "ok") == (out.report.condition1.ok ? "true" : "false"));
    CHECK_THAT(out.text, ContainsSubstring("condition 2"));
}

TEST_CASE("the complete graph has no deficiency", "[experiments]")
{
    auto c = parse_config_text(std::string(R"({"system": {"classes": )") + four_class_classes +
                               R"(, "servers": 12, "ports": {"count": 12, "load": 0.9}},
                                  "check": {"method": "exact"}})");
    const auto out = cmd_check_graph(c);
    CHECK(out.report.ok());
    CHECK(std::stod(out.table.at(0, "worst_deficiency")) == 0.0);
    CHECK(std::stod(out.table.at(1, "worst_deficiency")) == 0.0);
}

TEST_CASE("automatic checks fall back to sampling over budget", "[experiments]")
{
    auto c = parse_config_text(std::string(R"({"system": {"classes": )") + four_class_classes +
                               R"(, "servers": 12, "ports": {"count": 12, "load": 0.9}},
                                  "check": {"budget": 1, "trials": 30}})");
    const auto out = cmd_check_graph(c);
    CHECK(out.report.method == CheckMethod::sampled);
    CHECK(out.table.at(0, "method") == "sampled");
    CHECK_THAT(out.text, ContainsSubstring("over budget"));

    c.check.method = CheckConfig::Method::exact;
    CHECK_THROWS_AS(cmd_check_graph(c), RuntimeError);
}

TEST_CASE("trace output", "[experiments]")
{
    const auto c = parse_config_text(R"({"system": {"classes": [{"rate": 1, "count": 2}],
                                                     "ports": {"count": 1, "total_rate": 1.5}, "buffer": 2},
                                         "simulation": {"horizon_arrivals": 200, "replications": 2}})");
    std::ostringstream os;
    write_trace(c, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "time,event_type,server,port,queue_after");
    std::size_t events = 0;
    double last = 0.0;
    while (std::getline(is, line))
    {
        ++events;
        CHECK(std::count(line.begin(), line.end(), ',') == 4);
        const double t = std::stod(line.substr(0, line.find(',')));
        CHECK(t >= last);
        last = t;
    }
    CHECK(events >= 200);
    std::ostringstream again;
    write_trace(c, again);
    CHECK(again.str() == os.str());
}

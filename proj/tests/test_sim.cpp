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

#include "fixtures.hpp"

#include "bplb/bipartite_graph.hpp"
#include "bplb/graph.hpp"
#include "bplb/sim.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace bplb;
using Catch::Approx;

namespace
{
    // Stationary blocking of the M/M/1/b birth-death chain.
    double mm1b_blocking(double rho, int b)
    {
        return (1 - rho) * std::pow(rho, b) / (1 - std::pow(rho, b + 1));
    }

    SystemSpec mm1b(double lambda, std::int32_t b)
    {
        return SystemSpec::from_counts({{1.0, 1}}, {lambda}, b);
    }

    SimOptions options(PolicyKind p, std::uint64_t arrivals, std::uint64_t seed)
    {
        SimOptions o;
        o.policy = p;
        o.horizon = Horizon::by_arrivals(arrivals);
        o.seed = seed;
        return o;
    }

    // Replays a trace from the empty state, checking bounds and consistency.
    void replay(const SystemSpec &spec, const BipartiteGraph &g, const std::vector<TraceEvent> &trace,
                bool work_conserving)
    {
        std::vector<std::int32_t> q(spec.num_servers(), 0);
        double last = 0.0;
        for (const auto &e : trace)
        {
            REQUIRE(e.time >= last);
            last = e.time;
            switch (e.type)
            {
            case EventType::arrival:
                REQUIRE(g.has_edge(e.port, e.server));
                ++q[e.server];
                REQUIRE(q[e.server] <= spec.buffer());
                REQUIRE(e.queue_after == q[e.server]);
                break;
            case EventType::departure:
                --q[e.server];
                REQUIRE(q[e.server] >= 0);
                REQUIRE(e.queue_after == q[e.server]);
                break;
            case EventType::blocked:
                REQUIRE(e.server == no_index);
                if (work_conserving)
                {
                    for (auto r : g.port_neighbors(e.port))
                    {
                        REQUIRE(q[r] == spec.buffer());
                    }
                }
                break;
            }
        }
    }
} // namespace

TEST_CASE("M/M/1/5 blocking matches the birth-death formula")
{
    const double expected = mm1b_blocking(0.8, 5);
    CHECK(expected == Approx(0.08882).margin(5e-6));
    const auto spec = mm1b(0.8, 5);
    const auto g = BipartiteGraph::fully_connected(1, 1);
    for (auto p : {PolicyKind::jfsq, PolicyKind::jiq})
    {
        const auto r = simulate(spec, g, options(p, 1'000'000, 3));
        CHECK(std::abs(r.metrics.blocking_prob - expected) < 0.005);
        CHECK(r.metrics.littles_residual < 0.01);
        CHECK(r.metrics.blocking_prob ==
              Approx(double(r.metrics.blocked) / double(r.metrics.admitted + r.metrics.blocked)));
    }
}

TEST_CASE("M/M/1/b mean jobs matches the birth-death formula")
{
    const double rho = 0.6;
    const int b = 4;
    double norm = 0.0;
    double mean = 0.0;
    for (int k = 0; k <= b; ++k)
    {
        norm += std::pow(rho, k);
        mean += k * std::pow(rho, k);
    }
    const auto r = simulate(mm1b(rho, b), BipartiteGraph::fully_connected(1, 1),
                            options(PolicyKind::jfsq, 1'000'000, 5));
    CHECK(r.metrics.mean_jobs_scaled == Approx(mean / norm).epsilon(0.02));
    CHECK(r.metrics.per_class_jobs.size() == 1);
    CHECK(r.metrics.per_class_jobs[0] == r.metrics.mean_jobs_scaled);
}

TEST_CASE("identical seeds give identical metrics, different seeds do not")
{
    const auto spec = testing::two_class_system(0.7);
    const auto g = BipartiteGraph::fully_connected(1, 500);
    const auto a = simulate(spec, g, options(PolicyKind::jfiq, 100'000, 9)).metrics;
    const auto b = simulate(spec, g, options(PolicyKind::jfiq, 100'000, 9)).metrics;
    const auto c = simulate(spec, g, options(PolicyKind::jfiq, 100'000, 10)).metrics;
    CHECK(a == b);
    CHECK_FALSE(a == c);
}

TEST_CASE("single class: JFSQ and JSQ traces coincide")
{
    const auto spec = SystemSpec::from_counts({{1.0, 8}}, {7.0}, 3);
    const auto g = BipartiteGraph::fully_connected(1, 8);
    for (bool scan : {false, true})
    {
        auto o = options(PolicyKind::jfsq, 60'000, 17);
        o.capture_trace = true;
        o.force_neighbor_scan = scan;
        const auto a = simulate(spec, g, o);
        o.policy = PolicyKind::jsq;
        const auto b = simulate(spec, g, o);
        REQUIRE(a.trace.size() >= 100'000);
        CHECK(a.trace == b.trace);
        CHECK(a.metrics == b.metrics);
    }
}

TEST_CASE("traces respect buffers, neighborhoods and work conservation")
{
    Rng rng(4);
    const auto spec = SystemSpec::from_counts({{3.0, 4}, {1.0, 6}}, {2.0, 3.0, 4.0, 3.5}, 3);
    const auto g = generate_sim_random(10, 4, 0.9, 8);
    for (auto p : {PolicyKind::jfsq, PolicyKind::jsq, PolicyKind::jfiq, PolicyKind::jiq, PolicyKind::random})
    {
        auto o = options(p, 20'000, rng());
        o.capture_trace = true;
        const auto r = simulate(spec, g, o);
        replay(spec, g, r.trace, p == PolicyKind::jfsq || p == PolicyKind::jsq);
        CHECK(r.metrics.events > 0);
    }
}

TEST_CASE("complete-graph fast path agrees in law with neighbor scans")
{
    const auto spec = SystemSpec::from_counts({{2.0, 5}, {1.0, 10}}, {9.0, 9.0}, 3);
    const auto g = BipartiteGraph::fully_connected(2, 15);
    for (auto p : {PolicyKind::jfsq, PolicyKind::jfiq, PolicyKind::jsq, PolicyKind::jiq, PolicyKind::random})
    {
        ReplicationOptions rep;
        rep.replications = 10;
        rep.base_seed = 100;
        auto o = options(p, 100'000, 0);
        const auto fast = simulate_replications(spec, g, o, rep);
        o.force_neighbor_scan = true;
        rep.base_seed = 200;
        const auto scan = simulate_replications(spec, g, o, rep);
        const double se_jobs = std::hypot(fast.mean_jobs_scaled.std_error, scan.mean_jobs_scaled.std_error);
        const double se_block = std::hypot(fast.blocking_prob.std_error, scan.blocking_prob.std_error);
        CHECK(std::abs(fast.mean_jobs_scaled.mean - scan.mean_jobs_scaled.mean) < 4 * se_jobs + 1e-12);
        CHECK(std::abs(fast.blocking_prob.mean - scan.blocking_prob.mean) < 4 * se_block + 1e-12);
    }
}

TEST_CASE("light traffic: response time tends to the fast service time")
{
    const auto spec = testing::two_class_system(0.01);
    const auto g = BipartiteGraph::fully_connected(1, 500);
    const auto r = simulate(spec, g, options(PolicyKind::jfsq, 200'000, 2)).metrics;
    CHECK(r.mean_response == Approx(0.36).epsilon(0.01));
    CHECK(r.blocked == 0);
}

TEST_CASE("hyper-exponential light traffic keeps the nominal mean")
{
    const auto spec = SystemSpec::from_counts({{1.0, 200}}, {2.0}, 5);
    const auto g = BipartiteGraph::fully_connected(1, 200);
    auto o = options(PolicyKind::jfiq, 400'000, 6);
    o.service = ServiceModel::reference_hyperexponential();
    const auto r = simulate(spec, g, o).metrics;
    CHECK(r.mean_response == Approx(1.0).epsilon(0.05));
}

TEST_CASE("time horizon and warmup")
{
    const auto spec = mm1b(0.5, 3);
    const auto g = BipartiteGraph::fully_connected(1, 1);
    SimOptions o;
    o.horizon = Horizon::by_time(10'000.0);
    o.warmup_fraction = 0.25;
    const auto r = simulate(spec, g, o);
    CHECK(r.measure_start == 2500.0);
    CHECK(r.measure_end == 10'000.0);
    CHECK(r.metrics.measured_time == Approx(7500.0));
    CHECK(r.metrics.admitted + r.metrics.blocked == Approx(0.5 * 7500).epsilon(0.1));

    o.warmup_fraction = 0.95;
    CHECK_THROWS_AS(simulate(spec, g, o), ConfigError);
    o.warmup_fraction = 0.2;
    o.horizon = Horizon::by_time(1e-9);
    CHECK_THROWS_WITH(simulate(spec, g, o), "no samples");
}

TEST_CASE("JSQ-(2,2) needs a complete two-class system")
{
    const auto spec = SystemSpec::from_counts({{1.0, 4}}, {1.0}, 3);
    CHECK_THROWS_WITH(simulate(spec, BipartiteGraph::fully_connected(1, 4), options(PolicyKind::jsq22, 10, 1)),
                      "JSQ-(2,2) undefined for this topology");
    const auto two = SystemSpec::from_counts({{2.0, 2}, {1.0, 2}}, {1.0}, 3);
    CHECK_THROWS_WITH(simulate(two, BipartiteGraph::from_port_lists(4, {{0, 1, 2}}), options(PolicyKind::jsq22, 10, 1)),
                      "JSQ-(2,2) undefined for this topology");
    CHECK_NOTHROW(simulate(two, BipartiteGraph::fully_connected(1, 4), options(PolicyKind::jsq22, 1000, 1)));
}

TEST_CASE("replications: CLT scaling, identical seeds, pooled counts")
{
    const auto spec = mm1b(0.8, 5);
    const auto g = BipartiteGraph::fully_connected(1, 1);
    const auto o = options(PolicyKind::jfsq, 100'000, 0);
    ReplicationOptions rep;
    rep.base_seed = 77;
    rep.replications = 10;
    const auto r10 = simulate_replications(spec, g, o, rep);
    rep.replications = 20;
    const auto r20 = simulate_replications(spec, g, o, rep);
    const double ratio = r10.blocking_prob.half_width / r20.blocking_prob.half_width;
    CHECK(ratio > std::sqrt(2.0) * 0.7);
    CHECK(ratio < std::sqrt(2.0) * 1.3);

    std::uint64_t blocked = 0;
    std::uint64_t admitted = 0;
    for (const auto &m : r20.runs)
    {
        blocked += m.blocked;
        admitted += m.admitted;
    }
    CHECK(r20.blocked == blocked);
    CHECK(r20.admitted == admitted);

    rep.replications = 2;
    rep.identical_seeds = true;
    const auto same = simulate_replications(spec, g, o, rep);
    CHECK(same.mean_response.half_width == 0.0);
    CHECK(same.blocking_prob.half_width == 0.0);

    rep.replications = 1;
    CHECK_THROWS_AS(simulate_replications(spec, g, o, rep), ConfigError);
}

TEST_CASE("replication results do not depend on the worker count")
{
    const auto spec = testing::four_class_system(64, 64);
    const auto theory = derive_theory(spec);
    const auto o = options(PolicyKind::jfiq, 20'000, 0);
    ReplicationOptions rep;
    rep.replications = 6;
    rep.base_seed = 5;
    const auto factory = [&](std::uint64_t s) { return generate_homogeneous(spec, theory, s); };
    rep.workers = 1;
    const auto seq = simulate_replications(spec, factory, o, rep);
    rep.workers = 4;
    const auto par = simulate_replications(spec, factory, o, rep);
    REQUIRE(seq.runs.size() == par.runs.size());
    for (std::size_t i = 0; i < seq.runs.size(); ++i)
    {
        CHECK(seq.runs[i] == par.runs[i]);
    }
    CHECK(seq.mean_response.mean == par.mean_response.mean);
}

TEST_CASE("Lyapunov values at simple states")
{
    const auto spec = testing::four_class_system(64, 64);
    const auto t = derive_theory(spec);
    REQUIRE(t.K == 3);
    ClassOccupancy empty{{0, 0, 0, 0}, {0, 0, 0, 0}};
    const auto v = lyapunov_values(empty, t);
    CHECK(v.v1 == 0.0);
    CHECK(v.v3 == 0.0);
    CHECK(v.v2 == 0.0);

    // Every server of classes < K holds exactly one job, class K idle.
    ClassOccupancy one{{16, 16, 0, 0}, {16, 16, 0, 0}};
    const auto w = lyapunov_values(one, t);
    CHECK(w.v1 == Approx(0.0).margin(1e-15));

    ClassOccupancy slow{{0, 0, 0, 8}, {0, 0, 0, 8}};
    CHECK(lyapunov_values(slow, t).v3 == Approx(8.0 / 64));
}

TEST_CASE("Lyapunov replay matches an independent occupancy reconstruction")
{
    const auto spec = testing::four_class_system(32, 32);
    const auto t = derive_theory(spec);
    const auto g = BipartiteGraph::fully_connected(32, 32);
    auto o = options(PolicyKind::jfsq, 20'000, 3);
    o.capture_trace = true;
    o.theory = t;
    const auto r = simulate(spec, g, o);
    const auto replayed = lyapunov_trace(r.trace, t, spec, r.measure_start, r.measure_end, true);
    REQUIRE(r.metrics.lyapunov.has_value());
    CHECK(r.metrics.lyapunov->v1 == replayed.tails.v1);
    CHECK(replayed.tails.v3_identically_zero == false);

    // Independent reconstruction from per-server queues at every event.
    std::vector<std::int32_t> q(32, 0);
    double weighted_v1 = 0.0;
    double total = 0.0;
    double t_prev = 0.0;
    std::size_t sample = 0;
    for (const auto &e : r.trace)
    {
        const double lo = std::max(t_prev, r.measure_start);
        const double hi = std::min(e.time, r.measure_end);
        if (hi > lo)
        {
            // s_{m,i}: fraction of all servers of class m with queue >= i
            double sk_all = 0.0, fast_busy = 0.0, fast_tail = 0.0;
            for (std::uint32_t s = 0; s < 32; ++s)
            {
                const auto m = spec.class_of(s);
                for (int i = 1; i <= q[s]; ++i)
                {
                    if (m == 2)
                    {
                        sk_all += 1.0 / 32;
                    }
                    else if (m < 2)
                    {
                        (i == 1 ? fast_busy : fast_tail) += 1.0 / 32;
                    }
                }
            }
            const double cstar_fast = t.c_star_per_class[0] + t.c_star_per_class[1];
            const double v1 = std::min(sk_all + fast_tail, cstar_fast - fast_busy);
            REQUIRE(sample < replayed.series.size());
            CHECK(replayed.series[sample].v1 == Approx(v1).margin(1e-12));
            ++sample;
            total += hi - lo;
            weighted_v1 += (v1 >= replayed.tails.v1_threshold) * (hi - lo);
        }
        t_prev = e.time;
        if (e.type == EventType::arrival)
        {
            ++q[e.server];
        }
        else if (e.type == EventType::departure)
        {
            --q[e.server];
        }
    }
    CHECK(replayed.tails.v1 == Approx(weighted_v1 / total).margin(1e-9));
}

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

// Experiment orchestration behind the command-line tool. Each command turns
// an ExperimentConfig into a CsvTable; rows come out in a fixed order
// (sweep point, then policy name) whatever order the workers finish in.

#include "bplb/bipartite_graph.hpp"
#include "bplb/config.hpp"
#include "bplb/csv.hpp"
#include "bplb/errors.hpp"
#include "bplb/exact.hpp"
#include "bplb/graph.hpp"
#include "bplb/model.hpp"
#include "bplb/policy.hpp"
#include "bplb/rng.hpp"
#include "bplb/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#ifndef BPLB_VERSION
#define BPLB_VERSION "0.1.0-unknown"
#endif

namespace bplb
{
    inline constexpr std::uint64_t graph_stream = 0x67726170ull;  // "grap"
    inline constexpr std::uint64_t check_stream = 0x636b6563ull;  // "ckec"

    inline std::string version_string() { return BPLB_VERSION; }

    /// One sweep point: either axis may be pinned.
    struct SweepPoint
    {
        std::optional<double> load;
        std::optional<std::uint32_t> servers;

        double axis_value() const { return servers ? static_cast<double>(*servers) : load.value_or(0.0); }
    };

    /// Seed shared by every policy at a sweep point (common random numbers),
    /// derived from the point's value rather than its position in the list.
    inline std::uint64_t point_seed(const ExperimentConfig &c, const SweepPoint &p)
    {
        if (!p.load && !p.servers)
        {
            return c.seed;
        }
        return derive_seed(c.seed, std::bit_cast<std::uint64_t>(p.axis_value()));
    }

    inline const PointOverride *find_override(const ExperimentConfig &c, const SweepPoint &p)
    {
        if (!p.load && !p.servers)
        {
            return nullptr;
        }
        for (const auto &o : c.sweep.overrides)
        {
            if (std::abs(o.at - p.axis_value()) <= 1e-12 * std::max(1.0, std::abs(o.at)))
            {
                return &o;
            }
        }
        return nullptr;
    }

    /// Builds the system for a sweep point from the configured classes/ports.
    inline SystemSpec build_spec(const ExperimentConfig &c, const SweepPoint &p = {})
    {
        if (c.classes.empty())
        {
            throw ConfigError("system.classes: at least one class required");
        }
        const bool by_count = c.classes.front().count.has_value();
        for (const auto &cc : c.classes)
        {
            if (cc.count.has_value() != by_count)
            {
                throw ConfigError("system.classes: do not mix fraction and count");
            }
        }
        std::uint32_t n = 0;
        if (by_count)
        {
            for (const auto &cc : c.classes)
            {
                n += *cc.count;
            }
            const auto wanted = p.servers ? p.servers : c.servers;
            if (wanted && *wanted != n)
            {
                throw ConfigError("class counts fix N = " + std::to_string(n) + "; use fractions to vary N");
            }
        }
        else
        {
            const auto wanted = p.servers ? p.servers : c.servers;
            if (!wanted)
            {
                throw ConfigError("system.servers: required when classes are given by fraction");
            }
            n = *wanted;
        }
        std::uint32_t num_ports = 1;
        if (!c.ports.rates.empty())
        {
            num_ports = static_cast<std::uint32_t>(c.ports.rates.size());
        }
        else if (c.ports.count)
        {
            num_ports = *c.ports.count;
        }
        else if (c.ports.exponent)
        {
            const double l = std::round(std::pow(static_cast<double>(n), *c.ports.exponent));
            if (!(l >= 1.0 && l < 4.0e9))
            {
                throw ConfigError("system.ports.exponent: port count out of range");
            }
            num_ports = static_cast<std::uint32_t>(l);
        }
        auto make = [&](std::vector<double> rates) {
            if (by_count)
            {
                std::vector<ClassCount> rows;
                for (const auto &cc : c.classes)
                {
                    rows.push_back({cc.rate, *cc.count});
                }
                return SystemSpec::from_counts(rows, std::move(rates), c.buffer);
            }
            std::vector<ClassShare> rows;
            for (const auto &cc : c.classes)
            {
                rows.push_back({cc.rate, *cc.fraction});
            }
            return SystemSpec::from_fractions(rows, n, std::move(rates), c.buffer);
        };
        if (!c.ports.rates.empty() && !p.load)
        {
            return make(c.ports.rates);
        }
        // Placeholder rates give the capacity; the real ones follow.
        const auto probe = make(std::vector<double>(num_ports, 1e-300));
        double total = 0.0;
        if (p.load)
        {
            total = *p.load * probe.capacity();
        }
        else if (c.ports.load)
        {
            total = *c.ports.load * probe.capacity();
        }
        else
        {
            total = *c.ports.total_rate;
        }
        if (!c.ports.rates.empty())
        {
            // Explicit rates are a mix; a swept load rescales them.
            double given = 0.0;
            for (double r : c.ports.rates)
            {
                given += r;
            }
            std::vector<double> scaled;
            for (double r : c.ports.rates)
            {
                scaled.push_back(r * total / given);
            }
            return make(std::move(scaled));
        }
        return make(std::vector<double>(num_ports, total / num_ports));
    }

    inline TheoryParams build_theory(const ExperimentConfig &c, const SystemSpec &spec, const SweepPoint &p = {})
    {
        auto options = c.theory;
        if (const auto *o = find_override(c, p); o != nullptr && o->epsilon)
        {
            options.epsilon = o->epsilon;
        }
        return derive_theory(spec, options);
    }

    inline double system_load(const SystemSpec &spec) { return spec.total_arrival_rate() / spec.capacity(); }

    /// Graph for the configured topology. `seed` feeds the random kinds.
    inline BipartiteGraph build_graph(const ExperimentConfig &c, const SystemSpec &spec, const TheoryParams &theory,
                                      std::uint64_t seed)
    {
        const GeneratorOptions opts{c.topology.slow_edges};
        if ((c.topology.kind == TopologyKind::thm33 || c.topology.kind == TopologyKind::thm34) && theory.K == 0)
        {
            throw ConfigError("insufficient capacity");
        }
        switch (c.topology.kind)
        {
        case TopologyKind::full: return BipartiteGraph::fully_connected(spec.num_ports(), spec.num_servers());
        case TopologyKind::file:
        {
            std::ifstream in(c.topology.path);
            if (!in)
            {
                throw ConfigError("cannot open graph file '" + c.topology.path + "'");
            }
            auto g = read_graph(in);
            validate_graph(spec, g);
            return g;
        }
        case TopologyKind::thm33: return generate_heterogeneous(spec.port_rates(), spec, theory, seed, opts);
        case TopologyKind::thm34: return generate_homogeneous(spec, theory, seed, opts);
        case TopologyKind::sim_random:
            return generate_sim_random(spec.num_servers(), spec.num_ports(), system_load(spec), seed);
        }
        throw ConfigError("unknown topology");
    }

    inline bool topology_is_random(const ExperimentConfig &c)
    {
        return c.topology.kind != TopologyKind::full && c.topology.kind != TopologyKind::file;
    }

    inline std::vector<PolicyKind> sorted_policies(std::vector<PolicyKind> ps)
    {
        std::sort(ps.begin(), ps.end(), [](PolicyKind a, PolicyKind b) { return policy_name(a) < policy_name(b); });
        ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
        return ps;
    }

    inline void add_provenance(const ExperimentConfig &c, CsvTable &t)
    {
        t.header.insert(t.header.end(), {"seed", "config_hash", "version"});
        const auto seed = std::to_string(c.seed);
        const auto hash = config_hash(c);
        const auto version = version_string();
        for (auto &row : t.rows)
        {
            row.insert(row.end(), {seed, hash, version});
        }
    }

    // ---------------------------------------------------------------------
    // bounds

    inline std::vector<SweepPoint> sweep_points(const ExperimentConfig &c)
    {
        std::vector<SweepPoint> points;
        if (!c.sweep.servers.empty())
        {
            for (auto n : c.sweep.servers)
            {
                points.push_back({std::nullopt, n});
            }
        }
        else if (!c.sweep.loads.empty())
        {
            for (double l : c.sweep.loads)
            {
                points.push_back({l, std::nullopt});
            }
        }
        return points;
    }

    /// Theory constants and reference bounds. One row per sweep point when a
    /// sweep is configured, else one row; any invalid point is an error.
    inline CsvTable cmd_bounds(const ExperimentConfig &c)
    {
        CsvTable t;
        t.header = {"load",       "num_servers", "num_ports",   "buffer",       "lambda_sigma",  "K",
                    "beta",       "beta_hat",    "c_star",      "service_time_lb", "epsilon",    "tau_1K",
                    "tau_1M",     "tau_KM",      "p1",          "p2",           "d_tilde_1",     "d_tilde_2",
                    "delta",      "delta_bar",   "B1",          "B2",           "B3",            "chi",
                    "buffer_window_min", "buffer_window_max", "buffer_window_ok", "bound_jobs_excess",
                    "bound_total_jobs", "bound_blocking"};
        auto points = sweep_points(c);
        if (points.empty())
        {
            points.push_back({});
        }
        for (const auto &p : points)
        {
            const auto spec = build_spec(c, p);
            const auto th = build_theory(c, spec, p);
            const auto w = check_buffer_window(th, spec.num_servers(), spec.buffer());
            const auto b = evaluate_theorem_bounds(th, spec.num_servers(), spec.buffer());
            t.rows.push_back({format_number(system_load(spec)),
                              std::to_string(spec.num_servers()),
                              std::to_string(spec.num_ports()),
                              std::to_string(spec.buffer()),
                              format_number(th.lambda_sigma),
                              std::to_string(th.K),
                              format_number(th.beta),
                              format_number(th.beta_hat),
                              format_number(th.c_star),
                              format_number(th.service_time_lb),
                              format_number(th.epsilon),
                              format_number(th.tau_1K),
                              format_number(th.tau_1M),
                              format_number(th.tau_KM),
                              format_number(th.p1),
                              format_number(th.p2),
                              format_number(th.d_tilde_1),
                              format_number(th.d_tilde_2),
                              format_number(th.delta),
                              format_number(th.delta_bar),
                              format_number(th.B1),
                              format_number(th.B2),
                              format_number(th.B3),
                              format_number(th.chi),
                              format_number(w.b_min),
                              std::to_string(w.b_max),
                              w.ok ? "true" : "false",
                              format_number(b.jobs_excess_bound),
                              b.total_jobs_bound ? format_number(*b.total_jobs_bound) : "",
                              format_number(b.blocking_bound)});
        }
        add_provenance(c, t);
        return t;
    }

    // ---------------------------------------------------------------------
    // simulate / sweep-load / scale

    inline std::vector<std::string> run_header()
    {
        return {"load",           "num_servers",     "num_ports",        "buffer",        "policy",
                "service",        "topology",        "replications",     "horizon_arrivals", "mean_response",
                "mean_response_ci", "blocking_prob", "blocking_ci",      "mean_jobs_scaled", "mean_jobs_ci",
                "littles_residual", "admitted",      "blocked",          "lower_bound",   "gap",
                "assumption2",    "lyapunov_v1",     "lyapunov_v2",      "lyapunov_v3",   "error"};
    }

    struct RunPlan
    {
        SweepPoint point;
        PolicyKind policy = PolicyKind::jfsq;
        bool scaling = false;  ///< larger default horizon at N >= 1024
    };

    inline std::uint64_t effective_horizon(const ExperimentConfig &c, const RunPlan &plan, const SystemSpec &spec)
    {
        if (const auto *o = find_override(c, plan.point); o != nullptr && o->horizon_arrivals)
        {
            return *o->horizon_arrivals;
        }
        if (c.simulation.horizon_arrivals)
        {
            return *c.simulation.horizon_arrivals;
        }
        return plan.scaling && spec.num_servers() >= 1024 ? 2'000'000 : 1'000'000;
    }

    inline std::uint32_t effective_replications(const ExperimentConfig &c, const SweepPoint &p)
    {
        if (const auto *o = find_override(c, p); o != nullptr && o->replications)
        {
            return *o->replications;
        }
        return c.simulation.replications;
    }

    inline SimOptions sim_options(const ExperimentConfig &c, PolicyKind policy, std::uint64_t horizon,
                                  std::uint64_t seed)
    {
        SimOptions o;
        o.policy = policy;
        o.jsq22 = c.jsq22;
        o.service = c.service;
        o.horizon = c.simulation.horizon_time ? Horizon::by_time(*c.simulation.horizon_time)
                                              : Horizon::by_arrivals(horizon);
        o.warmup_fraction = c.simulation.warmup_fraction;
        o.seed = seed;
        return o;
    }

    /// Replicated simulation for one (point, policy); the row carries the
    /// failure message instead of numbers when anything throws.
    inline std::vector<std::string> run_row(const ExperimentConfig &c, const RunPlan &plan,
                                            const std::string &assumption2)
    {
        std::vector<std::string> row(run_header().size());
        auto set = [&](const char *name, std::string v) {
            const auto h = run_header();
            row[static_cast<std::size_t>(std::find(h.begin(), h.end(), name) - h.begin())] = std::move(v);
        };
        set("policy", std::string(policy_name(plan.policy)));
        set("service", std::string(c.service.name()));
        set("topology", topology_name(c.topology.kind));
        set("assumption2", assumption2);
        if (plan.point.load)
        {
            set("load", format_number(*plan.point.load));
        }
        if (plan.point.servers)
        {
            set("num_servers", std::to_string(*plan.point.servers));
        }
        try
        {
            const auto spec = build_spec(c, plan.point);
            set("load", format_number(system_load(spec)));
            set("num_servers", std::to_string(spec.num_servers()));
            set("num_ports", std::to_string(spec.num_ports()));
            set("buffer", std::to_string(spec.buffer()));
            // Overloaded finite-buffer systems still simulate; they just have
            // no lower bound and cannot drive the theory-based generators.
            std::optional<TheoryParams> theory_slot;
            try
            {
                theory_slot = build_theory(c, spec, plan.point);
            }
            catch (const ConfigError &)
            {
                if (c.topology.kind == TopologyKind::thm33 || c.topology.kind == TopologyKind::thm34 ||
                    c.simulation.lyapunov)
                {
                    throw;
                }
                theory_slot = TheoryParams{};
            }
            const auto &theory = *theory_slot;
            const bool has_theory = theory.K > 0;
            if (has_theory)
            {
                set("lower_bound", format_number(theory.service_time_lb));
            }
            const auto horizon = effective_horizon(c, plan, spec);
            const auto seed = point_seed(c, plan.point);
            auto options = sim_options(c, plan.policy, horizon, seed);
            if (c.simulation.lyapunov)
            {
                options.capture_trace = true;
                options.theory = theory;
            }
            ReplicationOptions rep;
            rep.replications = effective_replications(c, plan.point);
            rep.base_seed = seed;
            rep.workers = 1;
            set("replications", std::to_string(rep.replications));
            set("horizon_arrivals", c.simulation.horizon_time ? "" : std::to_string(horizon));
            ReplicatedMetrics m;
            if (topology_is_random(c) && c.topology.per_replication)
            {
                m = simulate_replications(
                    spec, [&](std::uint64_t s) { return build_graph(c, spec, theory, s); }, options, rep);
            }
            else
            {
                const auto graph = build_graph(c, spec, theory, derive_seed(seed, graph_stream));
                m = simulate_replications(spec, graph, options, rep);
            }
            set("mean_response", format_number(m.mean_response.mean));
            set("mean_response_ci", format_number(m.mean_response.half_width));
            set("blocking_prob", format_number(m.blocking_prob.mean));
            set("blocking_ci", format_number(m.blocking_prob.half_width));
            set("mean_jobs_scaled", format_number(m.mean_jobs_scaled.mean));
            set("mean_jobs_ci", format_number(m.mean_jobs_scaled.half_width));
            set("littles_residual", format_number(m.littles_residual.mean));
            set("admitted", std::to_string(m.admitted));
            set("blocked", std::to_string(m.blocked));
            if (has_theory)
            {
                set("gap", format_number((m.mean_response.mean - theory.service_time_lb) / theory.service_time_lb));
            }
            if (m.lyapunov_v1)
            {
                set("lyapunov_v1", format_number(m.lyapunov_v1->mean));
                set("lyapunov_v2", format_number(m.lyapunov_v2->mean));
                set("lyapunov_v3", format_number(m.lyapunov_v3->mean));
            }
        }
        catch (const std::exception &e)
        {
            set("error", e.what());
        }
        return row;
    }

    inline CsvTable run_plans(const ExperimentConfig &c, const std::vector<RunPlan> &plans,
                              const std::vector<std::string> &assumption2)
    {
        CsvTable t;
        t.header = run_header();
        t.rows = run_indexed<std::vector<std::string>>(
            static_cast<std::uint32_t>(plans.size()), c.simulation.workers,
            [&](std::uint32_t i) { return run_row(c, plans[i], assumption2.empty() ? "" : assumption2[i]); });
        add_provenance(c, t);
        return t;
    }

    /// Every configured policy at the configured operating point.
    inline CsvTable cmd_simulate(const ExperimentConfig &c)
    {
        std::vector<RunPlan> plans;
        for (auto p : sorted_policies(c.policies))
        {
            plans.push_back({{}, p, false});
        }
        return run_plans(c, plans, {});
    }

    /// One row per (load, policy).
    inline CsvTable cmd_sweep_load(const ExperimentConfig &c)
    {
        if (c.sweep.loads.empty())
        {
            throw ConfigError("sweep.loads: required for sweep-load");
        }
        auto loads = c.sweep.loads;
        std::sort(loads.begin(), loads.end());
        std::vector<RunPlan> plans;
        for (double l : loads)
        {
            for (auto p : sorted_policies(c.policies))
            {
                plans.push_back({{l, std::nullopt}, p, false});
            }
        }
        return run_plans(c, plans, {});
    }

    /// Sampled well-connectedness verdict for the graph the first
    /// replication at this point will see.
    inline std::string assumption2_verdict(const ExperimentConfig &c, const SweepPoint &p)
    {
        try
        {
            const auto spec = build_spec(c, p);
            const auto theory = build_theory(c, spec, p);
            const auto seed = point_seed(c, p);
            ReplicationOptions rep;
            rep.base_seed = seed;
            const auto graph_seed = topology_is_random(c) && c.topology.per_replication
                                        ? derive_seed(replication_seed(rep, 0), graph_stream)
                                        : derive_seed(seed, graph_stream);
            const auto graph = build_graph(c, spec, theory, graph_seed);
            const auto report =
                check_well_connected_sampled(graph, spec, theory, c.check.trials, derive_seed(seed, check_stream));
            return report.ok() ? "sampled:ok" : "sampled:violated";
        }
        catch (const std::exception &e)
        {
            return std::string("error:") + e.what();
        }
    }

    /// One row per (N, policy), with a sampled well-connectedness verdict.
    inline CsvTable cmd_scale(const ExperimentConfig &c)
    {
        if (c.sweep.servers.empty())
        {
            throw ConfigError("sweep.servers: required for scale");
        }
        auto ns = c.sweep.servers;
        std::sort(ns.begin(), ns.end());
        ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
        std::vector<SweepPoint> points;
        for (auto n : ns)
        {
            points.push_back({std::nullopt, n});
        }
        const auto verdicts = run_indexed<std::string>(static_cast<std::uint32_t>(points.size()),
                                                       c.simulation.workers,
                                                       [&](std::uint32_t i) { return assumption2_verdict(c, points[i]); });
        std::vector<RunPlan> plans;
        std::vector<std::string> per_plan;
        for (std::size_t i = 0; i < points.size(); ++i)
        {
            for (auto p : sorted_policies(c.policies))
            {
                plans.push_back({points[i], p, true});
                per_plan.push_back(verdicts[i]);
            }
        }
        return run_plans(c, plans, per_plan);
    }

    /// Event trace of a single run (first configured policy, first
    /// replication seed) as `time,event_type,server,port,queue_after`.
    inline void write_trace(const ExperimentConfig &c, std::ostream &out)
    {
        const auto spec = build_spec(c);
        const auto theory = build_theory(c, spec);
        const RunPlan plan{{}, sorted_policies(c.policies).front(), false};
        ReplicationOptions rep;
        rep.base_seed = point_seed(c, plan.point);
        const auto seed = replication_seed(rep, 0);
        const auto graph_seed = topology_is_random(c) && c.topology.per_replication
                                    ? derive_seed(seed, graph_stream)
                                    : derive_seed(rep.base_seed, graph_stream);
        const auto graph = build_graph(c, spec, theory, graph_seed);
        auto options = sim_options(c, plan.policy, effective_horizon(c, plan, spec), seed);
        options.capture_trace = true;
        const auto result = simulate(spec, graph, options);
        out << "time,event_type,server,port,queue_after\n";
        for (const auto &e : result.trace)
        {
            out << format_number(e.time) << ',' << event_name(e.type) << ',';
            if (e.server != no_index)
            {
                out << e.server;
            }
            out << ',' << e.port << ',' << e.queue_after << '\n';
        }
    }

    // ---------------------------------------------------------------------
    // exact

    /// Exact stationary metrics for every configured policy at the
    /// configured point. `pi_out`, when given, receives the first policy's
    /// stationary distribution.
    inline CsvTable cmd_exact(const ExperimentConfig &c, std::ostream *pi_out = nullptr)
    {
        const auto spec = build_spec(c);
        std::optional<TheoryParams> theory;
        try
        {
            theory = build_theory(c, spec);
        }
        catch (const ConfigError &)
        {
            // Exact solves are fine beyond capacity; only the bound is lost.
        }
        const auto graph = build_graph(c, spec, theory.value_or(TheoryParams{}), derive_seed(c.seed, graph_stream));
        CsvTable t;
        t.header = {"load",          "num_servers",      "num_ports",      "buffer",
                    "policy",        "states",           "residual",       "clamped_entries",
                    "blocking_prob", "mean_jobs_scaled", "per_class_jobs", "mean_response",
                    "lower_bound",   "error"};
        bool first = true;
        for (auto p : sorted_policies(c.policies))
        {
            std::vector<std::string> row{format_number(system_load(spec)), std::to_string(spec.num_servers()),
                                         std::to_string(spec.num_ports()), std::to_string(spec.buffer()),
                                         std::string(policy_name(p))};
            row.resize(t.header.size());
            row[12] = theory ? format_number(theory->service_time_lb) : "";
            try
            {
                ExactOptions o;
                o.policy = p;
                o.jsq22 = c.jsq22;
                o.state_budget = c.exact.state_budget;
                const auto dist = stationary(spec, graph, o);
                const auto m = exact_metrics(dist, spec, graph, o);
                row[5] = std::to_string(dist.space.size());
                row[6] = format_number(dist.residual);
                row[7] = std::to_string(dist.clamped_entries);
                row[8] = format_number(m.blocking_prob);
                row[9] = format_number(m.mean_jobs_scaled);
                std::string per;
                for (double x : m.per_class_jobs)
                {
                    per += (per.empty() ? "" : ";") + format_number(x);
                }
                row[10] = per;
                row[11] = m.mean_response ? format_number(*m.mean_response) : "undefined";
                if (first && pi_out != nullptr)
                {
                    write_stationary_csv(*pi_out, dist);
                }
            }
            catch (const std::exception &e)
            {
                row[13] = e.what();
            }
            first = false;
            t.rows.push_back(std::move(row));
        }
        add_provenance(c, t);
        return t;
    }

    // ---------------------------------------------------------------------
    // gen-graph / check-graph

    inline BipartiteGraph cmd_gen_graph(const ExperimentConfig &c)
    {
        const auto spec = build_spec(c);
        const auto theory = build_theory(c, spec);
        return build_graph(c, spec, theory, derive_seed(c.seed, graph_stream));
    }

    struct CheckOutcome
    {
        ConnectivityReport report;
        CsvTable table;
        std::string text;
    };

    inline CheckOutcome check_graph(const ExperimentConfig &c, const BipartiteGraph &graph)
    {
        const auto spec = build_spec(c);
        const auto theory = build_theory(c, spec);
        CheckOutcome out;
        std::string note;
        const auto sampled = [&] {
            return check_well_connected_sampled(graph, spec, theory, c.check.trials,
                                                derive_seed(c.seed, check_stream));
        };
        if (c.check.method == CheckConfig::Method::sampled)
        {
            out.report = sampled();
        }
        else if (c.check.method == CheckConfig::Method::exact)
        {
            out.report = check_well_connected_exact(graph, spec, theory, c.check.budget);
        }
        else
        {
            try
            {
                out.report = check_well_connected_exact(graph, spec, theory, c.check.budget);
            }
            catch (const RuntimeError &)
            {
                note = "exact enumeration over budget; result is sampled";
                out.report = sampled();
            }
        }
        out.table.header = {"condition",  "method",    "ok",        "vacuous",          "subset_size",
                            "pool_size",  "threshold", "worst_deficiency", "worst_subset"};
        std::string text = "method: " + std::string(method_name(out.report.method)) + "\n";
        if (!note.empty())
        {
            text += "note: " + note + "\n";
        }
        int index = 1;
        for (const auto *r : {&out.report.condition1, &out.report.condition2})
        {
            std::string subset;
            for (auto s : r->worst_subset)
            {
                subset += (subset.empty() ? "" : ";") + std::to_string(s);
            }
            out.table.rows.push_back({std::to_string(index), method_name(out.report.method), r->ok ? "true" : "false",
                                      r->vacuous ? "true" : "false", std::to_string(r->subset_size),
                                      std::to_string(r->pool_size), format_number(r->threshold),
                                      format_number(r->worst_deficiency), subset});
            text += "condition " + std::to_string(index) + ": " + (r->ok ? "ok" : "violated") +
                    (r->vacuous ? " (vacuous)" : "") + ", worst deficiency " + format_number(r->worst_deficiency) +
                    " vs threshold " + format_number(r->threshold) + " over subsets of size " +
                    std::to_string(r->subset_size) + " out of " + std::to_string(r->pool_size) + "\n";
            ++index;
        }
        add_provenance(c, out.table);
        out.text = std::move(text);
        return out;
    }

    /// Checks the configured topology (a file, or the generated graph).
    inline CheckOutcome cmd_check_graph(const ExperimentConfig &c) { return check_graph(c, cmd_gen_graph(c)); }
} // namespace bplb

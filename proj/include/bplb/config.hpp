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

// Experiment configuration: a JSON document, strictly validated.
//
// Every object level rejects keys it does not know. Environment variables
// BPLB_SEED and BPLB_OUTPUT_DIR override `seed` and `output_dir`; nothing
// else is read from the environment. The schema is described in
// docs/config.md.

#include "bplb/errors.hpp"
#include "bplb/model.hpp"
#include "bplb/policy.hpp"
#include "bplb/service.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace bplb
{
    struct ClassConfig
    {
        double rate = 0.0;
        std::optional<double> fraction;
        std::optional<std::uint32_t> count;
    };

    struct PortConfig
    {
        std::optional<std::uint32_t> count;
        std::optional<double> exponent;  ///< L = round(N^exponent)
        std::optional<double> load;      ///< lambda_Sigma / capacity
        std::optional<double> total_rate;
        std::vector<double> rates;       ///< explicit per-port rates
    };

    enum class TopologyKind
    {
        full,
        file,
        thm33,
        thm34,
        sim_random
    };

    inline const char *topology_name(TopologyKind k)
    {
        switch (k)
        {
        case TopologyKind::full: return "full";
        case TopologyKind::file: return "file";
        case TopologyKind::thm33: return "thm33";
        case TopologyKind::thm34: return "thm34";
        case TopologyKind::sim_random: return "sim-random";
        }
        return "?";
    }

    struct TopologyConfig
    {
        TopologyKind kind = TopologyKind::full;
        std::string path;
        bool slow_edges = true;
        bool per_replication = true;  ///< random kinds: fresh graph per replication
    };

    struct SimulationConfig
    {
        /// Unset: 10^6, doubled for scaling points with N >= 1024.
        std::optional<std::uint64_t> horizon_arrivals;
        std::optional<double> horizon_time;
        double warmup_fraction = 0.2;
        std::uint32_t replications = 10;
        unsigned workers = 0;  ///< 0: hardware concurrency
        bool lyapunov = false;
    };

    struct PointOverride
    {
        double at = 0.0;  ///< load or N, matching the sweep axis
        std::optional<double> epsilon;
        std::optional<std::uint64_t> horizon_arrivals;
        std::optional<std::uint32_t> replications;
    };

    struct SweepConfig
    {
        std::vector<double> loads;
        std::vector<std::uint32_t> servers;
        std::vector<PointOverride> overrides;
    };

    struct CheckConfig
    {
        enum class Method
        {
            automatic,
            exact,
            sampled
        };
        Method method = Method::automatic;
        double budget = 1e7;
        std::uint64_t trials = 1000;
    };

    struct ExactConfig
    {
        double state_budget = 1e6;
        std::string dump_pi;
    };

    struct ExperimentConfig
    {
        std::string description;
        std::uint64_t seed = 1;
        std::string output_dir;
        std::optional<std::uint32_t> servers;
        std::vector<ClassConfig> classes;
        PortConfig ports;
        std::int64_t buffer = 5;
        TopologyConfig topology;
        std::vector<PolicyKind> policies{PolicyKind::jfsq};
        Jsq22Params jsq22;
        ServiceModel service = ServiceModel::exponential();
        TheoryOptions theory;
        SimulationConfig simulation;
        SweepConfig sweep;
        CheckConfig check;
        ExactConfig exact;
    };

    /// Two-class system of 100 fast (25/9) and 400 slow (5/9) servers behind
    /// one port, buffer 10^6, all five comparison policies.
    inline ExperimentConfig two_class_defaults()
    {
        ExperimentConfig c;
        c.description = "two-class fully connected system";
        c.classes = {{25.0 / 9.0, std::nullopt, 100}, {5.0 / 9.0, std::nullopt, 400}};
        c.ports.count = 1;
        c.ports.load = 0.9;
        c.buffer = 1'000'000;
        c.policies = {PolicyKind::jfsq, PolicyKind::jfiq, PolicyKind::jsq, PolicyKind::jiq, PolicyKind::jsq22};
        c.sweep.loads = {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98};
        return c;
    }

    namespace detail
    {
        using json = nlohmann::json;

        inline void reject_unknown(const json &j, const std::string &where, std::initializer_list<const char *> keys)
        {
            if (!j.is_object())
            {
                throw ConfigError(where + ": expected an object");
            }
            for (auto it = j.begin(); it != j.end(); ++it)
            {
                bool known = false;
                for (const char *k : keys)
                {
                    known = known || it.key() == k;
                }
                if (!known)
                {
                    throw ConfigError(where + ": unknown key '" + it.key() + "'");
                }
            }
        }

        inline double get_number(const json &j, const std::string &where)
        {
            if (!j.is_number())
            {
                throw ConfigError(where + ": expected a number");
            }
            return j.get<double>();
        }

        inline std::uint64_t get_count(const json &j, const std::string &where)
        {
            const double v = get_number(j, where);
            if (!(v >= 0.0) || v != std::floor(v) || v > 9.007199254740992e15)
            {
                throw ConfigError(where + ": expected a non-negative integer");
            }
            return static_cast<std::uint64_t>(v);
        }

        inline std::uint32_t get_u32(const json &j, const std::string &where)
        {
            const auto v = get_count(j, where);
            if (v > 0xFFFFFFFFull)
            {
                throw ConfigError(where + ": out of range");
            }
            return static_cast<std::uint32_t>(v);
        }

        inline bool get_bool(const json &j, const std::string &where)
        {
            if (!j.is_boolean())
            {
                throw ConfigError(where + ": expected true or false");
            }
            return j.get<bool>();
        }

        inline std::string get_string(const json &j, const std::string &where)
        {
            if (!j.is_string())
            {
                throw ConfigError(where + ": expected a string");
            }
            return j.get<std::string>();
        }

        inline const json &get_array(const json &j, const std::string &where)
        {
            if (!j.is_array())
            {
                throw ConfigError(where + ": expected an array");
            }
            return j;
        }

        inline TopologyKind parse_topology(const std::string &s)
        {
            for (auto k : {TopologyKind::full, TopologyKind::file, TopologyKind::thm33, TopologyKind::thm34,
                           TopologyKind::sim_random})
            {
                if (s == topology_name(k))
                {
                    return k;
                }
            }
            throw ConfigError("topology.kind: unknown '" + s + "' (expected full|file|thm33|thm34|sim-random)");
        }

        inline void parse_system(const json &j, ExperimentConfig &c)
        {
            reject_unknown(j, "system", {"servers", "classes", "ports", "buffer"});
            if (j.contains("servers"))
            {
                c.servers = get_u32(j["servers"], "system.servers");
            }
            if (j.contains("buffer"))
            {
                c.buffer = static_cast<std::int64_t>(get_count(j["buffer"], "system.buffer"));
            }
            if (!j.contains("classes"))
            {
                throw ConfigError("system.classes: required");
            }
            c.classes.clear();
            for (const auto &row : get_array(j["classes"], "system.classes"))
            {
                const std::string where = "system.classes[" + std::to_string(c.classes.size()) + "]";
                reject_unknown(row, where, {"rate", "fraction", "count"});
                ClassConfig cc;
                if (!row.contains("rate"))
                {
                    throw ConfigError(where + ".rate: required");
                }
                cc.rate = get_number(row["rate"], where + ".rate");
                if (row.contains("fraction"))
                {
                    cc.fraction = get_number(row["fraction"], where + ".fraction");
                }
                if (row.contains("count"))
                {
                    cc.count = get_u32(row["count"], where + ".count");
                }
                if (cc.fraction.has_value() == cc.count.has_value())
                {
                    throw ConfigError(where + ": give exactly one of fraction, count");
                }
                c.classes.push_back(cc);
            }
            if (c.classes.empty())
            {
                throw ConfigError("system.classes: at least one class required");
            }
            c.ports = {};
            if (j.contains("ports"))
            {
                const auto &p = j["ports"];
                reject_unknown(p, "system.ports", {"count", "exponent", "load", "total_rate", "rates"});
                if (p.contains("count"))
                {
                    c.ports.count = get_u32(p["count"], "system.ports.count");
                }
                if (p.contains("exponent"))
                {
                    c.ports.exponent = get_number(p["exponent"], "system.ports.exponent");
                }
                if (p.contains("load"))
                {
                    c.ports.load = get_number(p["load"], "system.ports.load");
                }
                if (p.contains("total_rate"))
                {
                    c.ports.total_rate = get_number(p["total_rate"], "system.ports.total_rate");
                }
                if (p.contains("rates"))
                {
                    for (const auto &r : get_array(p["rates"], "system.ports.rates"))
                    {
                        c.ports.rates.push_back(get_number(r, "system.ports.rates[]"));
                    }
                }
            }
            const int amount = c.ports.load.has_value() + c.ports.total_rate.has_value() + !c.ports.rates.empty();
            if (amount != 1)
            {
                throw ConfigError("system.ports: give exactly one of load, total_rate, rates");
            }
            if (c.ports.count && c.ports.exponent)
            {
                throw ConfigError("system.ports: count and exponent are exclusive");
            }
            if (!c.ports.rates.empty() && (c.ports.count || c.ports.exponent))
            {
                throw ConfigError("system.ports: explicit rates fix the port count");
            }
        }

        inline void parse_topology_block(const json &j, TopologyConfig &t)
        {
            reject_unknown(j, "topology", {"kind", "path", "slow_edges", "regenerate"});
            if (j.contains("kind"))
            {
                t.kind = parse_topology(get_string(j["kind"], "topology.kind"));
            }
            if (j.contains("path"))
            {
                t.path = get_string(j["path"], "topology.path");
            }
            if (j.contains("slow_edges"))
            {
                t.slow_edges = get_bool(j["slow_edges"], "topology.slow_edges");
            }
            if (j.contains("regenerate"))
            {
                const auto s = get_string(j["regenerate"], "topology.regenerate");
                if (s != "replication" && s != "point")
                {
                    throw ConfigError("topology.regenerate: expected replication|point");
                }
                t.per_replication = s == "replication";
            }
            if (t.kind == TopologyKind::file && t.path.empty())
            {
                throw ConfigError("topology.path: required for kind file");
            }
        }

        inline ServiceModel parse_service(const json &j)
        {
            if (j.is_string())
            {
                const auto s = j.get<std::string>();
                if (s == "exponential")
                {
                    return ServiceModel::exponential();
                }
                if (s == "hyperexponential")
                {
                    return ServiceModel::reference_hyperexponential();
                }
                throw ConfigError("service: unknown '" + s + "' (expected exponential|hyperexponential)");
            }
            reject_unknown(j, "service", {"kind", "phases"});
            const auto kind = j.contains("kind") ? get_string(j["kind"], "service.kind") : std::string("exponential");
            if (kind == "exponential")
            {
                if (j.contains("phases"))
                {
                    throw ConfigError("service.phases: only valid for hyperexponential");
                }
                return ServiceModel::exponential();
            }
            if (kind != "hyperexponential")
            {
                throw ConfigError("service.kind: unknown '" + kind + "'");
            }
            if (!j.contains("phases"))
            {
                return ServiceModel::reference_hyperexponential();
            }
            std::vector<ExpPhase> phases;
            for (const auto &p : get_array(j["phases"], "service.phases"))
            {
                reject_unknown(p, "service.phases[]", {"probability", "rate"});
                if (!p.contains("probability") || !p.contains("rate"))
                {
                    throw ConfigError("service.phases[]: probability and rate required");
                }
                phases.push_back({get_number(p["probability"], "service.phases[].probability"),
                                  get_number(p["rate"], "service.phases[].rate")});
            }
            return ServiceModel::hyperexponential(std::move(phases));
        }

        inline void parse_simulation(const json &j, SimulationConfig &s)
        {
            reject_unknown(j, "simulation",
                           {"horizon_arrivals", "horizon_time", "warmup_fraction", "replications", "workers",
                            "lyapunov"});
            if (j.contains("horizon_arrivals"))
            {
                s.horizon_arrivals = get_count(j["horizon_arrivals"], "simulation.horizon_arrivals");
            }
            if (j.contains("horizon_time"))
            {
                s.horizon_time = get_number(j["horizon_time"], "simulation.horizon_time");
            }
            if (j.contains("warmup_fraction"))
            {
                s.warmup_fraction = get_number(j["warmup_fraction"], "simulation.warmup_fraction");
            }
            if (j.contains("replications"))
            {
                s.replications = get_u32(j["replications"], "simulation.replications");
            }
            if (j.contains("workers"))
            {
                s.workers = get_u32(j["workers"], "simulation.workers");
            }
            if (j.contains("lyapunov"))
            {
                s.lyapunov = get_bool(j["lyapunov"], "simulation.lyapunov");
            }
            if (!(s.warmup_fraction >= 0.0 && s.warmup_fraction <= 0.9))
            {
                throw ConfigError("simulation.warmup_fraction: must lie in [0, 0.9]");
            }
            if (s.replications < 2)
            {
                throw ConfigError("simulation.replications: need at least 2");
            }
        }

        inline void parse_sweep(const json &j, SweepConfig &s)
        {
            reject_unknown(j, "sweep", {"loads", "servers", "overrides"});
            if (j.contains("loads"))
            {
                s.loads.clear();
                for (const auto &v : get_array(j["loads"], "sweep.loads"))
                {
                    s.loads.push_back(get_number(v, "sweep.loads[]"));
                }
            }
            if (j.contains("servers"))
            {
                for (const auto &v : get_array(j["servers"], "sweep.servers"))
                {
                    s.servers.push_back(get_u32(v, "sweep.servers[]"));
                }
            }
            if (j.contains("overrides"))
            {
                for (const auto &o : get_array(j["overrides"], "sweep.overrides"))
                {
                    reject_unknown(o, "sweep.overrides[]", {"at", "epsilon", "horizon_arrivals", "replications"});
                    if (!o.contains("at"))
                    {
                        throw ConfigError("sweep.overrides[].at: required");
                    }
                    PointOverride p;
                    p.at = get_number(o["at"], "sweep.overrides[].at");
                    if (o.contains("epsilon"))
                    {
                        p.epsilon = get_number(o["epsilon"], "sweep.overrides[].epsilon");
                    }
                    if (o.contains("horizon_arrivals"))
                    {
                        p.horizon_arrivals = get_count(o["horizon_arrivals"], "sweep.overrides[].horizon_arrivals");
                    }
                    if (o.contains("replications"))
                    {
                        p.replications = get_u32(o["replications"], "sweep.overrides[].replications");
                    }
                    s.overrides.push_back(p);
                }
            }
        }

        inline std::vector<PolicyKind> parse_policy_list(std::string_view csv)
        {
            std::vector<PolicyKind> out;
            std::size_t start = 0;
            while (start <= csv.size())
            {
                const auto end = std::min(csv.find(',', start), csv.size());
                const auto name = csv.substr(start, end - start);
                if (!name.empty())
                {
                    out.push_back(parse_policy(name));
                }
                start = end + 1;
            }
            if (out.empty())
            {
                throw ConfigError("policies: empty list");
            }
            return out;
        }
    } // namespace detail

    inline std::vector<PolicyKind> parse_policy_list(std::string_view csv) { return detail::parse_policy_list(csv); }

    inline ExperimentConfig parse_config(const nlohmann::json &j)
    {
        using detail::get_number;
        detail::reject_unknown(j, "config",
                               {"description", "seed", "output_dir", "system", "topology", "policies", "jsq22",
                                "service", "theory", "simulation", "sweep", "check", "exact"});
        ExperimentConfig c = two_class_defaults();
        if (j.contains("system"))
        {
            // A system given in the file replaces the built-in one entirely,
            // including its load grid and policy list.
            c.buffer = 5;
            c.sweep.loads.clear();
            c.policies = {PolicyKind::jfsq};
            c.description.clear();
            detail::parse_system(j["system"], c);
        }
        if (j.contains("description"))
        {
            c.description = detail::get_string(j["description"], "description");
        }
        if (j.contains("seed"))
        {
            c.seed = detail::get_count(j["seed"], "seed");
        }
        if (j.contains("output_dir"))
        {
            c.output_dir = detail::get_string(j["output_dir"], "output_dir");
        }
        if (j.contains("topology"))
        {
            detail::parse_topology_block(j["topology"], c.topology);
        }
        if (j.contains("policies"))
        {
            c.policies.clear();
            for (const auto &p : detail::get_array(j["policies"], "policies"))
            {
                c.policies.push_back(parse_policy(detail::get_string(p, "policies[]")));
            }
            if (c.policies.empty())
            {
                throw ConfigError("policies: empty list");
            }
        }
        if (j.contains("jsq22"))
        {
            const auto &p = j["jsq22"];
            detail::reject_unknown(p, "jsq22", {"pf", "ps"});
            if (p.contains("pf"))
            {
                c.jsq22.pf = get_number(p["pf"], "jsq22.pf");
            }
            if (p.contains("ps"))
            {
                c.jsq22.ps = get_number(p["ps"], "jsq22.ps");
            }
        }
        if (j.contains("service"))
        {
            c.service = detail::parse_service(j["service"]);
        }
        if (j.contains("theory"))
        {
            const auto &t = j["theory"];
            detail::reject_unknown(t, "theory", {"epsilon", "d_tilde_1", "d_tilde_2"});
            if (t.contains("epsilon"))
            {
                c.theory.epsilon = get_number(t["epsilon"], "theory.epsilon");
            }
            if (t.contains("d_tilde_1"))
            {
                c.theory.d_tilde_1 = get_number(t["d_tilde_1"], "theory.d_tilde_1");
            }
            if (t.contains("d_tilde_2"))
            {
                c.theory.d_tilde_2 = get_number(t["d_tilde_2"], "theory.d_tilde_2");
            }
        }
        if (j.contains("simulation"))
        {
            detail::parse_simulation(j["simulation"], c.simulation);
        }
        if (j.contains("sweep"))
        {
            detail::parse_sweep(j["sweep"], c.sweep);
        }
        if (j.contains("check"))
        {
            const auto &k = j["check"];
            detail::reject_unknown(k, "check", {"method", "budget", "trials"});
            if (k.contains("method"))
            {
                const auto m = detail::get_string(k["method"], "check.method");
                if (m == "auto")
                {
                    c.check.method = CheckConfig::Method::automatic;
                }
                else if (m == "exact")
                {
                    c.check.method = CheckConfig::Method::exact;
                }
                else if (m == "sampled")
                {
                    c.check.method = CheckConfig::Method::sampled;
                }
                else
                {
                    throw ConfigError("check.method: expected auto|exact|sampled");
                }
            }
            if (k.contains("budget"))
            {
                c.check.budget = get_number(k["budget"], "check.budget");
            }
            if (k.contains("trials"))
            {
                c.check.trials = detail::get_count(k["trials"], "check.trials");
            }
        }
        if (j.contains("exact"))
        {
            const auto &e = j["exact"];
            detail::reject_unknown(e, "exact", {"state_budget", "dump_pi"});
            if (e.contains("state_budget"))
            {
                c.exact.state_budget = get_number(e["state_budget"], "exact.state_budget");
            }
            if (e.contains("dump_pi"))
            {
                c.exact.dump_pi = detail::get_string(e["dump_pi"], "exact.dump_pi");
            }
        }
        return c;
    }

    inline ExperimentConfig parse_config_text(const std::string &text)
    {
        nlohmann::json j;
        try
        {
            j = nlohmann::json::parse(text);
        }
        catch (const nlohmann::json::parse_error &e)
        {
            throw ConfigError(std::string("config: ") + e.what());
        }
        return parse_config(j);
    }

    inline ExperimentConfig load_config(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw ConfigError("cannot open config '" + path + "'");
        }
        std::ostringstream os;
        os << in.rdbuf();
        return parse_config_text(os.str());
    }

    /// Applies BPLB_SEED and BPLB_OUTPUT_DIR.
    inline void apply_environment(ExperimentConfig &c)
    {
        if (const char *s = std::getenv("BPLB_SEED"); s != nullptr && *s != '\0')
        {
            char *end = nullptr;
            const auto v = std::strtoull(s, &end, 10);
            if (end == s || *end != '\0')
            {
                throw ConfigError("BPLB_SEED: expected a non-negative integer");
            }
            c.seed = v;
        }
        if (const char *d = std::getenv("BPLB_OUTPUT_DIR"); d != nullptr && *d != '\0')
        {
            c.output_dir = d;
        }
    }

    /// Canonical form of the effective configuration, independent of key
    /// order and formatting in the source file. `output_dir` is left out:
    /// where results go does not change what they are.
    inline nlohmann::json canonical_json(const ExperimentConfig &c)
    {
        using json = nlohmann::json;
        json j;
        j["description"] = c.description;
        j["seed"] = c.seed;
        if (c.servers)
        {
            j["system"]["servers"] = *c.servers;
        }
        json classes = json::array();
        for (const auto &cc : c.classes)
        {
            json row{{"rate", cc.rate}};
            if (cc.fraction)
            {
                row["fraction"] = *cc.fraction;
            }
            if (cc.count)
            {
                row["count"] = *cc.count;
            }
            classes.push_back(row);
        }
        j["system"]["classes"] = classes;
        j["system"]["buffer"] = c.buffer;
        json ports = json::object();
        if (c.ports.count)
        {
            ports["count"] = *c.ports.count;
        }
        if (c.ports.exponent)
        {
            ports["exponent"] = *c.ports.exponent;
        }
        if (c.ports.load)
        {
            ports["load"] = *c.ports.load;
        }
        if (c.ports.total_rate)
        {
            ports["total_rate"] = *c.ports.total_rate;
        }
        if (!c.ports.rates.empty())
        {
            ports["rates"] = c.ports.rates;
        }
        j["system"]["ports"] = ports;
        j["topology"] = {{"kind", topology_name(c.topology.kind)},
                         {"path", c.topology.path},
                         {"slow_edges", c.topology.slow_edges},
                         {"regenerate", c.topology.per_replication ? "replication" : "point"}};
        json policies = json::array();
        for (auto p : c.policies)
        {
            policies.push_back(std::string(policy_name(p)));
        }
        j["policies"] = policies;
        j["jsq22"] = {{"pf", c.jsq22.pf}, {"ps", c.jsq22.ps}};
        json phases = json::array();
        for (const auto &p : c.service.phases())
        {
            phases.push_back({{"probability", p.probability}, {"rate", p.rate}});
        }
        j["service"] = {{"kind", std::string(c.service.name())}, {"phases", phases}};
        json theory = json::object();
        if (c.theory.epsilon)
        {
            theory["epsilon"] = *c.theory.epsilon;
        }
        if (c.theory.d_tilde_1)
        {
            theory["d_tilde_1"] = *c.theory.d_tilde_1;
        }
        if (c.theory.d_tilde_2)
        {
            theory["d_tilde_2"] = *c.theory.d_tilde_2;
        }
        j["theory"] = theory;
        j["simulation"] = {{"warmup_fraction", c.simulation.warmup_fraction},
                           {"replications", c.simulation.replications},
                           {"lyapunov", c.simulation.lyapunov}};
        if (c.simulation.horizon_arrivals)
        {
            j["simulation"]["horizon_arrivals"] = *c.simulation.horizon_arrivals;
        }
        if (c.simulation.horizon_time)
        {
            j["simulation"]["horizon_time"] = *c.simulation.horizon_time;
        }
        json overrides = json::array();
        for (const auto &o : c.sweep.overrides)
        {
            json row{{"at", o.at}};
            if (o.epsilon)
            {
                row["epsilon"] = *o.epsilon;
            }
            if (o.horizon_arrivals)
            {
                row["horizon_arrivals"] = *o.horizon_arrivals;
            }
            if (o.replications)
            {
                row["replications"] = *o.replications;
            }
            overrides.push_back(row);
        }
        j["sweep"] = {{"loads", c.sweep.loads}, {"servers", c.sweep.servers}, {"overrides", overrides}};
        const char *method = c.check.method == CheckConfig::Method::exact     ? "exact"
                             : c.check.method == CheckConfig::Method::sampled ? "sampled"
                                                                              : "auto";
        j["check"] = {{"method", method}, {"budget", c.check.budget}, {"trials", c.check.trials}};
        j["exact"] = {{"state_budget", c.exact.state_budget}, {"dump_pi", c.exact.dump_pi}};
        return j;
    }

    /// 64-bit FNV-1a of the canonical JSON text, as 16 hex digits.
    inline std::string config_hash(const ExperimentConfig &c)
    {
        const auto text = canonical_json(c).dump();
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char ch : text)
        {
            h ^= ch;
            h *= 0x100000001b3ull;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
} // namespace bplb

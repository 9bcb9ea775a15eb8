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

// Deficiency of server subsets, the two-part well-connectedness check
// (exact enumeration and a randomized falsifier), and the random graph
// constructions that are meant to satisfy it.

#include "bplb/bipartite_graph.hpp"
#include "bplb/errors.hpp"
#include "bplb/model.hpp"
#include "bplb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace bplb
{
    /// Throws unless the graph has the system's dimensions and no empty port.
    inline void validate_graph(const SystemSpec &spec, const BipartiteGraph &g)
    {
        if (g.num_ports() != spec.num_ports() || g.num_servers() != spec.num_servers())
        {
            throw ConfigError("graph dimensions (" + std::to_string(g.num_ports()) + " ports, " +
                              std::to_string(g.num_servers()) + " servers) do not match the system (" +
                              std::to_string(spec.num_ports()) + ", " + std::to_string(spec.num_servers()) + ")");
        }
        for (std::uint32_t l = 0; l < g.num_ports(); ++l)
        {
            if (g.port_neighbors(l).empty())
            {
                throw ConfigError("port " + std::to_string(l) + " has no neighbor");
            }
        }
    }

    /// D_I: total arrival rate of ports with no neighbor in `subset`.
    inline double deficiency(const BipartiteGraph &g, std::span<const double> port_rates,
                             std::span<const std::uint32_t> subset)
    {
        if (subset.empty())
        {
            throw ConfigError("empty subset");
        }
        std::vector<char> covered(g.num_ports(), 0);
        for (auto r : subset)
        {
            if (r >= g.num_servers())
            {
                throw ConfigError("server index out of range");
            }
            for (auto l : g.server_neighbors(r))
            {
                covered[l] = 1;
            }
        }
        double d = 0.0;
        for (std::uint32_t l = 0; l < g.num_ports(); ++l)
        {
            if (!covered[l])
            {
                d += port_rates[l];
            }
        }
        return d;
    }

    enum class CheckMethod
    {
        exact,
        sampled
    };

    inline const char *method_name(CheckMethod m) { return m == CheckMethod::exact ? "exact" : "sampled"; }

    struct ConditionResult
    {
        bool ok = true;
        bool vacuous = false;               ///< no subset of the required size exists
        std::uint32_t subset_size = 0;      ///< ceil(N p_j)
        std::uint32_t pool_size = 0;        ///< |R_{K-1}| or |R_K|
        double threshold = 0.0;             ///< N * d_tilde_j
        double worst_deficiency = 0.0;
        std::vector<std::uint32_t> worst_subset;
    };

    struct ConnectivityReport
    {
        ConditionResult condition1;  ///< subsets of R_{K-1}, size >= N p1
        ConditionResult condition2;  ///< subsets of R_K, size >= N p2
        CheckMethod method = CheckMethod::exact;

        bool ok() const noexcept { return condition1.ok && condition2.ok; }
    };

    /// ceil(N p) with a guard against representation error just above an integer.
    inline std::uint32_t required_subset_size(std::uint32_t num_servers, double p)
    {
        const double x = static_cast<double>(num_servers) * p;
        const double c = std::ceil(x - 1e-9 * std::max(1.0, x));
        return static_cast<std::uint32_t>(std::max(1.0, c));
    }

    inline double binomial(std::uint64_t n, std::uint64_t k)
    {
        if (k > n)
        {
            return 0.0;
        }
        k = std::min(k, n - k);
        double c = 1.0;
        for (std::uint64_t i = 1; i <= k; ++i)
        {
            c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
        }
        return c;
    }

    namespace detail
    {
        struct ConditionSetup
        {
            std::uint32_t pool_end = 0;  // pool is servers [0, pool_end)
            std::uint32_t size = 0;
            double threshold = 0.0;
        };

        inline ConditionSetup condition_setup(const SystemSpec &spec, const TheoryParams &theory, int which)
        {
            ConditionSetup s;
            const std::size_t k = theory.K;  // 1-based
            if (which == 1)
            {
                s.pool_end = k >= 2 ? spec.class_begin(k - 1) : 0;
                s.size = required_subset_size(spec.num_servers(), theory.p1);
                s.threshold = static_cast<double>(spec.num_servers()) * theory.d_tilde_1;
            }
            else
            {
                s.pool_end = spec.class_end(k - 1);
                s.size = required_subset_size(spec.num_servers(), theory.p2);
                s.threshold = static_cast<double>(spec.num_servers()) * theory.d_tilde_2;
            }
            return s;
        }

        inline bool within_threshold(double d, double threshold)
        {
            return d <= threshold * (1.0 + 1e-12);
        }

        /// Port-coverage bitsets, one per server.
        struct CoverageTable
        {
            std::size_t words = 0;
            std::vector<std::uint64_t> bits;  // num_servers * words

            CoverageTable(const BipartiteGraph &g, std::uint32_t servers)
                : words((g.num_ports() + 63) / 64), bits(static_cast<std::size_t>(servers) * words, 0)
            {
                for (std::uint32_t r = 0; r < servers; ++r)
                {
                    for (auto l : g.server_neighbors(r))
                    {
                        bits[r * words + l / 64] |= std::uint64_t{1} << (l % 64);
                    }
                }
            }
        };

        inline double uncovered_rate(std::span<const std::uint64_t> cover, std::span<const double> port_rates)
        {
            double d = 0.0;
            for (std::size_t w = 0; w < cover.size(); ++w)
            {
                std::uint64_t missing = ~cover[w];
                while (missing)
                {
                    const int bit = __builtin_ctzll(missing);
                    const std::size_t l = w * 64 + static_cast<std::size_t>(bit);
                    if (l >= port_rates.size())
                    {
                        break;
                    }
                    d += port_rates[l];
                    missing &= missing - 1;
                }
            }
            return d;
        }

        /// Max deficiency over all subsets of [0, pool_end) of exactly `size` servers.
        inline void enumerate_exact(const BipartiteGraph &g, std::span<const double> port_rates,
                                    const ConditionSetup &setup, ConditionResult &out)
        {
            const CoverageTable table(g, setup.pool_end);
            const std::size_t words = table.words;
            const std::size_t k = setup.size;
            std::vector<std::uint64_t> stack((k + 1) * words, 0);
            std::vector<std::uint32_t> chosen(k);
            out.worst_deficiency = -1.0;

            // Iterative lexicographic enumeration; stack[d] is the coverage of chosen[0..d).
            std::size_t depth = 0;
            std::uint32_t next = 0;
            while (true)
            {
                if (depth == k)
                {
                    const double d = uncovered_rate({stack.data() + k * words, words}, port_rates);
                    if (d > out.worst_deficiency)
                    {
                        out.worst_deficiency = d;
                        out.worst_subset.assign(chosen.begin(), chosen.end());
                    }
                    --depth;
                    next = chosen[depth] + 1;
                    continue;
                }
                if (next + (k - depth) > setup.pool_end)
                {
                    if (depth == 0)
                    {
                        break;
                    }
                    --depth;
                    next = chosen[depth] + 1;
                    continue;
                }
                chosen[depth] = next;
                for (std::size_t w = 0; w < words; ++w)
                {
                    stack[(depth + 1) * words + w] = stack[depth * words + w] | table.bits[next * words + w];
                }
                ++depth;
                next = chosen[depth - 1] + 1;
            }
            out.worst_deficiency = std::max(0.0, out.worst_deficiency);
        }

        inline ConditionResult prepare(const ConditionSetup &setup)
        {
            ConditionResult r;
            r.subset_size = setup.size;
            r.pool_size = setup.pool_end;
            r.threshold = setup.threshold;
            r.vacuous = setup.pool_end == 0 || setup.size > setup.pool_end;
            return r;
        }
    } // namespace detail

    /// Enumeration cost of the exact check (number of subsets examined).
    inline double exact_check_cost(const SystemSpec &spec, const TheoryParams &theory)
    {
        double cost = 0.0;
        for (int which : {1, 2})
        {
            const auto s = detail::condition_setup(spec, theory, which);
            if (s.pool_end > 0 && s.size <= s.pool_end)
            {
                cost = std::max(cost, binomial(s.pool_end, s.size));
            }
        }
        return cost;
    }

    /// Exhaustive check of both well-connectedness conditions. Only subsets of
    /// exactly the minimal size are enumerated: D_I can only shrink as I grows.
    inline ConnectivityReport check_well_connected_exact(const BipartiteGraph &g, const SystemSpec &spec,
                                                         const TheoryParams &theory, double budget = 1e7)
    {
        validate_graph(spec, g);
        for (int which : {1, 2})
        {
            const auto s = detail::condition_setup(spec, theory, which);
            if (s.pool_end > 0 && s.size <= s.pool_end && binomial(s.pool_end, s.size) > budget)
            {
                throw RuntimeError("exact check infeasible, use sampled");
            }
        }
        ConnectivityReport report;
        report.method = CheckMethod::exact;
        for (int which : {1, 2})
        {
            const auto setup = detail::condition_setup(spec, theory, which);
            auto result = detail::prepare(setup);
            if (!result.vacuous)
            {
                detail::enumerate_exact(g, spec.port_rates(), setup, result);
                result.ok = detail::within_threshold(result.worst_deficiency, setup.threshold);
            }
            (which == 1 ? report.condition1 : report.condition2) = std::move(result);
        }
        return report;
    }

    /// Randomized falsifier: `trials` uniform subsets of each minimal size.
    /// A reported violation is real; "ok" only means none was found.
    inline ConnectivityReport check_well_connected_sampled(const BipartiteGraph &g, const SystemSpec &spec,
                                                           const TheoryParams &theory, std::uint64_t trials,
                                                           std::uint64_t seed)
    {
        validate_graph(spec, g);
        if (trials < 1)
        {
            throw ConfigError("trials must be at least 1");
        }
        Rng rng(seed);
        ConnectivityReport report;
        report.method = CheckMethod::sampled;
        const auto rates = spec.port_rates();
        const double total = spec.total_arrival_rate();
        std::vector<std::uint32_t> stamp(g.num_ports(), 0);
        std::uint32_t epoch = 0;
        std::vector<std::uint32_t> pool;

        for (int which : {1, 2})
        {
            const auto setup = detail::condition_setup(spec, theory, which);
            auto result = detail::prepare(setup);
            if (!result.vacuous)
            {
                pool.resize(setup.pool_end);
                std::iota(pool.begin(), pool.end(), 0u);
                const std::uint64_t rounds = setup.size == setup.pool_end ? 1 : trials;
                result.worst_deficiency = -1.0;
                for (std::uint64_t t = 0; t < rounds; ++t)
                {
                    // Partial Fisher-Yates: pool[0..size) becomes a uniform subset.
                    for (std::uint32_t i = 0; i < setup.size; ++i)
                    {
                        const auto j = i + static_cast<std::uint32_t>(rng.below(setup.pool_end - i));
                        std::swap(pool[i], pool[j]);
                    }
                    ++epoch;
                    double covered = 0.0;
                    for (std::uint32_t i = 0; i < setup.size; ++i)
                    {
                        for (auto l : g.server_neighbors(pool[i]))
                        {
                            if (stamp[l] != epoch)
                            {
                                stamp[l] = epoch;
                                covered += rates[l];
                            }
                        }
                    }
                    const double d = std::max(0.0, total - covered);
                    if (d > result.worst_deficiency)
                    {
                        result.worst_deficiency = d;
                        result.worst_subset.assign(pool.begin(), pool.begin() + setup.size);
                        std::sort(result.worst_subset.begin(), result.worst_subset.end());
                    }
                }
                result.ok = detail::within_threshold(result.worst_deficiency, setup.threshold);
            }
            (which == 1 ? report.condition1 : report.condition2) = std::move(result);
        }
        return report;
    }

    // ---------------------------------------------------------------------
    // Random constructions

    struct GeneratorOptions
    {
        /// Connect ports to servers of classes beyond K with the condition-2
        /// probability. Without it those servers stay unreachable.
        bool slow_edges = true;
    };

    /// H_j for ports with arbitrary rates.
    inline double heterogeneous_h(double p, std::uint32_t num_servers, std::uint32_t num_ports)
    {
        const double n = static_cast<double>(num_servers);
        return 2.0 * std::log(2.0) * (n + static_cast<double>(num_ports)) / n / p;
    }

    /// H_j when every port has rate lambda_bar.
    inline double homogeneous_h(double p, double d_tilde, double lambda_bar, double mu_1)
    {
        return 6.0 * (-std::log(p) + d_tilde / (p * lambda_bar) * std::log(2.0 * mu_1 / d_tilde));
    }

    /// Success-probability guarantees of the two constructions.
    inline double heterogeneous_guarantee(std::uint32_t num_servers, std::uint32_t num_ports)
    {
        return 1.0 - std::exp2(-(static_cast<double>(num_servers) + num_ports - 1.0));
    }
    inline double homogeneous_guarantee(std::uint32_t num_servers, double p1)
    {
        return 1.0 - 2.0 / binomial(num_servers, required_subset_size(num_servers, p1));
    }

    namespace detail
    {
        /// Appends each server of [lo, hi) independently with probability q,
        /// skipping geometrically between hits.
        inline void bernoulli_range(BipartiteGraph::Builder &builder, std::uint32_t lo, std::uint32_t hi, double q,
                                    Rng &rng)
        {
            if (lo >= hi || q <= 0.0)
            {
                return;
            }
            if (q >= 1.0)
            {
                for (std::uint32_t r = lo; r < hi; ++r)
                {
                    builder.add(r);
                }
                return;
            }
            const double log_miss = std::log1p(-q);
            std::uint64_t r = lo;
            while (true)
            {
                const double skip = std::floor(std::log(rng.uniform_open_zero()) / log_miss);
                if (skip >= static_cast<double>(hi - r))
                {
                    return;
                }
                r += static_cast<std::uint64_t>(skip);
                builder.add(static_cast<std::uint32_t>(r));
                ++r;
                if (r >= hi)
                {
                    return;
                }
            }
        }

        inline void patch_if_isolated(BipartiteGraph::Builder &builder, std::uint32_t num_servers, Rng &rng,
                                      GraphMetadata &meta)
        {
            if (builder.current_degree() == 0)
            {
                builder.add(static_cast<std::uint32_t>(rng.below(num_servers)));
                ++meta.patched_ports;
            }
        }

        inline BipartiteGraph threshold_graph(std::span<const double> port_rates, const SystemSpec &spec,
                                              const TheoryParams &theory, double h1, double h2, std::uint64_t seed,
                                              const GeneratorOptions &options)
        {
            const std::uint32_t n = spec.num_servers();
            const double nd = static_cast<double>(n);
            const std::size_t k = theory.K;
            const std::uint32_t fast_end = k >= 2 ? spec.class_begin(k - 1) : 0;  // end of R_{K-1}
            const std::uint32_t k_end = spec.class_end(k - 1);                      // end of R_K
            Rng rng(seed);
            GraphMetadata meta;
            BipartiteGraph::Builder builder(n);
            for (double lam : port_rates)
            {
                const double q1 = std::min(1.0, lam * h1 / (nd * theory.d_tilde_1));
                const double q2 = std::min(1.0, lam * h2 / (nd * theory.d_tilde_2));
                bernoulli_range(builder, 0, fast_end, q1, rng);
                bernoulli_range(builder, fast_end, k_end, q2, rng);
                if (options.slow_edges)
                {
                    bernoulli_range(builder, k_end, n, q2, rng);
                }
                patch_if_isolated(builder, n, rng, meta);
                builder.end_port();
            }
            return std::move(builder).finish(meta);
        }
    } // namespace detail

    /// Construction for ports with arbitrary rates.
    inline BipartiteGraph generate_heterogeneous(std::span<const double> port_rates, const SystemSpec &spec,
                                                 const TheoryParams &theory, std::uint64_t seed,
                                                 const GeneratorOptions &options = {})
    {
        const auto l = static_cast<std::uint32_t>(port_rates.size());
        const double h1 = heterogeneous_h(theory.p1, spec.num_servers(), l);
        const double h2 = heterogeneous_h(theory.p2, spec.num_servers(), l);
        return detail::threshold_graph(port_rates, spec, theory, h1, h2, seed, options);
    }

    /// Sparser construction, valid when every port has the same rate.
    inline BipartiteGraph generate_homogeneous(const SystemSpec &spec, const TheoryParams &theory, std::uint64_t seed,
                                               const GeneratorOptions &options = {})
    {
        const auto rates = spec.port_rates();
        const double lambda_bar = rates.front();
        for (double r : rates)
        {
            if (std::abs(r - lambda_bar) > 1e-12 * lambda_bar)
            {
                throw ConfigError("homogeneous construction requires equal rates");
            }
        }
        const double mu_1 = spec.classes().front().rate;
        const double h1 = homogeneous_h(theory.p1, theory.d_tilde_1, lambda_bar, mu_1);
        const double h2 = homogeneous_h(theory.p2, theory.d_tilde_2, lambda_bar, mu_1);
        return detail::threshold_graph(rates, spec, theory, h1, h2, seed, options);
    }

    /// Edge probability 2 sqrt(ln N) / (N (1 - load)) * ln(1 / (1 - load)), clamped to 1.
    inline double sim_random_probability(std::uint32_t num_servers, double load)
    {
        const double n = static_cast<double>(num_servers);
        const double q = 2.0 * std::sqrt(std::log(n)) / (n * (1.0 - load)) * std::log(1.0 / (1.0 - load));
        return std::min(1.0, q);
    }

    /// Erdos-Renyi style bipartite graph used by the many-server experiments.
    inline BipartiteGraph generate_sim_random(std::uint32_t num_servers, std::uint32_t num_ports, double load,
                                              std::uint64_t seed)
    {
        if (!(load > 0.0 && load < 1.0))
        {
            throw ConfigError("load must lie in (0, 1)");
        }
        if (num_servers == 0)
        {
            throw ConfigError("graph needs at least one server");
        }
        const double q = sim_random_probability(num_servers, load);
        Rng rng(seed);
        GraphMetadata meta;
        BipartiteGraph::Builder builder(num_servers);
        builder.reserve(static_cast<std::size_t>(1.05 * q * num_servers * num_ports) + num_ports);
        for (std::uint32_t l = 0; l < num_ports; ++l)
        {
            detail::bernoulli_range(builder, 0, num_servers, q, rng);
            detail::patch_if_isolated(builder, num_servers, rng, meta);
            builder.end_port();
        }
        return std::move(builder).finish(meta);
    }
} // namespace bplb

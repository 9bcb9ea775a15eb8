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

// Routing rules. Each rule is a pure function of the arriving port's
// neighbor list, the queue lengths, the per-server service rates and a
// random stream. A decision either names a neighbor or reports a block.
//
// Random draws, in order, for reproducibility:
//   jfsq/jsq  one draw in [0, ties) when the tie set has more than one server
//   jfiq/jiq  one draw among the fastest idle (or all idle) neighbors when
//             more than one qualifies; otherwise one draw among all neighbors
//   random    one draw among all neighbors
//   jsq22     fast pair, slow pair, one uniform for the pF/pS coin (only in
//             the branches that use it), then one draw per tie that arises

#include "bplb/errors.hpp"
#include "bplb/rng.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bplb
{
    enum class PolicyKind
    {
        jfsq,
        jfiq,
        jsq,
        jiq,
        jsq22,
        random
    };

    inline constexpr PolicyKind all_policies[] = {PolicyKind::jfsq, PolicyKind::jfiq, PolicyKind::jsq,
                                                  PolicyKind::jiq,  PolicyKind::jsq22, PolicyKind::random};

    inline std::string_view policy_name(PolicyKind p)
    {
        switch (p)
        {
        case PolicyKind::jfsq: return "jfsq";
        case PolicyKind::jfiq: return "jfiq";
        case PolicyKind::jsq: return "jsq";
        case PolicyKind::jiq: return "jiq";
        case PolicyKind::jsq22: return "jsq22";
        case PolicyKind::random: return "random";
        }
        return "?";
    }

    inline PolicyKind parse_policy(std::string_view name)
    {
        for (auto p : all_policies)
        {
            if (policy_name(p) == name)
            {
                return p;
            }
        }
        throw ConfigError("unknown policy '" + std::string(name) + "' (expected jfsq|jfiq|jsq|jiq|jsq22|random)");
    }

    struct RoutingDecision
    {
        std::optional<std::uint32_t> server;

        static RoutingDecision route(std::uint32_t s) { return {s}; }
        static RoutingDecision blocked_decision() { return {}; }
        bool blocked() const noexcept { return !server.has_value(); }
        friend bool operator==(const RoutingDecision &, const RoutingDecision &) = default;
    };

    /// Read-only view of the queue state a policy decides on.
    struct QueueView
    {
        std::span<const std::int32_t> queues;
        std::span<const double> rates;  ///< service rate of each server
        std::int32_t buffer = 1;
    };

    struct Jsq22Params
    {
        double pf = 1.0;
        double ps = 0.0;
    };

    /// Server lists of the two classes JSQ-(2,2) samples from.
    struct TwoClassPools
    {
        std::span<const std::uint32_t> fast;
        std::span<const std::uint32_t> slow;
    };

    namespace detail
    {
        inline RoutingDecision admit(std::uint32_t s, const QueueView &v)
        {
            return v.queues[s] >= v.buffer ? RoutingDecision::blocked_decision() : RoutingDecision::route(s);
        }

        /// k-th (0-based) neighbor satisfying pred, scanning in list order.
        template <class Pred>
        std::uint32_t kth_matching(std::span<const std::uint32_t> nb, std::uint64_t k, Pred pred)
        {
            for (auto s : nb)
            {
                if (pred(s))
                {
                    if (k == 0)
                    {
                        return s;
                    }
                    --k;
                }
            }
            return nb.back();  // unreachable when k < count
        }

        inline std::uint64_t pick(std::uint64_t count, Rng &rng) { return count > 1 ? rng.below(count) : 0; }
    } // namespace detail

    /// Shortest queue; ties to the fastest server; remaining ties uniform.
    inline RoutingDecision route_jfsq(std::span<const std::uint32_t> nb, const QueueView &v, Rng &rng)
    {
        std::int32_t best_q = v.queues[nb.front()];
        double best_rate = v.rates[nb.front()];
        std::uint64_t ties = 0;
        for (auto s : nb)
        {
            const auto q = v.queues[s];
            const double mu = v.rates[s];
            if (q < best_q || (q == best_q && mu > best_rate))
            {
                best_q = q;
                best_rate = mu;
                ties = 1;
            }
            else if (q == best_q && mu == best_rate)
            {
                ++ties;
            }
        }
        if (best_q >= v.buffer)
        {
            return RoutingDecision::blocked_decision();
        }
        const auto k = detail::pick(ties, rng);
        return RoutingDecision::route(
            detail::kth_matching(nb, k, [&](std::uint32_t s) { return v.queues[s] == best_q && v.rates[s] == best_rate; }));
    }

    /// Shortest queue; ties uniform regardless of rate.
    inline RoutingDecision route_jsq(std::span<const std::uint32_t> nb, const QueueView &v, Rng &rng)
    {
        std::int32_t best_q = v.queues[nb.front()];
        std::uint64_t ties = 0;
        for (auto s : nb)
        {
            const auto q = v.queues[s];
            if (q < best_q)
            {
                best_q = q;
                ties = 1;
            }
            else if (q == best_q)
            {
                ++ties;
            }
        }
        if (best_q >= v.buffer)
        {
            return RoutingDecision::blocked_decision();
        }
        const auto k = detail::pick(ties, rng);
        return RoutingDecision::route(detail::kth_matching(nb, k, [&](std::uint32_t s) { return v.queues[s] == best_q; }));
    }

    /// Fastest idle neighbor (ties uniform); with none idle, a uniform
    /// neighbor, blocked if that one is full. No resampling.
    inline RoutingDecision route_jfiq(std::span<const std::uint32_t> nb, const QueueView &v, Rng &rng)
    {
        double best_rate = -1.0;
        std::uint64_t ties = 0;
        for (auto s : nb)
        {
            if (v.queues[s] != 0)
            {
                continue;
            }
            if (v.rates[s] > best_rate)
            {
                best_rate = v.rates[s];
                ties = 1;
            }
            else if (v.rates[s] == best_rate)
            {
                ++ties;
            }
        }
        if (ties > 0)
        {
            const auto k = detail::pick(ties, rng);
            return RoutingDecision::route(
                detail::kth_matching(nb, k, [&](std::uint32_t s) { return v.queues[s] == 0 && v.rates[s] == best_rate; }));
        }
        return detail::admit(nb[rng.below(nb.size())], v);
    }

    /// Uniform idle neighbor; with none idle, a uniform neighbor (blocked if full).
    inline RoutingDecision route_jiq(std::span<const std::uint32_t> nb, const QueueView &v, Rng &rng)
    {
        std::uint64_t idle = 0;
        for (auto s : nb)
        {
            idle += v.queues[s] == 0;
        }
        if (idle > 0)
        {
            const auto k = detail::pick(idle, rng);
            return RoutingDecision::route(detail::kth_matching(nb, k, [&](std::uint32_t s) { return v.queues[s] == 0; }));
        }
        return detail::admit(nb[rng.below(nb.size())], v);
    }

    /// Uniform neighbor, blocked if full.
    inline RoutingDecision route_random(std::span<const std::uint32_t> nb, const QueueView &v, Rng &rng)
    {
        return detail::admit(nb[rng.below(nb.size())], v);
    }

    namespace detail
    {
        /// Up to two distinct uniform members of pool.
        inline std::pair<std::size_t, std::size_t> sample_pair(std::span<const std::uint32_t> pool,
                                                               std::vector<std::uint32_t> &out, Rng &rng)
        {
            out.clear();
            if (pool.size() <= 2)
            {
                out.assign(pool.begin(), pool.end());
                return {0, out.size()};
            }
            const auto i = rng.below(pool.size());
            auto j = rng.below(pool.size() - 1);
            if (j >= i)
            {
                ++j;
            }
            out.push_back(pool[i]);
            out.push_back(pool[j]);
            return {0, 2};
        }

        /// Uniform choice among the members of `set` with minimal queue.
        inline std::uint32_t shortest_of(std::span<const std::uint32_t> set, const QueueView &v, Rng &rng)
        {
            std::int32_t best = v.queues[set.front()];
            std::uint64_t ties = 0;
            for (auto s : set)
            {
                if (v.queues[s] < best)
                {
                    best = v.queues[s];
                    ties = 1;
                }
                else if (v.queues[s] == best)
                {
                    ++ties;
                }
            }
            const auto k = pick(ties, rng);
            return kth_matching(set, k, [&](std::uint32_t s) { return v.queues[s] == best; });
        }

        inline bool any_idle(std::span<const std::uint32_t> set, const QueueView &v)
        {
            for (auto s : set)
            {
                if (v.queues[s] == 0)
                {
                    return true;
                }
            }
            return false;
        }
    } // namespace detail

    /// JSQ-(2,2): two fast and two slow servers sampled without replacement.
    /// An idle fast one wins; else an idle slow one with probability ps
    /// (otherwise the shorter fast queue); else the shorter fast queue with
    /// probability pf and the shorter slow queue with probability ps.
    inline RoutingDecision route_jsq22(const TwoClassPools &pools, const QueueView &v, const Jsq22Params &params,
                                       Rng &rng)
    {
        thread_local std::vector<std::uint32_t> fast;
        thread_local std::vector<std::uint32_t> slow;
        detail::sample_pair(pools.fast, fast, rng);
        detail::sample_pair(pools.slow, slow, rng);
        std::uint32_t target = 0;
        if (detail::any_idle(fast, v))
        {
            target = detail::shortest_of(fast, v, rng);
        }
        else if (detail::any_idle(slow, v))
        {
            target = rng.uniform() < params.ps ? detail::shortest_of(slow, v, rng) : detail::shortest_of(fast, v, rng);
        }
        else
        {
            target = rng.uniform() < params.pf ? detail::shortest_of(fast, v, rng) : detail::shortest_of(slow, v, rng);
        }
        return detail::admit(target, v);
    }

    // ---------------------------------------------------------------------
    // Exact routing distributions (used by the CTMC oracle).

    struct RoutingDistribution
    {
        std::vector<std::pair<std::uint32_t, double>> targets;  ///< admitted destinations
        double blocked = 0.0;

        void add(std::uint32_t s, double p, const QueueView &v)
        {
            if (p <= 0.0)
            {
                return;
            }
            if (v.queues[s] >= v.buffer)
            {
                blocked += p;
                return;
            }
            for (auto &t : targets)
            {
                if (t.first == s)
                {
                    t.second += p;
                    return;
                }
            }
            targets.emplace_back(s, p);
        }
    };

    namespace detail
    {
        template <class Pred>
        void spread_uniform(RoutingDistribution &d, std::span<const std::uint32_t> set, double mass, const QueueView &v,
                            Pred pred)
        {
            std::uint64_t count = 0;
            for (auto s : set)
            {
                count += pred(s);
            }
            for (auto s : set)
            {
                if (pred(s))
                {
                    d.add(s, mass / static_cast<double>(count), v);
                }
            }
        }

        inline void spread_shortest(RoutingDistribution &d, std::span<const std::uint32_t> set, double mass,
                                    const QueueView &v)
        {
            std::int32_t best = v.queues[set.front()];
            for (auto s : set)
            {
                best = std::min(best, v.queues[s]);
            }
            spread_uniform(d, set, mass, v, [&](std::uint32_t s) { return v.queues[s] == best; });
        }

        inline std::vector<std::vector<std::uint32_t>> all_pairs(std::span<const std::uint32_t> pool)
        {
            std::vector<std::vector<std::uint32_t>> out;
            if (pool.size() <= 2)
            {
                out.emplace_back(pool.begin(), pool.end());
                return out;
            }
            for (std::size_t i = 0; i < pool.size(); ++i)
            {
                for (std::size_t j = i + 1; j < pool.size(); ++j)
                {
                    out.push_back({pool[i], pool[j]});
                }
            }
            return out;
        }
    } // namespace detail

    /// Law of the decision of `policy` at this state, by enumerating its ties
    /// and samples. `pools` is required for jsq22 only.
    inline RoutingDistribution routing_distribution(PolicyKind policy, std::span<const std::uint32_t> nb,
                                                    const QueueView &v, const TwoClassPools *pools = nullptr,
                                                    const Jsq22Params &params = {})
    {
        RoutingDistribution d;
        switch (policy)
        {
        case PolicyKind::jfsq:
        {
            std::int32_t best_q = v.queues[nb.front()];
            for (auto s : nb)
            {
                best_q = std::min(best_q, v.queues[s]);
            }
            double best_rate = 0.0;
            for (auto s : nb)
            {
                if (v.queues[s] == best_q)
                {
                    best_rate = std::max(best_rate, v.rates[s]);
                }
            }
            detail::spread_uniform(d, nb, 1.0, v,
                                   [&](std::uint32_t s) { return v.queues[s] == best_q && v.rates[s] == best_rate; });
            break;
        }
        case PolicyKind::jsq:
            detail::spread_shortest(d, nb, 1.0, v);
            break;
        case PolicyKind::jfiq:
        case PolicyKind::jiq:
        {
            double best_rate = -1.0;
            bool idle = false;
            for (auto s : nb)
            {
                if (v.queues[s] == 0)
                {
                    idle = true;
                    best_rate = std::max(best_rate, v.rates[s]);
                }
            }
            if (!idle)
            {
                detail::spread_uniform(d, nb, 1.0, v, [](std::uint32_t) { return true; });
            }
            else if (policy == PolicyKind::jfiq)
            {
                detail::spread_uniform(d, nb, 1.0, v,
                                       [&](std::uint32_t s) { return v.queues[s] == 0 && v.rates[s] == best_rate; });
            }
            else
            {
                detail::spread_uniform(d, nb, 1.0, v, [&](std::uint32_t s) { return v.queues[s] == 0; });
            }
            break;
        }
        case PolicyKind::random:
            detail::spread_uniform(d, nb, 1.0, v, [](std::uint32_t) { return true; });
            break;
        case PolicyKind::jsq22:
        {
            if (pools == nullptr)
            {
                throw ConfigError("JSQ-(2,2) undefined for this topology");
            }
            const auto fast_pairs = detail::all_pairs(pools->fast);
            const auto slow_pairs = detail::all_pairs(pools->slow);
            const double w = 1.0 / static_cast<double>(fast_pairs.size() * slow_pairs.size());
            for (const auto &f : fast_pairs)
            {
                for (const auto &s : slow_pairs)
                {
                    if (detail::any_idle(f, v))
                    {
                        detail::spread_shortest(d, f, w, v);
                    }
                    else if (detail::any_idle(s, v))
                    {
                        detail::spread_shortest(d, s, w * params.ps, v);
                        detail::spread_shortest(d, f, w * (1.0 - params.ps), v);
                    }
                    else
                    {
                        detail::spread_shortest(d, f, w * params.pf, v);
                        detail::spread_shortest(d, s, w * params.ps, v);
                    }
                }
            }
            break;
        }
        }
        return d;
    }
} // namespace bplb

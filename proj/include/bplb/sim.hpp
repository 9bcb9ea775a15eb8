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

// Continuous-time discrete-event simulation of the bipartite system.
//
// One replication is a single-threaded event loop. Arrivals use one
// Exp(lambda_sigma) clock thinned to a port through an alias table; every
// busy server owns one pending completion, kept in a binary heap ordered by
// (time, server index). A departure is processed before an arrival at the
// same instant. Servers are FCFS.
//
// Per arrival the stream is consumed as: port draw, routing draws, service
// draw (if the job starts service at once), next inter-arrival draw. A
// departure that starts the next job draws that job's service time.
//
// Measurement: with an arrival horizon A, the first floor(w A) arrivals are
// warmup; time averages integrate over [first measured arrival, A-th
// arrival]. Response times are recorded for every measured admitted job; once
// the horizon is reached arrivals stop and the system drains until all of
// them have left (later arrivals cannot delay an earlier FCFS job).

#include "bplb/bipartite_graph.hpp"
#include "bplb/errors.hpp"
#include "bplb/graph.hpp"
#include "bplb/model.hpp"
#include "bplb/policy.hpp"
#include "bplb/rng.hpp"
#include "bplb/service.hpp"
#include "bplb/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <thread>
#include <vector>

namespace bplb
{
    struct Horizon
    {
        enum class Kind
        {
            arrivals,
            time
        };
        Kind kind = Kind::arrivals;
        std::uint64_t arrivals = 1'000'000;
        double time = 0.0;

        static Horizon by_arrivals(std::uint64_t n) { return {Kind::arrivals, n, 0.0}; }
        static Horizon by_time(double t) { return {Kind::time, 0, t}; }
    };

    struct SimOptions
    {
        PolicyKind policy = PolicyKind::jfsq;
        Jsq22Params jsq22;
        ServiceModel service = ServiceModel::exponential();
        Horizon horizon;
        double warmup_fraction = 0.2;
        std::uint64_t seed = 1;
        bool capture_trace = false;
        /// With capture_trace, the Lyapunov tail frequencies are computed
        /// against these constants.
        std::optional<TheoryParams> theory;
        /// Use neighbor scans even on a complete graph (tests only).
        bool force_neighbor_scan = false;
    };

    enum class EventType : std::uint8_t
    {
        arrival,
        departure,
        blocked
    };

    inline const char *event_name(EventType e)
    {
        switch (e)
        {
        case EventType::arrival: return "arrival";
        case EventType::departure: return "departure";
        case EventType::blocked: return "blocked";
        }
        return "?";
    }

    inline constexpr std::uint32_t no_index = std::numeric_limits<std::uint32_t>::max();

    struct TraceEvent
    {
        double time = 0.0;
        EventType type = EventType::arrival;
        std::uint32_t server = no_index;  ///< no_index for blocked arrivals
        std::uint32_t port = no_index;
        std::int32_t queue_after = 0;     ///< queue of `server` after the event; -1 when blocked

        friend bool operator==(const TraceEvent &, const TraceEvent &) = default;
    };

    struct LyapunovTails
    {
        double v1 = 0.0;  ///< fraction of time with V1 >= B1 + chi/(eps N)
        double v2 = 0.0;  ///< fraction of time with V2 >= B2 + chi/(eps N)
        double v3 = 0.0;  ///< fraction of time with V3 >= B3
        double v1_threshold = 0.0;
        double v2_threshold = 0.0;
        double v3_threshold = 0.0;
        bool v3_identically_zero = false;  ///< K == M

        friend bool operator==(const LyapunovTails &, const LyapunovTails &) = default;
    };

    struct Metrics
    {
        double mean_response = 0.0;
        double blocking_prob = 0.0;
        double mean_jobs_scaled = 0.0;      ///< time average of sum_m C_m
        std::vector<double> per_class_jobs; ///< time average of C_m
        double littles_residual = 0.0;
        std::uint64_t admitted = 0;          ///< measured arrivals that joined a queue
        std::uint64_t blocked = 0;           ///< measured arrivals that were lost
        double measured_time = 0.0;
        std::uint64_t events = 0;
        std::optional<LyapunovTails> lyapunov;

        friend bool operator==(const Metrics &, const Metrics &) = default;
    };

    struct SimResult
    {
        Metrics metrics;
        std::vector<TraceEvent> trace;
        double measure_start = 0.0;
        double measure_end = 0.0;
    };

    // ---------------------------------------------------------------------
    // Lyapunov diagnostics

    struct LyapunovSample
    {
        double time;
        double duration;
        double v1;
        double v2;
        double v3;
    };

    struct LyapunovResult
    {
        LyapunovTails tails;
        std::vector<LyapunovSample> series;
    };

    /// Per-class occupancy: jobs and busy servers, as counts.
    struct ClassOccupancy
    {
        std::vector<std::int64_t> jobs;
        std::vector<std::int64_t> busy;
    };

    struct LyapunovValues
    {
        double v1;
        double v2;
        double v3;
    };

    inline LyapunovValues lyapunov_values(const ClassOccupancy &occ, const TheoryParams &t)
    {
        const double n = static_cast<double>(t.num_servers);
        const std::size_t k = t.K - 1;  // 0-based index of class K
        double fast_excess = 0.0;       // sum_{m<K} sum_{j>=2} s_{m,j}
        double fast_busy = 0.0;         // sum_{m<K} s_{m,1}
        double fast_cstar = 0.0;
        for (std::size_t m = 0; m < k; ++m)
        {
            fast_excess += static_cast<double>(occ.jobs[m] - occ.busy[m]) / n;
            fast_busy += static_cast<double>(occ.busy[m]) / n;
            fast_cstar += t.c_star_per_class[m];
        }
        const double ck = static_cast<double>(occ.jobs[k]) / n;
        const double sk1 = static_cast<double>(occ.busy[k]) / n;
        LyapunovValues v{};
        v.v1 = std::min(ck + fast_excess, fast_cstar - fast_busy);
        const double excess_k = fast_excess + ck - sk1;
        v.v2 = std::min(excess_k, t.c_star + t.B2 + 3.0 * t.tau_1K * t.delta_bar - (fast_busy + sk1));
        v.v3 = 0.0;
        for (std::size_t m = k + 1; m < occ.jobs.size(); ++m)
        {
            v.v3 += static_cast<double>(occ.jobs[m]) / n;
        }
        return v;
    }

    /// Replays a trace from the empty state and reports the holding-time
    /// weighted tail frequencies of V1, V2, V3 over [from, to].
    inline LyapunovResult lyapunov_trace(std::span<const TraceEvent> trace, const TheoryParams &theory,
                                         const SystemSpec &spec, double from = 0.0,
                                         double to = std::numeric_limits<double>::infinity(), bool keep_series = false)
    {
        LyapunovResult out;
        auto &tails = out.tails;
        const double n = static_cast<double>(spec.num_servers());
        tails.v1_threshold = theory.B1 + theory.chi / (theory.epsilon * n);
        tails.v2_threshold = theory.B2 + theory.chi / (theory.epsilon * n);
        tails.v3_threshold = theory.B3;
        tails.v3_identically_zero = theory.K == theory.num_classes;

        ClassOccupancy occ{std::vector<std::int64_t>(spec.num_classes(), 0),
                           std::vector<std::int64_t>(spec.num_classes(), 0)};
        double t_prev = 0.0;
        double total = 0.0;
        double above[3] = {0.0, 0.0, 0.0};
        auto accumulate_until = [&](double t_next) {
            const double lo = std::max(t_prev, from);
            const double hi = std::min(t_next, to);
            if (hi > lo)
            {
                const auto v = lyapunov_values(occ, theory);
                const double dt = hi - lo;
                total += dt;
                above[0] += v.v1 >= tails.v1_threshold ? dt : 0.0;
                above[1] += v.v2 >= tails.v2_threshold ? dt : 0.0;
                above[2] += (!tails.v3_identically_zero && v.v3 >= tails.v3_threshold) ? dt : 0.0;
                if (keep_series)
                {
                    out.series.push_back({lo, dt, v.v1, v.v2, v.v3});
                }
            }
            t_prev = t_next;
        };
        for (const auto &e : trace)
        {
            accumulate_until(e.time);
            if (e.type == EventType::blocked)
            {
                continue;
            }
            const auto m = spec.class_of(e.server);
            if (e.type == EventType::arrival)
            {
                ++occ.jobs[m];
                occ.busy[m] += e.queue_after == 1;
            }
            else
            {
                --occ.jobs[m];
                occ.busy[m] -= e.queue_after == 0;
            }
        }
        if (std::isfinite(to))
        {
            accumulate_until(to);
        }
        if (total > 0.0)
        {
            tails.v1 = above[0] / total;
            tails.v2 = above[1] / total;
            tails.v3 = above[2] / total;
        }
        return out;
    }

    namespace detail
    {
        /// Walker alias table over port rates.
        class AliasTable
        {
        public:
            explicit AliasTable(std::span<const double> weights)
                : prob_(weights.size()), alias_(weights.size())
            {
                const std::size_t n = weights.size();
                const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
                std::vector<double> scaled(n);
                std::vector<std::uint32_t> small;
                std::vector<std::uint32_t> large;
                for (std::size_t i = 0; i < n; ++i)
                {
                    scaled[i] = weights[i] * static_cast<double>(n) / sum;
                    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
                }
                while (!small.empty() && !large.empty())
                {
                    const auto s = small.back();
                    small.pop_back();
                    const auto l = large.back();
                    prob_[s] = scaled[s];
                    alias_[s] = l;
                    scaled[l] -= 1.0 - scaled[s];
                    if (scaled[l] < 1.0)
                    {
                        large.pop_back();
                        small.push_back(l);
                    }
                }
                for (auto i : large)
                {
                    prob_[i] = 1.0;
                    alias_[i] = i;
                }
                for (auto i : small)
                {
                    prob_[i] = 1.0;
                    alias_[i] = i;
                }
            }

            std::uint32_t sample(Rng &rng) const
            {
                const double x = rng.uniform() * static_cast<double>(prob_.size());
                auto i = static_cast<std::size_t>(x);
                if (i >= prob_.size())
                {
                    i = prob_.size() - 1;
                }
                return x - static_cast<double>(i) < prob_[i] ? static_cast<std::uint32_t>(i) : alias_[i];
            }

        private:
            std::vector<double> prob_;
            std::vector<std::uint32_t> alias_;
        };

        /// Servers of each class kept grouped by queue length, so that on a
        /// complete graph the shortest/idle sets are available in O(1).
        /// Within a class, order[start[q] .. start[q+1]) holds the servers
        /// whose queue is q.
        class LevelIndex
        {
        public:
            LevelIndex(const SystemSpec &spec) : pos_(spec.num_servers())
            {
                const auto b = static_cast<std::size_t>(spec.buffer());
                for (std::size_t m = 0; m < spec.num_classes(); ++m)
                {
                    ClassLevels c;
                    for (auto r = spec.class_begin(m); r < spec.class_end(m); ++r)
                    {
                        pos_[r] = static_cast<std::uint32_t>(c.order.size());
                        c.order.push_back(r);
                    }
                    c.start.assign(b + 2, static_cast<std::uint32_t>(c.order.size()));
                    c.start[0] = 0;
                    classes_.push_back(std::move(c));
                }
            }

            /// Server r (class m) moves from level q to q + 1.
            void increment(std::uint32_t r, std::uint32_t m, std::int32_t q)
            {
                auto &c = classes_[m];
                const std::uint32_t last = c.start[q + 1] - 1;
                swap_positions(c, pos_[r], last);
                --c.start[q + 1];
            }

            /// Server r (class m) moves from level q to q - 1.
            void decrement(std::uint32_t r, std::uint32_t m, std::int32_t q)
            {
                auto &c = classes_[m];
                const std::uint32_t first = c.start[q];
                swap_positions(c, pos_[r], first);
                ++c.start[q];
            }

            std::uint32_t count(std::size_t m, std::int32_t q) const
            {
                return classes_[m].start[q + 1] - classes_[m].start[q];
            }
            std::uint32_t member(std::size_t m, std::int32_t q, std::uint64_t k) const
            {
                return classes_[m].order[classes_[m].start[q] + k];
            }
            std::size_t num_classes() const { return classes_.size(); }

        private:
            struct ClassLevels
            {
                std::vector<std::uint32_t> order;
                std::vector<std::uint32_t> start;
            };

            void swap_positions(ClassLevels &c, std::uint32_t i, std::uint32_t j)
            {
                std::swap(c.order[i], c.order[j]);
                pos_[c.order[i]] = i;
                pos_[c.order[j]] = j;
            }

            std::vector<ClassLevels> classes_;
            std::vector<std::uint32_t> pos_;
        };

        /// Dispatches a policy over either neighbor scans or the level index.
        class Router
        {
        public:
            Router(const SystemSpec &spec, const BipartiteGraph &graph, const SimOptions &options)
                : spec_(spec), graph_(graph), policy_(options.policy), jsq22_(options.jsq22)
            {
                if (policy_ == PolicyKind::jsq22)
                {
                    if (spec.num_classes() != 2 || !graph.is_fully_connected())
                    {
                        throw ConfigError("JSQ-(2,2) undefined for this topology");
                    }
                    if (std::abs(jsq22_.pf + jsq22_.ps - 1.0) > 1e-12 || jsq22_.pf < 0.0 || jsq22_.ps < 0.0)
                    {
                        throw ConfigError("JSQ-(2,2) needs pf, ps >= 0 with pf + ps = 1");
                    }
                    all_servers_.resize(spec.num_servers());
                    std::iota(all_servers_.begin(), all_servers_.end(), 0u);
                    pools_.fast = std::span<const std::uint32_t>(all_servers_).subspan(0, spec.class_end(0));
                    pools_.slow = std::span<const std::uint32_t>(all_servers_).subspan(spec.class_begin(1));
                }
                else if (graph.is_fully_connected() && !options.force_neighbor_scan)
                {
                    levels_.emplace(spec);
                }
            }

            bool uses_level_index() const { return levels_.has_value(); }

            RoutingDecision route(std::uint32_t port, const QueueView &v, Rng &rng) const
            {
                if (policy_ == PolicyKind::jsq22)
                {
                    return route_jsq22(pools_, v, jsq22_, rng);
                }
                if (levels_)
                {
                    return route_indexed(v, rng);
                }
                const auto nb = graph_.port_neighbors(port);
                switch (policy_)
                {
                case PolicyKind::jfsq: return route_jfsq(nb, v, rng);
                case PolicyKind::jfiq: return route_jfiq(nb, v, rng);
                case PolicyKind::jsq: return route_jsq(nb, v, rng);
                case PolicyKind::jiq: return route_jiq(nb, v, rng);
                case PolicyKind::random: return route_random(nb, v, rng);
                case PolicyKind::jsq22: break;
                }
                return RoutingDecision::blocked_decision();
            }

            void on_arrival(std::uint32_t r, std::int32_t q_before)
            {
                if (levels_)
                {
                    levels_->increment(r, spec_.class_of(r), q_before);
                }
            }
            void on_departure(std::uint32_t r, std::int32_t q_before)
            {
                if (levels_)
                {
                    levels_->decrement(r, spec_.class_of(r), q_before);
                }
            }

        private:
            RoutingDecision route_indexed(const QueueView &v, Rng &rng) const
            {
                const auto &lv = *levels_;
                const std::size_t classes = lv.num_classes();
                const auto n = static_cast<std::uint64_t>(spec_.num_servers());
                switch (policy_)
                {
                case PolicyKind::jfsq:
                case PolicyKind::jsq:
                {
                    std::int32_t best = std::numeric_limits<std::int32_t>::max();
                    for (std::size_t m = 0; m < classes; ++m)
                    {
                        best = std::min(best, v.queues[lv.member(m, 0, 0)]);
                    }
                    if (best >= v.buffer)
                    {
                        return RoutingDecision::blocked_decision();
                    }
                    if (policy_ == PolicyKind::jfsq)
                    {
                        for (std::size_t m = 0; m < classes; ++m)
                        {
                            const auto c = lv.count(m, best);
                            if (c > 0)
                            {
                                return RoutingDecision::route(lv.member(m, best, pick(c, rng)));
                            }
                        }
                    }
                    std::uint64_t total = 0;
                    for (std::size_t m = 0; m < classes; ++m)
                    {
                        total += lv.count(m, best);
                    }
                    return RoutingDecision::route(locate(best, pick(total, rng)));
                }
                case PolicyKind::jfiq:
                    for (std::size_t m = 0; m < classes; ++m)
                    {
                        const auto c = lv.count(m, 0);
                        if (c > 0)
                        {
                            return RoutingDecision::route(lv.member(m, 0, pick(c, rng)));
                        }
                    }
                    return admit(static_cast<std::uint32_t>(rng.below(n)), v);
                case PolicyKind::jiq:
                {
                    std::uint64_t idle = 0;
                    for (std::size_t m = 0; m < classes; ++m)
                    {
                        idle += lv.count(m, 0);
                    }
                    if (idle > 0)
                    {
                        return RoutingDecision::route(locate(0, pick(idle, rng)));
                    }
                    return admit(static_cast<std::uint32_t>(rng.below(n)), v);
                }
                case PolicyKind::random:
                    return admit(static_cast<std::uint32_t>(rng.below(n)), v);
                case PolicyKind::jsq22: break;
                }
                return RoutingDecision::blocked_decision();
            }

            /// k-th server at level q, counting across classes in class order.
            std::uint32_t locate(std::int32_t q, std::uint64_t k) const
            {
                for (std::size_t m = 0; m < levels_->num_classes(); ++m)
                {
                    const auto c = levels_->count(m, q);
                    if (k < c)
                    {
                        return levels_->member(m, q, k);
                    }
                    k -= c;
                }
                return 0;
            }

            static RoutingDecision admit(std::uint32_t s, const QueueView &v)
            {
                return v.queues[s] >= v.buffer ? RoutingDecision::blocked_decision() : RoutingDecision::route(s);
            }
            static std::uint64_t pick(std::uint64_t count, Rng &rng) { return count > 1 ? rng.below(count) : 0; }

            const SystemSpec &spec_;
            const BipartiteGraph &graph_;
            PolicyKind policy_;
            Jsq22Params jsq22_;
            std::optional<LevelIndex> levels_;
            std::vector<std::uint32_t> all_servers_;
            TwoClassPools pools_;
        };

        /// FCFS queue of (arrival time, port) for one server.
        class JobFifo
        {
        public:
            struct Job
            {
                double arrival;
                std::uint32_t port;
            };

            void push(Job j)
            {
                if (size_ == buf_.size())
                {
                    grow();
                }
                buf_[(head_ + size_) & (buf_.size() - 1)] = j;
                ++size_;
            }
            Job pop()
            {
                const Job j = buf_[head_];
                head_ = (head_ + 1) & (buf_.size() - 1);
                --size_;
                return j;
            }
            std::size_t size() const { return size_; }

        private:
            void grow()
            {
                std::vector<Job> next(buf_.empty() ? 4 : buf_.size() * 2);
                for (std::size_t i = 0; i < size_; ++i)
                {
                    next[i] = buf_[(head_ + i) & (buf_.size() - 1)];
                }
                buf_ = std::move(next);
                head_ = 0;
            }

            std::vector<Job> buf_;
            std::size_t head_ = 0;
            std::size_t size_ = 0;
        };
    } // namespace detail

    inline SimResult simulate(const SystemSpec &spec, const BipartiteGraph &graph, const SimOptions &options)
    {
        validate_graph(spec, graph);
        if (!(options.warmup_fraction >= 0.0 && options.warmup_fraction <= 0.9))
        {
            throw ConfigError("warmup fraction must lie in [0, 0.9]");
        }
        const auto &h = options.horizon;
        if ((h.kind == Horizon::Kind::arrivals && h.arrivals == 0) ||
            (h.kind == Horizon::Kind::time && !(h.time > 0.0)))
        {
            throw ConfigError("horizon must be positive");
        }

        const std::uint32_t n = spec.num_servers();
        const std::size_t num_classes = spec.num_classes();
        const std::int32_t b = spec.buffer();
        const double lambda_sigma = spec.total_arrival_rate();
        const auto rates = spec.server_rates();

        Rng rng(options.seed);
        detail::AliasTable ports(spec.port_rates());
        detail::Router router(spec, graph, options);

        std::vector<std::int32_t> queues(n, 0);
        std::vector<detail::JobFifo> fifo(n);
        using Departure = std::pair<double, std::uint32_t>;
        std::priority_queue<Departure, std::vector<Departure>, std::greater<>> departures;
        std::vector<std::int64_t> class_jobs(num_classes, 0);
        std::int64_t jobs = 0;

        const bool by_arrivals = h.kind == Horizon::Kind::arrivals;
        const std::uint64_t warm_arrivals =
            by_arrivals ? static_cast<std::uint64_t>(std::floor(options.warmup_fraction * static_cast<double>(h.arrivals)))
                        : 0;
        const double warm_time = by_arrivals ? 0.0 : options.warmup_fraction * h.time;

        SimResult result;
        auto &metrics = result.metrics;
        std::vector<double> class_area(num_classes, 0.0);
        double area = 0.0;
        bool measuring = false;
        double measure_start = by_arrivals ? std::numeric_limits<double>::infinity() : warm_time;
        double measure_end = by_arrivals ? std::numeric_limits<double>::infinity() : h.time;
        double response_sum = 0.0;
        std::uint64_t completed = 0;
        std::int64_t tagged_in_system = 0;
        std::uint64_t arrival_count = 0;
        bool arrivals_open = true;

        double now = 0.0;
        double t_prev = 0.0;
        double next_arrival = rng.exponential(lambda_sigma);

        auto integrate = [&](double t_next) {
            if (measuring || !by_arrivals)
            {
                const double lo = std::max(t_prev, measure_start);
                const double hi = std::min(t_next, measure_end);
                if (hi > lo)
                {
                    const double dt = hi - lo;
                    area += dt * static_cast<double>(jobs);
                    for (std::size_t m = 0; m < num_classes; ++m)
                    {
                        class_area[m] += dt * static_cast<double>(class_jobs[m]);
                    }
                }
            }
            t_prev = t_next;
        };

        auto start_service = [&](std::uint32_t r) {
            departures.emplace(now + options.service.sample(rates[r], rng), r);
        };

        auto trace = [&](EventType type, std::uint32_t server, std::uint32_t port, std::int32_t q) {
            if (options.capture_trace)
            {
                result.trace.push_back({now, type, server, port, q});
            }
        };

        while (true)
        {
            const bool have_departure = !departures.empty();
            if (!arrivals_open && (tagged_in_system == 0 || !have_departure))
            {
                break;
            }
            const bool take_departure = have_departure && (!arrivals_open || departures.top().first <= next_arrival);
            const double t_next = take_departure ? departures.top().first : next_arrival;

            if (!by_arrivals && arrivals_open && !take_departure && t_next > h.time)
            {
                integrate(h.time);
                now = h.time;
                arrivals_open = false;
                continue;
            }

            integrate(t_next);
            now = t_next;
            ++metrics.events;

            if (take_departure)
            {
                const auto r = departures.top().second;
                departures.pop();
                const auto job = fifo[r].pop();
                router.on_departure(r, queues[r]);
                --queues[r];
                --class_jobs[spec.class_of(r)];
                --jobs;
                assert(queues[r] >= 0);
                if (job.arrival >= measure_start && job.arrival <= measure_end)
                {
                    response_sum += now - job.arrival;
                    ++completed;
                    --tagged_in_system;
                }
                trace(EventType::departure, r, job.port, queues[r]);
                if (queues[r] > 0)
                {
                    start_service(r);
                }
                continue;
            }

            // Arrival.
            ++arrival_count;
            if (by_arrivals && arrival_count == warm_arrivals + 1)
            {
                measuring = true;
                measure_start = now;
                t_prev = now;
            }
            const bool measured = by_arrivals ? arrival_count > warm_arrivals : now >= measure_start;
            const auto port = ports.sample(rng);
            const QueueView view{queues, rates, b};
            const auto decision = router.route(port, view, rng);
            if (decision.blocked())
            {
                metrics.blocked += measured;
                trace(EventType::blocked, no_index, port, -1);
            }
            else
            {
                const auto r = *decision.server;
                assert(graph.has_edge(port, r));
                assert(queues[r] < b);
                router.on_arrival(r, queues[r]);
                ++queues[r];
                ++class_jobs[spec.class_of(r)];
                ++jobs;
                fifo[r].push({now, port});
                if (measured)
                {
                    ++metrics.admitted;
                    ++tagged_in_system;
                }
                trace(EventType::arrival, r, port, queues[r]);
                if (queues[r] == 1)
                {
                    start_service(r);
                }
            }
            next_arrival = now + rng.exponential(lambda_sigma);
            if (by_arrivals && arrival_count == h.arrivals)
            {
                measure_end = now;
                arrivals_open = false;
            }
        }

        if (metrics.admitted == 0 || completed == 0)
        {
            throw RuntimeError("no samples");
        }
        const double window = measure_end - measure_start;
        metrics.measured_time = window;
        metrics.mean_response = response_sum / static_cast<double>(completed);
        metrics.blocking_prob =
            static_cast<double>(metrics.blocked) / static_cast<double>(metrics.admitted + metrics.blocked);
        const double nd = static_cast<double>(n);
        metrics.mean_jobs_scaled = window > 0.0 ? area / window / nd : 0.0;
        for (std::size_t m = 0; m < num_classes; ++m)
        {
            metrics.per_class_jobs.push_back(window > 0.0 ? class_area[m] / window / nd : 0.0);
        }
        const double little_l = metrics.mean_jobs_scaled * nd;
        const double little_rhs = lambda_sigma * (1.0 - metrics.blocking_prob) * metrics.mean_response;
        metrics.littles_residual = little_l > 0.0 ? std::abs(little_l - little_rhs) / little_l : 0.0;
        result.measure_start = measure_start;
        result.measure_end = measure_end;

        if (options.capture_trace && options.theory)
        {
            metrics.lyapunov =
                lyapunov_trace(result.trace, *options.theory, spec, measure_start, measure_end).tails;
        }
        return result;
    }

    // ---------------------------------------------------------------------
    // Replications

    struct ReplicationOptions
    {
        std::uint32_t replications = 10;
        std::uint64_t base_seed = 1;
        unsigned workers = 0;          ///< 0: hardware concurrency
        bool identical_seeds = false;  ///< every replication reuses base_seed
    };

    struct ReplicatedMetrics
    {
        Estimate mean_response;
        Estimate blocking_prob;
        Estimate mean_jobs_scaled;
        Estimate littles_residual;
        std::vector<Estimate> per_class_jobs;
        std::optional<Estimate> lyapunov_v1;
        std::optional<Estimate> lyapunov_v2;
        std::optional<Estimate> lyapunov_v3;
        std::uint64_t admitted = 0;
        std::uint64_t blocked = 0;
        std::vector<Metrics> runs;
    };

    inline std::uint64_t replication_seed(const ReplicationOptions &o, std::uint32_t index)
    {
        return o.identical_seeds ? o.base_seed : derive_seed(o.base_seed, index);
    }

    /// Runs fn(0..count) on a bounded set of threads; results land by index,
    /// so the outcome does not depend on scheduling.
    template <class T, class Fn>
    std::vector<T> run_indexed(std::uint32_t count, unsigned workers, Fn fn)
    {
        std::vector<std::optional<T>> slots(count);
        std::vector<std::exception_ptr> errors(count);
        if (workers == 0)
        {
            workers = std::max(1u, std::thread::hardware_concurrency());
        }
        workers = std::min<unsigned>(workers, std::max<std::uint32_t>(count, 1));
        std::atomic<std::uint32_t> next{0};
        auto body = [&] {
            for (auto i = next.fetch_add(1); i < count; i = next.fetch_add(1))
            {
                try
                {
                    slots[i].emplace(fn(i));
                }
                catch (...)
                {
                    errors[i] = std::current_exception();
                }
            }
        };
        if (workers <= 1)
        {
            body();
        }
        else
        {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < workers; ++w)
            {
                pool.emplace_back(body);
            }
        }
        for (auto &e : errors)
        {
            if (e)
            {
                std::rethrow_exception(e);
            }
        }
        std::vector<T> out;
        out.reserve(count);
        for (auto &s : slots)
        {
            out.push_back(std::move(*s));
        }
        return out;
    }

    inline ReplicatedMetrics aggregate(std::vector<Metrics> runs)
    {
        ReplicatedMetrics out;
        std::vector<double> resp, block, jobs, little;
        for (const auto &r : runs)
        {
            resp.push_back(r.mean_response);
            block.push_back(r.blocking_prob);
            jobs.push_back(r.mean_jobs_scaled);
            little.push_back(r.littles_residual);
            out.admitted += r.admitted;
            out.blocked += r.blocked;
        }
        out.mean_response = summarize(resp);
        out.blocking_prob = summarize(block);
        out.mean_jobs_scaled = summarize(jobs);
        out.littles_residual = summarize(little);
        if (!runs.empty())
        {
            for (std::size_t m = 0; m < runs.front().per_class_jobs.size(); ++m)
            {
                std::vector<double> xs;
                for (const auto &r : runs)
                {
                    xs.push_back(r.per_class_jobs[m]);
                }
                out.per_class_jobs.push_back(summarize(xs));
            }
            if (runs.front().lyapunov)
            {
                std::vector<double> a, b, c;
                for (const auto &r : runs)
                {
                    a.push_back(r.lyapunov->v1);
                    b.push_back(r.lyapunov->v2);
                    c.push_back(r.lyapunov->v3);
                }
                out.lyapunov_v1 = summarize(a);
                out.lyapunov_v2 = summarize(b);
                out.lyapunov_v3 = summarize(c);
            }
        }
        out.runs = std::move(runs);
        return out;
    }

    /// Replications on one fixed graph.
    inline ReplicatedMetrics simulate_replications(const SystemSpec &spec, const BipartiteGraph &graph,
                                                   const SimOptions &options, const ReplicationOptions &rep)
    {
        if (rep.replications < 2)
        {
            throw ConfigError("need at least 2 replications");
        }
        auto runs = run_indexed<Metrics>(rep.replications, rep.workers, [&](std::uint32_t i) {
            SimOptions o = options;
            o.seed = replication_seed(rep, i);
            return simulate(spec, graph, o).metrics;
        });
        return aggregate(std::move(runs));
    }

    /// Replications that each draw their own graph from `make_graph(seed)`.
    inline ReplicatedMetrics simulate_replications(const SystemSpec &spec,
                                                   const std::function<BipartiteGraph(std::uint64_t)> &make_graph,
                                                   const SimOptions &options, const ReplicationOptions &rep)
    {
        if (rep.replications < 2)
        {
            throw ConfigError("need at least 2 replications");
        }
        auto runs = run_indexed<Metrics>(rep.replications, rep.workers, [&](std::uint32_t i) {
            SimOptions o = options;
            o.seed = replication_seed(rep, i);
            const auto graph = make_graph(derive_seed(o.seed, 0x67726170ull));
            return simulate(spec, graph, o).metrics;
        });
        return aggregate(std::move(runs));
    }
} // namespace bplb

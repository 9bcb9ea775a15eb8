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

// Stationary distribution of the queue-length CTMC for tiny systems.
// The state space {0..b}^N is indexed in mixed radix (server 0 is the
// least significant digit); the generator is assembled from the exact
// routing law of the chosen policy at every state.

#include "bplb/bipartite_graph.hpp"
#include "bplb/errors.hpp"
#include "bplb/graph.hpp"
#include "bplb/model.hpp"
#include "bplb/policy.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <cstdio>
#include <vector>

namespace bplb
{
    class StateSpace
    {
    public:
        StateSpace(std::uint32_t num_servers, std::int32_t buffer, double budget = 1e6)
            : servers_(num_servers), radix_(buffer + 1)
        {
            const double size = std::pow(static_cast<double>(radix_), static_cast<double>(num_servers));
            if (size > budget)
            {
                throw RuntimeError("state space too large");
            }
            size_ = static_cast<std::size_t>(std::llround(size));
            stride_.resize(num_servers);
            std::size_t s = 1;
            for (std::uint32_t r = 0; r < num_servers; ++r)
            {
                stride_[r] = s;
                s *= static_cast<std::size_t>(radix_);
            }
        }

        std::size_t size() const noexcept { return size_; }
        std::uint32_t num_servers() const noexcept { return servers_; }
        std::size_t stride(std::uint32_t server) const { return stride_[server]; }

        std::size_t index(std::span<const std::int32_t> q) const
        {
            std::size_t i = 0;
            for (std::uint32_t r = 0; r < servers_; ++r)
            {
                i += static_cast<std::size_t>(q[r]) * stride_[r];
            }
            return i;
        }

        void decode(std::size_t index, std::vector<std::int32_t> &q) const
        {
            q.resize(servers_);
            for (std::uint32_t r = 0; r < servers_; ++r)
            {
                q[r] = static_cast<std::int32_t>(index % static_cast<std::size_t>(radix_));
                index /= static_cast<std::size_t>(radix_);
            }
        }

    private:
        std::uint32_t servers_;
        std::int32_t radix_;
        std::size_t size_ = 0;
        std::vector<std::size_t> stride_;
    };

    struct ExactOptions
    {
        PolicyKind policy = PolicyKind::jfsq;
        Jsq22Params jsq22;
        double state_budget = 1e6;
        std::size_t direct_solve_limit = 10'000;
    };

    struct StationaryDistribution
    {
        StateSpace space;
        std::vector<double> pi;
        double residual = 0.0;          ///< ||pi Q||_inf
        std::size_t clamped_entries = 0; ///< tiny negative entries set to 0
    };

    namespace detail
    {
        struct PolicyContext
        {
            std::vector<std::uint32_t> servers;
            TwoClassPools pools;
            bool has_pools = false;
        };

        inline PolicyContext policy_context(const SystemSpec &spec, const BipartiteGraph &graph, const ExactOptions &o)
        {
            PolicyContext ctx;
            if (o.policy == PolicyKind::jsq22)
            {
                if (spec.num_classes() != 2 || !graph.is_fully_connected())
                {
                    throw ConfigError("JSQ-(2,2) undefined for this topology");
                }
                if (std::abs(o.jsq22.pf + o.jsq22.ps - 1.0) > 1e-12)
                {
                    throw ConfigError("JSQ-(2,2) needs pf + ps = 1");
                }
                ctx.servers.resize(spec.num_servers());
                std::iota(ctx.servers.begin(), ctx.servers.end(), 0u);
                ctx.pools.fast = std::span<const std::uint32_t>(ctx.servers).subspan(0, spec.class_end(0));
                ctx.pools.slow = std::span<const std::uint32_t>(ctx.servers).subspan(spec.class_begin(1));
                ctx.has_pools = true;
            }
            return ctx;
        }
    } // namespace detail

    inline StationaryDistribution stationary(const SystemSpec &spec, const BipartiteGraph &graph,
                                             const ExactOptions &options = {})
    {
        validate_graph(spec, graph);
        StateSpace space(spec.num_servers(), spec.buffer(), options.state_budget);
        const auto ctx = detail::policy_context(spec, graph, options);
        const std::size_t n = space.size();
        const auto rates = spec.server_rates();
        const auto port_rates = spec.port_rates();

        using Triplet = Eigen::Triplet<double, std::int64_t>;
        std::vector<Triplet> generator_t;  // entries of Q^T
        std::vector<std::int32_t> q;
        for (std::size_t i = 0; i < n; ++i)
        {
            space.decode(i, q);
            const QueueView view{q, rates, spec.buffer()};
            double out = 0.0;
            for (std::uint32_t l = 0; l < spec.num_ports(); ++l)
            {
                const auto d = routing_distribution(options.policy, graph.port_neighbors(l), view,
                                                    ctx.has_pools ? &ctx.pools : nullptr, options.jsq22);
                for (const auto &[r, p] : d.targets)
                {
                    const double rate = port_rates[l] * p;
                    generator_t.emplace_back(static_cast<std::int64_t>(i + space.stride(r)), static_cast<std::int64_t>(i), rate);
                    out += rate;
                }
            }
            for (std::uint32_t r = 0; r < spec.num_servers(); ++r)
            {
                if (q[r] > 0)
                {
                    generator_t.emplace_back(static_cast<std::int64_t>(i - space.stride(r)), static_cast<std::int64_t>(i), rates[r]);
                    out += rates[r];
                }
            }
            generator_t.emplace_back(static_cast<std::int64_t>(i), static_cast<std::int64_t>(i), -out);
        }

        using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, std::int64_t>;
        const auto dim = static_cast<std::int64_t>(n);
        SparseMatrix qt(dim, dim);
        qt.setFromTriplets(generator_t.begin(), generator_t.end());

        // Balance equations with the last one replaced by sum(pi) = 1.
        std::vector<Triplet> system;
        system.reserve(generator_t.size() + n);
        for (const auto &t : generator_t)
        {
            if (t.row() != dim - 1)
            {
                system.push_back(t);
            }
        }
        for (std::int64_t j = 0; j < dim; ++j)
        {
            system.emplace_back(dim - 1, j, 1.0);
        }
        SparseMatrix a(dim, dim);
        a.setFromTriplets(system.begin(), system.end());
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
        rhs(dim - 1) = 1.0;

        Eigen::VectorXd x;
        if (n <= options.direct_solve_limit)
        {
            Eigen::SparseLU<SparseMatrix> lu;
            lu.analyzePattern(a);
            lu.factorize(a);
            if (lu.info() != Eigen::Success)
            {
                throw RuntimeError("singular or ill-conditioned generator");
            }
            x = lu.solve(rhs);
        }
        else
        {
            Eigen::SparseMatrix<double, Eigen::RowMajor, std::int64_t> ar = a;
            Eigen::BiCGSTAB<decltype(ar), Eigen::IncompleteLUT<double, std::int64_t>> solver;
            solver.setTolerance(1e-12);
            solver.setMaxIterations(20'000);
            solver.compute(ar);
            if (solver.info() != Eigen::Success)
            {
                throw RuntimeError("singular or ill-conditioned generator");
            }
            x = solver.solve(rhs);
        }

        StationaryDistribution out{space, std::vector<double>(n), 0.0, 0};
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            double v = x(static_cast<std::int64_t>(i));
            if (!std::isfinite(v) || v < -1e-10)
            {
                throw RuntimeError("singular or ill-conditioned generator");
            }
            if (v < 0.0)
            {
                v = 0.0;
                ++out.clamped_entries;
            }
            out.pi[i] = v;
            sum += v;
        }
        for (auto &v : out.pi)
        {
            v /= sum;
        }
        Eigen::Map<const Eigen::VectorXd> pi(out.pi.data(), dim);
        const Eigen::VectorXd balance = qt * pi;
        out.residual = balance.cwiseAbs().maxCoeff();
        if (!(out.residual < 1e-10))
        {
            throw RuntimeError("singular or ill-conditioned generator");
        }
        return out;
    }

    struct ExactMetrics
    {
        double blocking_prob = 0.0;
        double mean_jobs_scaled = 0.0;
        std::vector<double> per_class_jobs;
        std::optional<double> mean_response;  ///< undefined when every arrival is blocked
    };

    inline ExactMetrics exact_metrics(const StationaryDistribution &dist, const SystemSpec &spec,
                                      const BipartiteGraph &graph, const ExactOptions &options = {})
    {
        const auto ctx = detail::policy_context(spec, graph, options);
        const auto rates = spec.server_rates();
        const auto port_rates = spec.port_rates();
        const double lambda_sigma = spec.total_arrival_rate();
        const double n = static_cast<double>(spec.num_servers());
        ExactMetrics m;
        m.per_class_jobs.assign(spec.num_classes(), 0.0);
        std::vector<std::int32_t> q;
        for (std::size_t i = 0; i < dist.space.size(); ++i)
        {
            const double p = dist.pi[i];
            if (p == 0.0)
            {
                continue;
            }
            dist.space.decode(i, q);
            const QueueView view{q, rates, spec.buffer()};
            double block = 0.0;
            for (std::uint32_t l = 0; l < spec.num_ports(); ++l)
            {
                const auto d = routing_distribution(options.policy, graph.port_neighbors(l), view,
                                                    ctx.has_pools ? &ctx.pools : nullptr, options.jsq22);
                block += port_rates[l] / lambda_sigma * d.blocked;
            }
            m.blocking_prob += p * block;
            for (std::uint32_t r = 0; r < spec.num_servers(); ++r)
            {
                m.per_class_jobs[spec.class_of(r)] += p * static_cast<double>(q[r]) / n;
            }
        }
        m.mean_jobs_scaled = std::accumulate(m.per_class_jobs.begin(), m.per_class_jobs.end(), 0.0);
        if (m.blocking_prob < 1.0)
        {
            m.mean_response = n * m.mean_jobs_scaled / (lambda_sigma * (1.0 - m.blocking_prob));
        }
        return m;
    }

    /// CSV dump: state_index,q_1..q_N,probability
    inline void write_stationary_csv(std::ostream &out, const StationaryDistribution &dist)
    {
        out << "state_index";
        for (std::uint32_t r = 0; r < dist.space.num_servers(); ++r)
        {
            out << ",q_" << (r + 1);
        }
        out << ",probability\n";
        std::vector<std::int32_t> q;
        char buf[64];
        for (std::size_t i = 0; i < dist.space.size(); ++i)
        {
            dist.space.decode(i, q);
            out << i;
            for (auto v : q)
            {
                out << ',' << v;
            }
            std::snprintf(buf, sizeof buf, "%.15g", dist.pi[i]);
            out << ',' << buf << '\n';
        }
    }
} // namespace bplb

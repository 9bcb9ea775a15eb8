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

// System description and the closed-form quantities derived from it:
// the optimal scaled job count C*, the delay lower bound C*/lambda, the
// buffer-size window, the well-connectedness parameters, and the Lyapunov
// constants used by the trajectory diagnostics.

#include "bplb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bplb
{
    struct ServerClass
    {
        double rate = 0.0;       ///< service rate (jobs per unit time)
        double fraction = 0.0;   ///< share of all servers, count / N
        std::uint32_t count = 0; ///< number of servers of this class
    };

    /// Input row for building a system from class shares.
    struct ClassShare
    {
        double rate;
        double fraction;
    };

    /// Input row for building a system from explicit class sizes.
    struct ClassCount
    {
        double rate;
        std::uint32_t count;
    };

    /// Largest-remainder apportionment of `total` items over `weights`
    /// (weights need not be normalized). Ties go to the lower index.
    inline std::vector<std::uint32_t> apportion(std::span<const double> weights, std::uint32_t total)
    {
        const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
        std::vector<std::uint32_t> counts(weights.size());
        std::vector<std::pair<double, std::size_t>> remainders;
        std::uint64_t assigned = 0;
        for (std::size_t i = 0; i < weights.size(); ++i)
        {
            const double exact = static_cast<double>(total) * weights[i] / sum;
            counts[i] = static_cast<std::uint32_t>(std::floor(exact));
            assigned += counts[i];
            remainders.emplace_back(exact - std::floor(exact), i);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto &a, const auto &b) { return a.first > b.first; });
        for (std::size_t k = 0; assigned < total; ++k, ++assigned)
        {
            ++counts[remainders[k % remainders.size()].second];
        }
        return counts;
    }

    /// Heterogeneous server pool plus port arrival rates and the per-server
    /// buffer size. Classes are kept in strictly decreasing rate order and
    /// servers are numbered class by class, so class m owns a contiguous
    /// index range and R_m (types 1..m) is a prefix of the server indices.
    class SystemSpec
    {
    public:
        static SystemSpec from_fractions(std::vector<ClassShare> shares, std::uint32_t num_servers,
                                         std::vector<double> port_rates, std::int32_t buffer)
        {
            if (num_servers == 0)
            {
                throw ConfigError("system needs at least one server");
            }
            if (shares.empty())
            {
                throw ConfigError("system needs at least one server class");
            }
            double sum = 0.0;
            for (const auto &s : shares)
            {
                if (!(s.fraction > 0.0) || s.fraction > 1.0)
                {
                    throw ConfigError("class fraction must lie in (0, 1]");
                }
                sum += s.fraction;
            }
            if (std::abs(sum - 1.0) > 1e-12)
            {
                throw ConfigError("class fractions must sum to 1");
            }
            std::vector<double> weights;
            for (const auto &s : shares)
            {
                weights.push_back(s.fraction);
            }
            const auto counts = apportion(weights, num_servers);
            std::vector<ClassCount> rows;
            for (std::size_t i = 0; i < shares.size(); ++i)
            {
                rows.push_back({shares[i].rate, counts[i]});
            }
            return from_counts(std::move(rows), std::move(port_rates), buffer);
        }

        static SystemSpec from_counts(std::vector<ClassCount> rows, std::vector<double> port_rates,
                                      std::int32_t buffer)
        {
            if (rows.empty())
            {
                throw ConfigError("system needs at least one server class");
            }
            for (const auto &r : rows)
            {
                if (!(r.rate > 0.0) || !std::isfinite(r.rate))
                {
                    throw ConfigError("service rate must be positive");
                }
                if (r.count == 0)
                {
                    throw ConfigError("server class with zero servers");
                }
            }
            std::stable_sort(rows.begin(), rows.end(),
                             [](const ClassCount &a, const ClassCount &b) { return a.rate > b.rate; });
            for (std::size_t i = 1; i < rows.size(); ++i)
            {
                if (!(rows[i - 1].rate > rows[i].rate))
                {
                    throw ConfigError("service rates of distinct classes must differ");
                }
            }
            if (port_rates.empty())
            {
                throw ConfigError("system needs at least one port");
            }
            for (double r : port_rates)
            {
                if (!(r > 0.0) || !std::isfinite(r))
                {
                    throw ConfigError("port arrival rate must be positive");
                }
            }
            if (buffer < 1)
            {
                throw ConfigError("buffer size must be at least 1");
            }

            SystemSpec spec;
            std::uint64_t n = 0;
            for (const auto &r : rows)
            {
                n += r.count;
            }
            if (n > 0xFFFFFFFEull)
            {
                throw ConfigError("too many servers");
            }
            for (std::size_t m = 0; m < rows.size(); ++m)
            {
                spec.classes_.push_back(
                    {rows[m].rate, static_cast<double>(rows[m].count) / static_cast<double>(n), rows[m].count});
                spec.class_begin_.push_back(static_cast<std::uint32_t>(spec.server_class_.size()));
                for (std::uint32_t k = 0; k < rows[m].count; ++k)
                {
                    spec.server_class_.push_back(static_cast<std::uint32_t>(m));
                    spec.server_rate_.push_back(rows[m].rate);
                }
            }
            spec.class_begin_.push_back(static_cast<std::uint32_t>(n));
            spec.port_rates_ = std::move(port_rates);
            spec.buffer_ = buffer;
            return spec;
        }

        std::span<const ServerClass> classes() const noexcept { return classes_; }
        std::size_t num_classes() const noexcept { return classes_.size(); }
        std::uint32_t num_servers() const noexcept { return static_cast<std::uint32_t>(server_class_.size()); }
        std::uint32_t num_ports() const noexcept { return static_cast<std::uint32_t>(port_rates_.size()); }
        std::int32_t buffer() const noexcept { return buffer_; }
        std::span<const double> port_rates() const noexcept { return port_rates_; }

        std::uint32_t class_of(std::uint32_t server) const { return server_class_[server]; }
        std::span<const std::uint32_t> server_classes() const noexcept { return server_class_; }
        std::span<const double> server_rates() const noexcept { return server_rate_; }

        /// First server index of class m; class_begin(M) == N.
        std::uint32_t class_begin(std::size_t m) const { return class_begin_[m]; }
        std::uint32_t class_end(std::size_t m) const { return class_begin_[m + 1]; }

        double total_arrival_rate() const noexcept
        {
            return std::accumulate(port_rates_.begin(), port_rates_.end(), 0.0);
        }

        /// N * sum_m mu_m alpha_m.
        double capacity() const noexcept
        {
            double c = 0.0;
            for (const auto &k : classes_)
            {
                c += k.rate * static_cast<double>(k.count);
            }
            return c;
        }

        /// Same system, new port rates (used by load sweeps).
        SystemSpec with_port_rates(std::vector<double> port_rates) const
        {
            std::vector<ClassCount> rows;
            for (const auto &k : classes_)
            {
                rows.push_back({k.rate, k.count});
            }
            return from_counts(std::move(rows), std::move(port_rates), buffer_);
        }

    private:
        SystemSpec() = default;

        std::vector<ServerClass> classes_;
        std::vector<std::uint32_t> class_begin_;
        std::vector<std::uint32_t> server_class_;
        std::vector<double> server_rate_;
        std::vector<double> port_rates_;
        std::int32_t buffer_ = 1;
    };

    /// Optional knobs for derive_theory. Unset values take their defaults:
    /// epsilon = beta_hat / 4 and each d_tilde at its largest admissible value.
    struct TheoryOptions
    {
        std::optional<double> epsilon;
        std::optional<double> d_tilde_1;
        std::optional<double> d_tilde_2;
    };

    struct TheoryParams
    {
        std::size_t num_classes = 0;     ///< M
        std::uint32_t num_servers = 0;   ///< N
        std::int32_t buffer = 0;         ///< b
        double lambda_sigma = 0.0;       ///< total arrival rate
        double lambda = 0.0;             ///< lambda_sigma / N

        std::size_t K = 0;               ///< 1-based count of classes that carry the load
        double beta = 0.0;
        double beta_hat = 0.0;
        std::vector<double> c_star_per_class; ///< C*_1..C*_K
        double c_star = 0.0;
        double service_time_lb = 0.0;    ///< C* / lambda

        double epsilon = 0.0;
        double tau_1K = 0.0;
        double tau_1M = 0.0;
        double tau_KM = 0.0;

        double p1 = 0.0;
        double p2 = 0.0;
        double d_tilde_1 = 0.0;
        double d_tilde_2 = 0.0;

        double delta = 0.0;
        double delta_bar = 0.0;
        double B1 = 0.0;
        double B2 = 0.0;
        double B3 = 0.0;
        double chi = 0.0;

        std::vector<double> rates;   ///< mu_1..mu_M
        std::vector<double> alphas;  ///< alpha_1..alpha_M
    };

    namespace detail
    {
        inline bool within_upper(double value, double limit)
        {
            return value <= limit * (1.0 + 1e-12);
        }
    } // namespace detail

    inline TheoryParams derive_theory(const SystemSpec &spec, const TheoryOptions &options = {})
    {
        TheoryParams t;
        const auto classes = spec.classes();
        t.num_classes = classes.size();
        t.num_servers = spec.num_servers();
        t.buffer = spec.buffer();
        t.lambda_sigma = spec.total_arrival_rate();
        const double n = static_cast<double>(t.num_servers);
        t.lambda = t.lambda_sigma / n;
        for (const auto &c : classes)
        {
            t.rates.push_back(c.rate);
            t.alphas.push_back(c.fraction);
        }

        // K: smallest prefix whose capacity strictly exceeds the load.
        double prefix_work = 0.0;  // sum_{m<=K} mu_m alpha_m
        double prefix_alpha = 0.0; // sum_{m<=K} alpha_m
        for (std::size_t m = 0; m < classes.size(); ++m)
        {
            prefix_work += classes[m].rate * classes[m].fraction;
            prefix_alpha += classes[m].fraction;
            if (n * prefix_work > t.lambda_sigma)
            {
                t.K = m + 1;
                break;
            }
        }
        if (t.K == 0)
        {
            throw ConfigError("insufficient capacity");
        }
        const std::size_t k = t.K - 1;
        t.beta = 1.0 - t.lambda_sigma / (n * prefix_work);
        t.beta_hat = t.beta * prefix_alpha;

        double faster_work = 0.0;
        for (std::size_t m = 0; m < k; ++m)
        {
            t.c_star_per_class.push_back(classes[m].fraction);
            faster_work += classes[m].rate * classes[m].fraction;
        }
        t.c_star_per_class.push_back((t.lambda - faster_work) / classes[k].rate);
        t.c_star = std::accumulate(t.c_star_per_class.begin(), t.c_star_per_class.end(), 0.0);
        t.service_time_lb = t.c_star / t.lambda;

        const double eps_max = t.beta_hat / 4.0;
        t.epsilon = options.epsilon.value_or(eps_max);
        if (!(t.epsilon > 0.0) || !detail::within_upper(t.epsilon, eps_max))
        {
            throw ConfigError("epsilon out of range");
        }

        const double mu_1 = classes.front().rate;
        const double mu_K = classes[k].rate;
        const double mu_M = classes.back().rate;
        t.tau_1K = mu_1 / mu_K;
        t.tau_1M = mu_1 / mu_M;
        t.tau_KM = mu_K / mu_M;

        const double b = static_cast<double>(t.buffer);
        const double eps = t.epsilon;
        t.p1 = eps / (6.0 * b * b);
        t.p2 = t.beta_hat / 2.0;
        const double d1_max = eps * mu_K / (12.0 * b * b * b);
        const double d2_max = eps * mu_K / (2.0 * b);
        t.d_tilde_1 = options.d_tilde_1.value_or(d1_max);
        t.d_tilde_2 = options.d_tilde_2.value_or(d2_max);
        if (!(t.d_tilde_1 > 0.0) || !detail::within_upper(t.d_tilde_1, d1_max) || !(t.d_tilde_2 > 0.0) ||
            !detail::within_upper(t.d_tilde_2, d2_max))
        {
            throw ConfigError("d_tilde out of range");
        }

        t.delta = mu_K * eps / (6.0 * mu_1 * b * b);
        t.delta_bar = t.tau_1K * t.delta;
        t.B1 = t.tau_1K * t.delta;
        t.B2 = eps / 2.0 + t.delta_bar;
        const double log_n = std::log(n);
        t.chi = 96.0 * t.tau_1K * b * b * b * log_n;
        t.B3 = (t.d_tilde_2 * b +
                std::sqrt(mu_1 * mu_M *
                          (5.0 * b * log_n / n + 416.0 * t.tau_1K * b * b * b * b / (t.beta_hat * eps * n)))) /
               mu_M;
        return t;
    }

    struct BufferWindow
    {
        bool ok = false;
        double b_min = 0.0;   ///< 6 sqrt(tau_1K)
        std::int64_t b_max = 0;
        bool empty() const noexcept { return static_cast<double>(b_max) < b_min; }
    };

    /// Admissible buffer sizes for an N-server system at the theory's
    /// epsilon and tau_1K. An empty window is a valid answer.
    inline BufferWindow check_buffer_window(const TheoryParams &theory, std::uint64_t num_servers, std::int64_t buffer)
    {
        BufferWindow w;
        const double n = static_cast<double>(num_servers);
        w.b_min = 6.0 * std::sqrt(theory.tau_1K);
        const double log_n = std::log(n);
        const double inner = log_n > 0.0 ? theory.epsilon * theory.epsilon * n / (1152.0 * theory.tau_1K * log_n) : 0.0;
        w.b_max = static_cast<std::int64_t>(std::floor(std::pow(inner, 0.2)));
        const double bd = static_cast<double>(buffer);
        w.ok = bd >= w.b_min && buffer <= w.b_max;
        return w;
    }

    struct TheoremBounds
    {
        double jobs_excess_bound = 0.0; ///< E[(sum_{m<=K} C_m - (C* + eps))^+]
        std::optional<double> total_jobs_bound; ///< E[sum_m C_m]; absent when K == M
        double blocking_bound = 0.0;
        bool k_equals_m = false;
    };

    inline TheoremBounds evaluate_theorem_bounds(const TheoryParams &t, std::uint64_t num_servers, std::int64_t buffer)
    {
        TheoremBounds out;
        const double n = static_cast<double>(num_servers);
        const double b = static_cast<double>(buffer);
        out.jobs_excess_bound = 52.0 * t.tau_1K * b * b / (t.epsilon * n);
        out.blocking_bound = t.d_tilde_2 / t.lambda + out.jobs_excess_bound;
        out.k_equals_m = t.K == t.num_classes;
        if (!out.k_equals_m)
        {
            out.total_jobs_bound = t.c_star + (1.0 + t.tau_KM / 2.0) * t.epsilon +
                                   2.0 * std::sqrt(5.0 * t.tau_1M * b * std::log(n) / n) +
                                   60.0 * b * b * std::sqrt(26.0 * t.tau_1K * t.tau_1M / (t.beta_hat * t.epsilon * n));
        }
        return out;
    }
} // namespace bplb

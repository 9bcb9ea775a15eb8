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

// Service-time laws. A class with nominal rate mu always has mean service
// time 1/mu; the hyper-exponential law rescales a fixed base variable X so
// that a class-m job takes X / (mu_m E[X]).

#include "bplb/errors.hpp"
#include "bplb/rng.hpp"

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bplb
{
    struct ExpPhase
    {
        double probability;
        double rate;
    };

    class ServiceModel
    {
    public:
        enum class Kind
        {
            exponential,
            hyperexponential
        };

        static ServiceModel exponential() { return ServiceModel{}; }

        static ServiceModel hyperexponential(std::vector<ExpPhase> phases)
        {
            if (phases.empty())
            {
                throw ConfigError("hyper-exponential law needs at least one phase");
            }
            double total = 0.0;
            for (const auto &p : phases)
            {
                if (!(p.probability > 0.0) || !(p.rate > 0.0))
                {
                    throw ConfigError("hyper-exponential phase needs positive probability and rate");
                }
                total += p.probability;
            }
            if (std::abs(total - 1.0) > 1e-12)
            {
                throw ConfigError("hyper-exponential phase probabilities must sum to 1");
            }
            ServiceModel m;
            m.kind_ = Kind::hyperexponential;
            m.phases_ = std::move(phases);
            double cum = 0.0;
            for (const auto &p : m.phases_)
            {
                cum += p.probability;
                m.cumulative_.push_back(cum);
            }
            m.cumulative_.back() = 1.0;
            m.base_mean_ = 0.0;
            for (const auto &p : m.phases_)
            {
                m.base_mean_ += p.probability / p.rate;
            }
            return m;
        }

        /// X ~ Exp(0.01) w.p. 0.01 and Exp(1) w.p. 0.99.
        static ServiceModel reference_hyperexponential()
        {
            return hyperexponential({{0.01, 0.01}, {0.99, 1.0}});
        }

        Kind kind() const noexcept { return kind_; }
        std::string_view name() const noexcept
        {
            return kind_ == Kind::exponential ? "exponential" : "hyperexponential";
        }
        std::span<const ExpPhase> phases() const noexcept { return phases_; }

        /// E[X] of the base variable (1 for the exponential law).
        double base_mean() const noexcept { return base_mean_; }

        double base_second_moment() const noexcept
        {
            if (kind_ == Kind::exponential)
            {
                return 2.0;
            }
            double m2 = 0.0;
            for (const auto &p : phases_)
            {
                m2 += p.probability * 2.0 / (p.rate * p.rate);
            }
            return m2;
        }

        /// Coefficient of variation of X.
        double base_cv() const noexcept
        {
            const double m = base_mean();
            return std::sqrt(base_second_moment() / (m * m) - 1.0);
        }

        /// One draw of X.
        double sample_base(Rng &rng) const
        {
            if (kind_ == Kind::exponential)
            {
                return rng.exponential(1.0);
            }
            const double u = rng.uniform();
            std::size_t i = 0;
            while (i + 1 < cumulative_.size() && u >= cumulative_[i])
            {
                ++i;
            }
            return rng.exponential(phases_[i].rate);
        }

        /// Service time of a job at a server of nominal rate mu.
        double sample(double mu, Rng &rng) const
        {
            if (kind_ == Kind::exponential)
            {
                return rng.exponential(mu);
            }
            return sample_base(rng) / (mu * base_mean_);
        }

    private:
        Kind kind_ = Kind::exponential;
        std::vector<ExpPhase> phases_;
        std::vector<double> cumulative_;
        double base_mean_ = 1.0;
    };
} // namespace bplb

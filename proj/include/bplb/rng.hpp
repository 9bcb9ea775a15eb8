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

// Deterministic random streams.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The distributions below are written out by hand because the
// standard library's distributions are implementation-defined, and every
// result in this project must reproduce bit-for-bit across toolchains.

#include <cmath>
#include <cstdint>
#include <random>

namespace bplb
{
    /// SplitMix64 finalizer; used to turn (base seed, stream id) into engine seeds.
    inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
    {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    /// Seed of an independent stream derived from a base seed. Distinct
    /// streams of the same base never share a seed in practice.
    inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept
    {
        return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
    }

    class Rng
    {
    public:
        using result_type = std::uint64_t;

        explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

        static constexpr result_type min() noexcept { return 0; }
        static constexpr result_type max() noexcept { return ~result_type{0}; }
        result_type operator()() { return engine_(); }

        /// Uniform on [0, 1) with 53 random bits.
        double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

        /// Uniform on (0, 1].
        double uniform_open_zero() { return 1.0 - uniform(); }

        /// Uniform integer in [0, n). Lemire's multiply-shift with rejection; n > 0.
        std::uint64_t below(std::uint64_t n)
        {
            unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
            auto low = static_cast<std::uint64_t>(m);
            if (low < n)
            {
                const std::uint64_t threshold = (0 - n) % n;
                while (low < threshold)
                {
                    m = static_cast<unsigned __int128>(engine_()) * n;
                    low = static_cast<std::uint64_t>(m);
                }
            }
            return static_cast<std::uint64_t>(m >> 64);
        }

        double exponential(double rate) { return -std::log(uniform_open_zero()) / rate; }

        bool bernoulli(double p) { return uniform() < p; }

    private:
        std::mt19937_64 engine_;
    };
} // namespace bplb

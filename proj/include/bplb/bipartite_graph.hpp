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

// Bipartite compatibility graph between L ports and N servers, stored as
// two CSR adjacency views (port -> servers, server -> ports) that are
// transposes of each other. Neighbor lists are sorted and duplicate-free.

#include "bplb/errors.hpp"

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace bplb
{
    /// Counts of repairs applied by the random generators.
    struct GraphMetadata
    {
        std::uint64_t patched_ports = 0;   ///< ports that received one random edge because they were isolated
        std::uint64_t isolated_servers = 0;
    };

    class BipartiteGraph
    {
    public:
        BipartiteGraph() = default;

        /// Builds from one neighbor list per port. Lists are sorted here;
        /// duplicates or out-of-range indices are rejected.
        static BipartiteGraph from_port_lists(std::uint32_t num_servers,
                                              const std::vector<std::vector<std::uint32_t>> &port_lists)
        {
            BipartiteGraph g;
            g.num_servers_ = num_servers;
            g.port_offsets_.reserve(port_lists.size() + 1);
            g.port_offsets_.push_back(0);
            std::vector<std::uint32_t> sorted;
            for (const auto &list : port_lists)
            {
                sorted.assign(list.begin(), list.end());
                std::sort(sorted.begin(), sorted.end());
                if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                {
                    throw ConfigError("duplicate edge in graph");
                }
                if (!sorted.empty() && sorted.back() >= num_servers)
                {
                    throw ConfigError("server index out of range");
                }
                g.port_adj_.insert(g.port_adj_.end(), sorted.begin(), sorted.end());
                g.port_offsets_.push_back(g.port_adj_.size());
            }
            g.build_transpose();
            return g;
        }

        /// Complete bipartite graph K_{L,N}.
        static BipartiteGraph fully_connected(std::uint32_t num_ports, std::uint32_t num_servers)
        {
            BipartiteGraph g;
            g.num_servers_ = num_servers;
            g.port_offsets_.reserve(num_ports + 1);
            g.port_offsets_.push_back(0);
            g.port_adj_.reserve(static_cast<std::size_t>(num_ports) * num_servers);
            for (std::uint32_t l = 0; l < num_ports; ++l)
            {
                for (std::uint32_t r = 0; r < num_servers; ++r)
                {
                    g.port_adj_.push_back(r);
                }
                g.port_offsets_.push_back(g.port_adj_.size());
            }
            g.build_transpose();
            return g;
        }

        std::uint32_t num_ports() const noexcept
        {
            return port_offsets_.empty() ? 0 : static_cast<std::uint32_t>(port_offsets_.size() - 1);
        }
        std::uint32_t num_servers() const noexcept { return num_servers_; }
        std::size_t num_edges() const noexcept { return port_adj_.size(); }

        std::span<const std::uint32_t> port_neighbors(std::uint32_t port) const
        {
            return {port_adj_.data() + port_offsets_[port], port_adj_.data() + port_offsets_[port + 1]};
        }
        std::span<const std::uint32_t> server_neighbors(std::uint32_t server) const
        {
            return {server_adj_.data() + server_offsets_[server], server_adj_.data() + server_offsets_[server + 1]};
        }

        bool is_fully_connected() const noexcept
        {
            return num_edges() == static_cast<std::size_t>(num_ports()) * num_servers_;
        }

        bool has_edge(std::uint32_t port, std::uint32_t server) const
        {
            const auto nb = port_neighbors(port);
            return std::binary_search(nb.begin(), nb.end(), server);
        }

        const GraphMetadata &metadata() const noexcept { return metadata_; }
        GraphMetadata &metadata() noexcept { return metadata_; }

        friend bool operator==(const BipartiteGraph &a, const BipartiteGraph &b)
        {
            return a.num_servers_ == b.num_servers_ && a.port_offsets_ == b.port_offsets_ &&
                   a.port_adj_ == b.port_adj_;
        }

        class Builder;

    private:
        void build_transpose()
        {
            server_offsets_.assign(static_cast<std::size_t>(num_servers_) + 1, 0);
            for (auto r : port_adj_)
            {
                ++server_offsets_[r + 1];
            }
            for (std::size_t r = 0; r < num_servers_; ++r)
            {
                server_offsets_[r + 1] += server_offsets_[r];
            }
            server_adj_.resize(port_adj_.size());
            std::vector<std::size_t> cursor(server_offsets_.begin(), server_offsets_.end() - 1);
            for (std::uint32_t l = 0; l + 1 < port_offsets_.size(); ++l)
            {
                for (std::size_t e = port_offsets_[l]; e < port_offsets_[l + 1]; ++e)
                {
                    server_adj_[cursor[port_adj_[e]]++] = l;
                }
            }
            metadata_.isolated_servers = 0;
            for (std::uint32_t r = 0; r < num_servers_; ++r)
            {
                if (server_offsets_[r] == server_offsets_[r + 1])
                {
                    ++metadata_.isolated_servers;
                }
            }
        }

        std::uint32_t num_servers_ = 0;
        std::vector<std::size_t> port_offsets_;
        std::vector<std::uint32_t> port_adj_;
        std::vector<std::size_t> server_offsets_;
        std::vector<std::uint32_t> server_adj_;
        GraphMetadata metadata_;

        friend class Builder;
    };

    /// Incremental construction, one port at a time, servers ascending.
    class BipartiteGraph::Builder
    {
    public:
        explicit Builder(std::uint32_t num_servers) { graph_.num_servers_ = num_servers; graph_.port_offsets_.push_back(0); }

        /// Appends to the current port; indices must arrive strictly increasing.
        void add(std::uint32_t server) { graph_.port_adj_.push_back(server); }
        void end_port() { graph_.port_offsets_.push_back(graph_.port_adj_.size()); }
        std::size_t current_degree() const
        {
            return graph_.port_adj_.size() - graph_.port_offsets_.back();
        }
        void reserve(std::size_t edges) { graph_.port_adj_.reserve(edges); }

        BipartiteGraph finish(GraphMetadata meta = {}) &&
        {
            graph_.build_transpose();
            const auto isolated = graph_.metadata_.isolated_servers;
            graph_.metadata_ = meta;
            graph_.metadata_.isolated_servers = isolated;
            return std::move(graph_);
        }

    private:
        BipartiteGraph graph_;
    };

    /// Text format: "L N", then one line per port
    /// "port_index degree s1 s2 ... sk" with ascending 0-based server indices.
    inline void write_graph(std::ostream &out, const BipartiteGraph &g)
    {
        out << g.num_ports() << ' ' << g.num_servers() << '\n';
        for (std::uint32_t l = 0; l < g.num_ports(); ++l)
        {
            const auto nb = g.port_neighbors(l);
            out << l << ' ' << nb.size();
            for (auto r : nb)
            {
                out << ' ' << r;
            }
            out << '\n';
        }
    }

    inline std::string graph_to_string(const BipartiteGraph &g)
    {
        std::ostringstream os;
        write_graph(os, g);
        return os.str();
    }

    inline BipartiteGraph read_graph(std::istream &in)
    {
        std::uint64_t num_ports = 0;
        std::uint64_t num_servers = 0;
        if (!(in >> num_ports >> num_servers))
        {
            throw ConfigError("graph file: missing 'L N' header");
        }
        if (num_servers > 0xFFFFFFFEull || num_ports > 0xFFFFFFFEull)
        {
            throw ConfigError("graph file: sizes out of range");
        }
        std::vector<std::vector<std::uint32_t>> lists(num_ports);
        for (std::uint64_t l = 0; l < num_ports; ++l)
        {
            std::uint64_t index = 0;
            std::uint64_t degree = 0;
            if (!(in >> index >> degree))
            {
                throw ConfigError("graph file: truncated at port " + std::to_string(l));
            }
            if (index != l)
            {
                throw ConfigError("graph file: ports must appear in order (expected " + std::to_string(l) + ")");
            }
            if (degree > num_servers)
            {
                throw ConfigError("graph file: degree exceeds N at port " + std::to_string(l));
            }
            lists[l].resize(degree);
            std::int64_t previous = -1;
            for (auto &s : lists[l])
            {
                std::uint64_t v = 0;
                if (!(in >> v))
                {
                    throw ConfigError("graph file: truncated neighbor list at port " + std::to_string(l));
                }
                if (static_cast<std::int64_t>(v) <= previous)
                {
                    throw ConfigError("graph file: neighbor lists must be strictly ascending");
                }
                if (v >= num_servers)
                {
                    throw ConfigError("graph file: server index out of range");
                }
                previous = static_cast<std::int64_t>(v);
                s = static_cast<std::uint32_t>(v);
            }
        }
        return BipartiteGraph::from_port_lists(static_cast<std::uint32_t>(num_servers), lists);
    }

    inline BipartiteGraph graph_from_string(const std::string &text)
    {
        std::istringstream is(text);
        return read_graph(is);
    }
} // namespace bplb

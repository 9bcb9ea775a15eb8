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

// Command-line front end: bplb <command> [--config FILE] [flags].
//
// Exit status: 0 success, 1 configuration error, 2 runtime error.

#include "bplb/config.hpp"
#include "bplb/errors.hpp"
#include "bplb/experiments.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace
{
    struct Flags
    {
        std::string config;
        std::optional<std::uint64_t> seed;
        std::string out;
        std::string policies;
        bool no_slow_edges = false;
        std::string trace;
    };

    bplb::ExperimentConfig load(const Flags &f)
    {
        auto c = f.config.empty() ? bplb::two_class_defaults() : bplb::load_config(f.config);
        bplb::apply_environment(c);
        if (f.seed)
        {
            c.seed = *f.seed;
        }
        if (!f.policies.empty())
        {
            c.policies = bplb::parse_policy_list(f.policies);
        }
        if (f.no_slow_edges)
        {
            c.topology.slow_edges = false;
        }
        return c;
    }

    /// Empty result means standard output.
    std::filesystem::path resolve(const bplb::ExperimentConfig &c, const std::string &name,
                                  const std::string &fallback)
    {
        std::filesystem::path p = name;
        if (p.empty())
        {
            if (c.output_dir.empty())
            {
                return {};
            }
            p = fallback;
        }
        if (p.is_relative() && !c.output_dir.empty())
        {
            p = std::filesystem::path(c.output_dir) / p;
        }
        return p;
    }

    template <class Fn>
    void emit(const std::filesystem::path &path, Fn write)
    {
        if (path.empty())
        {
            write(std::cout);
            std::cout.flush();
            return;
        }
        if (path.has_parent_path())
        {
            std::filesystem::create_directories(path.parent_path());
        }
        std::ofstream out(path, std::ios::binary);
        if (!out)
        {
            throw bplb::RuntimeError("cannot write '" + path.string() + "'");
        }
        write(out);
        if (!out)
        {
            throw bplb::RuntimeError("write failed for '" + path.string() + "'");
        }
    }

    void emit_table(const bplb::ExperimentConfig &c, const Flags &f, const std::string &fallback,
                    const bplb::CsvTable &t)
    {
        emit(resolve(c, f.out, fallback), [&](std::ostream &os) { t.write(os); });
    }

    int report_errors(const bplb::CsvTable &t)
    {
        const auto col = t.column("error");
        int failed = 0;
        for (const auto &row : t.rows)
        {
            if (col < row.size() && !row[col].empty())
            {
                ++failed;
            }
        }
        if (failed > 0)
        {
            std::cerr << "bplb: " << failed << " of " << t.rows.size() << " rows failed, see the error column\n";
        }
        return failed;
    }

    int run(const std::string &command, const Flags &f)
    {
        const auto c = load(f);
        if (command == "bounds")
        {
            const auto t = bplb::cmd_bounds(c);
            for (std::size_t i = 0; i < t.rows.size(); ++i)
            {
                std::cerr << "load=" << t.at(i, "load") << " K=" << t.at(i, "K") << " C*=" << t.at(i, "c_star")
                          << " service_time_lb=" << t.at(i, "service_time_lb") << '\n';
            }
            emit_table(c, f, "bounds.csv", t);
        }
        else if (command == "gen-graph")
        {
            const auto g = bplb::cmd_gen_graph(c);
            std::cerr << "graph: " << g.num_ports() << " ports, " << g.num_servers() << " servers, " << g.num_edges()
                      << " edges, " << g.metadata().patched_ports << " patched ports, "
                      << g.metadata().isolated_servers << " unreachable servers\n";
            emit(resolve(c, f.out, "graph.txt"), [&](std::ostream &os) { bplb::write_graph(os, g); });
        }
        else if (command == "check-graph")
        {
            const auto outcome = bplb::cmd_check_graph(c);
            std::cerr << outcome.text;
            emit_table(c, f, "check.csv", outcome.table);
        }
        else if (command == "simulate")
        {
            const auto t = bplb::cmd_simulate(c);
            if (!f.trace.empty())
            {
                emit(resolve(c, f.trace, f.trace), [&](std::ostream &os) { bplb::write_trace(c, os); });
            }
            emit_table(c, f, "simulate.csv", t);
            report_errors(t);
        }
        else if (command == "exact")
        {
            std::ostringstream pi;
            const auto t = bplb::cmd_exact(c, c.exact.dump_pi.empty() ? nullptr : &pi);
            if (!c.exact.dump_pi.empty())
            {
                emit(resolve(c, c.exact.dump_pi, c.exact.dump_pi), [&](std::ostream &os) { os << pi.str(); });
            }
            emit_table(c, f, "exact.csv", t);
            report_errors(t);
        }
        else if (command == "sweep-load")
        {
            const auto t = bplb::cmd_sweep_load(c);
            emit_table(c, f, "sweep_load.csv", t);
            report_errors(t);
        }
        else if (command == "scale")
        {
            const auto t = bplb::cmd_scale(c);
            emit_table(c, f, "scale.csv", t);
            report_errors(t);
        }
        return 0;
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Load balancing on heterogeneous bipartite server systems", "bplb"};
    app.set_version_flag("--version", bplb::version_string());
    app.require_subcommand(1);
    Flags flags;

    const std::pair<const char *, const char *> commands[] = {
        {"bounds", "print theory constants, lower bound and reference bounds"},
        {"gen-graph", "generate the configured topology and write it as a graph file"},
        {"check-graph", "check the well-connectedness conditions"},
        {"simulate", "replicated simulation at the configured operating point"},
        {"exact", "solve the Markov chain exactly (tiny systems)"},
        {"sweep-load", "simulate each policy across a list of loads"},
        {"scale", "simulate each policy across a list of system sizes"},
    };
    for (const auto &[name, help] : commands)
    {
        auto *sub = app.add_subcommand(name, help);
        sub->add_option("--config", flags.config, "JSON configuration file");
        sub->add_option("--seed", flags.seed, "base seed (overrides config and BPLB_SEED)");
        sub->add_option("--out", flags.out, "output file (relative paths go under output_dir)");
        sub->add_option("--policies", flags.policies, "comma-separated policy list");
        sub->add_flag("--no-slow-edges", flags.no_slow_edges, "generated graphs skip classes beyond K");
        if (std::string(name) == "simulate")
        {
            sub->add_option("--trace", flags.trace, "write the event trace of one run to this file");
        }
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    std::string command;
    for (const auto *sub : app.get_subcommands())
    {
        command = sub->get_name();
    }
    try
    {
        return run(command, flags);
    }
    catch (const bplb::ConfigError &e)
    {
        std::cerr << "bplb: " << e.what() << '\n';
        return 1;
    }
    catch (const std::exception &e)
    {
        std::cerr << "bplb: " << e.what() << '\n';
        return 2;
    }
}

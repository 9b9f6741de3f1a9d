/*
    Copyright (C) 2026 by the SelfServ project contributors

    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#include "runner.hpp"

#include <selfserv/catalyst.hpp>
#include <selfserv/engine.hpp>
#include <selfserv/events.hpp>
#include <selfserv/rules.hpp>
#include <selfserv/sim.hpp>
#include <selfserv/text.hpp>

#include <CLI11.hpp>

#include <charconv>
#include <sstream>
#include <thread>

namespace selfserv::cli {

namespace fs = std::filesystem;

namespace {

int fail(std::ostream& err, const std::string& message) {
    err << "error: " << message << '\n';
    return 1;
}

// A failed command must not leave an output file behind, not even one from an
// earlier successful run, so consumers never pick up results that do not match
// the inputs they just supplied.
int finish(int status, const fs::path& out_path) {
    if (status != 0) {
        std::error_code ignored;
        fs::remove(out_path, ignored);
    }
    return status;
}

}  // namespace

static int run_cep_impl(const fs::path& rules_path, const std::vector<fs::path>& log_paths,
            const fs::path& out_path, std::ostream& err, std::int64_t refractory_seconds) {
    RuleSet rules;
    try {
        rules = parse_rules(text::read_file(rules_path));
    } catch (const RuleParseError& e) {
        return fail(err, rules_path.string() + ":" + e.what());
    } catch (const std::exception& e) {
        return fail(err, e.what());
    }

    EventStream stream;
    try {
        std::vector<LogSource> sources;
        for (const auto& p : log_paths) {
            sources.push_back(read_log_file(p));
        }
        stream = replay_log(sources);
    } catch (const ReplayError& e) {
        for (const auto& d : e.diagnostics()) {
            err << "error: " << d.to_string() << '\n';
        }
        return 1;
    } catch (const std::exception& e) {
        return fail(err, e.what());
    }

    try {
        Engine engine(std::move(rules), EngineOptions{Duration{refractory_seconds}});
        std::string out(alert_csv_header());
        out += '\n';
        for (const auto& event : stream) {
            for (const auto& alert : engine.ingest(event)) {
                out += format_alert_line(alert);
                out += '\n';
            }
        }
        text::write_file_atomic(out_path, out);
    } catch (const std::exception& e) {
        return fail(err, e.what());
    }
    return 0;
}

static int run_catalyst_impl(const fs::path& registry_path, const fs::path& taxonomy_path,
                 const fs::path& out_path, std::ostream& err) {
    try {
        auto taxonomy = catalyst::Taxonomy::parse(text::read_file(taxonomy_path));
        std::vector<catalyst::RegistryEntry> entries;
        try {
            entries = catalyst::parse_registry(text::read_file(registry_path), taxonomy);
        } catch (const catalyst::CatalystError& e) {
            return fail(err, registry_path.string() + ": " + e.what());
        }
        catalyst::Registry registry(std::move(taxonomy));
        for (auto& e : entries) {
            registry.publish(std::move(e));
        }
        std::string out(catalyst::proposal_csv_header());
        out += '\n';
        for (const auto& p : registry.find_winwins()) {
            out += catalyst::format_proposal_line(p);
            out += '\n';
        }
        text::write_file_atomic(out_path, out);
    } catch (const std::exception& e) {
        return fail(err, e.what());
    }
    return 0;
}

namespace {

sim::ScenarioConfig load_config(const fs::path& path) {
    return sim::parse_config(text::read_file(path));
}

}  // namespace

static int run_sim_impl(const fs::path& config_path, const fs::path& out_path, std::ostream& err) {
    try {
        auto config = load_config(config_path);
        auto report = sim::run(config);
        std::string out(sim::metrics_csv_header());
        out += '\n';
        out += sim::format_metrics_line(report);
        out += '\n';
        text::write_file_atomic(out_path, out);
    } catch (const sim::ConfigError& e) {
        return fail(err, config_path.string() + ": invalid config key " + e.what());
    } catch (const std::exception& e) {
        return fail(err, e.what());
    }
    return 0;
}

static int run_compare_impl(const fs::path& config_path, const std::vector<std::uint64_t>& seeds,
                const fs::path& out_path, std::ostream& err, unsigned threads) {
    try {
        auto config = load_config(config_path);
        auto table = sim::compare(config, seeds, threads);
        text::write_file_atomic(out_path, sim::format_comparison(table));
    } catch (const sim::ConfigError& e) {
        return fail(err, config_path.string() + ": invalid config key " + e.what());
    } catch (const std::exception& e) {
        return fail(err, e.what());
    }
    return 0;
}

int run_cep(const fs::path& rules_path, const std::vector<fs::path>& log_paths,
            const fs::path& out_path, std::ostream& err, std::int64_t refractory_seconds) {
    return finish(run_cep_impl(rules_path, log_paths, out_path, err, refractory_seconds), out_path);
}

int run_catalyst(const fs::path& registry_path, const fs::path& taxonomy_path,
                 const fs::path& out_path, std::ostream& err) {
    return finish(run_catalyst_impl(registry_path, taxonomy_path, out_path, err), out_path);
}

int run_sim(const fs::path& config_path, const fs::path& out_path, std::ostream& err) {
    return finish(run_sim_impl(config_path, out_path, err), out_path);
}

int run_compare(const fs::path& config_path, const std::vector<std::uint64_t>& seeds,
                const fs::path& out_path, std::ostream& err, unsigned threads) {
    return finish(run_compare_impl(config_path, seeds, out_path, err, threads), out_path);
}

std::vector<std::uint64_t> parse_seed_range(std::string_view s) {
    auto dots = s.find("..");
    if (dots == std::string_view::npos) {
        throw std::invalid_argument("seed range must look like a..b, got '" + std::string(s) + "'");
    }
    auto parse = [&](std::string_view part) {
        std::uint64_t v{};
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size()) {
            throw std::invalid_argument("bad seed '" + std::string(part) + "'");
        }
        return v;
    };
    auto a = parse(s.substr(0, dots));
    auto b = parse(s.substr(dots + 2));
    if (a > b) {
        throw std::invalid_argument("seed range " + std::string(s) + " is empty");
    }
    std::vector<std::uint64_t> seeds;
    for (auto v = a;; ++v) {
        seeds.push_back(v);
        if (v == b) {
            break;
        }
    }
    return seeds;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"SelfServ: CEP alerting, catalyst matchmaking and care-organization simulation"};
    app.require_subcommand(1);

    std::string rules_path;
    std::vector<std::string> log_paths;
    std::string out_path;
    std::int64_t refractory = 300;
    auto* cep = app.add_subcommand("cep", "Replay event logs through the rule engine and write alerts");
    cep->add_option("--rules", rules_path, "Rule file")->required()->check(CLI::ExistingFile);
    cep->add_option("--log", log_paths, "Event log (repeatable)")->required()->check(CLI::ExistingFile);
    cep->add_option("--out", out_path, "Alert CSV to write")->required();
    cep->add_option("--refractory", refractory, "Per rule and patient refractory period in seconds (0 disables)")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);

    std::string registry_path;
    std::string taxonomy_path;
    auto* cat = app.add_subcommand("catalyst", "Find win-win proposals in a registry snapshot");
    cat->add_option("--registry", registry_path, "Registry snapshot CSV")->required()->check(CLI::ExistingFile);
    cat->add_option("--taxonomy", taxonomy_path, "Capability taxonomy (parent,child per line)")
        ->required()
        ->check(CLI::ExistingFile);
    cat->add_option("--out", out_path, "Proposal CSV to write")->required();

    std::string config_path;
    auto* simc = app.add_subcommand("sim", "Run one simulation and write its metrics row");
    simc->add_option("--config", config_path, "Scenario config (key = value)")->required()->check(CLI::ExistingFile);
    simc->add_option("--out", out_path, "Metrics CSV to write")->required();

    std::string seeds_text;
    unsigned threads = 1;
    auto* cmp = app.add_subcommand("compare", "Run both organization modes over a seed range");
    cmp->add_option("--config", config_path, "Scenario config (key = value)")->required()->check(CLI::ExistingFile);
    cmp->add_option("--seeds", seeds_text, "Inclusive seed range a..b")->required();
    cmp->add_option("--out", out_path, "Comparison CSV to write")->required();
    cmp->add_option("--threads", threads, "Worker threads for independent runs")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    if (*cep) {
        std::vector<fs::path> logs(log_paths.begin(), log_paths.end());
        return run_cep(rules_path, logs, out_path, err, refractory);
    }
    if (*cat) {
        return run_catalyst(registry_path, taxonomy_path, out_path, err);
    }
    if (*simc) {
        return run_sim(config_path, out_path, err);
    }
    std::vector<std::uint64_t> seeds;
    try {
        seeds = parse_seed_range(seeds_text);
    } catch (const std::exception& e) {
        return finish(fail(err, e.what()), out_path);
    }
    return run_compare(config_path, seeds, out_path, err, threads);
}

}  // namespace selfserv::cli

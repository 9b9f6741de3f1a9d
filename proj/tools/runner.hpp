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

#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string_view>
#include <vector>

// Batch front-end behind the `selfserv` executable. Every command writes its
// output atomically: exit status 0 means the file is complete, anything else
// means no output was written and one diagnostic line per problem went to `err`.
namespace selfserv::cli {

int run_cep(const std::filesystem::path& rules_path,
            const std::vector<std::filesystem::path>& log_paths,
            const std::filesystem::path& out_path, std::ostream& err,
            std::int64_t refractory_seconds = 300);

int run_catalyst(const std::filesystem::path& registry_path,
                 const std::filesystem::path& taxonomy_path,
                 const std::filesystem::path& out_path, std::ostream& err);

int run_sim(const std::filesystem::path& config_path, const std::filesystem::path& out_path,
            std::ostream& err);

int run_compare(const std::filesystem::path& config_path, const std::vector<std::uint64_t>& seeds,
                const std::filesystem::path& out_path, std::ostream& err, unsigned threads = 1);

/// "a..b" inclusive, a <= b. Throws std::invalid_argument.
std::vector<std::uint64_t> parse_seed_range(std::string_view text);

/// Full command line entry point (subcommands cep, catalyst, sim, compare).
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace selfserv::cli

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

#include "oracles/oracles.hpp"

#include <selfserv/catalyst.hpp>
#include <selfserv/engine.hpp>
#include <selfserv/rules.hpp>
#include <selfserv/sim.hpp>

#include <benchmark/benchmark.h>

using namespace selfserv;

static void BM_EngineIngest(benchmark::State& state) {
    std::mt19937_64 rng(7);
    auto events = oracle::random_stream(rng, static_cast<std::size_t>(state.range(0)));
    auto rules = parse_rules(oracle::kTenRules);
    for (auto _ : state) {
        Engine engine(rules);
        std::size_t alerts = 0;
        for (const auto& e : events) alerts += engine.ingest(e).size();
        benchmark::DoNotOptimize(alerts);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EngineIngest)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_FindWinwins(benchmark::State& state) {
    std::mt19937_64 rng(11);
    auto tax = catalyst::Taxonomy::care_default();
    auto n = static_cast<std::size_t>(state.range(0));
    auto entries = oracle::random_registry(rng, tax, n, 1 + n / 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(catalyst::find_winwins(entries, tax));
    }
}
BENCHMARK(BM_FindWinwins)->Arg(50)->Arg(200)->Arg(1000)->Unit(benchmark::kMicrosecond);

static void BM_SimRun(benchmark::State& state) {
    sim::ScenarioConfig c;
    c.mode = state.range(0) ? sim::Mode::soc : sim::Mode::traditional;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sim::run(c));
        ++c.seed;
    }
}
BENCHMARK(BM_SimRun)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();

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

#include <selfserv/engine.hpp>
#include <selfserv/rules.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace selfserv;
using std::chrono::seconds;

namespace {

Engine engine_for(std::string_view rules, std::int64_t refractory = 300) {
    return Engine(parse_rules(rules), EngineOptions{seconds{refractory}});
}

HealthEvent glucose(Timestamp t, double v, std::string patient = "p1") {
    return {std::move(patient), t, VitalKind::glucose, v};
}

}  // namespace

TEST(Ingest, ThresholdFiresOnStrictComparison) {
    auto engine = engine_for("rule hypo: when glucose < 70 severity high");
    auto alerts = engine.ingest(glucose(0, 65));
    ASSERT_EQ(alerts.size(), 1u);
    EXPECT_EQ(alerts[0].rule_name, "hypo");
    EXPECT_EQ(alerts[0].severity, Severity::high);
    EXPECT_EQ(alerts[0].evidence, (std::vector<EvidencePoint>{{0, 65}}));
    EXPECT_FALSE(alerts[0].predicted_crossing_time);

    auto boundary = engine_for("rule hypo: when glucose < 70 severity high");
    EXPECT_TRUE(boundary.ingest(glucose(0, 70)).empty());
}

TEST(Ingest, ThresholdIgnoresOtherKinds) {
    auto engine = engine_for("rule hypo: when glucose < 70 severity high");
    EXPECT_TRUE(engine.ingest({"p1", 0, VitalKind::heart_rate, 50}).empty());
}

TEST(Ingest, AlertsComeInRuleSetOrder) {
    auto engine = engine_for(
        "rule z_low: when glucose < 70 severity info\n"
        "rule a_low: when glucose < 80 severity info\n");
    auto alerts = engine.ingest(glucose(0, 60));
    ASSERT_EQ(alerts.size(), 2u);
    EXPECT_EQ(alerts[0].rule_name, "z_low");
    EXPECT_EQ(alerts[1].rule_name, "a_low");
}

TEST(Ingest, RefractoryIsPerRuleAndPatient) {
    auto engine = engine_for("rule hypo: when glucose < 70 severity high");
    EXPECT_EQ(engine.ingest(glucose(0, 60)).size(), 1u);
    EXPECT_EQ(engine.ingest(glucose(0, 60, "p2")).size(), 1u);
    EXPECT_TRUE(engine.ingest(glucose(299, 60)).empty());
    EXPECT_EQ(engine.ingest(glucose(300, 60)).size(), 1u);
}

TEST(Ingest, ZeroRefractoryFiresEveryEvent) {
    auto engine = engine_for("rule hypo: when glucose < 70 severity high", 0);
    for (Timestamp t = 0; t < 5; ++t) {
        EXPECT_EQ(engine.ingest(glucose(t, 60)).size(), 1u);
    }
}

TEST(Ingest, OutOfOrderIsRejectedWithoutStateChange) {
    auto engine = engine_for("rule w: when count(glucose, 10m) >= 2 severity info", 0);
    engine.ingest(glucose(100, 100));
    EXPECT_THROW(engine.ingest(glucose(99, 100)), OutOfOrderEvent);
    EXPECT_EQ(engine.buffered_points(), 1u);
    EXPECT_EQ(engine.last_timestamp(), 100);
    EXPECT_EQ(engine.ingest(glucose(100, 100)).size(), 1u);
}

TEST(Ingest, WindowEvidenceCoversHalfOpenWindow) {
    auto engine = engine_for("rule w: when avg(glucose, 10m) < 75 severity high", 0);
    engine.ingest(glucose(0, 100));
    engine.ingest(glucose(300, 70));
    auto alerts = engine.ingest(glucose(600, 70));  // point at t=0 is outside (0, 600]
    ASSERT_EQ(alerts.size(), 1u);
    EXPECT_EQ(alerts[0].evidence, (std::vector<EvidencePoint>{{300, 70}, {600, 70}}));
}

TEST(Ingest, RetentionBoundsBufferedPoints) {
    auto engine = engine_for(
        "rule a: when max(glucose, 2m) > 500 severity info\n"
        "rule b: when trend(heart_rate, 5m) rises_above 200 within 1m severity info\n");
    EXPECT_EQ(engine.retention(), seconds{300});
    for (Timestamp t = 0; t <= 1000; t += 10) {
        engine.ingest(glucose(t, 100));
        ASSERT_GT(*engine.oldest_buffered(), t - 300);
    }
    EXPECT_EQ(engine.buffered_points(), 30u);
}

TEST(Ingest, SequencePairsEarliestFirstAndResets) {
    auto engine = engine_for("rule still: when fall_signal >= 1 then motion <= 0 within 2m severity critical", 0);
    EXPECT_TRUE(engine.ingest({"p", 0, VitalKind::fall_signal, 1}).empty());
    EXPECT_TRUE(engine.ingest({"p", 30, VitalKind::fall_signal, 1}).empty());
    auto alerts = engine.ingest({"p", 60, VitalKind::motion, 0});
    ASSERT_EQ(alerts.size(), 1u);
    EXPECT_EQ(alerts[0].evidence, (std::vector<EvidencePoint>{{0, 1}, {60, 0}}));
    // Pending firsts were consumed, so a second `then` does not fire.
    EXPECT_TRUE(engine.ingest({"p", 70, VitalKind::motion, 0}).empty());
}

TEST(Ingest, SequenceFirstExpiresAfterWithin) {
    auto engine = engine_for("rule still: when fall_signal >= 1 then motion <= 0 within 2m severity critical", 0);
    engine.ingest({"p", 0, VitalKind::fall_signal, 1});
    EXPECT_TRUE(engine.ingest({"p", 121, VitalKind::motion, 0}).empty());
    engine.ingest({"p", 200, VitalKind::fall_signal, 1});
    EXPECT_EQ(engine.ingest({"p", 320, VitalKind::motion, 0}).size(), 1u);  // exactly `within` apart
}

TEST(Ingest, SequenceIsPerPatient) {
    auto engine = engine_for("rule still: when fall_signal >= 1 then motion <= 0 within 2m severity critical", 0);
    engine.ingest({"a", 0, VitalKind::fall_signal, 1});
    EXPECT_TRUE(engine.ingest({"b", 10, VitalKind::motion, 0}).empty());
}

TEST(Ingest, TrendPredictsCrossing) {
    auto engine = engine_for("rule t: when trend(glucose, 30m) falls_below 54 within 30m severity critical", 0);
    EXPECT_TRUE(engine.ingest(glucose(0, 100)).empty());  // a single point has no trend
    engine.ingest(glucose(600, 90));
    auto alerts = engine.ingest(glucose(1200, 80));
    ASSERT_EQ(alerts.size(), 1u);
    EXPECT_EQ(alerts[0].predicted_crossing_time, 2760);
    EXPECT_EQ(alerts[0].evidence.size(), 3u);
}

TEST(Ingest, TrendRespectsHorizon) {
    auto engine = engine_for("rule t: when trend(glucose, 30m) falls_below 54 within 20m severity critical", 0);
    engine.ingest(glucose(0, 100));
    engine.ingest(glucose(600, 90));
    EXPECT_TRUE(engine.ingest(glucose(1200, 80)).empty());  // crossing 1560 s ahead
}

TEST(Ingest, TrendAlreadyPastTargetCrossesNow) {
    auto engine = engine_for("rule t: when trend(glucose, 30m) falls_below 54 within 1m severity critical", 0);
    engine.ingest(glucose(0, 60));
    auto alerts = engine.ingest(glucose(60, 50));
    ASSERT_EQ(alerts.size(), 1u);
    EXPECT_EQ(alerts[0].predicted_crossing_time, 60);
}

TEST(WindowAggregate, Examples) {
    std::vector<EvidencePoint> pts{{10, 60}, {20, 70}, {30, 80}};
    EXPECT_EQ(window_aggregate(pts, Aggregate::avg, seconds{100}, 30), 70.0);
    EXPECT_EQ(window_aggregate(pts, Aggregate::min, seconds{100}, 30), 60.0);
    EXPECT_EQ(window_aggregate(pts, Aggregate::max, seconds{15}, 30), 80.0);
    EXPECT_EQ(window_aggregate(pts, Aggregate::count, seconds{5}, 100), 0.0);
    EXPECT_FALSE(window_aggregate(pts, Aggregate::avg, seconds{5}, 100));
    EXPECT_FALSE(window_aggregate({}, Aggregate::max, seconds{5}, 100));
}

TEST(WindowAggregate, RandomValuesMatchRescan) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-50, 150);
    std::vector<EvidencePoint> pts;
    Timestamp t = 0;
    for (int i = 0; i < 10000; ++i) {
        t += static_cast<Timestamp>(rng() % 5);
        pts.push_back({t, u(rng)});
    }
    for (int q = 0; q < 300; ++q) {
        Timestamp now = static_cast<Timestamp>(rng() % static_cast<std::uint64_t>(t + 10));
        seconds w{1 + static_cast<std::int64_t>(rng() % 400)};
        double sum = 0, lo = 1e300, hi = -1e300;
        std::size_t n = 0;
        for (const auto& p : pts) {
            if (p.timestamp > now - w.count() && p.timestamp <= now) {
                sum += p.value;
                lo = std::min(lo, p.value);
                hi = std::max(hi, p.value);
                ++n;
            }
        }
        EXPECT_EQ(window_aggregate(pts, Aggregate::count, w, now), static_cast<double>(n));
        if (n == 0) {
            EXPECT_FALSE(window_aggregate(pts, Aggregate::avg, w, now));
            continue;
        }
        EXPECT_EQ(window_aggregate(pts, Aggregate::min, w, now), lo);
        EXPECT_EQ(window_aggregate(pts, Aggregate::max, w, now), hi);
        double avg = sum / static_cast<double>(n);
        EXPECT_NEAR(*window_aggregate(pts, Aggregate::avg, w, now), avg, 1e-9 * std::max(1.0, std::abs(avg)));
    }
}

TEST(TrendPredict, ExactLine) {
    std::vector<EvidencePoint> pts{{0, 100}, {600, 90}, {1200, 80}};
    auto fit = trend_predict(pts);
    EXPECT_NEAR(fit.slope(), -1.0 / 60.0, 1e-15);
    EXPECT_NEAR(fit.intercept(), 100.0, 1e-12);
    EXPECT_NEAR(*fit.crossing(54, TrendDirection::falls_below, 1200), 2760.0, 1e-9);
    EXPECT_FALSE(fit.crossing(54, TrendDirection::rises_above, 1200));
}

TEST(TrendPredict, ConstantSeriesHasNoCrossing) {
    std::vector<EvidencePoint> pts{{0, 90}, {600, 90}};
    auto fit = trend_predict(pts);
    EXPECT_EQ(fit.slope(), 0.0);
    EXPECT_FALSE(fit.crossing(54, TrendDirection::falls_below, 600));
}

TEST(TrendPredict, FlatFitHasExactlyZeroSlope) {
    // One raised point sits exactly at the mean timestamp, so the least-squares
    // slope is 0; naive sums leave a tiny negative residue that would fire.
    const Timestamp ts[] = {183140, 183163, 183224, 183260, 183266, 183297, 183323, 183352,
                            183485, 183496, 183540, 183566, 183575, 183589, 183594, 183708,
                            183753, 183809, 183838, 183919, 183977, 184006};
    std::vector<EvidencePoint> pts;
    for (auto t : ts) pts.push_back({t, t == 183540 ? 20.157 : 20.0});
    auto fit = trend_predict(pts);
    EXPECT_EQ(fit.slope(), 0.0);
    EXPECT_FALSE(fit.crossing(70, TrendDirection::falls_below, 184006));

    auto engine = engine_for("rule falling: when trend(glucose, 15m) falls_below 70 within 20m severity critical");
    std::size_t alerts = 0;
    for (const auto& p : pts) alerts += engine.ingest(glucose(p.timestamp, p.value)).size();
    EXPECT_EQ(alerts, 0u);
}

TEST(TrendPredict, DegenerateInputsThrow) {
    std::vector<EvidencePoint> one{{0, 1}};
    std::vector<EvidencePoint> same_t{{5, 1}, {5, 2}};
    EXPECT_THROW(trend_predict(one), std::invalid_argument);
    EXPECT_THROW(trend_predict(same_t), std::invalid_argument);
}

TEST(TrendPredict, NoisyMatchesNormalEquations) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0, 4);
    std::vector<EvidencePoint> pts;
    std::vector<std::pair<long double, long double>> xy;
    for (int i = 0; i < 100; ++i) {
        Timestamp t = 5000 + 60 * i + static_cast<Timestamp>(rng() % 30);
        double v = 140 - 0.02 * static_cast<double>(t - 5000) + noise(rng);
        pts.push_back({t, v});
        xy.emplace_back(t, v);
    }
    auto fit = trend_predict(pts);
    auto ref = selfserv::oracle::normal_equations(xy);
    EXPECT_NEAR(fit.slope(), static_cast<double>(ref.slope), 1e-9 * std::abs(static_cast<double>(ref.slope)));
    EXPECT_NEAR(fit.intercept(), static_cast<double>(ref.intercept), 1e-9 * std::abs(static_cast<double>(ref.intercept)));
}

TEST(AlertCsv, OptionalCrossingColumn) {
    Alert a{"hypo", "p1", 60, Severity::high, {{60, 65}}, std::nullopt};
    EXPECT_EQ(format_alert_line(a), "60,p1,hypo,high");
    a.predicted_crossing_time = 2760;
    EXPECT_EQ(format_alert_line(a), "60,p1,hypo,high,2760");
}

TEST(EngineOracle, SmallStreamsMatchRescan) {
    auto rules = parse_rules(selfserv::oracle::kTenRules);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        for (std::int64_t refractory : {0, 300}) {
            std::mt19937_64 rng(seed);
            auto stream = selfserv::oracle::random_stream(rng, 5000);
            Engine engine(rules, EngineOptions{seconds{refractory}});
            selfserv::oracle::RescanEvaluator oracle(rules, refractory);
            for (const auto& e : stream) {
                ASSERT_EQ(engine.ingest(e), oracle.ingest(e)) << "seed " << seed << " t=" << e.timestamp;
            }
        }
    }
}

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

#include <selfserv/rules.hpp>
#include <selfserv/text.hpp>

#include <gtest/gtest.h>

#include <algorithm>

using namespace selfserv;
using std::chrono::seconds;

namespace {

RuleParseError parse_error(std::string_view src) {
    try {
        parse_rules(src);
    } catch (const RuleParseError& e) {
        return e;
    }
    ADD_FAILURE() << "expected a parse error for: " << src;
    return RuleParseError(0, 0, "", {});
}

bool expects(const RuleParseError& e, std::string_view token) {
    return std::find(e.expected().begin(), e.expected().end(), token) != e.expected().end();
}

}  // namespace

TEST(ParseRules, Threshold) {
    auto rs = parse_rules("rule hypo: when glucose < 70 severity high");
    ASSERT_EQ(rs.size(), 1u);
    EXPECT_EQ(rs[0], (Rule{"hypo", ThresholdRule{{VitalKind::glucose, Comparator::less, 70.0}}, Severity::high}));
}

TEST(ParseRules, TrendUnitsNormalizeToSeconds) {
    auto rs = parse_rules("rule hypo_trend: when trend(glucose, 30m) falls_below 54 within 20m severity critical");
    ASSERT_EQ(rs.size(), 1u);
    TrendRule expected{VitalKind::glucose, seconds{1800}, TrendDirection::falls_below, 54.0, seconds{1200}};
    EXPECT_EQ(rs[0], (Rule{"hypo_trend", expected, Severity::critical}));
}

TEST(ParseRules, WindowAndSequence) {
    auto rs = parse_rules(
        "rule w: when count(motion, 1h) >= 3 severity info\n"
        "rule s: when fall_signal >= 1 then motion <= 0 within 90s severity critical\n");
    ASSERT_EQ(rs.size(), 2u);
    EXPECT_EQ(std::get<WindowRule>(rs[0].body),
              (WindowRule{Aggregate::count, VitalKind::motion, seconds{3600}, Comparator::greater_equal, 3.0}));
    EXPECT_EQ(std::get<SequenceRule>(rs[1].body),
              (SequenceRule{{VitalKind::fall_signal, Comparator::greater_equal, 1.0},
                            {VitalKind::motion, Comparator::less_equal, 0.0},
                            seconds{90}}));
}

TEST(ParseRules, WhitespaceAndCommentsAreInsignificant) {
    auto a = parse_rules("rule x:when glucose<=70.5 severity warning");
    auto b = parse_rules("# leading comment\n  rule   x :\n when glucose <= 70.5 # trailing\n severity   warning\n");
    EXPECT_EQ(a, b);
}

TEST(ParseRules, NumbersAcceptNegativeAndBareFraction) {
    auto rs = parse_rules("rule a: when temperature > .5 severity info rule b: when glucose >= -1.25 severity info");
    EXPECT_EQ(std::get<ThresholdRule>(rs[0].body).condition.bound, 0.5);
    EXPECT_EQ(std::get<ThresholdRule>(rs[1].body).condition.bound, -1.25);
}

TEST(ParseRules, EmptyInputIsEmptySet) {
    EXPECT_TRUE(parse_rules("").empty());
    EXPECT_TRUE(parse_rules("  # nothing here\n\n").empty());
}

TEST(ParseRules, DuplicateNameReportsSecondOccurrence) {
    auto e = parse_error("rule hypo: when glucose < 70 severity high\nrule hypo: when glucose < 60 severity high\n");
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 6u);
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
}

TEST(ParseRules, UnknownTokensListAlternatives) {
    auto kind = parse_error("rule a: when glucoze < 70 severity high");
    EXPECT_EQ(kind.column(), 14u);
    EXPECT_TRUE(expects(kind, "glucose"));

    auto agg = parse_error("rule a: when median(glucose, 5m) < 70 severity high");
    EXPECT_TRUE(expects(agg, "avg") || expects(agg, "trend"));

    auto sev = parse_error("rule a: when glucose < 70 severity urgent");
    EXPECT_EQ(sev.column(), 36u);
    EXPECT_TRUE(expects(sev, "critical"));
}

TEST(ParseRules, DurationsMustBePositiveWholeSeconds) {
    EXPECT_EQ(parse_error("rule a: when avg(glucose, 0m) < 70 severity high").column(), 27u);
    parse_error("rule a: when avg(glucose, 0.5s) < 70 severity high");
    parse_error("rule a: when avg(glucose, 10d) < 70 severity high");
    parse_error("rule a: when avg(glucose, 10) < 70 severity high");
    // Fractional minutes that land on whole seconds are fine.
    auto rs = parse_rules("rule a: when avg(glucose, 1.5m) < 70 severity high");
    EXPECT_EQ(std::get<WindowRule>(rs[0].body).window, seconds{90});
}

TEST(ParseRules, ErrorPositionsAreOneBased) {
    auto e = parse_error("\n\n   rule a when glucose < 1 severity info");
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 11u);
    EXPECT_EQ(std::string(e.what()).rfind("3:11:", 0), 0u);
}

TEST(FormatRule, CanonicalForms) {
    Rule hypo{"hypo", ThresholdRule{{VitalKind::glucose, Comparator::less, 70.0}}, Severity::high};
    EXPECT_EQ(format_rule(hypo), "rule hypo: when glucose < 70 severity high");
    Rule w{"r", WindowRule{Aggregate::avg, VitalKind::glucose, seconds{600}, Comparator::less, 70.0}, Severity::high};
    EXPECT_EQ(format_rule(w), "rule r: when avg(glucose, 10m) < 70 severity high");
}

TEST(FormatRule, DurationUsesLargestExactUnit) {
    EXPECT_EQ(format_duration(seconds{7200}), "2h");
    EXPECT_EQ(format_duration(seconds{5400}), "90m");
    EXPECT_EQ(format_duration(seconds{61}), "61s");
}

TEST(FormatRule, BoundsRoundTripWithoutExponent) {
    Rule r{"tiny", ThresholdRule{{VitalKind::glucose, Comparator::greater, 1e-7}}, Severity::info};
    auto text = format_rule(r);
    auto number = text.substr(text.find('>') + 2);
    number = number.substr(0, number.find(' '));
    EXPECT_EQ(number, "0.0000001") << text;
    EXPECT_EQ(parse_rules(text)[0], r);
}

TEST(RuleSet, AddChecksInvariants) {
    RuleSet rs;
    rs.add({"a", ThresholdRule{{VitalKind::glucose, Comparator::less, 70}}, Severity::info});
    EXPECT_THROW(rs.add({"a", ThresholdRule{{VitalKind::glucose, Comparator::less, 60}}, Severity::info}),
                 std::invalid_argument);
    EXPECT_THROW(rs.add({"b", TrendRule{VitalKind::glucose, seconds{0}, TrendDirection::falls_below, 1, seconds{1}},
                         Severity::info}),
                 std::invalid_argument);
    EXPECT_THROW(rs.add({"9bad", ThresholdRule{{VitalKind::glucose, Comparator::less, 70}}, Severity::info}),
                 std::invalid_argument);
    EXPECT_EQ(rs.size(), 1u);
}

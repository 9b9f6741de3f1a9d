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

#include <selfserv/events.hpp>

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

/**
 * Textual rule language for CEP healthcare rules.
 *
 *   ruleset   := { rule } ;
 *   rule      := "rule" IDENT ":" "when" body "severity" SEV ;
 *   body      := threshold | window | trend | sequence ;
 *   threshold := KIND CMP NUMBER ;
 *   window    := AGG "(" KIND "," DUR ")" CMP NUMBER ;
 *   trend     := "trend" "(" KIND "," DUR ")" DIR NUMBER "within" DUR ;
 *   sequence  := threshold "then" threshold "within" DUR ;
 *
 * Durations are NUMBER followed by s, m or h and must come out as a positive
 * whole number of seconds. '#' comments run to end of line.
 */
namespace selfserv {

using Duration = std::chrono::seconds;

enum class Comparator : std::uint8_t { less, less_equal, greater, greater_equal };
enum class Aggregate : std::uint8_t { avg, min, max, count };
enum class TrendDirection : std::uint8_t { falls_below, rises_above };
enum class Severity : std::uint8_t { info, warning, high, critical };

std::string_view to_string(Comparator c);
std::string_view to_string(Aggregate a);
std::string_view to_string(TrendDirection d);
std::string_view to_string(Severity s);
std::optional<Severity> severity_from_string(std::string_view token);

bool compare(double lhs, Comparator c, double rhs);

/// `kind cmp bound`, the building block of threshold and sequence rules.
struct Condition {
    VitalKind kind{VitalKind::glucose};
    Comparator comparator{Comparator::less};
    double bound{0.0};

    bool matches(VitalKind k, double value) const { return k == kind && compare(value, comparator, bound); }
    bool operator==(const Condition&) const = default;
};

struct ThresholdRule {
    Condition condition;
    bool operator==(const ThresholdRule&) const = default;
};

struct WindowRule {
    Aggregate aggregate{Aggregate::avg};
    VitalKind kind{VitalKind::glucose};
    Duration window{0};
    Comparator comparator{Comparator::less};
    double bound{0.0};
    bool operator==(const WindowRule&) const = default;
};

struct TrendRule {
    VitalKind kind{VitalKind::glucose};
    Duration window{0};
    TrendDirection direction{TrendDirection::falls_below};
    double target{0.0};
    Duration horizon{0};
    bool operator==(const TrendRule&) const = default;
};

struct SequenceRule {
    Condition first;
    Condition then;
    Duration within{0};
    bool operator==(const SequenceRule&) const = default;
};

using RuleBody = std::variant<ThresholdRule, WindowRule, TrendRule, SequenceRule>;

struct Rule {
    std::string name;
    RuleBody body;
    Severity severity{Severity::info};
    bool operator==(const Rule&) const = default;
};

/// Rules in source order with pairwise distinct names.
class RuleSet {
public:
    RuleSet() = default;

    /// Throws std::invalid_argument on a duplicate name or an invalid rule.
    void add(Rule rule);

    const std::vector<Rule>& rules() const noexcept { return rules_; }
    std::size_t size() const noexcept { return rules_.size(); }
    bool empty() const noexcept { return rules_.empty(); }
    auto begin() const noexcept { return rules_.begin(); }
    auto end() const noexcept { return rules_.end(); }
    const Rule& operator[](std::size_t i) const { return rules_[i]; }

    bool operator==(const RuleSet&) const = default;

private:
    std::vector<Rule> rules_;
};

/// Throws std::invalid_argument when a type invariant does not hold (non-positive
/// duration, non-finite bound, malformed name).
void check_rule(const Rule& rule);

class RuleParseError : public std::runtime_error {
public:
    RuleParseError(std::size_t line, std::size_t column, std::string message,
                   std::vector<std::string> expected = {});

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& message() const noexcept { return message_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string message_;
    std::vector<std::string> expected_;
};

/// Throws RuleParseError with 1-based line and column of the offending token.
RuleSet parse_rules(std::string_view source);

/// Canonical single-line form, e.g. `rule r: when avg(glucose, 10m) < 70 severity high`.
std::string format_rule(const Rule& rule);

/// One canonical rule per line.
std::string format_rules(const RuleSet& rules);

/// Canonical duration text using the largest unit that divides it exactly.
std::string format_duration(Duration d);

}  // namespace selfserv

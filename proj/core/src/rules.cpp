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

#include <array>
#include <cctype>
#include <cmath>
#include <unordered_set>

namespace selfserv {

std::string_view to_string(Comparator c) {
    switch (c) {
        case Comparator::less: return "<";
        case Comparator::less_equal: return "<=";
        case Comparator::greater: return ">";
        case Comparator::greater_equal: return ">=";
    }
    return "?";
}

std::string_view to_string(Aggregate a) {
    switch (a) {
        case Aggregate::avg: return "avg";
        case Aggregate::min: return "min";
        case Aggregate::max: return "max";
        case Aggregate::count: return "count";
    }
    return "?";
}

std::string_view to_string(TrendDirection d) {
    return d == TrendDirection::falls_below ? "falls_below" : "rises_above";
}

std::string_view to_string(Severity s) {
    switch (s) {
        case Severity::info: return "info";
        case Severity::warning: return "warning";
        case Severity::high: return "high";
        case Severity::critical: return "critical";
    }
    return "?";
}

std::optional<Severity> severity_from_string(std::string_view token) {
    for (auto s : {Severity::info, Severity::warning, Severity::high, Severity::critical}) {
        if (to_string(s) == token) {
            return s;
        }
    }
    return std::nullopt;
}

bool compare(double lhs, Comparator c, double rhs) {
    switch (c) {
        case Comparator::less: return lhs < rhs;
        case Comparator::less_equal: return lhs <= rhs;
        case Comparator::greater: return lhs > rhs;
        case Comparator::greater_equal: return lhs >= rhs;
    }
    return false;
}

namespace {

bool is_rule_name(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s.front())) || s.front() == '_')) {
        return false;
    }
    for (char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) {
            return false;
        }
    }
    return true;
}

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

}  // namespace

void check_rule(const Rule& rule) {
    require(is_rule_name(rule.name), "invalid rule name '" + rule.name + "'");
    auto finite = [&](double v) {
        require(std::isfinite(v), "rule " + rule.name + ": bound must be finite");
    };
    auto positive = [&](Duration d, std::string_view what) {
        require(d.count() > 0, "rule " + rule.name + ": " + std::string(what) + " must be positive");
    };
    std::visit(
        [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, ThresholdRule>) {
                finite(body.condition.bound);
            } else if constexpr (std::is_same_v<T, WindowRule>) {
                finite(body.bound);
                positive(body.window, "window");
            } else if constexpr (std::is_same_v<T, TrendRule>) {
                finite(body.target);
                positive(body.window, "window");
                positive(body.horizon, "horizon");
            } else {
                finite(body.first.bound);
                finite(body.then.bound);
                positive(body.within, "within");
            }
        },
        rule.body);
}

void RuleSet::add(Rule rule) {
    check_rule(rule);
    for (const auto& existing : rules_) {
        require(existing.name != rule.name, "duplicate rule name '" + rule.name + "'");
    }
    rules_.push_back(std::move(rule));
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { ident, number, duration, colon, lparen, rparen, comma, cmp, end };

struct Token {
    Tok kind{Tok::end};
    std::string text;
    double number{0.0};       // number and duration (in seconds)
    Comparator comparator{};  // cmp
    std::size_t line{1};
    std::size_t column{1};
};

std::string describe(const Token& t) {
    switch (t.kind) {
        case Tok::end: return "end of input";
        case Tok::ident: return "'" + t.text + "'";
        default: return "'" + t.text + "'";
    }
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_space_and_comments();
            Token t;
            t.line = line_;
            t.column = column_;
            if (pos_ >= src_.size()) {
                out.push_back(t);
                return out;
            }
            char c = src_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                t.kind = Tok::ident;
                while (pos_ < src_.size() && is_ident_char(src_[pos_])) {
                    t.text += advance();
                }
            } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.') {
                lex_number(t);
            } else if (c == ':') {
                t.kind = Tok::colon;
                t.text = advance();
            } else if (c == '(') {
                t.kind = Tok::lparen;
                t.text = advance();
            } else if (c == ')') {
                t.kind = Tok::rparen;
                t.text = advance();
            } else if (c == ',') {
                t.kind = Tok::comma;
                t.text = advance();
            } else if (c == '<' || c == '>') {
                t.kind = Tok::cmp;
                t.text = advance();
                if (pos_ < src_.size() && src_[pos_] == '=') {
                    t.text += advance();
                }
                t.comparator = t.text == "<"    ? Comparator::less
                               : t.text == "<=" ? Comparator::less_equal
                               : t.text == ">"  ? Comparator::greater
                                                : Comparator::greater_equal;
            } else {
                throw RuleParseError(t.line, t.column,
                                     "unexpected character '" + std::string(1, c) + "'");
            }
            out.push_back(std::move(t));
        }
    }

private:
    static bool is_ident_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    }

    char advance() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        return c;
    }

    void skip_space_and_comments() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') {
                    advance();
                }
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                return;
            }
        }
    }

    void lex_number(Token& t) {
        std::string digits;
        if (src_[pos_] == '-') {
            digits += advance();
        }
        bool any_digit = false;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            digits += advance();
            any_digit = true;
        }
        if (pos_ < src_.size() && src_[pos_] == '.') {
            digits += advance();
            bool fraction = false;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                digits += advance();
                fraction = true;
            }
            // "5." and "." are malformed; ".5" is accepted.
            any_digit = fraction;
        }
        t.text = digits;
        auto value = any_digit ? text::parse_real(digits) : std::nullopt;
        if (!value) {
            throw RuleParseError(t.line, t.column, "malformed number '" + digits + "'", {"NUMBER"});
        }
        t.kind = Tok::number;
        t.number = *value;
        if (pos_ < src_.size() && is_ident_char(src_[pos_])) {
            std::string suffix;
            while (pos_ < src_.size() && is_ident_char(src_[pos_])) {
                suffix += advance();
            }
            t.text += suffix;
            double scale = suffix == "s" ? 1.0 : suffix == "m" ? 60.0 : suffix == "h" ? 3600.0 : 0.0;
            if (scale == 0.0) {
                throw RuleParseError(t.line, t.column, "unknown duration unit '" + suffix + "'",
                                     {"s", "m", "h"});
            }
            t.kind = Tok::duration;
            t.number = *value * scale;
        }
    }

    std::string_view src_;
    std::size_t pos_{0};
    std::size_t line_{1};
    std::size_t column_{1};
};

// ---------------------------------------------------------------------------
// Parser

constexpr std::array<std::string_view, 4> kAggregates{"avg", "min", "max", "count"};

std::optional<Aggregate> aggregate_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kAggregates.size(); ++i) {
        if (kAggregates[i] == s) {
            return static_cast<Aggregate>(i);
        }
    }
    return std::nullopt;
}

std::vector<std::string> kind_tokens() {
    std::vector<std::string> out;
    for (auto k : kAllVitalKinds) {
        out.emplace_back(to_string(k));
    }
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    RuleSet run() {
        RuleSet set;
        std::unordered_set<std::string> names;
        while (peek().kind != Tok::end) {
            auto name_token = peek(1);
            Rule rule = parse_rule();
            if (!names.insert(rule.name).second) {
                throw RuleParseError(name_token.line, name_token.column,
                                     "duplicate rule name '" + rule.name + "'");
            }
            set.add(std::move(rule));
        }
        return set;
    }

private:
    const Token& peek(std::size_t ahead = 0) const {
        auto i = std::min(pos_ + ahead, tokens_.size() - 1);
        return tokens_[i];
    }

    Token next() {
        Token t = peek();
        if (pos_ < tokens_.size() - 1) {
            ++pos_;
        }
        return t;
    }

    [[noreturn]] void fail(const Token& at, std::vector<std::string> expected,
                           std::string message = {}) const {
        if (message.empty()) {
            std::string list;
            for (std::size_t i = 0; i < expected.size(); ++i) {
                list += (i == 0 ? "" : i + 1 == expected.size() ? " or " : ", ") + expected[i];
            }
            message = "expected " + list + ", found " + describe(at);
        }
        throw RuleParseError(at.line, at.column, std::move(message), std::move(expected));
    }

    void expect_keyword(std::string_view word) {
        const auto& t = peek();
        if (t.kind != Tok::ident || t.text != word) {
            fail(t, {"'" + std::string(word) + "'"});
        }
        next();
    }

    void expect(Tok kind, std::string_view label) {
        if (peek().kind != kind) {
            fail(peek(), {std::string(label)});
        }
        next();
    }

    Rule parse_rule() {
        expect_keyword("rule");
        const auto& name = peek();
        if (name.kind != Tok::ident) {
            fail(name, {"IDENT"});
        }
        Rule rule;
        rule.name = next().text;
        expect(Tok::colon, "':'");
        expect_keyword("when");
        rule.body = parse_body();
        expect_keyword("severity");
        const auto& sev = peek();
        if (sev.kind != Tok::ident) {
            fail(sev, {"info", "warning", "high", "critical"});
        }
        auto severity = severity_from_string(sev.text);
        if (!severity) {
            fail(sev, {"info", "warning", "high", "critical"},
                 "unknown severity '" + sev.text + "'");
        }
        next();
        rule.severity = *severity;
        return rule;
    }

    RuleBody parse_body() {
        const auto& head = peek();
        if (head.kind != Tok::ident) {
            auto expected = kind_tokens();
            expected.insert(expected.end(), {"avg", "min", "max", "count", "trend"});
            fail(head, expected);
        }
        bool call = peek(1).kind == Tok::lparen;
        if (call && head.text == "trend") {
            return parse_trend();
        }
        if (call) {
            if (!aggregate_from_string(head.text)) {
                fail(head, {"avg", "min", "max", "count", "trend"},
                     "unknown aggregate '" + head.text + "'");
            }
            return parse_window();
        }
        Condition first = parse_condition();
        if (peek().kind == Tok::ident && peek().text == "then") {
            next();
            SequenceRule seq;
            seq.first = first;
            seq.then = parse_condition();
            expect_keyword("within");
            seq.within = parse_duration();
            return seq;
        }
        return ThresholdRule{first};
    }

    VitalKind parse_kind() {
        const auto& t = peek();
        if (t.kind != Tok::ident) {
            fail(t, kind_tokens());
        }
        auto kind = vital_kind_from_string(t.text);
        if (!kind) {
            fail(t, kind_tokens(), "unknown kind '" + t.text + "'");
        }
        next();
        return *kind;
    }

    Comparator parse_comparator() {
        const auto& t = peek();
        if (t.kind != Tok::cmp) {
            fail(t, {"'<'", "'<='", "'>'", "'>='"});
        }
        return next().comparator;
    }

    double parse_number() {
        const auto& t = peek();
        if (t.kind != Tok::number) {
            fail(t, {"NUMBER"});
        }
        return next().number;
    }

    Duration parse_duration() {
        const auto& t = peek();
        if (t.kind != Tok::duration) {
            fail(t, {"DURATION"});
        }
        double seconds = t.number;
        if (!(seconds > 0.0)) {
            fail(t, {"DURATION"}, "duration must be positive, found '" + t.text + "'");
        }
        if (seconds != std::floor(seconds) || seconds > 9.0e15) {
            fail(t, {"DURATION"}, "duration must be a whole number of seconds, found '" + t.text + "'");
        }
        next();
        return Duration{static_cast<Duration::rep>(seconds)};
    }

    Condition parse_condition() {
        Condition c;
        c.kind = parse_kind();
        c.comparator = parse_comparator();
        c.bound = parse_number();
        return c;
    }

    WindowRule parse_window() {
        WindowRule w;
        w.aggregate = *aggregate_from_string(next().text);
        expect(Tok::lparen, "'('");
        w.kind = parse_kind();
        expect(Tok::comma, "','");
        w.window = parse_duration();
        expect(Tok::rparen, "')'");
        w.comparator = parse_comparator();
        w.bound = parse_number();
        return w;
    }

    TrendRule parse_trend() {
        TrendRule r;
        next();  // trend
        expect(Tok::lparen, "'('");
        r.kind = parse_kind();
        expect(Tok::comma, "','");
        r.window = parse_duration();
        expect(Tok::rparen, "')'");
        const auto& dir = peek();
        if (dir.kind == Tok::ident && dir.text == "falls_below") {
            r.direction = TrendDirection::falls_below;
        } else if (dir.kind == Tok::ident && dir.text == "rises_above") {
            r.direction = TrendDirection::rises_above;
        } else {
            fail(dir, {"falls_below", "rises_above"});
        }
        next();
        r.target = parse_number();
        expect_keyword("within");
        r.horizon = parse_duration();
        return r;
    }

    std::vector<Token> tokens_;
    std::size_t pos_{0};
};

}  // namespace

RuleParseError::RuleParseError(std::size_t line, std::size_t column, std::string message,
                               std::vector<std::string> expected)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      message_(std::move(message)),
      expected_(std::move(expected)) {}

RuleSet parse_rules(std::string_view source) {
    return Parser(Lexer(source).run()).run();
}

std::string format_duration(Duration d) {
    auto s = d.count();
    if (s % 3600 == 0) {
        return std::to_string(s / 3600) + "h";
    }
    if (s % 60 == 0) {
        return std::to_string(s / 60) + "m";
    }
    return std::to_string(s) + "s";
}

namespace {

std::string format_condition(const Condition& c) {
    return std::string(to_string(c.kind)) + " " + std::string(to_string(c.comparator)) + " " +
           text::format_real_exact(c.bound);
}

}  // namespace

std::string format_rule(const Rule& rule) {
    std::string body = std::visit(
        [](const auto& b) -> std::string {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, ThresholdRule>) {
                return format_condition(b.condition);
            } else if constexpr (std::is_same_v<T, WindowRule>) {
                return std::string(to_string(b.aggregate)) + "(" + std::string(to_string(b.kind)) +
                       ", " + format_duration(b.window) + ") " +
                       std::string(to_string(b.comparator)) + " " + text::format_real_exact(b.bound);
            } else if constexpr (std::is_same_v<T, TrendRule>) {
                return "trend(" + std::string(to_string(b.kind)) + ", " + format_duration(b.window) +
                       ") " + std::string(to_string(b.direction)) + " " +
                       text::format_real_exact(b.target) + " within " + format_duration(b.horizon);
            } else {
                return format_condition(b.first) + " then " + format_condition(b.then) +
                       " within " + format_duration(b.within);
            }
        },
        rule.body);
    return "rule " + rule.name + ": when " + body + " severity " +
           std::string(to_string(rule.severity));
}

std::string format_rules(const RuleSet& rules) {
    std::string out;
    for (const auto& r : rules) {
        out += format_rule(r);
        out += '\n';
    }
    return out;
}

}  // namespace selfserv

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

#include <selfserv/engine.hpp>
#include <selfserv/text.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace selfserv {

std::string_view alert_csv_header() {
    return "fire_time,patient_id,rule_name,severity,predicted_crossing_time";
}

std::string format_alert_line(const Alert& alert) {
    std::string out = std::to_string(alert.fire_time);
    out += ',';
    out += alert.patient_id;
    out += ',';
    out += alert.rule_name;
    out += ',';
    out += to_string(alert.severity);
    if (alert.predicted_crossing_time) {
        out += ',';
        out += std::to_string(*alert.predicted_crossing_time);
    }
    return out;
}

std::span<const EvidencePoint> points_in_window(std::span<const EvidencePoint> values,
                                                Duration window, Timestamp now) {
    const Timestamp lower = now - window.count();
    auto first = std::partition_point(values.begin(), values.end(),
                                      [&](const EvidencePoint& p) { return p.timestamp <= lower; });
    auto last = std::partition_point(first, values.end(),
                                     [&](const EvidencePoint& p) { return p.timestamp <= now; });
    return {first, last};
}

std::optional<double> window_aggregate(std::span<const EvidencePoint> values, Aggregate aggregate,
                                       Duration window, Timestamp now) {
    auto in_window = points_in_window(values, window, now);
    if (aggregate == Aggregate::count) {
        return static_cast<double>(in_window.size());
    }
    if (in_window.empty()) {
        return std::nullopt;
    }
    switch (aggregate) {
        case Aggregate::avg: {
            double sum = 0.0;
            for (const auto& p : in_window) {
                sum += p.value;
            }
            return sum / static_cast<double>(in_window.size());
        }
        case Aggregate::min:
            return std::min_element(in_window.begin(), in_window.end(),
                                    [](const auto& a, const auto& b) { return a.value < b.value; })
                ->value;
        case Aggregate::max:
            return std::max_element(in_window.begin(), in_window.end(),
                                    [](const auto& a, const auto& b) { return a.value < b.value; })
                ->value;
        case Aggregate::count: break;
    }
    return std::nullopt;
}

std::optional<double> TrendFit::crossing(double target, TrendDirection direction,
                                         double not_before) const {
    bool toward = direction == TrendDirection::falls_below ? slope_ < 0.0 : slope_ > 0.0;
    if (!toward) {
        return std::nullopt;
    }
    double t = origin_ + (target - origin_value_) / slope_;
    return std::max(t, not_before);
}

namespace {

__extension__ using Int128 = __int128;

// Exact sum of doubles kept as a non-overlapping expansion (Shewchuk). Used for
// the slope numerator so that a mathematically flat window yields slope 0, not
// rounding noise whose sign would decide whether a trend rule fires.
class ExactSum {
public:
    void add(double x) {
        std::size_t kept = 0;
        for (double part : parts_) {
            double sum = x + part;
            double virt = sum - x;
            double err = (x - (sum - virt)) + (part - virt);
            x = sum;
            if (err != 0.0) {
                parts_[kept++] = err;
            }
        }
        parts_.resize(kept);
        if (x != 0.0) {
            parts_.push_back(x);
        }
    }

    void add_product(double a, double b) {
        double p = a * b;
        add(std::fma(a, b, -p));
        add(p);
    }

    // Components are increasing in magnitude and non-overlapping, so summing
    // them smallest first gives a faithfully rounded value with the exact sign.
    double value() const {
        double v = 0.0;
        for (double part : parts_) {
            v += part;
        }
        return v;
    }

private:
    std::vector<double> parts_;
};

}  // namespace

TrendFit trend_predict(std::span<const EvidencePoint> points) {
    if (points.size() < 2) {
        throw std::invalid_argument("trend_predict needs at least 2 points");
    }
    // Shift by the first timestamp; the time sums are then exact integers.
    const Timestamp origin = points.front().timestamp;
    const auto n = static_cast<Int128>(points.size());
    Int128 st = 0;
    Int128 stt = 0;
    double sv = 0.0;
    for (const auto& p : points) {
        Int128 t = p.timestamp - origin;
        st += t;
        stt += t * t;
        sv += p.value;
    }
    const Int128 denom = n * stt - st * st;
    if (denom == 0) {
        throw std::invalid_argument("trend_predict: all timestamps are equal");
    }
    // numerator = sum_i (n * t_i - sum t) * v_i, with integer weights.
    constexpr Int128 kExactDouble = static_cast<Int128>(1) << 53;
    ExactSum numerator;
    double rough = 0.0;
    bool exact = true;
    for (const auto& p : points) {
        Int128 w = n * (p.timestamp - origin) - st;
        exact = exact && w < kExactDouble && -w < kExactDouble;
        numerator.add_product(static_cast<double>(w), p.value);
        rough += static_cast<double>(w) * p.value;
    }
    const double slope =
        (exact ? numerator.value() : rough) / static_cast<double>(denom);
    const double at_origin = (sv - slope * static_cast<double>(st)) / static_cast<double>(n);
    return TrendFit(slope, static_cast<double>(origin), at_origin);
}

void Engine::PointRing::pop_front() {
    ++head_;
    if (head_ == data_.size()) {
        data_.clear();
        head_ = 0;
    } else if (head_ >= 64 && head_ * 2 >= data_.size()) {
        data_.erase(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(head_));
        head_ = 0;
    }
}

Engine::Engine(RuleSet rules, EngineOptions options)
    : rules_(std::move(rules)), options_(options) {
    if (options_.refractory.count() < 0) {
        throw std::invalid_argument("refractory period must be non-negative");
    }
    for (const auto& rule : rules_) {
        if (const auto* w = std::get_if<WindowRule>(&rule.body)) {
            retention_ = std::max(retention_, w->window);
            buffered_kinds_[static_cast<std::size_t>(w->kind)] = true;
        } else if (const auto* t = std::get_if<TrendRule>(&rule.body)) {
            retention_ = std::max(retention_, t->window);
            buffered_kinds_[static_cast<std::size_t>(t->kind)] = true;
        }
    }
}

std::optional<Timestamp> Engine::oldest_buffered() const {
    if (fifo_.empty()) {
        return std::nullopt;
    }
    return fifo_.front().first;
}

Engine::PatientState& Engine::patient_state(const std::string& patient_id) {
    auto [it, inserted] = patients_.try_emplace(patient_id);
    if (inserted) {
        it->second.last_fire.resize(rules_.size());
        it->second.pending_firsts.resize(rules_.size());
    }
    return it->second;
}

void Engine::evict(Timestamp now) {
    const Timestamp horizon = now - retention_.count();
    while (!fifo_.empty() && fifo_.front().first <= horizon) {
        fifo_.front().second->pop_front();
        fifo_.pop_front();
    }
}

bool Engine::refractory_allows(PatientState& state, std::size_t rule_index, Timestamp now) const {
    auto& last = state.last_fire[rule_index];
    if (last && now - *last < options_.refractory.count()) {
        return false;
    }
    last = now;
    return true;
}

std::vector<Alert> Engine::ingest(const HealthEvent& event) {
    const Timestamp now = event.timestamp;
    if (last_timestamp_ && now < *last_timestamp_) {
        throw OutOfOrderEvent("event at t=" + std::to_string(now) + " precedes t=" +
                              std::to_string(*last_timestamp_));
    }
    last_timestamp_ = now;

    evict(now);
    auto& state = patient_state(event.patient_id);
    const auto kind_index = static_cast<std::size_t>(event.kind);
    if (buffered_kinds_[kind_index]) {
        auto& ring = state.rings[kind_index];
        ring.push_back({now, event.value});
        fifo_.emplace_back(now, &ring);
    }

    std::vector<Alert> alerts;
    auto emit = [&](const Rule& rule, std::vector<EvidencePoint> evidence,
                    std::optional<Timestamp> predicted = std::nullopt) {
        alerts.push_back(Alert{rule.name, event.patient_id, now, rule.severity,
                               std::move(evidence), predicted});
    };

    for (std::size_t i = 0; i < rules_.size(); ++i) {
        const Rule& rule = rules_[i];
        if (const auto* r = std::get_if<ThresholdRule>(&rule.body)) {
            if (r->condition.matches(event.kind, event.value) && refractory_allows(state, i, now)) {
                emit(rule, {{now, event.value}});
            }
        } else if (const auto* r = std::get_if<WindowRule>(&rule.body)) {
            if (event.kind != r->kind) {
                continue;
            }
            auto points = state.rings[kind_index].view();
            auto value = window_aggregate(points, r->aggregate, r->window, now);
            if (value && compare(*value, r->comparator, r->bound) &&
                refractory_allows(state, i, now)) {
                auto in_window = points_in_window(points, r->window, now);
                emit(rule, {in_window.begin(), in_window.end()});
            }
        } else if (const auto* r = std::get_if<TrendRule>(&rule.body)) {
            if (event.kind != r->kind) {
                continue;
            }
            auto in_window = points_in_window(state.rings[kind_index].view(), r->window, now);
            if (in_window.size() < 2 || in_window.front().timestamp == in_window.back().timestamp) {
                continue;
            }
            auto fit = trend_predict(in_window);
            auto crossing = fit.crossing(r->target, r->direction, static_cast<double>(now));
            if (crossing && *crossing - static_cast<double>(now) <= static_cast<double>(r->horizon.count()) &&
                refractory_allows(state, i, now)) {
                emit(rule, {in_window.begin(), in_window.end()},
                     static_cast<Timestamp>(std::llround(*crossing)));
            }
        } else if (const auto* r = std::get_if<SequenceRule>(&rule.body)) {
            auto& pending = state.pending_firsts[i];
            while (!pending.empty() && now - pending.front().timestamp > r->within.count()) {
                pending.pop_front();
            }
            if (!pending.empty() && r->then.matches(event.kind, event.value)) {
                EvidencePoint first = pending.front();
                pending.clear();
                if (refractory_allows(state, i, now)) {
                    emit(rule, {first, {now, event.value}});
                }
            } else if (r->first.matches(event.kind, event.value)) {
                pending.push_back({now, event.value});
            }
        }
    }
    return alerts;
}

}  // namespace selfserv

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
#include <selfserv/rules.hpp>

#include <array>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace selfserv {

struct EvidencePoint {
    Timestamp timestamp{0};
    double value{0.0};
    bool operator==(const EvidencePoint&) const = default;
};

struct Alert {
    std::string rule_name;
    std::string patient_id;
    Timestamp fire_time{0};
    Severity severity{Severity::info};
    std::vector<EvidencePoint> evidence;
    std::optional<Timestamp> predicted_crossing_time;  // trend rules only

    bool operator==(const Alert&) const = default;
};

/// `fire_time,patient_id,rule_name,severity,predicted_crossing_time`
std::string_view alert_csv_header();

/// `fire_time,patient_id,rule_name,severity[,predicted_crossing_time]`; the last
/// field is omitted for alerts without a prediction.
std::string format_alert_line(const Alert& alert);

/// Aggregate over the points with timestamp in (now - window, now]. `values` must be
/// time-ordered. count over an empty window is 0; the other aggregates are nullopt.
std::optional<double> window_aggregate(std::span<const EvidencePoint> values, Aggregate aggregate,
                                       Duration window, Timestamp now);

/// Subrange of time-ordered `values` falling in (now - window, now].
std::span<const EvidencePoint> points_in_window(std::span<const EvidencePoint> values,
                                                Duration window, Timestamp now);

/// Least-squares line value = slope * t + intercept.
class TrendFit {
public:
    TrendFit(double slope, double origin_time, double value_at_origin)
        : slope_(slope), origin_(origin_time), origin_value_(value_at_origin) {}

    /// Units per second.
    double slope() const noexcept { return slope_; }
    /// Fitted value at t = 0.
    double intercept() const noexcept { return origin_value_ - slope_ * origin_; }
    double value_at(double t) const noexcept { return origin_value_ + slope_ * (t - origin_); }

    /// Earliest time >= `not_before` at which the line is at or past `target` moving in
    /// `direction`; nullopt when the slope does not move toward the target.
    std::optional<double> crossing(double target, TrendDirection direction,
                                   double not_before) const;

private:
    double slope_;
    double origin_;
    double origin_value_;
};

/// Ordinary least squares over `points`. Throws std::invalid_argument for fewer than
/// two points or when all timestamps coincide.
TrendFit trend_predict(std::span<const EvidencePoint> points);

struct EngineOptions {
    /// A rule fires for a patient at most once per period; zero disables suppression.
    Duration refractory{300};
};

class OutOfOrderEvent : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Incremental evaluator of a RuleSet over a monotone event stream.
 *
 * Rules are evaluated only at ingestion instants and only against the ingesting
 * patient's history:
 *  - threshold: the event itself matches;
 *  - window: on an event of the rule's kind, the aggregate over (t - window, t];
 *  - trend: on an event of the rule's kind with at least two distinct timestamps in
 *    the window, the fitted line reaches the target within the horizon;
 *  - sequence: an event matching `then` pairs with the earliest unexpired pending
 *    `first` (age <= within) and clears all pending firsts; the completing event is
 *    never itself kept as a new first.
 */
class Engine {
public:
    explicit Engine(RuleSet rules, EngineOptions options = {});
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;
    Engine(Engine&&) noexcept = default;
    Engine& operator=(Engine&&) noexcept = default;

    /// Alerts produced by `event`, in rule order. Throws OutOfOrderEvent (state
    /// unchanged) if the event is older than the latest ingested one.
    std::vector<Alert> ingest(const HealthEvent& event);

    const RuleSet& rules() const noexcept { return rules_; }
    const EngineOptions& options() const noexcept { return options_; }

    /// Largest window among window and trend rules; bounds per-stream retention.
    Duration retention() const noexcept { return retention_; }

    /// Number of buffered (timestamp, value) pairs across all streams.
    std::size_t buffered_points() const noexcept { return fifo_.size(); }
    std::optional<Timestamp> oldest_buffered() const;
    std::optional<Timestamp> last_timestamp() const noexcept { return last_timestamp_; }

private:
    // FIFO of points with contiguous storage so windows can be handed out as spans.
    class PointRing {
    public:
        void push_back(EvidencePoint p) { data_.push_back(p); }
        void pop_front();
        std::span<const EvidencePoint> view() const {
            return std::span<const EvidencePoint>(data_).subspan(head_);
        }

    private:
        std::vector<EvidencePoint> data_;
        std::size_t head_{0};
    };

    struct PatientState {
        std::array<PointRing, kAllVitalKinds.size()> rings;
        std::vector<std::optional<Timestamp>> last_fire;
        std::vector<std::deque<EvidencePoint>> pending_firsts;
    };

    PatientState& patient_state(const std::string& patient_id);
    void evict(Timestamp now);
    bool refractory_allows(PatientState& state, std::size_t rule_index, Timestamp now) const;

    RuleSet rules_;
    EngineOptions options_;
    Duration retention_{0};
    std::array<bool, kAllVitalKinds.size()> buffered_kinds_{};
    std::unordered_map<std::string, PatientState> patients_;
    // Every buffered pair in ingestion order, paired with the ring that holds it.
    std::deque<std::pair<Timestamp, PointRing*>> fifo_;
    std::optional<Timestamp> last_timestamp_;
};

}  // namespace selfserv

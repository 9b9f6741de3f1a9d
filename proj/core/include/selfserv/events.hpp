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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace selfserv {

/// Seconds since the epoch of the log the event came from.
using Timestamp = std::int64_t;

enum class VitalKind : std::uint8_t {
    glucose,
    heart_rate,
    systolic_bp,
    diastolic_bp,
    temperature,
    motion,
    fall_signal,
};

inline constexpr std::array<VitalKind, 7> kAllVitalKinds{
    VitalKind::glucose,     VitalKind::heart_rate, VitalKind::systolic_bp,
    VitalKind::diastolic_bp, VitalKind::temperature, VitalKind::motion,
    VitalKind::fall_signal,
};

std::string_view to_string(VitalKind kind);
std::optional<VitalKind> vital_kind_from_string(std::string_view token);

/// Plausibility range accepted by validate_reading. For motion and fall_signal the
/// value must additionally be exactly 0 or 1.
struct PlausibleRange {
    double low;
    double high;
};
std::optional<PlausibleRange> plausible_range(VitalKind kind);

/// One timestamped vital-sign reading for one patient.
struct HealthEvent {
    std::string patient_id;
    Timestamp timestamp{0};
    VitalKind kind{VitalKind::glucose};
    double value{0.0};

    bool operator==(const HealthEvent&) const = default;
};

/// Replay order: (timestamp, patient_id, kind).
bool replay_order_less(const HealthEvent& a, const HealthEvent& b);

enum class ValidationErrc {
    out_of_range,
    non_finite,
    unknown_kind,
    invalid_patient_id,
    negative_timestamp,
};

class ValidationError : public std::runtime_error {
public:
    ValidationError(ValidationErrc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ValidationErrc code() const noexcept { return code_; }

private:
    ValidationErrc code_;
};

/// Throws ValidationError naming the violated bound.
void validate_reading(const HealthEvent& event);

enum class EventParseErrc {
    missing_field,
    malformed_field,
    unknown_kind,
    negative_timestamp,
    extra_field,
};

class EventParseError : public std::runtime_error {
public:
    EventParseError(EventParseErrc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    EventParseErrc code() const noexcept { return code_; }

private:
    EventParseErrc code_;
};

/// Decodes `patient_id,timestamp,kind,value`. Does not apply plausibility bounds.
HealthEvent parse_event_line(std::string_view line);

/// Inverse of parse_event_line; value printed with at most 6 decimals.
std::string format_event_line(const HealthEvent& event);

/// Time-ordered sequence of events. Appends that would break the order are rejected.
class EventStream {
public:
    EventStream() = default;

    /// Throws std::invalid_argument if `event` sorts before the current back().
    void append(HealthEvent event);

    const std::vector<HealthEvent>& events() const noexcept { return events_; }
    std::size_t size() const noexcept { return events_.size(); }
    bool empty() const noexcept { return events_.empty(); }
    auto begin() const noexcept { return events_.begin(); }
    auto end() const noexcept { return events_.end(); }
    const HealthEvent& operator[](std::size_t i) const { return events_[i]; }

private:
    std::vector<HealthEvent> events_;
};

/// One event-log input: a display name for diagnostics plus its raw text.
struct LogSource {
    std::string name;
    std::string text;
};

LogSource read_log_file(const std::filesystem::path& path);

struct ReplayDiagnostic {
    std::string source;
    std::size_t line{0};
    std::string message;

    std::string to_string() const;
};

class ReplayError : public std::runtime_error {
public:
    explicit ReplayError(std::vector<ReplayDiagnostic> diagnostics);
    const std::vector<ReplayDiagnostic>& diagnostics() const noexcept { return diagnostics_; }

private:
    std::vector<ReplayDiagnostic> diagnostics_;
};

/// Decodes, validates and merges the sources into one stream in replay order.
/// Blank lines and lines starting with '#' are skipped. Every parse or validation
/// failure and every timestamp regression within a source is collected and
/// reported together in a ReplayError.
EventStream replay_log(std::span<const LogSource> sources);

}  // namespace selfserv

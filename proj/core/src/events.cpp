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

#include <selfserv/events.hpp>
#include <selfserv/text.hpp>

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

namespace selfserv {

namespace {

constexpr std::array<std::string_view, 7> kKindTokens{
    "glucose", "heart_rate", "systolic_bp", "diastolic_bp", "temperature", "motion", "fall_signal",
};

bool is_known(VitalKind kind) {
    return static_cast<std::size_t>(kind) < kKindTokens.size();
}

}  // namespace

std::string_view to_string(VitalKind kind) {
    if (!is_known(kind)) {
        return "unknown";
    }
    return kKindTokens[static_cast<std::size_t>(kind)];
}

std::optional<VitalKind> vital_kind_from_string(std::string_view token) {
    for (std::size_t i = 0; i < kKindTokens.size(); ++i) {
        if (kKindTokens[i] == token) {
            return static_cast<VitalKind>(i);
        }
    }
    return std::nullopt;
}

std::optional<PlausibleRange> plausible_range(VitalKind kind) {
    switch (kind) {
        case VitalKind::glucose: return PlausibleRange{10.0, 1000.0};
        case VitalKind::heart_rate: return PlausibleRange{20.0, 300.0};
        case VitalKind::systolic_bp: return PlausibleRange{40.0, 300.0};
        case VitalKind::diastolic_bp: return PlausibleRange{20.0, 200.0};
        case VitalKind::temperature: return PlausibleRange{25.0, 45.0};
        case VitalKind::motion:
        case VitalKind::fall_signal: return PlausibleRange{0.0, 1.0};
    }
    return std::nullopt;
}

bool replay_order_less(const HealthEvent& a, const HealthEvent& b) {
    return std::tie(a.timestamp, a.patient_id, a.kind) <
           std::tie(b.timestamp, b.patient_id, b.kind);
}

void validate_reading(const HealthEvent& event) {
    if (!text::is_identifier(event.patient_id)) {
        throw ValidationError(ValidationErrc::invalid_patient_id,
                              "invalid patient id '" + event.patient_id + "'");
    }
    if (event.timestamp < 0) {
        throw ValidationError(ValidationErrc::negative_timestamp,
                              "negative timestamp " + std::to_string(event.timestamp));
    }
    auto range = plausible_range(event.kind);
    if (!range) {
        throw ValidationError(ValidationErrc::unknown_kind,
                              "unknown kind " + std::to_string(static_cast<int>(event.kind)));
    }
    if (!std::isfinite(event.value)) {
        throw ValidationError(ValidationErrc::non_finite,
                              std::string(to_string(event.kind)) + " value is not finite");
    }
    bool binary = event.kind == VitalKind::motion || event.kind == VitalKind::fall_signal;
    bool in_range = binary ? (event.value == 0.0 || event.value == 1.0)
                           : (event.value >= range->low && event.value <= range->high);
    if (!in_range) {
        std::string bound = binary ? "{0, 1}"
                                   : "[" + text::format_real(range->low) + ", " +
                                         text::format_real(range->high) + "]";
        throw ValidationError(ValidationErrc::out_of_range,
                              std::string(to_string(event.kind)) + " value " +
                                  text::format_real(event.value) + " outside " + bound);
    }
}

HealthEvent parse_event_line(std::string_view line) {
    auto fields = text::split_fields(line);
    if (fields.size() < 4) {
        throw EventParseError(EventParseErrc::missing_field,
                              "expected 4 fields, found " + std::to_string(fields.size()));
    }
    if (fields.size() > 4) {
        throw EventParseError(EventParseErrc::extra_field,
                              "expected 4 fields, found " + std::to_string(fields.size()));
    }
    static constexpr std::array<std::string_view, 4> names{"patient_id", "timestamp", "kind",
                                                           "value"};
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i].empty()) {
            throw EventParseError(EventParseErrc::missing_field,
                                  "empty field " + std::string(names[i]));
        }
    }

    HealthEvent event;
    if (!text::is_identifier(fields[0])) {
        throw EventParseError(EventParseErrc::malformed_field,
                              "malformed patient_id '" + std::string(fields[0]) + "'");
    }
    event.patient_id = std::string(fields[0]);

    auto ts = text::parse_int(fields[1]);
    if (!ts) {
        throw EventParseError(EventParseErrc::malformed_field,
                              "malformed timestamp '" + std::string(fields[1]) + "'");
    }
    if (*ts < 0) {
        throw EventParseError(EventParseErrc::negative_timestamp,
                              "negative timestamp " + std::string(fields[1]));
    }
    event.timestamp = *ts;

    auto kind = vital_kind_from_string(fields[2]);
    if (!kind) {
        throw EventParseError(EventParseErrc::unknown_kind,
                              "unknown kind '" + std::string(fields[2]) + "'");
    }
    event.kind = *kind;

    auto value = text::parse_real(fields[3]);
    if (!value) {
        throw EventParseError(EventParseErrc::malformed_field,
                              "malformed value '" + std::string(fields[3]) + "'");
    }
    event.value = *value;
    return event;
}

std::string format_event_line(const HealthEvent& event) {
    std::string out = event.patient_id;
    out += ',';
    out += std::to_string(event.timestamp);
    out += ',';
    out += to_string(event.kind);
    out += ',';
    out += text::format_real(event.value);
    return out;
}

void EventStream::append(HealthEvent event) {
    if (!events_.empty() && replay_order_less(event, events_.back())) {
        throw std::invalid_argument("event at t=" + std::to_string(event.timestamp) +
                                    " breaks stream order");
    }
    events_.push_back(std::move(event));
}

LogSource read_log_file(const std::filesystem::path& path) {
    return LogSource{path.string(), text::read_file(path)};
}

std::string ReplayDiagnostic::to_string() const {
    return source + ":" + std::to_string(line) + ": " + message;
}

namespace {

std::string join_diagnostics(const std::vector<ReplayDiagnostic>& diagnostics) {
    std::string out;
    for (const auto& d : diagnostics) {
        if (!out.empty()) {
            out += '\n';
        }
        out += d.to_string();
    }
    return out;
}

}  // namespace

ReplayError::ReplayError(std::vector<ReplayDiagnostic> diagnostics)
    : std::runtime_error(join_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics)) {}

EventStream replay_log(std::span<const LogSource> sources) {
    std::vector<ReplayDiagnostic> diagnostics;
    std::vector<std::vector<HealthEvent>> decoded(sources.size());

    for (std::size_t s = 0; s < sources.size(); ++s) {
        const auto& source = sources[s];
        auto lines = text::split_lines(source.text);
        std::optional<Timestamp> previous;
        std::size_t previous_line = 0;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            auto line = lines[i];
            if (text::trim(line).empty() || line.front() == '#') {
                continue;
            }
            HealthEvent event;
            try {
                event = parse_event_line(line);
                validate_reading(event);
            } catch (const std::runtime_error& e) {
                diagnostics.push_back({source.name, i + 1, e.what()});
                continue;
            }
            if (previous && event.timestamp < *previous) {
                diagnostics.push_back({source.name, i + 1,
                                       "out-of-order timestamp " +
                                           std::to_string(event.timestamp) + " after " +
                                           std::to_string(*previous) + " (line " +
                                           std::to_string(previous_line) + ")"});
                continue;
            }
            previous = event.timestamp;
            previous_line = i + 1;
            decoded[s].push_back(std::move(event));
        }
    }
    if (!diagnostics.empty()) {
        throw ReplayError(std::move(diagnostics));
    }

    // Sources only guarantee non-decreasing timestamps; order each equal-timestamp
    // run by the full key so the k-way merge below sees fully sorted inputs.
    for (auto& events : decoded) {
        auto run_begin = events.begin();
        while (run_begin != events.end()) {
            auto run_end = std::find_if(run_begin, events.end(), [&](const HealthEvent& e) {
                return e.timestamp != run_begin->timestamp;
            });
            std::stable_sort(run_begin, run_end, replay_order_less);
            run_begin = run_end;
        }
    }

    struct Cursor {
        std::size_t source;
        std::size_t index;
    };
    auto later = [&](const Cursor& a, const Cursor& b) {
        const auto& ea = decoded[a.source][a.index];
        const auto& eb = decoded[b.source][b.index];
        if (replay_order_less(eb, ea)) {
            return true;
        }
        if (replay_order_less(ea, eb)) {
            return false;
        }
        return a.source > b.source;
    };
    std::priority_queue<Cursor, std::vector<Cursor>, decltype(later)> heap(later);
    for (std::size_t s = 0; s < decoded.size(); ++s) {
        if (!decoded[s].empty()) {
            heap.push({s, 0});
        }
    }

    EventStream stream;
    while (!heap.empty()) {
        auto cursor = heap.top();
        heap.pop();
        stream.append(std::move(decoded[cursor.source][cursor.index]));
        if (cursor.index + 1 < decoded[cursor.source].size()) {
            heap.push({cursor.source, cursor.index + 1});
        }
    }
    return stream;
}

}  // namespace selfserv

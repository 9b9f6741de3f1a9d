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

#include <map>
#include <optional>
#include <string>
#include <string_view>

// Adaptive risk threshold and adaptive monitoring.
namespace selfserv {

/// Ordered by severity: stay_home < request_verification < dispatch_professional < hospitalize.
enum class CareAction : std::uint8_t {
    stay_home,
    request_verification,
    dispatch_professional,
    hospitalize,
};

std::string_view to_string(CareAction action);

struct NormalBand {
    double low;
    double high;
};

/// Normal band used for scoring; nullopt for motion and fall_signal, which do not
/// contribute to the score.
std::optional<NormalBand> normal_band(VitalKind kind);

using VitalSnapshot = std::map<VitalKind, double>;

/// Mean over the scored vitals present of clamp(|v - mid| / (2 * halfwidth), 0, 1).
/// A value on the band edge scores 0.5. Throws std::invalid_argument when no scored
/// vital is present.
double risk_score(const VitalSnapshot& latest);

struct RiskThresholds {
    double verify{0.3};
    double professional{0.6};
    double hospital{0.85};
};

/// Throws std::invalid_argument unless 0 <= verify < professional < hospital <= 1.
void check_thresholds(const RiskThresholds& thresholds);

/// Half-open bands with inclusive lower bounds: a score equal to a threshold maps to
/// the more severe action.
CareAction decide_action(double score, const RiskThresholds& thresholds);

/// max(minimum, base * (1 - score)), rounded to the nearest second.
Duration monitoring_interval(double score, Duration base, Duration minimum);

struct RiskAssessment {
    std::string patient_id;
    double score{0.0};
    CareAction action{CareAction::stay_home};
    Duration monitoring_interval{0};
};

RiskAssessment assess(std::string patient_id, const VitalSnapshot& latest,
                      const RiskThresholds& thresholds, Duration base_interval,
                      Duration minimum_interval);

}  // namespace selfserv

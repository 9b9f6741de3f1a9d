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

#include <selfserv/risk.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace selfserv {

std::string_view to_string(CareAction action) {
    switch (action) {
        case CareAction::stay_home: return "stay_home";
        case CareAction::request_verification: return "request_verification";
        case CareAction::dispatch_professional: return "dispatch_professional";
        case CareAction::hospitalize: return "hospitalize";
    }
    return "?";
}

std::optional<NormalBand> normal_band(VitalKind kind) {
    switch (kind) {
        case VitalKind::glucose: return NormalBand{70.0, 180.0};
        case VitalKind::heart_rate: return NormalBand{50.0, 100.0};
        case VitalKind::systolic_bp: return NormalBand{90.0, 140.0};
        case VitalKind::diastolic_bp: return NormalBand{60.0, 90.0};
        case VitalKind::temperature: return NormalBand{36.0, 38.0};
        case VitalKind::motion:
        case VitalKind::fall_signal: return std::nullopt;
    }
    return std::nullopt;
}

double risk_score(const VitalSnapshot& latest) {
    double total = 0.0;
    int scored = 0;
    for (const auto& [kind, value] : latest) {
        auto band = normal_band(kind);
        if (!band) {
            continue;
        }
        if (!std::isfinite(value)) {
            throw std::invalid_argument("risk_score: non-finite " + std::string(to_string(kind)));
        }
        double mid = (band->low + band->high) / 2.0;
        double scale = band->high - band->low;  // twice the half-width
        total += std::clamp(std::abs(value - mid) / scale, 0.0, 1.0);
        ++scored;
    }
    if (scored == 0) {
        throw std::invalid_argument("risk_score: no scored vital present");
    }
    return total / scored;
}

void check_thresholds(const RiskThresholds& t) {
    if (!(0.0 <= t.verify && t.verify < t.professional && t.professional < t.hospital &&
          t.hospital <= 1.0)) {
        throw std::invalid_argument("risk thresholds must satisfy 0 <= t_verify < t_pro < t_hosp <= 1");
    }
}

CareAction decide_action(double score, const RiskThresholds& t) {
    check_thresholds(t);
    if (score < t.verify) {
        return CareAction::stay_home;
    }
    if (score < t.professional) {
        return CareAction::request_verification;
    }
    if (score < t.hospital) {
        return CareAction::dispatch_professional;
    }
    return CareAction::hospitalize;
}

Duration monitoring_interval(double score, Duration base, Duration minimum) {
    if (minimum > base) {
        throw std::invalid_argument("monitoring_interval: minimum exceeds base");
    }
    if (minimum.count() <= 0) {
        throw std::invalid_argument("monitoring_interval: minimum must be positive");
    }
    if (!(score >= 0.0 && score <= 1.0)) {
        throw std::invalid_argument("monitoring_interval: score outside [0, 1]");
    }
    auto scaled = Duration{std::llround(static_cast<double>(base.count()) * (1.0 - score))};
    return std::max(minimum, scaled);
}

RiskAssessment assess(std::string patient_id, const VitalSnapshot& latest,
                      const RiskThresholds& thresholds, Duration base_interval,
                      Duration minimum_interval) {
    RiskAssessment out;
    out.patient_id = std::move(patient_id);
    out.score = risk_score(latest);
    out.action = decide_action(out.score, thresholds);
    out.monitoring_interval = monitoring_interval(out.score, base_interval, minimum_interval);
    return out;
}

}  // namespace selfserv

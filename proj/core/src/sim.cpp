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

#include <selfserv/sim.hpp>
#include <selfserv/text.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cassert>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <thread>

namespace selfserv::sim {

std::string_view to_string(Mode mode) {
    return mode == Mode::traditional ? "traditional" : "soc";
}

std::string_view to_string(Detection d) {
    switch (d) {
        case Detection::undetected: return "undetected";
        case Detection::alarmed: return "alarmed";
        case Detection::verified: return "verified";
        case Detection::treated: return "treated";
        case Detection::expired: return "expired";
        case Detection::dismissed: return "dismissed";
    }
    return "?";
}

std::string_view to_string(SimEventKind kind) {
    switch (kind) {
        case SimEventKind::incident_started: return "incident_started";
        case SimEventKind::false_alarm_raised: return "false_alarm_raised";
        case SimEventKind::alarmed: return "alarmed";
        case SimEventKind::discovered: return "discovered";
        case SimEventKind::queued: return "queued";
        case SimEventKind::dispatched: return "dispatched";
        case SimEventKind::arrived: return "arrived";
        case SimEventKind::verified: return "verified";
        case SimEventKind::escalated: return "escalated";
        case SimEventKind::hospitalized: return "hospitalized";
        case SimEventKind::treated: return "treated";
        case SimEventKind::dismissed: return "dismissed";
        case SimEventKind::expired: return "expired";
    }
    return "?";
}

// Config -----------------------------------------------------------------------

namespace {

void check(bool ok, const char* key, const std::string& what) {
    if (!ok) {
        throw ConfigError(key, what);
    }
}

void check_probability(double p, const char* key) {
    check(p >= 0.0 && p <= 1.0, key, "must be a probability in [0, 1]");
}

void check_positive(double v, const char* key) {
    check(std::isfinite(v) && v > 0.0, key, "must be finite and positive");
}

void check_non_negative(double v, const char* key) {
    check(std::isfinite(v) && v >= 0.0, key, "must be finite and non-negative");
}

}  // namespace

void validate(const ScenarioConfig& c) {
    check_positive(c.width, "width");
    check_positive(c.height, "height");
    check(c.n_patients >= 0, "n_patients", "must be non-negative");
    check(c.n_professionals >= 0, "n_professionals", "must be non-negative");
    check(c.n_verifiers >= 0, "n_verifiers", "must be non-negative");
    check(c.ticks >= 0, "ticks", "must be non-negative");
    check_probability(c.p_incident, "p_incident");
    check_probability(c.p_false_alarm, "p_false_alarm");
    check_probability(c.sensor_sensitivity, "sensor_sensitivity");
    check(c.t_expire > 0, "t_expire", "must be positive");
    check_non_negative(c.c_verifier, "c_verifier");
    check_non_negative(c.c_professional, "c_professional");
    check_non_negative(c.c_hospital, "c_hospital");
    check_positive(c.professional_speed, "professional_speed");
    check_positive(c.verifier_speed, "verifier_speed");
    check_non_negative(c.r_discover, "r_discover");
    check_probability(c.p_discover, "p_discover");
    check(c.t_verify >= 0.0, "t_verify", "must be >= 0");
    check(c.t_pro > c.t_verify, "t_pro", "must exceed t_verify");
    check(c.t_hosp > c.t_pro, "t_hosp", "must exceed t_pro");
    check(c.t_hosp <= 1.0, "t_hosp", "must be <= 1");
}

namespace {

struct ConfigField {
    const char* key;
    std::function<void(ScenarioConfig&, std::string_view)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

template <typename T>
ConfigField real_field(const char* key, T ScenarioConfig::*member) {
    return {key,
            [key, member](ScenarioConfig& c, std::string_view v) {
                auto parsed = text::parse_real(v);
                check(parsed && std::isfinite(*parsed), key,
                      "expected a real number, got '" + std::string(v) + "'");
                c.*member = *parsed;
            },
            [member](const ScenarioConfig& c) { return text::format_real_exact(c.*member); }};
}

template <typename T>
ConfigField int_field(const char* key, T ScenarioConfig::*member) {
    return {key,
            [key, member](ScenarioConfig& c, std::string_view v) {
                auto parsed = text::parse_int(v);
                check(parsed.has_value(), key, "expected an integer, got '" + std::string(v) + "'");
                check(*parsed >= static_cast<std::int64_t>(std::numeric_limits<T>::min()) &&
                          *parsed <= static_cast<std::int64_t>(std::numeric_limits<T>::max()),
                      key, "value out of range");
                c.*member = static_cast<T>(*parsed);
            },
            [member](const ScenarioConfig& c) { return std::to_string(c.*member); }};
}

const std::vector<ConfigField>& config_fields() {
    static const std::vector<ConfigField> fields = [] {
        std::vector<ConfigField> f;
        f.push_back(real_field("width", &ScenarioConfig::width));
        f.push_back(real_field("height", &ScenarioConfig::height));
        f.push_back(int_field("n_patients", &ScenarioConfig::n_patients));
        f.push_back(int_field("n_professionals", &ScenarioConfig::n_professionals));
        f.push_back(int_field("n_verifiers", &ScenarioConfig::n_verifiers));
        f.push_back(int_field("ticks", &ScenarioConfig::ticks));
        f.push_back(real_field("p_incident", &ScenarioConfig::p_incident));
        f.push_back(real_field("p_false_alarm", &ScenarioConfig::p_false_alarm));
        f.push_back(real_field("sensor_sensitivity", &ScenarioConfig::sensor_sensitivity));
        f.push_back(int_field("t_expire", &ScenarioConfig::t_expire));
        f.push_back(real_field("c_verifier", &ScenarioConfig::c_verifier));
        f.push_back(real_field("c_professional", &ScenarioConfig::c_professional));
        f.push_back(real_field("c_hospital", &ScenarioConfig::c_hospital));
        f.push_back(real_field("professional_speed", &ScenarioConfig::professional_speed));
        f.push_back(real_field("verifier_speed", &ScenarioConfig::verifier_speed));
        f.push_back(real_field("r_discover", &ScenarioConfig::r_discover));
        f.push_back(real_field("p_discover", &ScenarioConfig::p_discover));
        f.push_back(real_field("t_verify", &ScenarioConfig::t_verify));
        f.push_back(real_field("t_pro", &ScenarioConfig::t_pro));
        f.push_back(real_field("t_hosp", &ScenarioConfig::t_hosp));
        f.push_back({"mode",
                     [](ScenarioConfig& c, std::string_view v) {
                         if (v == "traditional") {
                             c.mode = Mode::traditional;
                         } else if (v == "soc") {
                             c.mode = Mode::soc;
                         } else {
                             throw ConfigError("mode", "expected traditional or soc, got '" +
                                                           std::string(v) + "'");
                         }
                     },
                     [](const ScenarioConfig& c) { return std::string(to_string(c.mode)); }});
        f.push_back({"seed",
                     [](ScenarioConfig& c, std::string_view v) {
                         std::uint64_t seed{};
                         auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), seed);
                         check(ec == std::errc{} && ptr == v.data() + v.size(), "seed",
                               "expected an unsigned integer, got '" + std::string(v) + "'");
                         c.seed = seed;
                     },
                     [](const ScenarioConfig& c) { return std::to_string(c.seed); }});
        return f;
    }();
    return fields;
}

}  // namespace

ScenarioConfig parse_config(std::string_view source, ScenarioConfig base) {
    auto lines = text::split_lines(source);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto line = lines[i];
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = text::trim(line);
        if (line.empty()) {
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(std::string(line), "line " + std::to_string(i + 1) +
                                                     ": expected 'key = value'");
        }
        auto key = text::trim(line.substr(0, eq));
        auto value = text::trim(line.substr(eq + 1));
        const auto& fields = config_fields();
        auto it = std::find_if(fields.begin(), fields.end(),
                               [&](const ConfigField& f) { return key == f.key; });
        if (it == fields.end()) {
            throw ConfigError(std::string(key), "unknown config key");
        }
        it->set(base, value);
    }
    validate(base);
    return base;
}

std::string format_config(const ScenarioConfig& config) {
    std::string out;
    for (const auto& f : config_fields()) {
        out += f.key;
        out += " = ";
        out += f.get(config);
        out += '\n';
    }
    return out;
}

// World ------------------------------------------------------------------------

double distance(Point a, Point b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

double to_unit_interval(std::uint64_t draw) {
    return static_cast<double>(draw >> 11) * 0x1.0p-53;
}

World::World(const ScenarioConfig& config) : config_(config), rng_(config.seed) {
    validate(config_);
    auto place = [&](Role role, double speed) {
        Actor a;
        a.id = static_cast<ActorId>(actors_.size());
        a.role = role;
        a.position.x = uniform01() * config_.width;
        a.position.y = uniform01() * config_.height;
        a.speed = speed;
        actors_.push_back(a);
    };
    for (int i = 0; i < config_.n_patients; ++i) {
        place(Role::patient, 0.0);
    }
    first_professional_ = actors_.size();
    for (int i = 0; i < config_.n_professionals; ++i) {
        place(Role::professional, config_.professional_speed);
    }
    first_verifier_ = actors_.size();
    for (int i = 0; i < config_.n_verifiers; ++i) {
        place(Role::informal_verifier, config_.verifier_speed);
    }
    Actor hospital;
    hospital.id = static_cast<ActorId>(actors_.size());
    hospital.role = Role::hospital;
    hospital.position = {config_.width / 2.0, config_.height / 2.0};
    actors_.push_back(hospital);
}

std::span<const Actor> World::patients() const {
    return std::span<const Actor>(actors_).subspan(0, first_professional_);
}

std::span<const Actor> World::professionals() const {
    return std::span<const Actor>(actors_).subspan(first_professional_,
                                                   first_verifier_ - first_professional_);
}

std::span<const Actor> World::verifiers() const {
    return std::span<const Actor>(actors_).subspan(first_verifier_,
                                                   actors_.size() - 1 - first_verifier_);
}

double World::uniform01() {
    return to_unit_interval(rng_());
}

void World::emit(SimEventKind kind, IncidentId incident, std::optional<ActorId> actor) {
    events_.push_back({tick_, kind, incident, actor});
}

std::vector<SimEvent> World::step() {
    events_.clear();
    std::vector<IncidentId> new_alarms;
    generate_incidents(new_alarms);
    if (config_.mode == Mode::soc) {
        patrol_discovery();
    }
    dispatch(new_alarms);
    move();
    expire();
    for (std::size_t i = first_professional_; i + 1 < actors_.size(); ++i) {
        if (actors_[i].status != ActorStatus::travelling) {
            continue;
        }
        if (actors_[i].role == Role::professional) {
            ++professional_busy_ticks_;
        } else {
            ++verifier_busy_ticks_;
        }
    }
    ++tick_;
    return std::move(events_);
}

void World::generate_incidents(std::vector<IncidentId>& new_alarms) {
    std::vector<IncidentId> new_true;
    for (std::size_t p = 0; p < first_professional_; ++p) {
        if (uniform01() < config_.p_incident) {
            Incident inc;
            inc.id = static_cast<IncidentId>(incidents_.size());
            inc.patient = static_cast<ActorId>(p);
            inc.start_tick = tick_;
            inc.truth = Truth::true_condition;
            inc.glucose = 40.0 + 25.0 * uniform01();
            incidents_.push_back(inc);
            active_.push_back(inc.id);
            new_true.push_back(inc.id);
            emit(SimEventKind::incident_started, inc.id, inc.patient);
        }
        if (uniform01() < config_.p_false_alarm) {
            Incident inc;
            inc.id = static_cast<IncidentId>(incidents_.size());
            inc.patient = static_cast<ActorId>(p);
            inc.start_tick = tick_;
            inc.truth = Truth::false_alarm;
            inc.state = Detection::alarmed;
            inc.alarm_tick = tick_;
            inc.glucose = 125.0;
            incidents_.push_back(inc);
            active_.push_back(inc.id);
            new_alarms.push_back(inc.id);
            emit(SimEventKind::false_alarm_raised, inc.id, inc.patient);
        }
    }
    detect(new_true, new_alarms);
    std::sort(new_alarms.begin(), new_alarms.end());
}

void World::detect(std::span<const IncidentId> new_true, std::vector<IncidentId>& new_alarms) {
    for (auto id : new_true) {
        if (uniform01() < config_.sensor_sensitivity) {
            auto& inc = incidents_[id];
            inc.state = Detection::alarmed;
            inc.alarm_tick = tick_;
            new_alarms.push_back(id);
            emit(SimEventKind::alarmed, id);
        }
    }
}

void World::patrol_discovery() {
    const auto candidates = active_;
    for (std::size_t v = first_verifier_; v + 1 < actors_.size(); ++v) {
        auto& verifier = actors_[v];
        if (verifier.status != ActorStatus::idle) {
            continue;
        }
        for (auto id : candidates) {
            auto& inc = incidents_[id];
            if (inc.truth != Truth::true_condition || inc.state != Detection::undetected) {
                continue;
            }
            if (distance(verifier.position, patient_of(inc).position) > config_.r_discover) {
                continue;
            }
            if (uniform01() < config_.p_discover) {
                inc.state = Detection::alarmed;
                inc.alarm_tick = tick_;
                inc.discovered_by_patrol = true;
                emit(SimEventKind::discovered, id, verifier.id);
                inc.cost += config_.c_verifier;
                inc.state = Detection::verified;
                inc.verified_tick = tick_;
                emit(SimEventKind::verified, id, verifier.id);
                on_verified(inc);
            }
        }
    }
}

std::optional<ActorId> World::nearest_idle(Role role, Point target) const {
    std::size_t begin = role == Role::professional ? first_professional_ : first_verifier_;
    std::size_t end = role == Role::professional ? first_verifier_ : actors_.size() - 1;
    std::optional<ActorId> best;
    double best_distance = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        const auto& a = actors_[i];
        if (a.status != ActorStatus::idle) {
            continue;
        }
        double d = distance(a.position, target);
        if (!best || d < best_distance) {
            best = a.id;
            best_distance = d;
        }
    }
    return best;
}

void World::send(Actor& actor, Incident& incident) {
    actor.status = ActorStatus::travelling;
    actor.assignment = incident.id;
    actor.assigned_tick = tick_;
    emit(SimEventKind::dispatched, incident.id, actor.id);
}

void World::dispatch(std::span<const IncidentId> new_alarms) {
    for (auto id : new_alarms) {
        auto& inc = incidents_[id];
        if (config_.mode == Mode::soc) {
            if (auto v = nearest_idle(Role::informal_verifier, patient_of(inc).position)) {
                send(actors_[*v], inc);
                continue;
            }
        }
        professional_queue_.push_back(id);
        emit(SimEventKind::queued, id);
    }
    assign_professionals();
}

void World::assign_professionals() {
    while (!professional_queue_.empty()) {
        auto& inc = incidents_[professional_queue_.front()];
        if (inc.terminated()) {
            professional_queue_.pop_front();
            continue;
        }
        auto pro = nearest_idle(Role::professional, patient_of(inc).position);
        if (!pro) {
            return;
        }
        professional_queue_.pop_front();
        send(actors_[*pro], inc);
    }
}

void World::move() {
    for (std::size_t i = first_professional_; i + 1 < actors_.size(); ++i) {
        auto& actor = actors_[i];
        if (actor.status == ActorStatus::travelling) {
            // Actors dispatched this tick start moving on the next one.
            if (actor.assigned_tick >= tick_) {
                continue;
            }
            Point target = patient_of(incidents_[*actor.assignment]).position;
            double d = distance(actor.position, target);
            if (d <= actor.speed) {
                actor.position = target;
                arrive(actor);
            } else {
                actor.position.x += (target.x - actor.position.x) / d * actor.speed;
                actor.position.y += (target.y - actor.position.y) / d * actor.speed;
            }
        } else if (config_.mode == Mode::soc && actor.role == Role::informal_verifier &&
                   actor.status == ActorStatus::idle) {
            double angle = 2.0 * std::numbers::pi * uniform01();
            actor.position.x = std::clamp(actor.position.x + actor.speed * std::cos(angle), 0.0,
                                          config_.width);
            actor.position.y = std::clamp(actor.position.y + actor.speed * std::sin(angle), 0.0,
                                          config_.height);
        }
    }
    const auto in_transport = active_;
    for (auto id : in_transport) {
        auto& inc = incidents_[id];
        if (inc.hospital_arrival && *inc.hospital_arrival <= tick_) {
            finish(inc, Detection::treated);
        }
    }
}

void World::arrive(Actor& actor) {
    auto& inc = incidents_[*actor.assignment];
    actor.status = ActorStatus::idle;
    actor.assignment.reset();
    emit(SimEventKind::arrived, inc.id, actor.id);
    assert(!inc.terminated());

    if (actor.role == Role::professional) {
        inc.cost += config_.c_professional;
        if (inc.truth == Truth::true_condition) {
            finish(inc, Detection::treated);
        } else {
            ++false_dispatches_;
            finish(inc, Detection::dismissed);
        }
        return;
    }

    inc.cost += config_.c_verifier;
    inc.state = Detection::verified;
    inc.verified_tick = tick_;
    emit(SimEventKind::verified, inc.id, actor.id);
    if (inc.truth == Truth::false_alarm) {
        finish(inc, Detection::dismissed);
        return;
    }
    on_verified(inc);
}

void World::on_verified(Incident& inc) {
    double score = risk_score({{VitalKind::glucose, inc.glucose}});
    switch (decide_action(score, config_.thresholds())) {
        case CareAction::stay_home:
        case CareAction::request_verification:
            // Mild enough for the informal carer on site.
            finish(inc, Detection::treated);
            break;
        case CareAction::dispatch_professional:
            professional_queue_.push_back(inc.id);
            emit(SimEventKind::escalated, inc.id);
            break;
        case CareAction::hospitalize: {
            inc.cost += config_.c_hospital;
            double d = distance(patient_of(inc).position, hospital().position);
            auto travel = std::max<Tick>(1, static_cast<Tick>(std::ceil(d / config_.professional_speed)));
            inc.hospital_arrival = tick_ + travel;
            emit(SimEventKind::hospitalized, inc.id);
            break;
        }
    }
}

void World::expire() {
    const auto snapshot = active_;
    for (auto id : snapshot) {
        auto& inc = incidents_[id];
        if (inc.truth != Truth::true_condition || inc.hospital_arrival ||
            tick_ - inc.start_tick < config_.t_expire) {
            continue;
        }
        for (std::size_t i = first_professional_; i + 1 < actors_.size(); ++i) {
            auto& actor = actors_[i];
            if (actor.assignment == id) {
                actor.status = ActorStatus::idle;
                actor.assignment.reset();
            }
        }
        finish(inc, Detection::expired);
    }
}

void World::finish(Incident& inc, Detection outcome) {
    inc.state = outcome;
    inc.end_tick = tick_;
    active_.erase(std::find(active_.begin(), active_.end(), inc.id));
    SimEventKind kind = outcome == Detection::treated     ? SimEventKind::treated
                        : outcome == Detection::dismissed ? SimEventKind::dismissed
                                                          : SimEventKind::expired;
    emit(kind, inc.id);
}

MetricsReport World::report() const {
    MetricsReport r;
    r.mode = config_.mode;
    r.seed = config_.seed;
    for (const auto& inc : incidents_) {
        if (inc.cost > 0.0) {
            r.per_intervention_costs.push_back(inc.cost);
        }
        if (inc.truth == Truth::true_condition) {
            ++r.true_incidents;
            if (inc.state == Detection::treated) {
                ++r.treated_cases;
                r.total_servicing_time += static_cast<double>(*inc.end_tick - *inc.alarm_tick);
            } else if (inc.state == Detection::expired) {
                ++r.expired_cases;
            } else {
                ++r.pending_cases;
                continue;
            }
            // Sensitivity scores detection (sensor or patrol), not service capacity.
            if (inc.alarm_tick) {
                ++r.tp;
            } else {
                ++r.fn;
            }
        } else {
            ++r.false_alarms;
            if (inc.state == Detection::dismissed) {
                ++r.dismissed_cases;
            } else {
                ++r.pending_cases;
            }
        }
    }
    for (double c : r.per_intervention_costs) {
        r.total_social_cost += c;
    }
    r.false_dispatches = false_dispatches_;
    r.fp = r.dismissed_cases;
    if (r.tp + r.fn > 0) {
        r.effective_sensitivity = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
    }
    if (r.treated_cases > 0) {
        r.mean_servicing_time = r.total_servicing_time / static_cast<double>(r.treated_cases);
    }
    auto utilization = [&](std::int64_t busy, int n) {
        return (n > 0 && tick_ > 0) ? static_cast<double>(busy) / (static_cast<double>(n) *
                                                                   static_cast<double>(tick_))
                                    : 0.0;
    };
    r.professional_utilization = utilization(professional_busy_ticks_, config_.n_professionals);
    r.verifier_utilization = utilization(verifier_busy_ticks_, config_.n_verifiers);
    return r;
}

World init_world(const ScenarioConfig& config) {
    return World(config);
}

MetricsReport run(const ScenarioConfig& config) {
    World world(config);
    for (Tick t = 0; t < config.ticks; ++t) {
        world.step();
    }
    return world.report();
}

// Reports ----------------------------------------------------------------------

std::string_view metrics_csv_header() {
    return "mode,seed,total_social_cost,treated_cases,expired_cases,false_dispatches,"
           "mean_servicing_time,tp,fp,fn,effective_sensitivity,professional_utilization,"
           "verifier_utilization";
}

std::vector<std::string_view> ComparisonTable::metric_names() {
    return {"total_social_cost",     "treated_cases",        "expired_cases",
            "false_dispatches",      "mean_servicing_time",  "tp",
            "fp",                    "fn",                   "effective_sensitivity",
            "professional_utilization", "verifier_utilization"};
}

std::vector<double> ComparisonTable::metric_values(const MetricsReport& r) {
    return {r.total_social_cost,
            static_cast<double>(r.treated_cases),
            static_cast<double>(r.expired_cases),
            static_cast<double>(r.false_dispatches),
            r.mean_servicing_time,
            static_cast<double>(r.tp),
            static_cast<double>(r.fp),
            static_cast<double>(r.fn),
            r.effective_sensitivity,
            r.professional_utilization,
            r.verifier_utilization};
}

std::string format_metrics_line(const MetricsReport& r) {
    std::string out(to_string(r.mode));
    out += ',';
    out += std::to_string(r.seed);
    out += ',' + text::format_real(r.total_social_cost);
    out += ',' + std::to_string(r.treated_cases);
    out += ',' + std::to_string(r.expired_cases);
    out += ',' + std::to_string(r.false_dispatches);
    out += ',' + text::format_real(r.mean_servicing_time);
    out += ',' + std::to_string(r.tp);
    out += ',' + std::to_string(r.fp);
    out += ',' + std::to_string(r.fn);
    out += ',' + text::format_real(r.effective_sensitivity);
    out += ',' + text::format_real(r.professional_utilization);
    out += ',' + text::format_real(r.verifier_utilization);
    return out;
}

SummaryStats summarize(std::span<const double> values) {
    SummaryStats s;
    if (values.empty()) {
        return s;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) {
            sq += (v - s.mean) * (v - s.mean);
        }
        s.sd = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return s;
}

std::vector<SummaryStats> ComparisonTable::summary(Mode mode) const {
    const auto& runs = mode == Mode::traditional ? traditional : soc;
    std::vector<SummaryStats> out;
    for (std::size_t m = 0; m < metric_names().size(); ++m) {
        std::vector<double> column;
        for (const auto& r : runs) {
            column.push_back(metric_values(r)[m]);
        }
        out.push_back(summarize(column));
    }
    return out;
}

std::vector<SummaryStats> ComparisonTable::paired_difference() const {
    std::vector<SummaryStats> out;
    for (std::size_t m = 0; m < metric_names().size(); ++m) {
        std::vector<double> diffs;
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            diffs.push_back(metric_values(soc[i])[m] - metric_values(traditional[i])[m]);
        }
        auto s = summarize(diffs);
        s.sd /= std::sqrt(static_cast<double>(diffs.size()));
        out.push_back(s);
    }
    return out;
}

ComparisonTable compare(const ScenarioConfig& base, std::span<const std::uint64_t> seeds,
                        unsigned threads) {
    if (seeds.size() < 2) {
        throw std::invalid_argument("compare needs at least two seeds");
    }
    validate(base);
    ComparisonTable table;
    table.seeds.assign(seeds.begin(), seeds.end());
    table.traditional.resize(seeds.size());
    table.soc.resize(seeds.size());

    const std::size_t jobs = seeds.size() * 2;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j = next++; j < jobs; j = next++) {
            ScenarioConfig cfg = base;
            cfg.seed = seeds[j / 2];
            cfg.mode = (j % 2 == 0) ? Mode::traditional : Mode::soc;
            auto& slot = (j % 2 == 0) ? table.traditional[j / 2] : table.soc[j / 2];
            slot = run(cfg);
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    return table;
}

std::string format_comparison(const ComparisonTable& table) {
    std::string out(metrics_csv_header());
    out += '\n';
    for (const auto* runs : {&table.traditional, &table.soc}) {
        for (const auto& r : *runs) {
            out += format_metrics_line(r);
            out += '\n';
        }
    }
    auto summary_rows = [&](std::string_view label, const std::vector<SummaryStats>& stats,
                            std::string_view spread) {
        std::string mean_row = std::string(label) + ",mean";
        std::string spread_row = std::string(label) + "," + std::string(spread);
        for (const auto& s : stats) {
            mean_row += ',' + text::format_real(s.mean);
            spread_row += ',' + text::format_real(s.sd);
        }
        out += mean_row + '\n' + spread_row + '\n';
    };
    summary_rows("traditional", table.summary(Mode::traditional), "sd");
    summary_rows("soc", table.summary(Mode::soc), "sd");
    summary_rows("paired_diff", table.paired_difference(), "se");
    return out;
}

}  // namespace selfserv::sim

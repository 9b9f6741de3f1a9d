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

#include <selfserv/risk.hpp>

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

/**
 * Seeded agent-based simulation of a care organization responding to patient
 * alarms, in two modes:
 *  - traditional: every alarm is served by the nearest idle professional;
 *  - soc: a cloud of informal verifiers checks alarms first, dismissing false ones
 *    cheaply and escalating true ones according to the patient's risk score.
 *
 * One tick is one minute. Each step runs, in order: incident generation,
 * detection, patrol discovery (soc only), dispatch, movement, expiry, metrics.
 * All randomness comes from one std::mt19937_64 seeded with the config seed;
 * see docs/simulation.md for the exact draw order.
 */
namespace selfserv::sim {

using Tick = std::int64_t;
using ActorId = std::uint32_t;
using IncidentId = std::uint32_t;

enum class Mode : std::uint8_t { traditional, soc };
std::string_view to_string(Mode mode);

struct ScenarioConfig {
    double width{100.0};
    double height{100.0};
    int n_patients{100};
    int n_professionals{5};
    int n_verifiers{10};
    Tick ticks{10000};
    double p_incident{0.0005};
    double p_false_alarm{0.002};
    double sensor_sensitivity{0.85};
    Tick t_expire{240};
    double c_verifier{1.0};
    double c_professional{10.0};
    double c_hospital{50.0};
    double professional_speed{2.0};
    double verifier_speed{2.0};
    double r_discover{5.0};
    double p_discover{0.3};
    double t_verify{0.3};
    double t_pro{0.6};
    double t_hosp{0.85};
    Mode mode{Mode::traditional};
    std::uint64_t seed{1};

    RiskThresholds thresholds() const { return {t_verify, t_pro, t_hosp}; }
    bool operator==(const ScenarioConfig&) const = default;
};

/// Error naming the offending config key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

void validate(const ScenarioConfig& config);

/// `key = value` lines, '#' comments; keys are the ScenarioConfig field names.
/// Unspecified keys keep their defaults. Throws ConfigError.
ScenarioConfig parse_config(std::string_view text, ScenarioConfig base = {});
std::string format_config(const ScenarioConfig& config);

enum class Role : std::uint8_t { patient, informal_verifier, professional, hospital };
enum class ActorStatus : std::uint8_t { idle, travelling, busy };

struct Point {
    double x{0.0};
    double y{0.0};
    bool operator==(const Point&) const = default;
};

double distance(Point a, Point b);

struct Actor {
    ActorId id{0};
    Role role{Role::patient};
    Point position;
    double speed{0.0};
    ActorStatus status{ActorStatus::idle};
    std::optional<IncidentId> assignment;
    Tick assigned_tick{0};
};

enum class Truth : std::uint8_t { true_condition, false_alarm };
enum class Detection : std::uint8_t { undetected, alarmed, verified, treated, expired, dismissed };
std::string_view to_string(Detection d);

struct Incident {
    IncidentId id{0};
    ActorId patient{0};
    Tick start_tick{0};
    Truth truth{Truth::true_condition};
    Detection state{Detection::undetected};
    std::optional<Tick> alarm_tick;
    std::optional<Tick> verified_tick;
    std::optional<Tick> end_tick;
    double glucose{0.0};  // simulated reading driving the risk score
    double cost{0.0};     // itemized intervention cost accrued so far
    bool discovered_by_patrol{false};
    std::optional<Tick> hospital_arrival;

    bool terminated() const {
        return state == Detection::treated || state == Detection::expired ||
               state == Detection::dismissed;
    }
};

enum class SimEventKind : std::uint8_t {
    incident_started,
    false_alarm_raised,
    alarmed,
    discovered,
    queued,
    dispatched,
    arrived,
    verified,
    escalated,
    hospitalized,
    treated,
    dismissed,
    expired,
};
std::string_view to_string(SimEventKind kind);

struct SimEvent {
    Tick tick{0};
    SimEventKind kind{SimEventKind::incident_started};
    IncidentId incident{0};
    std::optional<ActorId> actor;
    bool operator==(const SimEvent&) const = default;
};

struct MetricsReport {
    Mode mode{Mode::traditional};
    std::uint64_t seed{0};
    std::vector<double> per_intervention_costs;
    double total_social_cost{0.0};
    std::int64_t treated_cases{0};
    std::int64_t expired_cases{0};
    std::int64_t dismissed_cases{0};
    std::int64_t pending_cases{0};
    std::int64_t false_dispatches{0};
    std::int64_t true_incidents{0};
    std::int64_t false_alarms{0};
    double mean_servicing_time{0.0};
    double total_servicing_time{0.0};
    // Over ended true conditions: tp were detected (sensor alarm or patrol), fn never
    // were. fp counts dismissed false alarms.
    std::int64_t tp{0};
    std::int64_t fp{0};
    std::int64_t fn{0};
    double effective_sensitivity{0.0};  // tp / (tp + fn), 0 when nothing ended
    double professional_utilization{0.0};
    double verifier_utilization{0.0};

    bool operator==(const MetricsReport&) const = default;
};

std::string_view metrics_csv_header();
std::string format_metrics_line(const MetricsReport& report);

/**
 * Simulation state. Actor ids are assigned patients first, then professionals,
 * verifiers and finally the hospital, which sits at the plane center.
 */
class World {
public:
    /// Validates the config, then places actors uniformly at random.
    explicit World(const ScenarioConfig& config);

    const ScenarioConfig& config() const noexcept { return config_; }
    Tick tick() const noexcept { return tick_; }
    const std::vector<Actor>& actors() const noexcept { return actors_; }
    const std::vector<Incident>& incidents() const noexcept { return incidents_; }
    const Actor& hospital() const { return actors_.back(); }
    std::span<const Actor> patients() const;
    std::span<const Actor> professionals() const;
    std::span<const Actor> verifiers() const;

    /// Advances one tick and returns what happened during it.
    std::vector<SimEvent> step();

    /// Metrics over everything simulated so far.
    MetricsReport report() const;

private:
    double uniform01();

    void generate_incidents(std::vector<IncidentId>& new_alarms);
    void detect(std::span<const IncidentId> new_true, std::vector<IncidentId>& new_alarms);
    void patrol_discovery();
    void dispatch(std::span<const IncidentId> new_alarms);
    void move();
    void expire();

    void assign_professionals();
    std::optional<ActorId> nearest_idle(Role role, Point target) const;
    void send(Actor& actor, Incident& incident);
    void arrive(Actor& actor);
    void on_verified(Incident& incident);
    void finish(Incident& incident, Detection outcome);
    void emit(SimEventKind kind, IncidentId incident, std::optional<ActorId> actor = std::nullopt);
    Actor& patient_of(const Incident& incident) { return actors_[incident.patient]; }

    ScenarioConfig config_;
    std::mt19937_64 rng_;
    Tick tick_{0};
    std::vector<Actor> actors_;
    std::size_t first_professional_{0};
    std::size_t first_verifier_{0};
    std::vector<Incident> incidents_;
    std::vector<IncidentId> active_;
    std::deque<IncidentId> professional_queue_;
    std::int64_t professional_busy_ticks_{0};
    std::int64_t verifier_busy_ticks_{0};
    std::int64_t false_dispatches_{0};
    std::vector<SimEvent> events_;
};

/// Uniform [0, 1) from one 64-bit draw: top 53 bits scaled by 2^-53.
double to_unit_interval(std::uint64_t draw);

World init_world(const ScenarioConfig& config);

/// init_world followed by config.ticks steps.
MetricsReport run(const ScenarioConfig& config);

struct SummaryStats {
    double mean{0.0};
    double sd{0.0};  // sample standard deviation
};

SummaryStats summarize(std::span<const double> values);

struct ComparisonTable {
    std::vector<std::uint64_t> seeds;
    std::vector<MetricsReport> traditional;  // one per seed, in seed order
    std::vector<MetricsReport> soc;

    /// Column order of metrics_csv_header() after mode and seed.
    static std::vector<std::string_view> metric_names();
    static std::vector<double> metric_values(const MetricsReport& report);

    std::vector<SummaryStats> summary(Mode mode) const;
    /// Per-seed soc - traditional differences: mean and standard error.
    std::vector<SummaryStats> paired_difference() const;
};

/// Runs both modes for every seed. Runs are independent and may execute on up to
/// `threads` worker threads; results are ordered by seed regardless. Throws
/// std::invalid_argument for fewer than two seeds.
ComparisonTable compare(const ScenarioConfig& base, std::span<const std::uint64_t> seeds,
                        unsigned threads = 1);

/// Per-run rows (traditional then soc, seeds ascending), then summary rows
/// `traditional,mean` / `traditional,sd` / `soc,mean` / `soc,sd` and
/// `paired_diff,mean` / `paired_diff,se`.
std::string format_comparison(const ComparisonTable& table);

}  // namespace selfserv::sim

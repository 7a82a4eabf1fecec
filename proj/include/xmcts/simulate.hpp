#pragma once

// Closed-loop simulation: plan each epoch, auto-accept the recommendation,
// and collect tree dumps plus service metrics.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "service.hpp"

namespace xmcts {

struct SimulationOptions {
    int epochs = 5;
    std::optional<std::uint64_t> seed; // overrides the scenario seed
    SearchParams search;
};

struct EpochRecord {
    long epoch = 0;
    int request_id = 0;
    bool infeasible = false;
    std::optional<Action> applied;
    std::vector<ConstraintViolation> violations_after; // audit of the post-action state
};

struct SimulationMetrics {
    long epochs = 0;
    long infeasible_epochs = 0;
    long requests_offered = 0;
    long requests_assigned = 0;
    long requests_completed = 0;
    double service_rate = 0.0; // completed / offered
    double mean_pickup_deviation = 0.0; // actual - requested, minutes
    double mean_dropoff_deviation = 0.0;
    long hard_violations = 0;
    Minutes end_time = 0;
};

struct SimulationResult {
    std::vector<EpochRecord> epochs;
    std::vector<nlohmann::json> dumps; // one per planned epoch (empty object when infeasible)
    SimulationMetrics metrics;
    State final_state;
};

inline std::string format_number(double x) {
    if (x == static_cast<double>(static_cast<long long>(x)) && std::abs(x) < 1e15)
        return std::to_string(static_cast<long long>(x));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    std::string s = buf;
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

inline std::string metrics_text(const SimulationMetrics& m) {
    std::string out;
    auto line = [&](const char* k, double v) { out += std::string(k) + "=" + format_number(v) + "\n"; };
    line("epochs", double(m.epochs));
    line("infeasible_epochs", double(m.infeasible_epochs));
    line("requests_offered", double(m.requests_offered));
    line("requests_assigned", double(m.requests_assigned));
    line("requests_completed", double(m.requests_completed));
    line("service_rate", m.service_rate);
    line("mean_pickup_deviation", m.mean_pickup_deviation);
    line("mean_dropoff_deviation", m.mean_dropoff_deviation);
    line("hard_violations", double(m.hard_violations));
    line("end_time", double(m.end_time));
    return out;
}

// Finishes every route so metrics cover realized times only.
inline State drain_routes(const State& s, const TransitModel& model) {
    Minutes until = s.time;
    for (const auto& v : s.vehicles)
        if (!v.route.empty()) until = std::max(until, v.route.back().eta);
    return advance(s, until, model);
}

inline SimulationResult simulate(Scenario scenario, const SimulationOptions& options, std::ostream* log = nullptr) {
    if (options.epochs < 0) throw InvalidInput("epochs must be non-negative");
    if (options.seed) scenario.seed = *options.seed;
    SessionOptions sopts;
    sopts.search = options.search;
    Session session("sim", std::move(scenario), sopts);
    const TransitModel& model = session.scenario().model;

    SimulationResult out;
    std::vector<int> offered;
    for (int e = 0; e < options.epochs && session.status() == SessionStatus::awaiting_plan; ++e) {
        EpochRecord rec;
        rec.epoch = session.epoch();
        rec.request_id = *session.state().outstanding;
        offered.push_back(rec.request_id);
        nlohmann::json planned = session.plan();
        rec.infeasible = planned["infeasible"].get<bool>();
        if (rec.infeasible) {
            ++out.metrics.infeasible_epochs;
            if (log)
                *log << "epoch=" << rec.epoch << " request=" << rec.request_id
                     << " infeasible: no vehicle satisfies the hard constraints, request rejected\n";
            out.dumps.push_back(nlohmann::json::object());
        } else {
            rec.applied = *session.recommendation();
            out.dumps.push_back(session.tree_json());
            State after = apply_action(session.state(), *rec.applied, model);
            rec.violations_after = audit_state(after, model);
            out.metrics.hard_violations += static_cast<long>(rec.violations_after.size());
        }
        session.apply();
        out.epochs.push_back(std::move(rec));
    }

    State final_state = drain_routes(session.state(), model);
    SimulationMetrics& m = out.metrics;
    m.epochs = static_cast<long>(out.epochs.size());
    m.requests_offered = static_cast<long>(offered.size());
    double pick_sum = 0.0;
    double drop_sum = 0.0;
    long picks = 0;
    long drops = 0;
    for (int id : offered) {
        const Request& r = final_state.request(id);
        if (r.vehicle) ++m.requests_assigned;
        if (r.status == RequestStatus::dropped_off) ++m.requests_completed;
        if (r.actual_pickup) {
            pick_sum += double(*r.actual_pickup - r.pickup_time);
            ++picks;
        }
        if (r.actual_dropoff) {
            drop_sum += double(*r.actual_dropoff - r.dropoff_time);
            ++drops;
        }
    }
    m.service_rate = m.requests_offered > 0 ? double(m.requests_completed) / double(m.requests_offered) : 0.0;
    m.mean_pickup_deviation = picks > 0 ? pick_sum / double(picks) : 0.0;
    m.mean_dropoff_deviation = drops > 0 ? drop_sum / double(drops) : 0.0;
    m.end_time = final_state.time;
    out.final_state = std::move(final_state);
    return out;
}

inline void write_simulation(const SimulationResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < r.dumps.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "epoch_%03zu.json", i);
        if (r.epochs[i].infeasible) continue;
        std::ofstream(dir / name, std::ios::binary) << r.dumps[i].dump(2) << "\n";
    }
    std::ofstream(dir / "metrics.txt", std::ios::binary) << metrics_text(r.metrics);
}

} // namespace xmcts

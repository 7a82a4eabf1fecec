#pragma once

// Scenario documents (JSON) and the per-epoch request feed built from them.

#include <cstdint>
#include <deque>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "model.hpp"

namespace xmcts {

struct Scenario {
    TransitModel model;
    std::vector<Vehicle> vehicles;
    std::vector<Request> requests; // scripted arrivals, ordered by t_r then id
    std::uint64_t seed = 0;
};

class SchemaError : public InvalidInput {
public:
    SchemaError(std::string path, const std::string& message)
        : InvalidInput(path + ": " + message), path_(std::move(path)) {}

    const std::string& path() const { return path_; }

private:
    std::string path_;
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) throw SchemaError(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(path.empty() ? key : path + "." + key, "missing required field");
    return *it;
}

template <typename T>
T number_at(const json& obj, const std::string& key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_number()) throw SchemaError(path.empty() ? key : path + "." + key, "expected a number");
    if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw SchemaError(path.empty() ? key : path + "." + key, "expected an integer");
    }
    return v.get<T>();
}

template <typename T>
void optional_number(const json& obj, const std::string& key, const std::string& path, T& out) {
    if (obj.contains(key)) out = number_at<T>(obj, key, path);
}

} // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& doc) {
    using detail::number_at;
    using detail::require;
    if (!doc.is_object()) throw SchemaError("$", "scenario must be a JSON object");

    Scenario sc;
    ModelConfig& cfg = sc.model.config;
    if (doc.contains("config")) {
        const auto& c = doc["config"];
        if (!c.is_object()) throw SchemaError("config", "expected an object");
        detail::optional_number(c, "T_max", "config", cfg.max_en_route);
        detail::optional_number(c, "t_a", "config", cfg.allowed_window);
        detail::optional_number(c, "gamma1", "config", cfg.gamma1);
        detail::optional_number(c, "gamma2", "config", cfg.gamma2);
        detail::optional_number(c, "gamma3", "config", cfg.gamma3);
        detail::optional_number(c, "discount", "config", cfg.discount);
        detail::optional_number(c, "arrival_rate", "config", cfg.arrival_rate);
        detail::optional_number(c, "horizon", "config", cfg.horizon);
        detail::optional_number(c, "minutes_per_unit", "config", cfg.minutes_per_unit);
        detail::optional_number(c, "v_rt", "config", cfg.reasonable_travel);
        detail::optional_number(c, "theta_d", "config", cfg.reasonable_stops);
        detail::optional_number(c, "start_of_day", "config", cfg.start_of_day);
    }

    const auto& locs = require(doc, "locations", "");
    if (!locs.is_array()) throw SchemaError("locations", "expected an array");
    std::vector<Location> locations;
    for (std::size_t i = 0; i < locs.size(); ++i) {
        std::string p = "locations[" + std::to_string(i) + "]";
        Location l;
        l.id = number_at<int>(locs[i], "id", p);
        l.display_x = locs[i].contains("display_x") ? number_at<double>(locs[i], "display_x", p) : 0.0;
        l.display_y = locs[i].contains("display_y") ? number_at<double>(locs[i], "display_y", p) : 0.0;
        for (const auto& prev : locations)
            if (prev.id == l.id) throw SchemaError(p + ".id", "duplicate location id " + std::to_string(l.id));
        locations.push_back(l);
    }
    if (locations.empty()) throw SchemaError("locations", "at least one location is required");

    std::vector<std::vector<Minutes>> matrix;
    if (doc.contains("travel_matrix") && !doc["travel_matrix"].is_null()) {
        try {
            matrix = doc["travel_matrix"].get<std::vector<std::vector<Minutes>>>();
        } catch (const nlohmann::json::exception&) {
            throw SchemaError("travel_matrix", "expected an array of integer arrays");
        }
    }
    try {
        sc.model.network = Network(std::move(locations), std::move(matrix));
    } catch (const InvalidInput& e) {
        throw SchemaError("travel_matrix", e.what());
    }

    const auto& vs = require(doc, "vehicles", "");
    if (!vs.is_array()) throw SchemaError("vehicles", "expected an array");
    if (vs.empty()) throw SchemaError("vehicles", "at least one vehicle is required");
    for (std::size_t i = 0; i < vs.size(); ++i) {
        std::string p = "vehicles[" + std::to_string(i) + "]";
        Vehicle v;
        v.id = number_at<int>(vs[i], "id", p);
        v.capacity = number_at<int>(vs[i], "capacity", p);
        v.location = number_at<int>(vs[i], "location", p);
        if (v.capacity < 0) throw SchemaError(p + ".capacity", "must be non-negative");
        if (!sc.model.network.contains(v.location)) throw SchemaError(p + ".location", "unknown location id");
        if (vs[i].contains("fuel")) {
            v.fuel = number_at<double>(vs[i], "fuel", p);
            cfg.models_fuel = true;
        }
        for (const auto& prev : sc.vehicles)
            if (prev.id == v.id) throw SchemaError(p + ".id", "duplicate vehicle id");
        sc.vehicles.push_back(v);
    }
    std::sort(sc.vehicles.begin(), sc.vehicles.end(), [](const Vehicle& a, const Vehicle& b) { return a.id < b.id; });

    const auto& rs = require(doc, "requests", "");
    if (!rs.is_array()) throw SchemaError("requests", "expected an array");
    for (std::size_t i = 0; i < rs.size(); ++i) {
        std::string p = "requests[" + std::to_string(i) + "]";
        Request r;
        r.id = number_at<int>(rs[i], "id", p);
        r.requested_at = number_at<Minutes>(rs[i], "t_r", p);
        r.pickup_time = number_at<Minutes>(rs[i], "t_p", p);
        r.dropoff_time = number_at<Minutes>(rs[i], "t_d", p);
        r.pickup_location = number_at<int>(rs[i], "l_p", p);
        r.dropoff_location = number_at<int>(rs[i], "l_d", p);
        if (!(r.requested_at <= r.pickup_time && r.pickup_time <= r.dropoff_time))
            throw SchemaError(p, "requires t_r <= t_p <= t_d");
        if (r.requested_at < 0) throw SchemaError(p + ".t_r", "must be non-negative");
        if (!sc.model.network.contains(r.pickup_location)) throw SchemaError(p + ".l_p", "unknown location id");
        if (!sc.model.network.contains(r.dropoff_location)) throw SchemaError(p + ".l_d", "unknown location id");
        for (const auto& prev : sc.requests)
            if (prev.id == r.id) throw SchemaError(p + ".id", "duplicate request id");
        sc.requests.push_back(r);
    }
    std::stable_sort(sc.requests.begin(), sc.requests.end(), [](const Request& a, const Request& b) {
        return a.requested_at != b.requested_at ? a.requested_at < b.requested_at : a.id < b.id;
    });

    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_integer()) throw SchemaError("seed", "expected an integer");
        sc.seed = doc["seed"].get<std::uint64_t>();
    }
    try {
        cfg.validate();
    } catch (const InvalidInput& e) {
        throw SchemaError("config", e.what());
    }
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open scenario file " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("$", std::string("malformed JSON: ") + e.what());
    }
    return scenario_from_json(doc);
}

// Feeds decision epochs: scripted requests first (in arrival order), then
// sampled arrivals. Each epoch carries exactly one outstanding request.
class RequestFeed {
public:
    explicit RequestFeed(const Scenario& sc) : model_(&sc.model), pending_(sc.requests.begin(), sc.requests.end()) {}

    State initial_state(const Scenario& sc, std::uint64_t seed) {
        State s;
        s.vehicles = sc.vehicles;
        for (const auto& r : sc.requests) s.next_request_id = std::max(s.next_request_id, r.id + 1);
        s.time = 0;
        return next_epoch(s, seed);
    }

    // Resolve the previous epoch's request before calling.
    State next_epoch(const State& state, std::uint64_t seed) {
        if (state.outstanding) throw InvalidState("previous request is still outstanding");
        if (state.terminal) return state;
        if (pending_.empty()) return transition(state, seed, *model_);
        Request r = pending_.front();
        pending_.pop_front();
        if (r.requested_at > model_->config.horizon) {
            State next = advance(state, std::max(state.time, model_->config.horizon), *model_);
            next.terminal = true;
            pending_.clear();
            return next;
        }
        State next = advance(state, std::max(state.time, r.requested_at), *model_);
        next.add_request(r);
        next.outstanding = r.id;
        return next;
    }

    std::size_t pending() const { return pending_.size(); }

private:
    const TransitModel* model_;
    std::deque<Request> pending_;
};

} // namespace xmcts

#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "xmcts/model.hpp"
#include "xmcts/scenario.hpp"

#ifndef XMCTS_TEST_DATA
#define XMCTS_TEST_DATA "tests/data"
#endif
#ifndef XMCTS_SOURCE_DIR
#define XMCTS_SOURCE_DIR "."
#endif

namespace testing_support {

using namespace xmcts;

inline std::string data_path(const std::string& name) { return std::string(XMCTS_TEST_DATA) + "/" + name; }
inline std::string source_path(const std::string& rel) { return std::string(XMCTS_SOURCE_DIR) + "/" + rel; }

// Locations 0..n-1 at the given grid coordinates.
inline TransitModel grid_model(const std::vector<std::pair<double, double>>& coords, ModelConfig cfg = {}) {
    std::vector<Location> locs;
    for (std::size_t i = 0; i < coords.size(); ++i)
        locs.push_back({static_cast<int>(i), coords[i].first, coords[i].second});
    return {cfg, Network(std::move(locs))};
}

// A 5x5 grid of locations, id = 5*y + x.
inline TransitModel square_grid(ModelConfig cfg = {}) {
    std::vector<std::pair<double, double>> c;
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) c.emplace_back(x * 3.0, y * 3.0);
    return grid_model(c, cfg);
}

inline Vehicle vehicle(int id, int capacity, int location) {
    Vehicle v;
    v.id = id;
    v.capacity = capacity;
    v.location = location;
    return v;
}

inline Request request(int id, Minutes t_r, Minutes t_p, Minutes t_d, int l_p, int l_d) {
    Request r;
    r.id = id;
    r.requested_at = t_r;
    r.pickup_time = t_p;
    r.dropoff_time = t_d;
    r.pickup_location = l_p;
    r.dropoff_location = l_d;
    return r;
}

inline State state_with(std::vector<Vehicle> vehicles, Minutes time = 0) {
    State s;
    s.time = time;
    s.vehicles = std::move(vehicles);
    return s;
}

inline State with_outstanding(State s, Request r) {
    int id = r.id;
    s.add_request(std::move(r));
    s.outstanding = id;
    return s;
}

// Plays `epochs` random decision epochs (sampled arrivals, uniformly random
// feasible assignments) from an empty fleet.
inline State random_state(std::mt19937_64& rng, const TransitModel& model, int vehicles, int epochs) {
    std::uniform_int_distribution<int> cap(1, 4);
    std::uniform_int_distribution<std::size_t> loc(0, model.network.locations().size() - 1);
    std::vector<Vehicle> vs;
    for (int i = 1; i <= vehicles; ++i) vs.push_back(vehicle(i, cap(rng), model.network.locations()[loc(rng)].id));
    State s = state_with(vs);
    for (int e = 0; e < epochs; ++e) {
        s = transition(s, rng(), model);
        if (s.terminal) break;
        auto actions = feasible_actions(s, model);
        if (actions.empty()) {
            s = reject_outstanding(s);
            continue;
        }
        std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
        s = apply_action(s, actions[pick(rng)], model);
    }
    return s;
}

} // namespace testing_support

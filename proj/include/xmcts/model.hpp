#pragma once

// Paratransit dispatch MDP: requests, vehicles with insertion-planned routes,
// hard constraints, stochastic request arrivals and the service reward.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace xmcts {

using Minutes = std::int64_t;

inline Minutes round_half_up(double x) { return static_cast<Minutes>(std::floor(x + 0.5)); }

enum class RequestStatus { waiting, assigned, in_transit, dropped_off };

inline std::string_view to_string(RequestStatus s) {
    switch (s) {
    case RequestStatus::waiting: return "waiting";
    case RequestStatus::assigned: return "assigned";
    case RequestStatus::in_transit: return "in-transit";
    case RequestStatus::dropped_off: return "dropped-off";
    }
    return "waiting";
}

inline std::optional<RequestStatus> parse_status(std::string_view s) {
    if (s == "waiting") return RequestStatus::waiting;
    if (s == "assigned") return RequestStatus::assigned;
    if (s == "in-transit") return RequestStatus::in_transit;
    if (s == "dropped-off") return RequestStatus::dropped_off;
    return std::nullopt;
}

struct Location {
    int id = 0;
    double display_x = 0.0;
    double display_y = 0.0;
};

// Locations plus an optional dense travel-time matrix indexed by the order
// of `locations`. Without a matrix, travel time is Manhattan distance on
// the display grid.
class Network {
public:
    Network() = default;

    explicit Network(std::vector<Location> locations,
                     std::vector<std::vector<Minutes>> matrix = {})
        : locations_(std::move(locations)), matrix_(std::move(matrix)) {
        for (std::size_t i = 0; i < locations_.size(); ++i) {
            if (!index_.emplace(locations_[i].id, i).second)
                throw InvalidInput("duplicate location id " + std::to_string(locations_[i].id));
        }
        if (!matrix_.empty()) {
            if (matrix_.size() != locations_.size())
                throw InvalidInput("travel_matrix must have one row per location");
            for (const auto& row : matrix_) {
                if (row.size() != locations_.size())
                    throw InvalidInput("travel_matrix must be square");
                for (Minutes m : row)
                    if (m < 0) throw InvalidInput("travel_matrix entries must be non-negative");
            }
        }
    }

    const std::vector<Location>& locations() const { return locations_; }
    const std::vector<std::vector<Minutes>>& matrix() const { return matrix_; }
    bool has_matrix() const { return !matrix_.empty(); }

    bool contains(int id) const { return index_.count(id) != 0; }

    std::size_t index_of(int id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw InvalidInput("unknown location id " + std::to_string(id));
        return it->second;
    }

    const Location& at(int id) const { return locations_[index_of(id)]; }

private:
    std::vector<Location> locations_;
    std::vector<std::vector<Minutes>> matrix_;
    std::unordered_map<int, std::size_t> index_;
};

struct ModelConfig {
    Minutes max_en_route = 45;      // T_max
    Minutes allowed_window = 10;    // t_a
    double minutes_per_unit = 1.0;
    double gamma1 = 1.0;
    double gamma2 = 0.1;
    double gamma3 = 0.1;
    double discount = 0.95;
    double arrival_rate = 6.0;      // expected requests per hour
    Minutes horizon = 240;

    // Constants referenced by the soundness formulas.
    Minutes reasonable_travel = 60; // v_rt
    int reasonable_stops = 5;       // theta_d

    // Generated requests: pickup lead after the request and drop-off slack.
    Minutes pickup_lead_min = 5;
    Minutes pickup_lead_max = 30;

    Minutes start_of_day = 12 * 60; // clock time of scenario minute 0
    bool models_fuel = false;

    void validate() const {
        if (max_en_route <= 0 || allowed_window <= 0 || minutes_per_unit <= 0 || arrival_rate <= 0 ||
            horizon <= 0)
            throw InvalidInput("config values must be positive");
        if (gamma1 < 0 || gamma2 < 0 || gamma3 < 0) throw InvalidInput("reward weights must be non-negative");
        if (!(discount > 0.0 && discount <= 1.0)) throw InvalidInput("discount must lie in (0, 1]");
        if (pickup_lead_min < 0 || pickup_lead_max < pickup_lead_min)
            throw InvalidInput("pickup lead bounds are inconsistent");
    }
};

struct TransitModel {
    ModelConfig config;
    Network network;
};

struct Request {
    int id = 0;
    Minutes requested_at = 0; // t_r
    Minutes pickup_time = 0;  // t_p
    Minutes dropoff_time = 0; // t_d
    int pickup_location = 0;
    int dropoff_location = 0;
    RequestStatus status = RequestStatus::waiting;
    std::optional<Minutes> actual_pickup;
    std::optional<Minutes> actual_dropoff;
    std::optional<int> vehicle; // serving vehicle once assigned, kept after drop-off
};

enum class StopKind { pickup, dropoff };

inline std::string_view to_string(StopKind k) { return k == StopKind::pickup ? "pickup" : "dropoff"; }

struct RouteStop {
    int location = 0;
    int request_id = 0;
    StopKind kind = StopKind::pickup;
    Minutes eta = 0; // t_est

    friend bool operator==(const RouteStop&, const RouteStop&) = default;
};

struct Vehicle {
    int id = 0;
    int capacity = 0;
    int occupancy = 0;
    int location = 0; // last location reached
    std::vector<RouteStop> route;
    std::vector<int> assigned; // requests on the route or on board
    // Set while the vehicle travels its first leg: the time it left `location`.
    // That leg is committed, so no stop may be inserted in front of it.
    std::optional<Minutes> departed_at;
    std::optional<double> fuel; // minutes of driving left in the tank
};

struct State {
    Minutes time = 0;
    std::vector<Request> requests; // every request seen in the episode, ordered by id
    std::vector<Vehicle> vehicles; // ordered by id
    std::optional<int> outstanding;
    bool terminal = false;
    int next_request_id = 1;

    const Request* find_request(int id) const {
        auto it = std::lower_bound(requests.begin(), requests.end(), id,
                                   [](const Request& r, int v) { return r.id < v; });
        return it != requests.end() && it->id == id ? &*it : nullptr;
    }
    Request* find_request(int id) {
        return const_cast<Request*>(std::as_const(*this).find_request(id));
    }
    const Request& request(int id) const {
        const Request* r = find_request(id);
        if (!r) throw InvalidInput("unknown request id " + std::to_string(id));
        return *r;
    }
    Request& request(int id) { return const_cast<Request&>(std::as_const(*this).request(id)); }

    const Vehicle* find_vehicle(int id) const {
        for (const auto& v : vehicles)
            if (v.id == id) return &v;
        return nullptr;
    }
    const Vehicle& vehicle(int id) const {
        const Vehicle* v = find_vehicle(id);
        if (!v) throw InvalidInput("unknown vehicle id " + std::to_string(id));
        return *v;
    }
    Vehicle& vehicle(int id) { return const_cast<Vehicle&>(std::as_const(*this).vehicle(id)); }

    void add_request(Request r) {
        auto it = std::lower_bound(requests.begin(), requests.end(), r.id,
                                   [](const Request& x, int v) { return x.id < v; });
        if (it != requests.end() && it->id == r.id)
            throw InvalidInput("duplicate request id " + std::to_string(r.id));
        next_request_id = std::max(next_request_id, r.id + 1);
        requests.insert(it, std::move(r));
    }
};

// Insert the pickup at `pickup_index` of the current route, then the drop-off
// at `dropoff_index` of the route that already contains the pickup.
struct Action {
    int request_id = 0;
    int vehicle_id = 0;
    std::size_t pickup_index = 0;
    std::size_t dropoff_index = 1;

    friend bool operator==(const Action&, const Action&) = default;
};

struct Insertion {
    Action action;
    Minutes added_travel = 0;
};

struct ConstraintViolation {
    enum class Kind { capacity, en_route_time };
    Kind kind = Kind::capacity;
    int vehicle_id = 0;
    std::optional<int> request_id; // set for en-route violations
    double degree = 0.0;           // passengers over capacity, or minutes over T_max

    friend bool operator==(const ConstraintViolation&, const ConstraintViolation&) = default;
};

inline std::string_view to_string(ConstraintViolation::Kind k) {
    return k == ConstraintViolation::Kind::capacity ? "capacity" : "en_route_time";
}

class ConstraintError : public Error {
public:
    explicit ConstraintError(std::vector<ConstraintViolation> violations)
        : Error("constraint-violation", "action violates hard constraints"),
          violations_(std::move(violations)) {}

    const std::vector<ConstraintViolation>& violations() const { return violations_; }

private:
    std::vector<ConstraintViolation> violations_;
};

// No vehicle can take the outstanding request; carries each vehicle's violations.
class InfeasibleError : public Error {
public:
    explicit InfeasibleError(std::map<int, std::vector<ConstraintViolation>> per_vehicle)
        : Error("infeasible", "no vehicle can serve the outstanding request within hard constraints"),
          per_vehicle_(std::move(per_vehicle)) {}

    const std::map<int, std::vector<ConstraintViolation>>& per_vehicle() const { return per_vehicle_; }

private:
    std::map<int, std::vector<ConstraintViolation>> per_vehicle_;
};

// ---------------------------------------------------------------------------

inline Minutes travel_time(const TransitModel& model, int from, int to) {
    const Network& net = model.network;
    std::size_t a = net.index_of(from);
    std::size_t b = net.index_of(to);
    if (net.has_matrix()) return net.matrix()[a][b];
    if (a == b) return 0;
    const Location& la = net.locations()[a];
    const Location& lb = net.locations()[b];
    double units = std::abs(la.display_x - lb.display_x) + std::abs(la.display_y - lb.display_y);
    return round_half_up(units * model.config.minutes_per_unit);
}

// Clock time at which the vehicle starts driving its route.
inline Minutes route_origin_time(const Vehicle& vehicle, Minutes now) {
    return vehicle.departed_at.value_or(now);
}

inline std::vector<RouteStop> estimate_route_times(const Vehicle& vehicle, Minutes now,
                                                   const TransitModel& model) {
    std::vector<RouteStop> out = vehicle.route;
    Minutes t = route_origin_time(vehicle, now);
    int at = vehicle.location;
    for (auto& stop : out) {
        t += travel_time(model, at, stop.location);
        stop.eta = t;
        at = stop.location;
    }
    return out;
}

inline Minutes route_duration(const TransitModel& model, int start, const std::vector<RouteStop>& route) {
    Minutes total = 0;
    int at = start;
    for (const auto& stop : route) {
        total += travel_time(model, at, stop.location);
        at = stop.location;
    }
    return total;
}

inline std::vector<RouteStop> insert_stops(const std::vector<RouteStop>& route, const Request& r,
                                           std::size_t pickup_index, std::size_t dropoff_index) {
    std::vector<RouteStop> out = route;
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(pickup_index),
               RouteStop{r.pickup_location, r.id, StopKind::pickup, 0});
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(dropoff_index),
               RouteStop{r.dropoff_location, r.id, StopKind::dropoff, 0});
    return out;
}

// Smallest pickup index allowed: a moving vehicle keeps its current leg.
inline std::size_t first_insertable_index(const Vehicle& v) {
    return v.departed_at && !v.route.empty() ? 1 : 0;
}

inline Insertion best_insertion(const Vehicle& vehicle, const Request& request, Minutes /*now*/,
                                const TransitModel& model) {
    const std::size_t n = vehicle.route.size();
    const Minutes base = route_duration(model, vehicle.location, vehicle.route);
    std::optional<Insertion> best;
    for (std::size_t i = first_insertable_index(vehicle); i <= n; ++i) {
        for (std::size_t j = i + 1; j <= n + 1; ++j) {
            Minutes added =
                route_duration(model, vehicle.location, insert_stops(vehicle.route, request, i, j)) - base;
            // strict < keeps the lexicographically smallest pair on ties
            if (!best || added < best->added_travel)
                best = Insertion{Action{request.id, vehicle.id, i, j}, added};
        }
    }
    return *best;
}

namespace detail {

inline void validate_action_shape(const State& state, const Action& a) {
    const Vehicle* v = state.find_vehicle(a.vehicle_id);
    if (!v) throw InvalidInput("unknown vehicle id " + std::to_string(a.vehicle_id));
    if (!state.find_request(a.request_id)) throw InvalidInput("unknown request id " + std::to_string(a.request_id));
    const std::size_t n = v->route.size();
    if (a.pickup_index > n || a.dropoff_index <= a.pickup_index || a.dropoff_index > n + 1)
        throw InvalidInput("insertion indices out of range");
    if (a.pickup_index < first_insertable_index(*v))
        throw InvalidInput("cannot insert ahead of the leg the vehicle is driving");
}

// Occupancy sweep and en-route estimates for one planned route.
inline std::vector<ConstraintViolation> audit_route(const State& state, const Vehicle& v,
                                                    const std::vector<RouteStop>& timed_route,
                                                    const TransitModel& model) {
    std::vector<ConstraintViolation> out;
    int load = v.occupancy;
    int peak = load;
    for (const auto& stop : timed_route) {
        load += stop.kind == StopKind::pickup ? 1 : -1;
        peak = std::max(peak, load);
    }
    if (peak > v.capacity)
        out.push_back({ConstraintViolation::Kind::capacity, v.id, std::nullopt, double(peak - v.capacity)});

    for (const auto& stop : timed_route) {
        if (stop.kind != StopKind::dropoff) continue;
        const Request* r = state.find_request(stop.request_id);
        bool known = r && r->actual_pickup;
        Minutes picked = known ? *r->actual_pickup : 0;
        for (const auto& s : timed_route) {
            if (known) break;
            if (s.request_id == stop.request_id && s.kind == StopKind::pickup) {
                picked = s.eta;
                known = true;
            }
        }
        if (!known) continue;
        Minutes ride = stop.eta - picked;
        if (ride > model.config.max_en_route)
            out.push_back({ConstraintViolation::Kind::en_route_time, v.id, stop.request_id,
                           double(ride - model.config.max_en_route)});
    }
    return out;
}

} // namespace detail

inline std::vector<ConstraintViolation> check_hard_constraints(const State& state, const Action& action,
                                                               const TransitModel& model) {
    detail::validate_action_shape(state, action);
    const Vehicle& v = state.vehicle(action.vehicle_id);
    Vehicle planned = v;
    planned.route = insert_stops(v.route, state.request(action.request_id), action.pickup_index,
                                 action.dropoff_index);
    return detail::audit_route(state, v, estimate_route_times(planned, state.time, model), model);
}

// Audit of every vehicle's current plan; empty when the state is feasible.
inline std::vector<ConstraintViolation> audit_state(const State& state, const TransitModel& model) {
    std::vector<ConstraintViolation> out;
    for (const auto& v : state.vehicles) {
        auto part = detail::audit_route(state, v, estimate_route_times(v, state.time, model), model);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

inline std::vector<Action> feasible_actions(const State& state, const TransitModel& model) {
    if (!state.outstanding) throw InvalidState("no outstanding request");
    const Request& r = state.request(*state.outstanding);
    std::vector<Action> out;
    for (const auto& v : state.vehicles) {
        Insertion ins = best_insertion(v, r, state.time, model);
        if (check_hard_constraints(state, ins.action, model).empty()) out.push_back(ins.action);
    }
    return out;
}

// Best insertion per vehicle with its violations, in vehicle-id order.
inline std::map<int, std::vector<ConstraintViolation>> per_vehicle_violations(const State& state,
                                                                             const TransitModel& model) {
    if (!state.outstanding) throw InvalidState("no outstanding request");
    const Request& r = state.request(*state.outstanding);
    std::map<int, std::vector<ConstraintViolation>> out;
    for (const auto& v : state.vehicles)
        out[v.id] = check_hard_constraints(state, best_insertion(v, r, state.time, model).action, model);
    return out;
}

inline State apply_action(const State& state, const Action& action, const TransitModel& model,
                          bool force = false) {
    if (!state.outstanding || *state.outstanding != action.request_id)
        throw InvalidState("action does not address the outstanding request");
    auto violations = check_hard_constraints(state, action, model);
    if (!violations.empty() && !force) throw ConstraintError(std::move(violations));

    State next = state;
    Request& r = next.request(action.request_id);
    Vehicle& v = next.vehicle(action.vehicle_id);
    r.status = RequestStatus::assigned;
    r.vehicle = v.id;
    v.route = insert_stops(v.route, r, action.pickup_index, action.dropoff_index);
    v.assigned.push_back(r.id);
    if (!v.departed_at) v.departed_at = next.time;
    v.route = estimate_route_times(v, next.time, model);
    next.outstanding.reset();
    return next;
}

// Drop the outstanding request unassigned (no vehicle could take it).
inline State reject_outstanding(const State& state) {
    State next = state;
    next.outstanding.reset();
    return next;
}

// Play routes forward to `until`, recording pickups and drop-offs reached.
inline State advance(const State& state, Minutes until, const TransitModel& model) {
    State next = state;
    if (until < next.time) throw InvalidInput("cannot advance backwards in time");
    for (auto& v : next.vehicles) {
        if (v.route.empty()) {
            v.departed_at.reset();
            continue;
        }
        Minutes t = route_origin_time(v, next.time);
        std::size_t served = 0;
        for (const auto& stop : v.route) {
            Minutes leg = travel_time(model, v.location, stop.location);
            Minutes arrive = t + leg;
            if (arrive > until) break;
            Request& r = next.request(stop.request_id);
            if (stop.kind == StopKind::pickup) {
                r.status = RequestStatus::in_transit;
                r.actual_pickup = arrive;
                ++v.occupancy;
            } else {
                r.status = RequestStatus::dropped_off;
                r.actual_dropoff = arrive;
                --v.occupancy;
                std::erase(v.assigned, r.id);
            }
            if (v.fuel) *v.fuel -= double(leg);
            v.location = stop.location;
            t = arrive;
            ++served;
        }
        v.route.erase(v.route.begin(), v.route.begin() + static_cast<std::ptrdiff_t>(served));
        if (v.route.empty())
            v.departed_at.reset();
        else
            v.departed_at = t;
    }
    next.time = until;
    for (auto& v : next.vehicles) v.route = estimate_route_times(v, next.time, model);
    return next;
}

// Sample the next request arrival and move the fleet up to it.
inline State transition(const State& state, std::uint64_t seed, const TransitModel& model) {
    if (state.outstanding) throw InvalidState("previous request is still outstanding");
    if (state.terminal) return state;
    const ModelConfig& cfg = model.config;
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gap(cfg.arrival_rate / 60.0);
    Minutes arrival = state.time + round_half_up(gap(rng));

    if (arrival > cfg.horizon) {
        State next = advance(state, std::max(state.time, cfg.horizon), model);
        next.terminal = true;
        return next;
    }
    State next = advance(state, arrival, model);

    const auto& locs = model.network.locations();
    if (locs.empty()) throw InvalidInput("network has no locations");
    std::uniform_int_distribution<std::size_t> pick_loc(0, locs.size() - 1);
    std::size_t p = pick_loc(rng);
    std::size_t d = p;
    if (locs.size() > 1) {
        std::uniform_int_distribution<std::size_t> other(0, locs.size() - 2);
        d = other(rng);
        if (d >= p) ++d;
    }
    std::uniform_int_distribution<Minutes> lead(cfg.pickup_lead_min, cfg.pickup_lead_max);

    Request r;
    r.id = next.next_request_id;
    r.requested_at = arrival;
    r.pickup_location = locs[p].id;
    r.dropoff_location = locs[d].id;
    r.pickup_time = arrival + lead(rng);
    r.dropoff_time = r.pickup_time + travel_time(model, r.pickup_location, r.dropoff_location) + cfg.allowed_window;
    next.add_request(r);
    next.outstanding = r.id;
    return next;
}

// The two weighted parts of the reward: service rate, and punctuality.
struct RewardTerms {
    double service = 0.0;
    double punctuality = 0.0;
    double total() const { return service + punctuality; }
};

inline RewardTerms reward_terms(const State& state, const TransitModel& model) {
    const ModelConfig& cfg = model.config;
    std::unordered_map<int, std::pair<std::optional<Minutes>, std::optional<Minutes>>> eta;
    for (const auto& v : state.vehicles)
        for (const auto& s : v.route)
            (s.kind == StopKind::pickup ? eta[s.request_id].first : eta[s.request_id].second) = s.eta;

    int assigned = 0;
    int served = 0;
    double pickup_sum = 0.0;
    double dropoff_sum = 0.0;
    for (const auto& r : state.requests) {
        if (r.status == RequestStatus::waiting) continue;
        ++assigned;
        if (r.status == RequestStatus::in_transit || r.status == RequestStatus::dropped_off) ++served;
        auto it = eta.find(r.id);
        std::optional<Minutes> pick = r.actual_pickup;
        std::optional<Minutes> drop = r.actual_dropoff;
        if (!pick && it != eta.end()) pick = it->second.first;
        if (!drop && it != eta.end()) drop = it->second.second;
        if (pick) pickup_sum += double(r.pickup_time - *pick);
        if (drop) dropoff_sum += double(r.dropoff_time - *drop);
    }
    RewardTerms t;
    t.service = assigned > 0 ? cfg.gamma1 * double(served) / double(assigned) : 0.0;
    t.punctuality = cfg.gamma2 * pickup_sum + cfg.gamma3 * dropoff_sum;
    return t;
}

inline double reward(const State& state, const TransitModel& model) { return reward_terms(state, model).total(); }

inline double reward(const State& state, const Action& action, const TransitModel& model) {
    return reward(apply_action(state, action, model, /*force=*/true), model);
}

// splitmix64 finalizer; derives independent child seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    return mix_seed(mix_seed(mix_seed(base) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

} // namespace xmcts

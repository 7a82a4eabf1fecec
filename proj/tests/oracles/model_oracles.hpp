#pragma once

// Independent re-implementations used as test oracles for the transit model.

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "xmcts/mcts.hpp"
#include "xmcts/model.hpp"

namespace oracle {

using namespace xmcts;

inline Minutes manhattan(const TransitModel& m, int a, int b) {
    const auto& la = m.network.at(a);
    const auto& lb = m.network.at(b);
    return static_cast<Minutes>(
        std::floor((std::fabs(la.display_x - lb.display_x) + std::fabs(la.display_y - lb.display_y)) *
                       m.config.minutes_per_unit +
                   0.5));
}

// Reward straight from the definitions: served share of every request a
// vehicle has taken, plus weighted pickup and drop-off earliness.
inline double reward(const State& s, const TransitModel& m) {
    double served = 0;
    double taken = 0;
    double early_pick = 0;
    double early_drop = 0;
    for (const Request& r : s.requests) {
        if (!r.vehicle) continue;
        taken += 1;
        if (r.actual_pickup) served += 1;
        std::optional<Minutes> pick = r.actual_pickup;
        std::optional<Minutes> drop = r.actual_dropoff;
        for (const Vehicle& v : s.vehicles) {
            if (v.id != *r.vehicle) continue;
            Minutes t = v.departed_at ? *v.departed_at : s.time;
            int at = v.location;
            for (const RouteStop& st : v.route) {
                t += manhattan(m, at, st.location);
                at = st.location;
                if (st.request_id != r.id) continue;
                if (st.kind == StopKind::pickup && !pick) pick = t;
                if (st.kind == StopKind::dropoff && !drop) drop = t;
            }
        }
        if (pick) early_pick += double(r.pickup_time - *pick);
        if (drop) early_drop += double(r.dropoff_time - *drop);
    }
    double term1 = taken > 0 ? served / taken : 0.0;
    return m.config.gamma1 * term1 + m.config.gamma2 * early_pick + m.config.gamma3 * early_drop;
}

struct InsertionChoice {
    std::size_t i = 0;
    std::size_t j = 0;
    Minutes added = 0;
};

// Exhaustive enumeration of (pickup, drop-off) positions. Positions refer to
// the final route: pickup lands at index i, drop-off at index j > i.
inline InsertionChoice best_insertion(const Vehicle& v, const Request& r, const TransitModel& m) {
    auto duration = [&](const std::vector<int>& stops) {
        Minutes total = 0;
        int at = v.location;
        for (int s : stops) {
            total += manhattan(m, at, s);
            at = s;
        }
        return total;
    };
    std::vector<int> base;
    for (const auto& st : v.route) base.push_back(st.location);
    const Minutes base_cost = duration(base);
    const std::size_t n = base.size();
    const std::size_t first = (v.departed_at && n > 0) ? 1 : 0;
    std::optional<InsertionChoice> best;
    for (std::size_t i = first; i <= n; ++i) {
        for (std::size_t j = i + 1; j <= n + 1; ++j) {
            std::vector<int> route;
            std::size_t k = 0;
            for (std::size_t pos = 0; pos < n + 2; ++pos) {
                if (pos == i)
                    route.push_back(r.pickup_location);
                else if (pos == j)
                    route.push_back(r.dropoff_location);
                else
                    route.push_back(base[k++]);
            }
            Minutes added = duration(route) - base_cost;
            if (!best || added < best->added || (added == best->added && std::make_pair(i, j) < std::make_pair(best->i, best->j)))
                best = InsertionChoice{i, j, added};
        }
    }
    return *best;
}

// Peak on-board count along the route starting from the current occupancy.
inline int peak_occupancy(int occupancy, const std::vector<RouteStop>& route) {
    int peak = occupancy;
    int load = occupancy;
    for (const auto& st : route) {
        if (st.kind == StopKind::pickup)
            ++load;
        else
            --load;
        if (load > peak) peak = load;
    }
    return peak;
}

// Small-horizon expectimax over the dispatch MDP. Chance nodes are
// approximated by `samples` seeded draws of the next request.
class Expectimax {
public:
    Expectimax(const TransitModel& m, int samples, std::uint64_t seed) : m_(m), samples_(samples), seed_(seed) {}

    // Value of each root action (by vehicle id) looking `depth` epochs ahead.
    std::map<int, double> action_values(const State& s, int depth) {
        std::map<int, double> out;
        for (const Action& a : feasible_actions(s, m_)) out[a.vehicle_id] = q(s, a, depth, 0);
        return out;
    }

private:
    const TransitModel& m_;
    int samples_;
    std::uint64_t seed_;

    double q(const State& s, const Action& a, int depth, std::uint64_t path) {
        State next = apply_action(s, a, m_);
        double r = xmcts::reward(next, m_);
        if (depth <= 1 || next.terminal) return r;
        double sum = 0;
        for (int k = 0; k < samples_; ++k) {
            State c = transition(next, derive_seed(seed_, path * 131 + std::uint64_t(a.vehicle_id), std::uint64_t(k)), m_);
            sum += c.terminal ? 0.0 : v(c, depth - 1, path * 17 + std::uint64_t(k) + 1);
        }
        return r + m_.config.discount * sum / samples_;
    }

    double v(const State& s, int depth, std::uint64_t path) {
        auto actions = feasible_actions(s, m_);
        if (actions.empty()) return xmcts::reward(reject_outstanding(s), m_);
        double best = -std::numeric_limits<double>::infinity();
        for (const Action& a : actions) best = std::max(best, q(s, a, depth, path));
        return best;
    }
};

} // namespace oracle

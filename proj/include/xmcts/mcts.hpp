#pragma once

// UCT search over the dispatch MDP.
//
// The root holds the epoch state with its outstanding request. Every other
// node holds the state right after its entering assignment; the chance step
// to the next request is sampled once per node (seeded by node id) when the
// node is expanded, so the tree is a deterministic function of the seeds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

#include "ctl/labels.hpp"
#include "errors.hpp"
#include "model.hpp"

namespace xmcts {

struct SearchParams {
    int iterations = 150;
    double exploration_c = std::sqrt(2.0);
    int rollout_depth = 10;
    std::uint64_t seed = 0;

    void validate() const {
        if (iterations < 1) throw InvalidInput("iterations must be at least 1");
        if (exploration_c < 0) throw InvalidInput("exploration_c must be non-negative");
        if (rollout_depth < 0) throw InvalidInput("rollout_depth must be non-negative");
    }
};

struct ViolationFlag {
    std::string formula_id;
    double degree = 0.0;
};

struct SearchNode {
    int id = 0;
    State state;
    std::optional<Action> entering_action;
    int visits = 0;
    double total_value = 0.0;
    // Discounted reward components accumulated alongside total_value.
    double service_sum = 0.0;
    double punctuality_sum = 0.0;
    std::vector<int> children;
    std::optional<int> parent;
    bool expanded = false;
    bool forced = false; // created by forcing an infeasible alternative
    std::vector<ConstraintViolation> forced_violations;
    std::vector<ViolationFlag> violation_flags;

    double mean_value() const { return visits > 0 ? total_value / visits : 0.0; }
};

struct SearchTree {
    std::vector<SearchNode> nodes; // id == index, creation order
    int root = 0;
    long iterations_run = 0;
    std::uint64_t seed = 0;

    const SearchNode& node(int id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= nodes.size())
            throw InvalidInput("unknown node id " + std::to_string(id));
        return nodes[static_cast<std::size_t>(id)];
    }
    SearchNode& node(int id) { return const_cast<SearchNode&>(std::as_const(*this).node(id)); }

    int add_child(int parent, State state, const Action& action) {
        SearchNode n;
        n.id = static_cast<int>(nodes.size());
        n.state = std::move(state);
        n.entering_action = action;
        n.parent = parent;
        nodes.push_back(std::move(n));
        nodes[static_cast<std::size_t>(parent)].children.push_back(nodes.back().id);
        return nodes.back().id;
    }

    std::optional<int> child_for_vehicle(int parent, int vehicle_id) const {
        for (int c : node(parent).children)
            if (node(c).entering_action->vehicle_id == vehicle_id) return c;
        return std::nullopt;
    }

    // Node ids of the subtree rooted at `id` in depth-first preorder.
    std::vector<int> subtree(int id) const {
        std::vector<int> out;
        std::vector<int> stack{id};
        while (!stack.empty()) {
            int n = stack.back();
            stack.pop_back();
            out.push_back(n);
            const auto& kids = node(n).children;
            for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
        }
        return out;
    }

    // Single root, mutually consistent links, no cycles, every node reachable.
    bool well_formed() const {
        if (nodes.empty() || node(root).parent) return false;
        std::vector<int> seen(nodes.size(), 0);
        std::vector<int> stack{root};
        while (!stack.empty()) {
            int n = stack.back();
            stack.pop_back();
            if (seen[static_cast<std::size_t>(n)]++) return false;
            for (int c : node(n).children) {
                if (c < 0 || static_cast<std::size_t>(c) >= nodes.size()) return false;
                if (node(c).parent != n || !node(c).entering_action) return false;
                stack.push_back(c);
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }) && !node(root).entering_action;
    }
};

struct RolloutResult {
    double value = 0.0;
    double service = 0.0;
    double punctuality = 0.0;
};

// Default policy: from `state`, alternate sampled arrivals and uniformly
// random feasible assignments (dropping requests nobody can take), summing
// discount^k times the reward after each step. Step 0 is reward(state).
inline RolloutResult rollout_terms(const State& state, int depth, std::uint64_t seed, const TransitModel& model) {
    if (depth < 0) throw InvalidInput("rollout depth must be non-negative");
    // Arrivals and policy draws use separate streams, so two rollouts with the
    // same seed face the same requests whatever actions they take.
    std::mt19937_64 policy(derive_seed(seed, 0, 1));
    RolloutResult out;
    auto accumulate = [&](const State& s, double weight) {
        RewardTerms t = reward_terms(s, model);
        out.service += weight * t.service;
        out.punctuality += weight * t.punctuality;
        out.value += weight * t.total();
    };
    accumulate(state, 1.0);
    State s = state;
    double weight = 1.0;
    for (int k = 1; k <= depth; ++k) {
        if (s.terminal) break;
        if (!s.outstanding) {
            s = transition(s, derive_seed(seed, static_cast<std::uint64_t>(k), 0), model);
            if (s.terminal) break;
        }
        std::vector<Action> actions = feasible_actions(s, model);
        if (actions.empty()) {
            s = reject_outstanding(s);
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
            s = apply_action(s, actions[pick(policy)], model);
        }
        weight *= model.config.discount;
        accumulate(s, weight);
    }
    return out;
}

inline double rollout(const State& state, int depth, std::uint64_t seed, const TransitModel& model) {
    return rollout_terms(state, depth, seed, model).value;
}

// Unvisited children first (lowest id), otherwise the UCT argmax with ties
// going to the lowest id.
inline int select_child(const SearchTree& tree, int node_id, double exploration_c) {
    const SearchNode& n = tree.node(node_id);
    if (n.children.empty()) throw InvalidInput("select_child called on a leaf");
    for (int c : n.children)
        if (tree.node(c).visits == 0) return c;
    const double log_n = std::log(double(std::max(n.visits, 1)));
    int best = n.children.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c : n.children) {
        const SearchNode& ch = tree.node(c);
        double score = ch.mean_value() + exploration_c * std::sqrt(log_n / ch.visits);
        if (score > best_score) {
            best_score = score;
            best = c;
        }
    }
    return best;
}

// Adds the result to `leaf` and each ancestor up to `stop_at` (the root when
// empty), discounted by distance from the leaf.
inline void backpropagate(SearchTree& tree, int leaf, const RolloutResult& result, const ModelConfig& cfg,
                          std::optional<int> stop_at = std::nullopt) {
    double weight = 1.0;
    std::optional<int> at = leaf;
    tree.node(leaf);
    while (at) {
        SearchNode& n = tree.node(*at);
        n.visits += 1;
        n.total_value += weight * result.value;
        n.service_sum += weight * result.service;
        n.punctuality_sum += weight * result.punctuality;
        if (stop_at && *at == *stop_at) break;
        weight *= cfg.discount;
        at = n.parent;
    }
}

inline void backpropagate(SearchTree& tree, int leaf, double value, const ModelConfig& cfg) {
    backpropagate(tree, leaf, RolloutResult{value, 0.0, 0.0}, cfg);
}

namespace detail {

// State in which the node's children choose an assignment.
inline State decision_state(const SearchTree& tree, const SearchNode& n, const TransitModel& model) {
    if (!n.parent) return n.state;
    return transition(n.state, derive_seed(tree.seed, static_cast<std::uint64_t>(*n.parent), 1), model);
}

inline void expand(SearchTree& tree, int node_id, const TransitModel& model) {
    SearchNode& n = tree.node(node_id);
    n.expanded = true;
    if (n.state.terminal) return;
    State ds = decision_state(tree, n, model);
    if (ds.terminal || !ds.outstanding) return;
    for (const Action& a : feasible_actions(ds, model)) {
        State child = apply_action(ds, a, model);
        tree.add_child(node_id, std::move(child), a);
    }
}

// Rollouts are seeded by (parent, visits of the leaf), so the k-th rollout of
// every sibling sees the same future arrivals.
inline void iterate(SearchTree& tree, int search_root, const SearchParams& params, std::uint64_t seed_base,
                    const TransitModel& model) {
    int n = search_root;
    while (tree.node(n).expanded && !tree.node(n).children.empty()) n = select_child(tree, n, params.exploration_c);
    if (!tree.node(n).expanded && (n == search_root || tree.node(n).visits > 0)) {
        expand(tree, n, model);
        if (!tree.node(n).children.empty()) n = select_child(tree, n, params.exploration_c);
    }
    const SearchNode& leaf = tree.node(n);
    std::uint64_t rollout_seed = derive_seed(seed_base, static_cast<std::uint64_t>(leaf.parent.value_or(n)),
                                             static_cast<std::uint64_t>(leaf.visits));
    RolloutResult r = rollout_terms(leaf.state, params.rollout_depth, rollout_seed, model);
    backpropagate(tree, n, r, model.config, search_root);
}

} // namespace detail

struct PlanResult {
    Action recommended;
    SearchTree tree;
};

// Most visited non-forced root child; ties go to the higher mean, then the
// lower vehicle id.
inline int recommended_child(const SearchTree& tree) {
    std::optional<int> best;
    for (int c : tree.node(tree.root).children) {
        const SearchNode& a = tree.node(c);
        if (a.forced) continue;
        if (!best) {
            best = c;
            continue;
        }
        const SearchNode& b = tree.node(*best);
        if (a.visits != b.visits) {
            if (a.visits > b.visits) best = c;
        } else if (a.mean_value() != b.mean_value()) {
            if (a.mean_value() > b.mean_value()) best = c;
        } else if (a.entering_action->vehicle_id < b.entering_action->vehicle_id) {
            best = c;
        }
    }
    if (!best) throw InvalidState("root has no feasible children");
    return *best;
}

inline PlanResult plan(const State& state, const SearchParams& params, const TransitModel& model) {
    params.validate();
    if (!state.outstanding) throw InvalidState("no outstanding request to plan for");
    if (feasible_actions(state, model).empty()) throw InfeasibleError(per_vehicle_violations(state, model));

    PlanResult out;
    SearchTree& tree = out.tree;
    tree.seed = params.seed;
    SearchNode root;
    root.state = state;
    tree.nodes.push_back(std::move(root));
    detail::expand(tree, tree.root, model);
    for (int i = 0; i < params.iterations; ++i) detail::iterate(tree, tree.root, params, derive_seed(params.seed, 0, 2), model);
    tree.iterations_run = params.iterations;
    out.recommended = *tree.node(recommended_child(tree)).entering_action;
    return out;
}

// Root child assigning the outstanding request to `vehicle_id`; created from
// the vehicle's best insertion (even when infeasible) if search never made it.
inline int ensure_root_child(SearchTree& tree, int vehicle_id, const TransitModel& model) {
    if (auto c = tree.child_for_vehicle(tree.root, vehicle_id)) return *c;
    const State& rs = tree.node(tree.root).state;
    if (!rs.outstanding) throw InvalidState("root has no outstanding request");
    const Vehicle& v = rs.vehicle(vehicle_id);
    Action a = best_insertion(v, rs.request(*rs.outstanding), rs.time, model).action;
    auto violations = check_hard_constraints(rs, a, model);
    State s = apply_action(rs, a, model, /*force=*/true);
    int id = tree.add_child(tree.root, std::move(s), a);
    tree.node(id).forced = !violations.empty();
    tree.node(id).forced_violations = std::move(violations);
    return id;
}

struct ExpansionResult {
    long new_iterations = 0;
};

// Runs `budget` more iterations with `queried` as the search root. Only the
// queried subtree and iterations_run change.
inline ExpansionResult expand_alternative(SearchTree& tree, int queried, int budget, std::uint64_t seed,
                                          const TransitModel& model, const SearchParams& params = {}) {
    tree.node(queried);
    if (budget < 0) throw InvalidInput("budget must be non-negative");
    for (int i = 0; i < budget; ++i) detail::iterate(tree, queried, params, derive_seed(seed, 0, 3), model);
    tree.iterations_run += budget;
    return {budget};
}

// ---------------------------------------------------------------------------
// Labeling

// Which request/vehicle the atomic variables describe. Without a vehicle,
// vehicle variables follow whichever vehicle serves the request on each branch.
struct LabelContext {
    int request_id = 0;
    std::optional<int> vehicle_id;
    StopKind stop = StopKind::dropoff;
};

inline ctl::NodeLabels label_state(const State& s, const LabelContext& ctx, const TransitModel& model) {
    using ctl::Variable;
    ctl::NodeLabels l;
    const ModelConfig& cfg = model.config;
    l.time = s.time;
    l.set(Variable::t_a, double(cfg.allowed_window));
    l.set(Variable::v_rt, double(cfg.reasonable_travel));
    l.set(Variable::theta_d, double(cfg.reasonable_stops));

    const Request* r = s.find_request(ctx.request_id);
    if (!r) return l;
    l.status = r->status;
    l.set(Variable::t_p, double(r->pickup_time));
    l.set(Variable::t_d, double(r->dropoff_time));

    std::optional<int> vid = ctx.vehicle_id ? ctx.vehicle_id : r->vehicle;
    if (!vid || r->vehicle != vid) return l;
    const Vehicle* v = s.find_vehicle(*vid);
    if (!v) return l;

    std::optional<Minutes> pick = r->actual_pickup;
    std::optional<Minutes> drop = r->actual_dropoff;
    std::optional<std::size_t> drop_index;
    for (std::size_t i = 0; i < v->route.size(); ++i) {
        const RouteStop& st = v->route[i];
        if (st.request_id != r->id) continue;
        if (st.kind == StopKind::pickup && !pick) pick = st.eta;
        if (st.kind == StopKind::dropoff) {
            if (!drop) drop = st.eta;
            drop_index = i;
        }
    }
    auto est = ctx.stop == StopKind::pickup ? pick : drop;
    if (est) l.set(Variable::t_est, double(*est));
    if (pick && drop) l.set(Variable::v_tt, double(*drop - *pick));

    int load = v->occupancy;
    int peak = load;
    for (const auto& st : v->route) {
        load += st.kind == StopKind::pickup ? 1 : -1;
        peak = std::max(peak, load);
    }
    l.set(Variable::v_c, double(v->capacity));
    l.set(Variable::v_o, double(peak));

    if (drop_index) {
        int stops = 0;
        for (std::size_t i = 0; i < *drop_index; ++i)
            if (v->route[i].request_id != r->id) ++stops;
        l.set(Variable::theta_s, double(stops));
    }
    if (cfg.models_fuel && v->fuel) {
        l.set(Variable::v_ft, *v->fuel);
        l.set(Variable::v_fr, double(route_duration(model, v->location, v->route)));
    }
    return l;
}

// Labeled copy of the subtree under `subtree_root` (the whole tree by
// default), in depth-first preorder.
inline ctl::LabeledTree export_labeled_tree(const SearchTree& tree, const LabelContext& ctx, const TransitModel& model,
                                            std::optional<int> subtree_root = std::nullopt) {
    int top = subtree_root.value_or(tree.root);
    const State& root_state = tree.node(tree.root).state;
    if (!root_state.find_request(ctx.request_id))
        throw InvalidInput("unknown request id " + std::to_string(ctx.request_id));
    if (ctx.vehicle_id && !root_state.find_vehicle(*ctx.vehicle_id))
        throw InvalidInput("unknown vehicle id " + std::to_string(*ctx.vehicle_id));

    ctl::LabeledTree out;
    out.iterations_run = tree.iterations_run;
    std::vector<int> order = tree.subtree(top);
    std::unordered_map<int, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    out.nodes.resize(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        const SearchNode& sn = tree.node(order[i]);
        ctl::LabeledNode& ln = out.nodes[i];
        ln.source_id = sn.id;
        if (i != 0) ln.parent = pos.at(*sn.parent);
        for (int c : sn.children) ln.children.push_back(pos.at(c));
        ln.labels = label_state(sn.state, ctx, model);
        ln.entering_action = sn.entering_action;
        ln.visits = sn.visits;
        ln.total_value = sn.total_value;
    }
    return out;
}

// Dump labels follow the root's outstanding request to whichever vehicle takes it.
inline nlohmann::json dump_tree(const SearchTree& tree, const TransitModel& model) {
    const State& rs = tree.node(tree.root).state;
    if (!rs.outstanding) throw InvalidState("tree root has no outstanding request");
    return ctl::to_json(export_labeled_tree(tree, LabelContext{*rs.outstanding, std::nullopt, StopKind::dropoff}, model));
}

} // namespace xmcts

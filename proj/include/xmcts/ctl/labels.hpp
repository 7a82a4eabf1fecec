#pragma once

// Kripke-structure view of a search tree: each node carries the values of
// the atomic state variables for one queried request/vehicle.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "../errors.hpp"
#include "../model.hpp"
#include "json.hpp"

namespace xmcts::ctl {

enum class Variable {
    t_est,
    t_p,
    t_d,
    t_a,
    v_c,
    v_o,
    v_tt,
    v_rt,
    v_ft,
    v_fr,
    theta_s,
    theta_d,
    r_cs,
};

inline constexpr std::size_t kNumericVariables = 12; // everything but r_cs

inline constexpr std::array<std::string_view, 13> kVariableNames = {
    "t_est", "t_p", "t_d", "t_a", "v_c", "v_o", "v_tt", "v_rt", "v_ft", "v_fr", "theta_s", "theta_d", "r_cs"};

inline std::string_view to_string(Variable v) { return kVariableNames[static_cast<std::size_t>(v)]; }

inline std::optional<Variable> parse_variable(std::string_view name) {
    if (name == "\xCE\xB8_s") return Variable::theta_s; // θ_s
    if (name == "\xCE\xB8_d") return Variable::theta_d;
    for (std::size_t i = 0; i < kVariableNames.size(); ++i)
        if (kVariableNames[i] == name) return static_cast<Variable>(i);
    return std::nullopt;
}

// Minutes-valued variables; violation degrees on these are whole minutes.
inline bool is_timing(Variable v) {
    switch (v) {
    case Variable::t_est:
    case Variable::t_p:
    case Variable::t_d:
    case Variable::t_a:
    case Variable::v_tt:
    case Variable::v_rt: return true;
    default: return false;
    }
}

struct NodeLabels {
    std::array<std::optional<double>, kNumericVariables> values{};
    std::optional<RequestStatus> status; // r_cs
    Minutes time = 0;

    bool applicable(Variable v) const {
        if (v == Variable::r_cs) return status.has_value();
        return values[static_cast<std::size_t>(v)].has_value();
    }
    std::optional<double> get(Variable v) const {
        if (v == Variable::r_cs) return std::nullopt;
        return values[static_cast<std::size_t>(v)];
    }
    void set(Variable v, double x) { values[static_cast<std::size_t>(v)] = x; }
};

struct LabeledNode {
    int source_id = 0; // id in the originating search tree
    std::optional<std::size_t> parent;
    std::vector<std::size_t> children;
    NodeLabels labels;
    std::optional<Action> entering_action;
    int visits = 0;
    double total_value = 0.0;
};

// Nodes are stored in depth-first preorder; index 0 is the root.
struct LabeledTree {
    std::vector<LabeledNode> nodes;
    long iterations_run = 0;

    std::size_t size() const { return nodes.size(); }

    // Throws unless parent/children links are mutually consistent and every
    // node is reachable from a single root without cycles.
    void validate() const {
        if (nodes.empty()) throw InvalidInput("labeled tree is empty");
        if (nodes[0].parent) throw InvalidInput("node 0 must be the root");
        std::vector<int> seen(nodes.size(), 0);
        std::vector<std::size_t> stack{0};
        while (!stack.empty()) {
            std::size_t n = stack.back();
            stack.pop_back();
            if (seen[n]++) throw InvalidInput("cycle or shared child at node " + std::to_string(n));
            for (std::size_t c : nodes[n].children) {
                if (c >= nodes.size()) throw InvalidInput("child index out of range");
                if (nodes[c].parent != n) throw InvalidInput("inconsistent parent link at node " + std::to_string(c));
                stack.push_back(c);
            }
        }
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (!seen[i]) throw InvalidInput("node " + std::to_string(i) + " unreachable from root");
    }
};

// ---------------------------------------------------------------------------
// Tree dump (JSON)

inline nlohmann::json to_json(const LabeledTree& tree) {
    using nlohmann::json;
    json nodes = json::array();
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const LabeledNode& n = tree.nodes[i];
        json labels = json::object();
        json na = json::array();
        for (std::size_t v = 0; v < kNumericVariables; ++v) {
            if (n.labels.values[v])
                labels[std::string(kVariableNames[v])] = *n.labels.values[v];
            else
                na.push_back(std::string(kVariableNames[v]));
        }
        if (n.labels.status)
            labels["r_cs"] = std::string(to_string(*n.labels.status));
        else
            na.push_back("r_cs");
        labels["time"] = n.labels.time;
        json entry = {{"id", i},
                      {"parent", n.parent ? json(*n.parent) : json(nullptr)},
                      {"entering_action", n.entering_action
                                              ? json{{"request_id", n.entering_action->request_id},
                                                     {"vehicle_id", n.entering_action->vehicle_id}}
                                              : json(nullptr)},
                      {"visits", n.visits},
                      {"total_value", n.total_value},
                      {"labels", labels},
                      {"not_applicable", na}};
        nodes.push_back(std::move(entry));
    }
    return {{"nodes", nodes}, {"root", 0}, {"iterations_run", tree.iterations_run}};
}

inline LabeledTree labeled_tree_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array())
        throw InvalidInput("tree dump must contain a nodes array");
    const auto& arr = doc["nodes"];
    LabeledTree tree;
    tree.iterations_run = doc.value("iterations_run", 0L);
    tree.nodes.resize(arr.size());
    std::unordered_map<long, std::size_t> index;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        long id = arr[i].at("id").get<long>();
        if (!index.emplace(id, i).second) throw InvalidInput("duplicate node id " + std::to_string(id));
    }
    long root_id = doc.value("root", 0L);
    if (!index.count(root_id)) throw InvalidInput("root id not present in nodes");

    // Re-index so the root is 0 and nodes follow preorder.
    std::vector<std::vector<std::size_t>> kids(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& p = arr[i].at("parent");
        if (p.is_null()) continue;
        auto it = index.find(p.get<long>());
        if (it == index.end()) throw InvalidInput("unknown parent id");
        kids[it->second].push_back(i);
    }
    std::vector<std::size_t> order;
    std::vector<std::size_t> pos(arr.size(), SIZE_MAX);
    std::vector<std::size_t> stack{index[root_id]};
    while (!stack.empty()) {
        std::size_t n = stack.back();
        stack.pop_back();
        if (pos[n] != SIZE_MAX) throw InvalidInput("cycle in tree dump");
        pos[n] = order.size();
        order.push_back(n);
        for (auto it = kids[n].rbegin(); it != kids[n].rend(); ++it) stack.push_back(*it);
    }
    if (order.size() != arr.size()) throw InvalidInput("tree dump has nodes unreachable from root");

    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& src = arr[order[k]];
        LabeledNode& n = tree.nodes[k];
        n.source_id = static_cast<int>(src.at("id").get<long>());
        if (k != 0) n.parent = pos[index.at(src.at("parent").get<long>())];
        for (std::size_t c : kids[order[k]]) n.children.push_back(pos[c]);
        n.visits = src.value("visits", 0);
        n.total_value = src.value("total_value", 0.0);
        if (src.contains("entering_action") && src["entering_action"].is_object())
            n.entering_action = Action{src["entering_action"].at("request_id").get<int>(),
                                       src["entering_action"].at("vehicle_id").get<int>(), 0, 0};
        const auto& labels = src.contains("labels") ? src["labels"] : nlohmann::json::object();
        std::vector<std::string> na = src.value("not_applicable", std::vector<std::string>{});
        for (const auto& [key, val] : labels.items()) {
            if (key == "time") {
                n.labels.time = val.get<Minutes>();
                continue;
            }
            auto var = parse_variable(key);
            if (!var) throw InvalidInput("unknown label variable '" + key + "'");
            if (std::find(na.begin(), na.end(), key) != na.end()) continue;
            if (*var == Variable::r_cs) {
                auto st = parse_status(val.get<std::string>());
                if (!st) throw InvalidInput("unknown status literal in labels");
                n.labels.status = *st;
            } else {
                n.labels.set(*var, val.get<double>());
            }
        }
        for (const auto& key : na)
            if (!parse_variable(key)) throw InvalidInput("unknown variable in not_applicable: " + key);
    }
    tree.validate();
    return tree;
}

} // namespace xmcts::ctl

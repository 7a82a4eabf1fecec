#pragma once

// Dispatch sessions: one scenario, one decision epoch at a time. The JSON
// request/response layer here is transport-free; http.hpp binds it to routes.

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "explainer.hpp"
#include "json.hpp"
#include "mcts.hpp"
#include "model.hpp"
#include "scenario.hpp"
#include "templates.hpp"

namespace xmcts {

using nlohmann::json;

enum class SessionStatus { awaiting_plan, planned, terminal };

inline std::string_view to_string(SessionStatus s) {
    switch (s) {
    case SessionStatus::awaiting_plan: return "awaiting_plan";
    case SessionStatus::planned: return "planned";
    case SessionStatus::terminal: return "terminal";
    }
    return "";
}

// ---------------------------------------------------------------------------
// JSON views of model types

inline json to_json(const ConstraintViolation& v) {
    json j = {{"kind", std::string(to_string(v.kind))}, {"vehicle_id", v.vehicle_id}, {"degree", v.degree}};
    j["request_id"] = v.request_id ? json(*v.request_id) : json(nullptr);
    return j;
}

inline json to_json(const std::vector<ConstraintViolation>& vs) {
    json arr = json::array();
    for (const auto& v : vs) arr.push_back(to_json(v));
    return arr;
}

inline json to_json(const Action& a) {
    return {{"request_id", a.request_id},
            {"vehicle_id", a.vehicle_id},
            {"pickup_index", a.pickup_index},
            {"dropoff_index", a.dropoff_index}};
}

inline json to_json(const Request& r) {
    auto opt = [](const std::optional<Minutes>& m) { return m ? json(*m) : json(nullptr); };
    return {{"id", r.id},
            {"t_r", r.requested_at},
            {"t_p", r.pickup_time},
            {"t_d", r.dropoff_time},
            {"l_p", r.pickup_location},
            {"l_d", r.dropoff_location},
            {"status", std::string(to_string(r.status))},
            {"actual_pickup", opt(r.actual_pickup)},
            {"actual_dropoff", opt(r.actual_dropoff)},
            {"vehicle_id", r.vehicle ? json(*r.vehicle) : json(nullptr)}};
}

inline json to_json(const Vehicle& v) {
    json route = json::array();
    for (const auto& s : v.route)
        route.push_back({{"location", s.location},
                         {"request_id", s.request_id},
                         {"kind", std::string(to_string(s.kind))},
                         {"t_est", s.eta}});
    json j = {{"id", v.id},         {"capacity", v.capacity}, {"occupancy", v.occupancy},
              {"location", v.location}, {"route", route},     {"assigned", v.assigned}};
    j["fuel"] = v.fuel ? json(*v.fuel) : json(nullptr);
    return j;
}

inline json to_json(const State& s) {
    json vehicles = json::array();
    for (const auto& v : s.vehicles) vehicles.push_back(to_json(v));
    json requests = json::array();
    for (const auto& r : s.requests) requests.push_back(to_json(r));
    return {{"time", s.time},
            {"terminal", s.terminal},
            {"outstanding", s.outstanding ? to_json(s.request(*s.outstanding)) : json(nullptr)},
            {"vehicles", vehicles},
            {"requests", requests}};
}

inline json to_json(const std::map<int, std::vector<ConstraintViolation>>& per_vehicle) {
    json arr = json::array();
    for (const auto& [vid, vs] : per_vehicle)
        arr.push_back({{"vehicle_id", vid}, {"feasible", vs.empty()}, {"violations", to_json(vs)}});
    return arr;
}

inline SearchParams search_params_from_json(const json& body, SearchParams base) {
    if (body.is_null()) return base;
    if (!body.is_object()) throw InvalidInput("plan parameters must be an object");
    auto num = [&](const char* key, auto& out) {
        if (!body.contains(key)) return;
        const json& v = body[key];
        if (!v.is_number()) throw SchemaError(key, "expected a number");
        if constexpr (std::is_integral_v<std::decay_t<decltype(out)>>) {
            if (!v.is_number_integer()) throw SchemaError(key, "expected an integer");
        }
        out = v.get<std::decay_t<decltype(out)>>();
    };
    num("iterations", base.iterations);
    num("exploration_c", base.exploration_c);
    num("rollout_depth", base.rollout_depth);
    num("seed", base.seed);
    base.validate();
    return base;
}

// ---------------------------------------------------------------------------

struct SessionOptions {
    SearchParams search;
    ExplainOptions explain;
    std::shared_ptr<const TemplateSet> templates;
};

// Seeds are derived from the scenario seed and the epoch, so a session replays
// identically given the same scenario and request sequence.
class Session {
public:
    Session(std::string id, Scenario scenario, SessionOptions options = {})
        : id_(std::move(id)), scenario_(std::make_unique<Scenario>(std::move(scenario))), options_(std::move(options)),
          feed_(*scenario_) {
        state_ = feed_.initial_state(*scenario_, seed_for(0, 0));
        status_ = state_.terminal ? SessionStatus::terminal : SessionStatus::awaiting_plan;
    }

    const std::string& id() const { return id_; }
    SessionStatus status() const { return status_; }
    long epoch() const { return epoch_; }
    const State& state() const { return state_; }
    const Scenario& scenario() const { return *scenario_; }
    const std::optional<SearchTree>& tree() const { return tree_; }
    const std::optional<Action>& recommendation() const { return recommendation_; }

    json plan(const json& params = nullptr) {
        if (status_ != SessionStatus::awaiting_plan)
            throw Conflict("session is " + std::string(to_string(status_)) + ", expected awaiting_plan");
        if (!state_.outstanding) throw Conflict("no outstanding request to plan for");
        SearchParams p = options_.search;
        p.seed = seed_for(epoch_, 1);
        p = search_params_from_json(params, p);

        auto per_vehicle = per_vehicle_violations(state_, scenario_->model);
        json out = {{"session", id_}, {"epoch", epoch_}, {"request_id", *state_.outstanding}};
        out["feasibility"] = to_json(per_vehicle);
        try {
            PlanResult r = xmcts::plan(state_, p, scenario_->model);
            tree_ = std::move(r.tree);
            recommendation_ = r.recommended;
        } catch (const InfeasibleError&) {
            tree_.reset();
            recommendation_.reset();
        }
        status_ = SessionStatus::planned;
        out["status"] = std::string(to_string(status_));
        out["infeasible"] = !recommendation_.has_value();
        if (recommendation_) {
            out["recommended_vehicle"] = recommendation_->vehicle_id;
            out["action"] = to_json(*recommendation_);
            out["iterations_run"] = tree_->iterations_run;
            json children = json::array();
            for (int c : tree_->node(tree_->root).children) {
                const SearchNode& n = tree_->node(c);
                children.push_back({{"vehicle_id", n.entering_action->vehicle_id},
                                    {"visits", n.visits},
                                    {"total_value", n.total_value},
                                    {"mean_value", n.mean_value()}});
            }
            out["root_children"] = children;
        } else {
            out["recommended_vehicle"] = nullptr;
            out["iterations_run"] = 0;
        }
        return out;
    }

    // Body: {queries: [...], epoch?} or a bare array of queries.
    json submit_queries(const json& body) {
        if (status_ != SessionStatus::planned)
            throw Conflict("session is " + std::string(to_string(status_)) + ", queries need a planned epoch");
        const json* list = &body;
        if (body.is_object()) {
            if (body.contains("epoch")) {
                if (!body["epoch"].is_number_integer()) throw SchemaError("epoch", "expected an integer");
                if (body["epoch"].get<long>() != epoch_)
                    throw Conflict("stale epoch: request targets epoch " + body["epoch"].dump() +
                                   ", current epoch is " + std::to_string(epoch_));
            }
            if (!body.contains("queries")) throw SchemaError("queries", "missing required field");
            list = &body["queries"];
        }
        if (!list->is_array()) throw SchemaError("queries", "expected an array");
        if (!tree_) throw Conflict("no search tree for this epoch (no feasible vehicle)");

        EpochContext ctx;
        ctx.tree = &*tree_;
        ctx.recommended = *recommendation_;
        ctx.model = &scenario_->model;
        ctx.epoch = epoch_;
        ctx.options = options_.explain;
        ctx.options.seed = seed_for(epoch_, 2);
        ctx.options.search = options_.search;
        ctx.templates = options_.templates.get();
        std::vector<json> queries(list->begin(), list->end());
        json out = json::array();
        for (const Explanation& e : handle_queries(ctx, queries)) out.push_back(to_json(e));
        return {{"session", id_}, {"epoch", epoch_}, {"explanations", out}};
    }

    // Body: {vehicle_id?, force?}. Without a plan recommendation and without an
    // override the outstanding request is rejected.
    json apply(const json& body = nullptr) {
        if (status_ != SessionStatus::planned)
            throw Conflict("session is " + std::string(to_string(status_)) + ", expected planned");
        std::optional<int> override_vehicle;
        bool force = false;
        if (body.is_object()) {
            if (body.contains("vehicle_id") && !body["vehicle_id"].is_null()) {
                if (!body["vehicle_id"].is_number_integer()) throw SchemaError("vehicle_id", "expected an integer");
                override_vehicle = body["vehicle_id"].get<int>();
            }
            if (body.contains("force")) {
                if (!body["force"].is_boolean()) throw SchemaError("force", "expected a boolean");
                force = body["force"].get<bool>();
            }
        } else if (!body.is_null()) {
            throw InvalidInput("apply body must be an object");
        }

        json out = {{"session", id_}, {"epoch", epoch_}};
        const TransitModel& model = scenario_->model;
        State next;
        if (override_vehicle) {
            if (!state_.find_vehicle(*override_vehicle))
                throw InvalidInput("unknown vehicle id " + std::to_string(*override_vehicle));
            const Vehicle& v = state_.vehicle(*override_vehicle);
            Action a = best_insertion(v, state_.request(*state_.outstanding), state_.time, model).action;
            auto violations = check_hard_constraints(state_, a, model);
            if (!violations.empty() && !force) throw ConstraintError(std::move(violations));
            next = apply_action(state_, a, model, force);
            out["applied"] = to_json(a);
            out["forced"] = !violations.empty();
            out["violations"] = to_json(violations);
        } else if (recommendation_) {
            next = apply_action(state_, *recommendation_, model);
            out["applied"] = to_json(*recommendation_);
        } else {
            next = reject_outstanding(state_);
            out["applied"] = nullptr;
            out["rejected_request"] = *state_.outstanding;
        }
        ++epoch_;
        state_ = feed_.next_epoch(next, seed_for(epoch_, 0));
        tree_.reset();
        recommendation_.reset();
        status_ = state_.terminal ? SessionStatus::terminal : SessionStatus::awaiting_plan;
        out["next_epoch"] = epoch_;
        out["status"] = std::string(to_string(status_));
        out["state"] = to_json(state_);
        return out;
    }

    json state_json() const {
        json locs = json::array();
        for (const auto& l : scenario_->model.network.locations())
            locs.push_back({{"id", l.id}, {"display_x", l.display_x}, {"display_y", l.display_y}});
        json j = {{"session", id_},
                  {"epoch", epoch_},
                  {"status", std::string(to_string(status_))},
                  {"state", to_json(state_)},
                  {"locations", locs}};
        j["recommendation"] = recommendation_ ? to_json(*recommendation_) : json(nullptr);
        return j;
    }

    json tree_json() const {
        if (!tree_) throw NotFound("no search tree for the current epoch");
        return dump_tree(*tree_, scenario_->model);
    }

private:
    std::string id_;
    std::unique_ptr<Scenario> scenario_; // stable address for the feed
    SessionOptions options_;
    RequestFeed feed_;
    State state_;
    long epoch_ = 0;
    SessionStatus status_ = SessionStatus::awaiting_plan;
    std::optional<SearchTree> tree_;
    std::optional<Action> recommendation_;

    std::uint64_t seed_for(long epoch, std::uint64_t stream) const {
        return derive_seed(scenario_->seed, static_cast<std::uint64_t>(epoch), stream + 100);
    }
};

// ---------------------------------------------------------------------------

struct ApiResponse {
    int status = 200;
    json body;
};

inline int http_status_for(const std::string& code) {
    if (code == "not-found") return 404;
    if (code == "conflict" || code == "invalid-state") return 409;
    if (code == "constraint-violation") return 422;
    if (code == "template-error" || code == "internal") return 500;
    return 400;
}

inline json error_body(const Error& e) {
    json detail = json::object();
    if (auto* s = dynamic_cast<const SchemaError*>(&e)) detail["path"] = s->path();
    if (auto* c = dynamic_cast<const ConstraintError*>(&e)) detail["violations"] = to_json(c->violations());
    if (auto* q = dynamic_cast<const QueryValidationError*>(&e)) detail["keys"] = q->keys();
    if (auto* x = dynamic_cast<const SyntaxError*>(&e)) detail["offset"] = x->offset();
    std::string code = e.code();
    if (code == "conflict" && std::string_view(e.what()).rfind("stale epoch", 0) == 0) code = "stale-epoch";
    return {{"code", code}, {"message", e.what()}, {"detail", detail}};
}

// Owns sessions; operations on one session are serialized by its own mutex.
class SessionManager {
public:
    explicit SessionManager(SessionOptions options = {}, std::optional<std::filesystem::path> persist_dir = {})
        : options_(std::move(options)), persist_dir_(std::move(persist_dir)) {
        if (persist_dir_) std::filesystem::create_directories(*persist_dir_);
    }

    std::string create(const json& scenario_doc) {
        Scenario sc = scenario_from_json(scenario_doc);
        std::lock_guard<std::mutex> lock(mutex_);
        std::string id = "s" + std::to_string(++counter_);
        auto slot = std::make_shared<Slot>(id, std::move(sc), options_);
        sessions_.emplace(id, slot);
        if (persist_dir_) {
            auto dir = *persist_dir_ / id;
            std::filesystem::create_directories(dir);
            std::ofstream(dir / "scenario.json") << scenario_doc.dump(2) << "\n";
            std::ofstream(dir / "events.jsonl", std::ios::trunc);
        }
        return id;
    }

    template <typename F>
    auto with_session(const std::string& id, F&& f) {
        std::shared_ptr<Slot> slot;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = sessions_.find(id);
            if (it == sessions_.end()) throw NotFound("unknown session " + id);
            slot = it->second;
        }
        std::lock_guard<std::mutex> lock(slot->mutex);
        return f(slot->session);
    }

    // Route-level entry point: method + path + body -> status + JSON body.
    ApiResponse handle(const std::string& method, const std::string& path, const std::string& body_text) {
        try {
            json body = nullptr;
            if (!body_text.empty()) {
                try {
                    body = json::parse(body_text);
                } catch (const json::parse_error& e) {
                    throw InvalidInput(std::string("malformed JSON body: ") + e.what());
                }
            }
            return route(method, path, body);
        } catch (const Error& e) {
            return {http_status_for(e.code()), error_body(e)};
        } catch (const json::exception& e) {
            return {400, {{"code", "invalid-input"}, {"message", e.what()}, {"detail", json::object()}}};
        } catch (const std::exception& e) {
            return {500, {{"code", "internal"}, {"message", e.what()}, {"detail", json::object()}}};
        }
    }

    // Rebuilds sessions from a persistence directory by replaying event logs.
    void restore() {
        if (!persist_dir_) return;
        std::vector<std::filesystem::path> dirs;
        for (const auto& entry : std::filesystem::directory_iterator(*persist_dir_))
            if (entry.is_directory() && std::filesystem::exists(entry.path() / "scenario.json"))
                dirs.push_back(entry.path());
        std::sort(dirs.begin(), dirs.end());
        for (const auto& dir : dirs) {
            std::ifstream in(dir / "scenario.json");
            Scenario sc = scenario_from_json(json::parse(in));
            std::string id = dir.filename().string();
            auto slot = std::make_shared<Slot>(id, std::move(sc), options_);
            std::ifstream events(dir / "events.jsonl");
            std::string line;
            while (std::getline(events, line)) {
                if (line.empty()) continue;
                json ev = json::parse(line);
                replay(slot->session, ev.at("op").get<std::string>(), ev.at("body"));
            }
            std::lock_guard<std::mutex> lock(mutex_);
            sessions_[id] = slot;
            if (id.size() > 1 && id[0] == 's') counter_ = std::max(counter_, std::stol(id.substr(1)));
        }
    }

    void set_scenario_dir(std::filesystem::path dir) { scenario_dir_ = std::move(dir); }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return sessions_.size();
    }

private:
    struct Slot {
        Slot(std::string id, Scenario sc, const SessionOptions& opts) : session(std::move(id), std::move(sc), opts) {}
        std::mutex mutex;
        Session session;
    };

    SessionOptions options_;
    std::optional<std::filesystem::path> persist_dir_;
    std::optional<std::filesystem::path> scenario_dir_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
    long counter_ = 0;

    // {"scenario_name": "x"} loads x.json from the scenario directory;
    // {"scenario": {...}} or a bare scenario document is used as is.
    json resolve_scenario(const json& body) const {
        if (body.is_object() && body.contains("scenario_name")) {
            if (!scenario_dir_) throw InvalidInput("no scenario directory configured");
            if (!body["scenario_name"].is_string()) throw SchemaError("scenario_name", "expected a string");
            std::string name = body["scenario_name"].get<std::string>();
            if (name.find('/') != std::string::npos || name.find("..") != std::string::npos)
                throw SchemaError("scenario_name", "invalid name");
            auto file = *scenario_dir_ / (name + ".json");
            if (!std::filesystem::exists(file)) throw NotFound("unknown scenario " + name);
            std::ifstream in(file);
            try {
                return json::parse(in);
            } catch (const json::parse_error& e) {
                throw SchemaError("$", std::string("malformed JSON: ") + e.what());
            }
        }
        if (body.is_object() && body.contains("scenario")) return body["scenario"];
        return body;
    }

    json list_scenarios() const {
        json names = json::array();
        if (scenario_dir_ && std::filesystem::is_directory(*scenario_dir_)) {
            std::vector<std::string> found;
            for (const auto& e : std::filesystem::directory_iterator(*scenario_dir_))
                if (e.path().extension() == ".json") found.push_back(e.path().stem().string());
            std::sort(found.begin(), found.end());
            for (auto& n : found) names.push_back(n);
        }
        return {{"scenarios", names}};
    }

    static json replay(Session& s, const std::string& op, const json& body) {
        if (op == "plan") return s.plan(body);
        if (op == "queries") return s.submit_queries(body);
        if (op == "apply") return s.apply(body);
        throw InvalidInput("unknown event " + op);
    }

    void log_event(const std::string& id, const std::string& op, const json& body) {
        if (!persist_dir_) return;
        std::ofstream(*persist_dir_ / id / "events.jsonl", std::ios::app) << json{{"op", op}, {"body", body}}.dump()
                                                                         << "\n";
    }

    static std::vector<std::string> split_path(const std::string& path) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : path.substr(0, path.find('?'))) {
            if (c == '/') {
                if (!cur.empty()) parts.push_back(std::move(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!cur.empty()) parts.push_back(std::move(cur));
        return parts;
    }

    ApiResponse route(const std::string& method, const std::string& path, const json& body) {
        auto parts = split_path(path);
        if (method == "GET" && parts.size() == 1 && parts[0] == "scenarios") return {200, list_scenarios()};
        if (parts.empty() || parts[0] != "sessions") throw NotFound("no route for " + path);
        if (parts.size() == 1) {
            if (method != "POST") throw NotFound("no route for " + method + " " + path);
            std::string id = create(resolve_scenario(body));
            json state = with_session(id, [](Session& s) { return s.state_json(); });
            return {201, state};
        }
        if (parts.size() != 3) throw NotFound("no route for " + path);
        const std::string& id = parts[1];
        const std::string& op = parts[2];
        if (method == "GET" && op == "state") return {200, with_session(id, [](Session& s) { return s.state_json(); })};
        if (method == "GET" && op == "tree") return {200, with_session(id, [](Session& s) { return s.tree_json(); })};
        if (method == "POST" && (op == "plan" || op == "queries" || op == "apply")) {
            json out = with_session(id, [&](Session& s) {
                json r = replay(s, op, body);
                log_event(id, op, body);
                return r;
            });
            return {200, out};
        }
        throw NotFound("no route for " + method + " " + path);
    }
};

} // namespace xmcts

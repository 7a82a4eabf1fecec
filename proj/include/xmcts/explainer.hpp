#pragma once

// Dispatcher queries -> CTL specifications -> checked, quantified and
// rendered explanations for one decision epoch.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ctl/checker.hpp"
#include "ctl/formula.hpp"
#include "json.hpp"
#include "mcts.hpp"
#include "model.hpp"
#include "templates.hpp"

namespace xmcts {

enum class QueryType { factual, contrastive, tree_expansion };
enum class Direction { late, early };

inline std::string_view to_string(QueryType q) {
    switch (q) {
    case QueryType::factual: return "factual";
    case QueryType::contrastive: return "contrastive";
    case QueryType::tree_expansion: return "tree_expansion";
    }
    return "";
}

inline std::optional<QueryType> parse_query_type(std::string_view s) {
    if (s == "factual") return QueryType::factual;
    if (s == "contrastive") return QueryType::contrastive;
    if (s == "tree_expansion") return QueryType::tree_expansion;
    return std::nullopt;
}

class QueryValidationError : public Error {
public:
    explicit QueryValidationError(std::vector<std::string> keys, const std::string& detail)
        : Error("validation-error", "invalid query bindings (" + join(keys) + "): " + detail), keys_(std::move(keys)) {}

    const std::vector<std::string>& keys() const { return keys_; }

private:
    std::vector<std::string> keys_;

    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (const auto& k : v) s += (s.empty() ? "" : ", ") + k;
        return s;
    }
};

struct Query {
    QueryType type = QueryType::factual;
    int passenger = 0;
    StopKind action = StopKind::dropoff; // factual only
    Direction direction = Direction::late;
    std::optional<int> alt_vehicle;
    std::optional<int> location; // informational ("located at")
    std::optional<int> budget;   // tree-expansion budget override
    std::optional<long> epoch;   // epoch the query was written against
    std::string raw_text;
};

namespace detail {

inline std::optional<int> as_int(const nlohmann::json& v) {
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_string()) {
        const std::string& s = v.get_ref<const std::string&>();
        int out = 0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), out);
        if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return out;
    }
    return std::nullopt;
}

inline std::string render_query_text(const Query& q) {
    std::string p = "passenger " + std::to_string(q.passenger);
    switch (q.type) {
    case QueryType::factual:
        return "Based on the current vehicle assignment, is it expected that " + p + " will be " +
               (q.action == StopKind::pickup ? "picked up" : "dropped off") + " too " +
               (q.direction == Direction::late ? "late" : "early") + "?";
    case QueryType::contrastive:
        return "Why wasn't " + p + " assigned to vehicle " + std::to_string(*q.alt_vehicle) +
               (q.location ? " located at " + std::to_string(*q.location) : std::string()) + "?";
    case QueryType::tree_expansion:
        return "Can you tell me more about assigning " + p + " to vehicle " + std::to_string(*q.alt_vehicle) + "?";
    }
    return {};
}

} // namespace detail

// Validates bindings against the query template and the epoch state.
inline Query instantiate_query(QueryType qtype, const nlohmann::json& bindings, const State& state) {
    if (!bindings.is_object()) throw QueryValidationError({"bindings"}, "bindings must be an object");
    std::vector<std::string> bad;
    std::vector<std::string> why;
    Query q;
    q.type = qtype;

    auto p = bindings.contains("passenger") ? detail::as_int(bindings["passenger"]) : std::nullopt;
    if (!p || !state.find_request(*p)) {
        bad.push_back("passenger");
        why.push_back(bindings.contains("passenger") ? "unknown passenger" : "missing passenger");
    } else {
        q.passenger = *p;
    }

    if (qtype == QueryType::factual) {
        std::string action = bindings.value("action", std::string());
        if (action == "pickup")
            q.action = StopKind::pickup;
        else if (action == "dropoff")
            q.action = StopKind::dropoff;
        else {
            bad.push_back("action");
            why.push_back("action must be pickup or dropoff");
        }
        std::string dir = bindings.value("direction", std::string());
        if (dir == "late")
            q.direction = Direction::late;
        else if (dir == "early")
            q.direction = Direction::early;
        else {
            bad.push_back("direction");
            why.push_back("direction must be late or early");
        }
    } else {
        auto v = bindings.contains("alt_vehicle") ? detail::as_int(bindings["alt_vehicle"]) : std::nullopt;
        if (!v || !state.find_vehicle(*v)) {
            bad.push_back("alt_vehicle");
            why.push_back(bindings.contains("alt_vehicle") ? "unknown vehicle " + bindings["alt_vehicle"].dump()
                                                           : "missing alt_vehicle");
        } else {
            q.alt_vehicle = *v;
        }
        bool passenger_ok = std::find(bad.begin(), bad.end(), "passenger") == bad.end();
        if (passenger_ok && state.outstanding && q.passenger != *state.outstanding) {
            bad.push_back("passenger");
            why.push_back("alternative assignments concern the outstanding request " + std::to_string(*state.outstanding));
        }
        if (qtype == QueryType::contrastive && bindings.contains("location") && !bindings["location"].is_null()) {
            auto loc = detail::as_int(bindings["location"]);
            if (!loc) {
                bad.push_back("location");
                why.push_back("location must be a location id");
            } else {
                q.location = *loc;
            }
        }
    }
    if (!bad.empty()) {
        std::string detail;
        for (const auto& w : why) detail += (detail.empty() ? "" : "; ") + w;
        throw QueryValidationError(bad, detail);
    }
    q.raw_text = detail::render_query_text(q);
    return q;
}

// {qtype, bindings{...}, epoch?, budget?}
inline Query query_from_json(const nlohmann::json& doc, const State& state) {
    if (!doc.is_object()) throw QueryValidationError({"query"}, "query must be an object");
    auto qt = doc.contains("qtype") && doc["qtype"].is_string() ? parse_query_type(doc["qtype"].get<std::string>())
                                                                : std::nullopt;
    if (!qt) throw QueryValidationError({"qtype"}, "qtype must be factual, contrastive or tree_expansion");
    Query q = instantiate_query(*qt, doc.contains("bindings") ? doc["bindings"] : nlohmann::json(), state);
    if (doc.contains("epoch") && doc["epoch"].is_number_integer()) q.epoch = doc["epoch"].get<long>();
    const nlohmann::json* budget = doc.contains("budget") ? &doc["budget"] : nullptr;
    if (!budget && doc.contains("bindings") && doc["bindings"].contains("budget")) budget = &doc["bindings"]["budget"];
    if (budget) {
        auto b = detail::as_int(*budget);
        if (!b || *b < 0) throw QueryValidationError({"budget"}, "budget must be a non-negative integer");
        q.budget = *b;
    }
    return q;
}

// ---------------------------------------------------------------------------
// Specifications

enum class SpecType { efficiency, hard_constraint, soundness };

inline std::string_view to_string(SpecType t) {
    switch (t) {
    case SpecType::efficiency: return "efficiency";
    case SpecType::hard_constraint: return "hard_constraint";
    case SpecType::soundness: return "soundness";
    }
    return "";
}

struct SpecEntry {
    std::string id;
    ctl::FormulaPtr formula;
    SpecType type = SpecType::efficiency;
    StopKind stop = StopKind::dropoff; // which stop t_est refers to
    Direction direction = Direction::late;
};

using SpecBundle = std::vector<SpecEntry>;

namespace detail {

inline SpecEntry timing_spec(StopKind stop, Direction dir) {
    std::string base = stop == StopKind::pickup ? "phi1" : "phi2";
    std::string var = stop == StopKind::pickup ? "t_p" : "t_d";
    std::string text = dir == Direction::late ? "AG (t_est <= " + var + " + t_a)" : "AG (t_est >= " + var + " - t_a)";
    return {dir == Direction::late ? base : base + "_early", ctl::parse_formula(text), SpecType::efficiency, stop, dir};
}

inline SpecEntry spec(std::string id, std::string_view text, SpecType type) {
    return {std::move(id), ctl::parse_formula(text), type, StopKind::dropoff, Direction::late};
}

} // namespace detail

// Hard constraints come first in every bundle: they gate the efficiency checks.
inline SpecBundle query_to_formulas(const Query& q, const ModelConfig& cfg) {
    SpecBundle b;
    if (q.type == QueryType::factual) {
        b.push_back(detail::timing_spec(q.action, q.direction));
        return b;
    }
    b.push_back(detail::spec("phi3", "AG (v_o <= v_c)", SpecType::hard_constraint));
    if (cfg.models_fuel) b.push_back(detail::spec("phi4", "AG (v_fr <= v_ft)", SpecType::hard_constraint));
    b.push_back(detail::timing_spec(StopKind::pickup, Direction::late));
    b.push_back(detail::timing_spec(StopKind::dropoff, Direction::late));
    if (q.type == QueryType::tree_expansion) {
        b.push_back(detail::timing_spec(StopKind::dropoff, Direction::early));
        b.push_back(detail::spec("phi5", "AG (v_tt <= v_rt)", SpecType::soundness));
        b.push_back(detail::spec("phi6", "AG (theta_s <= theta_d)", SpecType::soundness));
        b.push_back(detail::spec("phi7", "AF (r_cs = dropped-off)", SpecType::soundness));
    }
    return b;
}

struct SpecOutcome {
    std::string id;
    std::string formula_text;
    SpecType type = SpecType::efficiency;
    StopKind stop = StopKind::dropoff;
    Direction direction = Direction::late;
    bool skipped = false;
    bool verdict = true;
    std::optional<ctl::Quantification> quantification;
};

// Checks one specification on the subtree that realizes the queried assignment.
inline SpecOutcome exp_gen(const SearchTree& tree, const SpecEntry& entry, int request_id, int vehicle_id,
                           int subtree_root, const TransitModel& model) {
    LabelContext ctx{request_id, vehicle_id, entry.stop};
    ctl::LabeledTree labeled = export_labeled_tree(tree, ctx, model, subtree_root);
    SpecOutcome out;
    out.id = entry.id;
    out.formula_text = ctl::to_string(entry.formula);
    out.type = entry.type;
    out.stop = entry.stop;
    out.direction = entry.direction;
    out.verdict = ctl::check(labeled, entry.formula).root_verdict;
    if (ctl::quantifiable_atom(*entry.formula)) out.quantification = ctl::quantify_violations(labeled, entry.formula);
    return out;
}

struct ScoreComparison {
    double recommended_score = 0.0; // total value of the root child
    double alternative_score = 0.0;
    double recommended_mean = 0.0;
    double alternative_mean = 0.0;
    int recommended_visits = 0;
    int alternative_visits = 0;
    std::optional<double> service_rate_improvement_pct;
    std::optional<double> punctuality_improvement_pct;
};

namespace detail {

// Relative gain of `a` over `b`; equals 100 * (a / b - 1) when b > 0.
inline std::optional<double> improvement_pct(double a, double b) {
    if (b == 0.0) return a == 0.0 ? std::optional<double>(0.0) : std::nullopt;
    return 100.0 * (a - b) / std::abs(b);
}

} // namespace detail

inline ScoreComparison compare_actions(const SearchTree& tree, const Action& recommended, const Action& alternative) {
    auto rec = tree.child_for_vehicle(tree.root, recommended.vehicle_id);
    auto alt = tree.child_for_vehicle(tree.root, alternative.vehicle_id);
    if (!rec || !alt) throw InvalidInput("both actions must be root children");
    const SearchNode& r = tree.node(*rec);
    const SearchNode& a = tree.node(*alt);
    if (r.visits == 0 || a.visits == 0)
        throw InvalidState("comparison deferred: a compared child has no visits yet");
    ScoreComparison c;
    c.recommended_score = r.total_value;
    c.alternative_score = a.total_value;
    c.recommended_mean = r.mean_value();
    c.alternative_mean = a.mean_value();
    c.recommended_visits = r.visits;
    c.alternative_visits = a.visits;
    c.service_rate_improvement_pct = detail::improvement_pct(r.service_sum / r.visits, a.service_sum / a.visits);
    c.punctuality_improvement_pct =
        detail::improvement_pct(r.punctuality_sum / r.visits, a.punctuality_sum / a.visits);
    return c;
}

struct Explanation {
    Query query;
    std::vector<SpecOutcome> outcomes;
    std::optional<ScoreComparison> comparison;
    std::optional<long> new_iterations;
    long scenario_count = 0;
    std::optional<int> stop_count;     // stops ahead of the queried stop
    std::optional<Minutes> desired_time;
    std::string text;
    std::optional<std::string> error_code;
    std::optional<std::string> error_message;

    const SpecOutcome* outcome(std::string_view id) const {
        for (const auto& o : outcomes)
            if (o.id == id) return &o;
        return nullptr;
    }
};

// ---------------------------------------------------------------------------
// Rendering

inline std::string format_clock(Minutes offset, const ModelConfig& cfg) {
    Minutes t = ((cfg.start_of_day + offset) % (24 * 60) + 24 * 60) % (24 * 60);
    Minutes h = t / 60;
    Minutes m = t % 60;
    Minutes h12 = h % 12 == 0 ? 12 : h % 12;
    std::string mm = (m < 10 ? "0" : "") + std::to_string(m);
    return std::to_string(h12) + ":" + mm + (h < 12 ? " AM" : " PM");
}

inline std::string format_int(double x) { return std::to_string(round_half_up(x)); }

namespace detail {

inline std::string stop_noun(StopKind k) { return k == StopKind::pickup ? "pick-up" : "drop-off"; }

inline void add_summary_slots(SlotMap& s, const ctl::QuantitativeSummary& q) {
    s["violation_pct"] = format_int(q.violation_pct);
    if (q.avg_degree) s["avg_degree"] = format_int(*q.avg_degree);
    if (q.min_degree) s["min_degree"] = format_int(*q.min_degree);
    if (q.max_degree) s["max_degree"] = format_int(*q.max_degree);
}

inline bool violated(const SpecOutcome& o) { return !o.skipped && o.quantification && o.quantification->summary.violating_nodes > 0; }

inline std::string render_factual(const Explanation& e, const ModelConfig& cfg, const TemplateSet& t) {
    const SpecOutcome& o = e.outcomes.at(0);
    SlotMap s;
    s["stop_noun"] = stop_noun(o.stop);
    s["scenario_count"] = std::to_string(e.scenario_count);
    if (e.desired_time) s["desired_time"] = format_clock(*e.desired_time, cfg);
    if (e.stop_count) s["stop_count"] = std::to_string(*e.stop_count);
    s["deviation"] = o.direction == Direction::late ? "late" : "early";
    std::string text = t.render("factual_intro", s) + "\n";
    if (violated(o)) {
        add_summary_slots(s, o.quantification->summary);
        text += t.render(o.direction == Direction::late ? "factual_late" : "factual_early", s);
    } else {
        text += t.render("factual_satisfied", s);
    }
    return text;
}

inline std::string render_hard(const Explanation& e, const TemplateSet& t, std::string_view intro,
                               bool expansion) {
    std::string text;
    if (!intro.empty()) text = t.render(intro, {});
    for (const auto& o : e.outcomes) {
        if (o.type != SpecType::hard_constraint || !violated(o)) continue;
        SlotMap s;
        add_summary_slots(s, o.quantification->summary);
        std::string name = o.id == "phi4" ? (expansion ? "expansion_fuel" : "contrastive_fuel")
                                           : (expansion ? "expansion_hard" : "contrastive_capacity");
        if (expansion) return t.render(name, s);
        text += "\n" + t.render(name, s);
    }
    return text;
}

inline bool hard_violation(const Explanation& e) {
    for (const auto& o : e.outcomes)
        if (o.type == SpecType::hard_constraint && !o.verdict) return true;
    return false;
}

inline std::string render_contrastive(const Explanation& e, const TemplateSet& t) {
    if (hard_violation(e)) return render_hard(e, t, "contrastive_hard_intro", false);
    if (!e.comparison) throw TemplateError("missing slot 'recommended_score'", "recommended_score");
    const ScoreComparison& c = *e.comparison;
    SlotMap s;
    s["recommended_score"] = format_int(c.recommended_score);
    s["alternative_score"] = format_int(c.alternative_score);
    s["recommended_visits"] = std::to_string(c.recommended_visits);
    s["alternative_visits"] = std::to_string(c.alternative_visits);
    if (round_half_up(c.alternative_score) >= round_half_up(c.recommended_score)) return t.render("contrastive_close", s);

    std::string text = t.render("contrastive_scores", s);
    std::vector<std::string> bullets;
    if (c.service_rate_improvement_pct && round_half_up(*c.service_rate_improvement_pct) > 0) {
        s["service_rate_improvement"] = format_int(*c.service_rate_improvement_pct);
        bullets.push_back(t.render("contrastive_more_trips", s));
    }
    if (c.punctuality_improvement_pct && round_half_up(*c.punctuality_improvement_pct) > 0) {
        s["punctuality_improvement"] = format_int(*c.punctuality_improvement_pct);
        bullets.push_back(t.render("contrastive_on_time", s));
    }
    if (bullets.size() == 2) text += " " + t.render("contrastive_reasons_two", s);
    if (bullets.size() == 1) text += " " + t.render("contrastive_reasons_one", s);
    for (const auto& b : bullets) text += "\n" + b;
    return text;
}

inline std::string render_expansion(const Explanation& e, const TemplateSet& t) {
    SlotMap s;
    s["new_iterations"] = e.new_iterations ? std::to_string(*e.new_iterations) : std::string();
    if (!e.new_iterations) throw TemplateError("missing slot 'new_iterations'", "new_iterations");
    std::string text = t.render("expansion_intro", s) + "\n" + t.render("expansion_scenarios", s);
    bool worse = !e.comparison || e.comparison->alternative_mean < e.comparison->recommended_mean;
    text += " " + t.render(worse ? "expansion_still_worse" : "expansion_competitive", s);

    if (hard_violation(e)) return text + " " + render_hard(e, t, "", true);

    // Report the timing deviation seen most often in the new scenarios.
    const SpecOutcome* pick = nullptr;
    for (const auto& o : e.outcomes) {
        if (o.type != SpecType::efficiency || !violated(o)) continue;
        if (!pick || o.quantification->summary.violation_pct > pick->quantification->summary.violation_pct) pick = &o;
    }
    if (!pick) return text + " " + t.render("expansion_clear", s);
    add_summary_slots(s, pick->quantification->summary);
    s["deviation"] = pick->direction == Direction::late ? "late" : "early";
    s["stop_noun"] = stop_noun(pick->stop);
    return text + " " + t.render("expansion_timing", s);
}

} // namespace detail

inline std::string render_explanation(const Explanation& e, const ModelConfig& cfg, const TemplateSet& templates = {}) {
    switch (e.query.type) {
    case QueryType::factual: return detail::render_factual(e, cfg, templates);
    case QueryType::contrastive: return detail::render_contrastive(e, templates);
    case QueryType::tree_expansion: return detail::render_expansion(e, templates);
    }
    return {};
}

// ---------------------------------------------------------------------------
// Query handling for one planned epoch

struct ExplainOptions {
    int expansion_budget = 74;
    int contrastive_budget = 25;
    std::uint64_t seed = 0;
    SearchParams search; // exploration constant and rollout depth for added search
};

struct EpochContext {
    SearchTree* tree = nullptr;
    Action recommended;
    const TransitModel* model = nullptr;
    long epoch = 0;
    ExplainOptions options;
    const TemplateSet* templates = nullptr;
};

namespace detail {

inline std::optional<int> stops_before(const State& s, int request_id, StopKind kind) {
    const Request* r = s.find_request(request_id);
    if (!r || !r->vehicle) return std::nullopt;
    const Vehicle& v = s.vehicle(*r->vehicle);
    int n = 0;
    for (const auto& st : v.route) {
        if (st.request_id == request_id && st.kind == kind) return n;
        if (st.request_id != request_id) ++n;
    }
    return std::nullopt;
}

inline void fill_explanation(Explanation& ex, EpochContext& ctx) {
    SearchTree& tree = *ctx.tree;
    const TransitModel& model = *ctx.model;
    const Query& q = ex.query;

    int subtree = 0;
    int vehicle = 0;
    if (q.type == QueryType::factual) {
        subtree = *tree.child_for_vehicle(tree.root, ctx.recommended.vehicle_id);
        const Request& r = tree.node(subtree).state.request(q.passenger);
        if (!r.vehicle) throw InvalidState("passenger " + std::to_string(q.passenger) + " is not assigned");
        vehicle = *r.vehicle;
        ex.stop_count = stops_before(tree.node(subtree).state, q.passenger, q.action);
        ex.desired_time = q.action == StopKind::pickup ? r.pickup_time : r.dropoff_time;
    } else {
        vehicle = *q.alt_vehicle;
        subtree = ensure_root_child(tree, vehicle, model);
        std::uint64_t seed = derive_seed(ctx.options.seed, static_cast<std::uint64_t>(ctx.epoch),
                                         static_cast<std::uint64_t>(tree.nodes.size()));
        if (q.type == QueryType::tree_expansion) {
            int budget = q.budget.value_or(ctx.options.expansion_budget);
            ex.new_iterations = expand_alternative(tree, subtree, budget, seed, model, ctx.options.search).new_iterations;
        } else if (tree.node(subtree).visits == 0) {
            expand_alternative(tree, subtree, ctx.options.contrastive_budget, seed, model, ctx.options.search);
        }
        ex.stop_count = stops_before(tree.node(subtree).state, q.passenger, StopKind::dropoff);
        ex.desired_time = tree.node(tree.root).state.request(q.passenger).dropoff_time;
    }
    ex.scenario_count = tree.iterations_run;

    bool hard_failed = false;
    for (const SpecEntry& entry : query_to_formulas(q, model.config)) {
        if (entry.type == SpecType::efficiency && hard_failed) {
            SpecOutcome skipped;
            skipped.id = entry.id;
            skipped.formula_text = ctl::to_string(entry.formula);
            skipped.type = entry.type;
            skipped.stop = entry.stop;
            skipped.direction = entry.direction;
            skipped.skipped = true;
            ex.outcomes.push_back(std::move(skipped));
            continue;
        }
        SpecOutcome o = exp_gen(tree, entry, q.passenger, vehicle, subtree, model);
        if (o.type == SpecType::hard_constraint && !o.verdict) hard_failed = true;
        ex.outcomes.push_back(std::move(o));
    }

    if (q.type != QueryType::factual && tree.node(subtree).visits > 0) {
        Action alt = *tree.node(subtree).entering_action;
        ex.comparison = compare_actions(tree, ctx.recommended, alt);
    }
    static const TemplateSet builtin;
    ex.text = render_explanation(ex, model.config, ctx.templates ? *ctx.templates : builtin);
}

} // namespace detail

// One Explanation per query, in order. Errors stay inside their Explanation.
inline std::vector<Explanation> handle_queries(EpochContext& ctx, const std::vector<nlohmann::json>& queries) {
    std::vector<Explanation> out;
    for (const auto& doc : queries) {
        // Expansions grow the node vector, so look the root up per query.
        const State& root_state = ctx.tree->node(ctx.tree->root).state;
        Explanation ex;
        try {
            if (doc.is_object() && doc.contains("qtype") && doc["qtype"].is_string())
                if (auto qt = parse_query_type(doc["qtype"].get<std::string>())) ex.query.type = *qt;
            ex.query = query_from_json(doc, root_state);
            if (ex.query.epoch && *ex.query.epoch != ctx.epoch)
                throw Conflict("stale epoch: query targets epoch " + std::to_string(*ex.query.epoch) +
                               ", current epoch is " + std::to_string(ctx.epoch));
            detail::fill_explanation(ex, ctx);
        } catch (const Error& e) {
            ex.outcomes.clear();
            ex.comparison.reset();
            ex.text.clear();
            ex.error_code = e.code() == "conflict" ? std::string("stale-epoch") : e.code();
            ex.error_message = e.what();
        }
        out.push_back(std::move(ex));
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const ctl::QuantitativeSummary& q) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"applicable", q.applicable_nodes}, {"violating", q.violating_nodes}, {"pct", q.violation_pct},
            {"avg", opt(q.avg_degree)},         {"min", opt(q.min_degree)},         {"max", opt(q.max_degree)},
            {"scenarios", q.scenario_count}};
}

inline nlohmann::json to_json(const ScoreComparison& c) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"recommended_score", c.recommended_score},
            {"alternative_score", c.alternative_score},
            {"recommended_mean", c.recommended_mean},
            {"alternative_mean", c.alternative_mean},
            {"recommended_visits", c.recommended_visits},
            {"alternative_visits", c.alternative_visits},
            {"service_rate_improvement_pct", opt(c.service_rate_improvement_pct)},
            {"punctuality_improvement_pct", opt(c.punctuality_improvement_pct)}};
}

inline nlohmann::json to_json(const Explanation& e) {
    nlohmann::json j;
    j["qtype"] = std::string(to_string(e.query.type));
    if (e.error_code) {
        j["error"] = {{"code", *e.error_code}, {"message", e.error_message.value_or("")}};
        j["verdicts"] = nlohmann::json::object();
        j["summaries"] = nlohmann::json::object();
        j["text"] = "";
        return j;
    }
    j["query"] = e.query.raw_text;
    nlohmann::json verdicts = nlohmann::json::object();
    nlohmann::json summaries = nlohmann::json::object();
    nlohmann::json formulas = nlohmann::json::object();
    for (const auto& o : e.outcomes) {
        formulas[o.id] = {{"formula", o.formula_text}, {"spec_type", std::string(to_string(o.type))}};
        if (o.skipped) {
            verdicts[o.id] = "skipped";
            continue;
        }
        verdicts[o.id] = o.verdict;
        if (o.quantification) summaries[o.id] = to_json(o.quantification->summary);
    }
    j["verdicts"] = verdicts;
    j["summaries"] = summaries;
    j["formulas"] = formulas;
    if (e.comparison) j["comparison"] = to_json(*e.comparison);
    if (e.new_iterations) j["new_iterations"] = *e.new_iterations;
    j["scenarios"] = e.scenario_count;
    if (e.stop_count) j["stop_count"] = *e.stop_count;
    if (e.desired_time) j["desired_time"] = *e.desired_time;
    j["text"] = e.text;
    return j;
}

} // namespace xmcts

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "support.hpp"
#include "xmcts/http.hpp"
#include "xmcts/service.hpp"

using namespace xmcts;
using namespace testing_support;
using nlohmann::json;

namespace {

json load_doc(const std::string& path) {
    std::ifstream in(path);
    return json::parse(in);
}

json fixture_doc() { return load_doc(data_path("fixture.json")); }
json capacity_doc() { return load_doc(data_path("capacity.json")); }

SessionOptions fast_options() {
    SessionOptions o;
    o.search.iterations = 60;
    return o;
}

json only_zero_capacity() {
    json d = capacity_doc();
    d["vehicles"] = json::array({{{"id", 1}, {"capacity", 0}, {"location", 6}}});
    return d;
}

std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    return dir;
}

} // namespace

TEST(Session, StateMachine) {
    Session s("t", scenario_from_json(fixture_doc()), fast_options());
    EXPECT_EQ(s.status(), SessionStatus::awaiting_plan);
    EXPECT_THROW(s.apply(), Conflict);
    EXPECT_THROW(s.submit_queries(json::array()), Conflict);
    EXPECT_THROW(s.tree_json(), NotFound);

    json p = s.plan();
    EXPECT_EQ(p["status"], "planned");
    EXPECT_FALSE(p["infeasible"].get<bool>());
    EXPECT_EQ(p["request_id"], 1);
    EXPECT_EQ(s.status(), SessionStatus::planned);
    EXPECT_THROW(s.plan(), Conflict);
    EXPECT_NO_THROW(s.tree_json());

    json a = s.apply();
    EXPECT_EQ(a["applied"]["vehicle_id"], p["recommended_vehicle"]);
    EXPECT_EQ(a["next_epoch"], 1);
    EXPECT_EQ(s.epoch(), 1);
    EXPECT_EQ(s.status(), SessionStatus::awaiting_plan);
    EXPECT_EQ(*s.state().outstanding, 2);
    const Request& first = s.state().request(1);
    EXPECT_EQ(first.vehicle, p["recommended_vehicle"].get<int>());
}

TEST(Session, InfeasibleEpochIsReportedAndRejected) {
    Session s("t", scenario_from_json(only_zero_capacity()), fast_options());
    json p = s.plan();
    EXPECT_TRUE(p["infeasible"].get<bool>());
    EXPECT_TRUE(p["recommended_vehicle"].is_null());
    ASSERT_EQ(p["feasibility"].size(), 1u);
    EXPECT_EQ(p["feasibility"][0]["vehicle_id"], 1);
    EXPECT_FALSE(s.recommendation());
    EXPECT_THROW(s.submit_queries(json::array()), Conflict);

    json a = s.apply();
    EXPECT_TRUE(a["applied"].is_null());
    EXPECT_EQ(a["rejected_request"], 1);
    EXPECT_EQ(s.state().request(1).status, RequestStatus::waiting);
    EXPECT_FALSE(s.state().request(1).vehicle);
}

TEST(Session, OverrideNeedsForceForHardViolations) {
    Session s("t", scenario_from_json(capacity_doc()), fast_options());
    json p = s.plan();
    EXPECT_EQ(p["recommended_vehicle"], 2);
    try {
        s.apply({{"vehicle_id", 1}});
        FAIL() << "capacity violation applied without force";
    } catch (const ConstraintError& e) {
        ASSERT_FALSE(e.violations().empty());
        EXPECT_EQ(e.violations()[0].vehicle_id, 1);
    }
    EXPECT_EQ(s.status(), SessionStatus::planned);
    json a = s.apply({{"vehicle_id", 1}, {"force", true}});
    EXPECT_TRUE(a["forced"].get<bool>());
    EXPECT_FALSE(a["violations"].empty());
    EXPECT_EQ(s.state().request(1).vehicle, 1);
}

TEST(Session, SameScenarioSameDecisions) {
    auto run = [] {
        Session s("t", scenario_from_json(fixture_doc()), fast_options());
        std::vector<std::string> out;
        for (int e = 0; e < 3 && s.status() == SessionStatus::awaiting_plan; ++e) {
            out.push_back(s.plan().dump());
            out.push_back(s.tree_json().dump());
            s.apply();
        }
        out.push_back(s.state_json().dump());
        return out;
    };
    EXPECT_EQ(run(), run());
}

TEST(Api, HttpStatusMapping) {
    EXPECT_EQ(http_status_for("not-found"), 404);
    EXPECT_EQ(http_status_for("conflict"), 409);
    EXPECT_EQ(http_status_for("invalid-state"), 409);
    EXPECT_EQ(http_status_for("constraint-violation"), 422);
    EXPECT_EQ(http_status_for("template-error"), 500);
    EXPECT_EQ(http_status_for("internal"), 500);
    EXPECT_EQ(http_status_for("invalid-input"), 400);
    EXPECT_EQ(http_status_for("syntax-error"), 400);
    EXPECT_EQ(http_status_for("validation-error"), 400);
}

TEST(Api, SessionLifecycle) {
    SessionManager m(fast_options());
    m.set_scenario_dir(source_path("scenarios"));

    auto list = m.handle("GET", "/scenarios", "");
    EXPECT_EQ(list.status, 200);
    EXPECT_EQ(list.body["scenarios"], json::array({"capacity", "fixture", "fuel"}));

    auto created = m.handle("POST", "/sessions", R"({"scenario_name": "fixture"})");
    ASSERT_EQ(created.status, 201) << created.body.dump();
    EXPECT_EQ(created.body["session"], "s1");
    EXPECT_EQ(created.body["status"], "awaiting_plan");
    EXPECT_EQ(created.body["locations"].size(), 25u);

    auto state = m.handle("GET", "/sessions/s1/state", "");
    EXPECT_EQ(state.status, 200);
    EXPECT_EQ(state.body, created.body);

    auto tree = m.handle("GET", "/sessions/s1/tree", "");
    EXPECT_EQ(tree.status, 404);
    EXPECT_EQ(tree.body["code"], "not-found");

    auto plan = m.handle("POST", "/sessions/s1/plan", R"({"iterations": 40})");
    ASSERT_EQ(plan.status, 200) << plan.body.dump();
    EXPECT_EQ(plan.body["iterations_run"], 40);

    tree = m.handle("GET", "/sessions/s1/tree", "");
    ASSERT_EQ(tree.status, 200);
    EXPECT_EQ(tree.body["iterations_run"], 40);
    EXPECT_FALSE(tree.body["nodes"].empty());

    auto again = m.handle("POST", "/sessions/s1/plan", "");
    EXPECT_EQ(again.status, 409);
    EXPECT_EQ(again.body["code"], "conflict");

    int rec = plan.body["recommended_vehicle"].get<int>();
    int alt = rec == 1 ? 2 : 1;
    json queries = {{"epoch", 0},
                    {"queries",
                     {{{"qtype", "factual"},
                        {"bindings", {{"passenger", 1}, {"action", "dropoff"}, {"direction", "late"}}}},
                      {{"qtype", "contrastive"}, {"bindings", {{"passenger", 1}, {"alt_vehicle", alt}}}},
                      {{"qtype", "contrastive"}, {"bindings", {{"passenger", 1}, {"alt_vehicle", "red"}}}}}}};
    auto answered = m.handle("POST", "/sessions/s1/queries", queries.dump());
    ASSERT_EQ(answered.status, 200) << answered.body.dump();
    const json& ex = answered.body["explanations"];
    ASSERT_EQ(ex.size(), 3u);
    EXPECT_EQ(ex[0]["qtype"], "factual");
    EXPECT_FALSE(ex[0]["text"].get<std::string>().empty()) << ex[0].dump(1);
    EXPECT_EQ(ex[1]["qtype"], "contrastive");
    EXPECT_EQ(ex[2]["error"]["code"], "validation-error");

    queries["epoch"] = 5;
    auto stale = m.handle("POST", "/sessions/s1/queries", queries.dump());
    EXPECT_EQ(stale.status, 409);
    EXPECT_EQ(stale.body["code"], "stale-epoch");

    auto applied = m.handle("POST", "/sessions/s1/apply", "");
    ASSERT_EQ(applied.status, 200);
    EXPECT_EQ(applied.body["next_epoch"], 1);
    EXPECT_EQ(m.handle("GET", "/sessions/s1/tree", "").status, 404);
}

TEST(Api, Errors) {
    SessionManager m(fast_options());
    auto unknown = m.handle("GET", "/sessions/s9/state", "");
    EXPECT_EQ(unknown.status, 404);
    EXPECT_EQ(unknown.body["code"], "not-found");
    EXPECT_EQ(m.handle("GET", "/nowhere", "").status, 404);

    json doc = fixture_doc();
    doc["locations"][1]["id"] = 0;
    auto schema = m.handle("POST", "/sessions", json{{"scenario", doc}}.dump());
    EXPECT_EQ(schema.status, 400);
    EXPECT_EQ(schema.body["code"], "invalid-input");
    EXPECT_EQ(schema.body["detail"]["path"], "locations[1].id");

    auto malformed = m.handle("POST", "/sessions", "{not json");
    EXPECT_EQ(malformed.status, 400);
    EXPECT_EQ(malformed.body["code"], "invalid-input");

    auto named = m.handle("POST", "/sessions", R"({"scenario_name": "fixture"})");
    EXPECT_EQ(named.status, 400); // no scenario directory configured

    ASSERT_EQ(m.handle("POST", "/sessions", capacity_doc().dump()).status, 201);
    EXPECT_EQ(m.handle("POST", "/sessions/s1/apply", "").status, 409);
    ASSERT_EQ(m.handle("POST", "/sessions/s1/plan", "").status, 200);
    auto forced = m.handle("POST", "/sessions/s1/apply", R"({"vehicle_id": 1})");
    EXPECT_EQ(forced.status, 422);
    EXPECT_EQ(forced.body["code"], "constraint-violation");
    EXPECT_FALSE(forced.body["detail"]["violations"].empty());
    auto bad_vehicle = m.handle("POST", "/sessions/s1/apply", R"({"vehicle_id": 42})");
    EXPECT_EQ(bad_vehicle.status, 400);
    auto bad_force = m.handle("POST", "/sessions/s1/apply", R"({"vehicle_id": 1, "force": "yes"})");
    EXPECT_EQ(bad_force.status, 400);
    EXPECT_EQ(bad_force.body["detail"]["path"], "force");
    auto bad_params = m.handle("POST", "/sessions", capacity_doc().dump());
    ASSERT_EQ(bad_params.status, 201);
    EXPECT_EQ(m.handle("POST", "/sessions/s2/plan", R"({"iterations": -3})").status, 400);
}

TEST(Api, RestoreReplaysEventLog) {
    auto dir = fresh_dir("xmcts_persist_test");
    json before_state;
    json before_tree;
    {
        SessionManager m(fast_options(), dir);
        ASSERT_EQ(m.handle("POST", "/sessions", fixture_doc().dump()).status, 201);
        ASSERT_EQ(m.handle("POST", "/sessions/s1/plan", "").status, 200);
        ASSERT_EQ(m.handle("POST", "/sessions/s1/apply", "").status, 200);
        ASSERT_EQ(m.handle("POST", "/sessions/s1/plan", "").status, 200);
        // Failed operations are not logged.
        EXPECT_EQ(m.handle("POST", "/sessions/s1/plan", "").status, 409);
        before_state = m.handle("GET", "/sessions/s1/state", "").body;
        before_tree = m.handle("GET", "/sessions/s1/tree", "").body;
    }
    SessionManager restored(fast_options(), dir);
    restored.restore();
    EXPECT_EQ(restored.size(), 1u);
    EXPECT_EQ(restored.handle("GET", "/sessions/s1/state", "").body, before_state);
    EXPECT_EQ(restored.handle("GET", "/sessions/s1/tree", "").body, before_tree);
    auto next = restored.handle("POST", "/sessions", fixture_doc().dump());
    EXPECT_EQ(next.body["session"], "s2");
    std::filesystem::remove_all(dir);
}

TEST(Http, RoundTripOverLoopback) {
    SessionManager m(fast_options());
    m.set_scenario_dir(source_path("scenarios"));
    HttpServer server(m);
    int port = server.bind("127.0.0.1", 0);
    ASSERT_GT(port, 0);
    std::thread t([&] { server.listen(); });
    server.wait_until_ready();

    httplib::Client cli("127.0.0.1", port);
    auto list = cli.Get("/scenarios");
    ASSERT_TRUE(list);
    EXPECT_EQ(list->status, 200);
    EXPECT_EQ(list->get_header_value("Access-Control-Allow-Origin"), "*");
    EXPECT_EQ(list->get_header_value("Content-Type"), "application/json");

    auto created = cli.Post("/sessions", R"({"scenario_name": "capacity"})", "application/json");
    ASSERT_TRUE(created);
    EXPECT_EQ(created->status, 201);
    auto plan = cli.Post("/sessions/s1/plan", "", "application/json");
    ASSERT_TRUE(plan);
    EXPECT_EQ(plan->status, 200);
    EXPECT_EQ(json::parse(plan->body)["recommended_vehicle"], 2);
    auto tree = cli.Get("/sessions/s1/tree");
    ASSERT_TRUE(tree);
    EXPECT_EQ(tree->status, 200);
    auto forced = cli.Post("/sessions/s1/apply", R"({"vehicle_id": 1})", "application/json");
    ASSERT_TRUE(forced);
    EXPECT_EQ(forced->status, 422);
    auto missing = cli.Get("/sessions/s7/state");
    ASSERT_TRUE(missing);
    EXPECT_EQ(missing->status, 404);
    auto preflight = cli.Options("/sessions");
    ASSERT_TRUE(preflight);
    EXPECT_EQ(preflight->status, 204);
    EXPECT_EQ(preflight->get_header_value("Access-Control-Allow-Origin"), "*");

    server.stop();
    t.join();
}

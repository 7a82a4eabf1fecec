#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "xmcts/scenario.hpp"

using namespace xmcts;
using namespace testing_support;
using nlohmann::json;

namespace {

json fixture_doc() {
    std::ifstream in(data_path("fixture.json"));
    return json::parse(in);
}

std::string schema_path(const json& doc) {
    try {
        scenario_from_json(doc);
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.code(), "invalid-input");
        return e.path();
    }
    return "<accepted>";
}

} // namespace

TEST(Scenario, LoadsFixture) {
    Scenario sc = load_scenario(data_path("fixture.json"));
    EXPECT_EQ(sc.vehicles.size(), 3u);
    EXPECT_EQ(sc.requests.size(), 3u);
    EXPECT_EQ(sc.seed, 7u);
    EXPECT_EQ(sc.model.config.allowed_window, 10);
    EXPECT_EQ(sc.model.config.horizon, 240);
    // (0,0) -> (3,3) on the 3-unit grid: 6 + 6.
    EXPECT_EQ(travel_time(sc.model, 0, 6), 6);
    EXPECT_EQ(travel_time(sc.model, 0, 24), 24);
}

TEST(Scenario, SchemaErrorsNameTheOffendingField) {
    json doc = fixture_doc();

    json d = doc;
    d.erase("vehicles");
    EXPECT_EQ(schema_path(d), "vehicles");

    d = doc;
    d["vehicles"] = json::array();
    EXPECT_EQ(schema_path(d), "vehicles");

    d = doc;
    d["locations"][1]["id"] = 0;
    EXPECT_EQ(schema_path(d), "locations[1].id");

    d = doc;
    d["requests"][0]["t_p"] = 50; // after t_d = 40
    EXPECT_EQ(schema_path(d), "requests[0]");

    d = doc;
    d["requests"][0]["l_p"] = 99;
    EXPECT_EQ(schema_path(d), "requests[0].l_p");

    d = doc;
    d["vehicles"][2]["capacity"] = 1.5;
    EXPECT_EQ(schema_path(d), "vehicles[2].capacity");

    d = doc;
    d["vehicles"][1]["capacity"] = -1;
    EXPECT_EQ(schema_path(d), "vehicles[1].capacity");

    d = doc;
    d["vehicles"][1]["id"] = 1;
    EXPECT_EQ(schema_path(d), "vehicles[1].id");

    d = doc;
    d["requests"][0].erase("t_r");
    EXPECT_EQ(schema_path(d), "requests[0].t_r");

    d = doc;
    d["config"]["discount"] = 1.5;
    EXPECT_EQ(schema_path(d), "config");

    d = doc;
    d["seed"] = "seven";
    EXPECT_EQ(schema_path(d), "seed");

    EXPECT_EQ(schema_path(json::array()), "$");
}

TEST(Scenario, CapacityZeroIsAccepted) {
    json d = fixture_doc();
    d["vehicles"][0]["capacity"] = 0;
    EXPECT_EQ(scenario_from_json(d).vehicles[0].capacity, 0);
}

TEST(Scenario, ExplicitTravelMatrix) {
    json d = fixture_doc();
    d["locations"] = json::array({{{"id", 0}}, {{"id", 1}}, {{"id", 2}}});
    d["travel_matrix"] = json::array({{0, 4, 9}, {4, 0, 5}, {9, 5, 0}});
    d["vehicles"] = json::array({{{"id", 1}, {"capacity", 2}, {"location", 0}}});
    d["requests"] = json::array({{{"id", 1}, {"t_r", 0}, {"t_p", 5}, {"t_d", 20}, {"l_p", 1}, {"l_d", 2}}});
    Scenario sc = scenario_from_json(d);
    EXPECT_EQ(travel_time(sc.model, 0, 2), 9);
    EXPECT_EQ(travel_time(sc.model, 2, 1), 5);

    d["travel_matrix"] = json::array({{0, 4}, {4, 0}});
    EXPECT_EQ(schema_path(d), "travel_matrix");
}

TEST(Scenario, LoadErrors) {
    EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), InvalidInput);
    auto tmp = std::filesystem::temp_directory_path() / "xmcts_bad_scenario.json";
    std::ofstream(tmp) << "{\"locations\": [";
    try {
        load_scenario(tmp.string());
        FAIL() << "malformed JSON accepted";
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.path(), "$");
    }
    std::filesystem::remove(tmp);
}

TEST(Scenario, SampleScenariosLoad) {
    for (const char* name : {"fixture", "capacity", "fuel"}) {
        Scenario sc = load_scenario(source_path(std::string("scenarios/") + name + ".json"));
        EXPECT_FALSE(sc.vehicles.empty()) << name;
    }
    EXPECT_TRUE(load_scenario(source_path("scenarios/fuel.json")).model.config.models_fuel);
}

TEST(RequestFeed, ScriptedRequestsInArrivalOrderThenSampled) {
    json d = fixture_doc();
    // Listed out of order on purpose; ties on t_r break by id.
    d["requests"] = json::array({{{"id", 9}, {"t_r", 12}, {"t_p", 30}, {"t_d", 60}, {"l_p", 20}, {"l_d", 4}},
                                 {{"id", 4}, {"t_r", 5}, {"t_p", 20}, {"t_d", 50}, {"l_p", 2}, {"l_d", 22}},
                                 {{"id", 2}, {"t_r", 5}, {"t_p", 25}, {"t_d", 55}, {"l_p", 3}, {"l_d", 21}}});
    Scenario sc = scenario_from_json(d);
    RequestFeed feed(sc);
    State s = feed.initial_state(sc, 1);
    std::vector<int> seen;
    std::vector<Minutes> times;
    for (int e = 0; e < 6 && !s.terminal; ++e) {
        ASSERT_TRUE(s.outstanding);
        seen.push_back(*s.outstanding);
        times.push_back(s.time);
        s = feed.next_epoch(reject_outstanding(s), derive_seed(1, std::uint64_t(e), 0));
    }
    ASSERT_GE(seen.size(), 4u);
    EXPECT_EQ((std::vector<int>{seen[0], seen[1], seen[2]}), (std::vector<int>{2, 4, 9}));
    EXPECT_EQ(times[0], 5);
    EXPECT_EQ(times[2], 12);
    // Sampled ids continue past the largest scripted id.
    EXPECT_GT(seen[3], 9);
    EXPECT_GE(times[3], times[2]);
}

TEST(RequestFeed, RequiresTheOutstandingRequestToBeResolved) {
    Scenario sc = load_scenario(data_path("fixture.json"));
    RequestFeed feed(sc);
    State s = feed.initial_state(sc, 1);
    EXPECT_THROW(feed.next_epoch(s, 2), InvalidState);
}

TEST(RequestFeed, ScriptedArrivalPastHorizonEndsTheDay) {
    json d = fixture_doc();
    d["config"]["horizon"] = 10;
    Scenario sc = scenario_from_json(d);
    RequestFeed feed(sc);
    State s = feed.initial_state(sc, 1);
    ASSERT_EQ(s.outstanding, 1);
    s = feed.next_epoch(reject_outstanding(s), 2);
    ASSERT_EQ(s.outstanding, 2);
    s = feed.next_epoch(reject_outstanding(s), 3);
    EXPECT_TRUE(s.terminal);
    EXPECT_FALSE(s.outstanding);
    EXPECT_EQ(s.time, 10);
    EXPECT_EQ(feed.pending(), 0u);
}

TEST(RequestFeed, SameSeedSameSampledArrivals) {
    json d = fixture_doc();
    d["requests"] = json::array();
    Scenario sc = scenario_from_json(d);
    auto run = [&](std::uint64_t seed) {
        RequestFeed feed(sc);
        State s = feed.initial_state(sc, seed);
        std::vector<std::tuple<Minutes, int, int>> out;
        for (int e = 0; e < 5 && !s.terminal; ++e) {
            const Request& r = s.request(*s.outstanding);
            out.emplace_back(r.requested_at, r.pickup_location, r.dropoff_location);
            s = feed.next_epoch(reject_outstanding(s), derive_seed(seed, std::uint64_t(e), 0));
        }
        return out;
    };
    EXPECT_EQ(run(3), run(3));
    EXPECT_NE(run(3), run(4));
}

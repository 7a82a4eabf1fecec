#include <pthread.h>
#include <signal.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "xmcts/ctl/checker.hpp"
#include "xmcts/http.hpp"
#include "xmcts/simulate.hpp"

namespace {

using nlohmann::json;
using xmcts::format_number;

constexpr int kUserError = 1;
constexpr int kInternalError = 2;

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

int fail(const std::string& code, const std::string& message, int exit_code) {
    std::cerr << "error code=" << code << " message=" << one_line(message) << std::endl;
    return exit_code;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw xmcts::InvalidInput("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw xmcts::InvalidInput("malformed JSON in " + what + ": " + e.what());
    }
}

std::shared_ptr<const xmcts::TemplateSet> load_templates(const std::string& dir) {
    if (dir.empty()) return std::make_shared<xmcts::TemplateSet>();
    return std::make_shared<xmcts::TemplateSet>(xmcts::TemplateSet::from_directory(dir));
}

struct SimulateArgs {
    std::string scenario;
    int epochs = 5;
    std::optional<std::uint64_t> seed;
    std::string out;
    int iterations = 150;
};

int run_simulate(const SimulateArgs& a) {
    xmcts::SimulationOptions opts;
    opts.epochs = a.epochs;
    opts.seed = a.seed;
    opts.search.iterations = a.iterations;
    auto result = xmcts::simulate(xmcts::load_scenario(a.scenario), opts, &std::cerr);
    if (!a.out.empty()) xmcts::write_simulation(result, a.out);
    std::cout << xmcts::metrics_text(result.metrics);
    return 0;
}

struct CheckArgs {
    std::string dump;
    std::string formula;
};

int run_check(const CheckArgs& a) {
    auto formula = xmcts::ctl::parse_formula(a.formula);
    auto tree = xmcts::ctl::labeled_tree_from_json(parse_json_text(read_file(a.dump), a.dump));
    auto result = xmcts::ctl::check(tree, formula);
    std::string verdict = result.root_verdict ? "true" : "false";

    std::optional<xmcts::ctl::QuantitativeSummary> s;
    if (xmcts::ctl::quantifiable_atom(*formula)) s = xmcts::ctl::quantify_violations(tree, formula).summary;
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("none"); };

    std::printf("%-12s %s\n", "formula", xmcts::ctl::to_string(formula).c_str());
    std::printf("%-12s %s\n", "verdict", verdict.c_str());
    if (s) {
        std::printf("%-12s %ld\n", "applicable", s->applicable_nodes);
        std::printf("%-12s %ld\n", "violating", s->violating_nodes);
        std::printf("%-12s %s%%\n", "pct", format_number(s->violation_pct).c_str());
        std::printf("%-12s %s\n", "avg", opt(s->avg_degree).c_str());
        std::printf("%-12s %s\n", "min", opt(s->min_degree).c_str());
        std::printf("%-12s %s\n", "max", opt(s->max_degree).c_str());
        std::printf("%-12s %ld\n", "scenarios", s->scenario_count);
    }
    std::printf("\n");
    std::printf("verdict=%s\n", verdict.c_str());
    std::printf("nodes=%zu\n", tree.size());
    std::printf("quantified=%s\n", s ? "true" : "false");
    if (s) {
        std::printf("applicable=%ld\n", s->applicable_nodes);
        std::printf("violating=%ld\n", s->violating_nodes);
        std::printf("pct=%s\n", format_number(s->violation_pct).c_str());
        std::printf("avg=%s\n", opt(s->avg_degree).c_str());
        std::printf("min=%s\n", opt(s->min_degree).c_str());
        std::printf("max=%s\n", opt(s->max_degree).c_str());
        std::printf("scenarios=%ld\n", s->scenario_count);
    }
    return 0;
}

struct ExplainArgs {
    std::string scenario;
    std::string query;
    std::optional<int> budget;
    int iterations = 150;
    std::string templates;
    bool json_out = false;
};

void print_structured(const json& e) {
    std::printf("qtype=%s\n", e["qtype"].get<std::string>().c_str());
    for (const auto& [id, v] : e["verdicts"].items())
        std::printf("verdict.%s=%s\n", id.c_str(), v.is_string() ? v.get<std::string>().c_str() : v.dump().c_str());
    for (const auto& [id, s] : e["summaries"].items())
        for (const auto& [k, v] : s.items())
            std::printf("summary.%s.%s=%s\n", id.c_str(), k.c_str(),
                        v.is_null() ? "none" : format_number(v.get<double>()).c_str());
    if (e.contains("comparison"))
        for (const auto& [k, v] : e["comparison"].items())
            std::printf("comparison.%s=%s\n", k.c_str(), v.is_null() ? "none" : format_number(v.get<double>()).c_str());
    if (e.contains("new_iterations")) std::printf("new_iterations=%ld\n", e["new_iterations"].get<long>());
    std::printf("scenarios=%ld\n", e["scenarios"].get<long>());
}

int run_explain(const ExplainArgs& a) {
    json query = std::filesystem::exists(a.query) ? parse_json_text(read_file(a.query), a.query)
                                                  : parse_json_text(a.query, "--query");
    if (a.budget) {
        if (!query.is_object()) throw xmcts::InvalidInput("--query must be a JSON object");
        query["budget"] = *a.budget;
    }
    xmcts::SessionOptions opts;
    opts.search.iterations = a.iterations;
    opts.templates = load_templates(a.templates);
    xmcts::Session session("cli", xmcts::load_scenario(a.scenario), opts);
    json planned = session.plan();
    if (planned["infeasible"].get<bool>())
        throw xmcts::InvalidState("no vehicle can serve the outstanding request; nothing to explain");
    json e = session.submit_queries(json::array({query}))["explanations"][0];
    if (e.contains("error")) return fail(e["error"]["code"], e["error"]["message"], kUserError);
    if (a.json_out) {
        std::cout << e.dump(2) << std::endl;
        return 0;
    }
    std::cout << e["text"].get<std::string>() << "\n\n";
    print_structured(e);
    return 0;
}

struct ServeArgs {
    int port = 8080;
    std::string host = "127.0.0.1";
    std::string scenario_dir;
    std::string persist_dir;
    std::string templates;
};

int run_serve(const ServeArgs& a) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    xmcts::SessionOptions opts;
    opts.templates = load_templates(a.templates);
    std::optional<std::filesystem::path> persist;
    if (!a.persist_dir.empty()) persist = a.persist_dir;
    xmcts::SessionManager manager(opts, persist);
    manager.restore();
    std::string dir = a.scenario_dir;
    if (dir.empty())
        if (const char* env = std::getenv("XMCTS_SCENARIO_DIR")) dir = env;
    if (!dir.empty()) manager.set_scenario_dir(dir);

    xmcts::HttpServer server(manager);
    int port = server.bind(a.host, a.port);
    if (port < 0) return fail("port-busy", "cannot bind " + a.host + ":" + std::to_string(a.port), kUserError);
    std::cout << "listening host=" << a.host << " port=" << port << std::endl;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        server.stop();
    });
    server.listen();
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    std::cout << "stopped" << std::endl;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"xmcts: explainable MCTS dispatch planner"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run closed-loop epochs and write tree dumps and metrics");
    simulate->add_option("scenario", sim.scenario, "Scenario JSON file")->required();
    simulate->add_option("--epochs", sim.epochs, "Decision epochs to run")->check(CLI::NonNegativeNumber);
    simulate->add_option("--seed", sim.seed, "Seed overriding the scenario seed");
    simulate->add_option("--out", sim.out, "Output directory for epoch dumps and metrics.txt");
    simulate->add_option("--iterations", sim.iterations, "MCTS iterations per epoch")->check(CLI::PositiveNumber);

    CheckArgs chk;
    auto* check = app.add_subcommand("check", "Check a CTL formula against a tree dump");
    check->add_option("dump", chk.dump, "Tree dump JSON")->required();
    check->add_option("--formula", chk.formula, "CTL formula text")->required();

    ExplainArgs exp;
    auto* explain = app.add_subcommand("explain", "Plan one epoch and explain one query");
    explain->add_option("scenario", exp.scenario, "Scenario JSON file")->required();
    explain->add_option("--query", exp.query, "Query JSON, inline or a file path")->required();
    explain->add_option("--budget", exp.budget, "Tree-expansion budget")->check(CLI::NonNegativeNumber);
    explain->add_option("--iterations", exp.iterations, "MCTS iterations")->check(CLI::PositiveNumber);
    explain->add_option("--templates", exp.templates, "Directory of template overrides");
    explain->add_flag("--json", exp.json_out, "Print the explanation as JSON");

    ServeArgs srv;
    auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
    serve->add_option("--port", srv.port, "Port (0 picks a free port)")->check(CLI::Range(0, 65535));
    serve->add_option("--host", srv.host, "Bind address");
    serve->add_option("--scenario-dir", srv.scenario_dir, "Directory of named scenarios (default $XMCTS_SCENARIO_DIR)");
    serve->add_option("--persist-dir", srv.persist_dir, "Directory for session event logs");
    serve->add_option("--templates", srv.templates, "Directory of template overrides");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), kUserError);
    }

    try {
        if (*simulate) return run_simulate(sim);
        if (*check) return run_check(chk);
        if (*explain) return run_explain(exp);
        if (*serve) return run_serve(srv);
    } catch (const xmcts::Error& e) {
        return fail(e.code(), e.what(), kUserError);
    } catch (const nlohmann::json::exception& e) {
        return fail("invalid-input", e.what(), kUserError);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), kInternalError);
    }
    return kInternalError;
}

#pragma once

// HTTP binding of the session API.

#include <memory>
#include <string>

#include "httplib.h"
#include "service.hpp"

namespace xmcts {

class HttpServer {
public:
    explicit HttpServer(SessionManager& manager) : manager_(manager), server_(std::make_unique<httplib::Server>()) {
        auto handler = [this](const httplib::Request& req, httplib::Response& res) {
            ApiResponse r = manager_.handle(req.method, req.path, req.body);
            res.status = r.status;
            res.set_content(r.body.dump(), "application/json");
        };
        server_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                      {"Access-Control-Allow-Headers", "Content-Type"},
                                      {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        server_->Get(R"(/scenarios)", handler);
        server_->Post(R"(/sessions)", handler);
        server_->Post(R"(/sessions/([^/]+)/(plan|queries|apply))", handler);
        server_->Get(R"(/sessions/([^/]+)/(state|tree))", handler);
        server_->Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }

    // Binds to `port` (0 picks a free one) and returns the bound port, or -1.
    int bind(const std::string& host, int port) {
        if (port == 0) return server_->bind_to_any_port(host);
        return server_->bind_to_port(host, port) ? port : -1;
    }

    // Blocks until stop().
    bool listen() { return server_->listen_after_bind(); }
    void stop() { server_->stop(); }
    void wait_until_ready() const { server_->wait_until_ready(); }

private:
    SessionManager& manager_;
    std::unique_ptr<httplib::Server> server_;
};

} // namespace xmcts

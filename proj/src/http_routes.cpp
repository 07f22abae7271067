#include "xlabel/service.hpp"

#include "httplib.h"

#include <functional>

namespace xlabel::service {

namespace {

void send(httplib::Response& res, const Reply& reply) {
    res.status = reply.status;
    if (!reply.body.empty()) {
        res.set_content(reply.body, reply.content_type);
    }
}

void send_json(httplib::Response& res, int status, const Json& body) {
    send(res, {status, body.dump(), "application/json"});
}

// Runs a handler and turns any exception into an error reply.
void guarded(httplib::Response& res, const std::function<void()>& handler) {
    try {
        handler();
    } catch (const std::exception& e) {
        send(res, error_reply(e));
    }
}

std::vector<std::string> split_ids(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) {
            out.push_back(item);
        }
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

} // namespace

void register_routes(httplib::Server& server, Service& service) {
    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}});
    });

    server.Post("/datasets", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 201, service.create_dataset(req.body)); });
    });
    server.Get(R"(/datasets/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, service.dataset_summary(req.matches[1])); });
    });

    server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 201, service.create_session(Json::parse(req.body))); });
    });
    server.Get(R"(/sessions/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, service.session_summary(req.matches[1])); });
    });
    server.Get(R"(/sessions/([^/]+)/batch)", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            if (auto batch = service.next_batch(req.matches[1])) {
                send_json(res, 200, *batch);
            } else {
                res.status = 204;
            }
        });
    });
    server.Post(R"(/sessions/([^/]+)/labels)", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, service.submit_labels(req.matches[1], Json::parse(req.body))); });
    });
    server.Post(R"(/sessions/([^/]+)/retrain)", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, service.retrain(req.matches[1])); });
    });
    server.Get(R"(/sessions/([^/]+)/export)", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send(res, {200, service.export_csv(req.matches[1]), "text/csv"}); });
    });
    server.Get(R"(/sessions/([^/]+)/explanations)", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto ids = req.has_param("record_id") ? split_ids(req.get_param_value("record_id"))
                                                        : std::vector<std::string>{};
            send_json(res, 200, service.explanations(req.matches[1], ids));
        });
    });
    server.Get(R"(/sessions/([^/]+)/model)", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send(res, {200, service.model_json(req.matches[1]), "application/json"}); });
    });
}

} // namespace xlabel::service

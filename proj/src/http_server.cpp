#include <httplib.h>

#include <memory>

#include "prefnav/errors.hpp"
#include "prefnav/service.hpp"

namespace prefnav {

namespace {

int status_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_input:
        case ErrorKind::invalid_action:
        case ErrorKind::boundary_point: return 400;
        case ErrorKind::not_found: return 404;
        case ErrorKind::conflict: return 409;
        case ErrorKind::inadmissible_heading: return 422;
        default: return 500;
    }
}

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, const std::string& message) {
    send_json(res, status, {{"error", {{"kind", kind}, {"message", message}}}});
}

Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    try {
        return Json::parse(req.body);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::invalid_input, std::string("request body is not JSON: ") + e.what());
    }
}

template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send_error(res, status_for(e.kind()), to_string(e.kind()), e.what());
        } catch (const Json::exception& e) {
            send_error(res, 400, "invalid_input", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

}  // namespace

void configure_routes(httplib::Server& server, SessionManager& manager) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"}});
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/api/maps", guarded([&](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"maps", manager.list_maps()}});
    }));

    server.Post("/api/sessions", guarded([&](const httplib::Request& req, httplib::Response& res) {
        const Json body = parse_body(req);
        if (!body.is_object() || !body.contains("map_id") || !body["map_id"].is_string()) {
            throw Error(ErrorKind::invalid_input, "map_id (string) is required");
        }
        const std::string method = body.value("method", std::string("path_pref"));
        const Json overrides = body.value("overrides", Json::object());
        send_json(res, 201, manager.create(body["map_id"].get<std::string>(), method, overrides));
    }));

    server.Get(R"(/api/sessions/([0-9a-f]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, manager.get_state(req.matches[1]));
    }));

    server.Delete(R"(/api/sessions/([0-9a-f]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
        manager.remove(req.matches[1]);
        res.status = 204;
    }));

    server.Post(R"(/api/sessions/([0-9a-f]+)/heading)",
                guarded([&](const httplib::Request& req, httplib::Response& res) {
                    const Json body = parse_body(req);
                    if (!body.contains("angle") || !body["angle"].is_number()) {
                        throw Error(ErrorKind::invalid_input, "angle (radians) is required");
                    }
                    send_json(res, 200, manager.post_heading(req.matches[1], body["angle"].get<double>()));
                }));

    server.Post(R"(/api/sessions/([0-9a-f]+)/step)", guarded([&](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, manager.step(req.matches[1]));
    }));

    server.Get(R"(/api/sessions/([0-9a-f]+)/events)",
               guarded([&](const httplib::Request& req, httplib::Response& res) {
                   const std::string id = req.matches[1];
                   manager.get_state(id);  // 404 before the stream opens
                   auto cursor = std::make_shared<std::size_t>(0);
                   res.set_header("Cache-Control", "no-cache");
                   res.set_chunked_content_provider(
                       "text/event-stream", [&manager, id, cursor](std::size_t, httplib::DataSink& sink) {
                           bool closed = false;
                           std::vector<Json> batch;
                           try {
                               batch = manager.events(id, *cursor, 500, &closed);
                           } catch (const Error&) {
                               sink.done();
                               return true;
                           }
                           for (const Json& e : batch) {
                               const std::string frame = "id: " + std::to_string(*cursor) + "\nevent: " +
                                                         e.at("type").get<std::string>() + "\ndata: " + e.dump() +
                                                         "\n\n";
                               if (!sink.write(frame.data(), frame.size())) return false;
                               ++*cursor;
                           }
                           if (closed) {
                               sink.done();
                           } else if (batch.empty()) {
                               static constexpr std::string_view keepalive = ": keepalive\n\n";
                               if (!sink.write(keepalive.data(), keepalive.size())) return false;
                           }
                           return true;
                       });
               }));
}

void run_server(SessionManager& manager, const std::string& host, int port) {
    httplib::Server server;
    configure_routes(server, manager);
    if (!server.listen(host, port)) {
        throw Error(ErrorKind::invalid_input, "cannot listen on " + host + ":" + std::to_string(port));
    }
}

}  // namespace prefnav

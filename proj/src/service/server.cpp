#include "arspl/service/server.hpp"

#include "arspl/core/error.hpp"

namespace arspl::service {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kAlreadyLabeled: return 409;
    case ErrorCode::kPartialSuperpixel:
    case ErrorCode::kUnknownSuperpixel: return 422;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

// Runs `handler` and maps exceptions to error responses.
template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const ServiceError& e) {
      send_json(res, e.status(), {{"error", e.what()}});
    } catch (const Error& e) {
      send_json(res, status_for(e.code()), {{"error", e.what()}});
    } catch (const json::exception& e) {
      send_json(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", e.what()}});
    }
  };
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

}  // namespace

void register_routes(httplib::Server& server, SessionManager& sessions) {
  server.Post("/sessions", guarded([&](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, {{"id", sessions.create(parse_body(req))}});
              }));
  server.Get("/sessions", guarded([&](const httplib::Request&, httplib::Response& res) {
               send_json(res, 200, {{"sessions", sessions.ids()}});
             }));
  server.Get(R"(/sessions/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, sessions.find(req.matches[1])->status());
             }));
  server.Get(R"(/sessions/([^/]+)/queries)", guarded([&](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, sessions.find(req.matches[1])->queries());
             }));
  server.Post(R"(/sessions/([^/]+)/annotations)", guarded([&](const httplib::Request& req, httplib::Response& res) {
                const auto session = sessions.find(req.matches[1]);
                const json body = json::parse(req.body);
                suggest::AnnotationSet set;
                try {
                  set = suggest::annotation_set_from_json(body);
                } catch (const Error& e) {
                  throw ServiceError(422, e.what());
                } catch (const json::exception& e) {
                  throw ServiceError(422, std::string("malformed annotation set: ") + e.what());
                }
                send_json(res, 200, session->submit(set));
              }));
  server.Post(R"(/sessions/([^/]+)/suspend)", guarded([&](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, sessions.find(req.matches[1])->suspend());
              }));
  server.Post(R"(/sessions/([^/]+)/resume)", guarded([&](const httplib::Request& req, httplib::Response& res) {
                const auto session = sessions.find(req.matches[1]);
                session->resume();
                send_json(res, 200, session->status());
              }));
  server.Get(R"(/sessions/([^/]+)/report)", guarded([&](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, sessions.find(req.matches[1])->report());
             }));
  server.Get(R"(/sessions/([^/]+)/overlay/(-?\d+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, sessions.find(req.matches[1])->overlay(std::stoi(req.matches[2])));
             }));
}

void serve(const std::string& host, int port, const std::filesystem::path& data_dir) {
  SessionManager sessions(data_dir);
  httplib::Server server;
  register_routes(server, sessions);
  if (!server.listen(host, port)) {
    throw Error(ErrorCode::kIo, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace arspl::service

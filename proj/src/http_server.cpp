#include "qrec/http_server.hpp"

#include <httplib.h>

namespace qrec {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownDatabase:
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownDashboard:
    case ErrorCode::IndexOutOfRange:
      return 404;
    case ErrorCode::StaleRecommendationIndex:
    case ErrorCode::SchemaDrift:
      return 409;
    case ErrorCode::SyntaxError:
    case ErrorCode::UnknownTable:
    case ErrorCode::UnknownColumn:
    case ErrorCode::AmbiguousColumn:
    case ErrorCode::InvalidQuery:
    case ErrorCode::NoJoinPath:
    case ErrorCode::InvalidCell:
    case ErrorCode::OverlappingCells:
    case ErrorCode::BadRequest:
      return 400;
    default:
      return 500;
  }
}

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  json body = {{"error_code", to_string(e.code())}, {"message", e.what()}};
  if (e.position()) body["position"] = *e.position();
  send_json(res, body, http_status(e.code()));
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw Error(ErrorCode::BadRequest, "request body must be a JSON object");
  }
  return body;
}

std::string require_string(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string()) {
    throw Error(ErrorCode::BadRequest, std::string("'") + key + "' must be a string");
  }
  return body[key].get<std::string>();
}

json session_json(const SessionSnapshot& s) {
  json history = json::array();
  for (const auto& e : s.history) history.push_back(to_json(e));
  return {{"session_id", s.id}, {"database_id", s.database_id}, {"created_at", s.created_at}, {"history", history}};
}

// Wraps a handler so every qrec::Error becomes a JSON error response.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      send_error(res, Error(ErrorCode::BackendError, e.what()));
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  SessionService& service;
  httplib::Server server;
};

HttpServer::HttpServer(SessionService& service) : impl_(new Impl{service, {}}) {
  auto& svc = impl_->service;
  auto& srv = impl_->server;

  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Get("/databases", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"databases", svc.databases()}});
  }));

  srv.Post("/sessions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    auto [session, recs] = svc.create_session(require_string(body, "database_id"));
    json out = session_json(session);
    out["recommendations"] = to_json(recs);
    send_json(res, out, 201);
  }));

  srv.Get(R"(/sessions/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, session_json(svc.session(req.matches[1])));
  }));

  srv.Post(R"(/sessions/([^/]+)/queries)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    bool has_sql = body.contains("sql"), has_index = body.contains("recommendation_index");
    if (has_sql == has_index) {
      throw Error(ErrorCode::BadRequest, "give exactly one of 'sql' or 'recommendation_index'");
    }
    QueryInput input;
    if (has_sql) {
      input = require_string(body, "sql");
    } else {
      const auto& idx = body["recommendation_index"];
      if (!idx.is_number_unsigned()) {
        throw Error(ErrorCode::BadRequest, "'recommendation_index' must be a non-negative integer");
      }
      input = idx.get<std::size_t>();
    }
    auto result = svc.submit_query(req.matches[1], input);
    send_json(res, {{"entry", to_json(result.entry)}, {"recommendations", to_json(result.recommendations)}}, 201);
  }));

  srv.Get(R"(/sessions/([^/]+)/recommendations)",
          guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, to_json(svc.recommendations(req.matches[1])));
          }));

  srv.Get(R"(/sessions/([^/]+)/history)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    json history = json::array();
    for (const auto& e : svc.session(req.matches[1]).history) history.push_back(to_json(e));
    send_json(res, {{"history", history}});
  }));

  srv.Get(R"(/sessions/([^/]+)/history/(\d+))",
          guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            std::size_t index = 0;
            try {
              index = std::stoull(req.matches[2]);
            } catch (const std::out_of_range&) {
              throw Error(ErrorCode::IndexOutOfRange, "history index out of range");
            }
            send_json(res, to_json(svc.restore(req.matches[1], index)));
          }));

  srv.Post("/dashboards", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    auto body = parse_body(req);
    std::string session_id = require_string(body, "session_id");
    if (!body.contains("cells") || !body["cells"].is_array()) {
      throw Error(ErrorCode::BadRequest, "'cells' must be an array");
    }
    std::vector<GridCell> cells;
    for (const auto& c : body["cells"]) cells.push_back(cell_from_json(c));
    send_json(res, to_json(svc.save_dashboard(session_id, std::move(cells))), 201);
  }));

  srv.Get(R"(/dashboards/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, to_json(svc.load_dashboard(req.matches[1])));
  }));
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::StorageError, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace qrec

#include "httplib.h"
#include "switchminer/review_service.hpp"

namespace switchminer::review {

struct ReviewServer::Impl {
  Impl(ReviewService& s, ServerOptions o) : service(s), options(std::move(o)) {}
  ReviewService& service;
  ServerOptions options;
  httplib::Server server;
};

namespace {

void send(httplib::Response& res, const Reply& reply) {
  res.status = reply.status;
  res.set_content(dump_json(reply.body), "application/json");
}

}  // namespace

ReviewServer::ReviewServer(ReviewService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  auto& srv = impl_->server;
  Impl* impl = impl_.get();

  srv.set_pre_routing_handler([impl](const httplib::Request& req, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", impl->options.allowed_origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Authorization");
    res.set_header("Vary", "Origin");
    if (req.method == "OPTIONS") {
      res.status = 204;
      return httplib::Server::HandlerResponse::Handled;
    }
    if (!impl->options.token.empty() && req.path != "/healthz" &&
        req.get_header_value("Authorization") != "Bearer " + impl->options.token) {
      send(res, {401, {{"error", "unauthorized"}, {"detail", "missing or wrong bearer token"}}});
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  srv.Get("/healthz", [impl](const httplib::Request&, httplib::Response& res) { send(res, impl->service.health()); });

  srv.Post("/sessions", [impl](const httplib::Request& req, httplib::Response& res) {
    const Json body = Json::parse(req.body, nullptr, false);
    if (!body.is_object() || !body.contains("prompt_id") || !body["prompt_id"].is_number_integer()) {
      send(res, {400, {{"error", "invalid_request"}, {"detail", "body needs an integer prompt_id"}}});
      return;
    }
    const auto seed = body.value("seed", Json(0));
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<long long>() < 0)) {
      send(res, {400, {{"error", "invalid_request"}, {"detail", "seed must be a nonnegative integer"}}});
      return;
    }
    const auto annotator = body.value("annotator", Json("reviewer"));
    if (!annotator.is_string()) {
      send(res, {400, {{"error", "invalid_request"}, {"detail", "annotator must be a string"}}});
      return;
    }
    send(res, impl->service.create_session(body["prompt_id"].get<int>(), seed.get<std::uint64_t>(),
                                           annotator.get<std::string>()));
  });

  srv.Get(R"(/sessions/([^/]+)/next)", [impl](const httplib::Request& req, httplib::Response& res) {
    send(res, impl->service.next_item(req.matches[1]));
  });

  srv.Post(R"(/sessions/([^/]+)/annotations)", [impl](const httplib::Request& req, httplib::Response& res) {
    const Json body = Json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      send(res, {400, {{"error", "invalid_request"}, {"detail", "body is not JSON"}}});
      return;
    }
    send(res, impl->service.submit_annotation(req.matches[1], body));
  });

  srv.Get(R"(/sessions/([^/]+)/metrics)", [impl](const httplib::Request& req, httplib::Response& res) {
    send(res, impl->service.session_metrics(req.matches[1]));
  });

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string detail = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      detail = e.what();
    } catch (...) {
    }
    send(res, {500, {{"error", "internal"}, {"detail", detail}}});
  });
}

ReviewServer::~ReviewServer() { stop(); }

bool ReviewServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int ReviewServer::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool ReviewServer::listen_after_bind() { return impl_->server.listen_after_bind(); }
void ReviewServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}
void ReviewServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace switchminer::review

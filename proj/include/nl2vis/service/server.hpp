#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "nl2vis/service/predictor.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that Eigen uses as a name.
#include <httplib.h>

namespace nl2vis::service {

/// Parses a /predict body. Throws RequestError naming the offending field.
inline PredictRequest parse_predict_request(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw RequestError("body is not valid JSON");
  }
  if (!j.is_object()) throw RequestError("body must be a JSON object");
  PredictRequest req;
  for (const char* field : {"nl", "table"}) {
    if (!j.contains(field)) throw RequestError(std::string("missing field '") + field + "'");
    if (!j.at(field).is_string()) throw RequestError(std::string("field '") + field + "' must be a string");
  }
  req.nl = j.at("nl").get<std::string>();
  req.table = j.at("table").get<std::string>();
  if (j.contains("chart") && !j.at("chart").is_null()) {
    if (!j.at("chart").is_string()) throw RequestError("field 'chart' must be a string");
    req.chart = vega_zero::chart_type_from(vega_zero::to_lower(j.at("chart").get<std::string>()));
    if (!req.chart) throw RequestError("unknown chart type '" + j.at("chart").get<std::string>() + "'");
  }
  return req;
}

/// HTTP front end: POST /predict and GET /schema. Stateless per request.
class PredictionServer {
 public:
  explicit PredictionServer(std::shared_ptr<const Predictor> predictor) : predictor_(std::move(predictor)) {
    server_.Post("/predict", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        const auto p = predictor_->predict(parse_predict_request(req.body));
        reply(res, 200, to_json(p));
      } catch (const RequestError& e) {
        reply(res, 400, {{"error", e.what()}});
      } catch (const std::exception& e) {
        reply(res, 500, {{"error", e.what()}});
      }
    });
    server_.Get("/schema", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json tables = nlohmann::json::array();
      for (const auto& t : predictor_->schema().tables) {
        nlohmann::json cols = nlohmann::json::array();
        for (const auto& c : t.columns) cols.push_back({{"name", c.name}, {"kind", vega_zero::to_string(c.kind)}});
        tables.push_back({{"name", t.name}, {"columns", cols}});
      }
      reply(res, 200, {{"tables", tables}});
    });
  }

  /// Binds to `port` (0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port) {
    if (port == 0) return server_.bind_to_any_port(host);
    return server_.bind_to_port(host, port) ? port : -1;
  }

  /// Blocks until stop().
  bool listen() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }

 private:
  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  std::shared_ptr<const Predictor> predictor_;
  httplib::Server server_;
};

}  // namespace nl2vis::service

#include "lmdiff/backend.hpp"

#include "httplib.h"
#include "lmdiff/error.hpp"
#include "lmdiff/payload.hpp"

namespace lmdiff {

using nlohmann::json;

namespace {

std::string normalize_endpoint(std::string endpoint) {
  if (endpoint.find("://") == std::string::npos) endpoint = "http://" + endpoint;
  while (!endpoint.empty() && endpoint.back() == '/') endpoint.pop_back();
  return endpoint;
}

json checked_json(const httplib::Result& res, const std::string& what, const std::string& endpoint) {
  if (!res)
    throw BackendUnavailable("backend at " + endpoint + " is unreachable",
                             what + ": " + httplib::to_string(res.error()));
  if (res->status == 422) {
    std::string msg = "backend rejected the request";
    try {
      msg = json::parse(res->body).value("message", msg);
    } catch (const json::exception&) {
    }
    throw InvalidInput(msg);
  }
  if (res->status < 200 || res->status >= 300)
    throw BackendUnavailable("backend at " + endpoint + " answered HTTP " + std::to_string(res->status),
                             what);
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw BackendUnavailable("backend at " + endpoint + " sent invalid JSON", e.what());
  }
}

}  // namespace

RemoteBackend::RemoteBackend(std::string model_id, std::string endpoint)
    : model_id_(std::move(model_id)), endpoint_(normalize_endpoint(std::move(endpoint))) {}

ModelInfo RemoteBackend::info() {
  httplib::Client cli(endpoint_);
  cli.set_connection_timeout(5);
  cli.set_read_timeout(600);
  try {
    auto info = model_info_from_json(checked_json(cli.Get("/info"), "GET /info", endpoint_));
    if (!model_id_.empty()) info.model_id = model_id_;
    return info;
  } catch (const FormatError& e) {
    throw BackendUnavailable("backend at " + endpoint_ + " sent a malformed /info reply", e.what());
  }
}

PredictionResponse RemoteBackend::predict(const std::string& text, std::size_t k) {
  httplib::Client cli(endpoint_);
  cli.set_connection_timeout(5);
  cli.set_read_timeout(600);
  const json req{{"model_id", model_id_}, {"text", text}, {"k", k}};
  const auto body = checked_json(cli.Post("/predict", req.dump(), "application/json"), "POST /predict", endpoint_);
  try {
    auto resp = prediction_response_from_json(body);
    if (!model_id_.empty()) resp.model_id = model_id_;
    return resp;
  } catch (const FormatError& e) {
    throw BackendUnavailable("backend at " + endpoint_ + " sent a malformed /predict reply", e.what());
  }
}

void validate_response(const PredictionResponse& resp, std::size_t k, const ModelInfo& info) {
  if (resp.tokens.empty()) throw FormatError("prediction response holds no tokens");
  if (resp.vocab_fingerprint != info.vocab_fingerprint)
    throw FormatError("prediction response fingerprint differs from the registered model");
  if (resp.beta != info.beta) throw FormatError("prediction response beta differs from the registered model");
  for (std::size_t i = 0; i < resp.tokens.size(); ++i) {
    const auto& t = resp.tokens[i];
    if (t.position != i + 1) throw FormatError("prediction response positions are not 1..N");
    if (info.vocab_size != 0 && t.token_id >= info.vocab_size) throw FormatError("prediction response token id outside vocabulary");
    try {
      validate_record(t, k);
    } catch (const InvalidInput& e) {
      throw FormatError(std::string("prediction response: ") + e.what());
    }
  }
}

}  // namespace lmdiff

#pragma once

// Inference backends. The service only talks to models through this
// interface: in-process for the stub, HTTP for anything else.

#include <memory>
#include <string>

#include "lmdiff/stub_lm.hpp"

namespace lmdiff {

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ModelInfo info() = 0;
  virtual PredictionResponse predict(const std::string& text, std::size_t k) = 0;
};

class StubBackend final : public Backend {
 public:
  explicit StubBackend(StubConfig config) : lm_(std::move(config)) {}
  ModelInfo info() override { return lm_.info(); }
  PredictionResponse predict(const std::string& text, std::size_t k) override { return lm_.predict(text, k); }
  const StubLM& model() const noexcept { return lm_; }

 private:
  StubLM lm_;
};

/// Client for the backend protocol: GET /info, POST /predict.
/// Connection failures and non-2xx replies raise BackendUnavailable, except a
/// 422 which is relayed as InvalidInput.
class RemoteBackend final : public Backend {
 public:
  /// `endpoint` is "http://host:port" or "host:port". A non-empty `model_id`
  /// replaces the id the backend reports.
  RemoteBackend(std::string model_id, std::string endpoint);
  ModelInfo info() override;
  PredictionResponse predict(const std::string& text, std::size_t k) override;
  const std::string& endpoint() const noexcept { return endpoint_; }

 private:
  std::string model_id_;
  std::string endpoint_;
};

/// Checks a backend reply against the contract: at least one token, positions
/// 1..N, every record valid for `k`, and the declared fingerprint and beta.
/// Throws FormatError.
void validate_response(const PredictionResponse& resp, std::size_t k, const ModelInfo& info);

}  // namespace lmdiff

#pragma once

// JSON shapes shared by the HTTP API and the backend wire protocol.

#include "json.hpp"
#include "lmdiff/corpus_diff.hpp"
#include "lmdiff/error.hpp"
#include "lmdiff/measures.hpp"
#include "lmdiff/stub_lm.hpp"

namespace lmdiff {

nlohmann::json to_json(const TokenRecord& rec);
TokenRecord token_record_from_json(const nlohmann::json& j, std::uint32_t position);

nlohmann::json to_json(const PredictionResponse& resp);
/// Throws FormatError for structurally invalid responses.
PredictionResponse prediction_response_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelInfo& info);
ModelInfo model_info_from_json(const nlohmann::json& j);

nlohmann::json to_json(const LocalMeasures& m);
nlohmann::json to_json(const Histogram& h);
nlohmann::json to_json(const SuggestionSet& s, const ComparisonResults& results);

/// {code, message, detail}
nlohmann::json error_body(const Error& e);
int http_status(ErrorCode code) noexcept;

}  // namespace lmdiff

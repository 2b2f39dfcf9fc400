#include "lmdiff/payload.hpp"

namespace lmdiff {

using nlohmann::json;

json to_json(const TokenRecord& rec) {
  json topk = json::array();
  for (const auto& e : rec.topk) topk.push_back(json::array({e.token_id, e.prob}));
  return {{"id", rec.token_id},
          {"text", rec.token_text},
          {"prob", rec.target_prob},
          {"rank", rec.target_rank},
          {"topk", std::move(topk)}};
}

TokenRecord token_record_from_json(const json& j, std::uint32_t position) {
  TokenRecord r;
  r.position = position;
  r.token_id = j.at("id").get<std::uint32_t>();
  r.token_text = j.at("text").get<std::string>();
  r.target_prob = static_cast<float>(j.at("prob").get<double>());
  r.target_rank = j.at("rank").get<std::uint32_t>();
  for (const auto& e : j.at("topk"))
    r.topk.push_back({e.at(0).get<std::uint32_t>(), static_cast<float>(e.at(1).get<double>())});
  return r;
}

json to_json(const PredictionResponse& resp) {
  json tokens = json::array();
  for (const auto& t : resp.tokens) tokens.push_back(to_json(t));
  return {{"model_id", resp.model_id},
          {"vocab_fingerprint", resp.vocab_fingerprint},
          {"beta", resp.beta},
          {"tokens", std::move(tokens)}};
}

PredictionResponse prediction_response_from_json(const json& j) {
  try {
    PredictionResponse r;
    r.model_id = j.at("model_id").get<std::string>();
    r.vocab_fingerprint = j.at("vocab_fingerprint").get<std::string>();
    r.beta = j.at("beta").get<double>();
    std::uint32_t pos = 1;
    for (const auto& t : j.at("tokens")) r.tokens.push_back(token_record_from_json(t, pos++));
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed prediction response: ") + e.what());
  }
}

json to_json(const ModelInfo& info) {
  return {{"model_id", info.model_id},
          {"family", family_name(info.family)},
          {"vocab_fingerprint", info.vocab_fingerprint},
          {"beta", info.beta},
          {"vocab_size", info.vocab_size}};
}

ModelInfo model_info_from_json(const json& j) {
  try {
    ModelInfo m;
    m.model_id = j.at("model_id").get<std::string>();
    m.family = parse_family(j.at("family").get<std::string>());
    m.vocab_fingerprint = j.at("vocab_fingerprint").get<std::string>();
    m.beta = j.at("beta").get<double>();
    m.vocab_size = j.at("vocab_size").get<std::uint32_t>();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model info: ") + e.what());
  }
}

json to_json(const LocalMeasures& m) {
  return {{"prob_m1", m.prob_m1},
          {"prob_m2", m.prob_m2},
          {"prob_diff", m.prob_diff},
          {"rank_m1", m.rank_m1},
          {"rank_m2", m.rank_m2},
          {"rank_diff", m.rank_diff},
          {"clamped_rank_diff", m.clamped_rank_diff},
          {"topk_disagreement", m.topk_disagreement}};
}

json to_json(const Histogram& h) {
  return {{"edges", h.edges}, {"counts", h.counts}, {"markers", h.markers}};
}

json to_json(const SuggestionSet& s, const ComparisonResults& results) {
  json entries = json::array();
  for (const auto& e : s.entries)
    entries.push_back({{"index", e.index}, {"text", results.rows.at(e.index).text}, {"score", e.score}});
  return entries;
}

json error_body(const Error& e) {
  return {{"code", error_code_name(e.code())}, {"message", e.what()}, {"detail", e.detail()}};
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Incomparable:
    case ErrorCode::Comparability:
    case ErrorCode::Alignment: return 409;
    case ErrorCode::InvalidInput: return 422;
    case ErrorCode::BackendUnavailable: return 503;
    case ErrorCode::Format:
    case ErrorCode::Integrity:
    case ErrorCode::Version: return 500;
  }
  return 500;
}

}  // namespace lmdiff

#include "lmdiff/cache.hpp"

#include <algorithm>
#include <sstream>

#include "binary.hpp"
#include "json.hpp"
#include "lmdiff/error.hpp"

namespace lmdiff {

using nlohmann::json;

namespace {

json metadata_json(const AnalysisCache& c) {
  return json{{"model_id", c.model_id},
              {"vocab_fingerprint", c.vocab_fingerprint},
              {"dataset_name", c.dataset_name},
              {"dataset_hash", c.dataset_hash},
              {"beta", c.beta},
              {"k", c.k},
              {"phrase_count", c.phrases.size()}};
}

// Fills everything but the phrases; returns the declared phrase count.
std::size_t apply_metadata(const json& meta, AnalysisCache& c) {
  try {
    c.model_id = meta.at("model_id").get<std::string>();
    c.vocab_fingerprint = meta.at("vocab_fingerprint").get<std::string>();
    c.dataset_name = meta.at("dataset_name").get<std::string>();
    c.dataset_hash = meta.at("dataset_hash").get<std::string>();
    c.beta = meta.at("beta").get<double>();
    c.k = meta.at("k").get<std::uint32_t>();
    return meta.at("phrase_count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("cache metadata: ") + e.what());
  }
}

}  // namespace

void validate_cache(const AnalysisCache& cache) {
  if (cache.k == 0) throw InvalidInput("cache k must be >= 1");
  if (!(cache.beta > 0.0)) throw InvalidInput("cache beta must be positive");
  for (std::size_t i = 0; i < cache.phrases.size(); ++i) {
    const auto& p = cache.phrases[i];
    if (p.model_id != cache.model_id)
      throw InvalidInput("phrase " + std::to_string(i) + " belongs to model '" + p.model_id +
                         "', cache is for '" + cache.model_id + "'");
    if (p.phrase_text.find('\n') != std::string::npos)
      throw InvalidInput("phrase " + std::to_string(i) + " contains a newline");
    validate_phrase(p, cache.k);
  }
}

std::string write_cache(const AnalysisCache& cache) {
  validate_cache(cache);
  detail::ByteWriter w;
  w.raw(kCacheMagic);
  w.u32(kCacheFormatVersion);
  w.str(metadata_json(cache).dump());
  for (const auto& p : cache.phrases) {
    w.u32(static_cast<std::uint32_t>(p.tokens.size()));
    for (const auto& t : p.tokens) w.u32(t.token_id);
    for (const auto& t : p.tokens) w.f32(t.target_prob);
    for (const auto& t : p.tokens) w.u32(t.target_rank);
    for (const auto& t : p.tokens)
      for (const auto& e : t.topk) w.u32(e.token_id);
    for (const auto& t : p.tokens)
      for (const auto& e : t.topk) w.f32(e.prob);
    w.str(p.phrase_text);
    for (const auto& t : p.tokens) w.str(t.token_text);
  }
  return std::move(w).take();
}

AnalysisCache read_cache(std::string_view bytes) {
  detail::ByteReader r(bytes, "cache");
  if (r.remaining() < kCacheMagic.size() || r.raw(kCacheMagic.size()) != kCacheMagic)
    throw FormatError("not an analysis cache (bad magic)");
  AnalysisCache c;
  c.format_version = r.u32();
  if (c.format_version != kCacheFormatVersion)
    throw VersionError("unsupported cache format version " + std::to_string(c.format_version));

  json meta;
  try {
    meta = json::parse(r.str());
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("cache metadata is not valid JSON: ") + e.what());
  }
  const std::size_t phrase_count = apply_metadata(meta, c);
  const std::size_t k = c.k;

  c.phrases.reserve(std::min<std::size_t>(phrase_count, r.remaining() / 4));
  for (std::size_t pi = 0; pi < phrase_count; ++pi) {
    const std::size_t n = r.u32();
    // Cheapest possible token is 4+4+4+8k bytes plus its 4-byte text length.
    if (n * (16 + 8 * k) > r.remaining()) throw FormatError("cache: truncated phrase " + std::to_string(pi));
    PhraseAnalysis p;
    p.model_id = c.model_id;
    p.tokens.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      p.tokens[i].position = static_cast<std::uint32_t>(i + 1);
      p.tokens[i].token_id = r.u32();
    }
    for (auto& t : p.tokens) t.target_prob = r.f32();
    for (auto& t : p.tokens) t.target_rank = r.u32();
    for (auto& t : p.tokens) {
      t.topk.resize(k);
      for (auto& e : t.topk) e.token_id = r.u32();
    }
    for (auto& t : p.tokens)
      for (auto& e : t.topk) e.prob = r.f32();
    p.phrase_text = r.str();
    for (auto& t : p.tokens) t.token_text = r.str();
    c.phrases.push_back(std::move(p));
  }
  if (!r.done()) throw FormatError("cache: " + std::to_string(r.remaining()) + " trailing bytes");
  try {
    validate_cache(c);
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("cache payload is corrupt: ") + e.what());
  }
  return c;
}

std::string write_cache_jsonl(const AnalysisCache& cache) {
  validate_cache(cache);
  json head = metadata_json(cache);
  head["format"] = "lmdiff-cache";
  head["format_version"] = cache.format_version;
  std::string out = head.dump();
  out += '\n';
  for (const auto& p : cache.phrases) {
    json tokens = json::array();
    for (const auto& t : p.tokens) {
      json topk = json::array();
      for (const auto& e : t.topk) topk.push_back(json::array({e.token_id, e.prob}));
      tokens.push_back({{"id", t.token_id},
                        {"text", t.token_text},
                        {"prob", t.target_prob},
                        {"rank", t.target_rank},
                        {"topk", std::move(topk)}});
    }
    out += json{{"text", p.phrase_text}, {"tokens", std::move(tokens)}}.dump();
    out += '\n';
  }
  return out;
}

AnalysisCache read_cache_jsonl(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw FormatError("cache dump is empty");
  AnalysisCache c;
  std::size_t phrase_count = 0;
  try {
    const json head = json::parse(line);
    if (head.value("format", "") != "lmdiff-cache") throw FormatError("not a cache dump");
    c.format_version = head.at("format_version").get<std::uint32_t>();
    if (c.format_version != kCacheFormatVersion)
      throw VersionError("unsupported cache format version " + std::to_string(c.format_version));
    phrase_count = apply_metadata(head, c);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      PhraseAnalysis p;
      p.model_id = c.model_id;
      p.phrase_text = j.at("text").get<std::string>();
      std::uint32_t pos = 1;
      for (const auto& t : j.at("tokens")) {
        TokenRecord r;
        r.position = pos++;
        r.token_id = t.at("id").get<std::uint32_t>();
        r.token_text = t.at("text").get<std::string>();
        r.target_prob = static_cast<float>(t.at("prob").get<double>());
        r.target_rank = t.at("rank").get<std::uint32_t>();
        for (const auto& e : t.at("topk"))
          r.topk.push_back({e.at(0).get<std::uint32_t>(), static_cast<float>(e.at(1).get<double>())});
        p.tokens.push_back(std::move(r));
      }
      c.phrases.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("cache dump: ") + e.what());
  }
  if (c.phrases.size() != phrase_count)
    throw FormatError("cache dump declares " + std::to_string(phrase_count) + " phrases, holds " +
                      std::to_string(c.phrases.size()));
  try {
    validate_cache(c);
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("cache dump is corrupt: ") + e.what());
  }
  return c;
}

ComparabilityReport check_comparable(const AnalysisCache& a, const AnalysisCache& b) {
  ComparabilityReport r;
  if (a.vocab_fingerprint != b.vocab_fingerprint)
    r.reasons.push_back("vocabulary fingerprints differ ('" + a.model_id + "' " +
                        a.vocab_fingerprint.substr(0, 12) + " vs '" + b.model_id + "' " +
                        b.vocab_fingerprint.substr(0, 12) + ")");
  if (a.dataset_hash != b.dataset_hash)
    r.reasons.push_back("dataset hashes differ (" + a.dataset_hash.substr(0, 12) + " vs " +
                        b.dataset_hash.substr(0, 12) + ")");
  if (a.beta != b.beta) {
    std::ostringstream s;
    s << "softmax beta differs (" << a.beta << " vs " << b.beta << ")";
    r.reasons.push_back(s.str());
  }
  if (a.k != b.k)
    r.reasons.push_back("stored top-k differs (" + std::to_string(a.k) + " vs " + std::to_string(b.k) + ")");
  r.comparable = r.reasons.empty();
  return r;
}

}  // namespace lmdiff

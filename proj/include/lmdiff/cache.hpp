#pragma once

// Per-(model, dataset) prediction caches and the comparability contract.
//
// Binary layout, version 1, all integers little-endian:
//   "LMDC" | u32 version | u32 len + JSON metadata
//   per phrase: u32 token_count
//               token_id[n] u32, target_prob[n] f32, target_rank[n] u32,
//               topk_ids[n*k] u32, topk_probs[n*k] f32,
//               text table: u32 len + phrase text, then u32 len + text per token

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lmdiff/measures.hpp"

namespace lmdiff {

inline constexpr std::uint32_t kCacheFormatVersion = 1;
inline constexpr std::string_view kCacheMagic = "LMDC";

struct AnalysisCache {
  std::uint32_t format_version = kCacheFormatVersion;
  std::string model_id;
  std::string vocab_fingerprint;
  std::string dataset_name;
  std::string dataset_hash;
  double beta = kDefaultBeta;
  std::uint32_t k = kDefaultTopK;
  std::vector<PhraseAnalysis> phrases;

  friend bool operator==(const AnalysisCache&, const AnalysisCache&) = default;
};

/// Throws InvalidInput if a phrase belongs to another model or breaks a
/// record invariant.
void validate_cache(const AnalysisCache& cache);

std::string write_cache(const AnalysisCache& cache);

/// Throws FormatError on bad magic, truncation or trailing bytes and
/// VersionError on an unknown format version.
AnalysisCache read_cache(std::string_view bytes);

/// Line-delimited JSON: one metadata line, then one line per phrase.
std::string write_cache_jsonl(const AnalysisCache& cache);
AnalysisCache read_cache_jsonl(std::string_view text);

struct ComparabilityReport {
  bool comparable = true;
  std::vector<std::string> reasons;
};

/// Caches are comparable iff vocabulary fingerprint, dataset hash, beta and k agree.
ComparabilityReport check_comparable(const AnalysisCache& a, const AnalysisCache& b);

}  // namespace lmdiff

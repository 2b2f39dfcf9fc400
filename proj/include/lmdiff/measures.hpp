#pragma once

// Per-token prediction records and the difference measures between two
// models scored on the same text.
//
// Sign convention: every difference is positive when it favors the first
// model (m1 assigns a higher probability or a better, i.e. lower, rank).

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lmdiff {

inline constexpr std::size_t kDefaultTopK = 10;
inline constexpr std::uint32_t kDefaultRankCap = 50;
inline constexpr double kDefaultBeta = 1.0;

struct TopEntry {
  std::uint32_t token_id = 0;
  float prob = 0.0F;

  friend bool operator==(const TopEntry&, const TopEntry&) = default;
};

/// One token position scored by one model.
struct TokenRecord {
  std::uint32_t position = 0;  // 1-based
  std::uint32_t token_id = 0;
  std::string token_text;
  float target_prob = 0.0F;
  std::uint32_t target_rank = 1;
  std::vector<TopEntry> topk;

  friend bool operator==(const TokenRecord&, const TokenRecord&) = default;
};

struct PhraseAnalysis {
  std::string phrase_text;
  std::string model_id;
  std::vector<TokenRecord> tokens;

  friend bool operator==(const PhraseAnalysis&, const PhraseAnalysis&) = default;
};

/// Throws InvalidInput when `rec` breaks a record invariant (probability range,
/// rank >= 1, top-k length/order/uniqueness, rank-1 and top-k consistency).
void validate_record(const TokenRecord& rec, std::size_t k = kDefaultTopK);

/// Throws InvalidInput unless positions run 1..N and every record is valid.
void validate_phrase(const PhraseAnalysis& phrase, std::size_t k = kDefaultTopK);

struct LocalMeasures {
  double prob_m1 = 0.0;
  double prob_m2 = 0.0;
  double prob_diff = 0.0;
  std::uint32_t rank_m1 = 1;
  std::uint32_t rank_m2 = 1;
  std::int64_t rank_diff = 0;
  std::int64_t clamped_rank_diff = 0;
  std::uint32_t topk_disagreement = 0;

  friend bool operator==(const LocalMeasures&, const LocalMeasures&) = default;
};

/// The eight per-token quantities, addressable by name.
enum class LocalMeasureId {
  ProbM1,
  ProbM2,
  ProbDiff,
  RankM1,
  RankM2,
  RankDiff,
  ClampedRankDiff,
  TopkDisagreement,
};

inline constexpr std::array<LocalMeasureId, 8> kAllLocalMeasures{
    LocalMeasureId::ProbM1,   LocalMeasureId::ProbM2,   LocalMeasureId::ProbDiff,
    LocalMeasureId::RankM1,   LocalMeasureId::RankM2,   LocalMeasureId::RankDiff,
    LocalMeasureId::ClampedRankDiff, LocalMeasureId::TopkDisagreement,
};

std::string_view local_measure_name(LocalMeasureId id) noexcept;
std::optional<LocalMeasureId> parse_local_measure(std::string_view name) noexcept;
double measure_value(const LocalMeasures& m, LocalMeasureId id) noexcept;

/// Base quantities of the corpus-level measures.
enum class BaseMeasure { RankDiff, ClampedRankDiff, ProbDiff, TopkDisagreement };
enum class Reducer { Average, Maximum };

struct GlobalMeasureId {
  BaseMeasure base;
  Reducer reducer;

  friend bool operator==(const GlobalMeasureId&, const GlobalMeasureId&) = default;
};

inline constexpr std::array<BaseMeasure, 4> kAllBaseMeasures{
    BaseMeasure::RankDiff, BaseMeasure::ClampedRankDiff, BaseMeasure::ProbDiff,
    BaseMeasure::TopkDisagreement};

/// rank/clamped rank/probability/top-k, each by average and maximum.
std::array<GlobalMeasureId, 8> all_global_measures() noexcept;

std::string_view base_measure_name(BaseMeasure b) noexcept;
std::optional<BaseMeasure> parse_base_measure(std::string_view name) noexcept;
LocalMeasureId as_local(BaseMeasure b) noexcept;

/// Numerically stable softmax(beta * logits).
std::vector<double> softmax(std::span<const double> logits, double beta = kDefaultBeta);

/// Competition rank of `target_id`: 1 + #strictly greater + #equal with smaller id.
std::uint32_t rank_of_target(std::span<const double> probs, std::size_t target_id);

constexpr std::uint32_t clamp_rank(std::uint32_t rank, std::uint32_t cap = kDefaultRankCap) noexcept {
  return rank < cap ? rank : cap;
}

/// Ids of `a` that are not among the ids of `b`. Both must hold `k` distinct ids.
std::uint32_t topk_disagreement(std::span<const TopEntry> a, std::span<const TopEntry> b,
                                std::size_t k = kDefaultTopK);

struct MeasureConfig {
  std::uint32_t rank_cap = kDefaultRankCap;
  std::size_t k = kDefaultTopK;
};

/// Throws AlignmentError if the two records are not the same observed token.
LocalMeasures local_measures(const TokenRecord& m1, const TokenRecord& m2,
                             const MeasureConfig& cfg = {});

/// Position-by-position measures for one phrase scored by two models.
std::vector<LocalMeasures> phrase_measures(const PhraseAnalysis& m1, const PhraseAnalysis& m2,
                                           const MeasureConfig& cfg = {});

/// Builds the stored record for one position from a full distribution.
/// Probabilities are rounded to their stored (32-bit) precision before rank and
/// top-k are derived, so the stored fields agree with each other exactly.
TokenRecord make_token_record(std::span<const double> probs, std::uint32_t position,
                              std::uint32_t token_id, std::string token_text, std::size_t k);

}  // namespace lmdiff

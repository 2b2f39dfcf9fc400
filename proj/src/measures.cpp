#include "lmdiff/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lmdiff/error.hpp"
#include "lmdiff/kernels.hpp"

namespace lmdiff {

namespace {

bool ranks_before(const TopEntry& a, const TopEntry& b) {
  return a.prob > b.prob || (a.prob == b.prob && a.token_id < b.token_id);
}

void check_distinct_ids(std::span<const TopEntry> entries, const char* what) {
  std::vector<std::uint32_t> ids;
  ids.reserve(entries.size());
  for (const auto& e : entries) ids.push_back(e.token_id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw InvalidInput(std::string(what) + ": top-k ids are not distinct");
}

}  // namespace

void validate_record(const TokenRecord& rec, std::size_t k) {
  const std::string at = "token at position " + std::to_string(rec.position);
  if (!(rec.target_prob >= 0.0F && rec.target_prob <= 1.0F))
    throw InvalidInput(at + ": target probability outside [0, 1]");
  if (rec.target_rank < 1) throw InvalidInput(at + ": rank must be >= 1");
  if (rec.topk.size() != k)
    throw InvalidInput(at + ": expected " + std::to_string(k) + " top-k entries, got " +
                       std::to_string(rec.topk.size()));
  for (std::size_t i = 0; i < rec.topk.size(); ++i) {
    const float p = rec.topk[i].prob;
    if (!(p >= 0.0F && p <= 1.0F)) throw InvalidInput(at + ": top-k probability outside [0, 1]");
    if (i > 0 && !ranks_before(rec.topk[i - 1], rec.topk[i]))
      throw InvalidInput(at + ": top-k not sorted by probability then id");
  }
  check_distinct_ids(rec.topk, at.c_str());
  if (!rec.topk.empty() && ((rec.target_rank == 1) != (rec.token_id == rec.topk[0].token_id)))
    throw InvalidInput(at + ": rank 1 must coincide with the first top-k entry");
  for (const auto& e : rec.topk) {
    if (e.token_id == rec.token_id && e.prob != rec.target_prob)
      throw InvalidInput(at + ": top-k probability of the target differs from target probability");
  }
}

void validate_phrase(const PhraseAnalysis& phrase, std::size_t k) {
  if (phrase.tokens.empty()) throw InvalidInput("phrase has no tokens");
  for (std::size_t i = 0; i < phrase.tokens.size(); ++i) {
    if (phrase.tokens[i].position != i + 1)
      throw InvalidInput("token positions must run 1..N, found " +
                         std::to_string(phrase.tokens[i].position) + " at index " +
                         std::to_string(i));
    validate_record(phrase.tokens[i], k);
  }
}

std::string_view local_measure_name(LocalMeasureId id) noexcept {
  switch (id) {
    case LocalMeasureId::ProbM1: return "prob_m1";
    case LocalMeasureId::ProbM2: return "prob_m2";
    case LocalMeasureId::ProbDiff: return "prob_diff";
    case LocalMeasureId::RankM1: return "rank_m1";
    case LocalMeasureId::RankM2: return "rank_m2";
    case LocalMeasureId::RankDiff: return "rank_diff";
    case LocalMeasureId::ClampedRankDiff: return "clamped_rank_diff";
    case LocalMeasureId::TopkDisagreement: return "topk_disagreement";
  }
  return "";
}

std::optional<LocalMeasureId> parse_local_measure(std::string_view name) noexcept {
  for (LocalMeasureId id : kAllLocalMeasures)
    if (local_measure_name(id) == name) return id;
  return std::nullopt;
}

double measure_value(const LocalMeasures& m, LocalMeasureId id) noexcept {
  switch (id) {
    case LocalMeasureId::ProbM1: return m.prob_m1;
    case LocalMeasureId::ProbM2: return m.prob_m2;
    case LocalMeasureId::ProbDiff: return m.prob_diff;
    case LocalMeasureId::RankM1: return m.rank_m1;
    case LocalMeasureId::RankM2: return m.rank_m2;
    case LocalMeasureId::RankDiff: return static_cast<double>(m.rank_diff);
    case LocalMeasureId::ClampedRankDiff: return static_cast<double>(m.clamped_rank_diff);
    case LocalMeasureId::TopkDisagreement: return m.topk_disagreement;
  }
  return 0.0;
}

std::array<GlobalMeasureId, 8> all_global_measures() noexcept {
  std::array<GlobalMeasureId, 8> out{};
  std::size_t i = 0;
  for (BaseMeasure b : kAllBaseMeasures) {
    out[i++] = {b, Reducer::Average};
    out[i++] = {b, Reducer::Maximum};
  }
  return out;
}

std::string_view base_measure_name(BaseMeasure b) noexcept {
  return local_measure_name(as_local(b));
}

std::optional<BaseMeasure> parse_base_measure(std::string_view name) noexcept {
  for (BaseMeasure b : kAllBaseMeasures)
    if (base_measure_name(b) == name) return b;
  return std::nullopt;
}

LocalMeasureId as_local(BaseMeasure b) noexcept {
  switch (b) {
    case BaseMeasure::RankDiff: return LocalMeasureId::RankDiff;
    case BaseMeasure::ClampedRankDiff: return LocalMeasureId::ClampedRankDiff;
    case BaseMeasure::ProbDiff: return LocalMeasureId::ProbDiff;
    case BaseMeasure::TopkDisagreement: return LocalMeasureId::TopkDisagreement;
  }
  return LocalMeasureId::ProbDiff;
}

std::vector<double> softmax(std::span<const double> logits, double beta) {
  if (logits.empty()) throw InvalidInput("softmax of an empty vector");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidInput("beta must be a positive finite number");
  for (double x : logits)
    if (!std::isfinite(x)) throw InvalidInput("softmax input contains a non-finite logit");

  const auto& k = kernels::active();
  std::vector<double> out(logits.size());
  const double sum = k.exp_shifted(logits, beta, k.max_value(logits), out);
  k.scale(out, 1.0 / sum);
  return out;
}

std::uint32_t rank_of_target(std::span<const double> probs, std::size_t target_id) {
  if (target_id >= probs.size())
    throw InvalidInput("target id " + std::to_string(target_id) + " outside vocabulary of size " +
                       std::to_string(probs.size()));
  return static_cast<std::uint32_t>(1 + kernels::active().count_preceding(probs, target_id));
}

std::uint32_t topk_disagreement(std::span<const TopEntry> a, std::span<const TopEntry> b,
                                std::size_t k) {
  if (a.size() != k || b.size() != k)
    throw InvalidInput("top-k lists must hold exactly " + std::to_string(k) + " entries");
  std::vector<std::uint32_t> ia(k), ib(k);
  for (std::size_t i = 0; i < k; ++i) {
    ia[i] = a[i].token_id;
    ib[i] = b[i].token_id;
  }
  return kernels::active().count_missing_u32(ia, ib);
}

LocalMeasures local_measures(const TokenRecord& m1, const TokenRecord& m2,
                             const MeasureConfig& cfg) {
  if (m1.position != m2.position || m1.token_id != m2.token_id)
    throw AlignmentError("token " + std::to_string(m1.position) + " differs between models (ids " +
                             std::to_string(m1.token_id) + " vs " + std::to_string(m2.token_id) + ")",
                         m1.position);
  LocalMeasures m;
  m.prob_m1 = m1.target_prob;
  m.prob_m2 = m2.target_prob;
  m.prob_diff = m.prob_m1 - m.prob_m2;
  m.rank_m1 = m1.target_rank;
  m.rank_m2 = m2.target_rank;
  m.rank_diff = static_cast<std::int64_t>(m.rank_m2) - static_cast<std::int64_t>(m.rank_m1);
  m.clamped_rank_diff = static_cast<std::int64_t>(clamp_rank(m.rank_m2, cfg.rank_cap)) -
                        static_cast<std::int64_t>(clamp_rank(m.rank_m1, cfg.rank_cap));
  m.topk_disagreement = topk_disagreement(m1.topk, m2.topk, cfg.k);
  return m;
}

std::vector<LocalMeasures> phrase_measures(const PhraseAnalysis& m1, const PhraseAnalysis& m2,
                                           const MeasureConfig& cfg) {
  if (m1.phrase_text != m2.phrase_text)
    throw AlignmentError("phrase texts differ", 1);
  const std::size_t n = std::min(m1.tokens.size(), m2.tokens.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = m1.tokens[i];
    const auto& b = m2.tokens[i];
    if (a.token_id != b.token_id || a.position != b.position)
      throw AlignmentError("tokenizations diverge at position " + std::to_string(i + 1), i + 1);
  }
  if (m1.tokens.size() != m2.tokens.size())
    throw AlignmentError("token counts differ (" + std::to_string(m1.tokens.size()) + " vs " +
                             std::to_string(m2.tokens.size()) + ")",
                         n + 1);

  // Columnar pass through the kernels, then the top-k sets per position.
  const auto& k = kernels::active();
  std::vector<float> p1(n), p2(n);
  std::vector<std::uint32_t> r1(n), r2(n);
  for (std::size_t i = 0; i < n; ++i) {
    p1[i] = m1.tokens[i].target_prob;
    p2[i] = m2.tokens[i].target_prob;
    r1[i] = m1.tokens[i].target_rank;
    r2[i] = m2.tokens[i].target_rank;
  }
  std::vector<double> pdiff(n);
  std::vector<std::int64_t> rdiff(n), cdiff(n);
  k.diff_f32(p1, p2, pdiff);
  k.rank_diff_u32(r1, r2, cfg.rank_cap, rdiff, cdiff);

  std::vector<LocalMeasures> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& m = out[i];
    m.prob_m1 = p1[i];
    m.prob_m2 = p2[i];
    m.prob_diff = pdiff[i];
    m.rank_m1 = r1[i];
    m.rank_m2 = r2[i];
    m.rank_diff = rdiff[i];
    m.clamped_rank_diff = cdiff[i];
    m.topk_disagreement = topk_disagreement(m1.tokens[i].topk, m2.tokens[i].topk, cfg.k);
  }
  return out;
}

TokenRecord make_token_record(std::span<const double> probs, std::uint32_t position,
                              std::uint32_t token_id, std::string token_text, std::size_t k) {
  if (token_id >= probs.size()) throw InvalidInput("token id outside vocabulary");
  if (k == 0 || k > probs.size())
    throw InvalidInput("k must be in [1, " + std::to_string(probs.size()) + "]");

  std::vector<double> stored(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i)
    stored[i] = static_cast<double>(static_cast<float>(probs[i]));

  TokenRecord rec;
  rec.position = position;
  rec.token_id = token_id;
  rec.token_text = std::move(token_text);
  rec.target_prob = static_cast<float>(stored[token_id]);
  rec.target_rank = rank_of_target(stored, token_id);

  std::vector<std::uint32_t> ids(probs.size());
  std::iota(ids.begin(), ids.end(), 0U);
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      return stored[a] > stored[b] || (stored[a] == stored[b] && a < b);
                    });
  rec.topk.reserve(k);
  for (std::size_t i = 0; i < k; ++i)
    rec.topk.push_back({ids[i], static_cast<float>(stored[ids[i]])});
  return rec;
}

}  // namespace lmdiff

#pragma once

// Deterministic seeded pseudo language model used as a test backend.
//
// Tokenization splits on whitespace against an explicit vocabulary; id 0 is
// the reserved unknown token. The logit of token t after a prefix is a hash of
// (seed, last `window` token ids, t) mapped to [-5, 5], plus an optional
// per-token bias. Prefix slots before the start of the text hold a
// begin-of-sequence marker.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lmdiff/dataset.hpp"
#include "lmdiff/measures.hpp"

namespace lmdiff {

inline constexpr std::uint32_t kUnkId = 0;
inline constexpr std::string_view kUnkToken = "<unk>";

enum class ModelFamily { Autoregressive, Masked };
std::string_view family_name(ModelFamily f) noexcept;
ModelFamily parse_family(std::string_view name);

/// What a backend reports about itself.
struct ModelInfo {
  std::string model_id;
  ModelFamily family = ModelFamily::Autoregressive;
  std::string vocab_fingerprint;
  double beta = kDefaultBeta;
  std::uint32_t vocab_size = 0;
};

struct PredictionResponse {
  std::string model_id;
  std::string vocab_fingerprint;
  double beta = kDefaultBeta;
  std::vector<TokenRecord> tokens;

  friend bool operator==(const PredictionResponse&, const PredictionResponse&) = default;
};

/// `<unk>` followed by `size - 1` words; a fixed English word list first,
/// then generated "tokN" entries once the list runs out.
std::vector<VocabEntry> default_stub_vocab(std::size_t size = 129);

struct StubConfig {
  std::string model_id;
  std::uint64_t seed = 0;
  std::uint32_t window = 2;
  double beta = kDefaultBeta;
  std::vector<VocabEntry> vocab = default_stub_vocab();
  /// Additive logit offset per token id; empty means none.
  std::vector<double> bias;
};

class StubLM {
 public:
  explicit StubLM(StubConfig config);

  const StubConfig& config() const noexcept { return config_; }
  const std::string& fingerprint() const noexcept { return fingerprint_; }
  ModelInfo info() const;
  std::size_t vocab_size() const noexcept { return config_.vocab.size(); }

  struct Token {
    std::uint32_t id;
    std::string text;
  };
  std::vector<Token> tokenize(std::string_view text) const;

  /// Next-token logits given the preceding token ids.
  std::vector<double> logits(std::span<const std::uint32_t> prefix) const;

  /// Scores every token of `text` from its prefix. Throws InvalidInput when
  /// k is 0 or exceeds the vocabulary, or the text has no tokens.
  PredictionResponse predict(std::string_view text, std::size_t k = kDefaultTopK) const;

  /// Draws `length` tokens (never <unk>) from the model's own distribution.
  std::vector<std::uint32_t> sample(std::size_t length, std::uint64_t sample_seed) const;
  std::string detokenize(std::span<const std::uint32_t> ids) const;

 private:
  StubConfig config_;
  std::string fingerprint_;
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::uint32_t> token_to_id_;
};

/// `count` phrases sampled from `lm`, lengths uniform in [min_len, max_len].
std::vector<std::string> synthetic_corpus(const StubLM& lm, std::size_t count, std::size_t min_len,
                                          std::size_t max_len, std::uint64_t seed);

}  // namespace lmdiff

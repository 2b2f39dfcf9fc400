#include "lmdiff/stub_lm.hpp"

#include <algorithm>
#include <random>

#include "lmdiff/error.hpp"

namespace lmdiff {

namespace {

constexpr std::uint32_t kBosMarker = 0xFFFFFFFFU;

constexpr std::string_view kWords[] = {
    "the",   "of",    "and",   "to",     "a",      "in",    "is",     "that",  "it",    "was",
    "for",   "on",    "are",   "as",     "with",   "his",   "they",   "at",    "be",    "this",
    "have",  "from",  "or",    "one",    "had",    "by",    "word",   "but",   "not",   "what",
    "all",   "were",  "we",    "when",   "your",   "can",   "said",   "there", "use",   "an",
    "each",  "which", "she",   "do",     "how",    "their", "if",     "will",  "up",    "other",
    "about", "out",   "many",  "then",   "them",   "these", "so",     "some",  "her",   "would",
    "make",  "like",  "him",   "into",   "time",   "has",   "look",   "two",   "more",  "write",
    "go",    "see",   "number", "no",    "way",    "could", "people", "my",    "than",  "first",
    "water", "been",  "call",  "who",    "oil",    "its",   "now",    "find",  "long",  "down",
    "day",   "did",   "get",   "come",   "made",   "may",   "part",   "over",  "new",   "sound",
    "take",  "only",  "little", "work",  "know",   "place", "year",   "live",  "me",    "back",
    "give",  "most",  "very",  "after",  "thing",  "our",   "just",   "name",  "good",  "sentence",
    "man",   "think", "say",   "great",  "where",  "help",  "through", "much",
};

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

std::string_view family_name(ModelFamily f) noexcept {
  return f == ModelFamily::Masked ? "masked" : "autoregressive";
}

ModelFamily parse_family(std::string_view name) {
  if (name == "autoregressive") return ModelFamily::Autoregressive;
  if (name == "masked") return ModelFamily::Masked;
  throw InvalidInput("unknown model family '" + std::string(name) + "'");
}

std::vector<VocabEntry> default_stub_vocab(std::size_t size) {
  std::vector<VocabEntry> v;
  v.reserve(size);
  if (size == 0) return v;
  v.push_back({kUnkId, std::string(kUnkToken)});
  for (std::uint32_t id = 1; id < size; ++id) {
    const std::size_t w = id - 1;
    v.push_back({id, w < std::size(kWords) ? std::string(kWords[w]) : "tok" + std::to_string(id)});
  }
  return v;
}

StubLM::StubLM(StubConfig config) : config_(std::move(config)) {
  if (config_.vocab.size() < 2) throw InvalidInput("stub vocabulary needs <unk> and at least one word");
  if (config_.window == 0) throw InvalidInput("stub context window must be >= 1");
  if (!(config_.beta > 0.0)) throw InvalidInput("stub beta must be positive");
  if (!config_.bias.empty() && config_.bias.size() != config_.vocab.size())
    throw InvalidInput("stub bias must have one entry per vocabulary id");

  std::sort(config_.vocab.begin(), config_.vocab.end(), [](auto& a, auto& b) { return a.id < b.id; });
  id_to_token_.resize(config_.vocab.size());
  for (std::size_t i = 0; i < config_.vocab.size(); ++i) {
    const auto& e = config_.vocab[i];
    if (e.id != i) throw InvalidInput("stub vocabulary ids must be dense from 0");
    if (e.token.empty() || std::any_of(e.token.begin(), e.token.end(), is_space))
      throw InvalidInput("stub vocabulary token " + std::to_string(e.id) + " is empty or has whitespace");
    if (!token_to_id_.emplace(e.token, e.id).second)
      throw InvalidInput("duplicate stub vocabulary token '" + e.token + "'");
    id_to_token_[i] = e.token;
  }
  if (id_to_token_[kUnkId] != kUnkToken) throw InvalidInput("stub vocabulary id 0 must be <unk>");
  fingerprint_ = vocab_fingerprint(config_.vocab);
}

ModelInfo StubLM::info() const {
  return {config_.model_id, ModelFamily::Autoregressive, fingerprint_, config_.beta,
          static_cast<std::uint32_t>(config_.vocab.size())};
}

std::vector<StubLM::Token> StubLM::tokenize(std::string_view text) const {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) {
      std::string word(text.substr(start, i - start));
      const auto it = token_to_id_.find(word);
      out.push_back({it == token_to_id_.end() ? kUnkId : it->second, std::move(word)});
    }
  }
  return out;
}

std::vector<double> StubLM::logits(std::span<const std::uint32_t> prefix) const {
  std::uint64_t h = mix(config_.seed ^ 0x6C6D646966660001ULL);
  h = mix(h ^ config_.window);
  for (std::uint32_t s = 0; s < config_.window; ++s) {
    // slot s holds the token s+1 steps back, or the BOS marker
    const std::uint32_t id = s < prefix.size() ? prefix[prefix.size() - 1 - s] : kBosMarker;
    h = mix(h ^ (static_cast<std::uint64_t>(id) + 0x100000000ULL * (s + 1)));
  }
  std::vector<double> out(config_.vocab.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    const std::uint64_t x = mix(h ^ (0xD1B54A32D192ED03ULL * (t + 1)));
    const double unit = static_cast<double>(x >> 11) * 0x1.0p-53;  // [0, 1)
    out[t] = 10.0 * unit - 5.0;
    if (!config_.bias.empty()) out[t] += config_.bias[t];
  }
  return out;
}

PredictionResponse StubLM::predict(std::string_view text, std::size_t k) const {
  if (k == 0 || k > config_.vocab.size())
    throw InvalidInput("k must be in [1, " + std::to_string(config_.vocab.size()) + "], got " + std::to_string(k));
  auto tokens = tokenize(text);
  if (tokens.empty()) throw InvalidInput("text has no tokens");

  PredictionResponse resp;
  resp.model_id = config_.model_id;
  resp.vocab_fingerprint = fingerprint_;
  resp.beta = config_.beta;
  resp.tokens.reserve(tokens.size());
  std::vector<std::uint32_t> ids;
  ids.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto probs = softmax(logits(ids), config_.beta);
    resp.tokens.push_back(make_token_record(probs, static_cast<std::uint32_t>(i + 1), tokens[i].id,
                                            std::move(tokens[i].text), k));
    ids.push_back(tokens[i].id);
  }
  return resp;
}

std::vector<std::uint32_t> StubLM::sample(std::size_t length, std::uint64_t sample_seed) const {
  std::mt19937_64 rng(sample_seed);
  std::vector<std::uint32_t> ids;
  ids.reserve(length);
  while (ids.size() < length) {
    auto probs = softmax(logits(ids), config_.beta);
    probs[kUnkId] = 0.0;
    std::discrete_distribution<std::uint32_t> pick(probs.begin(), probs.end());
    ids.push_back(pick(rng));
  }
  return ids;
}

std::string StubLM::detokenize(std::span<const std::uint32_t> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ' ';
    out += id_to_token_.at(ids[i]);
  }
  return out;
}

std::vector<std::string> synthetic_corpus(const StubLM& lm, std::size_t count, std::size_t min_len,
                                          std::size_t max_len, std::uint64_t seed) {
  if (min_len == 0 || min_len > max_len) throw InvalidInput("phrase lengths must satisfy 1 <= min <= max");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(lm.detokenize(lm.sample(len(rng), rng())));
  return out;
}

}  // namespace lmdiff

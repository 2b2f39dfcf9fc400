#pragma once

// Offline preprocessing into a config directory:
//
//   OUT/manifest.json
//   OUT/datasets/<name>.txt
//   OUT/caches/<model>__<dataset>.lmdc
//   OUT/comparisons/<m1>__<m2>__<dataset>.lmdr  (+ .tsv)
//
// Each manifest entry records a digest of its inputs; a rerun with matching
// inputs and intact files leaves everything untouched.

#include <filesystem>
#include <string>
#include <vector>

#include "lmdiff/cache.hpp"
#include "lmdiff/corpus_diff.hpp"
#include "lmdiff/dataset.hpp"
#include "lmdiff/registry.hpp"

namespace lmdiff {

inline constexpr std::uint32_t kManifestVersion = 1;

struct Manifest {
  struct Model {
    std::string model_id;
    std::string spec;
    std::string family;
    std::string vocab_fingerprint;
    double beta = kDefaultBeta;
  };
  struct Dataset {
    std::string name;
    std::string hash;
    std::string file;
    std::size_t phrase_count = 0;
  };
  struct Cache {
    std::string model_id;
    std::string dataset_hash;
    std::string file;
    std::string digest;
    std::string input_key;
  };
  struct Comparison {
    std::string m1;
    std::string m2;
    std::string dataset_hash;
    std::string file;
    std::string table;
    std::string digest;
    std::string input_key;
  };

  std::vector<Model> models;
  std::vector<Dataset> datasets;
  std::vector<Cache> caches;
  std::vector<Comparison> comparisons;

  /// Deterministic JSON text (entries sorted by key).
  std::string render() const;
  static Manifest parse(std::string_view text);

  const Dataset* find_dataset(std::string_view name_or_hash) const;
  const Cache* find_cache(std::string_view model_id, std::string_view dataset_hash) const;
  const Comparison* find_comparison(std::string_view m1, std::string_view m2, std::string_view dataset_hash) const;
};

/// Reads OUT/manifest.json; throws NotFound if absent, FormatError if malformed.
Manifest load_manifest(const std::filesystem::path& dir);

/// Runs `backend` over every phrase. Aborts with InvalidInput naming the phrase
/// index on the first failure; no partial cache is produced.
AnalysisCache extract_cache(Backend& backend, const ModelInfo& info, const DatasetFile& dataset,
                            std::size_t k = kDefaultTopK);

/// Digest identifying a comparison of two cache files under a grid.
std::string comparison_input_key(const std::string& cache1_digest, const std::string& cache2_digest,
                                 const ScoreGrid& grid, std::uint32_t rank_cap);

/// File-name-safe form of a model id: sanitized text plus a short digest.
std::string file_stem(std::string_view id);

struct PreprocessOptions {
  std::size_t k = kDefaultTopK;
  std::uint32_t rank_cap = kDefaultRankCap;
  unsigned threads = 0;
};

struct PreprocessResult {
  std::vector<std::filesystem::path> written;
  std::vector<std::filesystem::path> skipped;
};

/// `preprocess all M1 M2 DATASET --output-dir OUT`. Throws Incomparable before
/// any extraction when the models' vocabularies or beta differ.
PreprocessResult preprocess_all(ModelRegistry& registry, const std::string& m1_spec,
                                const std::string& m2_spec, const std::filesystem::path& dataset_path,
                                const std::filesystem::path& out_dir, const PreprocessOptions& options = {});

}  // namespace lmdiff

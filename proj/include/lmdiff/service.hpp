#pragma once

// The diff service: live two-model analysis, suggestion serving over a
// preprocessed config directory, and the HTTP front end for both.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "json.hpp"
#include "lmdiff/cache.hpp"
#include "lmdiff/corpus_diff.hpp"
#include "lmdiff/preprocess.hpp"
#include "lmdiff/registry.hpp"

namespace httplib {
class Server;
}

namespace lmdiff {

/// A loaded config directory. Caches and comparison results are read lazily
/// and memoized by content digest.
class ConfigStore {
 public:
  /// Throws NotFound/FormatError when the directory is unusable.
  explicit ConfigStore(std::filesystem::path dir);

  const Manifest& manifest() const noexcept { return manifest_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }

  /// Throws NotFound naming the preprocess command when the dataset is unknown.
  const Manifest::Dataset& dataset(std::string_view name_or_hash) const;

  /// Throws NotFound with a remediation hint if no cache was preprocessed.
  std::shared_ptr<const AnalysisCache> cache(const std::string& model_id, const std::string& dataset_hash);

  /// Stored results when present, otherwise scored from the two caches.
  std::shared_ptr<const ComparisonResults> results(const std::string& m1, const std::string& m2,
                                                   const std::string& dataset_hash);

 private:
  std::filesystem::path dir_;
  Manifest manifest_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const AnalysisCache>> caches_;                // by file digest
  std::map<std::string, std::shared_ptr<const ComparisonResults>> results_;          // by digest pair
};

class DiffService {
 public:
  /// `store` is null in cache-free mode.
  DiffService(std::shared_ptr<ModelRegistry> registry, std::shared_ptr<ConfigStore> store = nullptr);

  bool has_config() const noexcept { return store_ != nullptr; }

  nlohmann::json models() const;
  nlohmann::json datasets() const;
  nlohmann::json comparisons() const;

  /// Scores `text` under both models and returns aligned records, all local
  /// measures per token and a histogram of `measure` over the text.
  nlohmann::json analyze(const std::string& m1, const std::string& m2, const std::string& text,
                         const std::string& measure = "clamped_rank_diff",
                         std::size_t bins = kDefaultBinCount) const;

  nlohmann::json suggestions(const std::string& m1, const std::string& m2, const std::string& dataset,
                             const std::string& measure, const std::string& agg,
                             std::size_t n = kDefaultSuggestionCount) const;

  nlohmann::json histogram(const std::string& m1, const std::string& m2, const std::string& dataset,
                           const std::string& measure, const std::string& agg,
                           std::size_t bins = kDefaultBinCount) const;

 private:
  ConfigStore& require_store() const;
  MeasureKey key_for(const std::string& measure, const std::string& agg) const;

  std::shared_ptr<ModelRegistry> registry_;
  std::shared_ptr<ConfigStore> store_;
};

/// HTTP front end for DiffService.
class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<DiffService> service, std::optional<std::filesystem::path> static_dir = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and serves on a background thread. Port 0 picks a free port.
  /// Throws std::runtime_error when the port cannot be bound.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  std::shared_ptr<DiffService> service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

/// Serves a backend over the backend protocol (GET /info, POST /predict).
class BackendServer {
 public:
  explicit BackendServer(std::shared_ptr<Backend> backend);
  ~BackendServer();
  BackendServer(const BackendServer&) = delete;
  BackendServer& operator=(const BackendServer&) = delete;

  int start(const std::string& host, int port);
  void listen(const std::string& host, int port);
  void stop();

 private:
  std::shared_ptr<Backend> backend_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace lmdiff

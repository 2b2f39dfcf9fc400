#include "lmdiff/preprocess.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <future>

#include "json.hpp"
#include "lmdiff/error.hpp"
#include "lmdiff/fileio.hpp"
#include "lmdiff/sha256.hpp"

namespace lmdiff {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class DirLock {
 public:
  explicit DirLock(const fs::path& dir) {
    fs::create_directories(dir);
    const auto path = dir / ".lock";
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) throw std::runtime_error("cannot lock " + path.string());
  }
  ~DirLock() {
    if (fd_ >= 0) ::close(fd_);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  int fd_ = -1;
};

bool file_matches(const fs::path& path, const std::string& digest) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return false;
  return sha256_hex(read_file(path)) == digest;
}

// Writes only when the content differs; returns true if the file was written.
bool write_if_changed(const fs::path& path, std::string_view bytes) {
  std::error_code ec;
  if (fs::is_regular_file(path, ec) && read_file(path) == bytes) return false;
  write_file_atomic(path, bytes);
  return true;
}

template <class T, class Key>
void upsert(std::vector<T>& items, T item, Key key) {
  const auto it = std::find_if(items.begin(), items.end(), [&](const T& x) { return key(x) == key(item); });
  if (it != items.end()) *it = std::move(item);
  else items.push_back(std::move(item));
  std::sort(items.begin(), items.end(), [&](const T& a, const T& b) { return key(a) < key(b); });
}

}  // namespace

std::string Manifest::render() const {
  json j;
  j["format"] = "lmdiff-config";
  j["version"] = kManifestVersion;
  j["models"] = json::array();
  for (const auto& m : models)
    j["models"].push_back({{"model_id", m.model_id}, {"spec", m.spec}, {"family", m.family},
                           {"vocab_fingerprint", m.vocab_fingerprint}, {"beta", m.beta}});
  j["datasets"] = json::array();
  for (const auto& d : datasets)
    j["datasets"].push_back({{"name", d.name}, {"hash", d.hash}, {"file", d.file}, {"phrase_count", d.phrase_count}});
  j["caches"] = json::array();
  for (const auto& c : caches)
    j["caches"].push_back({{"model_id", c.model_id}, {"dataset_hash", c.dataset_hash}, {"file", c.file},
                           {"digest", c.digest}, {"input_key", c.input_key}});
  j["comparisons"] = json::array();
  for (const auto& c : comparisons)
    j["comparisons"].push_back({{"m1", c.m1}, {"m2", c.m2}, {"dataset_hash", c.dataset_hash}, {"file", c.file},
                                {"table", c.table}, {"digest", c.digest}, {"input_key", c.input_key}});
  return j.dump(2) + "\n";
}

Manifest Manifest::parse(std::string_view text) {
  Manifest m;
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "lmdiff-config") throw FormatError("manifest has the wrong format tag");
    if (j.at("version").get<std::uint32_t>() != kManifestVersion)
      throw VersionError("unsupported manifest version " + j.at("version").dump());
    for (const auto& x : j.at("models"))
      m.models.push_back({x.at("model_id"), x.at("spec"), x.at("family"), x.at("vocab_fingerprint"), x.at("beta")});
    for (const auto& x : j.at("datasets"))
      m.datasets.push_back({x.at("name"), x.at("hash"), x.at("file"), x.at("phrase_count")});
    for (const auto& x : j.at("caches"))
      m.caches.push_back({x.at("model_id"), x.at("dataset_hash"), x.at("file"), x.at("digest"), x.at("input_key")});
    for (const auto& x : j.at("comparisons"))
      m.comparisons.push_back({x.at("m1"), x.at("m2"), x.at("dataset_hash"), x.at("file"), x.at("table"),
                               x.at("digest"), x.at("input_key")});
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

const Manifest::Dataset* Manifest::find_dataset(std::string_view name_or_hash) const {
  for (const auto& d : datasets)
    if (d.name == name_or_hash || d.hash == name_or_hash) return &d;
  return nullptr;
}

const Manifest::Cache* Manifest::find_cache(std::string_view model_id, std::string_view dataset_hash) const {
  for (const auto& c : caches)
    if (c.model_id == model_id && c.dataset_hash == dataset_hash) return &c;
  return nullptr;
}

const Manifest::Comparison* Manifest::find_comparison(std::string_view m1, std::string_view m2,
                                                      std::string_view dataset_hash) const {
  for (const auto& c : comparisons)
    if (c.m1 == m1 && c.m2 == m2 && c.dataset_hash == dataset_hash) return &c;
  return nullptr;
}

Manifest load_manifest(const fs::path& dir) {
  const auto path = dir / "manifest.json";
  std::error_code ec;
  if (!fs::is_regular_file(path, ec))
    throw NotFound("no manifest.json in " + dir.string(), "run `lmdiff preprocess all M1 M2 DATASET --output-dir " +
                                                              dir.string() + "` first");
  return Manifest::parse(read_file(path));
}

AnalysisCache extract_cache(Backend& backend, const ModelInfo& info, const DatasetFile& dataset, std::size_t k) {
  AnalysisCache cache;
  cache.model_id = info.model_id;
  cache.vocab_fingerprint = info.vocab_fingerprint;
  cache.dataset_name = dataset.name;
  cache.dataset_hash = dataset.content_hash;
  cache.beta = info.beta;
  cache.k = static_cast<std::uint32_t>(k);
  cache.phrases.reserve(dataset.phrases.size());
  for (std::size_t i = 0; i < dataset.phrases.size(); ++i) {
    try {
      auto resp = backend.predict(dataset.phrases[i], k);
      validate_response(resp, k, info);
      cache.phrases.push_back({dataset.phrases[i], info.model_id, std::move(resp.tokens)});
    } catch (const BackendUnavailable&) {
      throw;
    } catch (const Error& e) {
      throw InvalidInput("extraction failed on phrase " + std::to_string(i) + ": " + e.what());
    }
  }
  return cache;
}

std::string comparison_input_key(const std::string& cache1_digest, const std::string& cache2_digest,
                                 const ScoreGrid& grid, std::uint32_t rank_cap) {
  json cols = json::array();
  for (const auto& c : grid.columns) cols.push_back(column_name(c));
  return sha256_hex(json{{"c1", cache1_digest}, {"c2", cache2_digest}, {"grid", cols}, {"rank_cap", rank_cap},
                         {"format", kResultsFormatVersion}}
                        .dump());
}

std::string file_stem(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' || c == '_';
    out += keep ? c : '_';
  }
  if (out.size() > 48) out.resize(48);
  return out + "-" + sha256_hex(id).substr(0, 8);
}

PreprocessResult preprocess_all(ModelRegistry& registry, const std::string& m1_spec, const std::string& m2_spec,
                                const fs::path& dataset_path, const fs::path& out_dir,
                                const PreprocessOptions& options) {
  const DatasetFile dataset = load_dataset(dataset_path);
  const ModelDescriptor d1 = registry.add(m1_spec);
  const ModelDescriptor d2 = registry.add(m2_spec);
  if (d1.vocab_fingerprint != d2.vocab_fingerprint)
    throw Incomparable("models '" + d1.model_id + "' and '" + d2.model_id + "' use different vocabularies");
  if (d1.beta != d2.beta)
    throw Incomparable("models '" + d1.model_id + "' and '" + d2.model_id + "' use different softmax beta");

  DirLock lock(out_dir);
  PreprocessResult result;
  Manifest manifest;
  if (fs::exists(out_dir / "manifest.json")) manifest = load_manifest(out_dir);

  auto record = [&](const fs::path& p, bool written) { (written ? result.written : result.skipped).push_back(p); };

  const std::string ds_file = "datasets/" + file_stem(dataset.name) + ".txt";
  record(out_dir / ds_file, write_if_changed(out_dir / ds_file, render_dataset(dataset.name, dataset.phrases)));
  upsert(manifest.datasets, Manifest::Dataset{dataset.name, dataset.content_hash, ds_file, dataset.phrases.size()},
         [](const auto& d) { return d.hash; });

  std::string cache_digest[2];
  std::vector<std::future<void>> jobs;
  const ModelDescriptor* descs[2] = {&d1, &d2};
  std::vector<Manifest::Cache> new_caches(2);
  bool cache_written[2] = {false, false};
  for (int m = 0; m < 2; ++m) {
    const auto& d = *descs[m];
    upsert(manifest.models,
           Manifest::Model{d.model_id, d.spec, std::string(family_name(d.family)), d.vocab_fingerprint, d.beta},
           [](const auto& x) { return x.model_id; });
    const std::string file = "caches/" + file_stem(d.model_id) + "__" + file_stem(dataset.name) + ".lmdc";
    const std::string input_key =
        sha256_hex(json{{"spec", d.spec}, {"model_id", d.model_id}, {"vocab", d.vocab_fingerprint}, {"beta", d.beta},
                        {"dataset", dataset.content_hash}, {"k", options.k}, {"format", kCacheFormatVersion}}
                       .dump());
    const auto* prior = manifest.find_cache(d.model_id, dataset.content_hash);
    if (prior != nullptr && prior->input_key == input_key && prior->file == file &&
        file_matches(out_dir / file, prior->digest)) {
      cache_digest[m] = prior->digest;
      new_caches[m] = *prior;
      continue;
    }
    // The two backends may be slow; extract concurrently.
    jobs.push_back(std::async(std::launch::async, [&, m, file, input_key] {
      const auto entry = registry.get(descs[m]->model_id);
      const ModelInfo info{descs[m]->model_id, descs[m]->family, descs[m]->vocab_fingerprint, descs[m]->beta,
                           entry.backend->info().vocab_size};
      const std::string bytes = write_cache(extract_cache(*entry.backend, info, dataset, options.k));
      cache_written[m] = write_if_changed(out_dir / file, bytes);
      cache_digest[m] = sha256_hex(bytes);
      new_caches[m] = {descs[m]->model_id, dataset.content_hash, file, cache_digest[m], input_key};
    }));
  }
  for (auto& j : jobs) j.get();
  for (int m = 0; m < 2; ++m) {
    record(out_dir / new_caches[m].file, cache_written[m]);
    upsert(manifest.caches, new_caches[m], [](const auto& c) { return c.model_id + "\n" + c.dataset_hash; });
  }

  const ScoreGrid grid = ScoreGrid::default_grid();
  const std::string cmp_key = comparison_input_key(cache_digest[0], cache_digest[1], grid, options.rank_cap);
  const std::string stem = "comparisons/" + file_stem(d1.model_id) + "__" + file_stem(d2.model_id) + "__" +
                           file_stem(dataset.name);
  const std::string cmp_file = stem + ".lmdr";
  const std::string cmp_table = stem + ".tsv";
  const auto* prior = manifest.find_comparison(d1.model_id, d2.model_id, dataset.content_hash);
  if (prior != nullptr && prior->input_key == cmp_key && prior->file == cmp_file &&
      file_matches(out_dir / cmp_file, prior->digest) && fs::exists(out_dir / cmp_table)) {
    record(out_dir / cmp_file, false);
    record(out_dir / cmp_table, false);
  } else {
    const auto c1 = read_cache(read_file(out_dir / new_caches[0].file));
    const auto c2 = read_cache(read_file(out_dir / new_caches[1].file));
    const auto results = score_corpus(c1, c2, grid, options.rank_cap, options.threads);
    const std::string bytes = write_results(results);
    record(out_dir / cmp_file, write_if_changed(out_dir / cmp_file, bytes));
    record(out_dir / cmp_table, write_if_changed(out_dir / cmp_table, write_results_tsv(results)));
    upsert(manifest.comparisons,
           Manifest::Comparison{d1.model_id, d2.model_id, dataset.content_hash, cmp_file, cmp_table,
                                sha256_hex(bytes), cmp_key},
           [](const auto& c) { return c.m1 + "\n" + c.m2 + "\n" + c.dataset_hash; });
  }

  record(out_dir / "manifest.json", write_if_changed(out_dir / "manifest.json", manifest.render()));
  return result;
}

}  // namespace lmdiff

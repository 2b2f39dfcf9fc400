#include "lmdiff/service.hpp"

#include <algorithm>
#include <future>

#include "httplib.h"
#include "lmdiff/error.hpp"
#include "lmdiff/fileio.hpp"
#include "lmdiff/payload.hpp"
#include "lmdiff/sha256.hpp"

namespace lmdiff {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string preprocess_hint(const std::string& m1, const std::string& m2, const std::string& dataset) {
  return "run `lmdiff preprocess all " + m1 + " " + m2 + " " + dataset + " --output-dir DIR` and serve DIR";
}

std::string trim(const std::string& s) {
  const auto* ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// ConfigStore

ConfigStore::ConfigStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  if (!fs::is_directory(dir_, ec)) throw NotFound("config directory " + dir_.string() + " does not exist");
  manifest_ = load_manifest(dir_);
  for (const auto& d : manifest_.datasets) {
    const auto ds = load_dataset(dir_ / d.file);
    if (ds.content_hash != d.hash)
      throw IntegrityError("dataset file " + d.file + " does not match its manifest hash");
  }
  for (const auto& c : manifest_.caches)
    if (!fs::is_regular_file(dir_ / c.file, ec)) throw FormatError("config references missing cache " + c.file);
  for (const auto& c : manifest_.comparisons)
    if (!fs::is_regular_file(dir_ / c.file, ec)) throw FormatError("config references missing results " + c.file);
}

const Manifest::Dataset& ConfigStore::dataset(std::string_view name_or_hash) const {
  const auto* d = manifest_.find_dataset(name_or_hash);
  if (d == nullptr)
    throw NotFound("dataset '" + std::string(name_or_hash) + "' is not in the config",
                   preprocess_hint("M1", "M2", std::string(name_or_hash)));
  return *d;
}

std::shared_ptr<const AnalysisCache> ConfigStore::cache(const std::string& model_id,
                                                        const std::string& dataset_hash) {
  const auto* entry = manifest_.find_cache(model_id, dataset_hash);
  if (entry == nullptr)
    throw NotFound("no cache for model '" + model_id + "' on dataset " + dataset_hash.substr(0, 12),
                   preprocess_hint(model_id, "M2", "DATASET"));
  {
    std::lock_guard lock(mu_);
    if (auto it = caches_.find(entry->digest); it != caches_.end()) return it->second;
  }
  const std::string bytes = read_file(dir_ / entry->file);
  if (sha256_hex(bytes) != entry->digest) throw IntegrityError("cache " + entry->file + " does not match its digest");
  auto cache = std::make_shared<const AnalysisCache>(read_cache(bytes));
  std::lock_guard lock(mu_);
  return caches_.emplace(entry->digest, std::move(cache)).first->second;
}

std::shared_ptr<const ComparisonResults> ConfigStore::results(const std::string& m1, const std::string& m2,
                                                              const std::string& dataset_hash) {
  const auto* e1 = manifest_.find_cache(m1, dataset_hash);
  const auto* e2 = manifest_.find_cache(m2, dataset_hash);
  if (e1 == nullptr || e2 == nullptr) {
    const std::string& missing = e1 == nullptr ? m1 : m2;
    throw NotFound("no cache for model '" + missing + "' on dataset " + dataset_hash.substr(0, 12),
                   preprocess_hint(m1, m2, "DATASET"));
  }
  const ScoreGrid grid = ScoreGrid::default_grid();
  const std::string key = comparison_input_key(e1->digest, e2->digest, grid, kDefaultRankCap);
  {
    std::lock_guard lock(mu_);
    if (auto it = results_.find(key); it != results_.end()) return it->second;
  }

  std::shared_ptr<const ComparisonResults> res;
  const auto* stored = manifest_.find_comparison(m1, m2, dataset_hash);
  if (stored != nullptr && stored->input_key == key) {
    const std::string bytes = read_file(dir_ / stored->file);
    if (sha256_hex(bytes) == stored->digest) res = std::make_shared<const ComparisonResults>(read_results(bytes));
  }
  if (!res) {
    const auto c1 = cache(m1, dataset_hash);
    const auto c2 = cache(m2, dataset_hash);
    res = std::make_shared<const ComparisonResults>(score_corpus(*c1, *c2, grid));
  }
  std::lock_guard lock(mu_);
  return results_.emplace(key, std::move(res)).first->second;
}

// ---------------------------------------------------------------------------
// DiffService

DiffService::DiffService(std::shared_ptr<ModelRegistry> registry, std::shared_ptr<ConfigStore> store)
    : registry_(std::move(registry)), store_(std::move(store)) {}

ConfigStore& DiffService::require_store() const {
  if (!store_)
    throw NotFound("no preprocessed data is loaded (cache-free mode)",
                   "start the server with `lmdiff serve --config DIR` after running `lmdiff preprocess all`");
  return *store_;
}

json DiffService::models() const {
  json out = json::array();
  for (const auto& d : registry_->list())
    out.push_back({{"model_id", d.model_id},
                   {"family", family_name(d.family)},
                   {"backend", d.kind == BackendKind::Stub ? "stub" : "remote"},
                   {"vocab_fingerprint", d.vocab_fingerprint},
                   {"beta", d.beta}});
  return {{"models", out}};
}

json DiffService::datasets() const {
  json out = json::array();
  for (const auto& d : require_store().manifest().datasets)
    out.push_back({{"name", d.name}, {"hash", d.hash}, {"phrase_count", d.phrase_count}});
  return {{"datasets", out}};
}

json DiffService::comparisons() const {
  const auto& m = require_store().manifest();
  json out = json::array();
  for (const auto& c : m.comparisons) {
    const auto* d = m.find_dataset(c.dataset_hash);
    out.push_back({{"m1", c.m1}, {"m2", c.m2}, {"dataset", d ? d->name : ""}, {"dataset_hash", c.dataset_hash}});
  }
  return {{"comparisons", out}};
}

json DiffService::analyze(const std::string& m1, const std::string& m2, const std::string& raw_text,
                          const std::string& measure, std::size_t bins) const {
  const std::string text = trim(raw_text);
  if (text.empty()) throw InvalidInput("text is empty");
  const auto measure_id = parse_local_measure(measure);
  if (!measure_id) throw InvalidInput("unknown measure '" + measure + "'");

  const auto e1 = registry_->get(m1);
  const auto e2 = registry_->get(m2);
  if (e1.descriptor.vocab_fingerprint != e2.descriptor.vocab_fingerprint)
    throw Incomparable("models '" + m1 + "' and '" + m2 + "' use different vocabularies");
  if (e1.descriptor.beta != e2.descriptor.beta)
    throw Incomparable("models '" + m1 + "' and '" + m2 + "' use different softmax beta");

  const std::size_t k = kDefaultTopK;
  auto f1 = std::async(std::launch::async, [&] { return e1.backend->predict(text, k); });
  auto f2 = std::async(std::launch::async, [&] { return e2.backend->predict(text, k); });
  // join both before inspecting either
  f1.wait();
  f2.wait();
  PredictionResponse r1 = f1.get();
  PredictionResponse r2 = f2.get();

  auto check = [&](const PredictionResponse& r, const ModelDescriptor& d) {
    if (r.vocab_fingerprint != d.vocab_fingerprint)
      throw Incomparable("backend for '" + d.model_id + "' answered with a different vocabulary than registered");
    try {
      validate_response(r, k, ModelInfo{d.model_id, d.family, d.vocab_fingerprint, d.beta, 0});
    } catch (const FormatError& err) {
      throw BackendUnavailable("backend for '" + d.model_id + "' sent an invalid response", err.what());
    }
  };
  check(r1, e1.descriptor);
  check(r2, e2.descriptor);

  const PhraseAnalysis a1{text, m1, std::move(r1.tokens)};
  const PhraseAnalysis a2{text, m2, std::move(r2.tokens)};
  std::vector<LocalMeasures> local;
  try {
    local = phrase_measures(a1, a2, MeasureConfig{kDefaultRankCap, k});
  } catch (const AlignmentError& err) {
    throw Incomparable("models tokenize the text differently", err.what());
  }

  json tokens = json::array();
  std::vector<double> series;
  series.reserve(local.size());
  for (std::size_t i = 0; i < local.size(); ++i) {
    const auto& t1 = a1.tokens[i];
    json side1 = to_json(t1);
    json side2 = to_json(a2.tokens[i]);
    tokens.push_back({{"position", t1.position},
                      {"id", t1.token_id},
                      {"text", t1.token_text},
                      {"m1", {{"prob", side1["prob"]}, {"rank", side1["rank"]}, {"topk", side1["topk"]}}},
                      {"m2", {{"prob", side2["prob"]}, {"rank", side2["rank"]}, {"topk", side2["topk"]}}},
                      {"measures", to_json(local[i])}});
    series.push_back(measure_value(local[i], *measure_id));
  }
  return {{"m1", m1},
          {"m2", m2},
          {"text", text},
          {"measure", measure},
          {"tokens", std::move(tokens)},
          {"histogram", to_json(make_histogram(series, bins, kDefaultMarkerCount))}};
}

MeasureKey DiffService::key_for(const std::string& measure, const std::string& agg) const {
  return parse_measure_key(measure + ":" + (agg.empty() ? std::string("average") : agg));
}

json DiffService::suggestions(const std::string& m1, const std::string& m2, const std::string& dataset,
                              const std::string& measure, const std::string& agg, std::size_t n) const {
  auto& store = require_store();
  const auto key = key_for(measure, agg);
  const auto& ds = store.dataset(dataset);
  const auto results = store.results(m1, m2, ds.hash);
  const auto set = top_snippets(*results, key, n);
  const auto hist = corpus_histogram(*results, key);
  return {{"m1", m1},
          {"m2", m2},
          {"dataset", ds.name},
          {"dataset_hash", ds.hash},
          {"measure", set.key},
          {"suggestions", to_json(set, *results)},
          {"histogram", to_json(hist)}};
}

json DiffService::histogram(const std::string& m1, const std::string& m2, const std::string& dataset,
                            const std::string& measure, const std::string& agg, std::size_t bins) const {
  auto& store = require_store();
  const auto key = key_for(measure, agg);
  const auto& ds = store.dataset(dataset);
  const auto results = store.results(m1, m2, ds.hash);
  return {{"m1", m1},
          {"m2", m2},
          {"dataset", ds.name},
          {"dataset_hash", ds.hash},
          {"measure", measure_key_name(key)},
          {"histogram", to_json(corpus_histogram(*results, key, bins))}};
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

template <class F>
void respond(httplib::Response& res, F&& body_fn) {
  try {
    res.set_content(body_fn().dump(), "application/json");
    res.status = 200;
  } catch (const Error& e) {
    res.status = http_status(e.code());
    res.set_content(error_body(e).dump(), "application/json");
  } catch (const json::exception& e) {
    res.status = 422;
    res.set_content(error_body(InvalidInput("malformed request body", e.what())).dump(), "application/json");
  } catch (const std::exception& e) {
    res.status = 500;
    res.set_content(json{{"code", "internal"}, {"message", e.what()}, {"detail", ""}}.dump(), "application/json");
  }
}

std::string param(const httplib::Request& req, const char* name, const std::string& fallback = {}) {
  return req.has_param(name) ? req.get_param_value(name) : fallback;
}

std::string required(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) throw InvalidInput(std::string("missing query parameter '") + name + "'");
  return req.get_param_value(name);
}

std::size_t count_param(const httplib::Request& req, const char* name, std::size_t fallback) {
  if (!req.has_param(name)) return fallback;
  try {
    const long v = std::stol(req.get_param_value(name));
    if (v < 1) throw InvalidInput(std::string(name) + " must be >= 1");
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    throw InvalidInput(std::string(name) + " must be an integer");
  }
}

// httplib's default adds SO_REUSEPORT, which lets a second server share a busy port.
std::unique_ptr<httplib::Server> make_server() {
  auto server = std::make_unique<httplib::Server>();
  server->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  return server;
}

int start_on_thread(httplib::Server& server, std::thread& thread, const std::string& host, int port) {
  const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  thread = std::thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();
  return bound;
}

void stop_server(httplib::Server* server, std::thread& thread) {
  if (server) server->stop();
  if (thread.joinable()) thread.join();
}

}  // namespace

HttpServer::HttpServer(std::shared_ptr<DiffService> service, std::optional<fs::path> static_dir)
    : service_(std::move(service)), server_(make_server()) {
  auto svc = service_;
  server_->Get("/api/models", [svc](const httplib::Request&, httplib::Response& res) {
    respond(res, [&] { return svc->models(); });
  });
  server_->Get("/api/datasets", [svc](const httplib::Request&, httplib::Response& res) {
    respond(res, [&] { return svc->datasets(); });
  });
  server_->Get("/api/comparisons", [svc](const httplib::Request&, httplib::Response& res) {
    respond(res, [&] { return svc->comparisons(); });
  });
  server_->Post("/api/analyze", [svc](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] {
      const json body = json::parse(req.body);
      return svc->analyze(body.at("m1").get<std::string>(), body.at("m2").get<std::string>(),
                          body.at("text").get<std::string>(), body.value("measure", std::string("clamped_rank_diff")));
    });
  });
  server_->Get("/api/suggestions", [svc](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] {
      return svc->suggestions(required(req, "m1"), required(req, "m2"), required(req, "dataset"),
                              param(req, "measure", "clamped_rank_diff"), param(req, "agg", "average"),
                              count_param(req, "n", kDefaultSuggestionCount));
    });
  });
  server_->Get("/api/histogram", [svc](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] {
      return svc->histogram(required(req, "m1"), required(req, "m2"), required(req, "dataset"),
                            param(req, "measure", "clamped_rank_diff"), param(req, "agg", "average"),
                            count_param(req, "bins", kDefaultBinCount));
    });
  });
  if (static_dir) {
    if (!server_->set_mount_point("/", static_dir->string()))
      throw std::runtime_error("static directory " + static_dir->string() + " does not exist");
  } else {
    server_->Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("lmdiff service. API under /api (models, datasets, comparisons, analyze, suggestions, histogram).\n",
                      "text/plain");
    });
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) { return start_on_thread(*server_, thread_, host, port); }

void HttpServer::listen(const std::string& host, int port) {
  if (!server_->listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpServer::stop() { stop_server(server_.get(), thread_); }

BackendServer::BackendServer(std::shared_ptr<Backend> backend)
    : backend_(std::move(backend)), server_(make_server()) {
  auto b = backend_;
  server_->Get("/info", [b](const httplib::Request&, httplib::Response& res) {
    respond(res, [&] { return to_json(b->info()); });
  });
  server_->Post("/predict", [b](const httplib::Request& req, httplib::Response& res) {
    respond(res, [&] {
      const json body = json::parse(req.body);
      const auto k = body.value("k", kDefaultTopK);
      return to_json(b->predict(body.at("text").get<std::string>(), k));
    });
  });
}

BackendServer::~BackendServer() { stop(); }

int BackendServer::start(const std::string& host, int port) { return start_on_thread(*server_, thread_, host, port); }

void BackendServer::listen(const std::string& host, int port) {
  if (!server_->listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

void BackendServer::stop() { stop_server(server_.get(), thread_); }

}  // namespace lmdiff

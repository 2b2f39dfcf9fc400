#include "lmdiff/registry.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <mutex>

#include "lmdiff/error.hpp"

namespace lmdiff {

namespace {

template <class T>
T parse_number(std::string_view text, std::string_view what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw InvalidInput("bad " + std::string(what) + " '" + std::string(text) + "' in model spec");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string env_endpoint(std::string_view model_id) {
  const char* v = std::getenv(backend_env_var(model_id).c_str());
  return v != nullptr ? std::string(v) : std::string();
}

}  // namespace

StubConfig parse_stub_spec(std::string_view spec) {
  if (!spec.starts_with("stub:")) throw InvalidInput("not a stub model spec: '" + std::string(spec) + "'");
  const auto parts = split(spec.substr(5), ',');
  StubConfig cfg;
  cfg.model_id = std::string(spec);
  cfg.seed = parse_number<std::uint64_t>(parts[0], "seed");

  std::size_t vocab_size = cfg.vocab.size();
  struct Bias {
    std::uint32_t lo, hi;
    double amount;
  };
  std::vector<Bias> biases;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto eq = parts[i].find('=');
    if (eq == std::string_view::npos) throw InvalidInput("model spec option '" + std::string(parts[i]) + "' lacks '='");
    const auto key = parts[i].substr(0, eq);
    const auto value = parts[i].substr(eq + 1);
    if (key == "window") {
      cfg.window = parse_number<std::uint32_t>(value, "window");
    } else if (key == "vocab") {
      vocab_size = parse_number<std::size_t>(value, "vocab");
    } else if (key == "beta") {
      cfg.beta = std::strtod(std::string(value).c_str(), nullptr);
      if (!(cfg.beta > 0.0)) throw InvalidInput("beta must be positive in model spec");
    } else if (key == "bias") {
      const auto at = value.find('@');
      const auto dash = value.find('-');
      if (at == std::string_view::npos || dash == std::string_view::npos || dash > at)
        throw InvalidInput("bias must look like LO-HI@AMOUNT");
      biases.push_back({parse_number<std::uint32_t>(value.substr(0, dash), "bias range"),
                        parse_number<std::uint32_t>(value.substr(dash + 1, at - dash - 1), "bias range"),
                        std::strtod(std::string(value.substr(at + 1)).c_str(), nullptr)});
    } else {
      throw InvalidInput("unknown model spec option '" + std::string(key) + "'");
    }
  }
  if (vocab_size < 2) throw InvalidInput("stub vocabulary must hold at least two entries");
  cfg.vocab = default_stub_vocab(vocab_size);
  if (!biases.empty()) {
    cfg.bias.assign(vocab_size, 0.0);
    for (const auto& b : biases) {
      if (b.lo > b.hi || b.hi >= vocab_size) throw InvalidInput("bias range outside vocabulary");
      for (std::uint32_t id = b.lo; id <= b.hi; ++id) cfg.bias[id] += b.amount;
    }
  }
  return cfg;
}

std::string backend_env_var(std::string_view model_id) {
  std::string out = "LMDIFF_BACKEND_";
  for (char c : model_id)
    out += std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : '_';
  return out;
}

const ModelDescriptor& ModelRegistry::add(const std::string& spec) {
  std::string id;
  std::string endpoint;
  if (spec.starts_with("remote:")) {
    const auto at = spec.find('@');
    if (at == std::string::npos || at == 7) throw InvalidInput("remote spec must look like remote:ID@ENDPOINT");
    id = spec.substr(7, at - 7);
    endpoint = spec.substr(at + 1);
  } else if (spec.starts_with("http://") || spec.starts_with("https://")) {
    endpoint = spec;
  } else if (spec.starts_with("stub:")) {
    id = spec;
  } else {
    id = spec;
  }
  if (!id.empty()) {
    if (auto env = env_endpoint(id); !env.empty()) endpoint = env;
  }

  std::shared_ptr<Backend> backend;
  if (!endpoint.empty()) {
    backend = std::make_shared<RemoteBackend>(id, endpoint);
  } else if (spec.starts_with("stub:")) {
    backend = std::make_shared<StubBackend>(parse_stub_spec(spec));
  } else {
    throw NotFound("unknown model '" + spec + "'",
                   "use stub:SEED, remote:ID@ENDPOINT, or set " + backend_env_var(spec));
  }
  return add_backend(spec, std::move(backend));
}

const ModelDescriptor& ModelRegistry::add_backend(std::string spec, std::shared_ptr<Backend> backend,
                                                  const std::string& expected_fingerprint) {
  const ModelInfo info = backend->info();
  ModelDescriptor d;
  d.model_id = info.model_id;
  d.spec = std::move(spec);
  if (auto* remote = dynamic_cast<RemoteBackend*>(backend.get())) {
    d.kind = BackendKind::Remote;
    d.endpoint = remote->endpoint();
  }
  d.vocab_fingerprint = info.vocab_fingerprint;
  d.family = info.family;
  d.beta = info.beta;
  if (!expected_fingerprint.empty() && expected_fingerprint != d.vocab_fingerprint)
    throw Incomparable("backend for '" + d.model_id + "' reports a different vocabulary than recorded");

  std::unique_lock lock(mu_);
  auto& slot = models_[d.model_id];
  slot = Entry{std::move(d), std::move(backend)};
  return slot.descriptor;
}

void ModelRegistry::add_known(ModelDescriptor d) {
  std::shared_ptr<Backend> backend;
  std::string endpoint = env_endpoint(d.model_id);
  if (endpoint.empty() && d.kind == BackendKind::Remote) endpoint = d.endpoint;
  if (endpoint.empty() && d.spec.starts_with("remote:")) {
    const auto at = d.spec.find('@');
    if (at != std::string::npos) endpoint = d.spec.substr(at + 1);
  }
  if (endpoint.empty() && (d.spec.starts_with("http://") || d.spec.starts_with("https://"))) endpoint = d.spec;
  if (!endpoint.empty()) {
    d.kind = BackendKind::Remote;
    d.endpoint = endpoint;
    backend = std::make_shared<RemoteBackend>(d.model_id, endpoint);
  } else {
    backend = std::make_shared<StubBackend>(parse_stub_spec(d.spec));
  }
  std::unique_lock lock(mu_);
  models_[d.model_id] = Entry{std::move(d), std::move(backend)};
}

ModelRegistry::Entry ModelRegistry::get(const std::string& model_id) const {
  std::shared_lock lock(mu_);
  const auto it = models_.find(model_id);
  if (it == models_.end()) throw NotFound("model '" + model_id + "' is not registered");
  return it->second;
}

bool ModelRegistry::contains(const std::string& model_id) const {
  std::shared_lock lock(mu_);
  return models_.count(model_id) > 0;
}

std::vector<ModelDescriptor> ModelRegistry::list() const {
  std::shared_lock lock(mu_);
  std::vector<ModelDescriptor> out;
  for (const auto& [id, e] : models_) out.push_back(e.descriptor);
  return out;
}

}  // namespace lmdiff

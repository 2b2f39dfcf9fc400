#pragma once

// Model registry: resolves model specs to backends and remembers what each
// backend reported about itself.
//
// Spec forms:
//   stub:SEED[,window=W][,vocab=N][,beta=B][,bias=LO-HI@AMOUNT]...
//   remote:ID@ENDPOINT
//   http://host:port            (id taken from the backend's /info)
// The environment variable named by backend_env_var(id) redirects any model
// id to a remote endpoint.

#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "lmdiff/backend.hpp"

namespace lmdiff {

enum class BackendKind { Stub, Remote };

struct ModelDescriptor {
  std::string model_id;
  std::string spec;
  BackendKind kind = BackendKind::Stub;
  std::string endpoint;  // remote only
  std::string vocab_fingerprint;
  ModelFamily family = ModelFamily::Autoregressive;
  double beta = kDefaultBeta;
};

/// Throws InvalidInput for malformed stub specs.
StubConfig parse_stub_spec(std::string_view spec);

/// "LMDIFF_BACKEND_" + model id upper-cased with non-alphanumerics as '_'.
std::string backend_env_var(std::string_view model_id);

class ModelRegistry {
 public:
  struct Entry {
    ModelDescriptor descriptor;
    std::shared_ptr<Backend> backend;
  };

  /// Resolves `spec`, queries the backend and records its info.
  const ModelDescriptor& add(const std::string& spec);

  /// Registers a known descriptor without contacting the backend.
  void add_known(ModelDescriptor descriptor);

  /// Registers an already-built backend, verifying `expected_fingerprint`
  /// (when non-empty) against what the backend reports.
  const ModelDescriptor& add_backend(std::string spec, std::shared_ptr<Backend> backend,
                                     const std::string& expected_fingerprint = {});

  /// Throws NotFound.
  Entry get(const std::string& model_id) const;
  bool contains(const std::string& model_id) const;
  std::vector<ModelDescriptor> list() const;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, Entry> models_;
};

}  // namespace lmdiff

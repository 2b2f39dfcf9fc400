// lmdiff command line: preprocessing, serving, and stub backends.

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "lmdiff/cache.hpp"
#include "lmdiff/error.hpp"
#include "lmdiff/fileio.hpp"
#include "lmdiff/kernels.hpp"
#include "lmdiff/preprocess.hpp"
#include "lmdiff/registry.hpp"
#include "lmdiff/service.hpp"

namespace {

std::function<void()> g_stop;

void on_signal(int) {
  if (g_stop) g_stop();
}

template <class Server>
void run_until_signal(Server& server, const std::string& host, int port) {
  g_stop = [&server] { server.stop(); };
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.listen(host, port);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compare two language models token by token"};
  app.require_subcommand(1);

  // preprocess all M1 M2 DATASET --output-dir OUT
  auto* pre = app.add_subcommand("preprocess", "Precompute caches and comparison tables");
  pre->require_subcommand(1);
  auto* pre_all = pre->add_subcommand("all", "Extract both caches and score the pair");
  std::string m1, m2, dataset, out_dir;
  std::size_t k = lmdiff::kDefaultTopK;
  pre_all->add_option("M1", m1, "First model spec")->required();
  pre_all->add_option("M2", m2, "Second model spec")->required();
  pre_all->add_option("DATASET", dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  pre_all->add_option("--output-dir,-o", out_dir, "Config directory to write")->required();
  pre_all->add_option("--k", k, "Top-k alternatives stored per token")->check(CLI::PositiveNumber);

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string config_dir, static_dir, host = "0.0.0.0";
  std::string serve_m1, serve_m2;
  int port = 8000;
  auto* config_opt = serve->add_option("--config", config_dir, "Config directory from `preprocess all`");
  auto* m1_opt = serve->add_option("--m1", serve_m1, "First model (cache-free mode)");
  auto* m2_opt = serve->add_option("--m2", serve_m2, "Second model (cache-free mode)");
  m1_opt->excludes(config_opt)->needs(m2_opt);
  m2_opt->excludes(config_opt)->needs(m1_opt);
  serve->add_option("--port", port, "Port")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--static", static_dir, "Directory of frontend assets served at /");

  auto* stub = app.add_subcommand("stub-backend", "Serve a stub model over the backend protocol");
  std::string stub_spec;
  int stub_port = 8100;
  stub->add_option("SPEC", stub_spec, "stub:SEED[,window=W][,vocab=N][,bias=LO-HI@AMOUNT]")->required();
  stub->add_option("--port", stub_port, "Port")->capture_default_str();
  stub->add_option("--host", host, "Bind address")->capture_default_str();

  auto* gen = app.add_subcommand("gen-dataset", "Write a synthetic dataset sampled from a stub model");
  std::string gen_spec = "stub:0", gen_name = "synthetic", gen_out;
  std::size_t gen_count = 100, gen_min = 4, gen_max = 16;
  std::uint64_t gen_seed = 0;
  gen->add_option("--spec", gen_spec, "Stub model to sample from")->capture_default_str();
  gen->add_option("--name", gen_name, "Dataset name")->capture_default_str();
  gen->add_option("--count", gen_count, "Number of phrases")->capture_default_str();
  gen->add_option("--min-len", gen_min, "Shortest phrase in tokens")->capture_default_str();
  gen->add_option("--max-len", gen_max, "Longest phrase in tokens")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Sampling seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output file")->required();

  auto* dump = app.add_subcommand("dump-cache", "Print a cache as line-delimited JSON");
  std::string dump_file;
  dump->add_option("FILE", dump_file)->required()->check(CLI::ExistingFile);

  auto* table = app.add_subcommand("dump-results", "Print a comparison results file as a TSV table");
  std::string table_file;
  table->add_option("FILE", table_file)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*pre_all) {
      lmdiff::ModelRegistry registry;
      lmdiff::PreprocessOptions opts;
      opts.k = k;
      const auto res = lmdiff::preprocess_all(registry, m1, m2, dataset, out_dir, opts);
      for (const auto& p : res.written) std::cout << "wrote   " << p.string() << "\n";
      for (const auto& p : res.skipped) std::cout << "skipped " << p.string() << "\n";
      std::cout << "config directory: " << out_dir << "\n";
    } else if (*serve) {
      auto registry = std::make_shared<lmdiff::ModelRegistry>();
      std::shared_ptr<lmdiff::ConfigStore> store;
      if (!config_dir.empty()) {
        store = std::make_shared<lmdiff::ConfigStore>(config_dir);
        for (const auto& m : store->manifest().models)
          registry->add_known({m.model_id, m.spec, lmdiff::BackendKind::Stub, "", m.vocab_fingerprint,
                               lmdiff::parse_family(m.family), m.beta});
      } else if (!serve_m1.empty()) {
        registry->add(serve_m1);
        registry->add(serve_m2);
      } else {
        std::cerr << "serve needs --config DIR or --m1 ID --m2 ID\n";
        return 2;
      }
      auto service = std::make_shared<lmdiff::DiffService>(registry, store);
      std::optional<std::filesystem::path> assets;
      if (!static_dir.empty()) assets = static_dir;
      lmdiff::HttpServer server(service, assets);
      std::cerr << "lmdiff serving on " << host << ":" << port << " ("
                << (store ? "config " + config_dir : std::string("cache-free")) << ", kernels "
                << lmdiff::kernels::isa_name(lmdiff::kernels::active().isa) << ")\n";
      run_until_signal(server, host, port);
    } else if (*stub) {
      auto backend = std::make_shared<lmdiff::StubBackend>(lmdiff::parse_stub_spec(stub_spec));
      lmdiff::BackendServer server(backend);
      std::cerr << "stub backend " << stub_spec << " on " << host << ":" << stub_port << "\n";
      run_until_signal(server, host, stub_port);
    } else if (*gen) {
      const lmdiff::StubLM lm(lmdiff::parse_stub_spec(gen_spec));
      const auto phrases = lmdiff::synthetic_corpus(lm, gen_count, gen_min, gen_max, gen_seed);
      lmdiff::write_file_atomic(gen_out, lmdiff::render_dataset(gen_name, phrases));
    } else if (*dump) {
      std::cout << lmdiff::write_cache_jsonl(lmdiff::read_cache(lmdiff::read_file(dump_file)));
    } else if (*table) {
      std::cout << lmdiff::write_results_tsv(lmdiff::read_results(lmdiff::read_file(table_file)));
    }
  } catch (const lmdiff::Error& e) {
    std::cerr << "error (" << lmdiff::error_code_name(e.code()) << "): " << e.what() << "\n";
    if (!e.detail().empty()) std::cerr << "  " << e.detail() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#include <filesystem>

#include "doctest.h"
#include "lmdiff/error.hpp"
#include "lmdiff/fileio.hpp"
#include "lmdiff/preprocess.hpp"
#include "lmdiff/sha256.hpp"
#include "lmdiff/registry.hpp"
#include "lmdiff/service.hpp"
#include "test_util.hpp"

using namespace lmdiff;
namespace fs = std::filesystem;

namespace {

fs::path write_corpus(const fs::path& dir, std::size_t count, std::uint64_t seed) {
  const StubLM lm(parse_stub_spec("stub:1"));
  const auto path = dir / "corpus.txt";
  write_file_atomic(path, render_dataset("corpus", synthetic_corpus(lm, count, 3, 12, seed)));
  return path;
}

std::map<fs::path, std::string> snapshot(const fs::path& dir) {
  std::map<fs::path, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != ".lock") out[fs::relative(e.path(), dir)] = read_file(e.path());
  return out;
}

}  // namespace

TEST_CASE("preprocess all writes caches, results and manifest; reruns are no-ops") {
  const auto dir = testutil::temp_dir("pre");
  const auto dataset = write_corpus(dir, 10, 3);
  const auto out = dir / "config";

  ModelRegistry reg;
  const auto first = preprocess_all(reg, "stub:1", "stub:2", dataset, out);
  CHECK(first.skipped.empty());
  const auto manifest = load_manifest(out);
  CHECK(manifest.models.size() == 2);
  REQUIRE(manifest.datasets.size() == 1);
  CHECK(manifest.datasets[0].phrase_count == 10);
  CHECK(manifest.caches.size() == 2);
  CHECK(manifest.comparisons.size() == 1);
  for (const auto& c : manifest.caches) {
    const auto cache = read_cache(read_file(out / c.file));
    CHECK(cache.phrases.size() == 10);
    CHECK(sha256_hex(read_file(out / c.file)) == c.digest);
  }
  const auto results = read_results(read_file(out / manifest.comparisons[0].file));
  CHECK(results.rows.size() == 10);
  CHECK(results.m1_id == "stub:1");

  const auto before = snapshot(out);
  std::map<fs::path, fs::file_time_type> mtimes;
  for (const auto& [rel, _] : before) mtimes[rel] = fs::last_write_time(out / rel);
  ModelRegistry reg2;
  const auto second = preprocess_all(reg2, "stub:1", "stub:2", dataset, out);
  CHECK(second.written.empty());
  CHECK_FALSE(second.skipped.empty());
  for (const auto& [rel, t] : mtimes) CHECK(fs::last_write_time(out / rel) == t);

  // regeneration from scratch is byte-identical
  const auto fresh = dir / "fresh";
  ModelRegistry reg3;
  preprocess_all(reg3, "stub:1", "stub:2", dataset, fresh);
  CHECK(snapshot(fresh) == before);
  fs::remove_all(dir);
}

TEST_CASE("preprocess refuses incomparable models before extracting") {
  const auto dir = testutil::temp_dir("pre-bad");
  const auto dataset = write_corpus(dir, 4, 5);
  ModelRegistry reg;
  CHECK_THROWS_AS(preprocess_all(reg, "stub:1", "stub:2,vocab=60", dataset, dir / "out"), Incomparable);
  CHECK_THROWS_AS(preprocess_all(reg, "stub:1", "stub:2,beta=2", dataset, dir / "out"), Incomparable);
  CHECK_FALSE(fs::exists(dir / "out" / "caches"));

  write_file_atomic(dir / "broken.txt", "---\nname: broken\nchecksum: 00\n---\nhello\n");
  write_file_atomic(dir / "headless.txt", "hello\nworld\n");
  CHECK_THROWS_AS(preprocess_all(reg, "stub:1", "stub:2", dir / "headless.txt", dir / "out1"), FormatError);
  CHECK_THROWS_AS(preprocess_all(reg, "stub:1", "stub:2", dir / "broken.txt", dir / "out2"), IntegrityError);
  CHECK_THROWS_AS(preprocess_all(reg, "stub:1", "stub:2", dir / "missing.txt", dir / "out3"), NotFound);
  fs::remove_all(dir);
}

TEST_CASE("config store rejects unusable directories") {
  const auto dir = testutil::temp_dir("store");
  CHECK_THROWS_AS(ConfigStore(dir / "nope"), NotFound);

  const auto dataset = write_corpus(dir, 5, 9);
  ModelRegistry reg;
  preprocess_all(reg, "stub:1", "stub:2", dataset, dir / "cfg");
  CHECK_NOTHROW(ConfigStore(dir / "cfg"));

  write_file_atomic(dir / "cfg" / "manifest.json", "{\"format\": \"something-else\"");
  CHECK_THROWS_AS(ConfigStore(dir / "cfg"), FormatError);

  ModelRegistry reg2;
  preprocess_all(reg2, "stub:1", "stub:2", dataset, dir / "cfg2");
  const auto m = load_manifest(dir / "cfg2");
  fs::remove(dir / "cfg2" / m.caches[0].file);
  CHECK_THROWS(ConfigStore(dir / "cfg2"));
  fs::remove_all(dir);
}

TEST_CASE("file stems are safe and distinct") {
  const auto a = file_stem("stub:1,bias=1-50@3");
  const auto b = file_stem("stub:1,bias=1_50@3");
  CHECK(a != b);
  for (char c : a) CHECK((std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.'));
}

#include <random>

#include "doctest.h"
#include "lmdiff/cache.hpp"
#include "lmdiff/dataset.hpp"
#include "lmdiff/error.hpp"
#include "lmdiff/sha256.hpp"
#include "lmdiff/stub_lm.hpp"
#include "test_util.hpp"

using namespace lmdiff;

TEST_CASE("sha256: known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("hello") == "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824");
  CHECK(Sha256().update("hel").update("lo").hex_digest() == sha256_hex("hello"));
}

TEST_CASE("parse_dataset: header and body") {
  const auto ds = parse_dataset("---\nname: demo\nsource: unit test\n---\na b c\nd e\n");
  CHECK(ds.name == "demo");
  REQUIRE(ds.phrases.size() == 2);
  CHECK(ds.phrases[0] == "a b c");
  CHECK(ds.phrases[1] == "d e");
  // sha256("a b c\nd e") computed with python hashlib
  CHECK(ds.content_hash == "bd22cf48050c4aa2f5bd2ef7d6cd50b027ac388de1b37a8f41a2c0371da8a960");
  CHECK(ds.header.size() == 2);
  CHECK(ds.header[1].first == "source");
}

TEST_CASE("parse_dataset: hash of a single phrase") {
  const auto ds = parse_dataset("---\nname: h\n---\nhello");
  CHECK(ds.content_hash == "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824");
}

TEST_CASE("parse_dataset: blank lines skipped, CRLF tolerated, checksum verified") {
  const auto ds = parse_dataset("---\r\nname: \"quoted\"\r\n---\r\n\r\nhello\r\n\r\n");
  CHECK(ds.name == "quoted");
  CHECK(ds.phrases == std::vector<std::string>{"hello"});

  const std::string ok = "---\nname: c\nchecksum: 2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824\n---\nhello\n";
  CHECK_NOTHROW(parse_dataset(ok));
  const std::string bad = "---\nname: c\nchecksum: 00\n---\nhello\n";
  CHECK_THROWS_AS(parse_dataset(bad), IntegrityError);
}

TEST_CASE("parse_dataset: format errors") {
  CHECK_THROWS_AS(parse_dataset("name: x\n---\nhello"), FormatError);
  CHECK_THROWS_AS(parse_dataset("---\nname: x\nhello"), FormatError);
  CHECK_THROWS_AS(parse_dataset("---\nnot a pair\n---\nhello"), FormatError);
  CHECK_THROWS_AS(parse_dataset("---\nsource: x\n---\nhello"), FormatError);
  CHECK_THROWS_AS(parse_dataset("---\nname: x\n---\n\n  \n"), FormatError);
  CHECK_THROWS_AS(parse_dataset(""), FormatError);
}

TEST_CASE("dataset hash is order-sensitive and render round-trips") {
  std::vector<std::string> p{"one", "two", "three"};
  const auto h = dataset_content_hash(p);
  std::swap(p[0], p[2]);
  CHECK(dataset_content_hash(p) != h);
  const auto ds = parse_dataset(render_dataset("r", p));
  CHECK(ds.phrases == p);
  CHECK(ds.content_hash == dataset_content_hash(p));
}

TEST_CASE("vocab_fingerprint: canonical over id order") {
  const std::vector<VocabEntry> a{{0, "<unk>"}, {1, "a"}, {2, "b"}};
  const std::vector<VocabEntry> b{{2, "b"}, {0, "<unk>"}, {1, "a"}};
  CHECK(vocab_fingerprint(a) == vocab_fingerprint(b));
  CHECK(vocab_fingerprint(a) == sha256_hex("0\t<unk>\n1\ta\n2\tb\n"));
  const std::vector<VocabEntry> c{{0, "<unk>"}, {1, "a"}, {2, "c"}};
  CHECK(vocab_fingerprint(a) != vocab_fingerprint(c));
}

TEST_CASE("cache: small round trip") {
  std::mt19937_64 rng(1);
  const auto c = testutil::random_cache(rng, 1, 3);
  const auto bytes = write_cache(c);
  CHECK(bytes.substr(0, 4) == "LMDC");
  CHECK(read_cache(bytes) == c);
  CHECK(write_cache(read_cache(bytes)) == bytes);
}

TEST_CASE("cache: stub-generated 100-phrase corpus round-trips in binary and JSONL") {
  StubConfig cfg;
  cfg.model_id = "stub:5";
  cfg.seed = 5;
  const StubLM lm(cfg);
  const auto phrases = synthetic_corpus(lm, 100, 3, 20, 42);
  AnalysisCache c;
  c.model_id = cfg.model_id;
  c.vocab_fingerprint = lm.fingerprint();
  c.dataset_name = "synthetic";
  c.dataset_hash = dataset_content_hash(phrases);
  for (const auto& p : phrases) c.phrases.push_back({p, c.model_id, lm.predict(p, 10).tokens});

  const auto bytes = write_cache(c);
  const auto back = read_cache(bytes);
  CHECK(back == c);

  const auto dump = write_cache_jsonl(c);
  CHECK(read_cache_jsonl(dump) == c);
  CHECK(write_cache(read_cache_jsonl(dump)) == bytes);

  // regenerate from the stub and compare bytes
  AnalysisCache again = c;
  again.phrases.clear();
  for (const auto& p : phrases) again.phrases.push_back({p, c.model_id, lm.predict(p, 10).tokens});
  CHECK(write_cache(again) == bytes);
}

TEST_CASE("cache: corrupt input is rejected") {
  std::mt19937_64 rng(2);
  const auto c = testutil::random_cache(rng, 3, 5);
  const auto bytes = write_cache(c);

  auto flipped = bytes;
  flipped[0] = 'X';
  CHECK_THROWS_AS(read_cache(flipped), FormatError);

  auto version = bytes;
  version[4] = 2;
  CHECK_THROWS_AS(read_cache(version), VersionError);

  for (std::size_t cut : {std::size_t{3}, std::size_t{6}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1})
    CHECK_THROWS_AS(read_cache(bytes.substr(0, cut)), FormatError);

  CHECK_THROWS_AS(read_cache(bytes + "x"), FormatError);
  CHECK_THROWS_AS(read_cache_jsonl("{\"format\":\"other\"}\n"), FormatError);
}

TEST_CASE("cache: write validates invariants") {
  std::mt19937_64 rng(3);
  auto c = testutil::random_cache(rng, 2, 4);
  c.phrases[1].model_id = "other";
  CHECK_THROWS_AS(write_cache(c), InvalidInput);
  c = testutil::random_cache(rng, 2, 4);
  c.phrases[0].tokens[0].topk.pop_back();
  CHECK_THROWS_AS(write_cache(c), InvalidInput);
  c = testutil::random_cache(rng, 2, 4);
  c.phrases[0].tokens.clear();
  CHECK_THROWS_AS(write_cache(c), InvalidInput);
}

TEST_CASE("check_comparable: each axis") {
  std::mt19937_64 rng(4);
  const auto base = testutil::random_cache(rng, 1, 2, "a");
  auto other = base;
  other.model_id = "b";
  CHECK(check_comparable(base, other).comparable);
  CHECK(check_comparable(base, other).reasons.empty());

  other.dataset_hash = std::string(64, 'c');
  auto r = check_comparable(base, other);
  CHECK_FALSE(r.comparable);
  CHECK(r.reasons.size() == 1);

  other.vocab_fingerprint = std::string(64, 'd');
  r = check_comparable(base, other);
  CHECK(r.reasons.size() == 2);
}

TEST_CASE("check_comparable: stub models sharing a vocabulary are comparable") {
  StubConfig a;
  a.seed = 1;
  StubConfig b;
  b.seed = 2;
  CHECK(StubLM(a).fingerprint() == StubLM(b).fingerprint());
  StubConfig c;
  c.vocab = default_stub_vocab(60);
  CHECK(StubLM(a).fingerprint() != StubLM(c).fingerprint());
}

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "lmdiff/error.hpp"
#include "lmdiff/measures.hpp"
#include "lmdiff/stub_lm.hpp"
#include "test_util.hpp"

using namespace lmdiff;

namespace {

TokenRecord record(std::uint32_t pos, std::uint32_t id, float prob, std::uint32_t rank,
                   std::vector<std::uint32_t> top_ids) {
  TokenRecord r;
  r.position = pos;
  r.token_id = id;
  r.target_prob = prob;
  r.target_rank = rank;
  float p = 0.5F;
  for (auto tid : top_ids) {
    r.topk.push_back({tid, tid == id ? prob : p});
    p *= 0.5F;
  }
  return r;
}

std::vector<std::uint32_t> iota_ids(std::uint32_t from, std::size_t n = 10) {
  std::vector<std::uint32_t> v(n);
  std::iota(v.begin(), v.end(), from);
  return v;
}

}  // namespace

TEST_CASE("softmax: examples") {
  const std::vector<double> zero{0.0, 0.0};
  const auto half = softmax(zero, 1.0);
  CHECK(half[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(half[1] == doctest::Approx(0.5).epsilon(1e-12));

  for (double beta : {0.1, 1.0, 7.0}) {
    const std::vector<double> c(4, 3.25);
    for (double p : softmax(c, beta)) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
  }

  // e^x / sum e^x for [2, 1, 0.5]
  const std::vector<double> x{2.0, 1.0, 0.5};
  const auto p = softmax(x, 1.0);
  CHECK(std::abs(p[0] - 0.62853) < 1e-4);
  CHECK(std::abs(p[1] - 0.23122) < 1e-4);
  CHECK(std::abs(p[2] - 0.14024) < 1e-4);
  const auto o = testutil::oracle_softmax(x, 1.0);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(p[i] - o[i]) < 1e-12);
}

TEST_CASE("softmax: stable for large logits and sums to one") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-800.0, 800.0);
  std::vector<double> x(1000);
  for (auto& v : x) v = u(rng);
  const auto p = softmax(x, 1.0);
  double sum = 0.0;
  for (double v : p) {
    CHECK(std::isfinite(v));
    sum += v;
  }
  CHECK(std::abs(sum - 1.0) < 1e-9);
}

TEST_CASE("softmax: errors") {
  CHECK_THROWS_AS(softmax(std::vector<double>{}, 1.0), InvalidInput);
  CHECK_THROWS_AS(softmax(std::vector<double>{1.0, NAN}, 1.0), InvalidInput);
  CHECK_THROWS_AS(softmax(std::vector<double>{1.0, INFINITY}, 1.0), InvalidInput);
  CHECK_THROWS_AS(softmax(std::vector<double>{1.0}, 0.0), InvalidInput);
  CHECK_THROWS_AS(softmax(std::vector<double>{1.0}, -1.0), InvalidInput);
}

TEST_CASE("rank_of_target: examples") {
  CHECK(rank_of_target(std::vector<double>{0.6285, 0.2312, 0.1402}, 0) == 1);
  CHECK(rank_of_target(std::vector<double>{0.25, 0.25, 0.25, 0.25}, 2) == 3);

  std::vector<double> u(100, 1.0 / 100);
  u[7] += 1e-9;
  CHECK(rank_of_target(u, 7) == testutil::oracle_rank(u, 7));
  CHECK(rank_of_target(u, 7) == 1);
  CHECK(rank_of_target(u, 0) == 2);
  CHECK(rank_of_target(u, 99) == 100);

  CHECK_THROWS_AS(rank_of_target(u, 100), InvalidInput);
}

TEST_CASE("clamp_rank: examples") {
  CHECK(clamp_rank(3) == 3);
  CHECK(clamp_rank(50) == 50);
  CHECK(clamp_rank(466) == 50);
  CHECK(clamp_rank(1, 1) == 1);
  CHECK(clamp_rank(7, 5) == 5);
}

TEST_CASE("topk_disagreement: examples") {
  const auto a = record(1, 0, 0.5F, 1, iota_ids(0));
  CHECK(topk_disagreement(a.topk, a.topk) == 0);
  const auto b = record(1, 100, 0.5F, 1, iota_ids(100));
  CHECK(topk_disagreement(a.topk, b.topk) == 10);

  // ids 0..9 vs 3..12: enumerate the set difference by hand
  const auto c = record(1, 3, 0.5F, 1, iota_ids(3));
  std::vector<std::uint32_t> ia = iota_ids(0), ic = iota_ids(3), diff;
  std::set_difference(ia.begin(), ia.end(), ic.begin(), ic.end(), std::back_inserter(diff));
  CHECK(diff.size() == 3);
  CHECK(topk_disagreement(a.topk, c.topk) == 3);
  CHECK(topk_disagreement(c.topk, a.topk) == 3);

  std::vector<TopEntry> nine(a.topk.begin(), a.topk.begin() + 9);
  CHECK_THROWS_AS(topk_disagreement(nine, a.topk), InvalidInput);
}

TEST_CASE("local_measures: rank examples from the clamping discussion") {
  const auto top = iota_ids(500);
  auto m1 = record(1, 42, 0.01F, 1, top);
  auto m2 = record(1, 42, 0.01F, 5, top);
  m1.target_rank = 1;
  auto lm = local_measures(m1, m2);
  CHECK(lm.rank_diff == 4);
  CHECK(lm.clamped_rank_diff == 4);

  m1.target_rank = 44;
  m2.target_rank = 60;
  lm = local_measures(m1, m2);
  CHECK(lm.rank_diff == 16);
  CHECK(lm.clamped_rank_diff == 6);

  const auto self = local_measures(m1, m1);
  CHECK(self.prob_diff == 0.0);
  CHECK(self.rank_diff == 0);
  CHECK(self.clamped_rank_diff == 0);
  CHECK(self.topk_disagreement == 0);
}

TEST_CASE("local_measures: misaligned tokens raise AlignmentError") {
  const auto a = record(1, 3, 0.1F, 2, iota_ids(0));
  const auto b = record(1, 4, 0.1F, 2, iota_ids(0));
  CHECK_THROWS_AS(local_measures(a, b), AlignmentError);
  auto c = a;
  c.position = 2;
  CHECK_THROWS_AS(local_measures(a, c), AlignmentError);
}

TEST_CASE("phrase_measures: single token arithmetic and alignment errors") {
  PhraseAnalysis a{"x", "m1", {record(1, 100, 0.9F, 1, {100, 1, 2, 3, 4, 5, 6, 7, 8, 9})}};
  PhraseAnalysis b{"x", "m2", {record(1, 100, 0.4F, 2, iota_ids(0))}};
  a.tokens[0].topk[0].prob = 0.9F;
  const auto m = phrase_measures(a, b);
  REQUIRE(m.size() == 1);
  CHECK(m[0].prob_diff == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(m[0].prob_diff == static_cast<double>(0.9F) - static_cast<double>(0.4F));

  PhraseAnalysis c = b;
  c.phrase_text = "y";
  CHECK_THROWS_AS(phrase_measures(a, c), AlignmentError);

  PhraseAnalysis longer = a;
  longer.tokens.push_back(record(2, 5, 0.1F, 3, iota_ids(0)));
  try {
    phrase_measures(a, longer);
    FAIL("expected AlignmentError");
  } catch (const AlignmentError& e) {
    CHECK(e.position == 2);
  }

  PhraseAnalysis swapped = longer;
  swapped.tokens[1].token_id = 6;
  try {
    phrase_measures(longer, swapped);
    FAIL("expected AlignmentError");
  } catch (const AlignmentError& e) {
    CHECK(e.position == 2);
  }
}

TEST_CASE("phrase_measures: two stub models on a 12-token phrase match recomputation from logits") {
  StubConfig c1;
  c1.model_id = "a";
  c1.seed = 11;
  StubConfig c2 = c1;
  c2.model_id = "b";
  c2.seed = 12;
  const StubLM lm1(c1), lm2(c2);
  const std::string text = "the water is good and people know what time it was now";
  const auto r1 = lm1.predict(text, 10);
  const auto r2 = lm2.predict(text, 10);
  REQUIRE(r1.tokens.size() == 12);
  const auto measures = phrase_measures({text, "a", r1.tokens}, {text, "b", r2.tokens});

  const auto toks = lm1.tokenize(text);
  std::vector<std::uint32_t> prefix;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    auto recompute = [&](const StubLM& lm, float& prob, std::uint32_t& rank, std::vector<std::uint32_t>& top) {
      auto p = testutil::oracle_softmax(lm.logits(prefix), 1.0);
      for (auto& v : p) v = static_cast<float>(v);
      prob = static_cast<float>(p[toks[i].id]);
      rank = testutil::oracle_rank(p, toks[i].id);
      std::vector<std::uint32_t> order(p.size());
      std::iota(order.begin(), order.end(), 0U);
      std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return p[x] > p[y]; });
      top.assign(order.begin(), order.begin() + 10);
      std::sort(top.begin(), top.end());
    };
    float p1, p2;
    std::uint32_t k1, k2;
    std::vector<std::uint32_t> t1, t2, missing;
    recompute(lm1, p1, k1, t1);
    recompute(lm2, p2, k2, t2);
    std::set_difference(t1.begin(), t1.end(), t2.begin(), t2.end(), std::back_inserter(missing));

    const auto& m = measures[i];
    CHECK(std::abs(m.prob_m1 - p1) < 1e-6);
    CHECK(std::abs(m.prob_m2 - p2) < 1e-6);
    CHECK(std::abs(m.prob_diff - (static_cast<double>(p1) - p2)) < 1e-6);
    CHECK(m.rank_m1 == k1);
    CHECK(m.rank_m2 == k2);
    CHECK(m.rank_diff == static_cast<std::int64_t>(k2) - k1);
    CHECK(m.clamped_rank_diff == static_cast<std::int64_t>(std::min(k2, 50U)) - std::min(k1, 50U));
    CHECK(m.topk_disagreement == missing.size());
    prefix.push_back(toks[i].id);
  }
}

TEST_CASE("properties: antisymmetry, self-diff zero, clamp bounds") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const auto id = static_cast<std::uint32_t>(rng() % 300);
    const auto a = testutil::random_record(rng, 1, id, 300, 10);
    const auto b = testutil::random_record(rng, 1, id, 300, 10);
    const auto ab = local_measures(a, b);
    const auto ba = local_measures(b, a);
    CHECK(ab.prob_diff == -ba.prob_diff);
    CHECK(ab.rank_diff == -ba.rank_diff);
    CHECK(ab.clamped_rank_diff == -ba.clamped_rank_diff);
    CHECK(ab.topk_disagreement == ba.topk_disagreement);
    CHECK(ab.clamped_rank_diff >= -49);
    CHECK(ab.clamped_rank_diff <= 49);
    CHECK(std::abs(ab.clamped_rank_diff) <= std::abs(ab.rank_diff));
    CHECK(std::abs(ab.prob_diff) <= 1.0);

    const auto aa = local_measures(a, a);
    CHECK(aa.prob_diff == 0.0);
    CHECK(aa.rank_diff == 0);
    CHECK(aa.topk_disagreement == 0);
  }
}

TEST_CASE("properties: beta does not change ranks") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> logits(64);
    for (auto& x : logits) x = n(rng);
    const auto p1 = softmax(logits, 0.1);
    const auto p2 = softmax(logits, 10.0);
    for (std::size_t t = 0; t < logits.size(); ++t) REQUIRE(rank_of_target(p1, t) == rank_of_target(p2, t));
  }
}

TEST_CASE("make_token_record: stored fields agree with each other") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> logits(200);
    for (auto& x : logits) x = u(rng);
    if (trial % 4 == 0) logits[17] = logits[3];  // exact tie
    const auto p = softmax(logits, 1.0);
    const auto id = static_cast<std::uint32_t>(rng() % 200);
    const auto rec = make_token_record(p, 1, id, "w", 10);
    CHECK_NOTHROW(validate_record(rec, 10));
    std::vector<double> stored(p.begin(), p.end());
    for (auto& v : stored) v = static_cast<float>(v);
    CHECK(rec.target_rank == testutil::oracle_rank(stored, id));
  }
  const std::vector<double> tie{0.25, 0.25, 0.25, 0.25};
  const auto rec = make_token_record(tie, 1, 2, "w", 4);
  CHECK(rec.target_rank == 3);
  CHECK(rec.topk[0].token_id == 0);
  CHECK(rec.topk[3].token_id == 3);
  CHECK_THROWS_AS(make_token_record(tie, 1, 2, "w", 5), InvalidInput);
}

TEST_CASE("validate_record: rejects broken invariants") {
  auto good = record(1, 3, 0.125F, 4, iota_ids(0));
  good.topk[3].prob = 0.125F;  // id 3 is in top-k at index 3
  good.topk[2].prob = 0.125F;
  CHECK_NOTHROW(validate_record(good));

  auto bad = good;
  bad.target_rank = 0;
  CHECK_THROWS_AS(validate_record(bad), InvalidInput);

  bad = good;
  bad.target_prob = 1.5F;
  CHECK_THROWS_AS(validate_record(bad), InvalidInput);

  bad = good;
  std::swap(bad.topk[0], bad.topk[1]);
  CHECK_THROWS_AS(validate_record(bad), InvalidInput);

  bad = good;
  bad.topk[9].token_id = bad.topk[8].token_id;
  CHECK_THROWS_AS(validate_record(bad), InvalidInput);

  bad = good;
  bad.target_rank = 1;  // but token is not topk[0]
  CHECK_THROWS_AS(validate_record(bad), InvalidInput);

  bad = good;
  bad.topk.pop_back();
  CHECK_THROWS_AS(validate_record(bad), InvalidInput);
}

TEST_CASE("measure names round-trip") {
  for (auto id : kAllLocalMeasures) CHECK(parse_local_measure(local_measure_name(id)) == id);
  CHECK_FALSE(parse_local_measure("kl_divergence").has_value());
  CHECK(all_global_measures().size() == 8);
}

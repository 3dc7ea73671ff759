#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "hag/metrics.hpp"
#include "hag/text.hpp"

using namespace hag;

namespace {

Tokens words(const char* s) { return split_ws(s); }

std::vector<EvalPair> random_pairs(Rng& rng, std::size_t n, std::size_t max_len, std::size_t alphabet) {
  static const char* kWords[] = {"the", "cat", "sat", "on", "a", "mat", "dog", "ran"};
  auto sentence = [&](std::size_t lo) {
    Tokens t(lo + uniform_index(rng, max_len + 1 - lo));
    for (auto& w : t) w = kWords[uniform_index(rng, alphabet)];
    return t;
  };
  std::vector<EvalPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    EvalPair p;
    p.candidate = sentence(1);
    const std::size_t refs = 1 + uniform_index(rng, 2);
    for (std::size_t r = 0; r < refs; ++r) p.references.push_back(sentence(1));
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

TEST_CASE("bleu worked examples") {
  const auto same = bleu({{words("the cat sat on the mat"), {words("the cat sat on the mat")}}});
  CHECK(same[0] == 1.0);
  CHECK(same[3] == doctest::Approx(1.0).epsilon(1e-15));

  // clipped unigram precision 1/3; candidate longer than the reference so BP = 1
  const auto clipped = bleu({{words("the the the"), {words("the cat")}}}, 1);
  CHECK(clipped[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const auto empty = bleu({{Tokens{}, {words("the cat")}}});
  for (double b : empty) CHECK(b == 0.0);

  CHECK_THROWS_AS(bleu({}), std::invalid_argument);
  CHECK_THROWS_AS(bleu({{words("a"), {words("a")}}}, 5), std::invalid_argument);
}

TEST_CASE("rouge worked examples") {
  const auto r = rouge({{words("the cat sat"), {words("the cat")}}});
  CHECK(lcs_length(words("the cat sat"), words("the cat")) == 2);
  CHECK(r.rougeL == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(rouge({{words("a b c"), {words("a b c")}}}).rougeL == 1.0);
  const auto none = rouge({{words("a b"), {words("c d")}}});
  CHECK(none.rouge1 == 0.0);
  CHECK(none.rougeL == 0.0);
}

TEST_CASE("meteor worked examples") {
  const Tokens s = words("the cat sat on the mat");
  const double m = static_cast<double>(s.size());
  CHECK(meteor_sentence(s, s) == doctest::Approx(1.0 - 0.5 * std::pow(1.0 / m, 3)).epsilon(1e-15));
  CHECK(meteor_sentence(words("a b"), words("c d")) == 0.0);
  const auto al = meteor_align(words("a b x c d"), words("a b c d"));
  CHECK(al.matches == 4);
  CHECK(al.chunks == 2);
}

TEST_CASE("fmr worked examples") {
  CHECK(fmr({{words("the price is fair"), words("nice")}}, {{"price", "screen"}}) == 0.5);
  CHECK(fmr({{words("the price is fair"), words("dim screen")}}, {{"price", "screen"}}) == 1.0);
  CHECK(fmr({{words("a love story")}}, {{"love story"}}) == 1.0);
  CHECK(fmr({{words("love the story")}}, {{"love story"}}) == 0.0);
  CHECK(fmr({{words("price")}}, {{"price", "screen"}}) == 0.5);
  CHECK_THROWS_AS(fmr({{}}, {{}}), std::invalid_argument);
}

TEST_CASE("mae worked examples") {
  CHECK(mae({3, 5}, {4, 4}) == 1.0);
  CHECK(mae({2, 3}, {2, 3}) == 0.0);
  CHECK(mae({2.5}, {4.0}) == 1.5);
  CHECK_THROWS_AS(mae({1}, {1, 2}), std::invalid_argument);
}

TEST_CASE("metrics agree with brute-force oracles on random pairs") {
  Rng rng(31);
  for (int round = 0; round < 30; ++round) {
    const auto pairs = random_pairs(rng, 1 + uniform_index(rng, 4), 7, 3 + uniform_index(rng, 5));
    const auto got = bleu(pairs, 4), want = oracle::bleu(pairs, 4);
    for (std::size_t n = 0; n < 4; ++n) CHECK(std::abs(got[n] - want[n]) <= 1e-9);
    const auto r = rouge(pairs), ro = oracle::rouge(pairs);
    CHECK(std::abs(r.rouge1 - ro.rouge1) <= 1e-9);
    CHECK(std::abs(r.rougeL - ro.rougeL) <= 1e-9);
    CHECK(std::abs(meteor(pairs) - oracle::meteor(pairs)) <= 1e-9);
    for (const auto& p : pairs) {
      const auto a = meteor_align(p.candidate, p.references[0]), b = oracle::meteor_align(p.candidate, p.references[0]);
      CHECK(a.matches == b.matches);
      CHECK(a.chunks == b.chunks);
    }
  }
}

TEST_CASE("report over gold-as-candidate") {
  EvalExample e;
  e.gold_aspects = {"price", "screen"};
  e.gold_explanations = {words("the price is fair ."), words("the screen is dim .")};
  e.generated = e.gold_explanations;
  e.gold_rating = 4;
  e.predicted_rating = 4;
  const MetricReport r = evaluate_examples({e, e});
  CHECK(r.bleu1 == 100.0);
  CHECK(r.bleu4 == doctest::Approx(100.0).epsilon(1e-13));
  CHECK(r.rougeL == 100.0);
  CHECK(r.fmr == 1.0);
  CHECK(r.mae == 0.0);
  CHECK(r.n_examples == 2);
  CHECK(r.to_json().contains("meteor"));
}

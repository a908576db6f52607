#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pti/count_table.hpp"
#include "pti/scorer.hpp"

using namespace pti;
using doctest::Approx;

namespace {

PtiIndex roma_pivot_index() {
  return build_index(CountTable(fixtures::bigrams()), count_cooccurrences(fixtures::roma_rom(), fixtures::bigrams()),
                     1.0);
}

ScoreMap make_scores(std::vector<ScoredEntity> scores) {
  ScoreMap map;
  std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) { return a.entity < b.entity; });
  map.scores = std::move(scores);
  return map;
}

}  // namespace

TEST_CASE("score_entities evaluates prior plus weighted posterior") {
  const PtiIndex index = roma_pivot_index();
  const ScoreMap scores = score_entities(index, "ro", 1.0);
  REQUIRE(scores.size() == 2);
  CHECK(scores.score_of("E1").value() == Approx(1.0).epsilon(1e-15));
  CHECK(scores.score_of("E2").value() == Approx(5.0 / 6.0).epsilon(1e-15));

  const ScoreMap prior_only = score_entities(index, "ro", 0.0);
  CHECK(prior_only.score_of("E1").value() == Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(prior_only.score_of("E2").value() == Approx(1.0 / 3.0).epsilon(1e-15));

  CHECK(score_entities(index, "zz", 1.0).empty());
  CHECK_THROWS_AS(score_entities(index, "", 1.0), std::invalid_argument);
  CHECK_THROWS_AS(score_entities(index, "ro", -1.0), std::invalid_argument);
}

TEST_CASE("thresholded entries contribute nothing") {
  const PtiIndex cut = apply_threshold(roma_pivot_index(), 0.4);
  const ScoreMap scores = score_entities(cut, "ro", 1.0);
  // P(E1|ro) = 2/3 kept, P(ro|E1) = 1/3 dropped; P(E2|ro) dropped, P(ro|E2) = 1/2 kept.
  CHECK(scores.score_of("E1").value() == Approx(2.0 / 3.0));
  CHECK(scores.score_of("E2").value() == Approx(0.5));
  // With lambda 0 the posterior-only entity has no score at all.
  CHECK_FALSE(score_entities(cut, "ro", 0.0).score_of("E2").has_value());
}

TEST_CASE("top_k orders by score then entity id") {
  CHECK(top_k(make_scores({{"E1", 1.0}, {"E2", 5.0 / 6.0}}), 1).candidates ==
        std::vector<ScoredEntity>{{"E1", 1.0}});
  CHECK(top_k(make_scores({{"E2", 0.5}, {"E1", 0.5}}), 1).candidates == std::vector<ScoredEntity>{{"E1", 0.5}});
  CHECK(top_k(ScoreMap{}, 5).empty());
  const CandidateList all = top_k(make_scores({{"b", 0.2}, {"a", 0.2}, {"c", 0.9}}), 10);
  CHECK(all.candidates == std::vector<ScoredEntity>{{"c", 0.9}, {"a", 0.2}, {"b", 0.2}});
  CHECK(all.k == 10);
  CHECK_THROWS_AS(top_k(ScoreMap{}, 0), std::invalid_argument);
}

TEST_CASE("top_k only touches scored entities") {
  const Corpus corpus = generate_synthetic(500, 5000, "abcdefghijkl", 21);
  const PtiIndex index = build_index(CountTable(TokenizerConfig{}), count_cooccurrences(corpus, TokenizerConfig{}), 1.0);
  for (const auto& pair : corpus.pairs().subspan(0, 50)) {
    const ScoreMap scores = score_entities(index, pair.mention, 0.4);
    TopKStats stats;
    top_k(scores, 30, &stats);
    CHECK(stats.touched <= scores.size());
    CHECK(scores.size() < index.entities().size());
  }
}

TEST_CASE("normalize_scores") {
  const ScoreMap normalized = normalize_scores(make_scores({{"E1", 1.0}, {"E2", 5.0 / 6.0}}));
  CHECK(normalized.score_of("E1").value() == Approx(6.0 / 11.0).epsilon(1e-15));
  CHECK(normalized.score_of("E2").value() == Approx(5.0 / 11.0).epsilon(1e-15));
  CHECK(normalize_scores(make_scores({{"E1", 7.0}})).score_of("E1").value() == 1.0);
  CHECK_THROWS_AS(normalize_scores(ScoreMap{}), std::invalid_argument);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> value(0.01, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ScoredEntity> raw;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) raw.push_back({"Q" + std::to_string(i), value(rng)});
    const ScoreMap scores = make_scores(raw);
    const ScoreMap norm = normalize_scores(scores);
    double sum = 0.0;
    for (const auto& s : norm.scores) sum += s.score;
    CHECK(oracle::near(sum, 1.0, 1e-12));
    const auto before = top_k(scores, scores.size()).candidates;
    const auto after = top_k(norm, norm.size()).candidates;
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i].entity == after[i].entity);
  }
}

TEST_CASE("candidate_space") {
  const PtiIndex pivot = roma_pivot_index();
  CHECK(candidate_space(pivot) == std::vector<std::string>{"E1", "E2"});
  const PtiIndex joint = build_index(count_cooccurrences(Corpus("tl", {{"xyz", "E3", 1, "tl"}}), fixtures::bigrams()),
                                     count_cooccurrences(fixtures::roma_rom(), fixtures::bigrams()), 0.4);
  CHECK(candidate_space(joint) == std::vector<std::string>{"E1", "E2", "E3"});
  const Corpus spread("xx", {{"ab", "E1", 1, "xx"}, {"ab", "E2", 1, "xx"}, {"ab", "E3", 1, "xx"},
                             {"ac", "E1", 1, "xx"}, {"ac", "E2", 1, "xx"}, {"ac", "E3", 1, "xx"}});
  const PtiIndex flat = build_index(CountTable(fixtures::bigrams()), count_cooccurrences(spread, fixtures::bigrams()), 1.0);
  CHECK(candidate_space(apply_threshold(flat, 0.9)).empty());
}

TEST_CASE("scores are affine in lambda with the posterior mass as slope") {
  const SyntheticPair data = generate_synthetic_pair(80, 600, 1500, "abcdefg", 12);
  const TokenizerConfig config{2, 4, false};
  const PtiIndex index =
      build_index(count_cooccurrences(data.target, config), count_cooccurrences(data.pivot, config), 0.4);
  for (const auto& pair : data.target.pairs().subspan(0, 40)) {
    const ScoreMap at0 = score_entities(index, pair.mention, 0.0);
    const ScoreMap at1 = score_entities(index, pair.mention, 1.0);
    const ScoreMap at2 = score_entities(index, pair.mention, 2.0);
    for (const auto& s : at1.scores) {
      double slope = 0.0;
      for (const auto& token : at1.query_tokens) slope += index.posterior(s.entity, token).value_or(0.0);
      const double base = at0.score_of(s.entity).value_or(0.0);
      CHECK(oracle::near(s.score, base + slope, 1e-9));
      CHECK(oracle::near(at2.score_of(s.entity).value(), base + 2.0 * slope, 1e-9));
      CHECK(at2.score_of(s.entity).value() >= s.score);
    }
  }
}

TEST_CASE("wildcard indexes match wildcard query tokens") {
  const TokenizerConfig config{2, 2, true};
  const PtiIndex index = build_index(CountTable(config), count_cooccurrences(fixtures::roma_rom(), config), 1.0);
  CHECK(index.token_id("r*").has_value());
  // "rx" shares only the wildcard token "r*" with the corpus.
  const ScoreMap scores = score_entities(index, "rx", 0.0);
  CHECK(scores.score_of("E1").has_value());
  CHECK(scores.score_of("E2").has_value());
  CHECK(score_entities(build_index(CountTable(fixtures::bigrams()),
                                   count_cooccurrences(fixtures::roma_rom(), fixtures::bigrams()), 1.0),
                       "rx", 0.0)
            .empty());
}

TEST_CASE("PtiGenerator wraps scoring and selection") {
  auto index = std::make_shared<const PtiIndex>(roma_pivot_index());
  const PtiGenerator generator(index, 1.0);
  const CandidateList list = generator("ro", 1);
  REQUIRE(list.size() == 1);
  CHECK(list.candidates[0].entity == "E1");
  const PtiGenerator normalized(index, 1.0, true);
  CHECK(normalized("ro", 2).candidates[0].score == Approx(6.0 / 11.0));
  CHECK(normalized("zz", 2).empty());
}

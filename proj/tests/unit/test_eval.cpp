#include <doctest.h>

#include <atomic>

#include "pti/count_table.hpp"
#include "pti/eval.hpp"

using namespace pti;

namespace {

CandidateGenerator oracle_for(const std::vector<Query>& queries) {
  return [queries](const std::string& mention, std::size_t k) {
    CandidateList list;
    list.k = k;
    for (const Query& q : queries)
      if (q.mention == mention) list.candidates.push_back({q.entity, 1.0});
    return list;
  };
}

CandidateGenerator empty_generator() {
  return [](const std::string&, std::size_t k) { return CandidateList{{}, k}; };
}

const std::vector<Query> kQueries = {
    {"roma", "E1", QueryType::kEasy},
    {"rom", "E2", QueryType::kEasy},
    {"rzym", "E1", QueryType::kMedium},
    {"rim", "E3", QueryType::kMedium},
};

}  // namespace

TEST_CASE("recall_at_k") {
  CHECK(recall_at_k(oracle_for(kQueries), kQueries, 30) == 100.0);
  CHECK(recall_at_k(empty_generator(), kQueries, 30) == 0.0);
  const std::vector<Query> two(kQueries.begin(), kQueries.begin() + 2);
  const std::vector<Query> one(kQueries.begin(), kQueries.begin() + 1);
  CHECK(recall_at_k(oracle_for(one), two, 30) == 50.0);
  CHECK_THROWS_AS(recall_at_k(empty_generator(), std::vector<Query>{}, 30), std::invalid_argument);
}

TEST_CASE("generator runs exactly once per query") {
  std::atomic<int> calls{0};
  const CandidateGenerator counting = [&](const std::string&, std::size_t k) {
    ++calls;
    return CandidateList{{}, k};
  };
  recall_at_k(counting, kQueries, 5);
  CHECK(calls == 4);
  calls = 0;
  recall_breakdown(counting, kQueries, 5);
  CHECK(calls == 4);
}

TEST_CASE("recall_breakdown") {
  const std::vector<Query> easy_only(kQueries.begin(), kQueries.begin() + 2);
  const RecallBreakdown breakdown = recall_breakdown(oracle_for(easy_only), kQueries, 30);
  CHECK(breakdown.micro_recall == 50.0);
  CHECK(breakdown.per_type.at(QueryType::kEasy) == TypeRecall{100.0, 2});
  CHECK(breakdown.per_type.at(QueryType::kMedium) == TypeRecall{0.0, 2});
  CHECK_FALSE(breakdown.per_type.contains(QueryType::kHard));

  std::vector<Query> hard = kQueries;
  for (Query& q : hard) q.type = QueryType::kHard;
  const RecallBreakdown zero_shot = recall_breakdown(oracle_for(hard), hard, 30);
  CHECK(zero_shot.per_type.size() == 1);
  CHECK(zero_shot.per_type.at(QueryType::kHard) == TypeRecall{100.0, 4});
}

TEST_CASE("ceiling_recall") {
  const std::vector<Query> test = {{"a", "E1"}, {"b", "E2"}};
  CHECK(ceiling_recall(std::vector<std::string>{"E2", "E1", "E7"}, test) == 100.0);
  CHECK(ceiling_recall(std::vector<std::string>{"E1"}, test) == 50.0);
  CHECK(ceiling_recall(std::vector<std::string>{}, test) == 0.0);
  CHECK_THROWS_AS(ceiling_recall(std::vector<std::string>{"E1"}, std::vector<Query>{}), std::invalid_argument);
}

TEST_CASE("sweep selects the best validation point") {
  const std::vector<Query> valid(kQueries.begin(), kQueries.begin() + 2);
  const std::vector<Query> test(kQueries.begin() + 2, kQueries.end());

  SweepPoint good{EvalConfig{}, [&] { return oracle_for(kQueries); }};
  good.config.lambda = 0.4;
  SweepPoint bad{EvalConfig{}, [] { return empty_generator(); }};
  bad.config.lambda = 0.2;

  const std::vector<SweepPoint> single = {bad};
  CHECK(sweep(single, valid, test, 30).selected == 0);

  const std::vector<SweepPoint> pair = {bad, good};
  const SweepResult result = sweep(pair, valid, test, 30);
  CHECK(result.selected == 1);
  CHECK(result.validation_recall == std::vector<double>{0.0, 100.0});
  CHECK(result.report.config.lambda == 0.4);
  CHECK(result.report.micro_recall == 100.0);

  SweepPoint also_good = good;
  also_good.config.lambda = 1.0;
  const std::vector<SweepPoint> tied = {bad, good, also_good};
  CHECK(sweep(tied, valid, test, 30).selected == 1);
}

TEST_CASE("default grid runs nine PTI evaluations on validation") {
  const SyntheticPair data = generate_synthetic_pair(120, 1500, 2500, "abcdefg", 4);
  const EvalSplit split = build_eval_split(data.target, 20, 4);
  const TokenizerConfig config{2, 4, false};
  const CountTable target = count_cooccurrences(split.train, config);
  const CountTable pivot = count_cooccurrences(data.pivot, config);

  std::atomic<int> calls{0};
  std::vector<SweepPoint> grid;
  for (double alpha : kAlphaGrid) {
    for (double lambda : kLambdaGrid) {
      EvalConfig cfg;
      cfg.alpha = alpha;
      cfg.lambda = lambda;
      cfg.tokenizer = config;
      grid.push_back({cfg, [&, alpha, lambda]() -> CandidateGenerator {
                        auto index = std::make_shared<const PtiIndex>(build_index(target, pivot, alpha));
                        PtiGenerator pti(index, lambda);
                        return [pti, &calls](const std::string& m, std::size_t k) {
                          ++calls;
                          return pti(m, k);
                        };
                      }});
    }
  }
  REQUIRE(grid.size() == 9);
  const SweepResult result = sweep(grid, split.validation, split.test, 30);
  CHECK(result.validation_recall.size() == 9);
  CHECK(calls == static_cast<int>(9 * split.validation.size() + split.test.size()));
  const double best = *std::max_element(result.validation_recall.begin(), result.validation_recall.end());
  CHECK(result.validation_recall[result.selected] == best);
  for (std::size_t i = 0; i < result.selected; ++i) CHECK(result.validation_recall[i] < best);
}

TEST_CASE("recall is monotone in k") {
  const SyntheticPair data = generate_synthetic_pair(150, 1500, 3000, "abcdef", 17);
  const EvalSplit split = build_eval_split(data.target, 30, 17);
  const TokenizerConfig config{2, 5, false};
  auto index = std::make_shared<const PtiIndex>(
      build_index(count_cooccurrences(split.train, config), count_cooccurrences(data.pivot, config), 0.4));
  const PtiGenerator generator(index, 0.4);
  const CandidateGenerator call = [&](const std::string& m, std::size_t k) { return generator(m, k); };
  double previous = -1.0;
  for (std::size_t k : {1, 5, 10, 20, 30, 100}) {
    const double recall = recall_at_k(call, split.test, k);
    CHECK(recall >= previous);
    previous = recall;
  }
}

TEST_CASE("report json layout") {
  EvalConfig config;
  config.method = "wikipriors";
  config.zero_shot = true;
  RecallBreakdown breakdown;
  breakdown.k = 30;
  breakdown.micro_recall = 25.0;
  breakdown.per_type[QueryType::kHard] = {25.0, 8};
  EvalReport report = make_report(config, breakdown);
  report.ceiling.push_back({"PL", 75.0});
  const auto json = report.to_json();

  std::vector<std::string> keys;
  for (const auto& item : json.items()) keys.push_back(item.key());
  CHECK(keys == std::vector<std::string>{"k", "method", "config", "micro_recall", "per_type", "ceiling"});
  std::vector<std::string> config_keys;
  for (const auto& item : json["config"].items()) config_keys.push_back(item.key());
  CHECK(config_keys ==
        std::vector<std::string>{"alpha", "lambda", "tau", "k", "zero_shot", "ngram_min", "ngram_max", "wildcard"});
  CHECK(json["method"] == "wikipriors");
  CHECK(json["per_type"].size() == 1);
  CHECK(json["per_type"]["hard"]["n"] == 8);
  CHECK(json["ceiling"]["PL"] == 75.0);
  CHECK(json.dump() == nlohmann::ordered_json::parse(json.dump()).dump());
}

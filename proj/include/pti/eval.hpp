#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pti/corpus.hpp"
#include "pti/scorer.hpp"

namespace pti {

// Must be safe to call concurrently: queries are evaluated in parallel.
using CandidateGenerator = std::function<CandidateList(const std::string& mention, std::size_t k)>;

// Percentage of queries whose entity is in the generator's top-k list. The
// generator runs exactly once per query. Throws on an empty test set.
double recall_at_k(const CandidateGenerator& generator, std::span<const Query> test, std::size_t k);

struct TypeRecall {
  double recall = 0.0;
  std::size_t n = 0;

  friend bool operator==(const TypeRecall&, const TypeRecall&) = default;
};

struct RecallBreakdown {
  std::size_t k = kDefaultK;
  double micro_recall = 0.0;
  // Types without queries are absent.
  std::map<QueryType, TypeRecall> per_type;
};

RecallBreakdown recall_breakdown(const CandidateGenerator& generator, std::span<const Query> test, std::size_t k);

// Percentage of test entities that belong to `space`. Throws on an empty
// test set.
double ceiling_recall(std::span<const std::string> space, std::span<const Query> test);

struct EvalConfig {
  std::string method = "pti";
  double lambda = 1.0;
  double alpha = 1.0;
  double tau = 0.0;
  bool zero_shot = false;
  TokenizerConfig tokenizer;

  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

struct EvalReport {
  std::size_t k = kDefaultK;
  EvalConfig config;
  double micro_recall = 0.0;
  std::map<QueryType, TypeRecall> per_type;
  // Candidate-space label ("PL", "TL", "PL+TL", ...) to ceiling recall, in
  // insertion order.
  std::vector<std::pair<std::string, double>> ceiling;

  // Fields in fixed order: k, method, config, micro_recall, per_type, ceiling.
  nlohmann::ordered_json to_json() const;
};

EvalReport make_report(const EvalConfig& config, const RecallBreakdown& breakdown);

struct SweepPoint {
  EvalConfig config;
  std::function<CandidateGenerator()> make_generator;
};

struct SweepResult {
  std::size_t selected = 0;
  std::vector<double> validation_recall;  // one per grid point, grid order
  EvalReport report;                      // test metrics of the selected point
};

// Evaluates every grid point on validation, keeps the first point with the
// highest micro recall, and evaluates only that point on test.
SweepResult sweep(std::span<const SweepPoint> grid, std::span<const Query> validation, std::span<const Query> test,
                  std::size_t k);

}  // namespace pti

#include "pti/eval.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>

namespace pti {
namespace {

std::vector<std::uint8_t> hits(const CandidateGenerator& generator, std::span<const Query> test, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  std::vector<std::uint8_t> hit(test.size(), 0);
  const auto n = static_cast<std::ptrdiff_t>(test.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Query& query = test[static_cast<std::size_t>(i)];
    hit[static_cast<std::size_t>(i)] = generator(query.mention, k).contains(query.entity) ? 1 : 0;
  }
  return hit;
}

double percentage(std::size_t part, std::size_t whole) {
  return static_cast<double>(part) / static_cast<double>(whole) * 100.0;
}

}  // namespace

double recall_at_k(const CandidateGenerator& generator, std::span<const Query> test, std::size_t k) {
  if (test.empty()) throw std::invalid_argument("recall needs a non-empty test set");
  const auto hit = hits(generator, test, k);
  return percentage(static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1)), test.size());
}

RecallBreakdown recall_breakdown(const CandidateGenerator& generator, std::span<const Query> test, std::size_t k) {
  RecallBreakdown breakdown;
  breakdown.k = k;
  if (test.empty()) return breakdown;
  const auto hit = hits(generator, test, k);
  std::map<QueryType, std::pair<std::size_t, std::size_t>> tally;  // type -> (hits, n)
  std::size_t total_hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    auto& [h, n] = tally[test[i].type];
    h += hit[i];
    ++n;
    total_hits += hit[i];
  }
  for (const auto& [type, counts] : tally) {
    breakdown.per_type[type] = {percentage(counts.first, counts.second), counts.second};
  }
  breakdown.micro_recall = percentage(total_hits, test.size());
  return breakdown;
}

double ceiling_recall(std::span<const std::string> space, std::span<const Query> test) {
  if (test.empty()) throw std::invalid_argument("ceiling recall needs a non-empty test set");
  std::vector<std::string> sorted(space.begin(), space.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t covered = 0;
  for (const Query& query : test) {
    if (std::binary_search(sorted.begin(), sorted.end(), query.entity)) ++covered;
  }
  return percentage(covered, test.size());
}

EvalReport make_report(const EvalConfig& config, const RecallBreakdown& breakdown) {
  EvalReport report;
  report.k = breakdown.k;
  report.config = config;
  report.micro_recall = breakdown.micro_recall;
  report.per_type = breakdown.per_type;
  return report;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json json;
  json["k"] = k;
  json["method"] = config.method;
  nlohmann::ordered_json cfg;
  cfg["alpha"] = config.alpha;
  cfg["lambda"] = config.lambda;
  cfg["tau"] = config.tau;
  cfg["k"] = k;
  cfg["zero_shot"] = config.zero_shot;
  cfg["ngram_min"] = config.tokenizer.n_min;
  cfg["ngram_max"] = config.tokenizer.n_max;
  cfg["wildcard"] = config.tokenizer.wildcard;
  json["config"] = std::move(cfg);
  json["micro_recall"] = micro_recall;
  nlohmann::ordered_json types = nlohmann::ordered_json::object();
  for (QueryType type : kAllQueryTypes) {
    const auto it = per_type.find(type);
    if (it == per_type.end()) continue;
    types[std::string(to_string(type))] = {{"recall", it->second.recall}, {"n", it->second.n}};
  }
  json["per_type"] = std::move(types);
  nlohmann::ordered_json ceilings = nlohmann::ordered_json::object();
  for (const auto& [label, value] : ceiling) ceilings[label] = value;
  json["ceiling"] = std::move(ceilings);
  return json;
}

SweepResult sweep(std::span<const SweepPoint> grid, std::span<const Query> validation, std::span<const Query> test,
                  std::size_t k) {
  if (grid.empty()) throw std::invalid_argument("sweep needs at least one grid point");
  if (validation.empty()) throw std::invalid_argument("sweep needs a non-empty validation set");
  SweepResult result;
  double best = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double recall = recall_at_k(grid[i].make_generator(), validation, k);
    result.validation_recall.push_back(recall);
    if (recall > best) {
      best = recall;
      result.selected = i;
    }
  }
  const SweepPoint& chosen = grid[result.selected];
  result.report = make_report(chosen.config, recall_breakdown(chosen.make_generator(), test, k));
  return result;
}

}  // namespace pti

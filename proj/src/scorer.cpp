#include "pti/scorer.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace pti {

std::optional<double> ScoreMap::score_of(std::string_view entity) const {
  const auto it = std::lower_bound(scores.begin(), scores.end(), entity,
                                   [](const ScoredEntity& s, std::string_view key) { return s.entity < key; });
  if (it == scores.end() || it->entity != entity) return std::nullopt;
  return it->score;
}

bool CandidateList::contains(std::string_view entity) const {
  return std::any_of(candidates.begin(), candidates.end(), [&](const ScoredEntity& c) { return c.entity == entity; });
}

ScoreMap score_entities(const PtiIndex& index, std::string_view mention, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  ScoreMap result;
  result.lambda = lambda;
  result.query_tokens = tokenize(mention, index.meta().tokenizer);

  std::unordered_map<std::uint32_t, double> accumulated;
  for (const std::string& token : result.query_tokens) {
    const auto id = index.token_id(token);
    if (!id) continue;
    // Merge the prior row and the posterior column of this token; both are
    // sorted by entity id.
    const auto prior = index.prior_rows().row(*id);
    const auto posterior = index.posterior_by_token().row(*id);
    std::size_t i = 0, j = 0;
    while (i < prior.size() || j < posterior.size()) {
      const std::uint32_t pe = i < prior.size() ? prior[i].id : UINT32_MAX;
      const std::uint32_t qe = j < posterior.size() ? posterior[j].id : UINT32_MAX;
      const std::uint32_t entity = std::min(pe, qe);
      const double p = pe == entity ? prior[i++].prob : 0.0;
      const double q = qe == entity ? posterior[j++].prob : 0.0;
      accumulated[entity] += p + lambda * q;
    }
  }

  std::vector<std::pair<std::uint32_t, double>> positive;
  positive.reserve(accumulated.size());
  for (const auto& [entity, score] : accumulated) {
    if (score > 0.0) positive.emplace_back(entity, score);
  }
  std::sort(positive.begin(), positive.end());
  result.scores.reserve(positive.size());
  for (const auto& [entity, score] : positive) result.scores.push_back({index.entities()[entity], score});
  return result;
}

CandidateList top_k(const ScoreMap& scores, std::size_t k, TopKStats* stats) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  CandidateList list;
  list.k = k;
  std::vector<const ScoredEntity*> heap;
  heap.reserve(scores.scores.size());
  for (const ScoredEntity& s : scores.scores) heap.push_back(&s);
  if (stats) stats->touched += heap.size();

  // std heap algorithms keep the "largest" element (under `worse`) on top.
  const auto worse = [](const ScoredEntity* a, const ScoredEntity* b) { return ranks_before(*b, *a); };
  std::make_heap(heap.begin(), heap.end(), worse);
  const std::size_t take = std::min(k, heap.size());
  list.candidates.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    std::pop_heap(heap.begin(), heap.end(), worse);
    list.candidates.push_back(*heap.back());
    heap.pop_back();
  }
  return list;
}

ScoreMap normalize_scores(const ScoreMap& scores) {
  if (scores.empty()) throw std::invalid_argument("cannot normalize an empty score map");
  double sum = 0.0;
  for (const ScoredEntity& s : scores.scores) sum += s.score;
  ScoreMap normalized = scores;
  for (ScoredEntity& s : normalized.scores) s.score /= sum;
  return normalized;
}

std::vector<std::string> candidate_space(const PtiIndex& index) {
  std::vector<bool> seen(index.entities().size(), false);
  for (std::size_t t = 0; t < index.tokens().size(); ++t) {
    for (const SparseEntry& e : index.prior_rows().row(t)) seen[e.id] = true;
  }
  for (std::size_t e = 0; e < index.entities().size(); ++e) {
    if (!index.posterior_rows().row(e).empty()) seen[e] = true;
  }
  std::vector<std::string> space;
  for (std::size_t e = 0; e < seen.size(); ++e) {
    if (seen[e]) space.push_back(index.entities()[e]);
  }
  return space;
}

PtiGenerator::PtiGenerator(std::shared_ptr<const PtiIndex> index, double lambda, bool normalize)
    : index_(std::move(index)), lambda_(lambda), normalize_(normalize) {
  if (!index_) throw std::invalid_argument("PtiGenerator needs an index");
  if (!(lambda_ >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
}

CandidateList PtiGenerator::operator()(const std::string& mention, std::size_t k) const {
  ScoreMap scores = score_entities(*index_, mention, lambda_);
  if (normalize_ && !scores.empty()) scores = normalize_scores(scores);
  return top_k(scores, k);
}

}  // namespace pti

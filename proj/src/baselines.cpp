#include "pti/baselines.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "pti/text.hpp"

namespace pti {
namespace {

using NestedCounts = std::unordered_map<std::string, std::unordered_map<std::string, double>>;

WikiPriorsIndex::Tables tables_for(const Corpus& corpus) {
  NestedCounts mention_counts, word_counts;
  for (const MentionEntityPair& pair : corpus.pairs()) {
    const double count = static_cast<double>(pair.count);
    mention_counts[pair.mention][pair.entity] += count;
    for (const std::string& word : distinct_words(pair.mention)) word_counts[word][pair.entity] += count;
  }
  WikiPriorsIndex::Tables tables;
  tables.mentions = PriorTable::from_counts(mention_counts);
  tables.words = PriorTable::from_counts(word_counts);
  tables.entities.assign(corpus.entity_set().begin(), corpus.entity_set().end());
  return tables;
}

// Sum of word-level priors over the mention's distinct words, ranked.
std::vector<ScoredEntity> word_scores(const PriorTable& words, std::string_view mention) {
  std::map<std::string, double> summed;
  for (const std::string& word : distinct_words(mention)) {
    if (const auto* row = words.row(word)) {
      for (const ScoredEntity& s : *row) summed[s.entity] += s.score;
    }
  }
  std::vector<ScoredEntity> ranked;
  ranked.reserve(summed.size());
  for (auto& [entity, score] : summed) ranked.push_back({entity, score});
  std::sort(ranked.begin(), ranked.end(), ranks_before);
  return ranked;
}

}  // namespace

PriorTable PriorTable::from_counts(const NestedCounts& counts) {
  PriorTable table;
  table.rows_.reserve(counts.size());
  for (const auto& [key, by_entity] : counts) {
    // Sum in entity order so the normalizer does not depend on hash order.
    std::map<std::string, double> ordered(by_entity.begin(), by_entity.end());
    double total = 0.0;
    for (const auto& [_, c] : ordered) total += c;
    std::vector<ScoredEntity> row;
    row.reserve(ordered.size());
    for (const auto& [entity, c] : ordered) row.push_back({entity, c / total});
    std::sort(row.begin(), row.end(), ranks_before);
    table.rows_.emplace(key, std::move(row));
  }
  return table;
}

const std::vector<ScoredEntity>* PriorTable::row(std::string_view key) const {
  const auto it = rows_.find(std::string(key));
  return it == rows_.end() ? nullptr : &it->second;
}

WikiPriorsIndex::WikiPriorsIndex(std::optional<Tables> target, Tables pivot)
    : target_(std::move(target)), pivot_(std::move(pivot)) {}

CandidateList WikiPriorsIndex::generate(std::string_view mention, std::size_t k, bool zero_shot) const {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  CandidateList list;
  list.k = k;
  std::unordered_set<std::string> taken;
  auto append = [&](const std::vector<ScoredEntity>& ranked) {
    for (const ScoredEntity& s : ranked) {
      if (list.candidates.size() == k) return;
      if (taken.insert(s.entity).second) list.candidates.push_back(s);
    }
  };
  const bool use_target = target_.has_value() && !zero_shot;

  if (use_target) {
    if (const auto* row = target_->mentions.row(mention)) append(*row);
  }
  if (const auto* row = pivot_.mentions.row(mention)) append(*row);
  if (use_target && list.candidates.size() < k) append(word_scores(target_->words, mention));
  if (list.candidates.size() < k) append(word_scores(pivot_.words, mention));
  return list;
}

std::vector<std::string> WikiPriorsIndex::candidate_space(bool zero_shot) const {
  if (zero_shot || !target_) return pivot_.entities;
  std::vector<std::string> space;
  std::set_union(target_->entities.begin(), target_->entities.end(), pivot_.entities.begin(), pivot_.entities.end(),
                 std::back_inserter(space));
  return space;
}

WikiPriorsIndex build_wikipriors(const Corpus& target, const Corpus& pivot) {
  if (pivot.empty()) throw std::invalid_argument("WikiPriors needs a non-empty pivot corpus");
  std::optional<WikiPriorsIndex::Tables> target_tables;
  if (!target.empty()) target_tables = tables_for(target);
  return WikiPriorsIndex(std::move(target_tables), tables_for(pivot));
}

CandidateList wikipriors_generate(const WikiPriorsIndex& index, std::string_view mention, std::size_t k,
                                  bool zero_shot) {
  return index.generate(mention, k, zero_shot);
}

}  // namespace pti

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pti/index.hpp"
#include "pti/tokenizer.hpp"

namespace pti {

inline constexpr std::size_t kDefaultK = 30;

struct ScoredEntity {
  std::string entity;
  double score = 0.0;

  friend bool operator==(const ScoredEntity&, const ScoredEntity&) = default;
};

// Entities with a strictly positive score, sorted by entity id. Entities not
// listed score exactly 0.
struct ScoreMap {
  std::vector<ScoredEntity> scores;
  TokenSet query_tokens;
  double lambda = 0.0;

  bool empty() const { return scores.empty(); }
  std::size_t size() const { return scores.size(); }
  std::optional<double> score_of(std::string_view entity) const;
};

// At most k entries ordered by score descending, ties by entity id ascending.
struct CandidateList {
  std::vector<ScoredEntity> candidates;
  std::size_t k = kDefaultK;

  std::size_t size() const { return candidates.size(); }
  bool empty() const { return candidates.empty(); }
  bool contains(std::string_view entity) const;
};

// Instrumentation for top_k: number of score entries examined.
struct TopKStats {
  std::size_t touched = 0;
};

// Strict "ranks before" order used everywhere candidates are sorted.
inline bool ranks_before(const ScoredEntity& a, const ScoredEntity& b) {
  return a.score != b.score ? a.score > b.score : a.entity < b.entity;
}

// Score of every entity reachable from the mention's tokens:
//   sum over query tokens t of P(e|t) + lambda * P(t|e),
// where a missing (thresholded or unseen) entry contributes 0. The mention is
// tokenized with the index's tokenizer config. Throws std::invalid_argument
// for an empty mention or lambda < 0.
ScoreMap score_entities(const PtiIndex& index, std::string_view mention, double lambda);

// Selects the k best entries by building a max-heap over the non-zero scores
// and popping k times. Throws std::invalid_argument when k == 0.
CandidateList top_k(const ScoreMap& scores, std::size_t k, TopKStats* stats = nullptr);

// Scores divided by their sum. Throws std::invalid_argument when empty.
ScoreMap normalize_scores(const ScoreMap& scores);

// Entities owning at least one prior or posterior entry, sorted.
std::vector<std::string> candidate_space(const PtiIndex& index);

// Candidate generator over a shared, immutable index.
class PtiGenerator {
 public:
  PtiGenerator(std::shared_ptr<const PtiIndex> index, double lambda, bool normalize = false);

  CandidateList operator()(const std::string& mention, std::size_t k) const;

  const PtiIndex& index() const { return *index_; }
  double lambda() const { return lambda_; }

 private:
  std::shared_ptr<const PtiIndex> index_;
  double lambda_;
  bool normalize_;
};

}  // namespace pti

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pti/corpus.hpp"
#include "pti/scorer.hpp"

namespace pti {

// Conditional probability rows P(entity | key), each row sorted in ranking
// order (probability descending, entity id ascending).
class PriorTable {
 public:
  PriorTable() = default;
  // counts: key -> entity -> count.
  static PriorTable from_counts(const std::unordered_map<std::string, std::unordered_map<std::string, double>>& counts);

  const std::vector<ScoredEntity>* row(std::string_view key) const;
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  // All keys with their rows, for inspection and tests.
  const std::unordered_map<std::string, std::vector<ScoredEntity>>& rows() const { return rows_; }

 private:
  std::unordered_map<std::string, std::vector<ScoredEntity>> rows_;
};

// Mention-level and word-level prior lookup tables for a pivot language and,
// optionally, a target language.
class WikiPriorsIndex {
 public:
  struct Tables {
    PriorTable mentions;
    PriorTable words;
    std::vector<std::string> entities;  // sorted
  };

  WikiPriorsIndex(std::optional<Tables> target, Tables pivot);

  const std::optional<Tables>& target() const { return target_; }
  const Tables& pivot() const { return pivot_; }

  // Falls back from target mentions to pivot mentions, target words and
  // pivot words; each stage appends unseen entities in ranking order until k
  // candidates are collected. Target stages are skipped when zero_shot.
  CandidateList generate(std::string_view mention, std::size_t k, bool zero_shot) const;

  // Entities the generator can return in the given setting, sorted.
  std::vector<std::string> candidate_space(bool zero_shot) const;

 private:
  std::optional<Tables> target_;
  Tables pivot_;
};

// Word-level rows count each distinct word of an occurrence once. Throws
// std::invalid_argument when the pivot corpus is empty. An empty target
// yields a pivot-only index.
WikiPriorsIndex build_wikipriors(const Corpus& target, const Corpus& pivot);

CandidateList wikipriors_generate(const WikiPriorsIndex& index, std::string_view mention, std::size_t k,
                                  bool zero_shot);

}  // namespace pti

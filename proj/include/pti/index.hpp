#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pti/count_table.hpp"
#include "pti/tokenizer.hpp"

namespace pti {

// Validation grids shipped as defaults.
inline constexpr std::array<double, 3> kAlphaGrid = {0.1, 0.4, 1.0};
inline constexpr std::array<double, 3> kLambdaGrid = {0.2, 0.4, 1.0};
inline constexpr std::array<double, 3> kThresholdGrid = {0.0, 1e-2, 0.1};

struct IndexMeta {
  double alpha = 1.0;
  double tau = 0.0;
  TokenizerConfig tokenizer;
  std::vector<std::string> sources;
  // Empty for a plain joint build; otherwise names the variant and its
  // parameters, e.g. "smoothed beta=1 entities=2 tokens=3".
  std::string variant;

  friend bool operator==(const IndexMeta&, const IndexMeta&) = default;
};

struct SparseEntry {
  std::uint32_t id;
  double prob;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Compressed sparse rows; entries within a row are sorted by id.
class SparseRows {
 public:
  SparseRows() : offsets_{0} {}
  SparseRows(std::vector<std::size_t> offsets, std::vector<SparseEntry> entries);

  std::size_t rows() const { return offsets_.size() - 1; }
  std::size_t entries() const { return entries_.size(); }
  std::span<const SparseEntry> row(std::size_t r) const {
    return {entries_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::optional<double> find(std::size_t r, std::uint32_t id) const;

  // The same matrix stored column-major, as rows over `columns` ids.
  SparseRows transposed(std::size_t columns) const;

  friend bool operator==(const SparseRows&, const SparseRows&) = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<SparseEntry> entries_;
};

// Prior P(entity|token) rows keyed by token id and posterior P(token|entity)
// rows keyed by entity id, plus token and entity marginals. Immutable and
// safe for concurrent reads.
class PtiIndex {
 public:
  PtiIndex() : PtiIndex(IndexMeta{}, {}, {}, SparseRows(), SparseRows(), {}, {}) {}
  // `tokens` and `entities` must be strictly sorted; row/column ids index
  // into them. Throws std::invalid_argument on shape violations.
  PtiIndex(IndexMeta meta, std::vector<std::string> tokens, std::vector<std::string> entities,
           SparseRows prior, SparseRows posterior, std::vector<double> token_prob,
           std::vector<double> entity_prob);

  const IndexMeta& meta() const { return meta_; }
  std::span<const std::string> tokens() const { return tokens_; }
  std::span<const std::string> entities() const { return entities_; }
  const SparseRows& prior_rows() const { return prior_; }
  const SparseRows& posterior_rows() const { return posterior_; }
  // Posterior entries regrouped by token: row t lists (entity, P(t|entity)).
  const SparseRows& posterior_by_token() const { return posterior_by_token_; }
  std::span<const double> token_probs() const { return token_prob_; }
  std::span<const double> entity_probs() const { return entity_prob_; }

  std::optional<std::uint32_t> token_id(std::string_view token) const;
  std::optional<std::uint32_t> entity_id(std::string_view entity) const;

  std::optional<double> prior(std::string_view token, std::string_view entity) const;
  std::optional<double> posterior(std::string_view entity, std::string_view token) const;
  std::optional<double> token_prob(std::string_view token) const;
  std::optional<double> entity_prob(std::string_view entity) const;

  std::size_t prior_entries() const { return prior_.entries(); }
  std::size_t posterior_entries() const { return posterior_.entries(); }
  std::size_t entry_count() const { return prior_entries() + posterior_entries(); }

  friend bool operator==(const PtiIndex& a, const PtiIndex& b);

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  using Lookup = std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>>;

  IndexMeta meta_;
  std::vector<std::string> tokens_;
  std::vector<std::string> entities_;
  SparseRows prior_;
  SparseRows posterior_;
  SparseRows posterior_by_token_;
  std::vector<double> token_prob_;
  std::vector<double> entity_prob_;
  Lookup token_lookup_;
};

// Blends counts as target + alpha * pivot and normalizes them into prior,
// posterior and marginal probabilities. Marginals are the row and column
// sums of the blended table. Throws std::invalid_argument when the tokenizer
// configs differ, alpha < 0, or both tables are empty.
PtiIndex build_index(const CountTable& target_counts, const CountTable& pivot_counts, double alpha);

// Drops every prior and posterior entry below tau; marginals stay, nothing is
// renormalized. Requires 0 <= tau < 1.
PtiIndex apply_threshold(const PtiIndex& index, double tau);

// Additive smoothing of the pivot probabilities, materialized on the observed
// support only: prior (c + beta) / (c(t) + beta |universe|), posterior
// (c + beta) / (c(e) + beta |tokens|).
PtiIndex smooth_pivot_probabilities(const CountTable& pivot_counts, double beta,
                                    std::span<const std::string> entity_universe);

// Per token, prior rows combined as P_target + gamma * P_pivot and
// renormalized to sum 1; posterior rows and marginals likewise.
PtiIndex fuse_indexes(const PtiIndex& target_index, const PtiIndex& pivot_index, double gamma);

}  // namespace pti

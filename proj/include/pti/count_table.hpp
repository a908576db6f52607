#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pti/corpus.hpp"
#include "pti/tokenizer.hpp"

namespace pti {

struct CountEntry {
  std::uint32_t token;
  std::uint32_t entity;
  double count;

  friend bool operator==(const CountEntry&, const CountEntry&) = default;
};

// Sparse token-entity co-occurrence counts in canonical form: `tokens` and
// `entities` are sorted and hold exactly the keys that occur in `joint`,
// which is sorted by (token, entity) and holds strictly positive counts.
// Marginals are recomputed from `joint` on construction.
class CountTable {
 public:
  CountTable() = default;
  explicit CountTable(TokenizerConfig config) : config_(config) {}

  // Compacts away unused keys and merges duplicate (token, entity) entries.
  // Entries may arrive in any order; ids index into the given vocabularies.
  static CountTable from_entries(TokenizerConfig config, std::vector<std::string> tokens,
                                 std::vector<std::string> entities, std::vector<CountEntry> joint,
                                 std::vector<std::string> sources = {});

  const TokenizerConfig& config() const { return config_; }
  std::span<const std::string> tokens() const { return tokens_; }
  std::span<const std::string> entities() const { return entities_; }
  std::span<const CountEntry> joint() const { return joint_; }
  std::span<const double> token_marginal() const { return token_marginal_; }
  std::span<const double> entity_marginal() const { return entity_marginal_; }
  double total() const { return total_; }
  // Fingerprints of the corpora the counts came from.
  std::span<const std::string> sources() const { return sources_; }

  bool empty() const { return joint_.empty(); }
  std::size_t size() const { return joint_.size(); }

  std::optional<std::uint32_t> token_id(std::string_view token) const;
  std::optional<std::uint32_t> entity_id(std::string_view entity) const;
  double joint_count(std::string_view token, std::string_view entity) const;
  double token_count(std::string_view token) const;
  double entity_count(std::string_view entity) const;

  friend bool operator==(const CountTable&, const CountTable&) = default;

 private:
  TokenizerConfig config_;
  std::vector<std::string> tokens_;
  std::vector<std::string> entities_;
  std::vector<CountEntry> joint_;
  std::vector<double> token_marginal_;
  std::vector<double> entity_marginal_;
  double total_ = 0.0;
  std::vector<std::string> sources_;
};

// Adds each pair's count to every (token, entity) cell of its token set.
// Shards the corpus across `threads` OpenMP threads (0 = runtime default)
// and merges the partial tables.
CountTable count_cooccurrences(const Corpus& corpus, const TokenizerConfig& config, int threads = 0);

// Single-threaded reference built on std::map and the public tokenizer.
CountTable count_cooccurrences_serial(const Corpus& corpus, const TokenizerConfig& config);

// Cell-wise sum. Associative and commutative; configs must match.
CountTable merge_counts(const CountTable& a, const CountTable& b);

// Every count multiplied by `factor` (> 0).
CountTable scale_counts(const CountTable& table, double factor);

}  // namespace pti

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pti {

// One corpus observation. `count` is the number of occurrences the record
// stands for.
struct MentionEntityPair {
  std::string mention;
  std::string entity;
  std::uint64_t count = 1;
  std::string language;

  friend bool operator==(const MentionEntityPair&, const MentionEntityPair&) = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A multiset of mention-entity pairs for one language. Mentions are stored
// normalized; identical pairs are merged by summing counts. Immutable.
class Corpus {
 public:
  Corpus() = default;
  // Normalizes every mention and merges duplicates. Throws
  // std::invalid_argument when a pair violates the MentionEntityPair rules.
  Corpus(std::string language, std::vector<MentionEntityPair> pairs);

  const std::string& language() const { return language_; }
  // Distinct pairs sorted by (mention, entity).
  std::span<const MentionEntityPair> pairs() const { return pairs_; }
  // Sorted distinct entities.
  std::span<const std::string> entity_set() const { return entities_; }
  // Sorted distinct normalized mentions.
  std::span<const std::string> mention_set() const { return mentions_; }

  bool empty() const { return pairs_.empty(); }
  std::size_t distinct_pairs() const { return pairs_.size(); }
  std::uint64_t total_count() const { return total_count_; }

  bool contains(std::string_view mention, std::string_view entity) const;
  bool has_entity(std::string_view entity) const;
  // Occurrence count of a pair, 0 when absent.
  std::uint64_t count(std::string_view mention, std::string_view entity) const;

  // Deterministic hex digest of the language and merged pairs.
  std::string fingerprint() const;

  friend bool operator==(const Corpus&, const Corpus&) = default;

 private:
  std::string language_;
  std::vector<MentionEntityPair> pairs_;
  std::vector<std::string> entities_;
  std::vector<std::string> mentions_;
  std::uint64_t total_count_ = 0;
};

enum class QueryType { kEasy, kMedium, kHard };

inline constexpr QueryType kAllQueryTypes[] = {QueryType::kEasy, QueryType::kMedium,
                                               QueryType::kHard};

std::string_view to_string(QueryType type);
std::optional<QueryType> parse_query_type(std::string_view text);

struct Query {
  std::string mention;
  std::string entity;
  QueryType type = QueryType::kHard;

  friend bool operator==(const Query&, const Query&) = default;
};

struct EvalSplit {
  Corpus train;
  std::vector<Query> validation;
  std::vector<Query> test;
};

Corpus load_corpus(const std::filesystem::path& path, const std::string& language);
Corpus parse_corpus(std::string_view text, const std::string& language,
                    const std::string& source_name = "<memory>");
// `mention<TAB>entity<TAB>count` lines in pair order.
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string format_corpus(const Corpus& corpus);

// Query files: `mention<TAB>entity[<TAB>count[<TAB>easy|medium|hard]]`. A
// missing type column reads as Hard; callers reclassify as needed.
std::vector<Query> load_queries(const std::filesystem::path& path);
std::vector<Query> parse_queries(std::string_view text, const std::string& source_name = "<memory>");
void write_queries(std::span<const Query> queries, const std::filesystem::path& path);
std::string format_queries(std::span<const Query> queries);

// `mention` must already be normalized.
QueryType classify_query(std::string_view mention, std::string_view entity,
                         const Corpus& target_train);

// Draws up to `max_per_type` unique queries of each type into validation and
// then test, removing what each query needs removed from train so its type
// stays valid against the final train corpus. Deterministic in `seed`.
EvalSplit build_eval_split(const Corpus& target_corpus, std::size_t max_per_type,
                           std::uint64_t seed);

void write_split(const EvalSplit& split, const std::filesystem::path& directory);

// Zipf-popular entities whose mentions are lexical variants of a shared base
// name drawn from `alphabet` (code points, whitespace ignored).
Corpus generate_synthetic(std::size_t n_entities, std::size_t n_pairs, std::string_view alphabet,
                          std::uint64_t seed, const std::string& language = "xx");

struct SyntheticPair {
  Corpus target;
  Corpus pivot;
};

// Target and pivot corpora over the same entity inventory. The target
// spells base names through a seeded character substitution ("dialect"),
// so the two languages overlap lexically without being identical.
SyntheticPair generate_synthetic_pair(std::size_t n_entities, std::size_t target_pairs,
                                      std::size_t pivot_pairs, std::string_view alphabet,
                                      std::uint64_t seed);

}  // namespace pti

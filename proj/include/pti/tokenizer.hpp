#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace pti {

struct TokenizerConfig {
  int n_min = 2;
  int n_max = 5;
  bool wildcard = false;

  // Throws std::invalid_argument unless 1 <= n_min <= n_max.
  void validate() const;

  friend bool operator==(const TokenizerConfig&, const TokenizerConfig&) = default;
};

// A deduplicated, byte-lexicographically sorted set of tokens.
class TokenSet {
 public:
  TokenSet() = default;
  explicit TokenSet(std::vector<std::string> tokens);
  TokenSet(std::initializer_list<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  bool contains(std::string_view token) const;

  auto begin() const { return tokens_.begin(); }
  auto end() const { return tokens_.end(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const TokenSet&, const TokenSet&) = default;

 private:
  std::vector<std::string> tokens_;
};

inline constexpr char kWildcard = '*';

// Character n-grams of a normalized mention for every n in [n_min, n_max],
// counted in Unicode scalar values. A mention shorter than n_min yields
// itself as the only token. Applies wildcard_expand when config.wildcard.
// Throws std::invalid_argument on an empty or ill-formed mention.
TokenSet tokenize(std::string_view mention, const TokenizerConfig& config);

// The input tokens plus every variant with exactly one character replaced by
// the wildcard symbol.
TokenSet wildcard_expand(const TokenSet& tokens);

// Allocation-light variant used by the counting kernels: fills `out` with the
// distinct plain n-grams of `mention` as views into it (no wildcard
// expansion). `out` is sorted and deduplicated on return. `mention` must be
// well-formed UTF-8.
void plain_ngram_views(std::string_view mention, const TokenizerConfig& config,
                       std::vector<std::string_view>& out);

}  // namespace pti

#include "pti/tokenizer.hpp"

#include <algorithm>
#include <stdexcept>

#include "pti/text.hpp"

namespace pti {

void TokenizerConfig::validate() const {
  if (n_min < 1 || n_max < n_min) {
    throw std::invalid_argument("tokenizer requires 1 <= n_min <= n_max, got n_min=" +
                                std::to_string(n_min) + " n_max=" + std::to_string(n_max));
  }
}

TokenSet::TokenSet(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  std::sort(tokens_.begin(), tokens_.end());
  tokens_.erase(std::unique(tokens_.begin(), tokens_.end()), tokens_.end());
}

TokenSet::TokenSet(std::initializer_list<std::string> tokens)
    : TokenSet(std::vector<std::string>(tokens)) {}

bool TokenSet::contains(std::string_view token) const {
  return std::binary_search(tokens_.begin(), tokens_.end(), token,
                            [](std::string_view a, std::string_view b) { return a < b; });
}

void plain_ngram_views(std::string_view mention, const TokenizerConfig& config,
                       std::vector<std::string_view>& out) {
  out.clear();
  const std::vector<std::size_t> offsets = code_point_offsets(mention);
  const std::size_t length = offsets.size() - 1;
  if (length < static_cast<std::size_t>(config.n_min)) {
    out.push_back(mention);
    return;
  }
  for (std::size_t n = config.n_min; n <= static_cast<std::size_t>(config.n_max) && n <= length; ++n) {
    for (std::size_t start = 0; start + n <= length; ++start) {
      out.push_back(mention.substr(offsets[start], offsets[start + n] - offsets[start]));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

TokenSet tokenize(std::string_view mention, const TokenizerConfig& config) {
  config.validate();
  if (mention.empty()) throw std::invalid_argument("cannot tokenize an empty mention");
  if (!is_valid_utf8(mention)) throw std::invalid_argument("mention is not well-formed UTF-8");
  std::vector<std::string_view> views;
  plain_ngram_views(mention, config, views);
  TokenSet plain(std::vector<std::string>(views.begin(), views.end()));
  return config.wildcard ? wildcard_expand(plain) : plain;
}

TokenSet wildcard_expand(const TokenSet& tokens) {
  std::vector<std::string> expanded;
  for (const std::string& token : tokens) {
    expanded.push_back(token);
    const std::vector<std::size_t> offsets = code_point_offsets(token);
    for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
      std::string variant = token.substr(0, offsets[i]);
      variant.push_back(kWildcard);
      variant.append(token, offsets[i + 1], std::string::npos);
      expanded.push_back(std::move(variant));
    }
  }
  return TokenSet(std::move(expanded));
}

}  // namespace pti

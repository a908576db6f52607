#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pti/text.hpp"
#include "pti/tokenizer.hpp"

using namespace pti;

TEST_CASE("tokenize enumerates character n-grams") {
  CHECK(tokenize("abc", {2, 3, false}) == TokenSet{"ab", "bc", "abc"});
  CHECK(tokenize("roma", {2, 2, false}) == TokenSet{"ro", "om", "ma"});
  CHECK(tokenize("aaa", {2, 2, false}) == TokenSet{"aa"});
}

TEST_CASE("short mentions are their own token") {
  CHECK(tokenize("a", {2, 5, false}) == TokenSet{"a"});
  CHECK(tokenize("ab", {3, 5, false}) == TokenSet{"ab"});
}

TEST_CASE("tokenize counts code points, not bytes, and keeps spaces") {
  // "çà" is four bytes but two characters.
  CHECK(tokenize("\xC3\xA7\xC3\xA0", {2, 2, false}) == TokenSet{"\xC3\xA7\xC3\xA0"});
  CHECK(tokenize("\xE5\x8C\x97\xE4\xBA\xAC\xE5\xB8\x82", {2, 2, false}).size() == 2);
  CHECK(tokenize("a b", {2, 2, false}) == TokenSet{"a ", " b"});
}

TEST_CASE("tokenize rejects bad input") {
  CHECK_THROWS_AS(tokenize("", {}), std::invalid_argument);
  CHECK_THROWS_AS(tokenize("abc", {0, 2, false}), std::invalid_argument);
  CHECK_THROWS_AS(tokenize("abc", {3, 2, false}), std::invalid_argument);
  CHECK_THROWS_AS(tokenize("ab\xff", {}), std::invalid_argument);
  CHECK_THROWS_AS(tokenize("\xd0", {}), std::invalid_argument);
}

TEST_CASE("wildcard_expand") {
  CHECK(wildcard_expand(TokenSet{"ro"}) == TokenSet{"ro", "*o", "r*"});
  CHECK(wildcard_expand(TokenSet{"ab", "ba"}) == TokenSet{"ab", "ba", "*b", "a*", "*a", "b*"});
  CHECK(wildcard_expand(TokenSet{}).empty());
  CHECK(tokenize("ro", {2, 2, true}) == TokenSet{"ro", "*o", "r*"});
}

TEST_CASE("tokenizer properties on random mentions") {
  std::mt19937_64 rng(42);
  const std::vector<std::string> symbols = {"a", "b", "c", " ", "\xC3\xA9", "\xD0\xB6", "\xE4\xB8\xAD"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string raw;
    const int length = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < length; ++i) raw += symbols[rng() % symbols.size()];
    const std::string mention = normalize_mention(raw);
    if (mention.empty()) continue;
    const int n_min = 1 + static_cast<int>(rng() % 3);
    const TokenizerConfig config{n_min, n_min + static_cast<int>(rng() % 4), false};

    const TokenSet tokens = tokenize(mention, config);
    const auto expected = oracle::ngrams(mention, config);
    CHECK(std::vector<std::string>(tokens.begin(), tokens.end()) ==
          std::vector<std::string>(expected.begin(), expected.end()));

    // Size bound, with equality iff all substrings are distinct.
    const auto len = static_cast<long>(code_point_count(mention));
    long bound = 0;
    for (int n = config.n_min; n <= config.n_max; ++n) bound += std::max(0L, len - n + 1);
    if (len >= config.n_min) {
      CHECK(static_cast<long>(tokens.size()) <= bound);
      std::multiset<std::string> all;
      const auto cps = oracle::decode_utf8(mention);
      for (int n = config.n_min; n <= config.n_max; ++n) {
        for (long i = 0; i + n <= len; ++i) all.insert(oracle::encode_utf8(cps.substr(i, n)));
      }
      const bool distinct = std::set<std::string>(all.begin(), all.end()).size() == all.size();
      CHECK((static_cast<long>(tokens.size()) == bound) == distinct);
    }
    CHECK(tokenize(mention, config) == tokens);

    const TokenSet expanded = wildcard_expand(tokens);
    for (const auto& t : tokens) CHECK(expanded.contains(t));
    CHECK(expanded.size() <= tokens.size() * (1 + static_cast<std::size_t>(config.n_max)));
  }
}

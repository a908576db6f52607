#pragma once

// Test-only reference computations. Nothing here calls into the counting,
// index-building or top-k kernels it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pti/corpus.hpp"
#include "pti/index.hpp"
#include "pti/scorer.hpp"
#include "pti/tokenizer.hpp"

namespace pti::oracle {

inline std::u32string decode_utf8(const std::string& s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    const auto b = static_cast<unsigned char>(s[i]);
    int extra = b < 0x80 ? 0 : b < 0xE0 ? 1 : b < 0xF0 ? 2 : 3;
    char32_t cp = extra == 0 ? b : extra == 1 ? (b & 0x1F) : extra == 2 ? (b & 0x0F) : (b & 0x07);
    for (int j = 1; j <= extra; ++j) cp = (cp << 6) | (static_cast<unsigned char>(s[i + j]) & 0x3F);
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

inline std::string encode_utf8(const std::u32string& s) {
  std::string out;
  for (char32_t cp : s) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

// Exhaustive enumeration of n-grams (plus wildcard variants) via UTF-32.
inline std::set<std::string> ngrams(const std::string& mention, const TokenizerConfig& config) {
  const std::u32string cps = decode_utf8(mention);
  std::set<std::string> out;
  if (cps.size() < static_cast<std::size_t>(config.n_min)) {
    out.insert(mention);
  } else {
    for (int n = config.n_min; n <= config.n_max; ++n) {
      for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= cps.size(); ++i) {
        out.insert(encode_utf8(cps.substr(i, static_cast<std::size_t>(n))));
      }
    }
  }
  if (config.wildcard) {
    std::set<std::string> expanded = out;
    for (const std::string& token : out) {
      std::u32string cp = decode_utf8(token);
      for (std::size_t i = 0; i < cp.size(); ++i) {
        std::u32string v = cp;
        v[i] = U'*';
        expanded.insert(encode_utf8(v));
      }
    }
    out = std::move(expanded);
  }
  return out;
}

using Cell = std::pair<std::string, std::string>;  // (token, entity)

inline std::map<Cell, double> joint_counts(const Corpus& corpus, const TokenizerConfig& config, double weight = 1.0) {
  std::map<Cell, double> cells;
  for (const MentionEntityPair& pair : corpus.pairs()) {
    for (const std::string& token : ngrams(pair.mention, config)) {
      cells[{token, pair.entity}] += weight * static_cast<double>(pair.count);
    }
  }
  return cells;
}

struct Probabilities {
  std::map<Cell, double> prior;      // (token, entity) -> P(entity|token)
  std::map<Cell, double> posterior;  // (token, entity) -> P(token|entity)
  std::map<std::string, double> token_prob;
  std::map<std::string, double> entity_prob;
};

// Direct evaluation of the blended-count formulas with ordered maps.
inline Probabilities probabilities(const Corpus& target, const Corpus& pivot, double alpha,
                                   const TokenizerConfig& config) {
  std::map<Cell, double> cells = joint_counts(target, config);
  for (const auto& [cell, c] : joint_counts(pivot, config)) cells[cell] += alpha * c;
  std::map<std::string, double> ct, ce;
  double total = 0.0;
  for (const auto& [cell, c] : cells) {
    ct[cell.first] += c;
    ce[cell.second] += c;
    total += c;
  }
  Probabilities p;
  for (const auto& [cell, c] : cells) {
    if (c <= 0.0) continue;
    p.prior[cell] = c / ct[cell.first];
    p.posterior[cell] = c / ce[cell.second];
  }
  for (const auto& [t, c] : ct) {
    if (c > 0.0) p.token_prob[t] = c / total;
  }
  for (const auto& [e, c] : ce) {
    if (c > 0.0) p.entity_prob[e] = c / total;
  }
  return p;
}

// Additive score evaluated for every entity of the index universe, then a full sort.
inline std::vector<ScoredEntity> brute_force_ranking(const PtiIndex& index, const std::string& mention,
                                                     double lambda) {
  const std::set<std::string> tokens = ngrams(mention, index.meta().tokenizer);
  std::vector<ScoredEntity> all;
  for (const std::string& entity : index.entities()) {
    double score = 0.0;
    for (const std::string& token : tokens) {
      const double p = index.prior(token, entity).value_or(0.0);
      const double q = index.posterior(entity, token).value_or(0.0);
      score += p + lambda * q;
    }
    if (score > 0.0) all.push_back({entity, score});
  }
  std::sort(all.begin(), all.end(), [](const ScoredEntity& a, const ScoredEntity& b) {
    if (a.score > b.score) return true;
    if (a.score < b.score) return false;
    return a.entity < b.entity;
  });
  return all;
}

inline std::vector<ScoredEntity> brute_force_top_k(const PtiIndex& index, const std::string& mention, double lambda,
                                                   std::size_t k) {
  auto all = brute_force_ranking(index, mention, lambda);
  if (all.size() > k) all.resize(k);
  return all;
}

// Factored form: sum over tokens of P(e|t) * (1 + lambda * P(t) / P(e)).
inline double factored_score(const PtiIndex& index, const std::string& mention, const std::string& entity,
                             double lambda) {
  double score = 0.0;
  const double pe = index.entity_prob(entity).value_or(0.0);
  for (const std::string& token : ngrams(mention, index.meta().tokenizer)) {
    const auto p = index.prior(token, entity);
    if (!p) continue;
    score += *p * (1.0 + lambda * index.token_prob(token).value() / pe);
  }
  return score;
}

inline bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

}  // namespace pti::oracle

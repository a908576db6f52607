#include "pti/count_table.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include <omp.h>

namespace pti {
namespace {

bool entry_less(const CountEntry& a, const CountEntry& b) {
  return a.token != b.token ? a.token < b.token : a.entity < b.entity;
}

// Sorts by (token, entity) and folds duplicate cells together.
void sort_and_reduce(std::vector<CountEntry>& entries) {
  std::sort(entries.begin(), entries.end(), entry_less);
  std::size_t out = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (out > 0 && entries[out - 1].token == entries[i].token && entries[out - 1].entity == entries[i].entity) {
      entries[out - 1].count += entries[i].count;
    } else {
      entries[out++] = entries[i];
    }
  }
  entries.resize(out);
}

template <typename Range>
std::optional<std::uint32_t> find_sorted(const Range& keys, std::string_view key) {
  const auto it = std::lower_bound(keys.begin(), keys.end(), key,
                                   [](const std::string& a, std::string_view b) { return a < b; });
  if (it == keys.end() || *it != key) return std::nullopt;
  return static_cast<std::uint32_t>(it - keys.begin());
}

// Maps ids of a sorted vocabulary into the ids of a sorted superset.
std::vector<std::uint32_t> remap_into(std::span<const std::string> from, const std::vector<std::string>& into) {
  std::vector<std::uint32_t> ids(from.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    while (into[j] != from[i]) ++j;
    ids[i] = static_cast<std::uint32_t>(j);
  }
  return ids;
}

std::vector<std::string> sorted_union(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::string> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

CountTable CountTable::from_entries(TokenizerConfig config, std::vector<std::string> tokens,
                                    std::vector<std::string> entities, std::vector<CountEntry> joint,
                                    std::vector<std::string> sources) {
  CountTable table(config);
  table.sources_ = std::move(sources);

  std::erase_if(joint, [](const CountEntry& e) { return !(e.count > 0.0); });
  for (const CountEntry& e : joint) {
    if (e.token >= tokens.size() || e.entity >= entities.size()) {
      throw std::out_of_range("count entry references an unknown token or entity id");
    }
  }

  // Reorder vocabularies so ids follow string order, keeping used keys only.
  auto canonical_ids = [](std::vector<std::string>& vocab, std::vector<bool> used) {
    std::vector<std::uint32_t> order;
    for (std::uint32_t i = 0; i < vocab.size(); ++i) {
      if (used[i]) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return vocab[a] < vocab[b]; });
    std::vector<std::uint32_t> new_id(vocab.size(), 0);
    std::vector<std::string> compact;
    compact.reserve(order.size());
    for (std::uint32_t old : order) {
      if (!compact.empty() && compact.back() == vocab[old]) {
        new_id[old] = static_cast<std::uint32_t>(compact.size() - 1);
        continue;
      }
      new_id[old] = static_cast<std::uint32_t>(compact.size());
      compact.push_back(std::move(vocab[old]));
    }
    vocab = std::move(compact);
    return new_id;
  };
  std::vector<bool> token_used(tokens.size(), false), entity_used(entities.size(), false);
  for (const CountEntry& e : joint) {
    token_used[e.token] = true;
    entity_used[e.entity] = true;
  }
  const auto token_map = canonical_ids(tokens, std::move(token_used));
  const auto entity_map = canonical_ids(entities, std::move(entity_used));
  for (CountEntry& e : joint) {
    e.token = token_map[e.token];
    e.entity = entity_map[e.entity];
  }
  sort_and_reduce(joint);

  table.tokens_ = std::move(tokens);
  table.entities_ = std::move(entities);
  table.joint_ = std::move(joint);
  table.token_marginal_.assign(table.tokens_.size(), 0.0);
  table.entity_marginal_.assign(table.entities_.size(), 0.0);
  for (const CountEntry& e : table.joint_) {
    table.token_marginal_[e.token] += e.count;
    table.entity_marginal_[e.entity] += e.count;
    table.total_ += e.count;
  }
  return table;
}

std::optional<std::uint32_t> CountTable::token_id(std::string_view token) const {
  return find_sorted(tokens_, token);
}

std::optional<std::uint32_t> CountTable::entity_id(std::string_view entity) const {
  return find_sorted(entities_, entity);
}

double CountTable::joint_count(std::string_view token, std::string_view entity) const {
  const auto t = token_id(token);
  const auto e = entity_id(entity);
  if (!t || !e) return 0.0;
  const CountEntry key{*t, *e, 0.0};
  const auto it = std::lower_bound(joint_.begin(), joint_.end(), key, entry_less);
  return (it != joint_.end() && it->token == *t && it->entity == *e) ? it->count : 0.0;
}

double CountTable::token_count(std::string_view token) const {
  const auto t = token_id(token);
  return t ? token_marginal_[*t] : 0.0;
}

double CountTable::entity_count(std::string_view entity) const {
  const auto e = entity_id(entity);
  return e ? entity_marginal_[*e] : 0.0;
}

CountTable count_cooccurrences(const Corpus& corpus, const TokenizerConfig& config, int threads) {
  config.validate();
  const auto pairs = corpus.pairs();
  const auto entity_set = corpus.entity_set();
  const int n_threads = std::max(1, threads > 0 ? threads : omp_get_max_threads());

  struct Shard {
    std::deque<std::string> owned;  // backing storage for wildcard tokens
    std::unordered_map<std::string_view, std::uint32_t> ids;
    std::vector<std::string_view> vocab;
    std::vector<CountEntry> cells;
  };
  std::vector<Shard> shards(static_cast<std::size_t>(n_threads));

#pragma omp parallel num_threads(n_threads)
  {
    Shard& shard = shards[static_cast<std::size_t>(omp_get_thread_num())];
    std::vector<std::string_view> views;
    auto intern = [&shard](std::string_view token, bool copy) {
      const auto it = shard.ids.find(token);
      if (it != shard.ids.end()) return it->second;
      if (copy) token = shard.owned.emplace_back(token);
      const auto id = static_cast<std::uint32_t>(shard.vocab.size());
      shard.vocab.push_back(token);
      shard.ids.emplace(token, id);
      return id;
    };

#pragma omp for schedule(static)
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const MentionEntityPair& pair = pairs[i];
      const auto entity = static_cast<std::uint32_t>(
          std::lower_bound(entity_set.begin(), entity_set.end(), pair.entity) - entity_set.begin());
      const double count = static_cast<double>(pair.count);
      if (config.wildcard) {
        for (const std::string& token : tokenize(pair.mention, config)) {
          shard.cells.push_back({intern(token, true), entity, count});
        }
      } else {
        plain_ngram_views(pair.mention, config, views);
        for (std::string_view token : views) shard.cells.push_back({intern(token, false), entity, count});
      }
    }
    sort_and_reduce(shard.cells);
  }

  // Global vocabulary, then re-key every shard's cells into it.
  std::vector<std::string_view> all_tokens;
  for (const Shard& shard : shards) all_tokens.insert(all_tokens.end(), shard.vocab.begin(), shard.vocab.end());
  std::sort(all_tokens.begin(), all_tokens.end());
  all_tokens.erase(std::unique(all_tokens.begin(), all_tokens.end()), all_tokens.end());

  std::vector<CountEntry> cells;
  std::size_t total_cells = 0;
  for (const Shard& shard : shards) total_cells += shard.cells.size();
  cells.reserve(total_cells);
  for (Shard& shard : shards) {
    std::vector<std::uint32_t> global(shard.vocab.size());
    for (std::size_t i = 0; i < shard.vocab.size(); ++i) {
      global[i] = static_cast<std::uint32_t>(
          std::lower_bound(all_tokens.begin(), all_tokens.end(), shard.vocab[i]) - all_tokens.begin());
    }
    for (const CountEntry& cell : shard.cells) cells.push_back({global[cell.token], cell.entity, cell.count});
    shard.cells = {};
  }

  std::vector<std::string> tokens(all_tokens.begin(), all_tokens.end());
  shards.clear();
  std::vector<std::string> entities(entity_set.begin(), entity_set.end());
  std::vector<std::string> sources;
  if (!corpus.empty()) sources.push_back(corpus.fingerprint());
  return CountTable::from_entries(config, std::move(tokens), std::move(entities), std::move(cells),
                                  std::move(sources));
}

CountTable count_cooccurrences_serial(const Corpus& corpus, const TokenizerConfig& config) {
  config.validate();
  std::map<std::pair<std::string, std::string>, double> cells;
  for (const MentionEntityPair& pair : corpus.pairs()) {
    for (const std::string& token : tokenize(pair.mention, config)) {
      cells[{token, pair.entity}] += static_cast<double>(pair.count);
    }
  }
  std::vector<std::string> tokens;
  std::vector<std::string> entities(corpus.entity_set().begin(), corpus.entity_set().end());
  std::vector<CountEntry> joint;
  for (const auto& [key, count] : cells) {
    if (tokens.empty() || tokens.back() != key.first) tokens.push_back(key.first);
    const auto entity = std::lower_bound(entities.begin(), entities.end(), key.second) - entities.begin();
    joint.push_back({static_cast<std::uint32_t>(tokens.size() - 1), static_cast<std::uint32_t>(entity), count});
  }
  std::vector<std::string> sources;
  if (!corpus.empty()) sources.push_back(corpus.fingerprint());
  return CountTable::from_entries(config, std::move(tokens), std::move(entities), std::move(joint),
                                  std::move(sources));
}

CountTable merge_counts(const CountTable& a, const CountTable& b) {
  if (!(a.config() == b.config())) throw std::invalid_argument("cannot merge count tables with different tokenizers");
  std::vector<std::string> tokens = sorted_union(a.tokens(), b.tokens());
  std::vector<std::string> entities = sorted_union(a.entities(), b.entities());
  std::vector<CountEntry> joint;
  joint.reserve(a.size() + b.size());
  for (const CountTable* table : {&a, &b}) {
    const auto token_ids = remap_into(table->tokens(), tokens);
    const auto entity_ids = remap_into(table->entities(), entities);
    for (const CountEntry& e : table->joint()) joint.push_back({token_ids[e.token], entity_ids[e.entity], e.count});
  }
  std::vector<std::string> sources(a.sources().begin(), a.sources().end());
  sources.insert(sources.end(), b.sources().begin(), b.sources().end());
  std::sort(sources.begin(), sources.end());
  return CountTable::from_entries(a.config(), std::move(tokens), std::move(entities), std::move(joint),
                                  std::move(sources));
}

CountTable scale_counts(const CountTable& table, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("scale factor must be positive");
  std::vector<CountEntry> joint(table.joint().begin(), table.joint().end());
  for (CountEntry& e : joint) e.count *= factor;
  return CountTable::from_entries(table.config(), {table.tokens().begin(), table.tokens().end()},
                                  {table.entities().begin(), table.entities().end()}, std::move(joint),
                                  {table.sources().begin(), table.sources().end()});
}

}  // namespace pti

#include "pti/index.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace pti {
namespace {

std::string format_number(double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

void check_sorted_unique(const std::vector<std::string>& keys, const char* what) {
  for (std::size_t i = 1; i < keys.size(); ++i) {
    if (!(keys[i - 1] < keys[i])) throw std::invalid_argument(std::string(what) + " must be strictly sorted");
  }
}

std::vector<std::string> sorted_union(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::string> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<std::uint32_t> remap_into(std::span<const std::string> from, const std::vector<std::string>& into) {
  std::vector<std::uint32_t> ids(from.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    while (into[j] != from[i]) ++j;
    ids[i] = static_cast<std::uint32_t>(j);
  }
  return ids;
}

// Prior and posterior rows from canonical counts; `prior_value` and
// `posterior_value` map a cell to its stored probability.
template <typename PriorFn, typename PosteriorFn>
PtiIndex index_from_counts(const CountTable& counts, IndexMeta meta, PriorFn prior_value,
                           PosteriorFn posterior_value) {
  const auto joint = counts.joint();
  const auto token_marginal = counts.token_marginal();
  const auto entity_marginal = counts.entity_marginal();
  const std::size_t n_tokens = counts.tokens().size();
  const std::size_t n_entities = counts.entities().size();

  std::vector<std::size_t> prior_offsets(n_tokens + 1, 0);
  std::vector<SparseEntry> prior_entries;
  prior_entries.reserve(joint.size());
  for (const CountEntry& cell : joint) {
    ++prior_offsets[cell.token + 1];
    prior_entries.push_back({cell.entity, prior_value(cell)});
  }
  for (std::size_t t = 0; t < n_tokens; ++t) prior_offsets[t + 1] += prior_offsets[t];

  std::vector<std::size_t> post_offsets(n_entities + 1, 0);
  for (const CountEntry& cell : joint) ++post_offsets[cell.entity + 1];
  for (std::size_t e = 0; e < n_entities; ++e) post_offsets[e + 1] += post_offsets[e];
  std::vector<SparseEntry> post_entries(joint.size());
  std::vector<std::size_t> cursor(post_offsets.begin(), post_offsets.end() - 1);
  for (const CountEntry& cell : joint) {
    post_entries[cursor[cell.entity]++] = {cell.token, posterior_value(cell)};
  }

  std::vector<double> token_prob(n_tokens), entity_prob(n_entities);
  for (std::size_t t = 0; t < n_tokens; ++t) token_prob[t] = token_marginal[t] / counts.total();
  for (std::size_t e = 0; e < n_entities; ++e) entity_prob[e] = entity_marginal[e] / counts.total();

  meta.tokenizer = counts.config();
  meta.sources.assign(counts.sources().begin(), counts.sources().end());
  return PtiIndex(std::move(meta), {counts.tokens().begin(), counts.tokens().end()},
                  {counts.entities().begin(), counts.entities().end()},
                  SparseRows(std::move(prior_offsets), std::move(prior_entries)),
                  SparseRows(std::move(post_offsets), std::move(post_entries)), std::move(token_prob),
                  std::move(entity_prob));
}

PtiIndex index_from_counts(const CountTable& counts, IndexMeta meta) {
  const auto token_marginal = counts.token_marginal();
  const auto entity_marginal = counts.entity_marginal();
  return index_from_counts(
      counts, std::move(meta), [&](const CountEntry& c) { return c.count / token_marginal[c.token]; },
      [&](const CountEntry& c) { return c.count / entity_marginal[c.entity]; });
}

SparseRows filter_rows(const SparseRows& rows, double tau) {
  std::vector<std::size_t> offsets{0};
  std::vector<SparseEntry> kept;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    for (const SparseEntry& entry : rows.row(r)) {
      if (entry.prob >= tau) kept.push_back(entry);
    }
    offsets.push_back(kept.size());
  }
  return SparseRows(std::move(offsets), std::move(kept));
}

// Row-wise a + gamma * b over the union row/column spaces, each row
// renormalized to sum 1. Rows that end up empty stay empty.
SparseRows fuse_rows(const SparseRows& a, const std::vector<std::uint32_t>& a_rows,
                     const std::vector<std::uint32_t>& a_cols, const SparseRows& b,
                     const std::vector<std::uint32_t>& b_rows, const std::vector<std::uint32_t>& b_cols,
                     double gamma, std::size_t n_rows) {
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> from_a(n_rows, kNone), from_b(n_rows, kNone);
  for (std::size_t r = 0; r < a_rows.size(); ++r) from_a[a_rows[r]] = r;
  for (std::size_t r = 0; r < b_rows.size(); ++r) from_b[b_rows[r]] = r;

  std::vector<std::size_t> offsets{0};
  std::vector<SparseEntry> entries;
  std::vector<SparseEntry> row;
  for (std::size_t r = 0; r < n_rows; ++r) {
    row.clear();
    const auto ra = from_a[r] == kNone ? std::span<const SparseEntry>() : a.row(from_a[r]);
    const auto rb = from_b[r] == kNone ? std::span<const SparseEntry>() : b.row(from_b[r]);
    std::size_t i = 0, j = 0;
    while (i < ra.size() || j < rb.size()) {
      const std::uint32_t ca = i < ra.size() ? a_cols[ra[i].id] : UINT32_MAX;
      const std::uint32_t cb = j < rb.size() ? b_cols[rb[j].id] : UINT32_MAX;
      const std::uint32_t col = std::min(ca, cb);
      double value = 0.0;
      if (ca == col) value += ra[i++].prob;
      if (cb == col) value += gamma * rb[j++].prob;
      if (value > 0.0) row.push_back({col, value});
    }
    double sum = 0.0;
    for (const SparseEntry& e : row) sum += e.prob;
    if (sum > 0.0) {
      for (const SparseEntry& e : row) entries.push_back({e.id, e.prob / sum});
    }
    offsets.push_back(entries.size());
  }
  return SparseRows(std::move(offsets), std::move(entries));
}

std::vector<double> fuse_marginals(std::span<const double> a, const std::vector<std::uint32_t>& a_ids,
                                   std::span<const double> b, const std::vector<std::uint32_t>& b_ids, double gamma,
                                   std::size_t n) {
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[a_ids[i]] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[b_ids[i]] += gamma * b[i];
  double sum = 0.0;
  for (double v : out) sum += v;
  if (sum > 0.0) {
    for (double& v : out) v /= sum;
  }
  return out;
}

}  // namespace

SparseRows::SparseRows(std::vector<std::size_t> offsets, std::vector<SparseEntry> entries)
    : offsets_(std::move(offsets)), entries_(std::move(entries)) {
  if (offsets_.empty() || offsets_.front() != 0 || offsets_.back() != entries_.size()) {
    throw std::invalid_argument("sparse row offsets do not cover the entries");
  }
  for (std::size_t r = 0; r + 1 < offsets_.size(); ++r) {
    if (offsets_[r] > offsets_[r + 1]) throw std::invalid_argument("sparse row offsets must be non-decreasing");
    for (std::size_t i = offsets_[r] + 1; i < offsets_[r + 1]; ++i) {
      if (entries_[i - 1].id >= entries_[i].id) throw std::invalid_argument("sparse row ids must be strictly sorted");
    }
  }
}

std::optional<double> SparseRows::find(std::size_t r, std::uint32_t id) const {
  const auto entries = row(r);
  const auto it = std::lower_bound(entries.begin(), entries.end(), id,
                                   [](const SparseEntry& e, std::uint32_t key) { return e.id < key; });
  if (it == entries.end() || it->id != id) return std::nullopt;
  return it->prob;
}

SparseRows SparseRows::transposed(std::size_t columns) const {
  std::vector<std::size_t> offsets(columns + 1, 0);
  for (const SparseEntry& e : entries_) {
    if (e.id >= columns) throw std::invalid_argument("sparse entry id exceeds the column count");
    ++offsets[e.id + 1];
  }
  for (std::size_t c = 0; c < columns; ++c) offsets[c + 1] += offsets[c];
  std::vector<SparseEntry> entries(entries_.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t r = 0; r < rows(); ++r) {
    for (const SparseEntry& e : row(r)) entries[cursor[e.id]++] = {static_cast<std::uint32_t>(r), e.prob};
  }
  return SparseRows(std::move(offsets), std::move(entries));
}

PtiIndex::PtiIndex(IndexMeta meta, std::vector<std::string> tokens, std::vector<std::string> entities,
                   SparseRows prior, SparseRows posterior, std::vector<double> token_prob,
                   std::vector<double> entity_prob)
    : meta_(std::move(meta)),
      tokens_(std::move(tokens)),
      entities_(std::move(entities)),
      prior_(std::move(prior)),
      posterior_(std::move(posterior)),
      token_prob_(std::move(token_prob)),
      entity_prob_(std::move(entity_prob)) {
  check_sorted_unique(tokens_, "index tokens");
  check_sorted_unique(entities_, "index entities");
  if (prior_.rows() != tokens_.size() || token_prob_.size() != tokens_.size()) {
    throw std::invalid_argument("prior rows and token marginals must match the token vocabulary");
  }
  if (posterior_.rows() != entities_.size() || entity_prob_.size() != entities_.size()) {
    throw std::invalid_argument("posterior rows and entity marginals must match the entity vocabulary");
  }
  for (std::size_t t = 0; t < tokens_.size(); ++t) {
    for (const SparseEntry& e : prior_.row(t)) {
      if (e.id >= entities_.size()) throw std::invalid_argument("prior entry references an unknown entity");
    }
  }
  posterior_by_token_ = posterior_.transposed(tokens_.size());
  token_lookup_.reserve(tokens_.size());
  for (std::size_t t = 0; t < tokens_.size(); ++t) token_lookup_.emplace(tokens_[t], static_cast<std::uint32_t>(t));
}

std::optional<std::uint32_t> PtiIndex::token_id(std::string_view token) const {
  const auto it = token_lookup_.find(token);
  if (it == token_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> PtiIndex::entity_id(std::string_view entity) const {
  const auto it = std::lower_bound(entities_.begin(), entities_.end(), entity,
                                   [](const std::string& a, std::string_view b) { return a < b; });
  if (it == entities_.end() || *it != entity) return std::nullopt;
  return static_cast<std::uint32_t>(it - entities_.begin());
}

std::optional<double> PtiIndex::prior(std::string_view token, std::string_view entity) const {
  const auto t = token_id(token);
  const auto e = entity_id(entity);
  if (!t || !e) return std::nullopt;
  return prior_.find(*t, *e);
}

std::optional<double> PtiIndex::posterior(std::string_view entity, std::string_view token) const {
  const auto t = token_id(token);
  const auto e = entity_id(entity);
  if (!t || !e) return std::nullopt;
  return posterior_.find(*e, *t);
}

std::optional<double> PtiIndex::token_prob(std::string_view token) const {
  const auto t = token_id(token);
  if (!t) return std::nullopt;
  return token_prob_[*t];
}

std::optional<double> PtiIndex::entity_prob(std::string_view entity) const {
  const auto e = entity_id(entity);
  if (!e) return std::nullopt;
  return entity_prob_[*e];
}

bool operator==(const PtiIndex& a, const PtiIndex& b) {
  return a.meta_ == b.meta_ && a.tokens_ == b.tokens_ && a.entities_ == b.entities_ && a.prior_ == b.prior_ &&
         a.posterior_ == b.posterior_ && a.token_prob_ == b.token_prob_ && a.entity_prob_ == b.entity_prob_;
}

PtiIndex build_index(const CountTable& target_counts, const CountTable& pivot_counts, double alpha) {
  if (!(target_counts.config() == pivot_counts.config())) {
    throw std::invalid_argument("target and pivot counts were built with different tokenizer configs");
  }
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  if (target_counts.empty() && pivot_counts.empty()) {
    throw std::invalid_argument("cannot build an index from two empty count tables");
  }

  std::vector<std::string> tokens = sorted_union(target_counts.tokens(), pivot_counts.tokens());
  std::vector<std::string> entities = sorted_union(target_counts.entities(), pivot_counts.entities());
  std::vector<CountEntry> cells;
  cells.reserve(target_counts.size() + pivot_counts.size());
  auto append = [&](const CountTable& table, double weight) {
    const auto token_ids = remap_into(table.tokens(), tokens);
    const auto entity_ids = remap_into(table.entities(), entities);
    for (const CountEntry& e : table.joint()) {
      cells.push_back({token_ids[e.token], entity_ids[e.entity], weight == 1.0 ? e.count : weight * e.count});
    }
  };
  append(target_counts, 1.0);
  append(pivot_counts, alpha);

  std::vector<std::string> sources(target_counts.sources().begin(), target_counts.sources().end());
  sources.insert(sources.end(), pivot_counts.sources().begin(), pivot_counts.sources().end());
  const CountTable blended = CountTable::from_entries(target_counts.config(), std::move(tokens),
                                                      std::move(entities), std::move(cells), std::move(sources));
  if (blended.empty()) throw std::invalid_argument("blended counts are empty (alpha = 0 with an empty target)");

  IndexMeta meta;
  meta.alpha = alpha;
  return index_from_counts(blended, std::move(meta));
}

PtiIndex apply_threshold(const PtiIndex& index, double tau) {
  if (!(tau >= 0.0 && tau < 1.0)) throw std::invalid_argument("threshold must satisfy 0 <= tau < 1");
  IndexMeta meta = index.meta();
  meta.tau = tau;
  return PtiIndex(std::move(meta), {index.tokens().begin(), index.tokens().end()},
                  {index.entities().begin(), index.entities().end()}, filter_rows(index.prior_rows(), tau),
                  filter_rows(index.posterior_rows(), tau), {index.token_probs().begin(), index.token_probs().end()},
                  {index.entity_probs().begin(), index.entity_probs().end()});
}

PtiIndex smooth_pivot_probabilities(const CountTable& pivot_counts, double beta,
                                    std::span<const std::string> entity_universe) {
  if (!(beta > 0.0)) throw std::invalid_argument("smoothing beta must be > 0");
  if (pivot_counts.empty()) throw std::invalid_argument("cannot smooth an empty count table");
  std::vector<std::string> universe(entity_universe.begin(), entity_universe.end());
  std::sort(universe.begin(), universe.end());
  universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
  for (const std::string& entity : pivot_counts.entities()) {
    if (!std::binary_search(universe.begin(), universe.end(), entity)) {
      throw std::invalid_argument("entity universe does not contain pivot entity '" + entity + "'");
    }
  }

  const double entity_mass = beta * static_cast<double>(universe.size());
  const double token_mass = beta * static_cast<double>(pivot_counts.tokens().size());
  const auto token_marginal = pivot_counts.token_marginal();
  const auto entity_marginal = pivot_counts.entity_marginal();

  IndexMeta meta;
  meta.variant = "smoothed beta=" + format_number(beta) + " entities=" + std::to_string(universe.size()) +
                 " tokens=" + std::to_string(pivot_counts.tokens().size());
  return index_from_counts(
      pivot_counts, std::move(meta),
      [&](const CountEntry& c) { return (c.count + beta) / (token_marginal[c.token] + entity_mass); },
      [&](const CountEntry& c) { return (c.count + beta) / (entity_marginal[c.entity] + token_mass); });
}

PtiIndex fuse_indexes(const PtiIndex& target_index, const PtiIndex& pivot_index, double gamma) {
  if (!(target_index.meta().tokenizer == pivot_index.meta().tokenizer)) {
    throw std::invalid_argument("cannot fuse indexes built with different tokenizer configs");
  }
  if (!(gamma >= 0.0)) throw std::invalid_argument("fusion gamma must be >= 0");

  const std::vector<std::string> tokens = sorted_union(target_index.tokens(), pivot_index.tokens());
  const std::vector<std::string> entities = sorted_union(target_index.entities(), pivot_index.entities());
  const auto tt = remap_into(target_index.tokens(), tokens);
  const auto pt = remap_into(pivot_index.tokens(), tokens);
  const auto te = remap_into(target_index.entities(), entities);
  const auto pe = remap_into(pivot_index.entities(), entities);

  SparseRows prior = fuse_rows(target_index.prior_rows(), tt, te, pivot_index.prior_rows(), pt, pe, gamma,
                               tokens.size());
  SparseRows posterior = fuse_rows(target_index.posterior_rows(), te, tt, pivot_index.posterior_rows(), pe, pt,
                                   gamma, entities.size());
  std::vector<double> token_prob =
      fuse_marginals(target_index.token_probs(), tt, pivot_index.token_probs(), pt, gamma, tokens.size());
  std::vector<double> entity_prob =
      fuse_marginals(target_index.entity_probs(), te, pivot_index.entity_probs(), pe, gamma, entities.size());

  // Drop keys that carry neither mass nor entries (pivot-only keys at gamma 0).
  std::vector<bool> keep_token(tokens.size()), keep_entity(entities.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    keep_token[t] = token_prob[t] > 0.0 || !prior.row(t).empty();
    for (const SparseEntry& e : prior.row(t)) keep_entity[e.id] = true;
  }
  for (std::size_t e = 0; e < entities.size(); ++e) {
    if (entity_prob[e] > 0.0 || !posterior.row(e).empty()) keep_entity[e] = true;
    for (const SparseEntry& entry : posterior.row(e)) keep_token[entry.id] = true;
  }
  auto compact_ids = [](const std::vector<bool>& keep) {
    std::vector<std::uint32_t> ids(keep.size(), UINT32_MAX);
    std::uint32_t next = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (keep[i]) ids[i] = next++;
    }
    return ids;
  };
  const auto token_ids = compact_ids(keep_token);
  const auto entity_ids = compact_ids(keep_entity);
  auto compact_rows = [](const SparseRows& rows, const std::vector<bool>& keep_row,
                         const std::vector<std::uint32_t>& col_ids) {
    std::vector<std::size_t> offsets{0};
    std::vector<SparseEntry> entries;
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      if (!keep_row[r]) continue;
      for (const SparseEntry& e : rows.row(r)) entries.push_back({col_ids[e.id], e.prob});
      offsets.push_back(entries.size());
    }
    return SparseRows(std::move(offsets), std::move(entries));
  };
  auto compact_values = [](const auto& values, const std::vector<bool>& keep) {
    std::decay_t<decltype(values)> out;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (keep[i]) out.push_back(values[i]);
    }
    return out;
  };

  IndexMeta meta;
  meta.alpha = gamma;
  meta.tau = 0.0;
  meta.tokenizer = target_index.meta().tokenizer;
  meta.sources = target_index.meta().sources;
  meta.sources.insert(meta.sources.end(), pivot_index.meta().sources.begin(), pivot_index.meta().sources.end());
  meta.variant = "fused gamma=" + format_number(gamma);
  if (!pivot_index.meta().variant.empty()) meta.variant += " pivot=" + pivot_index.meta().variant;
  return PtiIndex(std::move(meta), compact_values(tokens, keep_token), compact_values(entities, keep_entity),
                  compact_rows(prior, keep_token, entity_ids), compact_rows(posterior, keep_entity, token_ids),
                  compact_values(token_prob, keep_token), compact_values(entity_prob, keep_entity));
}

}  // namespace pti

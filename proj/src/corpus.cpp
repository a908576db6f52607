#include "pti/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include <zlib.h>

#include "pti/text.hpp"

namespace pti {
namespace {

bool has_ascii_space(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  });
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

// Calls `fn(line_number, line)` for every non-blank, non-comment line.
template <typename Fn>
void for_each_record(std::string_view text, Fn&& fn) {
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    fn(line_number, line);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + path.string());
  out << content;
  if (!out) throw std::system_error(errno, std::generic_category(), "write failed for " + path.string());
}

std::uint64_t parse_count(std::string_view field, const std::string& source, std::size_t line) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || value == 0) {
    throw ParseError(source, line, "count must be a positive integer, got '" + std::string(field) + "'");
  }
  return value;
}

std::string parse_mention(std::string_view field, const std::string& source, std::size_t line) {
  std::string mention;
  try {
    mention = normalize_mention(field);
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, line, e.what());
  }
  if (mention.empty()) throw ParseError(source, line, "empty mention");
  return mention;
}

void check_entity(std::string_view field, const std::string& source, std::size_t line) {
  if (field.empty() || has_ascii_space(field)) {
    throw ParseError(source, line, "entity must be non-empty and contain no whitespace");
  }
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

Corpus::Corpus(std::string language, std::vector<MentionEntityPair> pairs)
    : language_(std::move(language)) {
  for (MentionEntityPair& pair : pairs) {
    pair.mention = normalize_mention(pair.mention);
    if (pair.mention.empty()) throw std::invalid_argument("mention is empty after normalization");
    if (pair.entity.empty() || has_ascii_space(pair.entity)) {
      throw std::invalid_argument("entity '" + pair.entity + "' is empty or contains whitespace");
    }
    if (pair.count < 1) throw std::invalid_argument("pair count must be >= 1");
    pair.language = language_;
  }
  std::sort(pairs.begin(), pairs.end(), [](const MentionEntityPair& a, const MentionEntityPair& b) {
    return std::tie(a.mention, a.entity) < std::tie(b.mention, b.entity);
  });
  for (MentionEntityPair& pair : pairs) {
    total_count_ += pair.count;
    if (!pairs_.empty() && pairs_.back().mention == pair.mention && pairs_.back().entity == pair.entity) {
      pairs_.back().count += pair.count;
    } else {
      pairs_.push_back(std::move(pair));
    }
  }
  for (const MentionEntityPair& pair : pairs_) {
    if (mentions_.empty() || mentions_.back() != pair.mention) mentions_.push_back(pair.mention);
    entities_.push_back(pair.entity);
  }
  std::sort(entities_.begin(), entities_.end());
  entities_.erase(std::unique(entities_.begin(), entities_.end()), entities_.end());
}

bool Corpus::contains(std::string_view mention, std::string_view entity) const {
  return count(mention, entity) > 0;
}

std::uint64_t Corpus::count(std::string_view mention, std::string_view entity) const {
  const auto it = std::lower_bound(pairs_.begin(), pairs_.end(), std::pair(mention, entity),
                                   [](const MentionEntityPair& p, const auto& key) {
                                     return std::pair<std::string_view, std::string_view>(p.mention, p.entity) < key;
                                   });
  if (it != pairs_.end() && it->mention == mention && it->entity == entity) return it->count;
  return 0;
}

bool Corpus::has_entity(std::string_view entity) const {
  return std::binary_search(entities_.begin(), entities_.end(), entity,
                            [](std::string_view a, std::string_view b) { return a < b; });
}

std::string Corpus::fingerprint() const {
  uLong crc = crc32(0L, Z_NULL, 0);
  const std::string header = language_ + "\n";
  crc = crc32(crc, reinterpret_cast<const Bytef*>(header.data()), static_cast<uInt>(header.size()));
  for (const MentionEntityPair& pair : pairs_) {
    const std::string line = pair.mention + "\t" + pair.entity + "\t" + std::to_string(pair.count) + "\n";
    crc = crc32(crc, reinterpret_cast<const Bytef*>(line.data()), static_cast<uInt>(line.size()));
  }
  char buffer[24];
  std::snprintf(buffer, sizeof buffer, "%08lx", static_cast<unsigned long>(crc));
  return (language_.empty() ? std::string("-") : language_) + ":" + buffer + ":" + std::to_string(pairs_.size());
}

std::string_view to_string(QueryType type) {
  switch (type) {
    case QueryType::kEasy: return "easy";
    case QueryType::kMedium: return "medium";
    case QueryType::kHard: return "hard";
  }
  return "hard";
}

std::optional<QueryType> parse_query_type(std::string_view text) {
  for (QueryType type : kAllQueryTypes) {
    if (to_string(type) == text) return type;
  }
  return std::nullopt;
}

Corpus parse_corpus(std::string_view text, const std::string& language, const std::string& source_name) {
  std::vector<MentionEntityPair> pairs;
  for_each_record(text, [&](std::size_t line, std::string_view record) {
    const auto fields = split_tabs(record);
    if (fields.size() != 2 && fields.size() != 3) {
      throw ParseError(source_name, line,
                       "expected 2 or 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    MentionEntityPair pair;
    pair.mention = parse_mention(fields[0], source_name, line);
    check_entity(fields[1], source_name, line);
    pair.entity = std::string(fields[1]);
    if (fields.size() == 3) pair.count = parse_count(fields[2], source_name, line);
    pairs.push_back(std::move(pair));
  });
  return Corpus(language, std::move(pairs));
}

Corpus load_corpus(const std::filesystem::path& path, const std::string& language) {
  return parse_corpus(read_file(path), language, path.string());
}

std::string format_corpus(const Corpus& corpus) {
  std::string out;
  for (const MentionEntityPair& pair : corpus.pairs()) {
    out += pair.mention;
    out += '\t';
    out += pair.entity;
    out += '\t';
    out += std::to_string(pair.count);
    out += '\n';
  }
  return out;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file(path, format_corpus(corpus));
}

std::vector<Query> parse_queries(std::string_view text, const std::string& source_name) {
  std::vector<Query> queries;
  for_each_record(text, [&](std::size_t line, std::string_view record) {
    const auto fields = split_tabs(record);
    if (fields.size() < 2 || fields.size() > 4) {
      throw ParseError(source_name, line,
                       "expected 2 to 4 tab-separated fields, got " + std::to_string(fields.size()));
    }
    Query query;
    query.mention = parse_mention(fields[0], source_name, line);
    check_entity(fields[1], source_name, line);
    query.entity = std::string(fields[1]);
    if (fields.size() >= 3) parse_count(fields[2], source_name, line);
    if (fields.size() == 4) {
      const auto type = parse_query_type(fields[3]);
      if (!type) throw ParseError(source_name, line, "unknown query type '" + std::string(fields[3]) + "'");
      query.type = *type;
    }
    queries.push_back(std::move(query));
  });
  return queries;
}

std::vector<Query> load_queries(const std::filesystem::path& path) {
  return parse_queries(read_file(path), path.string());
}

std::string format_queries(std::span<const Query> queries) {
  std::string out;
  for (const Query& query : queries) {
    out += query.mention;
    out += '\t';
    out += query.entity;
    out += "\t1\t";
    out += to_string(query.type);
    out += '\n';
  }
  return out;
}

void write_queries(std::span<const Query> queries, const std::filesystem::path& path) {
  write_file(path, format_queries(queries));
}

QueryType classify_query(std::string_view mention, std::string_view entity, const Corpus& target_train) {
  if (target_train.contains(mention, entity)) return QueryType::kEasy;
  if (target_train.has_entity(entity)) return QueryType::kMedium;
  return QueryType::kHard;
}

EvalSplit build_eval_split(const Corpus& target_corpus, std::size_t max_per_type, std::uint64_t seed) {
  if (max_per_type < 1) throw std::invalid_argument("max_per_type must be >= 1");
  const auto pairs = target_corpus.pairs();
  const auto entities = target_corpus.entity_set();

  std::vector<std::uint64_t> remaining(pairs.size());
  std::vector<std::size_t> entity_of(pairs.size());
  std::vector<std::vector<std::size_t>> pairs_of_entity(entities.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    remaining[i] = pairs[i].count;
    entity_of[i] = static_cast<std::size_t>(
        std::lower_bound(entities.begin(), entities.end(), pairs[i].entity) - entities.begin());
    pairs_of_entity[entity_of[i]].push_back(i);
  }
  std::vector<std::size_t> live_mentions(entities.size());
  for (std::size_t e = 0; e < entities.size(); ++e) live_mentions[e] = pairs_of_entity[e].size();
  // An entity referenced by any query may no longer be removed wholesale.
  std::vector<bool> entity_locked(entities.size(), false);
  std::vector<bool> pair_used(pairs.size(), false);

  std::mt19937_64 rng(seed);
  auto shuffled = [&rng](std::size_t n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    return order;
  };
  auto make_query = [&](std::size_t i, QueryType type) {
    pair_used[i] = true;
    entity_locked[entity_of[i]] = true;
    return Query{pairs[i].mention, pairs[i].entity, type};
  };

  auto draw = [&](std::vector<Query>& out) {
    std::size_t taken = 0;
    for (std::size_t i : shuffled(pairs.size())) {
      if (taken == max_per_type) break;
      if (pair_used[i] || remaining[i] < 2) continue;
      --remaining[i];
      out.push_back(make_query(i, QueryType::kEasy));
      ++taken;
    }
    taken = 0;
    for (std::size_t i : shuffled(pairs.size())) {
      if (taken == max_per_type) break;
      if (pair_used[i] || remaining[i] == 0 || live_mentions[entity_of[i]] < 2) continue;
      remaining[i] = 0;
      --live_mentions[entity_of[i]];
      out.push_back(make_query(i, QueryType::kMedium));
      ++taken;
    }
    taken = 0;
    for (std::size_t e : shuffled(entities.size())) {
      if (taken == max_per_type) break;
      if (entity_locked[e] || live_mentions[e] == 0) continue;
      std::vector<std::size_t> live;
      for (std::size_t i : pairs_of_entity[e]) {
        if (remaining[i] > 0) live.push_back(i);
      }
      const std::size_t pick = live[std::uniform_int_distribution<std::size_t>(0, live.size() - 1)(rng)];
      for (std::size_t i : live) remaining[i] = 0;
      live_mentions[e] = 0;
      out.push_back(make_query(pick, QueryType::kHard));
      ++taken;
    }
  };

  EvalSplit split;
  draw(split.validation);
  draw(split.test);

  std::vector<MentionEntityPair> train;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (remaining[i] == 0) continue;
    MentionEntityPair pair = pairs[i];
    pair.count = remaining[i];
    train.push_back(std::move(pair));
  }
  split.train = Corpus(target_corpus.language(), std::move(train));
  return split;
}

void write_split(const EvalSplit& split, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  write_corpus(split.train, directory / "train.tsv");
  write_queries(split.validation, directory / "valid.tsv");
  write_queries(split.test, directory / "test.tsv");
}

namespace {

struct Inventory {
  std::vector<std::string> symbols;
  // Per entity: base name first, then lexical variants.
  std::vector<std::vector<std::vector<std::size_t>>> names;
};

std::vector<std::string> alphabet_symbols(std::string_view alphabet) {
  if (!is_valid_utf8(alphabet)) throw std::invalid_argument("alphabet is not well-formed UTF-8");
  const auto offsets = code_point_offsets(alphabet);
  std::vector<std::string> symbols;
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
    std::string symbol(alphabet.substr(offsets[i], offsets[i + 1] - offsets[i]));
    if (normalize_mention(symbol).empty()) continue;
    if (std::find(symbols.begin(), symbols.end(), symbol) == symbols.end()) symbols.push_back(symbol);
  }
  if (symbols.empty()) throw std::invalid_argument("alphabet has no non-whitespace characters");
  return symbols;
}

constexpr std::size_t kSpace = static_cast<std::size_t>(-1);

Inventory make_inventory(std::size_t n_entities, std::string_view alphabet, std::mt19937_64& rng) {
  Inventory inv;
  inv.symbols = alphabet_symbols(alphabet);
  std::uniform_int_distribution<std::size_t> symbol(0, inv.symbols.size() - 1);
  std::uniform_int_distribution<int> word_length(3, 8);
  std::discrete_distribution<int> word_count({60, 30, 10});
  inv.names.resize(n_entities);
  for (auto& names : inv.names) {
    std::vector<std::size_t> base;
    const int words = 1 + word_count(rng);
    for (int w = 0; w < words; ++w) {
      if (w > 0) base.push_back(kSpace);
      const int length = word_length(rng);
      for (int c = 0; c < length; ++c) base.push_back(symbol(rng));
    }
    names.push_back(base);
    // Substitution, deletion and insertion variants of the base name.
    for (int v = 0; v < 3; ++v) {
      std::vector<std::size_t> variant = base;
      std::size_t at = std::uniform_int_distribution<std::size_t>(0, variant.size() - 1)(rng);
      if (variant[at] == kSpace) at = 0;
      if (v == 0) {
        variant[at] = symbol(rng);
      } else if (v == 1 && variant.size() > 3) {
        variant.erase(variant.begin() + static_cast<std::ptrdiff_t>(at));
      } else {
        variant.insert(variant.begin() + static_cast<std::ptrdiff_t>(at), symbol(rng));
      }
      names.push_back(std::move(variant));
    }
  }
  return inv;
}

std::string spell(const std::vector<std::size_t>& name, const std::vector<std::string>& symbols,
                  const std::vector<std::size_t>& mapping) {
  std::string out;
  for (std::size_t s : name) {
    out += s == kSpace ? std::string(" ") : symbols[mapping[s]];
  }
  return out;
}

Corpus draw_corpus(const Inventory& inv, const std::vector<std::size_t>& mapping, std::size_t n_pairs,
                   const std::string& language, std::mt19937_64& rng) {
  const std::size_t n_entities = inv.names.size();
  std::vector<double> weights(n_entities);
  for (std::size_t i = 0; i < n_entities; ++i) weights[i] = 1.0 / static_cast<double>(i + 1);
  std::discrete_distribution<std::size_t> popularity(weights.begin(), weights.end());
  std::bernoulli_distribution use_base(0.55);

  std::unordered_map<std::uint64_t, std::uint64_t> draws;
  for (std::size_t d = 0; d < n_pairs; ++d) {
    const std::size_t entity = popularity(rng);
    const std::size_t n_names = inv.names[entity].size();
    const std::size_t variant =
        use_base(rng) ? 0 : std::uniform_int_distribution<std::size_t>(1, n_names - 1)(rng);
    ++draws[entity * 8 + variant];
  }
  std::vector<std::uint64_t> keys;
  keys.reserve(draws.size());
  for (const auto& [key, _] : draws) keys.push_back(key);
  std::sort(keys.begin(), keys.end());

  std::vector<MentionEntityPair> pairs;
  pairs.reserve(keys.size());
  for (std::uint64_t key : keys) {
    const std::size_t entity = key / 8;
    pairs.push_back({spell(inv.names[entity][key % 8], inv.symbols, mapping), "Q" + std::to_string(entity + 1),
                     draws[key], language});
  }
  return Corpus(language, std::move(pairs));
}

std::vector<std::size_t> identity_mapping(std::size_t n) {
  std::vector<std::size_t> mapping(n);
  std::iota(mapping.begin(), mapping.end(), std::size_t{0});
  return mapping;
}

}  // namespace

Corpus generate_synthetic(std::size_t n_entities, std::size_t n_pairs, std::string_view alphabet,
                          std::uint64_t seed, const std::string& language) {
  if (n_entities < 1 || n_pairs < 1) throw std::invalid_argument("n_entities and n_pairs must be >= 1");
  std::mt19937_64 rng(seed);
  const Inventory inv = make_inventory(n_entities, alphabet, rng);
  return draw_corpus(inv, identity_mapping(inv.symbols.size()), n_pairs, language, rng);
}

SyntheticPair generate_synthetic_pair(std::size_t n_entities, std::size_t target_pairs, std::size_t pivot_pairs,
                                      std::string_view alphabet, std::uint64_t seed) {
  if (n_entities < 1 || target_pairs < 1 || pivot_pairs < 1) {
    throw std::invalid_argument("n_entities and pair counts must be >= 1");
  }
  std::mt19937_64 rng(seed);
  const Inventory inv = make_inventory(n_entities, alphabet, rng);
  std::vector<std::size_t> dialect = identity_mapping(inv.symbols.size());
  std::bernoulli_distribution shift(0.25);
  std::uniform_int_distribution<std::size_t> symbol(0, inv.symbols.size() - 1);
  for (std::size_t& s : dialect) {
    if (shift(rng)) s = symbol(rng);
  }
  SyntheticPair out;
  out.pivot = draw_corpus(inv, identity_mapping(inv.symbols.size()), pivot_pairs, "pl", rng);
  out.target = draw_corpus(inv, dialect, target_pairs, "tl", rng);
  return out;
}

}  // namespace pti

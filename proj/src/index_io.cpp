#include "pti/index_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unordered_map>
#include <vector>

#include <zlib.h>

namespace pti {
namespace {

constexpr std::string_view kMagic = "PTI1";

void append_shortest(std::string& out, double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  out.append(buffer, result.ptr);
}

void append_probability(std::string& out, double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value, std::chars_format::general, 12);
  out.append(buffer, result.ptr);
}

std::string crc_hex(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  char buffer[16];
  std::snprintf(buffer, sizeof buffer, "%08lx", static_cast<unsigned long>(crc));
  return buffer;
}

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw IndexFormatError(IndexErrorKind::kMalformedEntry,
                         "index line " + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view field, std::size_t line) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    malformed(line, "bad number '" + std::string(field) + "'");
  }
  return value;
}

int parse_int(std::string_view field, std::size_t line) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    malformed(line, "bad integer '" + std::string(field) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(text.substr(start));
      return fields;
    }
    fields.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

struct Triple {
  std::string_view row;
  std::string_view col;
  double prob;
};

}  // namespace

std::string serialize_index(const PtiIndex& index) {
  const IndexMeta& meta = index.meta();
  std::string out(kMagic);
  out += ' ';
  append_shortest(out, meta.alpha);
  out += ' ';
  append_shortest(out, meta.tau);
  out += ' ' + std::to_string(meta.tokenizer.n_min) + ' ' + std::to_string(meta.tokenizer.n_max) + ' ' +
         (meta.tokenizer.wildcard ? '1' : '0') + '\n';
  for (const std::string& source : meta.sources) out += "SOURCE " + source + '\n';
  if (!meta.variant.empty()) out += "VARIANT " + meta.variant + '\n';

  const auto tokens = index.tokens();
  const auto entities = index.entities();
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    for (const SparseEntry& e : index.prior_rows().row(t)) {
      out += "PRIOR ";
      out += tokens[t];
      out += '\t';
      out += entities[e.id];
      out += '\t';
      append_probability(out, e.prob);
      out += '\n';
    }
  }
  for (std::size_t e = 0; e < entities.size(); ++e) {
    for (const SparseEntry& entry : index.posterior_rows().row(e)) {
      out += "POST ";
      out += entities[e];
      out += '\t';
      out += tokens[entry.id];
      out += '\t';
      append_probability(out, entry.prob);
      out += '\n';
    }
  }
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    out += "TOKP ";
    out += tokens[t];
    out += '\t';
    append_probability(out, index.token_probs()[t]);
    out += '\n';
  }
  for (std::size_t e = 0; e < entities.size(); ++e) {
    out += "ENTP ";
    out += entities[e];
    out += '\t';
    append_probability(out, index.entity_probs()[e]);
    out += '\n';
  }
  out += "CHECKSUM " + crc_hex(out) + '\n';
  return out;
}

void save_index(const PtiIndex& index, const std::filesystem::path& path) {
  const std::string text = serialize_index(index);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + path.string());
  out << text;
  if (!out) throw std::system_error(errno, std::generic_category(), "write failed for " + path.string());
}

PtiIndex deserialize_index(std::string_view text) {
  // Header and version.
  const std::size_t header_end = text.find('\n');
  if (header_end == std::string_view::npos) {
    throw IndexFormatError(IndexErrorKind::kTruncated, "index file has no complete header line");
  }
  const auto header = split(text.substr(0, header_end), ' ');
  if (header.empty() || header[0] != kMagic) {
    if (!header.empty() && header[0].substr(0, 3) == "PTI") {
      throw IndexFormatError(IndexErrorKind::kVersionMismatch,
                             "unsupported index version '" + std::string(header[0]) + "'");
    }
    throw IndexFormatError(IndexErrorKind::kVersionMismatch, "not a PTI index file");
  }

  // Trailing checksum over everything before the last line.
  if (text.back() != '\n') throw IndexFormatError(IndexErrorKind::kTruncated, "index file ends mid-line");
  const std::size_t last_start = text.rfind('\n', text.size() - 2) + 1;
  const std::string_view last = text.substr(last_start, text.size() - 1 - last_start);
  if (last.substr(0, 9) != "CHECKSUM ") {
    throw IndexFormatError(IndexErrorKind::kTruncated, "index file has no trailing checksum");
  }
  if (last.substr(9) != crc_hex(text.substr(0, last_start))) {
    throw IndexFormatError(IndexErrorKind::kChecksumMismatch, "index checksum does not match its content");
  }

  IndexMeta meta;
  if (header.size() != 6) malformed(1, "header needs 6 fields");
  meta.alpha = parse_double(header[1], 1);
  meta.tau = parse_double(header[2], 1);
  meta.tokenizer.n_min = parse_int(header[3], 1);
  meta.tokenizer.n_max = parse_int(header[4], 1);
  if (header[5] != "0" && header[5] != "1") malformed(1, "wildcard flag must be 0 or 1");
  meta.tokenizer.wildcard = header[5] == "1";
  try {
    meta.tokenizer.validate();
  } catch (const std::invalid_argument& e) {
    malformed(1, e.what());
  }

  enum Section { kSource, kVariant, kPrior, kPost, kTokp, kEntp };
  int section = kSource;
  std::vector<Triple> prior, post;
  std::vector<std::string> tokens, entities;
  std::vector<double> token_prob, entity_prob;

  std::size_t line_number = 1;
  std::size_t pos = header_end + 1;
  while (pos < last_start) {
    const std::size_t end = text.find('\n', pos);
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_number;
    const std::size_t space = line.find(' ');
    if (space == std::string_view::npos) malformed(line_number, "missing record tag");
    const std::string_view tag = line.substr(0, space);
    const std::string_view body = line.substr(space + 1);

    auto advance_to = [&](int next) {
      if (next < section) malformed(line_number, "record '" + std::string(tag) + "' out of section order");
      section = next;
    };
    if (tag == "SOURCE") {
      advance_to(kSource);
      meta.sources.emplace_back(body);
    } else if (tag == "VARIANT") {
      if (section >= kVariant) malformed(line_number, "duplicate or misplaced VARIANT record");
      advance_to(kVariant);
      meta.variant = std::string(body);
    } else if (tag == "PRIOR" || tag == "POST") {
      advance_to(tag == "PRIOR" ? kPrior : kPost);
      const auto fields = split(body, '\t');
      if (fields.size() != 3) malformed(line_number, "expected 3 tab-separated fields");
      Triple triple{fields[0], fields[1], parse_double(fields[2], line_number)};
      auto& target = tag == "PRIOR" ? prior : post;
      if (!target.empty() && std::pair(target.back().row, target.back().col) >= std::pair(triple.row, triple.col)) {
        malformed(line_number, "entries are not strictly sorted");
      }
      target.push_back(triple);
    } else if (tag == "TOKP" || tag == "ENTP") {
      advance_to(tag == "TOKP" ? kTokp : kEntp);
      const auto fields = split(body, '\t');
      if (fields.size() != 2) malformed(line_number, "expected 2 tab-separated fields");
      auto& keys = tag == "TOKP" ? tokens : entities;
      auto& values = tag == "TOKP" ? token_prob : entity_prob;
      if (!keys.empty() && !(keys.back() < fields[0])) malformed(line_number, "keys are not strictly sorted");
      keys.emplace_back(fields[0]);
      values.push_back(parse_double(fields[1], line_number));
    } else {
      malformed(line_number, "unknown record tag '" + std::string(tag) + "'");
    }
  }

  std::unordered_map<std::string_view, std::uint32_t> token_ids, entity_ids;
  for (std::size_t i = 0; i < tokens.size(); ++i) token_ids.emplace(tokens[i], static_cast<std::uint32_t>(i));
  for (std::size_t i = 0; i < entities.size(); ++i) entity_ids.emplace(entities[i], static_cast<std::uint32_t>(i));
  auto to_rows = [](const std::vector<Triple>& triples, const auto& row_ids, const auto& col_ids,
                    std::size_t n_rows, const char* what) {
    std::vector<std::size_t> offsets(n_rows + 1, 0);
    std::vector<SparseEntry> entries;
    entries.reserve(triples.size());
    for (const Triple& triple : triples) {
      const auto row = row_ids.find(triple.row);
      const auto col = col_ids.find(triple.col);
      if (row == row_ids.end() || col == col_ids.end()) {
        throw IndexFormatError(IndexErrorKind::kMalformedEntry,
                               std::string(what) + " entry references a key missing from the marginals");
      }
      ++offsets[row->second + 1];
      entries.push_back({col->second, triple.prob});
    }
    for (std::size_t r = 0; r < n_rows; ++r) offsets[r + 1] += offsets[r];
    return SparseRows(std::move(offsets), std::move(entries));
  };
  try {
    SparseRows prior_rows = to_rows(prior, token_ids, entity_ids, tokens.size(), "PRIOR");
    SparseRows post_rows = to_rows(post, entity_ids, token_ids, entities.size(), "POST");
    return PtiIndex(std::move(meta), std::move(tokens), std::move(entities), std::move(prior_rows),
                    std::move(post_rows), std::move(token_prob), std::move(entity_prob));
  } catch (const std::invalid_argument& e) {
    throw IndexFormatError(IndexErrorKind::kMalformedEntry, e.what());
  }
}

PtiIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  if (text.empty()) throw IndexFormatError(IndexErrorKind::kTruncated, "index file is empty");
  return deserialize_index(text);
}

}  // namespace pti

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pti/index.hpp"

namespace pti {

// Index files are line oriented text:
//
//   PTI1 <alpha> <tau> <n_min> <n_max> <wildcard:0|1>
//   SOURCE <fingerprint>                 (zero or more)
//   VARIANT <description>                (optional)
//   PRIOR <token>\t<entity>\t<prob>      (sorted by token, entity)
//   POST <entity>\t<token>\t<prob>       (sorted by entity, token)
//   TOKP <token>\t<prob>
//   ENTP <entity>\t<prob>
//   CHECKSUM <crc32 of all preceding bytes, 8 hex digits>
//
// Probabilities carry 12 significant digits; alpha and tau use the shortest
// exact representation.

enum class IndexErrorKind { kVersionMismatch, kChecksumMismatch, kMalformedEntry, kTruncated };

class IndexFormatError : public std::runtime_error {
 public:
  IndexFormatError(IndexErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  IndexErrorKind kind() const { return kind_; }

 private:
  IndexErrorKind kind_;
};

std::string serialize_index(const PtiIndex& index);
void save_index(const PtiIndex& index, const std::filesystem::path& path);

PtiIndex deserialize_index(std::string_view text);
PtiIndex load_index(const std::filesystem::path& path);

}  // namespace pti

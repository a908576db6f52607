#pragma once

#include <string>
#include <vector>

#include "pti/corpus.hpp"
#include "pti/tokenizer.hpp"

namespace pti::fixtures {

// {("roma", E1) x2, ("rom", E2) x1}
inline Corpus roma_rom(const std::string& language = "pl") {
  return Corpus(language, {{"roma", "E1", 2, language}, {"rom", "E2", 1, language}});
}

// {("rom", E2) x1}
inline Corpus rom_only(const std::string& language = "tl") {
  return Corpus(language, {{"rom", "E2", 1, language}});
}

inline TokenizerConfig bigrams() { return TokenizerConfig{2, 2, false}; }

}  // namespace pti::fixtures

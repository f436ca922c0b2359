#pragma once

#include <string>
#include <vector>

#include "forte/score.hpp"

namespace forte {

// Alias table mapping notated instrument names (multilingual, abbreviated)
// to canonical English class names, resolved by normalized edit similarity.
class InstrumentTable {
 public:
  // Built-in table compiled from data/instrument_aliases.tsv.
  static const InstrumentTable& builtin();

  // Parse a table from TSV text: "canonical<TAB>alias" per line, '#' comments.
  static InstrumentTable from_tsv(const std::string& tsv);

  // Best match over the alias table. Throws UnresolvedInstrumentError (with the
  // three nearest candidate classes) when the best similarity is below the
  // acceptance threshold of 0.6.
  CanonicalInstrument resolve(const std::string& raw_name) const;

  // The closed set of canonical class names, sorted.
  std::vector<std::string> class_names() const;

  static constexpr double kAcceptThreshold = 0.6;

 private:
  struct Entry {
    std::string alias;      // normalized
    std::string canonical;
  };
  std::vector<Entry> entries_;
};

// Lowercase, fold diacritics, drop punctuation, strip trailing instance
// digits / roman numerals ("Vln. 2" -> "vln", "Violini II" -> "violini").
std::string normalize_instrument_name(const std::string& raw);

// Normalized similarity in [0,1]: 1 - levenshtein(a,b) / max(|a|,|b|).
double name_similarity(const std::string& a, const std::string& b);

}  // namespace forte

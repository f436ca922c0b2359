#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "forte/instruments.hpp"
#include "forte/score.hpp"

namespace forte {

struct ParseOptions {
  std::string piece_id;
  const InstrumentTable* instruments = nullptr;   // default: InstrumentTable::builtin()
  std::vector<std::string>* warnings = nullptr;   // optional sink for skipped elements
};

// Parse a MusicXML document (raw .xml bytes or a compressed .mxl container)
// into a Score. Supported subset: partwise scores with part-list, pitched
// notes and rests, chords, voices, ties, backup/forward, divisions, time
// signatures, transpositions, dynamics directions, wedges (and textual
// cresc./dim.), articulations, fermatas, and repeat barlines with endings.
// Grace and cue notes are skipped with a warning.
//
// Onsets come out as exact rationals in quarter-note beats; wedges are closed
// into (start, end) pairs. Throws ParseError (with a line number) on
// malformed XML and StructuralError on e.g. unclosed wedges.
Score parse_score(std::string_view document, const ParseOptions& opts = {});

}  // namespace forte

#pragma once

#include <vector>

#include "forte/score.hpp"

namespace forte {

// Playback order of measure indices implied by repeat barlines and volta
// endings. Throws StructuralError on mismatched repeat barlines.
std::vector<int> playback_measure_sequence(const std::vector<MeasureInfo>& measures);

// Expand repeats so the score timeline matches the performed timeline: notes
// and markings of repeated spans are duplicated with shifted onsets, and the
// locations of repeat barlines (in the unfolded timeline) are recorded in
// each part's repeat_marks for the repeat-sign impulse basis.
Score unfold_repeats(const Score& score);

}  // namespace forte

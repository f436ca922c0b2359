#pragma once

#include <array>

#include "forte/targets.hpp"
#include "forte/wav.hpp"

namespace forte {

// One biquad stage, direct form I coefficients (a0 normalized to 1).
struct Biquad {
  double b0, b1, b2, a1, a2;
};

// BS.1770 K-weighting pre-filter: high-frequency shelf followed by a
// high-pass. At 48 kHz the published table coefficients are used verbatim;
// other rates rebuild both stages from the standard's analog prototype.
struct KWeighting {
  Biquad shelf;
  Biquad highpass;

  static KWeighting for_rate(double sample_rate);
};

constexpr double kMomentaryWindowSeconds = 0.4;
constexpr double kMomentaryHopSeconds = 0.1;

// Momentary loudness curve: K-weighted per channel, mean square over 400 ms
// windows at a 100 ms hop, channel powers averaged (weights 1 for mono and
// stereo), -0.691 + 10*log10(.). Windows of digital silence come back as the
// below-gate sentinel. Curve timestamps sit at window centers. Throws
// FormatError for > 2 channels, rates < 8 kHz, or audio shorter than one
// window. Ungated (no absolute/relative R128 gating).
LoudnessCurve r128_momentary(const AudioBuffer& audio);

}  // namespace forte

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "forte/eval.hpp"
#include "forte/score.hpp"

namespace forte {

// Matrix-level synthetic corpora. All targets are standardized per piece,
// matching the real pipeline's preprocessing.
struct SynthDataset {
  std::vector<CorpusPiece> corpus;
  Eigen::VectorXd true_w;  // linear generator only
};

// y = Phi w* + sigma * eps: uniform features in [-1, 1], w* scaled so the
// noiseless signal has unit variance.
SynthDataset synth_linear(int pieces, int rows_per_piece, int k, double sigma,
                          std::uint64_t seed);

// Pure interaction y = phi_a * phi_b of two uniform features; no linear
// model can explain it, a one-hidden-layer network can.
SynthDataset synth_interaction(int pieces, int rows_per_piece, std::uint64_t seed);

// y_n depends only on the previous row (y_n = phi_0 at n-1), the
// sustained-note surrogate a feed-forward model cannot see.
SynthDataset synth_lagged(int pieces, int rows_per_piece, std::uint64_t seed);

// Score-level corpus: writes MusicXML scores, alignment CSVs, loudness CSVs
// and a manifest.json under out_dir. Returns the manifest path.
std::string write_synthetic_score_corpus(const std::string& out_dir, int pieces,
                                         std::uint64_t seed);

// One generated MusicXML document (also used by tests).
std::string synthetic_musicxml(std::uint64_t seed, int n_parts, int n_measures);

}  // namespace forte

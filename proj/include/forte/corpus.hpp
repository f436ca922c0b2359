#pragma once

#include <string>
#include <vector>

#include "forte/eval.hpp"
#include "forte/fusion.hpp"
#include "forte/targets.hpp"

namespace forte {

// One manifest entry: either the score pipeline inputs (score + alignment +
// loudness-or-audio) or a precomputed matrix triple (matrix + descriptors +
// targets).
struct ManifestPiece {
  std::string id;
  std::string score;
  std::string alignment;
  std::string loudness;
  std::string audio;
  std::string matrix;
  std::string descriptors;
  std::string targets;
  std::string composer;
  std::vector<std::string> tags;

  bool precomputed() const { return !matrix.empty(); }
};

struct CorpusManifest {
  std::string base_dir;  // directory of the manifest file; paths are relative to it
  std::vector<ManifestPiece> pieces;

  static CorpusManifest load(const std::string& path);

  // Problems found (duplicate ids, missing files, incomplete entries);
  // empty means the manifest is usable.
  std::vector<std::string> validate() const;

  std::string resolve(const std::string& relative) const;
};

struct PieceLoadOptions {
  Beat delta = Beat(1, 10);
  PolicyOverrides overrides;
  std::string cache_dir;  // empty disables the extraction cache
  std::vector<std::string>* warnings = nullptr;
};

// Full per-piece pipeline: parse -> unfold -> bases -> merge/fuse ->
// aggregate (content-hash cached), then alignment + loudness -> standardized
// targets sampled at onset + delta. Precomputed entries load their files
// directly.
CorpusPiece load_piece(const CorpusManifest& manifest, const ManifestPiece& piece,
                       const PieceLoadOptions& options);

// "0.1", "1/10" or "3" as an exact rational.
Beat parse_beat_string(const std::string& text);

// "group=policy,group=policy" with basis_group() tokens.
PolicyOverrides parse_policy_overrides(const std::string& text);

}  // namespace forte

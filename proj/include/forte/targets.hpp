#pragma once

#include <limits>
#include <string>
#include <vector>

#include "forte/rational.hpp"

namespace forte {

// Monotone score-beat -> performance-time map, piecewise linear between
// entries. Covers [first beat, last beat].
class Alignment {
 public:
  struct Entry {
    Beat beat;
    double seconds;
  };

  explicit Alignment(std::vector<Entry> entries);

  // Linear interpolation; throws CoverageError outside the entry range.
  double seconds_at(const Beat& beat) const;

  const std::vector<Entry>& entries() const { return entries_; }
  Beat first_beat() const { return entries_.front().beat; }
  Beat last_beat() const { return entries_.back().beat; }

  // CSV: "beat_num,beat_den,seconds" per line.
  static Alignment from_csv(const std::string& text);
  std::string to_csv() const;

 private:
  std::vector<Entry> entries_;
};

// Loudness below the measurement gate (digital silence) is marked with an
// explicit sentinel, serialized as "-inf".
constexpr double kBelowGate = -std::numeric_limits<double>::infinity();

// Uniformly sampled loudness curve (LUFS) at a fixed hop.
class LoudnessCurve {
 public:
  LoudnessCurve(double start_seconds, double hop_seconds, std::vector<double> values);

  // Linear interpolation; clamps before the first / after the last sample.
  // Interpolating against a below-gate neighbor yields the sentinel.
  double value_at(double seconds) const;

  double start_seconds() const { return start_; }
  double hop_seconds() const { return hop_; }
  const std::vector<double>& values() const { return values_; }

  // CSV: "seconds,lufs" per line; below-gate samples as "-inf".
  static LoudnessCurve from_csv(const std::string& text);
  std::string to_csv() const;

 private:
  double start_;
  double hop_;
  std::vector<double> values_;
};

// Loudness at performance time of (onset + delta) beats for every onset.
// Throws CoverageError (naming the onset) when onset + delta leaves the
// alignment domain. Below-gate curve regions come back as kBelowGate.
std::vector<double> sample_targets(const Alignment& alignment, const LoudnessCurve& curve,
                                   const std::vector<Beat>& onsets,
                                   const Beat& delta = Beat(1, 10));

// Replace below-gate sentinels by (min finite loudness - 10 LU) so the
// target vector is finite before standardization.
void resolve_gate_sentinels(std::vector<double>& raw);

// Per-piece standardized targets with the statistics needed to undo it.
struct TargetVector {
  std::vector<double> values;  // mean 0, population variance 1
  double mean = 0.0;
  double stddev = 1.0;

  double destandardize(double y) const { return y * stddev + mean; }
};

// (raw - mean) / population stddev. Throws DegenerateTargetError for inputs
// shorter than 2 or constant.
TargetVector standardize(const std::vector<double>& raw);

// sample -> resolve sentinels -> standardize.
TargetVector build_targets(const Alignment& alignment, const LoudnessCurve& curve,
                           const std::vector<Beat>& onsets, const Beat& delta = Beat(1, 10));

}  // namespace forte

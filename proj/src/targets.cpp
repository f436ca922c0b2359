#include "forte/targets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "forte/errors.hpp"
#include "forte/textio.hpp"

namespace forte {

Alignment::Alignment(std::vector<Entry> entries) : entries_(std::move(entries)) {
  if (entries_.size() < 2) throw ContractViolation("alignment needs at least 2 entries");
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (!(entries_[i - 1].beat < entries_[i].beat) ||
        !(entries_[i - 1].seconds < entries_[i].seconds))
      throw ContractViolation("alignment entries must be strictly increasing in both "
                              "beat and time (entry " + std::to_string(i) + ")");
  }
}

double Alignment::seconds_at(const Beat& beat) const {
  if (beat < entries_.front().beat || entries_.back().beat < beat)
    throw CoverageError("beat " + beat.str() + " outside alignment domain [" +
                        entries_.front().beat.str() + ", " + entries_.back().beat.str() + "]");
  // Last segment whose start is <= beat.
  std::size_t lo = 0;
  std::size_t hi = entries_.size() - 1;
  while (lo + 1 < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (entries_[mid].beat <= beat) lo = mid;
    else hi = mid;
  }
  const Entry& a = entries_[lo];
  const Entry& b = entries_[lo + 1];
  const double t = (beat - a.beat).to_double() / (b.beat - a.beat).to_double();
  return a.seconds + t * (b.seconds - a.seconds);
}

Alignment Alignment::from_csv(const std::string& text) {
  std::vector<Entry> entries;
  std::size_t lineno = 0;
  for (const auto& line : split(text, '\n')) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    long long num = 0, den = 1;
    double seconds = 0.0;
    if (std::sscanf(line.c_str(), "%lld,%lld,%lf", &num, &den, &seconds) != 3)
      throw FormatError("alignment CSV line " + std::to_string(lineno) + ": '" + line + "'");
    entries.push_back({Beat(num, den), seconds});
  }
  return Alignment(std::move(entries));
}

std::string Alignment::to_csv() const {
  std::string out;
  for (const auto& e : entries_)
    out += std::to_string(e.beat.num()) + "," + std::to_string(e.beat.den()) + "," +
           format_double(e.seconds) + "\n";
  return out;
}

LoudnessCurve::LoudnessCurve(double start_seconds, double hop_seconds,
                             std::vector<double> values)
    : start_(start_seconds), hop_(hop_seconds), values_(std::move(values)) {
  if (hop_ <= 0.0) throw ContractViolation("loudness curve hop must be positive");
  if (values_.empty()) throw ContractViolation("loudness curve with no samples");
  for (const double v : values_)
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
      throw ContractViolation("loudness values must be finite or the below-gate sentinel");
}

double LoudnessCurve::value_at(double seconds) const {
  const double pos = (seconds - start_) / hop_;
  if (pos <= 0.0) return values_.front();
  if (pos >= static_cast<double>(values_.size() - 1)) return values_.back();
  const std::size_t i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  const double a = values_[i];
  const double b = values_[i + 1];
  if (frac == 0.0) return a;
  if (a == kBelowGate || b == kBelowGate) return kBelowGate;
  return a + frac * (b - a);
}

LoudnessCurve LoudnessCurve::from_csv(const std::string& text) {
  std::vector<double> seconds;
  std::vector<double> values;
  std::size_t lineno = 0;
  for (const auto& line : split(text, '\n')) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw FormatError("loudness CSV line " + std::to_string(lineno) + ": '" + line + "'");
    try {
      seconds.push_back(std::stod(line.substr(0, comma)));
      const std::string v = line.substr(comma + 1);
      values.push_back(v == "-inf" ? kBelowGate : std::stod(v));
    } catch (const std::exception&) {
      throw FormatError("loudness CSV line " + std::to_string(lineno) + ": '" + line + "'");
    }
  }
  if (seconds.size() < 2) throw FormatError("loudness CSV needs at least 2 samples");
  const double hop = seconds[1] - seconds[0];
  for (std::size_t i = 1; i < seconds.size(); ++i) {
    const double step = seconds[i] - seconds[i - 1];
    if (std::abs(step - hop) > 1e-9 * std::max(1.0, std::abs(hop)))
      throw FormatError("loudness CSV hop is not constant at line " + std::to_string(i + 1));
  }
  return LoudnessCurve(seconds.front(), hop, std::move(values));
}

std::string LoudnessCurve::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double t = start_ + hop_ * static_cast<double>(i);
    out += format_double(t) + ",";
    out += values_[i] == kBelowGate ? "-inf" : format_double(values_[i]);
    out += "\n";
  }
  return out;
}

std::vector<double> sample_targets(const Alignment& alignment, const LoudnessCurve& curve,
                                   const std::vector<Beat>& onsets, const Beat& delta) {
  if (delta < Beat(0)) throw ContractViolation("sampling delta must be >= 0");
  std::vector<double> raw;
  raw.reserve(onsets.size());
  for (const auto& onset : onsets) {
    const double seconds = alignment.seconds_at(onset + delta);
    raw.push_back(curve.value_at(seconds));
  }
  return raw;
}

void resolve_gate_sentinels(std::vector<double>& raw) {
  double min_finite = std::numeric_limits<double>::infinity();
  for (const double v : raw)
    if (v != kBelowGate) min_finite = std::min(min_finite, v);
  if (min_finite == std::numeric_limits<double>::infinity())
    throw DegenerateTargetError("every sampled target is below the measurement gate");
  for (double& v : raw)
    if (v == kBelowGate) v = min_finite - 10.0;
}

TargetVector standardize(const std::vector<double>& raw) {
  if (raw.size() < 2)
    throw DegenerateTargetError("cannot standardize fewer than 2 targets");
  const double n = static_cast<double>(raw.size());
  double mean = 0.0;
  for (const double v : raw) mean += v;
  mean /= n;
  double var = 0.0;
  for (const double v : raw) var += (v - mean) * (v - mean);
  var /= n;  // population variance
  if (var == 0.0) throw DegenerateTargetError("constant target vector cannot be standardized");

  TargetVector t;
  t.mean = mean;
  t.stddev = std::sqrt(var);
  t.values.reserve(raw.size());
  for (const double v : raw) t.values.push_back((v - mean) / t.stddev);
  return t;
}

TargetVector build_targets(const Alignment& alignment, const LoudnessCurve& curve,
                           const std::vector<Beat>& onsets, const Beat& delta) {
  std::vector<double> raw = sample_targets(alignment, curve, onsets, delta);
  resolve_gate_sentinels(raw);
  return standardize(raw);
}

}  // namespace forte

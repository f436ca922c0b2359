#include "forte/loudness.hpp"

#include <cmath>
#include <vector>

#include "forte/errors.hpp"

namespace forte {

namespace {

constexpr double kPi = 3.14159265358979323846;

Biquad shelf_for_rate(double fs) {
  // Analog prototype of the BS.1770 stage-1 shelving filter.
  const double db = 3.999843853973347;
  const double f0 = 1681.974450955533;
  const double q = 0.7071752369554196;

  const double k = std::tan(kPi * f0 / fs);
  const double vh = std::pow(10.0, db / 20.0);
  const double vb = std::pow(vh, 0.4996667741545416);
  const double denom = 1.0 + k / q + k * k;
  Biquad s;
  s.b0 = (vh + vb * k / q + k * k) / denom;
  s.b1 = 2.0 * (k * k - vh) / denom;
  s.b2 = (vh - vb * k / q + k * k) / denom;
  s.a1 = 2.0 * (k * k - 1.0) / denom;
  s.a2 = (1.0 - k / q + k * k) / denom;
  return s;
}

Biquad highpass_for_rate(double fs) {
  const double f0 = 38.13547087602444;
  const double q = 0.5003270373238773;

  const double k = std::tan(kPi * f0 / fs);
  const double denom = 1.0 + k / q + k * k;
  Biquad h;
  h.b0 = 1.0;
  h.b1 = -2.0;
  h.b2 = 1.0;
  h.a1 = 2.0 * (k * k - 1.0) / denom;
  h.a2 = (1.0 - k / q + k * k) / denom;
  return h;
}

void filter_in_place(const Biquad& f, std::vector<double>& x) {
  double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
  for (double& v : x) {
    const double x0 = v;
    const double y0 = f.b0 * x0 + f.b1 * x1 + f.b2 * x2 - f.a1 * y1 - f.a2 * y2;
    x2 = x1;
    x1 = x0;
    y2 = y1;
    y1 = y0;
    v = y0;
  }
}

}  // namespace

KWeighting KWeighting::for_rate(double sample_rate) {
  if (sample_rate == 48000.0) {
    // Published table values of BS.1770, bit-exact.
    return KWeighting{
        Biquad{1.53512485958697, -2.69169618940638, 1.19839281085285,
               -1.69065929318241, 0.73248077421585},
        Biquad{1.0, -2.0, 1.0, -1.99004745483398, 0.99007225036621}};
  }
  return KWeighting{shelf_for_rate(sample_rate), highpass_for_rate(sample_rate)};
}

LoudnessCurve r128_momentary(const AudioBuffer& audio) {
  if (audio.channels < 1 || audio.channels > 2)
    throw FormatError("loudness: unsupported sample layout (" +
                      std::to_string(audio.channels) + " channels; mono or stereo only)");
  if (audio.sample_rate < 8000)
    throw FormatError("loudness: sample rate below 8 kHz");

  const double fs = static_cast<double>(audio.sample_rate);
  const std::size_t window = static_cast<std::size_t>(std::lround(kMomentaryWindowSeconds * fs));
  const std::size_t hop = static_cast<std::size_t>(std::lround(kMomentaryHopSeconds * fs));
  const std::size_t frames = audio.frames();
  if (frames < window)
    throw FormatError("loudness: audio shorter than one 400 ms measurement window");

  const KWeighting kw = KWeighting::for_rate(fs);

  // Per channel: filter, square, prefix-sum, so each window is O(1).
  const int channels = audio.channels;
  std::vector<std::vector<double>> energy(channels);
  for (int ch = 0; ch < channels; ++ch) {
    std::vector<double> x(frames);
    for (std::size_t i = 0; i < frames; ++i)
      x[i] = static_cast<double>(audio.samples[i * channels + ch]);
    filter_in_place(kw.shelf, x);
    filter_in_place(kw.highpass, x);
    auto& e = energy[ch];
    e.resize(frames + 1, 0.0);
    for (std::size_t i = 0; i < frames; ++i) e[i + 1] = e[i] + x[i] * x[i];
  }

  const std::size_t blocks = (frames - window) / hop + 1;
  std::vector<double> values;
  values.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = b * hop;
    const std::size_t hi = lo + window;
    double power = 0.0;
    for (int ch = 0; ch < channels; ++ch)
      power += (energy[ch][hi] - energy[ch][lo]) / static_cast<double>(window);
    power /= static_cast<double>(channels);
    values.push_back(power > 0.0 ? -0.691 + 10.0 * std::log10(power) : kBelowGate);
  }

  const double start = kMomentaryWindowSeconds / 2.0;  // window centers
  return LoudnessCurve(start, kMomentaryHopSeconds, std::move(values));
}

}  // namespace forte

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace forte {

struct AudioBuffer {
  int sample_rate = 48000;
  int channels = 1;
  std::vector<float> samples;  // interleaved, nominal range [-1, 1]

  std::size_t frames() const {
    return channels > 0 ? samples.size() / static_cast<std::size_t>(channels) : 0;
  }
};

// RIFF WAV reader: 16/24-bit integer and 32-bit float PCM, plus the
// WAVE_FORMAT_EXTENSIBLE wrappers of both. Throws FormatError otherwise.
AudioBuffer read_wav(std::string_view bytes);

// Writers used by tools and tests.
std::string write_wav_float32(const AudioBuffer& audio);
std::string write_wav_pcm16(const AudioBuffer& audio);

}  // namespace forte

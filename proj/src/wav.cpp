#include "forte/wav.hpp"

#include <cstdint>
#include <cstring>

#include "forte/errors.hpp"

namespace forte {

namespace {

std::uint32_t rd32(std::string_view b, std::size_t off) {
  if (off + 4 > b.size()) throw FormatError("wav: truncated file");
  const auto* p = reinterpret_cast<const unsigned char*>(b.data() + off);
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

std::uint16_t rd16(std::string_view b, std::size_t off) {
  if (off + 2 > b.size()) throw FormatError("wav: truncated file");
  const auto* p = reinterpret_cast<const unsigned char*>(b.data() + off);
  return std::uint16_t(p[0] | (p[1] << 8));
}

void push32(std::string& out, std::uint32_t v) {
  out += static_cast<char>(v & 0xFF);
  out += static_cast<char>((v >> 8) & 0xFF);
  out += static_cast<char>((v >> 16) & 0xFF);
  out += static_cast<char>((v >> 24) & 0xFF);
}

void push16(std::string& out, std::uint16_t v) {
  out += static_cast<char>(v & 0xFF);
  out += static_cast<char>((v >> 8) & 0xFF);
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

AudioBuffer read_wav(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE")
    throw FormatError("wav: not a RIFF WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::string_view data;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string_view id = bytes.substr(pos, 4);
    const std::uint32_t size = rd32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw FormatError("wav: chunk overruns file");
    if (id == "fmt ") {
      if (size < 16) throw FormatError("wav: fmt chunk too small");
      format = rd16(bytes, body);
      channels = rd16(bytes, body + 2);
      rate = rd32(bytes, body + 4);
      bits = rd16(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw FormatError("wav: extensible fmt chunk too small");
        format = rd16(bytes, body + 24);  // first 2 bytes of the SubFormat GUID
      }
      have_fmt = true;
    } else if (id == "data") {
      data = bytes.substr(body, size);
    }
    pos = body + size + (size & 1);  // chunks are word-aligned
  }

  if (!have_fmt) throw FormatError("wav: missing fmt chunk");
  if (data.empty()) throw FormatError("wav: missing data chunk");
  if (channels == 0) throw FormatError("wav: zero channels");
  if (rate == 0) throw FormatError("wav: zero sample rate");

  AudioBuffer audio;
  audio.sample_rate = static_cast<int>(rate);
  audio.channels = channels;

  if (format == kFormatPcm && bits == 16) {
    const std::size_t n = data.size() / 2;
    audio.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto* p = reinterpret_cast<const unsigned char*>(data.data() + 2 * i);
      const std::int16_t v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
      audio.samples[i] = static_cast<float>(v) / 32768.0f;
    }
  } else if (format == kFormatPcm && bits == 24) {
    const std::size_t n = data.size() / 3;
    audio.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto* p = reinterpret_cast<const unsigned char*>(data.data() + 3 * i);
      std::int32_t v = (p[0] << 8) | (p[1] << 16) | (std::int32_t(p[2]) << 24);
      v >>= 8;
      audio.samples[i] = static_cast<float>(v) / 8388608.0f;
    }
  } else if (format == kFormatFloat && bits == 32) {
    const std::size_t n = data.size() / 4;
    audio.samples.resize(n);
    std::memcpy(audio.samples.data(), data.data(), n * 4);
  } else {
    throw FormatError("wav: unsupported sample layout (format " + std::to_string(format) +
                      ", " + std::to_string(bits) + " bits)");
  }

  audio.samples.resize(audio.frames() * channels);  // drop a trailing partial frame
  return audio;
}

namespace {

std::string write_wav(const AudioBuffer& audio, std::uint16_t format, int bits) {
  const std::uint16_t channels = static_cast<std::uint16_t>(audio.channels);
  const std::uint32_t rate = static_cast<std::uint32_t>(audio.sample_rate);
  const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(audio.samples.size() * static_cast<std::size_t>(bits / 8));

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  push32(out, 36 + data_size);
  out += "WAVE";
  out += "fmt ";
  push32(out, 16);
  push16(out, format);
  push16(out, channels);
  push32(out, rate);
  push32(out, rate * block);
  push16(out, block);
  push16(out, static_cast<std::uint16_t>(bits));
  out += "data";
  push32(out, data_size);

  if (format == kFormatFloat) {
    const std::size_t off = out.size();
    out.resize(off + data_size);
    std::memcpy(out.data() + off, audio.samples.data(), data_size);
  } else {
    for (const float s : audio.samples) {
      const float clamped = s < -1.0f ? -1.0f : (s > 1.0f ? 1.0f : s);
      auto v = static_cast<std::int32_t>(clamped * 32767.0f);
      push16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
    }
  }
  return out;
}

}  // namespace

std::string write_wav_float32(const AudioBuffer& audio) {
  return write_wav(audio, kFormatFloat, 32);
}

std::string write_wav_pcm16(const AudioBuffer& audio) {
  return write_wav(audio, kFormatPcm, 16);
}

}  // namespace forte

#pragma once

#include <string>
#include <vector>

#include <zlib.h>

#include "forte/score.hpp"

namespace forte::testutil {

// Minimal ZIP writer (stored entries only) for .mxl fixtures.
inline void push32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}
inline void push16(std::string& out, std::uint16_t v) {
  out += static_cast<char>(v & 0xFF);
  out += static_cast<char>((v >> 8) & 0xFF);
}

inline std::string make_zip(const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string out;
  struct Central {
    std::string name;
    std::uint32_t crc, size, offset;
  };
  std::vector<Central> centrals;
  for (const auto& [name, data] : entries) {
    const auto crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(data.data()), data.size()));
    centrals.push_back({name, crc, static_cast<std::uint32_t>(data.size()),
                        static_cast<std::uint32_t>(out.size())});
    out += "PK\x03\x04";
    push16(out, 20); push16(out, 0); push16(out, 0);  // version, flags, method=stored
    push16(out, 0); push16(out, 0);                   // time, date
    push32(out, crc);
    push32(out, static_cast<std::uint32_t>(data.size()));
    push32(out, static_cast<std::uint32_t>(data.size()));
    push16(out, static_cast<std::uint16_t>(name.size()));
    push16(out, 0);
    out += name;
    out += data;
  }
  const std::uint32_t central_offset = static_cast<std::uint32_t>(out.size());
  for (const auto& c : centrals) {
    out += "PK\x01\x02";
    push16(out, 20); push16(out, 20); push16(out, 0); push16(out, 0);
    push16(out, 0); push16(out, 0);
    push32(out, c.crc);
    push32(out, c.size);
    push32(out, c.size);
    push16(out, static_cast<std::uint16_t>(c.name.size()));
    push16(out, 0); push16(out, 0); push16(out, 0); push16(out, 0);
    push32(out, 0);
    push32(out, c.offset);
    out += c.name;
  }
  const std::uint32_t central_size = static_cast<std::uint32_t>(out.size()) - central_offset;
  out += "PK\x05\x06";
  push16(out, 0); push16(out, 0);
  push16(out, static_cast<std::uint16_t>(centrals.size()));
  push16(out, static_cast<std::uint16_t>(centrals.size()));
  push32(out, central_size);
  push32(out, central_offset);
  push16(out, 0);
  return out;
}

// Hand-built single-voice Part for basis tests.
inline Part make_part(const std::string& class_name,
                      const std::vector<NoteEvent>& notes,
                      const std::vector<Marking>& markings = {},
                      int numerator = 4, int denominator = 4) {
  Part part;
  part.instrument = CanonicalInstrument{class_name, 1.0};
  part.raw_name = class_name;
  part.notes = notes;
  part.markings = markings;
  part.time_signatures.push_back(TimeSignature{Beat(0), numerator, denominator});
  return part;
}

inline NoteEvent note(Beat onset, Beat duration, int pitch, bool accent = false,
                      bool staccato = false, bool fermata = false) {
  NoteEvent n;
  n.onset = onset;
  n.duration = duration;
  n.pitch = pitch;
  n.accent = accent;
  n.staccato = staccato;
  n.fermata = fermata;
  return n;
}

}  // namespace forte::testutil

#include "forte/mxl.hpp"

#include <cstring>
#include <zlib.h>

#include "forte/errors.hpp"

namespace forte {

namespace {

std::uint32_t rd32(std::string_view b, std::size_t off) {
  if (off + 4 > b.size()) throw FormatError("zip: truncated record");
  const auto* p = reinterpret_cast<const unsigned char*>(b.data() + off);
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

std::uint16_t rd16(std::string_view b, std::size_t off) {
  if (off + 2 > b.size()) throw FormatError("zip: truncated record");
  const auto* p = reinterpret_cast<const unsigned char*>(b.data() + off);
  return std::uint16_t(p[0] | (p[1] << 8));
}

constexpr std::uint32_t kEocdSig = 0x06054b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kLocalSig = 0x04034b50;

struct Entry {
  std::string name;
  std::uint16_t method;
  std::uint32_t comp_size;
  std::uint32_t uncomp_size;
  std::uint32_t local_offset;
};

std::size_t find_eocd(std::string_view b) {
  if (b.size() < 22) throw FormatError("zip: file too small");
  const std::size_t scan_limit = b.size() >= 22 + 65535 ? b.size() - 22 - 65535 : 0;
  for (std::size_t pos = b.size() - 22 + 1; pos-- > scan_limit;) {
    if (rd32(b, pos) == kEocdSig) return pos;
  }
  throw FormatError("zip: end-of-central-directory record not found");
}

std::vector<Entry> read_central_directory(std::string_view b) {
  const std::size_t eocd = find_eocd(b);
  const std::uint16_t count = rd16(b, eocd + 10);
  std::size_t pos = rd32(b, eocd + 16);

  std::vector<Entry> entries;
  entries.reserve(count);
  for (std::uint16_t i = 0; i < count; ++i) {
    if (rd32(b, pos) != kCentralSig) throw FormatError("zip: bad central directory entry");
    Entry e;
    e.method = rd16(b, pos + 10);
    e.comp_size = rd32(b, pos + 20);
    e.uncomp_size = rd32(b, pos + 24);
    const std::uint16_t name_len = rd16(b, pos + 28);
    const std::uint16_t extra_len = rd16(b, pos + 30);
    const std::uint16_t comment_len = rd16(b, pos + 32);
    e.local_offset = rd32(b, pos + 42);
    if (pos + 46 + name_len > b.size()) throw FormatError("zip: truncated entry name");
    e.name.assign(b.data() + pos + 46, name_len);
    pos += 46 + name_len + extra_len + comment_len;
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string inflate_raw(std::string_view comp, std::uint32_t expected_size) {
  std::string out(expected_size, '\0');
  z_stream zs;
  std::memset(&zs, 0, sizeof(zs));
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw FormatError("zip: inflateInit failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(comp.data()));
  zs.avail_in = static_cast<uInt>(comp.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) throw FormatError("zip: deflate stream corrupt");
  out.resize(out.size() - zs.avail_out);
  return out;
}

std::string extract_entry(std::string_view b, const Entry& e) {
  std::size_t pos = e.local_offset;
  if (rd32(b, pos) != kLocalSig) throw FormatError("zip: bad local header for " + e.name);
  const std::uint16_t name_len = rd16(b, pos + 26);
  const std::uint16_t extra_len = rd16(b, pos + 28);
  pos += 30 + name_len + extra_len;
  if (pos + e.comp_size > b.size()) throw FormatError("zip: truncated data for " + e.name);
  const std::string_view data = b.substr(pos, e.comp_size);
  if (e.method == 0) {
    return std::string(data);
  }
  if (e.method == 8) {
    return inflate_raw(data, e.uncomp_size);
  }
  throw FormatError("zip: unsupported compression method " + std::to_string(e.method) +
                    " for " + e.name);
}

}  // namespace

bool looks_like_zip(std::string_view bytes) {
  return bytes.size() >= 4 && bytes.substr(0, 2) == "PK";
}

std::vector<std::string> zip_entry_names(std::string_view bytes) {
  std::vector<std::string> names;
  for (const auto& e : read_central_directory(bytes)) names.push_back(e.name);
  return names;
}

std::string zip_extract(std::string_view bytes, const std::string& name) {
  for (const auto& e : read_central_directory(bytes)) {
    if (e.name == name) return extract_entry(bytes, e);
  }
  throw FormatError("zip: entry not found: " + name);
}

std::string mxl_root_document(std::string_view bytes) {
  const auto entries = read_central_directory(bytes);

  // container.xml names the root file; keep the lookup tolerant and fall
  // back to the first top-level .xml that is not the container itself.
  for (const auto& e : entries) {
    if (e.name == "META-INF/container.xml") {
      const std::string container = extract_entry(bytes, e);
      const auto attr = container.find("full-path=");
      if (attr != std::string::npos && attr + 11 < container.size()) {
        const char quote = container[attr + 10];
        const auto close = container.find(quote, attr + 11);
        if (close != std::string::npos) {
          const std::string root = container.substr(attr + 11, close - attr - 11);
          return zip_extract(bytes, root);
        }
      }
    }
  }
  for (const auto& e : entries) {
    if (e.name.find('/') == std::string::npos && e.name.size() > 4 &&
        e.name.substr(e.name.size() - 4) == ".xml")
      return extract_entry(bytes, e);
  }
  throw FormatError("mxl: no root MusicXML document found in container");
}

}  // namespace forte

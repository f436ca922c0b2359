#include "forte/instruments.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "forte/errors.hpp"
#include "forte/generated/instrument_aliases_data.hpp"

namespace forte {

namespace {

// Fold the Latin-1 / Latin-Extended code points that occur in instrument
// names. Input is UTF-8; unknown multibyte sequences are dropped.
void append_folded(std::string& out, unsigned cp) {
  switch (cp) {
    case 0xE0: case 0xE1: case 0xE2: case 0xE3: case 0xE5: out += 'a'; break;
    case 0xE4: case 0xE6: out += "ae"; break;
    case 0xE7: out += 'c'; break;
    case 0xE8: case 0xE9: case 0xEA: case 0xEB: out += 'e'; break;
    case 0xEC: case 0xED: case 0xEE: case 0xEF: out += 'i'; break;
    case 0xF1: out += 'n'; break;
    case 0xF2: case 0xF3: case 0xF4: case 0xF5: out += 'o'; break;
    case 0xF6: case 0xF8: out += "oe"; break;
    case 0xF9: case 0xFA: case 0xFB: out += 'u'; break;
    case 0xFC: out += "ue"; break;
    case 0xFD: out += 'y'; break;
    case 0xDF: out += "ss"; break;
    case 0x153: out += "oe"; break;  // œ
    default: break;
  }
}

bool is_roman_numeral(const std::string& token) {
  if (token.empty() || token.size() > 4) return false;
  return std::all_of(token.begin(), token.end(),
                     [](char c) { return c == 'i' || c == 'v' || c == 'x'; });
}

}  // namespace

std::string normalize_instrument_name(const std::string& raw) {
  std::string folded;
  folded.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size();) {
    const unsigned char c = static_cast<unsigned char>(raw[i]);
    if (c < 0x80) {
      if (std::isalnum(c)) folded += static_cast<char>(std::tolower(c));
      else if (c == ' ' || c == '\t' || c == '-' || c == '_' || c == '.' || c == ',')
        folded += ' ';
      ++i;
    } else if ((c & 0xE0) == 0xC0 && i + 1 < raw.size()) {
      const unsigned cp = ((c & 0x1Fu) << 6) | (static_cast<unsigned char>(raw[i + 1]) & 0x3Fu);
      unsigned lower = cp;
      if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) lower = cp + 0x20;  // upper -> lower
      if (cp == 0x152) lower = 0x153;
      append_folded(folded, lower);
      i += 2;
    } else {
      ++i;  // longer sequences: skip
    }
  }

  // Tokenize, drop trailing instance designators (digits, roman numerals).
  std::vector<std::string> tokens;
  std::istringstream iss(folded);
  for (std::string t; iss >> t;) tokens.push_back(t);
  while (tokens.size() > 1) {
    std::string& last = tokens.back();
    const bool digits = std::all_of(last.begin(), last.end(),
                                    [](char c) { return std::isdigit((unsigned char)c); });
    if (digits || is_roman_numeral(last)) tokens.pop_back();
    else break;
  }
  // A single token may still carry glued trailing digits ("violin2").
  if (!tokens.empty()) {
    std::string& last = tokens.back();
    while (last.size() > 1 && std::isdigit((unsigned char)last.back())) last.pop_back();
  }

  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

double name_similarity(const std::string& a, const std::string& b) {
  if (a.empty() && b.empty()) return 1.0;
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  const double dist = static_cast<double>(prev[m]);
  return 1.0 - dist / static_cast<double>(std::max(n, m));
}

InstrumentTable InstrumentTable::from_tsv(const std::string& tsv) {
  InstrumentTable table;
  std::istringstream iss(tsv);
  for (std::string line; std::getline(iss, line);) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ConfigError("instrument alias line without tab: '" + line + "'");
    Entry e;
    e.canonical = line.substr(0, tab);
    e.alias = normalize_instrument_name(line.substr(tab + 1));
    if (e.alias.empty()) continue;
    table.entries_.push_back(std::move(e));
  }
  if (table.entries_.empty()) throw ConfigError("empty instrument alias table");
  return table;
}

const InstrumentTable& InstrumentTable::builtin() {
  static const InstrumentTable table = from_tsv(generated::kInstrumentAliasesTsv);
  return table;
}

CanonicalInstrument InstrumentTable::resolve(const std::string& raw_name) const {
  const std::string name = normalize_instrument_name(raw_name);
  if (name.empty())
    throw UnresolvedInstrumentError(raw_name, {});

  // Best similarity per canonical class; ties between classes break
  // alphabetically because the map iterates in sorted order.
  std::map<std::string, double> best_per_class;
  for (const auto& e : entries_) {
    const double s = name_similarity(name, e.alias);
    auto [it, inserted] = best_per_class.emplace(e.canonical, s);
    if (!inserted && s > it->second) it->second = s;
  }

  std::string best_class;
  double best = -1.0;
  for (const auto& [cls, s] : best_per_class) {
    if (s > best) {
      best = s;
      best_class = cls;
    }
  }

  if (best < kAcceptThreshold) {
    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& [cls, s] : best_per_class) ranked.emplace_back(-s, cls);
    std::sort(ranked.begin(), ranked.end());
    std::vector<std::string> nearest;
    for (std::size_t i = 0; i < ranked.size() && i < 3; ++i) nearest.push_back(ranked[i].second);
    throw UnresolvedInstrumentError(raw_name, nearest);
  }
  return CanonicalInstrument{best_class, best};
}

std::vector<std::string> InstrumentTable::class_names() const {
  std::set<std::string> names;
  for (const auto& e : entries_) names.insert(e.canonical);
  return {names.begin(), names.end()};
}

}  // namespace forte

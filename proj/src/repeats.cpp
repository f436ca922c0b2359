#include "forte/repeats.hpp"

#include <algorithm>
#include <memory>

#include "forte/errors.hpp"

namespace forte {

namespace {

struct RepeatNode;

struct Item {
  int measure = -1;                  // leaf
  std::unique_ptr<RepeatNode> node;  // or nested repeat
};

struct Bracket {
  std::vector<int> numbers;
  std::vector<Item> items;
};

struct RepeatNode {
  std::vector<Item> common;
  std::vector<Bracket> brackets;
  int passes = 2;
};

bool same_numbers(const std::vector<int>& a, const std::vector<int>& b) {
  return a == b;
}

// Index of the measure whose backward repeat closes the forward repeat at s.
int find_closing(const std::vector<MeasureInfo>& measures, int s, int hi) {
  int depth = 0;
  for (int j = s; j <= hi; ++j) {
    if (measures[j].repeat_forward && j != s) ++depth;
    if (measures[j].repeat_backward) {
      if (depth == 0) return j;
      --depth;
    }
  }
  throw StructuralError("repeat barline opened at measure index " + std::to_string(s) +
                        " is never closed");
}

std::vector<Item> parse_items(const std::vector<MeasureInfo>& measures, int lo, int hi,
                              bool ignore_trailing_backward, int skip_forward_at = -1);

// Parse a repeat whose forward barline sits at measure s. Returns the node and
// the index of the last measure it consumed (including trailing brackets).
std::pair<std::unique_ptr<RepeatNode>, int> parse_repeat(
    const std::vector<MeasureInfo>& measures, int s, int hi) {
  const int closing = find_closing(measures, s, hi);
  auto node = std::make_unique<RepeatNode>();
  node->passes = measures[closing].repeat_times;

  // Volta brackets of THIS repeat are measures whose bracket numbers differ
  // from the numbers already in force at the opening measure (a repeat nested
  // inside a bracket sees uniform numbers and therefore no brackets of its
  // own).
  const std::vector<int>& base = measures[s].ending_numbers;
  int first_bracket = -1;
  for (int j = s; j <= closing; ++j) {
    if (!measures[j].ending_numbers.empty() && !same_numbers(measures[j].ending_numbers, base)) {
      first_bracket = j;
      break;
    }
  }

  if (first_bracket < 0) {
    // The closing measure itself is ordinary body content.
    node->common = parse_items(measures, s, closing, true, s);
    return {std::move(node), closing};
  }

  node->common = parse_items(measures, s, first_bracket - 1, false, s);

  // Consume consecutive brackets: each is a maximal run of equal numbers.
  int j = first_bracket;
  int last = closing;
  while (j <= hi && !measures[j].ending_numbers.empty() &&
         !same_numbers(measures[j].ending_numbers, base)) {
    Bracket bracket;
    bracket.numbers = measures[j].ending_numbers;
    int k = j;
    while (k + 1 <= hi && same_numbers(measures[k + 1].ending_numbers, bracket.numbers)) ++k;
    bracket.items = parse_items(measures, j, k, true);
    for (const int n : bracket.numbers) node->passes = std::max(node->passes, n);
    node->brackets.push_back(std::move(bracket));
    last = k;
    j = k + 1;
  }
  return {std::move(node), last};
}

std::vector<Item> parse_items(const std::vector<MeasureInfo>& measures, int lo, int hi,
                              bool ignore_trailing_backward, int skip_forward_at) {
  std::vector<Item> items;
  int i = lo;
  while (i <= hi) {
    if (measures[i].repeat_forward && i != skip_forward_at) {
      auto [node, last] = parse_repeat(measures, i, hi);
      Item item;
      item.node = std::move(node);
      items.push_back(std::move(item));
      i = last + 1;
      continue;
    }
    if (measures[i].repeat_backward && !(ignore_trailing_backward && i == hi)) {
      throw StructuralError("backward repeat at measure index " + std::to_string(i) +
                            " has no matching forward repeat");
    }
    Item leaf;
    leaf.measure = i;
    items.push_back(std::move(leaf));
    ++i;
  }
  return items;
}

void expand_items(const std::vector<Item>& items, std::vector<int>& out) {
  for (const auto& item : items) {
    if (item.measure >= 0) {
      out.push_back(item.measure);
      continue;
    }
    const RepeatNode& node = *item.node;
    for (int pass = 1; pass <= node.passes; ++pass) {
      expand_items(node.common, out);
      for (const auto& bracket : node.brackets) {
        if (std::find(bracket.numbers.begin(), bracket.numbers.end(), pass) !=
            bracket.numbers.end()) {
          expand_items(bracket.items, out);
          break;
        }
      }
    }
  }
}

}  // namespace

std::vector<int> playback_measure_sequence(const std::vector<MeasureInfo>& measures) {
  if (measures.empty()) return {};

  // Give backward repeats without a forward barline an implicit start after
  // the previous top-level repeat span (or the beginning of the piece).
  std::vector<MeasureInfo> normalized = measures;
  {
    int depth = 0;
    int section_start = 0;
    for (std::size_t j = 0; j < normalized.size(); ++j) {
      if (normalized[j].repeat_forward) ++depth;
      if (normalized[j].repeat_backward) {
        if (depth == 0) normalized[section_start].repeat_forward = true;
        else --depth;
        if (depth == 0 && normalized[j].ending_numbers.empty())
          section_start = static_cast<int>(j) + 1;
      }
    }
  }

  const auto items =
      parse_items(normalized, 0, static_cast<int>(normalized.size()) - 1, false);
  std::vector<int> sequence;
  expand_items(items, sequence);
  return sequence;
}

Score unfold_repeats(const Score& score) {
  const bool any_repeat =
      std::any_of(score.measures.begin(), score.measures.end(), [](const MeasureInfo& m) {
        return m.repeat_forward || m.repeat_backward;
      });

  std::vector<int> sequence;
  if (score.measures.empty() || !any_repeat) {
    // Identity, but still expose repeat-mark bookkeeping (none).
    return score;
  }
  sequence = playback_measure_sequence(score.measures);

  const std::vector<MeasureInfo>& in = score.measures;
  std::vector<Beat> out_start(sequence.size());
  Beat cursor(0);
  for (std::size_t k = 0; k < sequence.size(); ++k) {
    out_start[k] = cursor;
    cursor += in[sequence[k]].length;
  }

  // Repeat-sign impulse locations on the unfolded timeline.
  std::vector<Beat> repeat_marks;
  for (std::size_t k = 0; k < sequence.size(); ++k) {
    const MeasureInfo& m = in[sequence[k]];
    if (m.repeat_forward) repeat_marks.push_back(out_start[k]);
    if (m.repeat_backward) repeat_marks.push_back(out_start[k] + m.length);
  }
  std::sort(repeat_marks.begin(), repeat_marks.end());
  repeat_marks.erase(std::unique(repeat_marks.begin(), repeat_marks.end()),
                     repeat_marks.end());

  // Measure index containing a (non-negative) onset.
  auto measure_of = [&in](const Beat& onset) {
    int lo = 0;
    for (std::size_t m = 0; m < in.size(); ++m)
      if (in[m].start <= onset) lo = static_cast<int>(m);
      else break;
    return lo;
  };

  Score out;
  out.id = score.id;
  out.divisions = score.divisions;
  for (std::size_t k = 0; k < sequence.size(); ++k) {
    MeasureInfo m;
    m.start = out_start[k];
    m.length = in[sequence[k]].length;
    out.measures.push_back(m);
  }

  for (const auto& part : score.parts) {
    Part unfolded;
    unfolded.instrument = part.instrument;
    unfolded.raw_name = part.raw_name;
    unfolded.transposition = part.transposition;
    unfolded.repeat_marks = repeat_marks;

    for (std::size_t k = 0; k < sequence.size(); ++k) {
      const int m = sequence[k];
      const Beat delta = out_start[k] - in[m].start;
      const Beat span_end = in[m].start + in[m].length;
      for (const auto& n : part.notes) {
        if (n.onset < in[m].start || n.onset >= span_end) continue;
        NoteEvent copy = n;
        copy.onset += delta;
        unfolded.notes.push_back(copy);
      }
      for (const auto& mk : part.markings) {
        if (mk.onset < in[m].start || mk.onset >= span_end) continue;
        Marking copy = mk;
        copy.onset += delta;
        if (copy.end) copy.end = *copy.end + delta;
        unfolded.markings.push_back(copy);
      }
    }

    // Re-anchor time signatures measure by measure in play order.
    const TimeSignature* previous = nullptr;
    for (std::size_t k = 0; k < sequence.size(); ++k) {
      const int m = sequence[k];
      const Beat probe = in[m].start;
      const TimeSignature& active = part.signature_at(probe);
      if (!previous || previous->numerator != active.numerator ||
          previous->denominator != active.denominator) {
        TimeSignature sig = active;
        const int sig_measure = measure_of(active.anchor < Beat(0) ? Beat(0) : active.anchor);
        sig.anchor = out_start[k] + (active.anchor - in[sig_measure].start);
        unfolded.time_signatures.push_back(sig);
        previous = &active;
      }
    }

    out.parts.push_back(std::move(unfolded));
  }

  out.validate();
  return out;
}

}  // namespace forte

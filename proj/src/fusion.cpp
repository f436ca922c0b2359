#include "forte/fusion.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "forte/errors.hpp"
#include "forte/textio.hpp"

namespace forte {

std::size_t DatasetMatrix::total_rows() const {
  std::size_t n = 0;
  for (const auto& p : pieces) n += p.onsets.size();
  return n;
}

std::uint64_t DatasetMatrix::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& d : columns) {
    h = fnv1a64(d.key(), h);
    h = fnv1a64(to_string(d.policy), h);
  }
  return h;
}

PartBasisMatrix merge(const std::vector<PartBasisMatrix>& parts) {
  if (parts.empty()) throw ContractViolation("merge of zero part matrices");
  PartBasisMatrix merged;
  merged.instrument_class = parts.front().instrument_class;
  for (const auto& p : parts)
    if (p.instrument_class != merged.instrument_class)
      throw ContractViolation("merge across instrument classes: '" + merged.instrument_class +
                              "' vs '" + p.instrument_class + "'");

  // Column set: union by label, in first-seen order over the part list.
  std::map<std::string, int> index;
  for (const auto& p : parts) {
    for (const auto& d : p.columns) {
      if (index.count(d.label)) continue;
      index.emplace(d.label, static_cast<int>(merged.columns.size()));
      merged.columns.push_back(d);
    }
  }

  // k-way interleave by onset, stable with respect to part order for ties so
  // simultaneous notes stay consecutively listed.
  std::vector<std::size_t> cursor(parts.size(), 0);
  while (true) {
    int best = -1;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      if (cursor[p] >= parts[p].rows.size()) continue;
      if (best < 0 || parts[p].rows[cursor[p]].onset < parts[best].rows[cursor[best]].onset)
        best = static_cast<int>(p);
    }
    if (best < 0) break;
    const PartBasisMatrix& src = parts[best];
    BasisRow row = src.rows[cursor[best]];
    for (auto& [col, v] : row.entries) col = index.at(src.columns[col].label);
    std::sort(row.entries.begin(), row.entries.end());
    merged.rows.push_back(std::move(row));
    ++cursor[best];
  }
  return merged;
}

void recount_vertical_neighbors(PartBasisMatrix& merged) {
  const int col_lower = merged.column_index("vertical.lower");
  const int col_higher = merged.column_index("vertical.higher");
  const int col_total = merged.column_index("vertical.total");
  if (col_lower < 0 && col_higher < 0 && col_total < 0) return;

  auto set_entry = [](BasisRow& row, int col, double v) {
    if (col < 0) return;
    for (auto& [c, value] : row.entries) {
      if (c == col) {
        value = v;
        if (v == 0.0) {
          row.entries.erase(std::remove_if(row.entries.begin(), row.entries.end(),
                                           [col](const auto& e) { return e.first == col; }),
                            row.entries.end());
        }
        return;
      }
    }
    if (v != 0.0) {
      row.entries.emplace_back(col, v);
      std::sort(row.entries.begin(), row.entries.end());
    }
  };

  for (std::size_t i = 0; i < merged.rows.size();) {
    std::size_t j = i;
    while (j < merged.rows.size() && merged.rows[j].onset == merged.rows[i].onset) ++j;
    std::vector<int> pitches;
    for (std::size_t k = i; k < j; ++k) pitches.push_back(merged.rows[k].pitch);
    for (std::size_t k = i; k < j; ++k) {
      const VerticalCounts c = vertical_neighbors(pitches, k - i);
      set_entry(merged.rows[k], col_lower, c.lower);
      set_entry(merged.rows[k], col_higher, c.higher);
      set_entry(merged.rows[k], col_total, c.total);
    }
    i = j;
  }
}

ClassBasisMatrix fuse(const PartBasisMatrix& merged) {
  for (std::size_t i = 1; i < merged.rows.size(); ++i)
    if (merged.rows[i].onset < merged.rows[i - 1].onset)
      throw ContractViolation("fuse input rows not sorted by onset");

  ClassBasisMatrix fused;
  fused.instrument_class = merged.instrument_class;
  fused.columns = merged.columns;

  const std::size_t k = merged.columns.size();
  for (std::size_t i = 0; i < merged.rows.size();) {
    std::size_t j = i;
    while (j < merged.rows.size() && merged.rows[j].onset == merged.rows[i].onset) ++j;
    const double group_size = static_cast<double>(j - i);

    std::vector<double> acc(k, 0.0);
    std::vector<bool> seen(k, false);
    for (std::size_t r = i; r < j; ++r) {
      for (const auto& [col, v] : merged.rows[r].entries) {
        switch (merged.columns[col].policy) {
          case FusionPolicy::Max:
            acc[col] = seen[col] ? std::max(acc[col], v) : v;
            break;
          case FusionPolicy::Mean:
          case FusionPolicy::Sum:
            acc[col] += v;
            break;
        }
        seen[col] = true;
      }
    }
    std::vector<std::pair<int, double>> row;
    for (std::size_t c = 0; c < k; ++c) {
      if (!seen[c]) continue;
      double v = acc[c];
      if (merged.columns[c].policy == FusionPolicy::Mean) v /= group_size;
      if (v != 0.0) row.emplace_back(static_cast<int>(c), v);
    }
    fused.onsets.push_back(merged.rows[i].onset);
    fused.rows.push_back(std::move(row));
    i = j;
  }
  return fused;
}

PieceMatrix aggregate_piece(const std::vector<ClassBasisMatrix>& classes,
                            const std::string& piece_id) {
  if (classes.empty()) throw ContractViolation("aggregate_piece of zero class matrices");

  PieceMatrix piece;
  piece.piece_id = piece_id;

  std::set<std::string> keys;
  std::vector<int> offset(classes.size(), 0);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    offset[c] = static_cast<int>(piece.columns.size());
    for (const auto& d : classes[c].columns) {
      if (!keys.insert(d.key()).second)
        throw ContractViolation("duplicate basis descriptor across classes: " + d.key());
      piece.columns.push_back(d);
    }
  }

  std::set<Beat> onset_union;
  for (const auto& cls : classes) onset_union.insert(cls.onsets.begin(), cls.onsets.end());
  piece.onsets.assign(onset_union.begin(), onset_union.end());
  piece.rows.resize(piece.onsets.size());

  std::map<Beat, std::size_t> row_of;
  for (std::size_t i = 0; i < piece.onsets.size(); ++i) row_of.emplace(piece.onsets[i], i);

  for (std::size_t c = 0; c < classes.size(); ++c) {
    const ClassBasisMatrix& cls = classes[c];
    for (std::size_t r = 0; r < cls.onsets.size(); ++r) {
      auto& target = piece.rows[row_of.at(cls.onsets[r])];
      for (const auto& [col, v] : cls.rows[r]) target.emplace_back(col + offset[c], v);
    }
  }
  for (auto& row : piece.rows) std::sort(row.begin(), row.end());
  return piece;
}

DatasetMatrix assemble_dataset(std::vector<PieceMatrix> pieces) {
  if (pieces.empty()) throw ContractViolation("assemble_dataset of zero pieces");
  std::sort(pieces.begin(), pieces.end(),
            [](const PieceMatrix& a, const PieceMatrix& b) { return a.piece_id < b.piece_id; });

  DatasetMatrix ds;
  std::map<std::string, int> global_index;
  for (const auto& piece : pieces) {
    for (const auto& d : piece.columns) {
      if (global_index.count(d.key())) continue;
      global_index.emplace(d.key(), static_cast<int>(ds.columns.size()));
      ds.columns.push_back(d);
    }
  }

  std::vector<int> active_pieces(ds.columns.size(), 0);
  for (const auto& piece : pieces) {
    DatasetMatrix::PieceBlock block;
    block.piece_id = piece.piece_id;
    block.onsets = piece.onsets;
    block.rows.resize(piece.rows.size());

    std::vector<int> projection(piece.columns.size());
    for (std::size_t c = 0; c < piece.columns.size(); ++c)
      projection[c] = global_index.at(piece.columns[c].key());

    std::vector<bool> piece_active(ds.columns.size(), false);
    for (std::size_t r = 0; r < piece.rows.size(); ++r) {
      for (const auto& [col, v] : piece.rows[r]) {
        block.rows[r].emplace_back(projection[col], v);
        piece_active[projection[col]] = true;
      }
      std::sort(block.rows[r].begin(), block.rows[r].end());
    }
    for (std::size_t c = 0; c < ds.columns.size(); ++c)
      if (piece_active[c]) ++active_pieces[c];
    ds.pieces.push_back(std::move(block));
  }

  for (std::size_t c = 0; c < ds.columns.size(); ++c)
    if (active_pieces[c] == 1) ds.singular_bases.push_back(ds.columns[c].key());
  return ds;
}

void apply_policy_overrides(std::vector<BasisDescriptor>& columns,
                            const PolicyOverrides& overrides) {
  if (overrides.empty()) return;
  for (auto& d : columns) {
    const auto it = overrides.find(basis_group(d.label));
    if (it != overrides.end()) d.policy = it->second;
  }
}

PieceMatrix build_piece_matrix(const Score& score, const PolicyOverrides& overrides,
                               std::vector<std::string>* warnings) {
  std::map<std::string, std::vector<const Part*>> by_class;
  for (const auto& part : score.parts)
    by_class[part.instrument.class_name].push_back(&part);

  std::vector<ClassBasisMatrix> classes;
  for (const auto& [class_name, parts] : by_class) {
    std::vector<PartBasisMatrix> matrices;
    matrices.reserve(parts.size());
    for (const Part* part : parts) matrices.push_back(extract_part_bases(*part, warnings));
    PartBasisMatrix merged = merge(matrices);
    recount_vertical_neighbors(merged);
    apply_policy_overrides(merged.columns, overrides);
    classes.push_back(fuse(merged));
  }
  return aggregate_piece(classes, score.id);
}

// --- serialization ---------------------------------------------------------

std::string piece_matrix_to_triplet(const PieceMatrix& matrix) {
  std::string out;
  for (std::size_t r = 0; r < matrix.rows.size(); ++r)
    for (const auto& [col, v] : matrix.rows[r])
      out += std::to_string(r) + " " + std::to_string(col) + " " + format_double(v) + "\n";
  return out;
}

std::string piece_matrix_sidecar_json(const PieceMatrix& matrix) {
  nlohmann::ordered_json j;
  j["piece_id"] = matrix.piece_id;
  j["rows"] = matrix.row_count();
  j["cols"] = matrix.column_count();
  j["columns"] = nlohmann::ordered_json::array();
  for (const auto& d : matrix.columns)
    j["columns"].push_back(nlohmann::ordered_json{
        {"class", d.instrument_class}, {"label", d.label}, {"policy", to_string(d.policy)}});
  j["onsets"] = nlohmann::ordered_json::array();
  for (const auto& onset : matrix.onsets)
    j["onsets"].push_back(nlohmann::ordered_json::array({onset.num(), onset.den()}));
  return j.dump(1) + "\n";
}

PieceMatrix piece_matrix_from_files(const std::string& triplet_text,
                                    const std::string& sidecar_json) {
  PieceMatrix matrix;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(sidecar_json);
    matrix.piece_id = j.at("piece_id").get<std::string>();
    for (const auto& c : j.at("columns")) {
      BasisDescriptor d;
      d.instrument_class = c.at("class").get<std::string>();
      d.label = c.at("label").get<std::string>();
      const auto policy = fusion_policy_from_string(c.at("policy").get<std::string>());
      if (!policy) throw FormatError("unknown fusion policy in sidecar");
      d.policy = *policy;
      matrix.columns.push_back(std::move(d));
    }
    for (const auto& o : j.at("onsets"))
      matrix.onsets.emplace_back(o.at(0).get<std::int64_t>(), o.at(1).get<std::int64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("piece matrix sidecar: ") + e.what());
  }
  if (static_cast<std::size_t>(j.at("rows").get<std::size_t>()) != matrix.onsets.size())
    throw FormatError("piece matrix sidecar: row count does not match onset list");

  matrix.rows.resize(matrix.onsets.size());
  std::size_t lineno = 0;
  for (const auto& line : split(triplet_text, '\n')) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::size_t row = 0, col = 0;
    double value = 0.0;
    if (std::sscanf(line.c_str(), "%zu %zu %lf", &row, &col, &value) != 3)
      throw FormatError("piece matrix triplet line " + std::to_string(lineno) + ": '" + line + "'");
    if (row >= matrix.rows.size() || col >= matrix.columns.size())
      throw FormatError("piece matrix triplet line " + std::to_string(lineno) +
                        ": index out of range");
    matrix.rows[row].emplace_back(static_cast<int>(col), value);
  }
  for (auto& row : matrix.rows) std::sort(row.begin(), row.end());
  return matrix;
}

}  // namespace forte

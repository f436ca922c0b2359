#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "forte/basis.hpp"
#include "forte/score.hpp"

namespace forte {

// One instrument class after fusion: exactly one row per unique onset.
struct ClassBasisMatrix {
  std::string instrument_class;
  std::vector<BasisDescriptor> columns;
  std::vector<Beat> onsets;                                // strictly increasing
  std::vector<std::vector<std::pair<int, double>>> rows;   // sparse, aligned with onsets
};

// Phi_P: all classes of a piece side by side over the union of onsets.
struct PieceMatrix {
  std::string piece_id;
  std::vector<BasisDescriptor> columns;                    // K_P
  std::vector<Beat> onsets;                                // N_P
  std::vector<std::vector<std::pair<int, double>>> rows;

  std::size_t row_count() const { return onsets.size(); }
  std::size_t column_count() const { return columns.size(); }
};

// Phi_S: per-piece blocks projected into one global descriptor index.
struct DatasetMatrix {
  struct PieceBlock {
    std::string piece_id;
    std::vector<Beat> onsets;
    std::vector<std::vector<std::pair<int, double>>> rows;  // global column indices
  };

  std::vector<BasisDescriptor> columns;   // K_S, first-seen over pieces sorted by id
  std::vector<PieceBlock> pieces;
  std::vector<std::string> singular_bases;  // descriptor keys active in exactly one piece

  std::size_t total_rows() const;           // N_S
  std::uint64_t fingerprint() const;        // hash of the descriptor index
};

// Stack same-class part matrices: rows interleaved in onset order (stable for
// ties, so simultaneous notes stay consecutive), columns unified by label.
// Throws ContractViolation when the parts span multiple instrument classes.
PartBasisMatrix merge(const std::vector<PartBasisMatrix>& parts);

// Recompute the vertical.{lower,higher,total} columns class-wide from the
// pooled per-onset pitch multiset of the merged matrix.
void recount_vertical_neighbors(PartBasisMatrix& merged);

// Reduce same-onset rows to one row per unique onset, per column, using each
// column's fusion policy (mean divides by the onset group's row count).
ClassBasisMatrix fuse(const PartBasisMatrix& merged);

// Union-of-onsets aggregation of class matrices into Phi_P. Duplicate
// (class, label) descriptors across inputs are a contract violation.
PieceMatrix aggregate_piece(const std::vector<ClassBasisMatrix>& classes,
                            const std::string& piece_id);

// Build Phi_S over pieces (sorted by piece id): global column order is
// first-seen; columns a piece lacks are zero-filled by projection.
DatasetMatrix assemble_dataset(std::vector<PieceMatrix> pieces);

// Per-group fusion-policy overrides keyed by basis_group() tokens.
using PolicyOverrides = std::map<std::string, FusionPolicy>;
void apply_policy_overrides(std::vector<BasisDescriptor>& columns,
                            const PolicyOverrides& overrides);

// Full extraction pipeline for one (already unfolded) score:
// per-part bases -> merge per class -> class-wide vertical recount -> fuse ->
// aggregate, with classes ordered alphabetically.
PieceMatrix build_piece_matrix(const Score& score, const PolicyOverrides& overrides = {},
                               std::vector<std::string>* warnings = nullptr);

// Piece matrix serialization: triplet text ("row col value" lines) plus a
// JSON sidecar carrying the descriptor index, row onsets and counts.
std::string piece_matrix_to_triplet(const PieceMatrix& matrix);
std::string piece_matrix_sidecar_json(const PieceMatrix& matrix);
PieceMatrix piece_matrix_from_files(const std::string& triplet_text,
                                    const std::string& sidecar_json);

}  // namespace forte

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace coplan {

using StateIndex = std::int32_t;
using ActionIndex = std::int32_t;
using ObsIndex = std::int32_t;

struct Outcome {
  std::int32_t index;
  double prob;

  friend bool operator==(const Outcome&, const Outcome&) = default;
};

struct Triplet {
  std::size_t row;
  std::int32_t col;
  double value;
};

// Row-compressed probability kernel. Rows are appended in order; each row is
// a list of (column, probability) outcomes sorted by column.
class SparseKernel {
 public:
  SparseKernel() = default;

  // Rows may be given in any order; duplicates (row, col) are summed and
  // zero entries dropped. Rows without triplets stay empty.
  static SparseKernel from_triplets(std::size_t num_rows,
                                    std::vector<Triplet> triplets);

  void append_row(std::span<const Outcome> outcomes);
  void append_single(std::int32_t col, double prob = 1.0);
  void reserve(std::size_t rows, std::size_t entries);

  std::span<const Outcome> row(std::size_t r) const {
    return {entries_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }
  std::size_t num_rows() const { return offsets_.size() - 1; }
  std::size_t num_entries() const { return entries_.size(); }

  // First row whose sum deviates from 1 by more than tol, or whose entries
  // fall outside [0, 1] / [0, num_cols).
  struct BadRow {
    std::size_t row;
    double sum;
  };
  std::optional<BadRow> find_non_stochastic_row(std::size_t num_cols,
                                                double tol) const;

  friend bool operator==(const SparseKernel&, const SparseKernel&) = default;

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<Outcome> entries_;
};

// Sorts by index, sums duplicates and drops non-positive entries.
void merge_outcomes(std::vector<Outcome>& outcomes);

}  // namespace coplan

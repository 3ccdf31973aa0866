#include "core/sparse.hpp"

#include <algorithm>
#include <cmath>

namespace coplan {

void merge_outcomes(std::vector<Outcome>& outcomes) {
  std::sort(outcomes.begin(), outcomes.end(),
            [](const Outcome& a, const Outcome& b) { return a.index < b.index; });
  std::size_t out = 0;
  for (std::size_t i = 0; i < outcomes.size();) {
    Outcome acc = outcomes[i];
    std::size_t j = i + 1;
    for (; j < outcomes.size() && outcomes[j].index == acc.index; ++j) {
      acc.prob += outcomes[j].prob;
    }
    if (acc.prob > 0.0) outcomes[out++] = acc;
    i = j;
  }
  outcomes.resize(out);
}

SparseKernel SparseKernel::from_triplets(std::size_t num_rows,
                                         std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(),
            [](const Triplet& a, const Triplet& b) {
              return a.row != b.row ? a.row < b.row : a.col < b.col;
            });
  SparseKernel k;
  k.reserve(num_rows, triplets.size());
  std::vector<Outcome> row;
  std::size_t t = 0;
  for (std::size_t r = 0; r < num_rows; ++r) {
    row.clear();
    while (t < triplets.size() && triplets[t].row == r) {
      if (!row.empty() && row.back().index == triplets[t].col) {
        row.back().prob += triplets[t].value;
      } else {
        row.push_back({triplets[t].col, triplets[t].value});
      }
      ++t;
    }
    std::erase_if(row, [](const Outcome& o) { return o.prob == 0.0; });
    k.append_row(row);
  }
  return k;
}

void SparseKernel::append_row(std::span<const Outcome> outcomes) {
  entries_.insert(entries_.end(), outcomes.begin(), outcomes.end());
  offsets_.push_back(entries_.size());
}

void SparseKernel::append_single(std::int32_t col, double prob) {
  entries_.push_back({col, prob});
  offsets_.push_back(entries_.size());
}

void SparseKernel::reserve(std::size_t rows, std::size_t entries) {
  offsets_.reserve(rows + 1);
  entries_.reserve(entries);
}

std::optional<SparseKernel::BadRow> SparseKernel::find_non_stochastic_row(
    std::size_t num_cols, double tol) const {
  for (std::size_t r = 0; r < num_rows(); ++r) {
    double sum = 0.0;
    bool bad = false;
    for (const Outcome& o : row(r)) {
      if (o.index < 0 || static_cast<std::size_t>(o.index) >= num_cols ||
          !(o.prob >= 0.0 && o.prob <= 1.0 + tol)) {
        bad = true;
      }
      sum += o.prob;
    }
    if (bad || std::abs(sum - 1.0) > tol) return BadRow{r, sum};
  }
  return std::nullopt;
}

}  // namespace coplan

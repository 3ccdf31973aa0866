#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "core/sparse.hpp"

namespace coplan {

// Sparse probability distribution over model states. Entries are sorted by
// state, strictly positive and sum to one.
class Belief {
 public:
  using Entry = Outcome;

  Belief() = default;

  static Belief dirac(StateIndex s);
  static Belief uniform(std::size_t num_states);
  // Uniform over the given states (duplicates ignored).
  static Belief uniform_over(std::vector<StateIndex> states);
  // Merges duplicates, drops zeros and normalizes. Throws
  // ZeroProbabilityObservation when the total mass is zero.
  static Belief from_unnormalized(std::vector<Entry> entries);
  // Validates an already-normalized list (sum within tol, entries >= 0).
  static Belief from_normalized(std::vector<Entry> entries, double tol = 1e-12);
  static Belief from_dense(std::span<const double> probs);

  std::span<const Entry> entries() const { return entries_; }
  std::size_t support_size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  double probability(StateIndex s) const;
  double l1_distance(const Belief& other) const;
  double dot(std::span<const double> values) const;
  std::vector<double> to_dense(std::size_t num_states) const;
  // Hash of the entries quantized at 1e-9, used to deduplicate beliefs.
  std::uint64_t fingerprint() const;

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  friend bool operator==(const Belief&, const Belief&) = default;

 private:
  std::vector<Entry> entries_;
};

}  // namespace coplan

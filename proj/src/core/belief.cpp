#include "core/belief.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/errors.hpp"

namespace coplan {

Belief Belief::dirac(StateIndex s) {
  Belief b;
  b.entries_.push_back({s, 1.0});
  return b;
}

Belief Belief::uniform(std::size_t num_states) {
  Belief b;
  b.entries_.reserve(num_states);
  const double p = 1.0 / static_cast<double>(num_states);
  for (std::size_t s = 0; s < num_states; ++s) {
    b.entries_.push_back({static_cast<StateIndex>(s), p});
  }
  return b;
}

Belief Belief::uniform_over(std::vector<StateIndex> states) {
  std::sort(states.begin(), states.end());
  states.erase(std::unique(states.begin(), states.end()), states.end());
  if (states.empty()) throw InvalidArgument("uniform belief over an empty set");
  Belief b;
  const double p = 1.0 / static_cast<double>(states.size());
  for (StateIndex s : states) b.entries_.push_back({s, p});
  return b;
}

Belief Belief::from_unnormalized(std::vector<Entry> entries) {
  merge_outcomes(entries);
  double total = 0.0;
  for (const Entry& e : entries) total += e.prob;
  if (!(total > 0.0)) {
    throw ZeroProbabilityObservation("belief has zero total mass");
  }
  for (Entry& e : entries) e.prob /= total;
  Belief b;
  b.entries_ = std::move(entries);
  return b;
}

Belief Belief::from_normalized(std::vector<Entry> entries, double tol) {
  double total = 0.0;
  for (const Entry& e : entries) {
    if (e.prob < 0.0 || e.index < 0) {
      throw ModelError("belief entry out of range");
    }
    total += e.prob;
  }
  if (std::abs(total - 1.0) > tol) {
    std::ostringstream msg;
    msg << "belief sums to " << total << " (expected 1)";
    throw ModelError(msg.str());
  }
  merge_outcomes(entries);
  Belief b;
  b.entries_ = std::move(entries);
  return b;
}

Belief Belief::from_dense(std::span<const double> probs) {
  std::vector<Entry> entries;
  for (std::size_t s = 0; s < probs.size(); ++s) {
    if (probs[s] != 0.0) entries.push_back({static_cast<StateIndex>(s), probs[s]});
  }
  return from_normalized(std::move(entries), 1e-9);
}

double Belief::probability(StateIndex s) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), s,
      [](const Entry& e, StateIndex v) { return e.index < v; });
  return (it != entries_.end() && it->index == s) ? it->prob : 0.0;
}

double Belief::l1_distance(const Belief& other) const {
  double d = 0.0;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  while (a != entries_.end() && b != other.entries_.end()) {
    if (a->index == b->index) {
      d += std::abs(a->prob - b->prob);
      ++a;
      ++b;
    } else if (a->index < b->index) {
      d += a->prob;
      ++a;
    } else {
      d += b->prob;
      ++b;
    }
  }
  for (; a != entries_.end(); ++a) d += a->prob;
  for (; b != other.entries_.end(); ++b) d += b->prob;
  return d;
}

double Belief::dot(std::span<const double> values) const {
  double v = 0.0;
  for (const Entry& e : entries_) v += e.prob * values[e.index];
  return v;
}

std::vector<double> Belief::to_dense(std::size_t num_states) const {
  std::vector<double> dense(num_states, 0.0);
  for (const Entry& e : entries_) dense.at(e.index) = e.prob;
  return dense;
}

std::uint64_t Belief::fingerprint() const {
  // FNV-1a over (state, rounded probability) pairs.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (const Entry& e : entries_) {
    mix(static_cast<std::uint64_t>(e.index));
    mix(static_cast<std::uint64_t>(std::llround(e.prob * 1e9)));
  }
  return h;
}

}  // namespace coplan

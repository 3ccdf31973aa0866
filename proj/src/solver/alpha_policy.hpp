#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/belief.hpp"
#include "core/model_io.hpp"

namespace coplan::solver {

struct AlphaVector {
  std::vector<double> values;
  ActionIndex action = 0;

  friend bool operator==(const AlphaVector&, const AlphaVector&) = default;
};

// V(b) = max over vectors of <alpha, b>; the greedy action is the maximizing
// vector's action.
struct AlphaVectorPolicy {
  std::vector<AlphaVector> vectors;
  double discount = 0.95;
  std::size_t num_states = 0;
  std::string method = "pbvi";
  double residual = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const AlphaVectorPolicy&, const AlphaVectorPolicy&) = default;
};

struct GreedyChoice {
  double value;
  ActionIndex action;
  std::size_t vector;
};

// Ties (within 1e-9) go to the lowest action index. Throws InvalidArgument
// for an empty policy or a belief outside the vectors' dimension.
GreedyChoice value_of(const AlphaVectorPolicy& policy, const Belief& b);

json policy_to_json(const AlphaVectorPolicy& policy);
AlphaVectorPolicy policy_from_json(const json& j);

}  // namespace coplan::solver

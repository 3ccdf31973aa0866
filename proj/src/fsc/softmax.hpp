#pragma once

#include <vector>

namespace coplan::fsc {

inline constexpr double kArgmaxTieTolerance = 1e-9;

// e^{q/T} / Σ e^{q'/T} with a max shift; for T = 0 the uniform distribution
// over the argmax set. Throws InvalidArgument on an empty or non-finite q or
// a negative temperature.
std::vector<double> softmax_joint(const std::vector<double>& q, double temperature);

// Marginals of a joint distribution indexed a_H * num_robot_actions + a_R.
std::vector<double> marginal_human_raw(const std::vector<double>& joint,
                                       std::size_t num_robot_actions);
std::vector<double> marginal_robot(const std::vector<double>& joint,
                                   std::size_t num_robot_actions);

// Zeroes actions below the threshold and renormalizes. Throws
// AllActionsPruned when nothing survives.
std::vector<double> prune_actions(std::vector<double> dist, double threshold);

// Human marginal with the action threshold applied.
std::vector<double> marginal_human(const std::vector<double>& joint,
                                   std::size_t num_robot_actions, double threshold);

}  // namespace coplan::fsc

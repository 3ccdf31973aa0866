#pragma once

#include <vector>

#include "core/model.hpp"

namespace coplan::fsc {

// Human-side filtering in the Dec-POMDP: the robot's action is marginalized
// with its rule σ_R and the robot's observation is summed out.

// b'(s') ∝ Σ_{a_R} (Σ_{o_R} O(<a_H,a_R>, s', <o_H,o_R>)) (Σ_s T(s,<a_H,a_R>,s') b(s)) σ_R(a_R).
// Throws ZeroProbabilityObservation when o_H is impossible.
Belief human_belief_update(const DecPomdpModel& model, const Belief& b, ActionIndex a_h,
                           ObsIndex o_h, const std::vector<double>& sigma_r);

// Pr(o_H, a_H | b, σ_H, σ_R).
double history_probability(const DecPomdpModel& model, const Belief& b, ActionIndex a_h,
                           ObsIndex o_h, const std::vector<double>& sigma_h,
                           const std::vector<double>& sigma_r);

struct HumanSuccessor {
  ObsIndex observation;
  double likelihood;  // Pr(o_H | b, a_H, σ_R), without the σ_H(a_H) factor
  Belief belief;
};

// Every o_H with positive likelihood after a_H, sorted by o_H.
std::vector<HumanSuccessor> human_successors(const DecPomdpModel& model, const Belief& b,
                                             ActionIndex a_h,
                                             const std::vector<double>& sigma_r);

}  // namespace coplan::fsc

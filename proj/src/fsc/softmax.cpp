#include "fsc/softmax.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace coplan::fsc {

std::vector<double> softmax_joint(const std::vector<double>& q, double temperature) {
  if (q.empty()) throw InvalidArgument("softmax over an empty action set");
  if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
  for (double x : q) {
    if (!std::isfinite(x)) throw InvalidArgument("non-finite action value");
  }
  const double top = *std::max_element(q.begin(), q.end());
  std::vector<double> out(q.size(), 0.0);
  double total = 0.0;
  if (temperature == 0.0) {
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q[i] >= top - kArgmaxTieTolerance) {
        out[i] = 1.0;
        total += 1.0;
      }
    }
  } else {
    for (std::size_t i = 0; i < q.size(); ++i) {
      out[i] = std::exp((q[i] - top) / temperature);
      total += out[i];
    }
  }
  for (double& x : out) x /= total;
  return out;
}

std::vector<double> marginal_human_raw(const std::vector<double>& joint,
                                       std::size_t num_robot_actions) {
  if (num_robot_actions == 0 || joint.size() % num_robot_actions != 0) {
    throw InvalidArgument("joint distribution size mismatch");
  }
  std::vector<double> out(joint.size() / num_robot_actions, 0.0);
  for (std::size_t a = 0; a < joint.size(); ++a) out[a / num_robot_actions] += joint[a];
  return out;
}

std::vector<double> marginal_robot(const std::vector<double>& joint,
                                   std::size_t num_robot_actions) {
  if (num_robot_actions == 0 || joint.size() % num_robot_actions != 0) {
    throw InvalidArgument("joint distribution size mismatch");
  }
  std::vector<double> out(num_robot_actions, 0.0);
  for (std::size_t a = 0; a < joint.size(); ++a) out[a % num_robot_actions] += joint[a];
  return out;
}

std::vector<double> prune_actions(std::vector<double> dist, double threshold) {
  double total = 0.0;
  for (double& x : dist) {
    if (x < threshold) x = 0.0;
    total += x;
  }
  if (total <= 0.0) throw AllActionsPruned("all human actions fall below the action threshold");
  for (double& x : dist) x /= total;
  return dist;
}

std::vector<double> marginal_human(const std::vector<double>& joint,
                                   std::size_t num_robot_actions, double threshold) {
  return prune_actions(marginal_human_raw(joint, num_robot_actions), threshold);
}

}  // namespace coplan::fsc

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "robot/compile.hpp"
#include "solver/alpha_policy.hpp"
#include "solver/pbvi.hpp"

namespace coplan::robot {

struct RobotPolicy {
  CompiledRobotPomdp compiled;
  solver::AlphaVectorPolicy alphas;
};

RobotPolicy solve_robot(CompiledRobotPomdp compiled, const solver::PbviParams& params);

// The compiled model with its extended-state index map.
json compiled_to_json(const CompiledRobotPomdp& compiled);
CompiledRobotPomdp compiled_from_json(const json& j);

json robot_policy_to_json(const RobotPolicy& policy);
RobotPolicy robot_policy_from_json(const json& j);
void save_robot_policy(const RobotPolicy& policy, const std::string& path);
RobotPolicy load_robot_policy(const std::string& path);

// The robot side of an episode: receives only its own observations.
class RobotAgent {
 public:
  virtual ~RobotAgent() = default;
  virtual void reset(std::uint64_t seed) = 0;
  // First call of an episode passes std::nullopt (no observation yet).
  virtual ActionIndex step(std::optional<ObsIndex> robot_obs) = 0;
};

// Response to an observation the filtered belief gives zero probability.
enum class Recovery {
  // Condition on the observation alone, then reset to uniform over the
  // extended states storing it.
  Reset,
  // Keep the previous belief (the robot acts as if nothing was observed).
  None,
};

Recovery recovery_from_string(const std::string& name);
const char* recovery_name(Recovery r);

struct RecoveryEvent {
  std::size_t step;
  ObsIndex observation;
  std::string strategy;  // "observation-only", "uniform-reset" or "ignored"
};

// Filters the extended belief and acts greedily on the alpha vectors. A
// zero-probability observation first conditions the previous belief on the
// observation alone, then falls back to the uniform distribution over the
// extended states storing that observation.
class RobotExecutor : public RobotAgent {
 public:
  explicit RobotExecutor(std::shared_ptr<const RobotPolicy> policy,
                         Recovery recovery = Recovery::Reset);

  void reset(std::uint64_t seed = 0) override;
  ActionIndex step(std::optional<ObsIndex> robot_obs) override;

  const Belief& belief() const { return belief_; }
  const std::vector<RecoveryEvent>& recovery_events() const { return events_; }
  // Probability mass per source controller of the union.
  std::vector<double> parent_posterior(const fsc::StochasticFsc& human_union) const;

 private:
  std::shared_ptr<const RobotPolicy> policy_;
  Recovery recovery_;
  Belief belief_;
  std::optional<ActionIndex> last_action_;
  std::size_t steps_ = 0;
  std::vector<RecoveryEvent> events_;
};

// Plays a fixed controller over robot actions/observations.
class FscRobot : public RobotAgent {
 public:
  explicit FscRobot(fsc::StochasticFsc controller);
  void reset(std::uint64_t seed) override;
  ActionIndex step(std::optional<ObsIndex> robot_obs) override;

 private:
  fsc::StochasticFsc fsc_;
  std::mt19937_64 rng_;
  int node_ = 0;
  ActionIndex last_action_ = 0;
};

}  // namespace coplan::robot

#pragma once

#include <string>
#include <vector>

#include "core/model.hpp"

namespace coplan {

struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

// Layout and reward knobs of the device-repair collaboration task. (0, 0) is
// the top-left cell; "Up" decreases y.
struct GridTaskConfig {
  int width = 4;
  int height = 3;
  std::vector<Cell> broken_device_cells{{0, 0}, {3, 0}};
  std::vector<Cell> maintenance_device_cells{{1, 0}};
  Cell toolbox_cell{2, 2};
  Cell human_start{2, 1};
  Cell robot_start{1, 1};
  double preference_bonus = 10.0;
  int horizon_for_success = 30;
  double discount = 0.95;

  // Throws InvalidArgument when the layout is degenerate.
  void validate() const;

  friend bool operator==(const GridTaskConfig&, const GridTaskConfig&) = default;
};

enum class HumanAction { Up = 0, Down, Left, Right, Wait, Repair, Pick };
enum class RobotAction { Up = 0, Down, Left, Right, Wait, Repair, Maintain };
inline constexpr int kActionsPerAgent = 7;

enum class DeviceKind { Repair, Maintenance };

struct Device {
  Cell cell;
  DeviceKind kind;
};

// Decoded world state. device_needs_work[k] is true while device k is broken
// (repair devices) or needs maintenance (maintenance devices).
struct GridState {
  Cell human;
  Cell robot;
  std::vector<bool> device_needs_work;
  bool holding = false;

  friend bool operator==(const GridState&, const GridState&) = default;
};

struct GridStep {
  GridState next;
  bool human_invalid = false;
  bool robot_invalid = false;
  double base_reward = 0.0;
  // Index into repair devices of the device repaired this step, or -1.
  int repaired_device = -1;
};

// Reward and observation constants of the task.
inline constexpr double kCompletionReward = 100.0;
inline constexpr double kActionCost = -2.0;
inline constexpr double kInvalidPenalty = -20.0;
inline constexpr double kHumanWaitPenalty = -1.0;

// The collaboration task together with its Dec-POMDP. Objective k (1-based)
// prefers repair device k-1 first; each objective owns one reward table.
class GridTask {
 public:
  explicit GridTask(GridTaskConfig config);

  const GridTaskConfig& config() const { return config_; }
  const DecPomdpModel& model() const { return model_; }
  const std::vector<Device>& devices() const { return devices_; }
  int num_cells() const { return config_.width * config_.height; }
  int num_objectives() const;

  StateIndex encode(const GridState& s) const;
  GridState decode(StateIndex s) const;
  StateIndex initial_state() const;
  bool is_success(StateIndex s) const;
  bool is_success(const GridState& s) const;

  GridStep step(const GridState& s, HumanAction a_h, RobotAction a_r) const;
  ObsIndex human_observation(const GridState& s) const;
  ObsIndex robot_observation(const GridState& s) const;

  int cell_index(Cell c) const { return c.y * config_.width + c.x; }
  Cell cell_at(int index) const {
    return {index % config_.width, index / config_.width};
  }
  // Device located in the cell, or -1.
  int device_at(Cell c) const;

  static const char* human_action_name(int a);
  static const char* robot_action_name(int a);

 private:
  void build_model();
  bool in_grid(Cell c) const;
  Cell moved(Cell c, int move) const;

  GridTaskConfig config_;
  std::vector<Device> devices_;
  std::vector<int> repair_devices_;  // indices into devices_
  std::vector<int> human_obs_base_;  // per cell
  std::vector<int> robot_obs_base_;  // per cell
  int num_human_obs_ = 0;
  int num_robot_obs_ = 0;
  DecPomdpModel model_;
};

// Builds the Dec-POMDP of the task (two objectives for the default layout).
DecPomdpModel build_grid_task(const GridTaskConfig& config);

}  // namespace coplan

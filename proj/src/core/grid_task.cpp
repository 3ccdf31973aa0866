#include "core/grid_task.hpp"

#include <algorithm>
#include <sstream>

#include "core/errors.hpp"

namespace coplan {

namespace {

std::string cell_name(Cell c) {
  std::ostringstream s;
  s << "(" << c.x << "," << c.y << ")";
  return s.str();
}

const char* status_name(DeviceKind kind, bool needs_work) {
  if (!needs_work) return "good";
  return kind == DeviceKind::Repair ? "broken" : "needs-maintenance";
}

}  // namespace

void GridTaskConfig::validate() const {
  if (width < 1 || height < 1) throw InvalidArgument("grid must be at least 1x1");
  if (broken_device_cells.empty() && maintenance_device_cells.empty()) {
    throw InvalidArgument("task degenerate: no device to repair or maintain");
  }
  auto inside = [this](Cell c) {
    return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height;
  };
  std::vector<Cell> all = broken_device_cells;
  all.insert(all.end(), maintenance_device_cells.begin(),
             maintenance_device_cells.end());
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!inside(all[i])) throw InvalidArgument("device cell outside the grid");
    for (std::size_t j = 0; j < i; ++j) {
      if (all[i] == all[j]) throw InvalidArgument("two devices share a cell");
    }
    if (all[i] == toolbox_cell) {
      throw InvalidArgument("toolbox overlaps a device cell");
    }
  }
  if (!inside(toolbox_cell)) throw InvalidArgument("toolbox outside the grid");
  if (!inside(human_start) || !inside(robot_start)) {
    throw InvalidArgument("start cell outside the grid");
  }
  if (all.size() > 16) throw InvalidArgument("too many devices");
  if (preference_bonus < 0.0) throw InvalidArgument("preference bonus must be >= 0");
  if (horizon_for_success < 1) throw InvalidArgument("horizon must be positive");
  if (!(discount >= 0.0 && discount < 1.0)) {
    throw InvalidArgument("discount must lie in [0, 1)");
  }
}

GridTask::GridTask(GridTaskConfig config) : config_(std::move(config)) {
  config_.validate();
  for (Cell c : config_.broken_device_cells) {
    repair_devices_.push_back(static_cast<int>(devices_.size()));
    devices_.push_back({c, DeviceKind::Repair});
  }
  for (Cell c : config_.maintenance_device_cells) {
    devices_.push_back({c, DeviceKind::Maintenance});
  }
  const int cells = num_cells();
  human_obs_base_.resize(cells);
  robot_obs_base_.resize(cells);
  for (int c = 0; c < cells; ++c) {
    const bool dev = device_at(cell_at(c)) >= 0;
    human_obs_base_[c] = num_human_obs_;
    num_human_obs_ += dev ? 4 : 2;
    robot_obs_base_[c] = num_robot_obs_;
    num_robot_obs_ += dev ? 2 * cells : cells;
  }
  build_model();
}

int GridTask::num_objectives() const {
  return repair_devices_.size() >= 2 ? static_cast<int>(repair_devices_.size()) : 1;
}

int GridTask::device_at(Cell c) const {
  for (std::size_t k = 0; k < devices_.size(); ++k) {
    if (devices_[k].cell == c) return static_cast<int>(k);
  }
  return -1;
}

bool GridTask::in_grid(Cell c) const {
  return c.x >= 0 && c.y >= 0 && c.x < config_.width && c.y < config_.height;
}

Cell GridTask::moved(Cell c, int move) const {
  switch (move) {
    case 0: return {c.x, c.y - 1};
    case 1: return {c.x, c.y + 1};
    case 2: return {c.x - 1, c.y};
    case 3: return {c.x + 1, c.y};
    default: return c;
  }
}

StateIndex GridTask::encode(const GridState& s) const {
  const int d = static_cast<int>(devices_.size());
  int mask = 0;
  for (int k = 0; k < d; ++k) {
    if (s.device_needs_work[k]) mask |= 1 << k;
  }
  const long pos = static_cast<long>(cell_index(s.human)) * num_cells() +
                   cell_index(s.robot);
  return static_cast<StateIndex>(((pos << d) | mask) * 2 + (s.holding ? 1 : 0));
}

GridState GridTask::decode(StateIndex index) const {
  const int d = static_cast<int>(devices_.size());
  GridState s;
  s.holding = (index & 1) != 0;
  long rest = index >> 1;
  const int mask = static_cast<int>(rest & ((1 << d) - 1));
  rest >>= d;
  s.robot = cell_at(static_cast<int>(rest % num_cells()));
  s.human = cell_at(static_cast<int>(rest / num_cells()));
  s.device_needs_work.resize(d);
  for (int k = 0; k < d; ++k) s.device_needs_work[k] = (mask >> k) & 1;
  return s;
}

StateIndex GridTask::initial_state() const {
  GridState s;
  s.human = config_.human_start;
  s.robot = config_.robot_start;
  s.device_needs_work.assign(devices_.size(), true);
  s.holding = false;
  return encode(s);
}

bool GridTask::is_success(const GridState& s) const {
  return std::none_of(s.device_needs_work.begin(), s.device_needs_work.end(),
                      [](bool b) { return b; });
}

bool GridTask::is_success(StateIndex s) const { return is_success(decode(s)); }

GridStep GridTask::step(const GridState& s, HumanAction a_h, RobotAction a_r) const {
  GridStep out;
  out.next = s;
  const bool terminal = is_success(s);
  bool any_broken = false;
  for (int k : repair_devices_) any_broken = any_broken || s.device_needs_work[k];

  const int hd = device_at(s.human);
  const int rd = device_at(s.robot);
  const bool human_can_repair = s.holding && hd >= 0 &&
                                devices_[hd].kind == DeviceKind::Repair &&
                                s.device_needs_work[hd];
  const bool robot_can_repair = rd >= 0 && devices_[rd].kind == DeviceKind::Repair &&
                                s.device_needs_work[rd];

  // Validity is judged on the agent's own preconditions; a valid Repair that
  // the partner does not join simply has no effect.
  switch (a_h) {
    case HumanAction::Up:
    case HumanAction::Down:
    case HumanAction::Left:
    case HumanAction::Right: {
      Cell c = moved(s.human, static_cast<int>(a_h));
      if (in_grid(c)) {
        out.next.human = c;
      } else {
        out.human_invalid = true;
      }
      break;
    }
    case HumanAction::Wait:
      break;
    case HumanAction::Repair:
      out.human_invalid = !human_can_repair;
      break;
    case HumanAction::Pick:
      if (s.human == config_.toolbox_cell && !s.holding) {
        out.next.holding = true;
      } else {
        out.human_invalid = true;
      }
      break;
  }
  switch (a_r) {
    case RobotAction::Up:
    case RobotAction::Down:
    case RobotAction::Left:
    case RobotAction::Right: {
      Cell c = moved(s.robot, static_cast<int>(a_r));
      if (in_grid(c)) {
        out.next.robot = c;
      } else {
        out.robot_invalid = true;
      }
      break;
    }
    case RobotAction::Wait:
      break;
    case RobotAction::Repair:
      out.robot_invalid = !robot_can_repair;
      break;
    case RobotAction::Maintain:
      if (rd >= 0 && devices_[rd].kind == DeviceKind::Maintenance &&
          s.device_needs_work[rd]) {
        out.next.device_needs_work[rd] = false;
      } else {
        out.robot_invalid = true;
      }
      break;
  }
  if (a_h == HumanAction::Repair && a_r == RobotAction::Repair && human_can_repair &&
      robot_can_repair && s.human == s.robot) {
    out.next.device_needs_work[hd] = false;
    out.next.holding = false;
    out.repaired_device = static_cast<int>(
        std::find(repair_devices_.begin(), repair_devices_.end(), hd) -
        repair_devices_.begin());
  }

  if (terminal) {
    // Absorbing: nothing moves and only invalid actions are penalized.
    out.next = s;
    out.repaired_device = -1;
    out.base_reward = (out.human_invalid ? kInvalidPenalty : 0.0) +
                      (out.robot_invalid ? kInvalidPenalty : 0.0);
    return out;
  }

  double human_reward = kActionCost;
  if (out.human_invalid) {
    human_reward = kInvalidPenalty;
  } else if (a_h == HumanAction::Wait) {
    human_reward = any_broken ? kHumanWaitPenalty : 0.0;
  }
  const double robot_reward = out.robot_invalid ? kInvalidPenalty : kActionCost;
  out.base_reward = human_reward + robot_reward;
  if (is_success(out.next)) out.base_reward += kCompletionReward;
  return out;
}

ObsIndex GridTask::human_observation(const GridState& s) const {
  const int c = cell_index(s.human);
  const int flag = s.human == s.robot ? 1 : 0;
  const int d = device_at(s.human);
  if (d < 0) return human_obs_base_[c] + flag;
  return human_obs_base_[c] + flag * 2 + (s.device_needs_work[d] ? 1 : 0);
}

ObsIndex GridTask::robot_observation(const GridState& s) const {
  const int c = cell_index(s.robot);
  const int h = cell_index(s.human);
  const int d = device_at(s.robot);
  if (d < 0) return robot_obs_base_[c] + h;
  return robot_obs_base_[c] + h * 2 + (s.device_needs_work[d] ? 1 : 0);
}

const char* GridTask::human_action_name(int a) {
  static const char* names[] = {"Up", "Down", "Left", "Right", "Wait", "Repair", "Pick"};
  return names[a];
}

const char* GridTask::robot_action_name(int a) {
  static const char* names[] = {"Up",   "Down",   "Left",    "Right",
                                "Wait", "Repair", "Maintain"};
  return names[a];
}

void GridTask::build_model() {
  const int cells = num_cells();
  const int d = static_cast<int>(devices_.size());
  const std::size_t num_states = static_cast<std::size_t>(cells) * cells * (1u << d) * 2;
  const int num_joint = kActionsPerAgent * kActionsPerAgent;

  DecPomdpModel& m = model_;
  m.human.name = "human";
  m.robot.name = "robot";
  for (int a = 0; a < kActionsPerAgent; ++a) {
    m.human.actions.emplace_back(human_action_name(a));
    m.robot.actions.emplace_back(robot_action_name(a));
  }
  m.human.observations.resize(num_human_obs_);
  m.robot.observations.resize(num_robot_obs_);
  for (int c = 0; c < cells; ++c) {
    const Cell cell = cell_at(c);
    const int dev = device_at(cell);
    for (int flag = 0; flag < 2; ++flag) {
      const std::string base = "at" + cell_name(cell) + (flag ? " robot-here" : " alone");
      if (dev < 0) {
        m.human.observations[human_obs_base_[c] + flag] = base;
      } else {
        for (int st = 0; st < 2; ++st) {
          m.human.observations[human_obs_base_[c] + flag * 2 + st] =
              base + " " + status_name(devices_[dev].kind, st == 1);
        }
      }
    }
    for (int h = 0; h < cells; ++h) {
      const std::string base = "at" + cell_name(cell) + " human" + cell_name(cell_at(h));
      if (dev < 0) {
        m.robot.observations[robot_obs_base_[c] + h] = base;
      } else {
        for (int st = 0; st < 2; ++st) {
          m.robot.observations[robot_obs_base_[c] + h * 2 + st] =
              base + " " + status_name(devices_[dev].kind, st == 1);
        }
      }
    }
  }

  const int objectives = num_objectives();
  for (int k = 0; k < objectives; ++k) {
    RewardTable t;
    t.id = k + 1;
    if (repair_devices_.size() < 2) {
      t.name = "complete";
    } else if (repair_devices_.size() == 2) {
      const Cell a = devices_[repair_devices_[k]].cell;
      const Cell b = devices_[repair_devices_[1 - k]].cell;
      t.name = a.x <= b.x ? "prefer-left" : "prefer-right";
    } else {
      t.name = "prefer-device" + cell_name(devices_[repair_devices_[k]].cell);
    }
    t.values.assign(num_states * num_joint, 0.0);
    m.rewards.push_back(std::move(t));
  }

  m.state_names.resize(num_states);
  m.transition.reserve(num_states * num_joint, num_states * num_joint);
  for (std::size_t si = 0; si < num_states; ++si) {
    const GridState s = decode(static_cast<StateIndex>(si));
    {
      std::ostringstream name;
      name << "H" << cell_name(s.human) << " R" << cell_name(s.robot) << " d=";
      for (bool b : s.device_needs_work) name << (b ? '1' : '0');
      name << " hold=" << (s.holding ? 1 : 0);
      m.state_names[si] = name.str();
    }
    for (int ah = 0; ah < kActionsPerAgent; ++ah) {
      for (int ar = 0; ar < kActionsPerAgent; ++ar) {
        const GridStep st = step(s, static_cast<HumanAction>(ah),
                                 static_cast<RobotAction>(ar));
        const int a = ah * kActionsPerAgent + ar;
        m.transition.append_single(encode(st.next));
        for (int k = 0; k < objectives; ++k) {
          double r = st.base_reward;
          if (objectives > 1 && st.repaired_device == k) {
            bool other_broken = false;
            for (int j : repair_devices_) {
              other_broken = other_broken || st.next.device_needs_work[j];
            }
            if (other_broken) r += config_.preference_bonus;
          }
          m.rewards[k].values[si * num_joint + a] = r;
        }
      }
    }
  }

  // Observations depend on the next state only.
  std::vector<ObsIndex> obs_of(num_states);
  for (std::size_t si = 0; si < num_states; ++si) {
    const GridState s = decode(static_cast<StateIndex>(si));
    obs_of[si] = human_observation(s) * num_robot_obs_ + robot_observation(s);
  }
  m.observation.reserve(num_states * num_joint, num_states * num_joint);
  for (int a = 0; a < num_joint; ++a) {
    for (std::size_t si = 0; si < num_states; ++si) m.observation.append_single(obs_of[si]);
  }
  m.initial_belief = Belief::dirac(initial_state());
  m.discount = config_.discount;
}

DecPomdpModel build_grid_task(const GridTaskConfig& config) {
  return GridTask(config).model();
}

}  // namespace coplan

#include "core/model_io.hpp"

#include <fstream>

#include "core/errors.hpp"

namespace coplan {

namespace {

json kernel_triplets(const SparseKernel& k, std::size_t row_block) {
  json out = json::array();
  for (std::size_t r = 0; r < k.num_rows(); ++r) {
    for (const Outcome& o : k.row(r)) {
      out.push_back({r / row_block, r % row_block, o.index, o.prob});
    }
  }
  return out;
}

// Triplets [i, j, col, p] where the row is i * row_block + j.
SparseKernel kernel_from_triplets(const json& arr, std::size_t num_rows_i,
                                  std::size_t row_block, std::size_t num_cols,
                                  const char* what) {
  if (!arr.is_array()) throw ModelError(std::string(what) + " must be an array");
  std::vector<Triplet> triplets;
  triplets.reserve(arr.size());
  for (const json& t : arr) {
    if (!t.is_array() || t.size() != 4) {
      throw ModelError(std::string(what) + " entries must have 4 fields");
    }
    const long i = t[0].get<long>();
    const long j = t[1].get<long>();
    const long c = t[2].get<long>();
    const double p = t[3].get<double>();
    if (i < 0 || j < 0 || c < 0 || static_cast<std::size_t>(i) >= num_rows_i ||
        static_cast<std::size_t>(j) >= row_block ||
        static_cast<std::size_t>(c) >= num_cols) {
      throw ModelError(std::string(what) + " index out of range");
    }
    triplets.push_back({static_cast<std::size_t>(i) * row_block +
                            static_cast<std::size_t>(j),
                        static_cast<std::int32_t>(c), p});
  }
  return SparseKernel::from_triplets(num_rows_i * row_block, std::move(triplets));
}

json reward_entries(const std::vector<double>& values, std::size_t num_actions) {
  json out = json::array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 0.0) out.push_back({i / num_actions, i % num_actions, values[i]});
  }
  return out;
}

std::vector<double> reward_from_entries(const json& arr, std::size_t num_states,
                                        std::size_t num_actions) {
  std::vector<double> values(num_states * num_actions, 0.0);
  for (const json& e : arr) {
    if (!e.is_array() || e.size() != 3) throw ModelError("reward entries need 3 fields");
    const long s = e[0].get<long>();
    const long a = e[1].get<long>();
    if (s < 0 || a < 0 || static_cast<std::size_t>(s) >= num_states ||
        static_cast<std::size_t>(a) >= num_actions) {
      throw ModelError("reward index out of range");
    }
    values[static_cast<std::size_t>(s) * num_actions + a] += e[2].get<double>();
  }
  return values;
}

void check_version(const json& j) {
  if (!j.contains("version")) throw ModelError("missing schema version");
  const int v = j.at("version").get<int>();
  if (v != kModelSchemaVersion) {
    throw ModelError("unsupported schema version " + std::to_string(v));
  }
}

template <typename F>
auto schema_guard(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ModelError(std::string("schema violation: ") + e.what());
  }
}

json cell_json(Cell c) { return json::array({c.x, c.y}); }

Cell cell_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidArgument("cell must be [x, y]");
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

json belief_to_json(const Belief& b) {
  json out = json::array();
  for (const auto& e : b) out.push_back({e.index, e.prob});
  return out;
}

Belief belief_from_json(const json& j) {
  std::vector<Belief::Entry> entries;
  for (const json& e : j) {
    entries.push_back({e.at(0).get<StateIndex>(), e.at(1).get<double>()});
  }
  return Belief::from_normalized(std::move(entries));
}

json model_to_json(const DecPomdpModel& m) {
  json j;
  j["version"] = kModelSchemaVersion;
  j["agents"] = {m.human.name, m.robot.name};
  j["states"] = m.state_names;
  j["actions"] = {{"human", m.human.actions}, {"robot", m.robot.actions}};
  j["observations"] = {{"human", m.human.observations},
                       {"robot", m.robot.observations}};
  j["transitions"] = kernel_triplets(m.transition, m.num_joint_actions());
  j["observations_fn"] = kernel_triplets(m.observation, m.num_states());
  json rewards = json::array();
  for (const RewardTable& t : m.rewards) {
    rewards.push_back({{"id", t.id},
                       {"name", t.name},
                       {"entries", reward_entries(t.values, m.num_joint_actions())}});
  }
  j["rewards"] = std::move(rewards);
  j["b0"] = belief_to_json(m.initial_belief);
  j["gamma"] = m.discount;
  return j;
}

DecPomdpModel model_from_json(const json& j) {
  return schema_guard([&] {
    check_version(j);
    DecPomdpModel m;
    const json& agents = j.at("agents");
    if (!agents.is_array() || agents.size() != 2) {
      throw ModelError("exactly two agents are supported");
    }
    m.human.name = agents[0].get<std::string>();
    m.robot.name = agents[1].get<std::string>();
    m.state_names = j.at("states").get<std::vector<std::string>>();
    m.human.actions = j.at("actions").at("human").get<std::vector<std::string>>();
    m.robot.actions = j.at("actions").at("robot").get<std::vector<std::string>>();
    m.human.observations =
        j.at("observations").at("human").get<std::vector<std::string>>();
    m.robot.observations =
        j.at("observations").at("robot").get<std::vector<std::string>>();
    m.transition = kernel_from_triplets(j.at("transitions"), m.num_states(),
                                        m.num_joint_actions(), m.num_states(),
                                        "transitions");
    m.observation = kernel_from_triplets(j.at("observations_fn"), m.num_joint_actions(),
                                         m.num_states(), m.num_joint_observations(),
                                         "observations_fn");
    for (const json& t : j.at("rewards")) {
      RewardTable table;
      table.id = t.at("id").get<int>();
      table.name = t.value("name", std::string{});
      table.values =
          reward_from_entries(t.at("entries"), m.num_states(), m.num_joint_actions());
      m.rewards.push_back(std::move(table));
    }
    std::vector<Belief::Entry> b0;
    for (const json& e : j.at("b0")) {
      b0.push_back({e.at(0).get<StateIndex>(), e.at(1).get<double>()});
    }
    m.initial_belief = Belief::from_normalized(std::move(b0));
    m.discount = j.at("gamma").get<double>();
    m.validate();
    return m;
  });
}

json pomdp_to_json(const PomdpModel& m) {
  json j;
  j["version"] = kModelSchemaVersion;
  j["kind"] = "pomdp";
  j["states"] = m.state_names;
  j["actions"] = m.action_names;
  j["observations"] = m.observation_names;
  j["transitions"] = kernel_triplets(m.transition, m.num_actions());
  j["observations_fn"] = kernel_triplets(m.observation, m.num_states());
  j["reward"] = reward_entries(m.reward, m.num_actions());
  j["b0"] = belief_to_json(m.initial_belief);
  j["gamma"] = m.discount;
  return j;
}

PomdpModel pomdp_from_json(const json& j) {
  return schema_guard([&] {
    check_version(j);
    PomdpModel m;
    m.state_names = j.at("states").get<std::vector<std::string>>();
    m.action_names = j.at("actions").get<std::vector<std::string>>();
    m.observation_names = j.at("observations").get<std::vector<std::string>>();
    m.transition = kernel_from_triplets(j.at("transitions"), m.num_states(),
                                        m.num_actions(), m.num_states(), "transitions");
    m.observation = kernel_from_triplets(j.at("observations_fn"), m.num_actions(),
                                         m.num_states(), m.num_observations(),
                                         "observations_fn");
    m.reward = reward_from_entries(j.at("reward"), m.num_states(), m.num_actions());
    m.initial_belief = belief_from_json(j.at("b0"));
    m.discount = j.at("gamma").get<double>();
    m.validate();
    return m;
  });
}

json grid_config_to_json(const GridTaskConfig& c) {
  json j;
  j["width"] = c.width;
  j["height"] = c.height;
  j["broken_device_cells"] = json::array();
  for (Cell x : c.broken_device_cells) j["broken_device_cells"].push_back(cell_json(x));
  j["maintenance_device_cells"] = json::array();
  for (Cell x : c.maintenance_device_cells) {
    j["maintenance_device_cells"].push_back(cell_json(x));
  }
  j["toolbox_cell"] = cell_json(c.toolbox_cell);
  j["human_start"] = cell_json(c.human_start);
  j["robot_start"] = cell_json(c.robot_start);
  j["preference_bonus"] = c.preference_bonus;
  j["horizon_for_success"] = c.horizon_for_success;
  j["discount"] = c.discount;
  return j;
}

GridTaskConfig grid_config_from_json(const json& j) {
  try {
    GridTaskConfig c;
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    if (j.contains("broken_device_cells")) {
      c.broken_device_cells.clear();
      for (const json& x : j["broken_device_cells"]) {
        c.broken_device_cells.push_back(cell_from(x));
      }
    }
    if (j.contains("maintenance_device_cell")) {
      c.maintenance_device_cells = {cell_from(j["maintenance_device_cell"])};
    }
    if (j.contains("maintenance_device_cells")) {
      c.maintenance_device_cells.clear();
      for (const json& x : j["maintenance_device_cells"]) {
        c.maintenance_device_cells.push_back(cell_from(x));
      }
    }
    if (j.contains("toolbox_cell")) c.toolbox_cell = cell_from(j["toolbox_cell"]);
    if (j.contains("human_start")) c.human_start = cell_from(j["human_start"]);
    if (j.contains("robot_start")) c.robot_start = cell_from(j["robot_start"]);
    c.preference_bonus = j.value("preference_bonus", c.preference_bonus);
    c.horizon_for_success = j.value("horizon_for_success", c.horizon_for_success);
    c.discount = j.value("discount", c.discount);
    return c;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad grid config: ") + e.what());
  }
}

void save_model(const DecPomdpModel& model, const std::string& path) {
  write_json_file(model_to_json(model), path);
}

DecPomdpModel load_model(const std::string& path) {
  return model_from_json(read_json_file(path));
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelError(path + ": " + e.what());
  }
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump();
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace coplan

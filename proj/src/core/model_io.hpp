#pragma once

#include <string>

#include "core/grid_task.hpp"
#include "core/model.hpp"
#include "json.hpp"

namespace coplan {

inline constexpr int kModelSchemaVersion = 1;

using json = nlohmann::json;

json model_to_json(const DecPomdpModel& model);
// Validates the schema and the model invariants; throws ModelError.
DecPomdpModel model_from_json(const json& j);

json pomdp_to_json(const PomdpModel& model);
PomdpModel pomdp_from_json(const json& j);

json belief_to_json(const Belief& b);
Belief belief_from_json(const json& j);

json grid_config_to_json(const GridTaskConfig& config);
// Missing keys keep their defaults.
GridTaskConfig grid_config_from_json(const json& j);

void save_model(const DecPomdpModel& model, const std::string& path);
DecPomdpModel load_model(const std::string& path);

json read_json_file(const std::string& path);
void write_json_file(const json& j, const std::string& path);

}  // namespace coplan

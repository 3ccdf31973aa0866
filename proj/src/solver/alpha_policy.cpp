#include "solver/alpha_policy.hpp"

#include <limits>

#include "core/errors.hpp"

namespace coplan::solver {

GreedyChoice value_of(const AlphaVectorPolicy& policy, const Belief& b) {
  if (policy.vectors.empty()) throw InvalidArgument("empty alpha-vector policy");
  for (const auto& e : b) {
    if (static_cast<std::size_t>(e.index) >= policy.num_states) {
      throw InvalidArgument("belief dimension exceeds alpha-vector dimension");
    }
  }
  std::vector<double> values(policy.vectors.size());
  double max_v = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = b.dot(policy.vectors[i].values);
    max_v = std::max(max_v, values[i]);
  }
  GreedyChoice best{max_v, std::numeric_limits<ActionIndex>::max(), 0};
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] >= max_v - 1e-9 && policy.vectors[i].action < best.action) {
      best.action = policy.vectors[i].action;
      best.vector = i;
    }
  }
  return best;
}

json policy_to_json(const AlphaVectorPolicy& p) {
  json j;
  j["version"] = kModelSchemaVersion;
  j["method"] = p.method;
  j["residual"] = p.residual;
  j["seed"] = p.seed;
  j["discount"] = p.discount;
  j["num_states"] = p.num_states;
  json vectors = json::array();
  for (const AlphaVector& a : p.vectors) {
    vectors.push_back({{"action", a.action}, {"alpha", a.values}});
  }
  j["vectors"] = std::move(vectors);
  return j;
}

AlphaVectorPolicy policy_from_json(const json& j) {
  try {
    AlphaVectorPolicy p;
    p.method = j.value("method", std::string("pbvi"));
    p.residual = j.value("residual", 0.0);
    p.seed = j.value("seed", std::uint64_t{0});
    p.discount = j.at("discount").get<double>();
    p.num_states = j.at("num_states").get<std::size_t>();
    for (const json& v : j.at("vectors")) {
      AlphaVector a;
      a.action = v.at("action").get<ActionIndex>();
      a.values = v.at("alpha").get<std::vector<double>>();
      if (a.values.size() != p.num_states) {
        throw ModelError("alpha vector dimension mismatch");
      }
      p.vectors.push_back(std::move(a));
    }
    if (p.vectors.empty()) throw ModelError("policy has no alpha vectors");
    return p;
  } catch (const json::exception& e) {
    throw ModelError(std::string("schema violation: ") + e.what());
  }
}

}  // namespace coplan::solver

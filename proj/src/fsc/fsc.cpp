#include "fsc/fsc.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "core/errors.hpp"

namespace coplan::fsc {

namespace {

constexpr double kSumTolerance = 1e-9;

template <typename Range>
int sample_index(const Range& items, double u) {
  for (const Outcome& o : items) {
    if (u < o.prob) return o.index;
    u -= o.prob;
  }
  // Rounding: fall back to the last positive entry.
  for (auto it = items.rbegin(); it != items.rend(); ++it) {
    if (it->prob > 0.0) return it->index;
  }
  throw StateError("sampling from an empty distribution");
}

}  // namespace

StochasticFsc::StochasticFsc(std::size_t num_actions, std::size_t num_observations)
    : num_actions_(num_actions), num_observations_(num_observations) {
  if (num_actions == 0 || num_observations == 0) {
    throw InvalidArgument("controller needs at least one action and observation");
  }
}

int StochasticFsc::add_node(FscNode node) {
  if (node.action_dist.size() != num_actions_) {
    throw InvalidArgument("action distribution size mismatch");
  }
  nodes_.push_back(std::move(node));
  edges_.resize(nodes_.size() * num_actions_ * num_observations_);
  return static_cast<int>(nodes_.size()) - 1;
}

void StochasticFsc::set_initial(std::vector<Outcome> beta) {
  merge_outcomes(beta);
  initial_ = std::move(beta);
}

void StochasticFsc::set_edge(int n, ActionIndex a, ObsIndex o, std::vector<Outcome> next) {
  if (n < 0 || static_cast<std::size_t>(n) >= nodes_.size() || a < 0 ||
      static_cast<std::size_t>(a) >= num_actions_ || o < 0 ||
      static_cast<std::size_t>(o) >= num_observations_) {
    throw InvalidArgument("edge index out of range");
  }
  merge_outcomes(next);
  edges_[edge_index(n, a, o)] = std::move(next);
}

int StochasticFsc::sample_initial(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return sample_index(initial_, unit(rng));
}

ActionIndex StochasticFsc::act(int n, std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng);
  const auto& dist = nodes_.at(n).action_dist;
  ActionIndex last = -1;
  for (std::size_t a = 0; a < dist.size(); ++a) {
    if (dist[a] <= 0.0) continue;
    last = static_cast<ActionIndex>(a);
    if (u < dist[a]) return last;
    u -= dist[a];
  }
  if (last < 0) throw StateError("node has no action with positive probability");
  return last;
}

int StochasticFsc::step(int n, ActionIndex a, ObsIndex o, std::mt19937_64& rng) const {
  const auto next = successors(n, a, o);
  if (next.empty()) {
    throw StateError("no transition for node " + std::to_string(n) + ", action " +
                     std::to_string(a) + ", observation " + std::to_string(o));
  }
  if (next.size() == 1) return next[0].index;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return sample_index(next, unit(rng));
}

std::vector<int> StochasticFsc::reachable() const {
  std::vector<int> dist(nodes_.size(), -1);
  std::deque<int> queue;
  for (const Outcome& b : initial_) {
    if (b.prob > 0.0 && dist[b.index] < 0) {
      dist[b.index] = 0;
      queue.push_back(b.index);
    }
  }
  while (!queue.empty()) {
    const int n = queue.front();
    queue.pop_front();
    for (std::size_t a = 0; a < num_actions_; ++a) {
      if (nodes_[n].action_dist[a] <= 0.0) continue;
      for (std::size_t o = 0; o < num_observations_; ++o) {
        for (const Outcome& e : successors(n, static_cast<ActionIndex>(a),
                                           static_cast<ObsIndex>(o))) {
          if (e.prob > 0.0 && dist[e.index] < 0) {
            dist[e.index] = dist[n] + 1;
            queue.push_back(e.index);
          }
        }
      }
    }
  }
  return dist;
}

int StochasticFsc::depth() const {
  int depth = 0;
  for (int d : reachable()) depth = std::max(depth, d);
  return depth;
}

void StochasticFsc::validate() const {
  if (nodes_.empty()) throw ModelError("controller has no nodes");
  double total = 0.0;
  for (const Outcome& b : initial_) {
    if (b.index < 0 || static_cast<std::size_t>(b.index) >= nodes_.size()) {
      throw ModelError("initial distribution references an unknown node");
    }
    total += b.prob;
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw ModelError("initial distribution sums to " + std::to_string(total));
  }
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    double psi = 0.0;
    for (double x : nodes_[n].action_dist) {
      if (x < 0.0) throw ModelError("negative action probability at node " + std::to_string(n));
      psi += x;
    }
    if (std::abs(psi - 1.0) > kSumTolerance) {
      throw ModelError("action distribution of node " + std::to_string(n) + " sums to " +
                       std::to_string(psi));
    }
    for (std::size_t a = 0; a < num_actions_; ++a) {
      if (nodes_[n].action_dist[a] <= 0.0) continue;
      for (std::size_t o = 0; o < num_observations_; ++o) {
        double eta = 0.0;
        for (const Outcome& e : successors(static_cast<int>(n), static_cast<ActionIndex>(a),
                                           static_cast<ObsIndex>(o))) {
          if (e.index < 0 || static_cast<std::size_t>(e.index) >= nodes_.size()) {
            throw ModelError("edge to an unknown node");
          }
          eta += e.prob;
        }
        if (std::abs(eta - 1.0) > kSumTolerance) {
          throw ModelError("transition (n=" + std::to_string(n) + ", a=" + std::to_string(a) +
                           ", o=" + std::to_string(o) + ") sums to " + std::to_string(eta));
        }
      }
    }
  }
}

void StochasticFsc::prune_unreachable() {
  const std::vector<int> dist = reachable();
  std::vector<int> remap(nodes_.size(), -1);
  int next = 0;
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    if (dist[n] >= 0) remap[n] = next++;
  }
  if (static_cast<std::size_t>(next) == nodes_.size()) return;
  StochasticFsc out(num_actions_, num_observations_);
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    if (remap[n] >= 0) out.add_node(nodes_[n]);
  }
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    if (remap[n] < 0) continue;
    for (std::size_t a = 0; a < num_actions_; ++a) {
      for (std::size_t o = 0; o < num_observations_; ++o) {
        std::vector<Outcome> succ;
        for (const Outcome& e : successors(static_cast<int>(n), static_cast<ActionIndex>(a),
                                           static_cast<ObsIndex>(o))) {
          // Edges of zero-probability actions may point at pruned nodes.
          succ.push_back({remap[e.index] >= 0 ? remap[e.index] : remap[n], e.prob});
        }
        out.set_edge(remap[n], static_cast<ActionIndex>(a), static_cast<ObsIndex>(o),
                     std::move(succ));
      }
    }
  }
  std::vector<Outcome> beta;
  for (const Outcome& b : initial_) beta.push_back({remap[b.index], b.prob});
  out.set_initial(std::move(beta));
  *this = std::move(out);
}

StochasticFsc union_fsc(const std::vector<StochasticFsc>& fscs, const std::vector<double>& p) {
  if (fscs.empty() || fscs.size() != p.size()) {
    throw InvalidArgument("union needs one probability per controller");
  }
  double total = 0.0;
  for (double x : p) {
    if (x < 0.0) throw InvalidArgument("negative union weight");
    total += x;
  }
  if (std::abs(total - 1.0) > kSumTolerance) throw InvalidArgument("union weights must sum to 1");
  const std::size_t A = fscs[0].num_actions();
  const std::size_t O = fscs[0].num_observations();
  StochasticFsc out(A, O);
  std::vector<Outcome> beta;
  for (std::size_t i = 0; i < fscs.size(); ++i) {
    const StochasticFsc& f = fscs[i];
    if (f.num_actions() != A || f.num_observations() != O) {
      throw InvalidArgument("controllers in a union must share actions and observations");
    }
    const int offset = static_cast<int>(out.num_nodes());
    for (const FscNode& n : f.nodes()) {
      FscNode copy = n;
      copy.parent = static_cast<int>(i);
      out.add_node(std::move(copy));
    }
    for (std::size_t n = 0; n < f.num_nodes(); ++n) {
      for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t o = 0; o < O; ++o) {
          std::vector<Outcome> succ;
          for (const Outcome& e : f.successors(static_cast<int>(n), static_cast<ActionIndex>(a),
                                               static_cast<ObsIndex>(o))) {
            succ.push_back({e.index + offset, e.prob});
          }
          if (!succ.empty()) {
            out.set_edge(static_cast<int>(n) + offset, static_cast<ActionIndex>(a),
                         static_cast<ObsIndex>(o), std::move(succ));
          }
        }
      }
    }
    for (const Outcome& b : f.initial()) beta.push_back({b.index + offset, b.prob * p[i]});
  }
  out.set_initial(std::move(beta));
  return out;
}

StochasticFsc constant_fsc(std::size_t num_actions, std::size_t num_observations,
                           ActionIndex action, int objective) {
  StochasticFsc f(num_actions, num_observations);
  FscNode node;
  node.action_dist.assign(num_actions, 0.0);
  node.action_dist.at(action) = 1.0;
  node.weight = 1.0;
  node.objective = objective;
  f.add_node(std::move(node));
  for (std::size_t a = 0; a < num_actions; ++a) {
    for (std::size_t o = 0; o < num_observations; ++o) {
      f.set_edge(0, static_cast<ActionIndex>(a), static_cast<ObsIndex>(o), 0);
    }
  }
  f.set_initial({{0, 1.0}});
  return f;
}

json fsc_to_json(const StochasticFsc& f, bool with_beliefs) {
  json j;
  j["version"] = kModelSchemaVersion;
  j["num_actions"] = f.num_actions();
  j["num_observations"] = f.num_observations();
  json nodes = json::array();
  for (std::size_t n = 0; n < f.num_nodes(); ++n) {
    const FscNode& node = f.node(static_cast<int>(n));
    json jn = {{"id", n},
               {"objective", node.objective},
               {"parent", node.parent},
               {"action_dist", node.action_dist},
               {"weight", node.weight},
               {"value", node.value}};
    if (!node.robot_rule.empty()) jn["robot_rule"] = node.robot_rule;
    if (with_beliefs && !node.belief.empty()) jn["belief"] = belief_to_json(node.belief);
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);
  json initial = json::array();
  for (const Outcome& b : f.initial()) initial.push_back({{"id", b.index}, {"p", b.prob}});
  j["initial"] = std::move(initial);
  json edges = json::array();
  for (std::size_t n = 0; n < f.num_nodes(); ++n) {
    for (std::size_t a = 0; a < f.num_actions(); ++a) {
      for (std::size_t o = 0; o < f.num_observations(); ++o) {
        for (const Outcome& e : f.successors(static_cast<int>(n), static_cast<ActionIndex>(a),
                                             static_cast<ObsIndex>(o))) {
          edges.push_back({{"from", n}, {"action", a}, {"obs", o}, {"to", e.index}, {"p", e.prob}});
        }
      }
    }
  }
  j["edges"] = std::move(edges);
  return j;
}

StochasticFsc fsc_from_json(const json& j) {
  try {
    if (j.value("version", kModelSchemaVersion) != kModelSchemaVersion) {
      throw ModelError("unsupported controller schema version");
    }
    StochasticFsc f(j.at("num_actions").get<std::size_t>(),
                    j.at("num_observations").get<std::size_t>());
    const json& nodes = j.at("nodes");
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      const json& jn = nodes[n];
      if (jn.at("id").get<std::size_t>() != n) throw ModelError("node ids must be 0..N-1 in order");
      FscNode node;
      node.action_dist = jn.at("action_dist").get<std::vector<double>>();
      node.objective = jn.value("objective", 1);
      node.parent = jn.value("parent", 0);
      node.weight = jn.value("weight", 0.0);
      node.value = jn.value("value", 0.0);
      if (jn.contains("robot_rule")) node.robot_rule = jn["robot_rule"].get<std::vector<double>>();
      if (jn.contains("belief")) node.belief = belief_from_json(jn["belief"]);
      f.add_node(std::move(node));
    }
    std::vector<std::vector<Outcome>> pending(f.num_nodes() * f.num_actions() *
                                              f.num_observations());
    for (const json& e : j.at("edges")) {
      const long from = e.at("from").get<long>();
      const long a = e.at("action").get<long>();
      const long o = e.at("obs").get<long>();
      const long to = e.at("to").get<long>();
      if (from < 0 || static_cast<std::size_t>(from) >= f.num_nodes() || a < 0 ||
          static_cast<std::size_t>(a) >= f.num_actions() || o < 0 ||
          static_cast<std::size_t>(o) >= f.num_observations() || to < 0 ||
          static_cast<std::size_t>(to) >= f.num_nodes()) {
        throw ModelError("edge index out of range");
      }
      pending[(static_cast<std::size_t>(from) * f.num_actions() + a) * f.num_observations() + o]
          .push_back({static_cast<std::int32_t>(to), e.at("p").get<double>()});
    }
    for (std::size_t n = 0; n < f.num_nodes(); ++n) {
      for (std::size_t a = 0; a < f.num_actions(); ++a) {
        for (std::size_t o = 0; o < f.num_observations(); ++o) {
          auto& list = pending[(n * f.num_actions() + a) * f.num_observations() + o];
          if (!list.empty()) {
            f.set_edge(static_cast<int>(n), static_cast<ActionIndex>(a),
                       static_cast<ObsIndex>(o), std::move(list));
          }
        }
      }
    }
    std::vector<Outcome> beta;
    for (const json& b : j.at("initial")) {
      beta.push_back({b.at("id").get<std::int32_t>(), b.at("p").get<double>()});
    }
    f.set_initial(std::move(beta));
    f.validate();
    return f;
  } catch (const json::exception& e) {
    throw ModelError(std::string("controller schema violation: ") + e.what());
  }
}

void save_fsc(const StochasticFsc& fsc, const std::string& path) {
  write_json_file(fsc_to_json(fsc), path);
}

StochasticFsc load_fsc(const std::string& path) { return fsc_from_json(read_json_file(path)); }

}  // namespace coplan::fsc

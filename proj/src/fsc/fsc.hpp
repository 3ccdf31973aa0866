#pragma once

#include <random>
#include <span>
#include <vector>

#include "core/belief.hpp"
#include "core/model_io.hpp"

namespace coplan::fsc {

struct FscNode {
  std::vector<double> action_dist;  // ψ(n, ·)
  std::vector<double> robot_rule;   // σ_R(·|b) at creation; may be empty
  Belief belief;                    // reference belief; may be empty
  double weight = 0.0;
  double value = 0.0;  // estimator V(b) at creation
  int objective = 1;
  int parent = 0;  // source FSC index inside a union

  friend bool operator==(const FscNode&, const FscNode&) = default;
};

// Finite-state controller ⟨N, β, η, ψ⟩ over one agent's actions and
// observations. η is stored per (n, a, o) as a list of (n', p).
class StochasticFsc {
 public:
  StochasticFsc() = default;
  StochasticFsc(std::size_t num_actions, std::size_t num_observations);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t num_observations() const { return num_observations_; }

  int add_node(FscNode node);
  const FscNode& node(int n) const { return nodes_.at(n); }
  FscNode& node(int n) { return nodes_.at(n); }
  const std::vector<FscNode>& nodes() const { return nodes_; }

  std::span<const Outcome> initial() const { return initial_; }
  void set_initial(std::vector<Outcome> beta);

  std::span<const Outcome> successors(int n, ActionIndex a, ObsIndex o) const {
    return edges_[edge_index(n, a, o)];
  }
  void set_edge(int n, ActionIndex a, ObsIndex o, std::vector<Outcome> next);
  void set_edge(int n, ActionIndex a, ObsIndex o, int next) { set_edge(n, a, o, {{next, 1.0}}); }
  bool has_edge(int n, ActionIndex a, ObsIndex o) const {
    return !edges_[edge_index(n, a, o)].empty();
  }

  int sample_initial(std::mt19937_64& rng) const;
  ActionIndex act(int n, std::mt19937_64& rng) const;
  // Throws StateError when (n, a, o) has no outgoing entry.
  int step(int n, ActionIndex a, ObsIndex o, std::mt19937_64& rng) const;

  // Longest shortest-path distance from the initial support, following
  // edges of actions with ψ > 0.
  int depth() const;

  // Throws ModelError naming the first violated invariant.
  void validate() const;
  // Drops nodes unreachable from the initial support and renumbers.
  void prune_unreachable();

  friend bool operator==(const StochasticFsc&, const StochasticFsc&) = default;

 private:
  std::size_t edge_index(int n, ActionIndex a, ObsIndex o) const {
    return (static_cast<std::size_t>(n) * num_actions_ + static_cast<std::size_t>(a)) *
               num_observations_ +
           static_cast<std::size_t>(o);
  }
  std::vector<int> reachable() const;

  std::size_t num_actions_ = 0;
  std::size_t num_observations_ = 0;
  std::vector<FscNode> nodes_;
  std::vector<Outcome> initial_;
  std::vector<std::vector<Outcome>> edges_;
};

// Disjoint union with β(n) = β_i(n) · P(i) and no cross edges. Throws
// InvalidArgument on a length mismatch, a non-distribution P or differing
// action/observation sets.
StochasticFsc union_fsc(const std::vector<StochasticFsc>& fscs, const std::vector<double>& p);

// One-node controller that always plays `action` (self-loops everywhere).
StochasticFsc constant_fsc(std::size_t num_actions, std::size_t num_observations,
                           ActionIndex action, int objective = 1);

json fsc_to_json(const StochasticFsc& fsc, bool with_beliefs = true);
StochasticFsc fsc_from_json(const json& j);
void save_fsc(const StochasticFsc& fsc, const std::string& path);
StochasticFsc load_fsc(const std::string& path);

}  // namespace coplan::fsc

#include "solver/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <unordered_map>

#include "core/errors.hpp"

namespace coplan::solver {

namespace {

std::int32_t sample_outcome(std::span<const Outcome> row, double u) {
  for (const Outcome& o : row) {
    if (u < o.prob) return o.index;
    u -= o.prob;
  }
  return row.back().index;
}

struct Node;

struct ActionStats {
  std::size_t visits = 0;
  double mean = 0.0;
  std::unordered_map<ObsIndex, std::unique_ptr<Node>> children;
};

struct Node {
  std::size_t visits = 0;
  std::vector<ActionStats> actions;
};

class Search {
 public:
  Search(const PomdpModel& m, const MctsParams& p)
      : m_(m), p_(p), rng_(p.seed), unit_(0.0, 1.0) {
    c_ = p.exploration_c;
    if (c_ < 0.0) {
      // Spread of discounted returns over the search horizon.
      const auto [lo, hi] = std::minmax_element(m.reward.begin(), m.reward.end());
      const double range = m.reward.empty() ? 1.0 : std::max(*hi - *lo, 1e-6);
      const double steps = m.discount < 1.0
                               ? (1.0 - std::pow(m.discount, p.depth + 1)) / (1.0 - m.discount)
                               : static_cast<double>(p.depth + 1);
      c_ = range * steps;
    }
  }

  QEstimates run(const Belief& b) {
    const std::size_t A = m_.num_actions();
    std::vector<StateIndex> particles;
    particles.reserve(p_.particles);
    for (std::size_t i = 0; i < std::max<std::size_t>(p_.particles, 1); ++i) {
      double u = unit_(rng_);
      StateIndex s = b.entries().back().index;
      for (const auto& e : b) {
        if (u < e.prob) {
          s = e.index;
          break;
        }
        u -= e.prob;
      }
      particles.push_back(s);
    }
    std::vector<double> immediate(A);
    for (std::size_t a = 0; a < A; ++a) {
      immediate[a] = m_.expected_reward(b, static_cast<ActionIndex>(a));
    }

    Node root;
    root.actions.resize(A);
    std::vector<double> sum(A, 0.0), sum_sq(A, 0.0);
    std::uniform_int_distribution<std::size_t> pick(0, particles.size() - 1);
    for (std::size_t n = 0; n < p_.simulations; ++n) {
      const ActionIndex a = select(root, &immediate);
      const StateIndex s = particles[pick(rng_)];
      double future = 0.0;
      if (p_.depth > 0) {
        const StateIndex s2 = sample_outcome(m_.next_states(s, a), unit_(rng_));
        const ObsIndex o = sample_outcome(m_.observations(a, s2), unit_(rng_));
        auto& child = root.actions[a].children[o];
        future = descend(child, s2, p_.depth);
      }
      ActionStats& st = root.actions[a];
      ++root.visits;
      ++st.visits;
      st.mean += (future - st.mean) / static_cast<double>(st.visits);
      sum[a] += future;
      sum_sq[a] += future * future;
    }

    QEstimates out;
    out.q.resize(A);
    out.visits.resize(A);
    out.std_error.resize(A);
    for (std::size_t a = 0; a < A; ++a) {
      const std::size_t n = root.actions[a].visits;
      out.visits[a] = n;
      out.q[a] = immediate[a] + m_.discount * (n ? root.actions[a].mean : 0.0);
      if (n > 0 && p_.depth == 0) {
        out.std_error[a] = 0.0;
        continue;
      }
      if (n < 2) {
        out.std_error[a] = std::numeric_limits<double>::infinity();
        continue;
      }
      const double mean = sum[a] / static_cast<double>(n);
      const double var =
          std::max(0.0, (sum_sq[a] - static_cast<double>(n) * mean * mean) /
                            static_cast<double>(n - 1));
      out.std_error[a] = m_.discount * std::sqrt(var / static_cast<double>(n));
    }
    return out;
  }

 private:
  // UCB1; untried actions first in index order, ties to the lowest index.
  ActionIndex select(const Node& node, const std::vector<double>* immediate) const {
    const std::size_t A = node.actions.size();
    for (std::size_t a = 0; a < A; ++a) {
      if (node.actions[a].visits == 0) return static_cast<ActionIndex>(a);
    }
    const double log_n = std::log(static_cast<double>(node.visits));
    ActionIndex best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < A; ++a) {
      const ActionStats& st = node.actions[a];
      double v = st.mean;
      if (immediate) v = (*immediate)[a] + m_.discount * st.mean;
      v += c_ * std::sqrt(log_n / static_cast<double>(st.visits));
      if (v > best_v) {
        best_v = v;
        best = static_cast<ActionIndex>(a);
      }
    }
    return best;
  }

  // Discounted return from state s with `steps` decisions left.
  double descend(std::unique_ptr<Node>& node, StateIndex s, int steps) {
    if (steps <= 0) return 0.0;
    if (!node) {
      node = std::make_unique<Node>();
      node->actions.resize(m_.num_actions());
      return rollout(s, steps);
    }
    const ActionIndex a = select(*node, nullptr);
    const double r = m_.r(s, a);
    const StateIndex s2 = sample_outcome(m_.next_states(s, a), unit_(rng_));
    double total = r;
    if (steps > 1) {
      const ObsIndex o = sample_outcome(m_.observations(a, s2), unit_(rng_));
      total += m_.discount * descend(node->actions[a].children[o], s2, steps - 1);
    }
    ActionStats& st = node->actions[a];
    ++node->visits;
    ++st.visits;
    st.mean += (total - st.mean) / static_cast<double>(st.visits);
    return total;
  }

  double rollout(StateIndex s, int steps) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(m_.num_actions()) - 1);
    double total = 0.0;
    double discount = 1.0;
    for (int d = 0; d < steps; ++d) {
      const ActionIndex a = static_cast<ActionIndex>(pick(rng_));
      total += discount * m_.r(s, a);
      s = sample_outcome(m_.next_states(s, a), unit_(rng_));
      discount *= m_.discount;
    }
    return total;
  }

  const PomdpModel& m_;
  MctsParams p_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_;
  double c_;
};

}  // namespace

QEstimates mcts_estimate(const PomdpModel& model, const Belief& b,
                         const MctsParams& params) {
  if (params.simulations == 0 || params.depth < 0) {
    throw InvalidArgument("mcts budget must be positive");
  }
  if (b.empty()) throw InvalidArgument("empty belief");
  return Search(model, params).run(b);
}

MctsParams mcts_params_from_json(const json& j, MctsParams p) {
  if (!j.is_object()) throw InvalidArgument("mcts parameters must be an object");
  try {
    p.simulations = j.value("simulations", p.simulations);
    p.depth = j.value("depth", p.depth);
    p.exploration_c = j.value("exploration_c", p.exploration_c);
    p.particles = j.value("particles", p.particles);
    p.seed = j.value("seed", p.seed);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad mcts parameters: ") + e.what());
  }
  return p;
}

json mcts_params_to_json(const MctsParams& p) {
  return {{"simulations", p.simulations},
          {"depth", p.depth},
          {"exploration_c", p.exploration_c},
          {"particles", p.particles},
          {"seed", p.seed}};
}

}  // namespace coplan::solver

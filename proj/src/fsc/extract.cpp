#include "fsc/extract.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "core/errors.hpp"
#include "fsc/human_filter.hpp"
#include "fsc/softmax.hpp"

namespace coplan::fsc {

namespace {

constexpr double kMergeSlack = 1e-12;

class Extractor {
 public:
  Extractor(solver::QEstimator& estimator, const DecPomdpModel& model, int objective_id,
            const ExtractionParams& params, std::optional<std::uint64_t> seed)
      : est_(estimator),
        m_(model),
        objective_(objective_id),
        p_(params),
        deterministic_(seed.has_value()),
        rng_(seed.value_or(0)),
        fsc_(model.num_human_actions(), model.num_human_observations()) {}

  StochasticFsc run() {
    open_.push_back(create(m_.initial_belief, 1.0));
    while (!open_.empty()) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < open_.size(); ++i) {
        if (priority(open_[i]) > priority(open_[best])) best = i;
      }
      // Ties keep the earliest position; open_ stays sorted by id.
      const int n = open_[best];
      open_.erase(open_.begin() + static_cast<long>(best));
      expand(n);
    }
    fsc_.set_initial({{0, 1.0}});
    return std::move(fsc_);
  }

 private:
  double priority(int n) const {
    const FscNode& node = fsc_.node(n);
    return node.weight * node.value;
  }

  int create(const Belief& b, double weight) {
    const std::vector<double> q = est_.q_values(b);
    if (q.size() != m_.num_joint_actions()) {
      throw InvalidArgument("estimator returned the wrong number of joint actions");
    }
    const std::vector<double> joint = softmax_joint(q, p_.temperature);
    FscNode node;
    std::vector<double> sigma_h =
        marginal_human(joint, m_.num_robot_actions(), p_.action_threshold);
    node.robot_rule = marginal_robot(joint, m_.num_robot_actions());
    node.belief = b;
    node.weight = weight;
    node.value = *std::max_element(q.begin(), q.end());
    node.objective = objective_;
    if (deterministic_) {
      std::discrete_distribution<int> pick(sigma_h.begin(), sigma_h.end());
      node.action_dist.assign(sigma_h.size(), 0.0);
      node.action_dist[pick(rng_)] = 1.0;
    } else {
      node.action_dist = sigma_h;
    }
    sigma_h_.push_back(std::move(sigma_h));
    const int id = fsc_.add_node(std::move(node));
    return id;
  }

  // Closest node by L1 distance, ties to the lowest index.
  std::pair<int, double> closest(const Belief& b) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < fsc_.num_nodes(); ++i) {
      const double d = fsc_.node(static_cast<int>(i)).belief.l1_distance(b);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    return {best, best_d};
  }

  void expand(int n) {
    const std::size_t A = m_.num_human_actions();
    const std::size_t O = m_.num_human_observations();
    // Copies: create() may reallocate the node storage.
    const Belief b = fsc_.node(n).belief;
    const std::vector<double> sigma_r = fsc_.node(n).robot_rule;
    const std::vector<double> psi = fsc_.node(n).action_dist;
    const std::vector<double> sigma_h = sigma_h_[n];
    const double w = fsc_.node(n).weight;
    for (std::size_t a = 0; a < A; ++a) {
      const ActionIndex a_h = static_cast<ActionIndex>(a);
      std::vector<HumanSuccessor> succ;
      if (psi[a] > 0.0) succ = human_successors(m_, b, a_h, sigma_r);
      std::size_t k = 0;
      for (std::size_t o = 0; o < O; ++o) {
        const ObsIndex o_h = static_cast<ObsIndex>(o);
        while (k < succ.size() && succ[k].observation < o_h) ++k;
        if (k == succ.size() || succ[k].observation != o_h || succ[k].likelihood <= 0.0) {
          fsc_.set_edge(n, a_h, o_h, n);
          continue;
        }
        const Belief& next = succ[k].belief;
        const double w_next = w * sigma_h[a] * succ[k].likelihood;
        const auto [near, dist] = closest(next);
        if (dist > p_.epsilon + kMergeSlack && fsc_.num_nodes() < p_.max_nodes) {
          const int id = create(next, w_next);
          open_.push_back(id);
          fsc_.set_edge(n, a_h, o_h, id);
        } else {
          fsc_.node(near).weight += w_next;
          fsc_.set_edge(n, a_h, o_h, near);
        }
      }
    }
  }

  solver::QEstimator& est_;
  const DecPomdpModel& m_;
  int objective_;
  ExtractionParams p_;
  bool deterministic_;
  std::mt19937_64 rng_;
  StochasticFsc fsc_;
  std::vector<std::vector<double>> sigma_h_;  // pruned human marginal per node
  std::vector<int> open_;
};

}  // namespace

void ExtractionParams::validate() const {
  if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
  if (max_nodes < 1) throw InvalidArgument("max_nodes must be >= 1");
  if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be >= 0");
  if (!(action_threshold >= 0.0 && action_threshold < 1.0)) {
    throw InvalidArgument("action threshold must lie in [0, 1)");
  }
}

StochasticFsc extract_stochastic_fsc(solver::QEstimator& estimator, const DecPomdpModel& model,
                                     int objective_id, const ExtractionParams& params) {
  params.validate();
  model.reward_table(objective_id);
  return Extractor(estimator, model, objective_id, params, std::nullopt).run();
}

StochasticFsc sample_deterministic_fsc(solver::QEstimator& estimator,
                                       const DecPomdpModel& model, int objective_id,
                                       const ExtractionParams& params, std::uint64_t seed) {
  params.validate();
  model.reward_table(objective_id);
  return Extractor(estimator, model, objective_id, params, seed).run();
}

ExtractionParams extraction_params_from_json(const json& j, ExtractionParams p) {
  if (!j.is_object()) throw InvalidArgument("extraction parameters must be an object");
  try {
    p.temperature = j.value("temperature", p.temperature);
    p.max_nodes = j.value("max_nodes", p.max_nodes);
    p.epsilon = j.value("epsilon", p.epsilon);
    p.action_threshold = j.value("action_threshold", p.action_threshold);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad extraction parameters: ") + e.what());
  }
  p.validate();
  return p;
}

json extraction_params_to_json(const ExtractionParams& p) {
  return {{"temperature", p.temperature},
          {"max_nodes", p.max_nodes},
          {"epsilon", p.epsilon},
          {"action_threshold", p.action_threshold}};
}

}  // namespace coplan::fsc

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "core/errors.hpp"
#include "core/grid_task.hpp"
#include "fsc/evaluate.hpp"
#include "fsc/extract.hpp"
#include "fsc/fsc.hpp"
#include "fsc/human_filter.hpp"
#include "fsc/softmax.hpp"
#include "solver/estimator.hpp"
#include "solver/exact_oracle.hpp"
#include "solver/pbvi.hpp"
#include "support/models.hpp"
#include "support/oracles.hpp"

using namespace coplan;
using namespace coplan::fsc;

namespace {

// Q ≡ 0: every joint action is optimal, so T=0 rules are uniform.
class ZeroEstimator : public solver::QEstimator {
 public:
  explicit ZeroEstimator(std::size_t actions) : actions_(actions) {}
  std::vector<double> q_values(const Belief&) override { return std::vector<double>(actions_); }

 private:
  std::size_t actions_;
};

// Time-indexed toy: states (t, x) for t < 3 plus an absorbing end state. The
// human's action flips x with probability 0.8 and it observes x' with 70%
// accuracy; the robot has one action and sees nothing.
DecPomdpModel make_layered_toy() {
  DecPomdpModel m;
  const int kEnd = 6;
  for (int t = 0; t < 3; ++t) {
    for (int x = 0; x < 2; ++x) m.state_names.push_back("t" + std::to_string(t) + "x" + std::to_string(x));
  }
  m.state_names.push_back("end");
  m.human = {"human", {"keep", "flip"}, {"zero", "one"}};
  m.robot = {"robot", {"wait"}, {"none"}};
  std::vector<Triplet> tr;
  std::vector<Triplet> ob;
  for (int s = 0; s < 7; ++s) {
    for (int a = 0; a < 2; ++a) {
      const std::size_t row = static_cast<std::size_t>(s) * 2 + a;
      if (s == kEnd || s / 2 == 2) {
        tr.push_back({row, kEnd, 1.0});
        continue;
      }
      const int t = s / 2;
      const int x = s % 2;
      const int flipped = a == 1 ? 1 - x : x;
      const double p_flip = a == 1 ? 0.8 : 1.0;
      tr.push_back({row, (t + 1) * 2 + flipped, p_flip});
      if (p_flip < 1.0) tr.push_back({row, (t + 1) * 2 + x, 1.0 - p_flip});
    }
  }
  for (int a = 0; a < 2; ++a) {
    for (int s2 = 0; s2 < 7; ++s2) {
      const std::size_t row = static_cast<std::size_t>(a) * 7 + s2;
      if (s2 == kEnd) {
        ob.push_back({row, 0, 1.0});
        continue;
      }
      const int x = s2 % 2;
      ob.push_back({row, x, 0.7});
      ob.push_back({row, 1 - x, 0.3});
    }
  }
  m.transition = SparseKernel::from_triplets(14, tr);
  m.observation = SparseKernel::from_triplets(14, ob);
  m.rewards = {{1, "zero", std::vector<double>(14, 0.0)}};
  m.initial_belief = Belief::uniform_over({0, 1});
  m.discount = 0.95;
  return m;
}

std::vector<double> dense(const Belief& b, std::size_t n) { return b.to_dense(n); }

}  // namespace

// Softmax

TEST(Softmax, SymmetricPair) {
  const auto p = softmax_joint({1.0, 1.0}, 1.0);
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_NEAR(p[1], 0.5, 1e-15);
}

TEST(Softmax, AnalyticLogThree) {
  const auto p = softmax_joint({0.0, std::log(3.0)}, 1.0);
  EXPECT_NEAR(p[0], 0.25, 1e-12);
  EXPECT_NEAR(p[1], 0.75, 1e-12);
}

TEST(Softmax, ZeroTemperatureIsUniformOverArgmax) {
  const auto p = softmax_joint({5.0, 3.0, 5.0}, 0.0);
  EXPECT_EQ(p, (std::vector<double>{0.5, 0.0, 0.5}));
  // Ties within 1e-9 count as argmax.
  const auto q = softmax_joint({1.0, 1.0 - 1e-10, 0.0}, 0.0);
  EXPECT_NEAR(q[0], 0.5, 1e-15);
  EXPECT_NEAR(q[1], 0.5, 1e-15);
}

TEST(Softmax, NormalizedAndStableForLargeValues) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> q(49);
    for (auto& v : q) v = u(rng);
    const double temp = std::exp(std::uniform_real_distribution<double>(-5, 5)(rng));
    const auto p = softmax_joint(q, temp);
    double total = 0.0;
    for (double v : p) {
      ASSERT_TRUE(std::isfinite(v));
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Softmax, HomogeneityAndArgmaxInvariance) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> q(6);
    for (auto& v : q) v = u(rng);
    const double temp = 0.1 + std::abs(u(rng)) / 10.0;
    const double c = 0.5 + std::abs(u(rng));
    const double d = u(rng);
    std::vector<double> scaled = q;
    for (auto& v : scaled) v = c * v + d;
    const auto p = softmax_joint(q, temp);
    const auto ps = softmax_joint(scaled, c * temp);
    for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NEAR(p[i], ps[i], 1e-9);
    EXPECT_EQ(std::max_element(p.begin(), p.end()) - p.begin(),
              std::max_element(ps.begin(), ps.end()) - ps.begin());
  }
}

TEST(Softmax, InvalidInputsRejected) {
  EXPECT_THROW(softmax_joint({}, 1.0), InvalidArgument);
  EXPECT_THROW(softmax_joint({1.0}, -1.0), InvalidArgument);
  EXPECT_THROW(softmax_joint({NAN, 1.0}, 1.0), InvalidArgument);
}

// Marginals and pruning

TEST(Marginals, ProductFactorizes) {
  const std::vector<double> p = {0.2, 0.3, 0.5};
  const std::vector<double> q = {0.6, 0.4};
  std::vector<double> joint;
  for (double a : p) {
    for (double b : q) joint.push_back(a * b);
  }
  const auto mh = marginal_human_raw(joint, 2);
  const auto mr = marginal_robot(joint, 2);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(mh[i], p[i], 1e-15);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(mr[i], q[i], 1e-15);
}

TEST(Marginals, UniformJointGivesUniformHuman) {
  const auto mh = marginal_human(std::vector<double>(49, 1.0 / 49), 7, 0.1);
  for (double v : mh) EXPECT_NEAR(v, 1.0 / 7, 1e-12);
}

TEST(Marginals, ThresholdPrunesOnlyHumanSide) {
  const auto pruned = prune_actions({0.05, 0.95}, 0.1);
  EXPECT_EQ(pruned, (std::vector<double>{0.0, 1.0}));
  // Joint with human marginal (0.05, 0.95) and robot marginal (0.5, 0.5).
  const std::vector<double> joint = {0.025, 0.025, 0.475, 0.475};
  EXPECT_EQ(marginal_human(joint, 2, 0.1), (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(marginal_robot(joint, 2), (std::vector<double>{0.5, 0.5}));
}

TEST(Marginals, EverythingPrunedThrows) {
  EXPECT_THROW(prune_actions({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.5), AllActionsPruned);
}

// Human-side filtering

TEST(HumanFilter, DegenerateRobotMatchesSingleAgentFilter) {
  std::mt19937_64 rng(3);
  DecPomdpModel m = oracle::random_dec_pomdp(rng, 5, 3, 1, 5, 1);
  // The human observes the next state exactly.
  std::vector<Triplet> o;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t s2 = 0; s2 < 5; ++s2) o.push_back({a * 5 + s2, static_cast<std::int32_t>(s2), 1.0});
  }
  m.observation = SparseKernel::from_triplets(15, o);
  const PomdpModel single = to_mpomdp(m, 1);
  const Belief b = m.initial_belief;
  for (ActionIndex a = 0; a < 3; ++a) {
    for (ObsIndex z = 0; z < 5; ++z) {
      if (observation_probability(single, b, a, z) <= 0) continue;
      const Belief expected = belief_update(single, b, a, z);
      const Belief got = human_belief_update(m, b, a, z, {1.0});
      EXPECT_LE(got.l1_distance(expected), 1e-12);
    }
  }
}

TEST(HumanFilter, MatchesJointFilterEnumeration) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const DecPomdpModel m = oracle::random_dec_pomdp(rng, 3 + trial % 6, 2 + trial % 2, 2, 2 + trial % 3, 2);
    const std::size_t ns = m.num_states();
    const Belief b = Belief::from_dense(oracle::random_distribution(rng, ns, 0.2));
    const auto sigma_h = oracle::random_distribution(rng, m.num_human_actions());
    const auto sigma_r = oracle::random_distribution(rng, m.num_robot_actions());
    double total = 0.0;
    for (ActionIndex ah = 0; ah < static_cast<ActionIndex>(m.num_human_actions()); ++ah) {
      for (ObsIndex oh = 0; oh < static_cast<ObsIndex>(m.num_human_observations()); ++oh) {
        const auto raw = oracle::joint_filter(m, dense(b, ns), ah, oh, sigma_h, sigma_r);
        double mass = 0.0;
        for (double v : raw) mass += v;
        const double p = history_probability(m, b, ah, oh, sigma_h, sigma_r);
        EXPECT_NEAR(p, mass, 1e-12);
        total += p;
        if (mass <= 0.0) {
          EXPECT_THROW(human_belief_update(m, b, ah, oh, sigma_r), ZeroProbabilityObservation);
          continue;
        }
        const auto got = dense(human_belief_update(m, b, ah, oh, sigma_r), ns);
        double l1 = 0.0;
        for (std::size_t s = 0; s < ns; ++s) l1 += std::abs(got[s] - raw[s] / mass);
        EXPECT_LE(l1, 1e-9);
      }
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(HumanFilter, ZeroHumanProbabilityAnnihilates) {
  std::mt19937_64 rng(9);
  const DecPomdpModel m = oracle::random_dec_pomdp(rng, 4, 2, 2, 2, 2);
  EXPECT_EQ(history_probability(m, m.initial_belief, 0, 0, {0.0, 1.0}, {0.5, 0.5}), 0.0);
}

TEST(HumanFilter, HistoryProbabilityMatchesSampling) {
  std::mt19937_64 rng(21);
  const DecPomdpModel m = oracle::random_dec_pomdp(rng, 4, 2, 2, 2, 2);
  const std::vector<double> sigma_h = {0.3, 0.7};
  const std::vector<double> sigma_r = {0.6, 0.4};
  const std::size_t n = 1000000;
  std::vector<double> counts(4, 0.0);
  std::discrete_distribution<int> pick_h(sigma_h.begin(), sigma_h.end());
  std::discrete_distribution<int> pick_r(sigma_r.begin(), sigma_r.end());
  const auto b0 = dense(m.initial_belief, 4);
  std::discrete_distribution<int> pick_s(b0.begin(), b0.end());
  auto draw = [&](std::span<const Outcome> row) {
    double u = std::uniform_real_distribution<double>(0, 1)(rng);
    for (const Outcome& e : row) {
      if ((u -= e.prob) <= 0) return e.index;
    }
    return row.back().index;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const int s = pick_s(rng);
    const int ah = pick_h(rng);
    const ActionIndex a = m.joint_action(ah, pick_r(rng));
    const StateIndex s2 = draw(m.next_states(s, a));
    const ObsIndex z = draw(m.observations(a, s2));
    counts[ah * 2 + m.human_observation(z)] += 1;
  }
  for (ActionIndex ah = 0; ah < 2; ++ah) {
    for (ObsIndex oh = 0; oh < 2; ++oh) {
      const double p = history_probability(m, m.initial_belief, ah, oh, sigma_h, sigma_r);
      const double freq = counts[ah * 2 + oh] / n;
      const double sigma = std::sqrt(p * (1 - p) / n);
      EXPECT_LE(std::abs(freq - p), 3 * sigma + 1e-12) << ah << "," << oh;
    }
  }
}

// Controllers

TEST(Fsc, DepthOfSingleNodeAndChain) {
  EXPECT_EQ(constant_fsc(2, 2, 0).depth(), 0);
  for (int k = 1; k <= 6; ++k) {
    StochasticFsc chain(1, 1);
    for (int n = 0; n < k; ++n) chain.add_node({{1.0}});
    for (int n = 0; n < k; ++n) chain.set_edge(n, 0, 0, std::min(n + 1, k - 1));
    chain.set_initial({{0, 1.0}});
    chain.validate();
    EXPECT_EQ(chain.depth(), k - 1);
  }
}

TEST(Fsc, StepWithoutEdgeIsStructuralError) {
  StochasticFsc f(2, 1);
  f.add_node({{1.0, 0.0}});
  f.set_edge(0, 0, 0, 0);
  f.set_initial({{0, 1.0}});
  std::mt19937_64 rng(1);
  EXPECT_EQ(f.step(0, 0, 0, rng), 0);
  EXPECT_THROW(f.step(0, 1, 0, rng), StateError);
}

TEST(Fsc, JsonRoundTrip) {
  std::mt19937_64 rng(2);
  StochasticFsc f = oracle::random_fsc(rng, 5, 3, 2, 2);
  f.node(1).belief = Belief::uniform(4);
  f.node(1).weight = 0.25;
  EXPECT_EQ(fsc_from_json(fsc_to_json(f)), f);
  const json j = fsc_to_json(f);
  EXPECT_TRUE(j.contains("nodes"));
  EXPECT_TRUE(j.contains("initial"));
  EXPECT_TRUE(j.contains("edges"));
}

TEST(Union, SingleControllerIsIdentity) {
  std::mt19937_64 rng(4);
  const StochasticFsc f = oracle::random_fsc(rng, 4, 2, 2);
  const StochasticFsc u = union_fsc({f}, {1.0});
  ASSERT_EQ(u.num_nodes(), f.num_nodes());
  EXPECT_EQ(oracle::action_sequence_distribution(u, 0, 1),
            oracle::action_sequence_distribution(f, 0, 1));
  for (std::size_t n = 0; n < f.num_nodes(); ++n) {
    EXPECT_EQ(u.node(static_cast<int>(n)).action_dist, f.node(static_cast<int>(n)).action_dist);
  }
}

TEST(Union, SizesInitialMassAndNoCrossEdges) {
  std::mt19937_64 rng(6);
  const StochasticFsc a = oracle::random_fsc(rng, 24, 3, 2, 1);
  const StochasticFsc b = oracle::random_fsc(rng, 23, 3, 2, 2);
  const StochasticFsc u = union_fsc({a, b}, {0.5, 0.5});
  ASSERT_EQ(u.num_nodes(), 47u);
  double beta = 0.0;
  for (const Outcome& o : u.initial()) beta += o.prob;
  EXPECT_NEAR(beta, 1.0, 1e-12);
  for (int n = 0; n < 47; ++n) {
    const int side = n < 24 ? 0 : 1;
    EXPECT_EQ(u.node(n).parent, side);
    EXPECT_EQ(u.node(n).objective, side + 1);
    for (ActionIndex act = 0; act < 3; ++act) {
      for (ObsIndex o = 0; o < 2; ++o) {
        for (const Outcome& e : u.successors(n, act, o)) EXPECT_EQ(e.index < 24 ? 0 : 1, side);
      }
    }
  }
}

TEST(Union, InvalidMixturesRejected) {
  std::mt19937_64 rng(8);
  const StochasticFsc a = oracle::random_fsc(rng, 2, 2, 2);
  EXPECT_THROW(union_fsc({a, a}, {1.0}), InvalidArgument);
  EXPECT_THROW(union_fsc({a, a}, {0.7, 0.7}), InvalidArgument);
  EXPECT_THROW(union_fsc({a, oracle::random_fsc(rng, 2, 3, 2)}, {0.5, 0.5}), InvalidArgument);
}

TEST(Union, ActionSequencesAreTheMixture) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t k = 2 + trial % 3;
    std::vector<StochasticFsc> parts;
    for (std::size_t i = 0; i < k; ++i) parts.push_back(oracle::random_fsc(rng, 1 + (trial + i) % 4, 3, 2));
    const auto p = oracle::random_distribution(rng, k);
    const StochasticFsc u = union_fsc(parts, p);
    for (ObsIndex o1 = 0; o1 < 2; ++o1) {
      for (ObsIndex o2 = 0; o2 < 2; ++o2) {
        std::map<std::vector<int>, double> mix;
        for (std::size_t i = 0; i < k; ++i) {
          for (const auto& [seq, q] : oracle::action_sequence_distribution(parts[i], o1, o2)) {
            mix[seq] += p[i] * q;
          }
        }
        const auto got = oracle::action_sequence_distribution(u, o1, o2);
        double l1 = 0.0;
        for (const auto& [seq, q] : mix) l1 += std::abs(q - (got.count(seq) ? got.at(seq) : 0.0));
        for (const auto& [seq, q] : got) {
          if (!mix.count(seq)) l1 += q;
        }
        EXPECT_LE(l1, 1e-9);
      }
    }
  }
}

// Extraction

TEST(Extraction, SingleNodeBudgetGivesSelfLoops) {
  const DecPomdpModel m = fixtures::make_tiger_dec();
  const PomdpModel mp = to_mpomdp(m, 1);
  solver::ExactOracleEstimator est(mp, 4);
  ExtractionParams p;
  p.temperature = 0.0;
  p.max_nodes = 1;
  const StochasticFsc f = extract_stochastic_fsc(est, m, 1, p);
  ASSERT_EQ(f.num_nodes(), 1u);
  for (ActionIndex a = 0; a < 3; ++a) {
    for (ObsIndex o = 0; o < 2; ++o) {
      const auto next = f.successors(0, a, o);
      ASSERT_EQ(next.size(), 1u);
      EXPECT_EQ(next[0].index, 0);
    }
  }
}

TEST(Extraction, TigerZeroTemperatureIsNearOptimal) {
  const DecPomdpModel m = fixtures::make_tiger_dec();
  const PomdpModel mp = to_mpomdp(m, 1);
  solver::ExactOracleEstimator est(mp, 8);
  ExtractionParams p;
  p.temperature = 0.0;
  p.max_nodes = 1000;
  p.epsilon = 1e-6;
  const StochasticFsc f = extract_stochastic_fsc(est, m, 1, p);
  f.validate();
  const PomdpModel tiger = fixtures::make_tiger();
  PolicyValueOptions opt;
  opt.horizon = 200;
  opt.discount = tiger.discount;
  const PolicyValue v = fsc_policy_value(tiger, f, opt);
  ASSERT_TRUE(v.exact);
  solver::ExactOracle exact(tiger, 200, 1e300);
  const double optimum = exact.value(tiger.initial_belief);
  EXPECT_LE(std::abs(v.value - optimum), 0.02 * std::abs(optimum));
}

TEST(Extraction, TotalAndBoundedOnRandomModels) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const DecPomdpModel m = oracle::random_dec_pomdp(rng, 5, 3, 2, 3, 2);
    const PomdpModel mp = to_mpomdp(m, 1);
    solver::ExactOracleEstimator est(mp, 2);
    ExtractionParams p;
    p.temperature = 0.5;
    p.max_nodes = 15;
    p.epsilon = 0.05;
    p.action_threshold = 0.1;
    const StochasticFsc f = extract_stochastic_fsc(est, m, 1, p);
    EXPECT_NO_THROW(f.validate());
    EXPECT_LE(f.num_nodes(), 15u);
    for (std::size_t n = 0; n < f.num_nodes(); ++n) {
      for (ActionIndex a = 0; a < 3; ++a) {
        for (ObsIndex o = 0; o < 3; ++o) {
          // Every (a_H, o_H) pair has exactly one outgoing entry.
          ASSERT_EQ(f.successors(static_cast<int>(n), a, o).size(), 1u);
          EXPECT_EQ(f.successors(static_cast<int>(n), a, o)[0].prob, 1.0);
        }
      }
      double psi = 0.0;
      for (double v : f.node(static_cast<int>(n)).action_dist) {
        EXPECT_TRUE(v == 0.0 || v >= 0.1 - 1e-12);
        psi += v;
      }
      EXPECT_NEAR(psi, 1.0, 1e-12);
    }
  }
}

TEST(Extraction, ZeroEpsilonBuildsTheFullBeliefTree) {
  const DecPomdpModel m = make_layered_toy();
  ZeroEstimator est(m.num_joint_actions());
  ExtractionParams p;
  p.temperature = 0.0;
  p.max_nodes = 100000;
  p.epsilon = 0.0;
  p.action_threshold = 0.0;
  const StochasticFsc f = extract_stochastic_fsc(est, m, 1, p);
  // Independent breadth-first enumeration of distinct reachable beliefs.
  std::vector<Belief> seen = {m.initial_belief};
  for (std::size_t i = 0; i < seen.size(); ++i) {
    for (ActionIndex a = 0; a < 2; ++a) {
      for (ObsIndex o = 0; o < 2; ++o) {
        if (history_probability(m, seen[i], a, o, {0.5, 0.5}, {1.0}) <= 0) continue;
        const Belief next = human_belief_update(m, seen[i], a, o, {1.0});
        bool known = false;
        for (const Belief& b : seen) known = known || b.l1_distance(next) <= 1e-12;
        if (!known) seen.push_back(next);
      }
    }
  }
  EXPECT_GT(seen.size(), 6u);
  EXPECT_EQ(f.num_nodes(), seen.size());
}

TEST(Extraction, DeterministicSamplingMatchesUniqueOptimum) {
  const DecPomdpModel m = fixtures::make_tiger_dec();
  const PomdpModel mp = to_mpomdp(m, 1);
  ExtractionParams p;
  p.temperature = 0.0;
  p.max_nodes = 200;
  p.epsilon = 1e-6;
  solver::ExactOracleEstimator e1(mp, 6);
  const StochasticFsc stoch = extract_stochastic_fsc(e1, m, 1, p);
  solver::ExactOracleEstimator e2(mp, 6);
  const StochasticFsc det = sample_deterministic_fsc(e2, m, 1, p, 99);
  ASSERT_EQ(det.num_nodes(), stoch.num_nodes());
  for (int n = 0; n < static_cast<int>(det.num_nodes()); ++n) {
    EXPECT_EQ(det.node(n).action_dist, stoch.node(n).action_dist);
    for (ActionIndex a = 0; a < 3; ++a) {
      if (stoch.node(n).action_dist[a] <= 0) continue;
      for (ObsIndex o = 0; o < 2; ++o) {
        ASSERT_EQ(det.successors(n, a, o).size(), stoch.successors(n, a, o).size());
        EXPECT_EQ(det.successors(n, a, o)[0].index, stoch.successors(n, a, o)[0].index);
      }
    }
  }
}

TEST(Extraction, DeterministicSamplingIsSeeded) {
  std::mt19937_64 rng(14);
  const DecPomdpModel m = oracle::random_dec_pomdp(rng, 5, 3, 2, 3, 2);
  const PomdpModel mp = to_mpomdp(m, 1);
  ExtractionParams p;
  p.temperature = 1.0;
  p.max_nodes = 20;
  p.epsilon = 0.05;
  p.action_threshold = 0.0;
  solver::ExactOracleEstimator e1(mp, 2);
  solver::ExactOracleEstimator e2(mp, 2);
  const StochasticFsc a = sample_deterministic_fsc(e1, m, 1, p, 5);
  const StochasticFsc b = sample_deterministic_fsc(e2, m, 1, p, 5);
  EXPECT_EQ(a, b);
  for (const FscNode& n : a.nodes()) {
    EXPECT_EQ(std::count(n.action_dist.begin(), n.action_dist.end(), 1.0), 1);
  }
}

TEST(Extraction, ParamsValidated) {
  ExtractionParams p;
  p.action_threshold = 1.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = {};
  p.max_nodes = 0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = {};
  p.temperature = -0.1;
  EXPECT_THROW(p.validate(), InvalidArgument);
  EXPECT_THROW(extraction_params_from_json(json{{"epsilon", -1.0}}), InvalidArgument);
  const ExtractionParams q = extraction_params_from_json(json{{"temperature", 0.5}, {"max_nodes", 42}});
  EXPECT_EQ(q.temperature, 0.5);
  EXPECT_EQ(q.max_nodes, 42u);
  EXPECT_EQ(extraction_params_from_json(extraction_params_to_json(q)).max_nodes, 42u);
}

TEST(Extraction, GridControllersAreTotal) {
  const DecPomdpModel m = build_grid_task({});
  const PomdpModel mp = to_mpomdp(m, 1);
  solver::PbviParams sp;
  sp.belief_points = 300;
  const auto solved = solver::pbvi_solve(mp, sp);
  solver::AlphaLookaheadEstimator est(mp, solved.policy);
  ExtractionParams p;
  p.temperature = 0.5;
  p.max_nodes = 40;
  p.epsilon = 0.1;
  const StochasticFsc f = extract_stochastic_fsc(est, m, 1, p);
  EXPECT_NO_THROW(f.validate());
  EXPECT_LE(f.num_nodes(), 40u);
  EXPECT_GT(f.depth(), 0);
  for (const FscNode& n : f.nodes()) EXPECT_EQ(n.objective, 1);
}

// Policy evaluation

TEST(PolicyValue, ZeroRewardIsZero) {
  std::mt19937_64 rng(15);
  DecPomdpModel m = oracle::random_dec_pomdp(rng, 4, 2, 2, 2, 2);
  m.rewards[0].values.assign(m.rewards[0].values.size(), 0.0);
  PolicyValueOptions opt;
  const auto v = fsc_policy_value(m, oracle::random_fsc(rng, 3, 2, 2), oracle::random_fsc(rng, 2, 2, 2), opt);
  EXPECT_EQ(v.value, 0.0);
}

TEST(PolicyValue, DeterministicRolloutToAbsorbingGoal) {
  // Chain 0 -> 1 -> 2 (goal, absorbing, reward-free). Moving costs 2 and the
  // step into the goal pays 100.
  PomdpModel p;
  p.state_names = {"a", "b", "goal"};
  p.action_names = {"move"};
  p.observation_names = {"none"};
  p.transition = SparseKernel::from_triplets(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 2, 1.0}});
  p.observation = SparseKernel::from_triplets(3, {{0, 0, 1.0}, {1, 0, 1.0}, {2, 0, 1.0}});
  p.reward = {-2.0, 98.0, 0.0};
  p.initial_belief = Belief::dirac(0);
  p.discount = 1.0;
  PolicyValueOptions opt;
  opt.horizon = 30;
  const auto v = fsc_policy_value(p, constant_fsc(1, 1, 0), opt);
  EXPECT_TRUE(v.exact);
  EXPECT_DOUBLE_EQ(v.value, 100.0 - 2.0 * 2);
}

TEST(PolicyValue, ExactAgreesWithMonteCarlo) {
  std::mt19937_64 rng(16);
  const DecPomdpModel m = oracle::random_dec_pomdp(rng, 4, 2, 2, 2, 2);
  const StochasticFsc h = oracle::random_fsc(rng, 3, 2, 2);
  const StochasticFsc r = oracle::random_fsc(rng, 2, 2, 2);
  PolicyValueOptions opt;
  opt.horizon = 8;
  opt.discount = 0.9;
  const auto exact = fsc_policy_value(m, h, r, opt);
  ASSERT_TRUE(exact.exact);
  opt.force_monte_carlo = true;
  opt.episodes = 1000000;
  opt.seed = 3;
  const auto mc = fsc_policy_value(m, h, r, opt);
  EXPECT_FALSE(mc.exact);
  EXPECT_LE(std::abs(mc.value - exact.value), 3 * mc.std_error);
}

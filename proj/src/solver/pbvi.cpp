#include "solver/pbvi.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "core/errors.hpp"

namespace coplan::solver {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kImproveTol = 1e-12;

struct SliceEntry {
  ObsIndex obs;
  StateIndex state;
  double weight;
};

// Successor mass of a belief (or of all states) under one action, grouped
// by observation.
struct Slices {
  std::vector<SliceEntry> entries;  // sorted by (obs, state)
  std::vector<std::size_t> group_begin;  // one past the last group appended
};

void sort_and_group(std::vector<SliceEntry>& entries, Slices& out) {
  std::sort(entries.begin(), entries.end(), [](const SliceEntry& a, const SliceEntry& b) {
    return a.obs != b.obs ? a.obs < b.obs : a.state < b.state;
  });
  out.entries.clear();
  out.group_begin.clear();
  for (const SliceEntry& e : entries) {
    if (!out.entries.empty() && out.entries.back().obs == e.obs &&
        out.entries.back().state == e.state) {
      out.entries.back().weight += e.weight;
      continue;
    }
    if (out.entries.empty() || out.entries.back().obs != e.obs) {
      out.group_begin.push_back(out.entries.size());
    }
    out.entries.push_back(e);
  }
  out.group_begin.push_back(out.entries.size());
}

struct BackupResult {
  double value = -std::numeric_limits<double>::infinity();
  ActionIndex action = 0;
  std::vector<std::pair<ObsIndex, int>> overrides;  // (o, vector) differing from default
};

class PointBasedSolver {
 public:
  PointBasedSolver(const PomdpModel& model, const PbviParams& params)
      : m_(model), p_(params), rng_(params.seed) {
    start_ = Clock::now();
  }

  PbviResult run() {
    init_blind();
    build_all_state_slices();
    const std::size_t bfs_cap =
        p_.breadth_first_points == 0 ? p_.belief_points
                                     : std::min(p_.breadth_first_points, p_.belief_points);
    collect_breadth_first(bfs_cap);

    PbviResult result;
    for (std::size_t round = 0; round <= p_.expansion_rounds; ++round) {
      if (round > 0) {
        if (points_.size() >= p_.belief_points || out_of_time()) break;
        expand();
      }
      result.converged = false;
      for (std::size_t it = 0; it < p_.iterations; ++it) {
        double improvement = iterate(p_.schedule);
        ++result.iterations;
        // A Perseus step can cover every point with one barely better vector,
        // so a small improvement is confirmed with a full synchronous step.
        if (improvement < p_.epsilon && p_.schedule == BackupSchedule::Perseus) {
          improvement = iterate(BackupSchedule::Synchronous);
          ++result.iterations;
        }
        if (improvement < p_.epsilon) {
          result.converged = true;
          break;
        }
        if (out_of_time()) break;
      }
    }
    refresh_caches();
    result.residual = bellman_residual();
    result.belief_points = points_.size();
    result.policy.vectors = gamma_;
    result.policy.discount = m_.discount;
    result.policy.num_states = m_.num_states();
    result.policy.method = "pbvi";
    result.policy.residual = result.residual;
    result.policy.seed = p_.seed;
    return result;
  }

 private:
  bool out_of_time() const {
    if (p_.time_limit_seconds <= 0.0) return false;
    return std::chrono::duration<double>(Clock::now() - start_).count() >
           p_.time_limit_seconds;
  }

  // Value of the blind policy "always a", a lower bound on V*.
  void init_blind() {
    const std::size_t S = m_.num_states();
    const std::size_t A = m_.num_actions();
    double r_min = std::numeric_limits<double>::infinity();
    for (double r : m_.reward) r_min = std::min(r_min, r);
    if (m_.reward.empty()) r_min = 0.0;
    const double start = m_.discount < 1.0 ? r_min / (1.0 - m_.discount) : r_min;
    for (std::size_t a = 0; a < A; ++a) {
      std::vector<double> v(S, start);
      std::vector<double> next(S);
      for (int it = 0; it < 1000; ++it) {
        double delta = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
          double x = m_.r(static_cast<StateIndex>(s), static_cast<ActionIndex>(a));
          for (const Outcome& t : m_.next_states(static_cast<StateIndex>(s),
                                                 static_cast<ActionIndex>(a))) {
            x += m_.discount * t.prob * v[t.index];
          }
          next[s] = x;
          delta = std::max(delta, std::abs(x - v[s]));
        }
        v.swap(next);
        if (delta < 1e-9 * (1.0 + std::abs(start))) break;
      }
      gamma_.push_back({std::move(v), static_cast<ActionIndex>(a)});
    }
  }

  void build_all_state_slices() {
    all_slices_.resize(m_.num_actions());
    std::vector<SliceEntry> tmp;
    for (std::size_t a = 0; a < m_.num_actions(); ++a) {
      tmp.clear();
      for (std::size_t s = 0; s < m_.num_states(); ++s) {
        for (const Outcome& t :
             m_.next_states(static_cast<StateIndex>(s), static_cast<ActionIndex>(a))) {
          for (const Outcome& z : m_.observations(static_cast<ActionIndex>(a), t.index)) {
            tmp.push_back({z.index, t.index, t.prob * z.prob});
          }
        }
      }
      sort_and_group(tmp, all_slices_[a]);
    }
    default_sel_.assign(m_.num_actions(), std::vector<int>(m_.num_observations(), 0));
  }

  bool add_point(const Belief& b) {
    if (points_.size() >= p_.belief_points) return false;
    if (!seen_.insert(b.fingerprint()).second) return false;
    points_.push_back(b);
    return true;
  }

  void collect_breadth_first(std::size_t cap) {
    std::deque<std::size_t> queue;
    if (add_point(m_.initial_belief)) queue.push_back(0);
    while (!queue.empty() && points_.size() < cap) {
      const Belief b = points_[queue.front()];
      queue.pop_front();
      for (std::size_t a = 0; a < m_.num_actions() && points_.size() < cap; ++a) {
        for (auto& succ : belief_successors(m_, b, static_cast<ActionIndex>(a))) {
          if (points_.size() >= cap) break;
          if (add_point(succ.belief)) queue.push_back(points_.size() - 1);
        }
      }
    }
  }

  void expand() {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> pick_action(0, static_cast<int>(m_.num_actions()) - 1);
    AlphaVectorPolicy current;
    current.vectors = gamma_;
    current.num_states = m_.num_states();
    for (std::size_t tr = 0; tr < p_.expansion_trajectories; ++tr) {
      Belief b = m_.initial_belief;
      for (std::size_t d = 0; d < p_.expansion_depth; ++d) {
        const ActionIndex a = unit(rng_) < p_.exploration
                                  ? static_cast<ActionIndex>(pick_action(rng_))
                                  : value_of(current, b).action;
        auto succ = belief_successors(m_, b, a);
        if (succ.empty()) break;
        double u = unit(rng_);
        std::size_t k = 0;
        while (k + 1 < succ.size() && u >= succ[k].probability) {
          u -= succ[k].probability;
          ++k;
        }
        b = std::move(succ[k].belief);
        add_point(b);
        if (points_.size() >= p_.belief_points) return;
      }
    }
  }

  // best_at_[s'] and default_sel_ for the current Γ.
  void refresh_caches() {
    const std::size_t S = m_.num_states();
    best_at_.assign(S, 0);
    for (std::size_t s = 0; s < S; ++s) {
      double best = gamma_[0].values[s];
      for (std::size_t i = 1; i < gamma_.size(); ++i) {
        if (gamma_[i].values[s] > best) {
          best = gamma_[i].values[s];
          best_at_[s] = static_cast<int>(i);
        }
      }
    }
    constexpr std::size_t kCandidates = 8;
    std::vector<int> cand;
    for (std::size_t a = 0; a < m_.num_actions(); ++a) {
      const Slices& sl = all_slices_[a];
      for (std::size_t g = 0; g + 1 < sl.group_begin.size(); ++g) {
        const std::size_t lo = sl.group_begin[g];
        const std::size_t hi = sl.group_begin[g + 1];
        cand.clear();
        for (std::size_t e = lo; e < hi && cand.size() < kCandidates; ++e) {
          const int c = best_at_[sl.entries[e].state];
          if (std::find(cand.begin(), cand.end(), c) == cand.end()) cand.push_back(c);
        }
        std::sort(cand.begin(), cand.end());
        int best_i = cand[0];
        double best_v = -std::numeric_limits<double>::infinity();
        for (int c : cand) {
          double v = 0.0;
          for (std::size_t e = lo; e < hi; ++e) {
            v += sl.entries[e].weight * gamma_[c].values[sl.entries[e].state];
          }
          if (v > best_v) {
            best_v = v;
            best_i = c;
          }
        }
        default_sel_[a][sl.entries[lo].obs] = best_i;
      }
    }
  }

  BackupResult backup(const Belief& b) {
    BackupResult best;
    for (std::size_t a = 0; a < m_.num_actions(); ++a) {
      const ActionIndex act = static_cast<ActionIndex>(a);
      scratch_.clear();
      double value = 0.0;
      for (const auto& e : b) {
        value += e.prob * m_.r(e.index, act);
        for (const Outcome& t : m_.next_states(e.index, act)) {
          for (const Outcome& z : m_.observations(act, t.index)) {
            scratch_.push_back({z.index, t.index, e.prob * t.prob * z.prob});
          }
        }
      }
      sort_and_group(scratch_, slices_);
      double future = 0.0;
      overrides_.clear();
      for (std::size_t g = 0; g + 1 < slices_.group_begin.size(); ++g) {
        const std::size_t lo = slices_.group_begin[g];
        const std::size_t hi = slices_.group_begin[g + 1];
        const ObsIndex o = slices_.entries[lo].obs;
        int sel;
        double v;
        if (hi - lo == 1) {
          const SliceEntry& e = slices_.entries[lo];
          sel = best_at_[e.state];
          v = e.weight * gamma_[sel].values[e.state];
        } else {
          sel = 0;
          v = -std::numeric_limits<double>::infinity();
          for (std::size_t i = 0; i < gamma_.size(); ++i) {
            double x = 0.0;
            for (std::size_t e = lo; e < hi; ++e) {
              x += slices_.entries[e].weight * gamma_[i].values[slices_.entries[e].state];
            }
            if (x > v) {
              v = x;
              sel = static_cast<int>(i);
            }
          }
        }
        future += v;
        if (sel != default_sel_[a][o]) overrides_.emplace_back(o, sel);
      }
      value += m_.discount * future;
      if (value > best.value + kImproveTol) {
        best.value = value;
        best.action = act;
        best.overrides = overrides_;
      }
    }
    return best;
  }

  AlphaVector materialize(const BackupResult& bk) {
    const ActionIndex a = bk.action;
    std::vector<int>& sel = default_sel_[a];
    std::vector<std::pair<ObsIndex, int>> saved;
    saved.reserve(bk.overrides.size());
    for (const auto& [o, i] : bk.overrides) {
      saved.emplace_back(o, sel[o]);
      sel[o] = i;
    }
    AlphaVector alpha;
    alpha.action = a;
    alpha.values.resize(m_.num_states());
    for (std::size_t s = 0; s < m_.num_states(); ++s) {
      double v = m_.r(static_cast<StateIndex>(s), a);
      double future = 0.0;
      for (const Outcome& t : m_.next_states(static_cast<StateIndex>(s), a)) {
        for (const Outcome& z : m_.observations(a, t.index)) {
          future += t.prob * z.prob * gamma_[sel[z.index]].values[t.index];
        }
      }
      alpha.values[s] = v + m_.discount * future;
    }
    for (const auto& [o, i] : saved) sel[o] = i;
    return alpha;
  }

  static std::string signature(const BackupResult& bk) {
    std::string key(reinterpret_cast<const char*>(&bk.action), sizeof(bk.action));
    for (const auto& [o, i] : bk.overrides) {
      key.append(reinterpret_cast<const char*>(&o), sizeof(o));
      key.append(reinterpret_cast<const char*>(&i), sizeof(i));
    }
    return key;
  }

  void evaluate(const std::vector<AlphaVector>& set, std::vector<double>& values,
                std::vector<int>* argmax) const {
    values.assign(points_.size(), -std::numeric_limits<double>::infinity());
    if (argmax) argmax->assign(points_.size(), 0);
    for (std::size_t p = 0; p < points_.size(); ++p) {
      for (std::size_t i = 0; i < set.size(); ++i) {
        const double v = points_[p].dot(set[i].values);
        if (v > values[p]) {
          values[p] = v;
          if (argmax) (*argmax)[p] = static_cast<int>(i);
        }
      }
    }
  }

  // One value-iteration step over the belief set; returns the largest
  // improvement of V at any point.
  double iterate(BackupSchedule schedule) {
    std::vector<double> old_values;
    std::vector<int> old_arg;
    evaluate(gamma_, old_values, &old_arg);
    refresh_caches();

    std::vector<AlphaVector> next;
    std::unordered_map<std::string, int> index;
    if (schedule == BackupSchedule::Synchronous) {
      for (const Belief& b : points_) {
        const BackupResult bk = backup(b);
        if (index.emplace(signature(bk), static_cast<int>(next.size())).second) {
          next.push_back(materialize(bk));
        }
      }
    } else {
      std::vector<std::size_t> remaining(points_.size());
      for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
      while (!remaining.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
        const std::size_t pos = pick(rng_);
        const std::size_t i = remaining[pos];
        const BackupResult bk = backup(points_[i]);
        std::string key;
        AlphaVector alpha;
        if (bk.value >= old_values[i] - kImproveTol) {
          key = signature(bk);
          if (!index.count(key)) alpha = materialize(bk);
        } else {
          key = "old" + std::to_string(old_arg[i]);
          if (!index.count(key)) alpha = gamma_[old_arg[i]];
        }
        remaining[pos] = remaining.back();
        remaining.pop_back();
        if (!index.emplace(key, static_cast<int>(next.size())).second) continue;
        std::vector<std::size_t> keep;
        keep.reserve(remaining.size());
        for (std::size_t j : remaining) {
          if (points_[j].dot(alpha.values) < old_values[j] - kImproveTol) keep.push_back(j);
        }
        remaining.swap(keep);
        next.push_back(std::move(alpha));
      }
    }
    gamma_ = std::move(next);

    std::vector<double> new_values;
    evaluate(gamma_, new_values, nullptr);
    double improvement = 0.0;
    for (std::size_t p = 0; p < points_.size(); ++p) {
      improvement = std::max(improvement, new_values[p] - old_values[p]);
    }
    return improvement;
  }

  double bellman_residual() {
    std::vector<double> values;
    evaluate(gamma_, values, nullptr);
    double residual = 0.0;
    for (std::size_t p = 0; p < points_.size(); ++p) {
      residual = std::max(residual, std::abs(backup(points_[p]).value - values[p]));
    }
    return residual;
  }

  const PomdpModel& m_;
  PbviParams p_;
  std::mt19937_64 rng_;
  Clock::time_point start_;

  std::vector<AlphaVector> gamma_;
  std::vector<Belief> points_;
  std::unordered_set<std::uint64_t> seen_;

  std::vector<Slices> all_slices_;
  std::vector<std::vector<int>> default_sel_;
  std::vector<int> best_at_;

  std::vector<SliceEntry> scratch_;
  Slices slices_;
  std::vector<std::pair<ObsIndex, int>> overrides_;
};

}  // namespace

PbviResult pbvi_solve(const PomdpModel& model, const PbviParams& params) {
  if (params.belief_points == 0 || params.iterations == 0 || !(params.epsilon > 0.0)) {
    throw InvalidArgument("pbvi budgets must be positive");
  }
  if (model.num_actions() == 0 || model.num_states() == 0) {
    throw InvalidArgument("model has no states or actions");
  }
  return PointBasedSolver(model, params).run();
}

PbviParams pbvi_params_from_json(const json& j, PbviParams p) {
  if (!j.is_object()) throw InvalidArgument("solver parameters must be an object");
  try {
    p.belief_points = j.value("belief_points", p.belief_points);
    p.iterations = j.value("iterations", p.iterations);
    p.epsilon = j.value("epsilon", p.epsilon);
    p.seed = j.value("seed", p.seed);
    if (j.contains("schedule")) {
      const std::string s = j.at("schedule").get<std::string>();
      if (s == "perseus") {
        p.schedule = BackupSchedule::Perseus;
      } else if (s == "synchronous") {
        p.schedule = BackupSchedule::Synchronous;
      } else {
        throw InvalidArgument("unknown backup schedule: " + s);
      }
    }
    p.breadth_first_points = j.value("breadth_first_points", p.breadth_first_points);
    p.expansion_rounds = j.value("expansion_rounds", p.expansion_rounds);
    p.expansion_trajectories = j.value("expansion_trajectories", p.expansion_trajectories);
    p.expansion_depth = j.value("expansion_depth", p.expansion_depth);
    p.exploration = j.value("exploration", p.exploration);
    p.time_limit_seconds = j.value("time_limit_seconds", p.time_limit_seconds);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad solver parameters: ") + e.what());
  }
  return p;
}

json pbvi_params_to_json(const PbviParams& p) {
  return {{"belief_points", p.belief_points},
          {"iterations", p.iterations},
          {"epsilon", p.epsilon},
          {"seed", p.seed},
          {"schedule", p.schedule == BackupSchedule::Perseus ? "perseus" : "synchronous"},
          {"breadth_first_points", p.breadth_first_points},
          {"expansion_rounds", p.expansion_rounds},
          {"expansion_trajectories", p.expansion_trajectories},
          {"expansion_depth", p.expansion_depth},
          {"exploration", p.exploration},
          {"time_limit_seconds", p.time_limit_seconds}};
}

}  // namespace coplan::solver

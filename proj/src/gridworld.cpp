#include "smapf/gridworld.hpp"

#include <algorithm>
#include <cmath>

#include "smapf/social.hpp"

namespace smapf {

Env::Env(Scenario scenario, EnvConfig cfg) : scenario_(std::move(scenario)), cfg_(cfg) {
  validate(scenario_);
  if (cfg_.max_steps < 1) throw ParameterError("max_steps must be positive");
  if (cfg_.block_threshold < 0) throw ParameterError("block_threshold must be non-negative");
  if (cfg_.fov < 1 || cfg_.fov % 2 == 0) throw ParameterError("fov must be odd and positive");
  if (cfg_.fov_heuristic < 1 || cfg_.fov_heuristic % 2 == 0 || cfg_.fov_heuristic > cfg_.fov) {
    throw ParameterError("fov_heuristic must be odd and no larger than fov");
  }
  if (cfg_.svo_bins < 2) throw ParameterError("need at least two SVO bins");
  if (cfg_.goal_clamp < 1) throw ParameterError("goal_clamp must be positive");
  fields_ = distance_fields(scenario_.map, scenario_.goals, Exec::Serial);
  pos_ = scenario_.starts;
  const int n = num_agents();
  svo_bin_.assign(n, -1);
  partner_.resize(n);
  for (int i = 0; i < n; ++i) partner_[i] = i;
  occupant_.assign(map().size(), -1);
  for (int i = 0; i < n; ++i) occupant_[map().index(pos_[i])] = i;
  done_ = agents_on_goal() == n;
}

int Env::agents_on_goal() const {
  int k = 0;
  for (int i = 0; i < num_agents(); ++i) k += on_goal(i);
  return k;
}

StepOutcome Env::step(const ResolutionOutcome& resolved) {
  for (auto a : resolved.annotations) collisions_prevented_ += a != Annotation::Normal;
  return step(resolved.actions, resolved.penalized);
}

StepOutcome Env::step(std::span<const Action> actions, std::span<const char> penalized) {
  const int n = num_agents();
  if (done_) throw ContractError("step called on a terminated episode");
  if (static_cast<int>(actions.size()) != n) throw ContractError("joint action size mismatch");
  if (!penalized.empty() && static_cast<int>(penalized.size()) != n) {
    throw ContractError("penalty vector size mismatch");
  }
  if (!joint_action_safe(map(), pos_, actions)) {
    throw ContractError("joint action violates the vertex or swap condition");
  }
  StepOutcome out;
  out.actions.assign(actions.begin(), actions.end());
  for (int i = 0; i < n; ++i) occupant_[map().index(pos_[i])] = -1;
  for (int i = 0; i < n; ++i) {
    pos_[i] = smapf::step(pos_[i], actions[i]);
  }
  for (int i = 0; i < n; ++i) {
    if (occupant_[map().index(pos_[i])] != -1) throw InternalError("vertex condition broken after step");
    occupant_[map().index(pos_[i])] = i;
  }
  ++t_;
  out.blocking = blocking_counts(Exec::Serial);
  out.rewards.resize(n);
  out.on_goal.resize(n);
  for (int i = 0; i < n; ++i) {
    out.on_goal[i] = on_goal(i);
    double r = (actions[i] == Action::Idle && out.on_goal[i]) ? kGoalIdleReward : kStepCost;
    if (!penalized.empty() && penalized[i]) r += kCollisionPenalty;
    r += kBlockPenalty * out.blocking[i];
    out.rewards[i] = r;
  }
  std::vector<double> angles(n);
  for (int i = 0; i < n; ++i) angles[i] = svo_bin_[i] < 0 ? 0.0 : svo_angle(svo_bin_[i], cfg_.svo_bins);
  svo_trace_.push_back(std::move(angles));
  done_ = agents_on_goal() == n || t_ >= cfg_.max_steps;
  out.t = t_;
  out.done = done_;
  return out;
}

int Env::detect_blocking(int i) const {
  int c = 0;
  const Cell avoid = pos_[i];
  for (int j = 0; j < num_agents(); ++j) {
    if (j == i || !fields_[j].reachable(pos_[j])) continue;
    const int d = fields_[j].at(pos_[j]);
    const Cell g = scenario_.goals[j];
    int nd = kUnreachable;
    if (g != avoid) {
      const Cell src[1] = {g};
      nd = bfs_distances(map(), src, avoid)[map().index(pos_[j])];
    }
    if (nd == kUnreachable || nd > d + cfg_.block_threshold) ++c;
  }
  return c;
}

std::vector<int> Env::blocking_counts(Exec exec) const {
  const int n = num_agents();
  std::vector<std::vector<int>> hits(n);
  const auto& m = map();
  auto scan = [&](int j) {
    const auto& f = fields_[j];
    Cell cur = pos_[j];
    if (!f.reachable(cur)) return;
    const int d0 = f.at(cur);
    int d = d0;
    while (d > 0) {
      for (Action a : kMoveOrder) {
        const Cell nxt = smapf::step(cur, a);
        if (m.passable(nxt) && f.at(nxt) == d - 1) {
          cur = nxt;
          break;
        }
      }
      --d;
      const int i = occupant_[m.index(cur)];
      if (i < 0 || i == j) continue;
      if (bounded_distance(m, pos_[j], scenario_.goals[j], cur, d0 + cfg_.block_threshold) ==
          kUnreachable) {
        hits[j].push_back(i);
      }
    }
  };
  if (exec == Exec::Serial) {
    for (int j = 0; j < n; ++j) scan(j);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (int j = 0; j < n; ++j) scan(j);
  }
  std::vector<int> counts(n, 0);
  for (const auto& h : hits) {
    for (int i : h) ++counts[i];
  }
  return counts;
}

std::vector<double> Env::observe(int i) const {
  const int f = cfg_.fov;
  const int half = f / 2;
  const int hh = cfg_.fov_heuristic / 2;
  const int k = cfg_.svo_bins;
  std::vector<double> obs(observation_size(), 0.0);
  const Cell p = pos_[i];
  const auto& field = fields_[i];
  const int d_self = field.at(p);
  double* occ = obs.data();
  double* others = occ + f * f;
  double* heur = others + f * f;
  for (int dr = -half; dr <= half; ++dr) {
    for (int dc = -half; dc <= half; ++dc) {
      const int idx = (dr + half) * f + (dc + half);
      const Cell c{p.r + dr, p.c + dc};
      if (!map().passable(c)) {
        occ[idx] = 1.0;
        continue;
      }
      const int o = occupant_[map().index(c)];
      if (o >= 0 && o != i) others[idx] = 1.0;
      if (std::abs(dr) <= hh && std::abs(dc) <= hh && field.reachable(c) && d_self != kUnreachable) {
        const int diff = d_self - field.at(c);
        heur[idx] = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
      }
    }
  }
  double* goal = heur + f * f;
  const Cell g = scenario_.goals[i];
  const double dx = g.c - p.c;
  const double dy = g.r - p.r;
  const double mag = std::hypot(dx, dy);
  if (mag > 0.0) {
    const double clamp = cfg_.goal_clamp;
    goal[0] = dx / mag;
    goal[1] = dy / mag;
    goal[2] = std::min(mag, clamp) / clamp;
    goal[3] = d_self == kUnreachable ? 1.0 : std::min<double>(d_self, clamp) / clamp;
  }
  double* own = goal + 4;
  if (svo_bin_[i] >= 0) own[svo_bin_[i]] = 1.0;
  double* mate = own + k;
  double* offset = mate + k;
  const int q = partner_[i];
  if (q != i) {
    if (svo_bin_[q] >= 0) mate[svo_bin_[q]] = 1.0;
    offset[0] = std::clamp(pos_[q].r - p.r, -half, half) / static_cast<double>(half > 0 ? half : 1);
    offset[1] = std::clamp(pos_[q].c - p.c, -half, half) / static_cast<double>(half > 0 ? half : 1);
  }
  return obs;
}

EpisodeMetrics Env::metrics() const {
  EpisodeMetrics m;
  m.goals_reached = agents_on_goal();
  m.success = m.goals_reached == num_agents();
  m.episode_length = t_;
  m.arrival_rate = static_cast<double>(m.goals_reached) / num_agents();
  m.collisions_prevented = collisions_prevented_;
  m.svo_trace = svo_trace_;
  return m;
}

}  // namespace smapf

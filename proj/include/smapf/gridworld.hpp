#pragma once

#include <span>
#include <vector>

#include "smapf/parallel.hpp"
#include "smapf/rng.hpp"
#include "smapf/pathing.hpp"
#include "smapf/resolver.hpp"
#include "smapf/scenario.hpp"

namespace smapf {

inline constexpr double kStepCost = -0.3;         // move, or idle off goal
inline constexpr double kGoalIdleReward = 0.0;
inline constexpr double kCollisionPenalty = -2.0;
inline constexpr double kBlockPenalty = -1.0;     // per blocked agent

struct EnvConfig {
  int max_steps = 256;
  int block_threshold = 10;
  int fov = 9;
  int fov_heuristic = 5;
  int svo_bins = 5;
  int goal_clamp = 32;  // cells; normaliser for the goal-vector magnitudes

  /// 3 planes of fov^2, goal vector (4), own and partner SVO one-hots,
  /// partner offset (2).
  int observation_size() const { return 3 * fov * fov + 4 + 2 * svo_bins + 2; }
};

struct StepOutcome {
  std::vector<Action> actions;
  std::vector<double> rewards;  // external reward per agent
  std::vector<int> blocking;    // agents blocked by each agent after the move
  std::vector<char> on_goal;
  int t = 0;
  bool done = false;
};

struct EpisodeMetrics {
  bool success = false;
  int episode_length = 0;
  double arrival_rate = 0.0;
  int goals_reached = 0;
  int collisions_prevented = 0;
  std::vector<std::vector<double>> svo_trace;  // per step, angle per agent
};

/// One MAPF episode: simultaneous moves, external rewards, termination when
/// every agent is on its goal or the step cap is reached.
class Env {
 public:
  explicit Env(Scenario scenario, EnvConfig cfg = {});

  const Scenario& scenario() const { return scenario_; }
  const GridMap& map() const { return scenario_.map; }
  const EnvConfig& config() const { return cfg_; }
  int num_agents() const { return static_cast<int>(pos_.size()); }
  const std::vector<Cell>& positions() const { return pos_; }
  const std::vector<Cell>& goals() const { return scenario_.goals; }
  const std::vector<DistanceField>& fields() const { return fields_; }
  int t() const { return t_; }
  bool done() const { return done_; }
  bool on_goal(int i) const { return pos_[i] == scenario_.goals[i]; }
  int agents_on_goal() const;

  /// SVO bin last sampled by agent i (-1 before the first sample) and its
  /// partner; both feed the observation.
  void set_svo(int i, int bin) { svo_bin_[i] = bin; }
  void set_partner(int i, int p) { partner_[i] = p; }
  int svo_bin(int i) const { return svo_bin_[i]; }
  int partner(int i) const { return partner_[i]; }

  /// Applies a sanitized joint action. `penalized` marks agents that receive
  /// the collision penalty from the resolver. Throws ContractError for a joint
  /// action that leaves free cells or breaks the vertex/swap conditions.
  StepOutcome step(std::span<const Action> actions, std::span<const char> penalized = {});
  StepOutcome step(const ResolutionOutcome& resolved);

  /// Reference count for one agent: full BFS per other agent with i's cell
  /// blocked.
  int detect_blocking(int i) const;
  /// Counts for every agent. Only agents lying on another's canonical shortest
  /// path can block it, so a bounded BFS runs only for those.
  std::vector<int> blocking_counts(Exec exec = Exec::Parallel) const;

  std::vector<double> observe(int i) const;
  int observation_size() const { return cfg_.observation_size(); }

  EpisodeMetrics metrics() const;

 private:
  Scenario scenario_;
  EnvConfig cfg_;
  std::vector<DistanceField> fields_;
  std::vector<Cell> pos_;
  std::vector<int> svo_bin_;
  std::vector<int> partner_;
  std::vector<int> occupant_;  // cell index -> agent or -1
  std::vector<std::vector<double>> svo_trace_;
  int collisions_prevented_ = 0;
  int t_ = 0;
  bool done_ = false;
};

/// Intended actions and SVO angles chosen for one step, before resolution.
struct Decision {
  std::vector<Action> intents;
  std::vector<double> svo_degrees;
};

/// A policy that drives every agent of an Env. decide() may update the Env's
/// SVO and partner annotations; it must not move agents.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void reset(const Env&) {}
  virtual Decision decide(Env& env, Rng& rng) = 0;
};

}  // namespace smapf

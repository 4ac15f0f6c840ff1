#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "smapf/gridworld.hpp"
#include "smapf/learner.hpp"
#include "smapf/mapgen.hpp"

namespace smapf {

/// Every agent takes its greedy descent intent; all SVOs 0.
class GreedyController : public Controller {
 public:
  Decision decide(Env& env, Rng& rng) override;
};

/// Scripted SVO policies for the corridor dilemma. Homogeneous: everyone
/// selfish (Z = 0) and greedy. Heterogeneous: within a fixed-partner pair
/// whose overlap is positive, the lower index takes Z = 45 and retreats
/// from the partner's path flow until the overlap clears.
class ScriptedController : public Controller {
 public:
  enum class Mode { Homogeneous, Heterogeneous };
  explicit ScriptedController(Mode mode, double gamma_ol = 0.95) : mode_(mode), tracker_(gamma_ol) {}

  void reset(const Env& env) override;
  Decision decide(Env& env, Rng& rng) override;

  /// Retreat move for agent i away from partner p's path flow: step to the
  /// first neighbor that increases the distance from the flow; hold if none
  /// does and i is already off the flow; otherwise head for the nearest
  /// off-flow cell with p's cell treated as blocked.
  static Action retreat(const Env& env, int i, int p);

 private:
  Mode mode_;
  PartnerTracker tracker_;
};

/// Owns a loaded policy and drives it through PolicyController.
class TrainedController : public Controller {
 public:
  TrainedController(Policy policy, SocialConfig social, bool greedy = false);
  void reset(const Env& env) override { inner_.reset(env); }
  Decision decide(Env& env, Rng& rng) override { return inner_.decide(env, rng); }

 private:
  std::unique_ptr<Policy> policy_;
  PolicyController inner_;
};

/// Builds a controller from "greedy", "homo", "hetero" (alias "scripted") or
/// "trained:PATH". Each call returns a fresh instance.
using ControllerFactory = std::function<std::unique_ptr<Controller>()>;
ControllerFactory controller_factory(const std::string& policy);

struct StepView {
  const Env& env;
  const Decision& decision;
  const ResolutionOutcome& resolved;
  const StepOutcome& outcome;
};

struct EpisodeResult {
  EpisodeMetrics metrics;
  double external_reward = 0.0;
  int max_resolver_iterations = 0;
};

/// Runs one episode to termination: decide, resolve, step. `on_step` sees
/// every transition after it is applied.
EpisodeResult run_episode(const Scenario& scenario, Controller& controller, const EnvConfig& cfg,
                          std::uint64_t policy_seed,
                          const std::function<void(const StepView&)>& on_step = {});

/// JSON line for one step of an episode trace.
std::string trace_record(const StepView& v);
/// JSON line for the initial state (t = 0).
std::string trace_initial(const Env& env);

struct BatchConfig {
  MapFamily family = MapFamily::Random;
  int width = 32;
  int height = 32;
  double density = 0.2;
  int agents = 8;
  int instances = 200;
  std::string policy = "greedy";
  std::uint64_t seed = 0;
  EnvConfig env;
  bool timing = false;  // wall-clock is not reproducible, so it is opt-in
};

struct InstanceRow {
  int index = 0;
  std::uint64_t seed = 0;
  bool success = false;
  int episode_length = 0;
  double arrival_rate = 0.0;
  int goals = 0;
  int collisions_prevented = 0;
  double external_reward = 0.0;
  double seconds = 0.0;
};

struct BenchmarkReport {
  BatchConfig config;
  std::vector<InstanceRow> rows;
  int successes = 0;
  double success_rate = 0.0;
  double mean_episode_length = 0.0;
  double mean_arrival_rate = 0.0;
  double time_general = 0.0;  // mean seconds over all instances
  double time_success = 0.0;  // mean seconds over solved instances
};

/// Generates and runs `instances` scenarios (instance seed = derive_seed(seed,
/// index)) and aggregates in index order.
BenchmarkReport run_batch(const BatchConfig& cfg, Exec exec = Exec::Parallel);

std::string report_json(const BenchmarkReport& r);
std::string report_csv(const BenchmarkReport& r);

struct TTestResult {
  double t = 0.0;
  double p = 0.0;
  int df = 0;
  double mean_diff = 0.0;
  double sd_diff = 0.0;
};

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);
/// Student t CDF with `df` degrees of freedom.
double student_t_cdf(double t, double df);

/// Paired t-test on a - b, two-sided. Throws DegenerateInputError when the
/// differences have zero variance, ParameterError for n < 2 or unequal sizes.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

struct CaseStudyConfig {
  double p_recess = 0.8;
  double p_ishape = 0.2;
  int episodes = 1000;
  std::uint64_t seed = 0;
  int recess_min = 5, recess_max = 12;
  int ishape_min = 3, ishape_max = 10;
  EnvConfig env;
};

struct CaseStudyResult {
  double mean_goals = 0.0;
  int recess_episodes = 0;
  int ishape_episodes = 0;
  double recess_goals = 0.0;  // mean over recess episodes
  double ishape_goals = 0.0;
  std::vector<int> goals;     // per episode
};

struct CaseEpisode {
  CorridorKind kind = CorridorKind::Recess;
  int length = 0;
  Scenario scenario;
};

/// Episode `e`: map kind drawn with the configured probabilities, corridor
/// length uniform in the kind's range, seeded by derive_seed(seed, e).
CaseEpisode case_study_episode(const CaseStudyConfig& cfg, int e);

/// Goals reached (0..2) in one episode.
using EpisodeRunner = std::function<int(const CaseEpisode&, int e)>;

/// Mean goals reached over the episodes. Deterministic for a fixed seed
/// regardless of worker count.
CaseStudyResult corridor_case_study(const CaseStudyConfig& cfg, const EpisodeRunner& run,
                                    Exec exec = Exec::Parallel);
CaseStudyResult corridor_case_study(const CaseStudyConfig& cfg, const ControllerFactory& make,
                                    Exec exec = Exec::Parallel);

std::string case_study_json(const CaseStudyResult& r, const CaseStudyConfig& cfg,
                            const std::string& policy);

}  // namespace smapf

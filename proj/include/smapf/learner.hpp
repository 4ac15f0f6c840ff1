#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "smapf/gridworld.hpp"
#include "smapf/rng.hpp"
#include "smapf/social.hpp"

namespace smapf {

struct PolicyShape {
  int input = 0;
  int hidden = 64;
  int svo_bins = kDefaultSvoBins;

  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

/// Activations of one forward pass. The action head sees the trunk output
/// concatenated with the one-hot of the SVO bin it is conditioned on.
struct Forward {
  std::vector<double> h1, h2;
  std::vector<double> svo_logits, svo_probs;
  std::array<double, kNumActions> action_logits{}, action_probs{};
  int svo_bin = -1;
  double value_action = 0.0;
  double value_svo = 0.0;
  double block_logit = 0.0;
};

/// Two tanh layers shared by four heads: SVO logits, action logits, the two
/// value estimates and a blocking logit. Parameters live in one flat vector.
class Policy {
 public:
  Policy() = default;
  Policy(PolicyShape shape, std::uint64_t seed);
  Policy(PolicyShape shape, std::vector<double> params);

  const PolicyShape& shape() const { return shape_; }
  std::span<const double> params() const { return params_; }
  std::span<double> params() { return params_; }
  std::size_t size() const { return params_.size(); }
  static std::size_t param_count(const PolicyShape& s);

  /// Trunk, SVO head and value heads.
  Forward forward(std::span<const double> obs) const;
  /// Fills the action head of `f` conditioned on `svo_bin`.
  void action_head(Forward& f, int svo_bin) const;
  Forward forward(std::span<const double> obs, int svo_bin) const;

  /// Accumulates parameter gradients given gradients at the head outputs.
  void backward(std::span<const double> obs, const Forward& f, std::span<const double> d_svo_logits,
                std::span<const double> d_action_logits, const std::array<double, 3>& d_values,
                std::span<double> grad) const;

 private:
  struct Layout {
    std::size_t w1, b1, w2, b2, wz, bz, wa, ba, wv, bv, end;
  };
  static Layout layout(const PolicyShape& s);

  PolicyShape shape_;
  Layout lay_{};
  std::vector<double> params_;
};

struct LossConfig {
  double clip_eps = 0.2;
  double value_coef = 0.08;
  double policy_coef = 10.0;
  double entropy_coef = 0.01;
  double valid_coef = 0.5;
  double blocking_coef = 0.5;
  double stab_coef = 0.5;
};

/// One agent-step of experience.
struct Sample {
  std::vector<double> obs;
  int action = 0;
  int svo_bin = 0;
  double logp_action = 0.0;  // at collection time
  double logp_svo = 0.0;
  double adv_action = 0.0;   // from R^a and V_a
  double adv_svo = 0.0;      // from R^s and V_s
  double ret_action = 0.0;
  double ret_svo = 0.0;
  std::array<char, kNumActions> valid{1, 1, 1, 1, 1};
  double block_label = 0.0;
  std::vector<double> z_exp;
  // Kept for replay and diagnostics.
  double reward_action = 0.0;
  double reward_svo = 0.0;
  double value_action = 0.0;
  double value_svo = 0.0;
  double alpha = 0.0;
};

/// Generalized advantage estimate: A_t = sum_k (gamma lambda)^k delta_{t+k},
/// delta_t = r_t + gamma V_{t+1} - V_t, with V_T = `bootstrap`.
std::vector<double> gae_advantages(std::span<const double> rewards, std::span<const double> values,
                                   double bootstrap, double gamma, double lambda);

struct LossTerms {
  double total = 0.0;
  double surrogate_action = 0.0;  // mean clipped surrogate, action ratio x svo advantage
  double surrogate_svo = 0.0;     // mean clipped surrogate, svo ratio x action advantage
  double value_action = 0.0;
  double value_svo = 0.0;
  double entropy_action = 0.0;
  double entropy_svo = 0.0;
  double stab = 0.0;
  double valid = 0.0;
  double blocking = 0.0;
  double clip_fraction = 0.0;
};

/// Clipped surrogate min(r A, clip(r, 1-eps, 1+eps) A) and its derivative in r.
double clipped_surrogate(double ratio, double adv, double eps, double* d_ratio = nullptr);

/// Mean loss over `batch`; adds d(loss)/d(params) into `grad` when given.
/// Throws TrainingError on a non-finite loss.
LossTerms smp3o_loss(const Policy& policy, std::span<const Sample* const> batch,
                     const LossConfig& cfg, std::span<double> grad = {});

struct SocialConfig {
  double gamma_ol = 0.95;
  double rho = 2.0;
  double kappa = 1.0;
};

/// Drives an Env with a Policy: overlap and fixed partners, SVO sampled from
/// the SVO head, action sampled from the action head conditioned on it. The
/// per-agent internals of the latest step stay readable for rollouts.
class PolicyController : public Controller {
 public:
  PolicyController(const Policy& policy, SocialConfig social, bool greedy = false)
      : policy_(&policy), social_(social), greedy_(greedy), tracker_(social.gamma_ol) {}

  void reset(const Env& env) override;
  Decision decide(Env& env, Rng& rng) override;

  struct AgentStep {
    std::vector<double> obs;
    std::vector<double> svo_probs;
    std::vector<double> svo_prev;
    int svo_bin = 0;
    int action = 0;
    double logp_svo = 0.0;
    double logp_action = 0.0;
    double value_action = 0.0;
    double value_svo = 0.0;
  };
  const std::vector<AgentStep>& last() const { return last_; }
  const PartnerTracker& partners() const { return tracker_; }

 private:
  const Policy* policy_;
  SocialConfig social_;
  bool greedy_;
  PartnerTracker tracker_;
  std::vector<std::vector<double>> prev_dist_;
  std::vector<AgentStep> last_;
};

struct EpisodeStats {
  double external_reward = 0.0;  // summed over agents and steps
  int goals = 0;
  int length = 0;
};

struct RolloutConfig {
  SocialConfig social;
  double gamma = 0.95;
  double lambda = 0.95;
};

struct Rollout {
  std::vector<Sample> samples;  // env-major, then agent, then time
  std::vector<EpisodeStats> episodes;
  long steps = 0;
};

/// Runs every env to termination under the policy, recording samples with
/// both reward streams and their GAE advantages. Envs run concurrently with
/// per-env seeds; results are concatenated in env order.
Rollout collect_rollout(std::vector<Env>& envs, const Policy& policy, const RolloutConfig& cfg,
                        std::uint64_t seed, Exec exec = Exec::Parallel);

struct TrainConfig {
  EnvConfig env;
  RolloutConfig rollout;
  LossConfig loss;
  int hidden = 64;
  double learning_rate = 1e-5;
  double momentum = 0.9;
  double grad_clip = 10.0;
  int epochs = 10;
  int minibatch = 16;
  bool normalize_advantages = false;
  int envs_per_iteration = 16;
  long total_steps = 200000;
  int max_iterations = 0;  // 0 = until total_steps
  double p_recess = 0.8;
  int recess_min = 5, recess_max = 12;
  int ishape_min = 3, ishape_max = 10;
  std::uint64_t seed = 0;
};

std::string train_config_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);
std::uint64_t fnv1a64(std::string_view bytes);

struct CurvePoint {
  int iteration = 0;
  double mean_reward = 0.0;
  double goals = 0.0;
  double episode_length = 0.0;
  long steps = 0;
};

struct TrainResult {
  Policy policy;
  std::vector<CurvePoint> curve;
  bool diverged = false;
  std::string message;
};

/// Corridor curriculum episodes per iteration, then epochs of shuffled
/// minibatch momentum-SGD with gradient-norm clipping. On a non-finite loss
/// the last good parameters are returned with `diverged` set.
TrainResult train(const TrainConfig& cfg);

/// Parameters train() starts from.
Policy initial_policy(const TrainConfig& cfg);

/// Corridor scenario for curriculum episode `index` of iteration `iteration`.
Scenario curriculum_scenario(const TrainConfig& cfg, int iteration, int index);

void save_checkpoint(const Policy& policy, std::uint64_t config_hash,
                     const std::filesystem::path& path);
Policy load_checkpoint(const std::filesystem::path& path, std::uint64_t* config_hash = nullptr);

}  // namespace smapf

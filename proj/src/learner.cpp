#include "smapf/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "smapf/mapgen.hpp"

namespace smapf {

namespace {

void softmax(std::span<const double> logits, std::span<double> out) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - m);
    s += out[k];
  }
  for (auto& v : out) v /= s;
}

double log_softmax_at(std::span<const double> logits, int k) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double l : logits) s += std::exp(l - m);
  return logits[k] - m - std::log(s);
}

double entropy(std::span<const double> p, std::span<const double> logits, std::span<double> d_logits,
               double scale) {
  // H = -sum p log p, dH/dl_k = -p_k (log p_k + H).
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double l : logits) s += std::exp(l - m);
  const double lse = m + std::log(s);
  double h = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) h -= p[k] * (logits[k] - lse);
  for (std::size_t k = 0; k < p.size(); ++k) d_logits[k] += scale * (-p[k] * (logits[k] - lse + h));
  return h;
}

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// log(sigmoid(x)) and log(1 - sigmoid(x)) without cancellation.
double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

}  // namespace

Policy::Layout Policy::layout(const PolicyShape& s) {
  Layout l{};
  const std::size_t i = s.input, h = s.hidden, k = s.svo_bins;
  l.w1 = 0;
  l.b1 = l.w1 + h * i;
  l.w2 = l.b1 + h;
  l.b2 = l.w2 + h * h;
  l.wz = l.b2 + h;
  l.bz = l.wz + k * h;
  l.wa = l.bz + k;
  l.ba = l.wa + kNumActions * (h + k);
  l.wv = l.ba + kNumActions;
  l.bv = l.wv + 3 * h;
  l.end = l.bv + 3;
  return l;
}

std::size_t Policy::param_count(const PolicyShape& s) { return layout(s).end; }

Policy::Policy(PolicyShape shape, std::uint64_t seed) : shape_(shape), lay_(layout(shape)) {
  if (shape.input < 1 || shape.hidden < 1 || shape.svo_bins < 2) throw ParameterError("bad policy shape");
  params_.assign(lay_.end, 0.0);
  Rng rng(seed);
  auto fill = [&](std::size_t off, std::size_t count, double scale) {
    for (std::size_t k = 0; k < count; ++k) params_[off + k] = rng.uniform(-scale, scale);
  };
  const double h = shape.hidden;
  fill(lay_.w1, lay_.b1 - lay_.w1, std::sqrt(6.0 / (shape.input + h)));
  fill(lay_.w2, lay_.b2 - lay_.w2, std::sqrt(6.0 / (2 * h)));
  // Small heads start the policies close to uniform.
  fill(lay_.wz, lay_.bz - lay_.wz, 0.01);
  fill(lay_.wa, lay_.ba - lay_.wa, 0.01);
  fill(lay_.wv, lay_.bv - lay_.wv, 0.01);
}

Policy::Policy(PolicyShape shape, std::vector<double> params)
    : shape_(shape), lay_(layout(shape)), params_(std::move(params)) {
  if (params_.size() != lay_.end) throw ParameterError("parameter vector does not match policy shape");
}

Forward Policy::forward(std::span<const double> obs) const {
  const int in = shape_.input, h = shape_.hidden, k = shape_.svo_bins;
  if (static_cast<int>(obs.size()) != in) throw ParameterError("observation size mismatch");
  const double* p = params_.data();
  Forward f;
  f.h1.resize(h);
  f.h2.resize(h);
  for (int r = 0; r < h; ++r) {
    const double* w = p + lay_.w1 + static_cast<std::size_t>(r) * in;
    double a = p[lay_.b1 + r];
    for (int c = 0; c < in; ++c) a += w[c] * obs[c];
    f.h1[r] = std::tanh(a);
  }
  for (int r = 0; r < h; ++r) {
    const double* w = p + lay_.w2 + static_cast<std::size_t>(r) * h;
    double a = p[lay_.b2 + r];
    for (int c = 0; c < h; ++c) a += w[c] * f.h1[c];
    f.h2[r] = std::tanh(a);
  }
  f.svo_logits.resize(k);
  f.svo_probs.resize(k);
  for (int r = 0; r < k; ++r) {
    const double* w = p + lay_.wz + static_cast<std::size_t>(r) * h;
    double a = p[lay_.bz + r];
    for (int c = 0; c < h; ++c) a += w[c] * f.h2[c];
    f.svo_logits[r] = a;
  }
  softmax(f.svo_logits, f.svo_probs);
  double v[3];
  for (int r = 0; r < 3; ++r) {
    const double* w = p + lay_.wv + static_cast<std::size_t>(r) * h;
    double a = p[lay_.bv + r];
    for (int c = 0; c < h; ++c) a += w[c] * f.h2[c];
    v[r] = a;
  }
  f.value_action = v[0];
  f.value_svo = v[1];
  f.block_logit = v[2];
  return f;
}

void Policy::action_head(Forward& f, int svo_bin) const {
  const int h = shape_.hidden, k = shape_.svo_bins;
  if (svo_bin < 0 || svo_bin >= k) throw ParameterError("SVO bin out of range");
  const double* p = params_.data();
  f.svo_bin = svo_bin;
  for (int r = 0; r < kNumActions; ++r) {
    const double* w = p + lay_.wa + static_cast<std::size_t>(r) * (h + k);
    double a = p[lay_.ba + r] + w[h + svo_bin];
    for (int c = 0; c < h; ++c) a += w[c] * f.h2[c];
    f.action_logits[r] = a;
  }
  softmax(f.action_logits, f.action_probs);
}

Forward Policy::forward(std::span<const double> obs, int svo_bin) const {
  Forward f = forward(obs);
  action_head(f, svo_bin);
  return f;
}

void Policy::backward(std::span<const double> obs, const Forward& f, std::span<const double> d_svo,
                      std::span<const double> d_act, const std::array<double, 3>& d_val,
                      std::span<double> grad) const {
  const int in = shape_.input, h = shape_.hidden, k = shape_.svo_bins;
  const double* p = params_.data();
  double* g = grad.data();
  std::vector<double> dh2(h, 0.0);
  for (int r = 0; r < k; ++r) {
    g[lay_.bz + r] += d_svo[r];
    double* gw = g + lay_.wz + static_cast<std::size_t>(r) * h;
    const double* w = p + lay_.wz + static_cast<std::size_t>(r) * h;
    for (int c = 0; c < h; ++c) {
      gw[c] += d_svo[r] * f.h2[c];
      dh2[c] += d_svo[r] * w[c];
    }
  }
  if (f.svo_bin >= 0) {
    for (int r = 0; r < kNumActions; ++r) {
      g[lay_.ba + r] += d_act[r];
      double* gw = g + lay_.wa + static_cast<std::size_t>(r) * (h + k);
      const double* w = p + lay_.wa + static_cast<std::size_t>(r) * (h + k);
      for (int c = 0; c < h; ++c) {
        gw[c] += d_act[r] * f.h2[c];
        dh2[c] += d_act[r] * w[c];
      }
      gw[h + f.svo_bin] += d_act[r];
    }
  }
  for (int r = 0; r < 3; ++r) {
    g[lay_.bv + r] += d_val[r];
    double* gw = g + lay_.wv + static_cast<std::size_t>(r) * h;
    const double* w = p + lay_.wv + static_cast<std::size_t>(r) * h;
    for (int c = 0; c < h; ++c) {
      gw[c] += d_val[r] * f.h2[c];
      dh2[c] += d_val[r] * w[c];
    }
  }
  std::vector<double> dh1(h, 0.0);
  for (int r = 0; r < h; ++r) {
    const double dpre = dh2[r] * (1.0 - f.h2[r] * f.h2[r]);
    g[lay_.b2 + r] += dpre;
    double* gw = g + lay_.w2 + static_cast<std::size_t>(r) * h;
    const double* w = p + lay_.w2 + static_cast<std::size_t>(r) * h;
    for (int c = 0; c < h; ++c) {
      gw[c] += dpre * f.h1[c];
      dh1[c] += dpre * w[c];
    }
  }
  for (int r = 0; r < h; ++r) {
    const double dpre = dh1[r] * (1.0 - f.h1[r] * f.h1[r]);
    g[lay_.b1 + r] += dpre;
    double* gw = g + lay_.w1 + static_cast<std::size_t>(r) * in;
    for (int c = 0; c < in; ++c) gw[c] += dpre * obs[c];
  }
}

std::vector<double> gae_advantages(std::span<const double> rewards, std::span<const double> values,
                                   double bootstrap, double gamma, double lambda) {
  if (rewards.size() != values.size()) throw ContractError("rewards and values differ in length");
  const std::size_t n = rewards.size();
  std::vector<double> adv(n);
  double acc = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double next_v = t + 1 < n ? values[t + 1] : bootstrap;
    const double delta = rewards[t] + gamma * next_v - values[t];
    acc = delta + gamma * lambda * acc;
    adv[t] = acc;
  }
  return adv;
}

double clipped_surrogate(double ratio, double adv, double eps, double* d_ratio) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  const double unclipped_term = ratio * adv;
  const double clipped_term = clipped * adv;
  if (unclipped_term <= clipped_term) {
    if (d_ratio) *d_ratio = adv;
    return unclipped_term;
  }
  if (d_ratio) *d_ratio = 0.0;
  return clipped_term;
}

LossTerms smp3o_loss(const Policy& policy, std::span<const Sample* const> batch,
                     const LossConfig& cfg, std::span<double> grad) {
  LossTerms L;
  if (batch.empty()) return L;
  const int k = policy.shape().svo_bins;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != policy.size()) throw ParameterError("gradient buffer size mismatch");
  std::vector<double> d_svo(k);
  std::array<double, kNumActions> d_act{};
  int clipped = 0;
  for (const Sample* s : batch) {
    const Forward f = policy.forward(s->obs, s->svo_bin);
    std::fill(d_svo.begin(), d_svo.end(), 0.0);
    d_act.fill(0.0);
    std::array<double, 3> d_val{};

    // Action ratio paired with the SVO advantage.
    const double lpa = log_softmax_at(f.action_logits, s->action);
    const double ra = std::exp(lpa - s->logp_action);
    double dra = 0.0;
    const double sa = clipped_surrogate(ra, s->adv_svo, cfg.clip_eps, &dra);
    clipped += std::abs(ra - 1.0) > cfg.clip_eps;
    L.surrogate_action += sa * inv_b;
    for (int j = 0; j < kNumActions; ++j) {
      d_act[j] += -cfg.policy_coef * inv_b * dra * ra * ((j == s->action) - f.action_probs[j]);
    }
    // SVO ratio paired with the action advantage.
    const double lpz = log_softmax_at(f.svo_logits, s->svo_bin);
    const double rz = std::exp(lpz - s->logp_svo);
    double drz = 0.0;
    const double sz = clipped_surrogate(rz, s->adv_action, cfg.clip_eps, &drz);
    L.surrogate_svo += sz * inv_b;
    for (int j = 0; j < k; ++j) {
      d_svo[j] += -cfg.policy_coef * inv_b * drz * rz * ((j == s->svo_bin) - f.svo_probs[j]);
    }

    L.entropy_action += inv_b * entropy(f.action_probs, f.action_logits, d_act, -cfg.entropy_coef * inv_b);
    L.entropy_svo += inv_b * entropy(f.svo_probs, f.svo_logits, d_svo, -cfg.entropy_coef * inv_b);

    const double ea = f.value_action - s->ret_action;
    const double es = f.value_svo - s->ret_svo;
    L.value_action += ea * ea * inv_b;
    L.value_svo += es * es * inv_b;
    d_val[0] = cfg.value_coef * inv_b * 2.0 * ea;
    d_val[1] = cfg.value_coef * inv_b * 2.0 * es;

    // Stability: elementwise binary cross-entropy against z_exp.
    {
      std::vector<double> dq(k);
      double stab = 0.0;
      for (int j = 0; j < k; ++j) {
        const double q = std::clamp(f.svo_probs[j], 1e-300, 1.0);
        const double y = s->z_exp[j];
        const double log_q = std::log(q);
        const double log_1mq = std::log1p(-std::min(q, 1.0 - 1e-16));
        stab -= y * log_q + (1.0 - y) * log_1mq;
        dq[j] = -y / q + (1.0 - y) / (1.0 - std::min(q, 1.0 - 1e-16));
      }
      double dot = 0.0;
      for (int j = 0; j < k; ++j) dot += dq[j] * f.svo_probs[j];
      for (int j = 0; j < k; ++j) {
        d_svo[j] += cfg.stab_coef * inv_b * f.svo_probs[j] * (dq[j] - dot);
      }
      L.stab += stab * inv_b;
    }

    // Valid: -log of the probability mass on valid actions.
    {
      double mass = 0.0;
      for (int j = 0; j < kNumActions; ++j) mass += s->valid[j] ? f.action_probs[j] : 0.0;
      L.valid -= std::log(mass) * inv_b;
      for (int j = 0; j < kNumActions; ++j) {
        const double mp = s->valid[j] ? f.action_probs[j] : 0.0;
        d_act[j] += cfg.valid_coef * inv_b * (f.action_probs[j] - mp / mass);
      }
    }

    // Blocking head: binary cross-entropy on a logit.
    {
      const double y = s->block_label;
      L.blocking -= (y * log_sigmoid(f.block_logit) + (1.0 - y) * log_sigmoid(-f.block_logit)) * inv_b;
      d_val[2] = cfg.blocking_coef * inv_b * (sigmoid(f.block_logit) - y);
    }

    if (want_grad) policy.backward(s->obs, f, d_svo, d_act, d_val, grad);
  }
  L.clip_fraction = clipped * inv_b;
  L.total = -cfg.policy_coef * (L.surrogate_action + L.surrogate_svo) +
            cfg.value_coef * (L.value_action + L.value_svo) -
            cfg.entropy_coef * (L.entropy_action + L.entropy_svo) + cfg.stab_coef * L.stab +
            cfg.valid_coef * L.valid + cfg.blocking_coef * L.blocking;
  if (!std::isfinite(L.total)) {
    std::ostringstream msg;
    msg << "non-finite loss: surrogate_action=" << L.surrogate_action
        << " surrogate_svo=" << L.surrogate_svo << " value_action=" << L.value_action
        << " value_svo=" << L.value_svo << " stab=" << L.stab << " valid=" << L.valid
        << " blocking=" << L.blocking;
    throw TrainingError(msg.str());
  }
  return L;
}

void PolicyController::reset(const Env& env) {
  tracker_.reset();
  const int k = policy_->shape().svo_bins;
  prev_dist_.assign(env.num_agents(), std::vector<double>(k, 1.0 / k));
  last_.clear();
}

Decision PolicyController::decide(Env& env, Rng& rng) {
  const int n = env.num_agents();
  const int k = policy_->shape().svo_bins;
  if (static_cast<int>(prev_dist_.size()) != n) reset(env);
  tracker_.update(env.map(), env.positions(), env.fields());
  for (int i = 0; i < n; ++i) env.set_partner(i, tracker_.fixed()[i]);
  // Observe everyone before any SVO of this step is published.
  last_.assign(n, {});
  for (int i = 0; i < n; ++i) last_[i].obs = env.observe(i);
  Decision d;
  d.intents.resize(n);
  d.svo_degrees.resize(n);
  for (int i = 0; i < n; ++i) {
    auto& a = last_[i];
    Forward f = policy_->forward(a.obs);
    const int z = greedy_ ? static_cast<int>(std::max_element(f.svo_probs.begin(), f.svo_probs.end()) -
                                             f.svo_probs.begin())
                          : rng.categorical(f.svo_probs);
    policy_->action_head(f, z);
    const int act = greedy_ ? static_cast<int>(std::max_element(f.action_probs.begin(),
                                                                f.action_probs.end()) -
                                               f.action_probs.begin())
                            : rng.categorical(f.action_probs);
    a.svo_probs = f.svo_probs;
    a.svo_prev = prev_dist_[i];
    a.svo_bin = z;
    a.action = act;
    a.logp_svo = log_softmax_at(f.svo_logits, z);
    a.logp_action = log_softmax_at(f.action_logits, act);
    a.value_action = f.value_action;
    a.value_svo = f.value_svo;
    d.intents[i] = action_from_index(act);
    d.svo_degrees[i] = svo_angle(z, k);
  }
  for (int i = 0; i < n; ++i) {
    env.set_svo(i, last_[i].svo_bin);
    prev_dist_[i] = last_[i].svo_probs;
  }
  return d;
}

namespace {

struct EnvRollout {
  std::vector<Sample> samples;
  EpisodeStats stats;
};

EnvRollout run_env(Env& env, const Policy& policy, const RolloutConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  PolicyController ctrl(policy, cfg.social);
  ctrl.reset(env);
  const int n = env.num_agents();
  std::vector<std::vector<Sample>> per_agent(n);
  std::vector<int> blocking = env.blocking_counts(Exec::Serial);
  EnvRollout out;
  while (!env.done()) {
    const Decision d = ctrl.decide(env, rng);
    std::vector<std::array<char, kNumActions>> valid(n);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < kNumActions; ++a) {
        valid[i][a] = env.map().passable(step(env.positions()[i], action_from_index(a)));
      }
    }
    const auto resolved = resolve(env.map(), env.positions(), d.intents, d.svo_degrees);
    const Overlap overlap = ctrl.partners().overlap();
    const std::vector<int> fixed = ctrl.partners().fixed();
    const StepOutcome so = env.step(resolved);
    for (int i = 0; i < n; ++i) {
      const auto& a = ctrl.last()[i];
      const int p = fixed[i];
      const auto rw = redistribute_rewards(so.rewards[i], so.rewards[p], d.svo_degrees[i],
                                           cfg.social.rho);
      auto st = stability_target(a.svo_probs, a.svo_prev, overlap.at(i, p), cfg.social.kappa);
      Sample s;
      s.obs = a.obs;
      s.action = a.action;
      s.svo_bin = a.svo_bin;
      s.logp_action = a.logp_action;
      s.logp_svo = a.logp_svo;
      s.valid = valid[i];
      s.block_label = blocking[i] > 0 ? 1.0 : 0.0;
      s.z_exp = std::move(st.z_exp);
      s.alpha = st.alpha;
      s.reward_action = rw.action;
      s.reward_svo = rw.svo;
      s.value_action = a.value_action;
      s.value_svo = a.value_svo;
      per_agent[i].push_back(std::move(s));
      out.stats.external_reward += so.rewards[i];
    }
    blocking = so.blocking;
  }
  out.stats.goals = env.agents_on_goal();
  out.stats.length = env.t();
  for (auto& seq : per_agent) {
    const std::size_t T = seq.size();
    std::vector<double> ra(T), va(T), rs(T), vs(T);
    for (std::size_t t = 0; t < T; ++t) {
      ra[t] = seq[t].reward_action;
      va[t] = seq[t].value_action;
      rs[t] = seq[t].reward_svo;
      vs[t] = seq[t].value_svo;
    }
    const auto aa = gae_advantages(ra, va, 0.0, cfg.gamma, cfg.lambda);
    const auto as = gae_advantages(rs, vs, 0.0, cfg.gamma, cfg.lambda);
    for (std::size_t t = 0; t < T; ++t) {
      seq[t].adv_action = aa[t];
      seq[t].adv_svo = as[t];
      seq[t].ret_action = aa[t] + va[t];
      seq[t].ret_svo = as[t] + vs[t];
      out.samples.push_back(std::move(seq[t]));
    }
  }
  return out;
}

}  // namespace

Rollout collect_rollout(std::vector<Env>& envs, const Policy& policy, const RolloutConfig& cfg,
                        std::uint64_t seed, Exec exec) {
  const int m = static_cast<int>(envs.size());
  std::vector<EnvRollout> parts(m);
  if (exec == Exec::Serial) {
    for (int e = 0; e < m; ++e) parts[e] = run_env(envs[e], policy, cfg, derive_seed(seed, e));
  } else {
    std::vector<std::string> errors(m);
#pragma omp parallel for schedule(dynamic)
    for (int e = 0; e < m; ++e) {
      try {
        parts[e] = run_env(envs[e], policy, cfg, derive_seed(seed, e));
      } catch (const std::exception& ex) {
        errors[e] = ex.what();
      }
    }
    for (const auto& msg : errors) {
      if (!msg.empty()) throw Error("rollout failed: " + msg);
    }
  }
  Rollout out;
  for (auto& p : parts) {
    out.steps += p.stats.length;
    out.episodes.push_back(p.stats);
    for (auto& s : p.samples) out.samples.push_back(std::move(s));
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string train_config_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["env"] = {{"max_steps", c.env.max_steps},     {"block_threshold", c.env.block_threshold},
              {"fov", c.env.fov},                 {"fov_heuristic", c.env.fov_heuristic},
              {"svo_bins", c.env.svo_bins},       {"goal_clamp", c.env.goal_clamp}};
  j["social"] = {{"gamma_ol", c.rollout.social.gamma_ol},
                 {"rho", c.rollout.social.rho},
                 {"kappa", c.rollout.social.kappa}};
  j["gamma"] = c.rollout.gamma;
  j["lambda"] = c.rollout.lambda;
  j["loss"] = {{"clip_eps", c.loss.clip_eps},         {"value_coef", c.loss.value_coef},
               {"policy_coef", c.loss.policy_coef},   {"entropy_coef", c.loss.entropy_coef},
               {"valid_coef", c.loss.valid_coef},     {"blocking_coef", c.loss.blocking_coef},
               {"stab_coef", c.loss.stab_coef}};
  j["hidden"] = c.hidden;
  j["learning_rate"] = c.learning_rate;
  j["momentum"] = c.momentum;
  j["grad_clip"] = c.grad_clip;
  j["epochs"] = c.epochs;
  j["minibatch"] = c.minibatch;
  j["normalize_advantages"] = c.normalize_advantages;
  j["envs_per_iteration"] = c.envs_per_iteration;
  j["total_steps"] = c.total_steps;
  j["max_iterations"] = c.max_iterations;
  j["p_recess"] = c.p_recess;
  j["recess_len"] = {c.recess_min, c.recess_max};
  j["ishape_len"] = {c.ishape_min, c.ishape_max};
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

TrainConfig train_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParameterError(std::string("train config: ") + e.what());
  }
  TrainConfig c;
  auto get = [](const nlohmann::json& o, const char* key, auto& dst) {
    if (o.contains(key)) dst = o.at(key).get<std::remove_reference_t<decltype(dst)>>();
  };
  if (j.contains("env")) {
    const auto& e = j["env"];
    get(e, "max_steps", c.env.max_steps);
    get(e, "block_threshold", c.env.block_threshold);
    get(e, "fov", c.env.fov);
    get(e, "fov_heuristic", c.env.fov_heuristic);
    get(e, "svo_bins", c.env.svo_bins);
    get(e, "goal_clamp", c.env.goal_clamp);
  }
  if (j.contains("social")) {
    const auto& s = j["social"];
    get(s, "gamma_ol", c.rollout.social.gamma_ol);
    get(s, "rho", c.rollout.social.rho);
    get(s, "kappa", c.rollout.social.kappa);
  }
  get(j, "gamma", c.rollout.gamma);
  get(j, "lambda", c.rollout.lambda);
  if (j.contains("loss")) {
    const auto& l = j["loss"];
    get(l, "clip_eps", c.loss.clip_eps);
    get(l, "value_coef", c.loss.value_coef);
    get(l, "policy_coef", c.loss.policy_coef);
    get(l, "entropy_coef", c.loss.entropy_coef);
    get(l, "valid_coef", c.loss.valid_coef);
    get(l, "blocking_coef", c.loss.blocking_coef);
    get(l, "stab_coef", c.loss.stab_coef);
  }
  get(j, "hidden", c.hidden);
  get(j, "learning_rate", c.learning_rate);
  get(j, "momentum", c.momentum);
  get(j, "grad_clip", c.grad_clip);
  get(j, "epochs", c.epochs);
  get(j, "minibatch", c.minibatch);
  get(j, "normalize_advantages", c.normalize_advantages);
  get(j, "envs_per_iteration", c.envs_per_iteration);
  get(j, "total_steps", c.total_steps);
  get(j, "max_iterations", c.max_iterations);
  get(j, "p_recess", c.p_recess);
  if (j.contains("recess_len")) {
    c.recess_min = j["recess_len"].at(0).get<int>();
    c.recess_max = j["recess_len"].at(1).get<int>();
  }
  if (j.contains("ishape_len")) {
    c.ishape_min = j["ishape_len"].at(0).get<int>();
    c.ishape_max = j["ishape_len"].at(1).get<int>();
  }
  get(j, "seed", c.seed);
  return c;
}

Scenario curriculum_scenario(const TrainConfig& cfg, int iteration, int index) {
  const std::uint64_t s = derive_seed(derive_seed(cfg.seed, static_cast<std::uint64_t>(iteration)),
                                      static_cast<std::uint64_t>(index));
  Rng rng(s);
  if (rng.bernoulli(cfg.p_recess)) {
    return gen_corridor(CorridorKind::Recess, rng.range(cfg.recess_min, cfg.recess_max), s);
  }
  return gen_corridor(CorridorKind::IShape, rng.range(cfg.ishape_min, cfg.ishape_max), s);
}

Policy initial_policy(const TrainConfig& cfg) {
  const PolicyShape shape{cfg.env.observation_size(), cfg.hidden, cfg.env.svo_bins};
  return Policy(shape, derive_seed(cfg.seed, 0xC0FFEE));
}

TrainResult train(const TrainConfig& cfg) {
  if (cfg.epochs < 1 || cfg.minibatch < 1 || cfg.envs_per_iteration < 1) {
    throw ParameterError("epochs, minibatch and envs_per_iteration must be positive");
  }
  if (!(cfg.learning_rate >= 0.0) || !(cfg.grad_clip > 0.0)) {
    throw ParameterError("learning rate must be >= 0 and grad clip > 0");
  }
  if (!(cfg.p_recess >= 0.0 && cfg.p_recess <= 1.0)) throw ParameterError("p_recess must lie in [0, 1]");
  const PolicyShape shape{cfg.env.observation_size(), cfg.hidden, cfg.env.svo_bins};
  TrainResult result;
  result.policy = initial_policy(cfg);
  std::vector<double> velocity(result.policy.size(), 0.0);
  std::vector<double> grad(result.policy.size());
  long steps = 0;
  for (int it = 0;; ++it) {
    if (cfg.max_iterations > 0 && it >= cfg.max_iterations) break;
    if (cfg.max_iterations <= 0 && steps >= cfg.total_steps) break;
    std::vector<Env> envs;
    envs.reserve(cfg.envs_per_iteration);
    for (int e = 0; e < cfg.envs_per_iteration; ++e) {
      envs.emplace_back(curriculum_scenario(cfg, it, e), cfg.env);
    }
    const std::uint64_t it_seed = derive_seed(cfg.seed ^ 0x5EED5EEDULL, static_cast<std::uint64_t>(it));
    Rollout ro = collect_rollout(envs, result.policy, cfg.rollout, it_seed);
    steps += ro.steps;

    CurvePoint cp;
    cp.iteration = it;
    cp.steps = steps;
    for (const auto& e : ro.episodes) {
      cp.mean_reward += e.external_reward;
      cp.goals += e.goals;
      cp.episode_length += e.length;
    }
    const double ne = static_cast<double>(ro.episodes.size());
    cp.mean_reward /= ne;
    cp.goals /= ne;
    cp.episode_length /= ne;
    result.curve.push_back(cp);

    if (cfg.normalize_advantages && ro.samples.size() > 1) {
      auto normalize = [&](double Sample::*field) {
        double mean = 0.0;
        for (const auto& s : ro.samples) mean += s.*field;
        mean /= ro.samples.size();
        double var = 0.0;
        for (const auto& s : ro.samples) var += (s.*field - mean) * (s.*field - mean);
        const double sd = std::sqrt(var / ro.samples.size()) + 1e-8;
        for (auto& s : ro.samples) s.*field = (s.*field - mean) / sd;
      };
      normalize(&Sample::adv_action);
      normalize(&Sample::adv_svo);
    }

    const std::vector<double> last_good(result.policy.params().begin(), result.policy.params().end());
    std::vector<const Sample*> order(ro.samples.size());
    for (std::size_t s = 0; s < order.size(); ++s) order[s] = &ro.samples[s];
    Rng shuffler(derive_seed(it_seed, 1));
    try {
      for (int ep = 0; ep < cfg.epochs; ++ep) {
        shuffler.shuffle(std::span<const Sample*>(order));
        for (std::size_t b = 0; b < order.size(); b += cfg.minibatch) {
          const std::size_t e = std::min(order.size(), b + cfg.minibatch);
          std::fill(grad.begin(), grad.end(), 0.0);
          smp3o_loss(result.policy, std::span<const Sample* const>(order.data() + b, e - b), cfg.loss,
                     grad);
          double norm = 0.0;
          for (double g : grad) norm += g * g;
          norm = std::sqrt(norm);
          const double scale = norm > cfg.grad_clip ? cfg.grad_clip / norm : 1.0;
          auto params = result.policy.params();
          for (std::size_t k = 0; k < params.size(); ++k) {
            velocity[k] = cfg.momentum * velocity[k] + scale * grad[k];
            params[k] -= cfg.learning_rate * velocity[k];
          }
        }
      }
      for (double v : result.policy.params()) {
        if (!std::isfinite(v)) throw TrainingError("non-finite parameter after update");
      }
    } catch (const TrainingError& e) {
      result.policy = Policy(shape, last_good);
      result.diverged = true;
      result.message = e.what();
      break;
    }
  }
  return result;
}

void save_checkpoint(const Policy& policy, std::uint64_t config_hash,
                     const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["format"] = "smapf-policy";
  j["version"] = 1;
  j["config_hash"] = config_hash;
  j["input"] = policy.shape().input;
  j["hidden"] = policy.shape().hidden;
  j["svo_bins"] = policy.shape().svo_bins;
  j["params"] = std::vector<double>(policy.params().begin(), policy.params().end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write " + path.string());
  out << j.dump() << "\n";
}

Policy load_checkpoint(const std::filesystem::path& path, std::uint64_t* config_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParameterError(std::string("checkpoint: ") + e.what());
  }
  if (j.value("format", "") != "smapf-policy" || j.value("version", 0) != 1) {
    throw ParameterError("unsupported checkpoint format");
  }
  if (config_hash) *config_hash = j.at("config_hash").get<std::uint64_t>();
  PolicyShape s{j.at("input").get<int>(), j.at("hidden").get<int>(), j.at("svo_bins").get<int>()};
  return Policy(s, j.at("params").get<std::vector<double>>());
}

}  // namespace smapf

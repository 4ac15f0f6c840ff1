#include "smapf/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace smapf {

Decision GreedyController::decide(Env& env, Rng&) {
  Decision d;
  d.intents = greedy_intents(env.map(), env.positions(), env.fields());
  d.svo_degrees.assign(env.num_agents(), 0.0);
  for (int i = 0; i < env.num_agents(); ++i) env.set_svo(i, 0);
  return d;
}

void ScriptedController::reset(const Env&) { tracker_.reset(); }

Action ScriptedController::retreat(const Env& env, int i, int p) {
  const GridMap& map = env.map();
  const Cell me = env.positions()[i];
  std::vector<Cell> flow_cells;
  if (env.fields()[p].reachable(env.positions()[p])) {
    flow_cells = descend(map, env.fields()[p], env.positions()[p]).cells;
  } else {
    flow_cells = {env.positions()[p]};
  }
  const auto dist = bfs_distances(map, flow_cells);
  const int here = dist[map.index(me)];
  Action best = Action::Idle;
  int best_d = here;
  for (Action a : kMoveOrder) {
    const Cell q = step(me, a);
    if (!map.passable(q)) continue;
    const int dq = dist[map.index(q)];
    if (dq > best_d) {
      best_d = dq;
      best = a;
    }
  }
  if (best != Action::Idle || here > 0) return best;
  // On the flow with no way to gain distance directly: walk to the nearest
  // off-flow cell without passing through the partner.
  const Cell partner = env.positions()[p];
  std::vector<int> first(map.size(), -1);
  std::vector<int> queue{map.index(me)};
  first[map.index(me)] = action_index(Action::Idle);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const Cell u = map.cell(queue[head]);
    if (dist[queue[head]] > 0) return action_from_index(first[queue[head]]);
    for (Action a : kMoveOrder) {
      const Cell v = step(u, a);
      if (!map.passable(v) || v == partner || first[map.index(v)] >= 0) continue;
      first[map.index(v)] = u == me ? action_index(a) : first[queue[head]];
      queue.push_back(map.index(v));
    }
  }
  return Action::Idle;
}

Decision ScriptedController::decide(Env& env, Rng&) {
  const int n = env.num_agents();
  const int top = env.config().svo_bins - 1;
  Decision d;
  d.intents = greedy_intents(env.map(), env.positions(), env.fields());
  d.svo_degrees.assign(n, 0.0);
  const Overlap& ov = tracker_.update(env.map(), env.positions(), env.fields());
  const auto& fixed = tracker_.fixed();
  for (int i = 0; i < n; ++i) env.set_partner(i, fixed[i]);
  for (int i = 0; i < n; ++i) {
    int bin = 0;
    const int p = fixed[i];
    if (mode_ == Mode::Heterogeneous && p != i && ov.at(i, p) > 0.0 && i < p) {
      bin = top;
      d.intents[i] = retreat(env, i, p);
    }
    d.svo_degrees[i] = svo_angle(bin, env.config().svo_bins);
    env.set_svo(i, bin);
  }
  return d;
}

TrainedController::TrainedController(Policy policy, SocialConfig social, bool greedy)
    : policy_(std::make_unique<Policy>(std::move(policy))), inner_(*policy_, social, greedy) {}

ControllerFactory controller_factory(const std::string& policy) {
  if (policy == "greedy") return [] { return std::make_unique<GreedyController>(); };
  if (policy == "homo") {
    return [] { return std::make_unique<ScriptedController>(ScriptedController::Mode::Homogeneous); };
  }
  if (policy == "hetero" || policy == "scripted") {
    return [] { return std::make_unique<ScriptedController>(ScriptedController::Mode::Heterogeneous); };
  }
  if (policy.rfind("trained:", 0) == 0) {
    auto loaded = std::make_shared<const Policy>(load_checkpoint(policy.substr(8)));
    return [loaded] { return std::make_unique<TrainedController>(*loaded, SocialConfig{}); };
  }
  throw ParameterError("unknown policy '" + policy + "'");
}

EpisodeResult run_episode(const Scenario& scenario, Controller& controller, const EnvConfig& cfg,
                          std::uint64_t policy_seed,
                          const std::function<void(const StepView&)>& on_step) {
  Env env(scenario, cfg);
  Rng rng(policy_seed);
  controller.reset(env);
  EpisodeResult out;
  while (!env.done()) {
    const Decision d = controller.decide(env, rng);
    const auto resolved = resolve(env.map(), env.positions(), d.intents, d.svo_degrees);
    out.max_resolver_iterations = std::max(out.max_resolver_iterations, resolved.iterations);
    const StepOutcome so = env.step(resolved);
    for (double r : so.rewards) out.external_reward += r;
    if (on_step) on_step(StepView{env, d, resolved, so});
  }
  out.metrics = env.metrics();
  return out;
}

namespace {

nlohmann::json cells_json(const std::vector<Cell>& cells) {
  auto arr = nlohmann::json::array();
  for (const auto& c : cells) arr.push_back({c.r, c.c});
  return arr;
}

}  // namespace

std::string trace_initial(const Env& env) {
  nlohmann::ordered_json j;
  j["t"] = 0;
  j["positions"] = cells_json(env.positions());
  j["goals"] = cells_json(env.goals());
  return j.dump() + "\n";
}

std::string trace_record(const StepView& v) {
  nlohmann::ordered_json j;
  j["t"] = v.outcome.t;
  j["positions"] = cells_json(v.env.positions());
  auto intents = nlohmann::json::array();
  auto actions = nlohmann::json::array();
  for (auto a : v.decision.intents) intents.push_back(action_name(a));
  for (auto a : v.outcome.actions) actions.push_back(action_name(a));
  j["intents"] = intents;
  j["actions"] = actions;
  j["svo"] = v.decision.svo_degrees;
  j["rewards"] = v.outcome.rewards;
  j["blocking"] = v.outcome.blocking;
  auto partners = nlohmann::json::array();
  for (int i = 0; i < v.env.num_agents(); ++i) partners.push_back(v.env.partner(i));
  j["partners"] = partners;
  j["resolver_iterations"] = v.resolved.iterations;
  return j.dump() + "\n";
}

BenchmarkReport run_batch(const BatchConfig& cfg, Exec exec) {
  if (cfg.instances < 1) throw ParameterError("instances must be positive");
  const auto make = controller_factory(cfg.policy);
  BenchmarkReport rep;
  rep.config = cfg;
  rep.rows.resize(cfg.instances);
  std::vector<std::string> errors(cfg.instances);
  auto one = [&](int k) {
    try {
      InstanceRow& row = rep.rows[k];
      row.index = k;
      row.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k));
      const auto t0 = std::chrono::steady_clock::now();
      const Scenario s = generate(cfg.family, cfg.width, cfg.height, cfg.density, cfg.agents, row.seed);
      auto ctrl = make();
      const auto res = run_episode(s, *ctrl, cfg.env, derive_seed(row.seed, 1));
      row.success = res.metrics.success;
      row.episode_length = res.metrics.episode_length;
      row.arrival_rate = res.metrics.arrival_rate;
      row.goals = res.metrics.goals_reached;
      row.collisions_prevented = res.metrics.collisions_prevented;
      row.external_reward = res.external_reward;
      if (cfg.timing) {
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      }
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  };
  if (exec == Exec::Serial) {
    for (int k = 0; k < cfg.instances; ++k) one(k);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < cfg.instances; ++k) one(k);
  }
  for (int k = 0; k < cfg.instances; ++k) {
    if (!errors[k].empty()) throw Error("instance " + std::to_string(k) + ": " + errors[k]);
  }
  double t_all = 0.0, t_ok = 0.0;
  for (const auto& r : rep.rows) {
    rep.successes += r.success;
    rep.mean_episode_length += r.episode_length;
    rep.mean_arrival_rate += r.arrival_rate;
    t_all += r.seconds;
    if (r.success) t_ok += r.seconds;
  }
  const double n = cfg.instances;
  rep.success_rate = rep.successes / n;
  rep.mean_episode_length /= n;
  rep.mean_arrival_rate /= n;
  rep.time_general = t_all / n;
  rep.time_success = rep.successes > 0 ? t_ok / rep.successes : 0.0;
  return rep;
}

std::string report_json(const BenchmarkReport& r) {
  nlohmann::ordered_json j;
  j["family"] = family_name(r.config.family);
  j["width"] = r.config.width;
  j["height"] = r.config.height;
  j["density"] = r.config.density;
  j["agents"] = r.config.agents;
  j["instances"] = r.config.instances;
  j["policy"] = r.config.policy;
  j["seed"] = r.config.seed;
  j["max_steps"] = r.config.env.max_steps;
  j["success_rate"] = r.success_rate;
  j["mean_episode_length"] = r.mean_episode_length;
  j["mean_arrival_rate"] = r.mean_arrival_rate;
  if (r.config.timing) {
    j["time_general_s"] = r.time_general;
    j["time_success_s"] = r.time_success;
  }
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json o;
    o["index"] = row.index;
    o["seed"] = row.seed;
    o["success"] = row.success ? 1 : 0;
    o["episode_length"] = row.episode_length;
    o["arrival_rate"] = row.arrival_rate;
    o["goals"] = row.goals;
    o["collisions_prevented"] = row.collisions_prevented;
    o["external_reward"] = row.external_reward;
    if (r.config.timing) o["seconds"] = row.seconds;
    rows.push_back(o);
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

std::string report_csv(const BenchmarkReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "index,seed,success,episode_length,arrival_rate,goals,collisions_prevented,external_reward";
  if (r.config.timing) out << ",seconds";
  out << "\n";
  for (const auto& row : r.rows) {
    out << row.index << ',' << row.seed << ',' << (row.success ? 1 : 0) << ',' << row.episode_length
        << ',' << row.arrival_rate << ',' << row.goals << ',' << row.collisions_prevented << ','
        << row.external_reward;
    if (r.config.timing) out << ',' << row.seconds;
    out << "\n";
  }
  return out.str();
}

namespace {

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw ParameterError("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw ParameterError("degrees of freedom must be positive");
  const double x = df / (df + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ParameterError("paired samples must have equal length");
  const std::size_t n = a.size();
  if (n < 2) throw ParameterError("paired t-test needs at least two pairs");
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) mean += a[k] - b[k];
  mean /= n;
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double e = (a[k] - b[k]) - mean;
    ss += e * e;
  }
  const double sd = std::sqrt(ss / (n - 1));
  if (!(sd > 0.0)) throw DegenerateInputError("differences have zero variance");
  TTestResult r;
  r.df = static_cast<int>(n) - 1;
  r.mean_diff = mean;
  r.sd_diff = sd;
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p = incomplete_beta(0.5 * r.df, 0.5, r.df / (r.df + r.t * r.t));
  return r;
}

CaseEpisode case_study_episode(const CaseStudyConfig& cfg, int e) {
  const std::uint64_t s = derive_seed(cfg.seed, static_cast<std::uint64_t>(e));
  Rng rng(s);
  CaseEpisode ep;
  ep.kind = rng.uniform() < cfg.p_recess ? CorridorKind::Recess : CorridorKind::IShape;
  ep.length = ep.kind == CorridorKind::Recess ? rng.range(cfg.recess_min, cfg.recess_max)
                                              : rng.range(cfg.ishape_min, cfg.ishape_max);
  ep.scenario = gen_corridor(ep.kind, ep.length, s);
  return ep;
}

CaseStudyResult corridor_case_study(const CaseStudyConfig& cfg, const EpisodeRunner& run, Exec exec) {
  if (!(cfg.p_recess >= 0.0 && cfg.p_ishape >= 0.0) || std::abs(cfg.p_recess + cfg.p_ishape - 1.0) > 1e-12) {
    throw ParameterError("p_recess + p_ishape must equal 1");
  }
  if (cfg.episodes < 1) throw ParameterError("episodes must be positive");
  const int m = cfg.episodes;
  std::vector<int> goals(m, 0);
  std::vector<char> recess(m, 0);
  std::vector<std::string> errors(m);
  auto one = [&](int e) {
    try {
      const CaseEpisode ep = case_study_episode(cfg, e);
      recess[e] = ep.kind == CorridorKind::Recess;
      goals[e] = run(ep, e);
    } catch (const std::exception& ex) {
      errors[e] = ex.what();
    }
  };
  if (exec == Exec::Serial) {
    for (int e = 0; e < m; ++e) one(e);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (int e = 0; e < m; ++e) one(e);
  }
  for (int e = 0; e < m; ++e) {
    if (!errors[e].empty()) throw Error("episode " + std::to_string(e) + ": " + errors[e]);
  }
  CaseStudyResult r;
  long total = 0, gr = 0, gi = 0;
  for (int e = 0; e < m; ++e) {
    total += goals[e];
    if (recess[e]) {
      ++r.recess_episodes;
      gr += goals[e];
    } else {
      ++r.ishape_episodes;
      gi += goals[e];
    }
  }
  r.mean_goals = static_cast<double>(total) / m;
  r.recess_goals = r.recess_episodes ? static_cast<double>(gr) / r.recess_episodes : 0.0;
  r.ishape_goals = r.ishape_episodes ? static_cast<double>(gi) / r.ishape_episodes : 0.0;
  r.goals = std::move(goals);
  return r;
}

CaseStudyResult corridor_case_study(const CaseStudyConfig& cfg, const ControllerFactory& make,
                                    Exec exec) {
  const EpisodeRunner run = [&](const CaseEpisode& ep, int e) {
    auto ctrl = make();
    const auto res = run_episode(ep.scenario, *ctrl, cfg.env,
                                 derive_seed(derive_seed(cfg.seed, static_cast<std::uint64_t>(e)), 1));
    return res.metrics.goals_reached;
  };
  return corridor_case_study(cfg, run, exec);
}

std::string case_study_json(const CaseStudyResult& r, const CaseStudyConfig& cfg,
                            const std::string& policy) {
  nlohmann::ordered_json j;
  j["policy"] = policy;
  j["p_recess"] = cfg.p_recess;
  j["p_ishape"] = cfg.p_ishape;
  j["episodes"] = cfg.episodes;
  j["seed"] = cfg.seed;
  j["mean_goals"] = r.mean_goals;
  j["recess_episodes"] = r.recess_episodes;
  j["ishape_episodes"] = r.ishape_episodes;
  j["recess_mean_goals"] = r.recess_goals;
  j["ishape_mean_goals"] = r.ishape_goals;
  return j.dump(2) + "\n";
}

}  // namespace smapf

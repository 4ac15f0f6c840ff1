#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "smapf/execution.hpp"
#include "smapf/harness.hpp"
#include "smapf/learner.hpp"
#include "smapf/mapgen.hpp"
#include "smapf/resolver.hpp"
#include "smapf/scenario.hpp"

namespace fs = std::filesystem;
using namespace smapf;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ParameterError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ParameterError("cannot write " + p.string());
  out << text;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text(out_path, text);
  }
}

std::pair<int, int> parse_size(const std::string& s) {
  int w = 0, h = 0;
  char x = 0;
  std::istringstream in(s);
  if (in >> w) {
    if (in >> x && (x == 'x' || x == 'X') && in >> h) return {w, h};
    if (in.eof()) return {w, w};
  }
  throw ParameterError("size must look like WxH or N");
}

Action parse_action(const nlohmann::json& j) {
  if (j.is_number_integer()) return action_from_index(j.get<int>());
  const auto s = j.get<std::string>();
  for (int k = 0; k < kNumActions; ++k) {
    if (s == action_name(action_from_index(k))) return action_from_index(k);
  }
  if (s == "stop") return Action::Idle;
  throw ParameterError("unknown action '" + s + "'");
}

std::vector<Cell> parse_cells(const nlohmann::json& j) {
  std::vector<Cell> out;
  for (const auto& e : j) out.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Socially-aware multi-agent pathfinding toolkit"};
  app.require_subcommand(1);

  // gen-map
  auto* gen = app.add_subcommand("gen-map", "Generate a map and scenario");
  std::string kind = "random", size = "32x32", out_dir;
  double density = 0.2;
  int agents = 8, length = 0;
  std::uint64_t seed = 0;
  gen->add_option("--kind", kind, "random|room|maze|recess|ishape")->required();
  gen->add_option("--size", size, "WxH (corridors: W is the corridor length)");
  gen->add_option("--density", density, "obstacle density for random maps");
  gen->add_option("--agents", agents, "number of agents");
  gen->add_option("--length", length, "corridor length (recess/ishape)");
  gen->add_option("--seed", seed, "seed");
  gen->add_option("--out", out_dir, "output directory")->required();

  // run
  auto* run = app.add_subcommand("run", "Run one episode");
  std::string scenario_path, policy = "greedy", trace_path, metrics_path;
  int max_steps = 256;
  run->add_option("--scenario", scenario_path)->required();
  run->add_option("--policy", policy, "greedy|homo|hetero|scripted|trained:PATH");
  run->add_option("--max-steps", max_steps);
  run->add_option("--trace", trace_path, "episode trace (JSON lines)");
  run->add_option("--metrics", metrics_path, "metrics JSON (default stdout)");
  run->add_option("--seed", seed, "policy seed");

  // resolve
  auto* res = app.add_subcommand("resolve", "Resolve one joint intent snapshot");
  std::string state_path;
  res->add_option("--state", state_path, "JSON {map, positions, intents, svos}")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train the two-level policy on the corridor curriculum");
  std::string config_path, train_out;
  int iterations = 0;
  tr->add_option("--config", config_path, "training config JSON");
  tr->add_option("--out", train_out, "output directory")->required();
  tr->add_option("--iterations", iterations, "override iteration cap");

  // replay-adg
  auto* adg = app.add_subcommand("replay-adg", "Replay a trace through the action dependency graph");
  std::string speeds_path, log_path;
  double jitter = 0.0, base_time = 1.0;
  adg->add_option("--trace", trace_path)->required();
  adg->add_option("--speeds", speeds_path, "JSON array of per-robot multipliers");
  adg->add_option("--seed", seed);
  adg->add_option("--jitter", jitter, "per-task jitter amplitude in [0, 1)");
  adg->add_option("--base-time", base_time);
  adg->add_option("--out", log_path, "execution log (default stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "Run an instance batch");
  std::string family = "random", report_path, csv_path;
  int instances = 200;
  bool timing = false;
  bench->add_option("--family", family, "random|room|maze");
  bench->add_option("--size", size);
  bench->add_option("--density", density);
  bench->add_option("--agents", agents);
  bench->add_option("--instances", instances);
  bench->add_option("--policy", policy);
  bench->add_option("--seed", seed);
  bench->add_option("--max-steps", max_steps);
  bench->add_option("--out", report_path, "report JSON (default stdout)");
  bench->add_option("--csv", csv_path, "per-instance CSV");
  bench->add_flag("--timing", timing, "record wall-clock times (non-reproducible)");

  // ttest
  auto* tt = app.add_subcommand("ttest", "Paired t-test between two reports");
  std::string a_path, b_path, metric = "arrival_rate";
  tt->add_option("--a", a_path)->required();
  tt->add_option("--b", b_path)->required();
  tt->add_option("--metric", metric, "per-instance column of a bench report");

  // case-study
  auto* cs = app.add_subcommand("case-study", "Symmetric corridor case study");
  double p_recess = 0.8;
  int episodes = 1000;
  std::string cs_out;
  cs->add_option("--p-recess", p_recess);
  cs->add_option("--episodes", episodes);
  cs->add_option("--policy", policy, "homo|hetero|greedy|trained:PATH");
  cs->add_option("--seed", seed);
  cs->add_option("--max-steps", max_steps);
  cs->add_option("--out", cs_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      Scenario s;
      if (kind == "recess" || kind == "ishape" || kind == "i_shape") {
        const int len = length > 0 ? length : parse_size(size).first;
        s = gen_corridor(parse_corridor_kind(kind), len, seed);
      } else {
        const auto [w, h] = parse_size(size);
        s = generate(parse_family(kind), w, h, density, agents, seed);
      }
      fs::create_directories(out_dir);
      save_map(s.map, fs::path(out_dir) / "map.map");
      write_text(fs::path(out_dir) / "scenario.json", scenario_to_json(s, "map.map"));
      std::cout << "wrote " << (fs::path(out_dir) / "scenario.json").string() << "\n";
    } else if (*run) {
      const Scenario s = load_scenario(scenario_path);
      EnvConfig cfg;
      cfg.max_steps = max_steps;
      auto ctrl = controller_factory(policy)();
      std::string trace;
      bool first = true;
      const auto result = run_episode(s, *ctrl, cfg, seed, [&](const StepView& v) {
        if (trace_path.empty()) return;
        if (first) {
          // Initial positions are the scenario starts.
          Env start(s, cfg);
          trace += trace_initial(start);
          first = false;
        }
        trace += trace_record(v);
      });
      if (!trace_path.empty()) {
        if (first) trace += trace_initial(Env(s, cfg));
        write_text(trace_path, trace);
      }
      nlohmann::ordered_json m;
      m["success"] = result.metrics.success;
      m["episode_length"] = result.metrics.episode_length;
      m["arrival_rate"] = result.metrics.arrival_rate;
      m["goals_reached"] = result.metrics.goals_reached;
      m["collisions_prevented"] = result.metrics.collisions_prevented;
      m["external_reward"] = result.external_reward;
      m["max_resolver_iterations"] = result.max_resolver_iterations;
      emit(metrics_path, m.dump(2) + "\n");
    } else if (*res) {
      const auto j = nlohmann::json::parse(slurp(state_path));
      const auto map_field = j.at("map").get<std::string>();
      const GridMap map = map_field.rfind("type octile", 0) == 0
                              ? read_map(map_field)
                              : load_map(fs::path(state_path).parent_path() / map_field);
      const auto pos = parse_cells(j.at("positions"));
      std::vector<Action> intents;
      for (const auto& a : j.at("intents")) intents.push_back(parse_action(a));
      const auto svos = j.at("svos").get<std::vector<double>>();
      const auto out = resolve(map, pos, intents, svos);
      nlohmann::ordered_json o;
      auto actions = nlohmann::json::array();
      auto ann = nlohmann::json::array();
      auto pen = nlohmann::json::array();
      for (std::size_t i = 0; i < pos.size(); ++i) {
        actions.push_back(action_name(out.actions[i]));
        ann.push_back(annotation_name(out.annotations[i]));
        if (out.penalized[i]) pen.push_back(i);
      }
      o["actions"] = actions;
      o["annotations"] = ann;
      o["penalized"] = pen;
      o["iterations"] = out.iterations;
      o["chain"] = out.pops;
      std::cout << o.dump(2) << "\n";
    } else if (*tr) {
      TrainConfig cfg = config_path.empty() ? TrainConfig{} : train_config_from_json(slurp(config_path));
      if (iterations > 0) cfg.max_iterations = iterations;
      const std::string cfg_text = train_config_json(cfg);
      const auto result = train(cfg);
      fs::create_directories(train_out);
      write_text(fs::path(train_out) / "config.json", cfg_text);
      save_checkpoint(result.policy, fnv1a64(cfg_text), fs::path(train_out) / "checkpoint.json");
      std::ostringstream csv;
      csv.precision(10);
      csv << "iteration,mean_reward,goals,ep_len,steps\n";
      for (const auto& c : result.curve) {
        csv << c.iteration << ',' << c.mean_reward << ',' << c.goals << ',' << c.episode_length << ','
            << c.steps << "\n";
      }
      write_text(fs::path(train_out) / "curve.csv", csv.str());
      if (result.diverged) {
        std::cerr << "training diverged: " << result.message << "\n";
        return 2;
      }
      std::cout << "wrote " << (fs::path(train_out) / "checkpoint.json").string() << "\n";
    } else if (*adg) {
      std::vector<std::vector<Cell>> plan;
      std::istringstream lines(slurp(trace_path));
      std::string line;
      while (std::getline(lines, line)) {
        if (line.empty()) continue;
        const auto rec = nlohmann::json::parse(line);
        if (!rec.contains("positions")) continue;
        const auto cells = parse_cells(rec["positions"]);
        if (plan.empty()) plan.resize(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) plan[i].push_back(cells[i]);
      }
      if (plan.empty()) throw ParameterError("trace has no positions");
      std::vector<double> speeds(plan.size(), 1.0);
      if (!speeds_path.empty()) speeds = nlohmann::json::parse(slurp(speeds_path)).get<std::vector<double>>();
      const auto graph = build_adg(plan);
      ExecConfig ec;
      ec.base_time = base_time;
      ec.jitter = jitter;
      ec.seed = seed;
      const auto log = simulate_execution(graph, speeds, ec);
      emit(log_path, execution_log_jsonl(log));
    } else if (*bench) {
      BatchConfig cfg;
      cfg.family = parse_family(family);
      std::tie(cfg.width, cfg.height) = parse_size(size);
      cfg.density = density;
      cfg.agents = agents;
      cfg.instances = instances;
      cfg.policy = policy;
      cfg.seed = seed;
      cfg.env.max_steps = max_steps;
      cfg.timing = timing;
      const auto rep = run_batch(cfg);
      emit(report_path, report_json(rep));
      if (!csv_path.empty()) write_text(csv_path, report_csv(rep));
    } else if (*tt) {
      auto column = [&](const std::string& path) {
        const auto j = nlohmann::json::parse(slurp(path));
        std::vector<double> v;
        if (j.is_array()) return j.get<std::vector<double>>();
        for (const auto& row : j.at("rows")) v.push_back(row.at(metric).get<double>());
        return v;
      };
      const auto a = column(a_path);
      const auto b = column(b_path);
      const auto r = paired_t_test(a, b);
      nlohmann::ordered_json o;
      o["metric"] = metric;
      o["n"] = a.size();
      o["df"] = r.df;
      o["mean_diff"] = r.mean_diff;
      o["sd_diff"] = r.sd_diff;
      o["t"] = r.t;
      o["p"] = r.p;
      std::cout << o.dump(2) << "\n";
    } else if (*cs) {
      CaseStudyConfig cfg;
      cfg.p_recess = p_recess;
      cfg.p_ishape = 1.0 - p_recess;
      cfg.episodes = episodes;
      cfg.seed = seed;
      cfg.env.max_steps = max_steps;
      const auto r = corridor_case_study(cfg, controller_factory(policy));
      emit(cs_out, case_study_json(r, cfg, policy));
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

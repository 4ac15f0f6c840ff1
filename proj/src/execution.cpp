#include "smapf/execution.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <queue>
#include <tuple>

#include <json.hpp>

#include "smapf/rng.hpp"

namespace smapf {

const char* task_status_name(TaskStatus s) {
  switch (s) {
    case TaskStatus::Staged: return "STAGED";
    case TaskStatus::Enqueued: return "ENQUEUED";
    case TaskStatus::Done: return "DONE";
  }
  return "?";
}

AdgGraph build_adg(std::span<const std::vector<Cell>> plan) {
  const int n = static_cast<int>(plan.size());
  std::size_t horizon = 0;
  for (const auto& p : plan) {
    if (p.empty()) throw ContractError("plan has an empty vertex sequence");
    horizon = std::max(horizon, p.size());
  }
  auto at = [&](int i, std::size_t t) { return t < plan[i].size() ? plan[i][t] : plan[i].back(); };

  for (std::size_t t = 0; t < horizon; ++t) {
    std::map<Cell, int> here;
    for (int i = 0; i < n; ++i) {
      if (!here.emplace(at(i, t), i).second) throw ContractError("plan has a vertex conflict");
      if (t > 0) {
        const Cell a = at(i, t - 1), b = at(i, t);
        if (std::abs(a.r - b.r) + std::abs(a.c - b.c) > 1) throw ContractError("plan step is not 4-adjacent");
      }
    }
    if (t == 0) continue;
    std::map<Cell, int> before;
    for (int i = 0; i < n; ++i) before.emplace(at(i, t - 1), i);
    // follows[i] = robot whose previous cell i enters this step.
    std::vector<int> follows(n, -1);
    for (int i = 0; i < n; ++i) {
      if (at(i, t) == at(i, t - 1)) continue;
      auto it = before.find(at(i, t));
      if (it == before.end()) continue;
      if (at(it->second, t) == at(i, t - 1)) throw ContractError("plan has a swap conflict");
      follows[i] = it->second;
    }
    // A closed chain of followers is a rotation: nobody can vacate first.
    std::vector<int> mark(n, 0);
    for (int i = 0; i < n; ++i) {
      int u = i;
      while (u >= 0 && mark[u] == 0) {
        mark[u] = i + 1;
        u = follows[u];
      }
      if (u >= 0 && mark[u] == i + 1) throw ContractError("plan has a rotation cycle");
    }
  }

  AdgGraph g;
  g.robots = n;
  g.robot_tasks.resize(n);
  for (int i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < horizon; ++t) {
      AdgTask task;
      task.id = static_cast<int>(g.tasks.size());
      task.robot = i;
      task.time = static_cast<int>(t);
      task.end = at(i, t);
      task.start = t == 0 ? task.end : at(i, t - 1);
      task.action = direction(task.start, task.end);
      if (t > 0) task.dependencies.push_back(g.robot_tasks[i].back());
      g.robot_tasks[i].push_back(task.id);
      g.tasks.push_back(std::move(task));
    }
  }

  // Stays per cell: (arrival time, robot, arrival task, leave task or -1).
  struct Stay {
    int arrive_time;
    int robot;
    int arrive_task;
    int leave_task;
  };
  std::map<Cell, std::vector<Stay>> stays;
  for (int i = 0; i < n; ++i) {
    const auto& ids = g.robot_tasks[i];
    Stay cur{0, i, ids[0], -1};
    Cell cell = g.tasks[ids[0]].end;
    for (std::size_t k = 1; k < ids.size(); ++k) {
      const AdgTask& t = g.tasks[ids[k]];
      if (t.start == t.end) continue;
      cur.leave_task = t.id;
      stays[cell].push_back(cur);
      cur = Stay{t.time, i, t.id, -1};
      cell = t.end;
    }
    stays[cell].push_back(cur);
  }
  for (auto& [cell, list] : stays) {
    std::sort(list.begin(), list.end(), [](const Stay& a, const Stay& b) {
      return std::tie(a.arrive_time, a.robot) < std::tie(b.arrive_time, b.robot);
    });
    for (std::size_t k = 1; k < list.size(); ++k) {
      const Stay& prev = list[k - 1];
      const Stay& next = list[k];
      if (prev.robot == next.robot) continue;
      if (prev.leave_task < 0) throw ContractError("plan moves into a cell that is never vacated");
      auto& deps = g.tasks[next.arrive_task].dependencies;
      if (std::find(deps.begin(), deps.end(), prev.leave_task) == deps.end()) deps.push_back(prev.leave_task);
    }
  }
  for (auto& t : g.tasks) {
    std::sort(t.dependencies.begin(), t.dependencies.end());
    for (int d : t.dependencies) g.tasks[d].dependents.push_back(t.id);
  }

  // Kahn's algorithm, smallest id first.
  std::vector<int> indeg(g.tasks.size());
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (const auto& t : g.tasks) {
    indeg[t.id] = static_cast<int>(t.dependencies.size());
    if (indeg[t.id] == 0) ready.push(t.id);
  }
  while (!ready.empty()) {
    const int u = ready.top();
    ready.pop();
    g.topo_order.push_back(u);
    for (int v : g.tasks[u].dependents) {
      if (--indeg[v] == 0) ready.push(v);
    }
  }
  if (g.topo_order.size() != g.tasks.size()) throw InternalError("action dependency graph has a cycle");
  return g;
}

ExecutionLog simulate_execution(const AdgGraph& graph, std::span<const double> speed,
                                const ExecConfig& cfg) {
  if (static_cast<int>(speed.size()) != graph.robots) throw ParameterError("one speed multiplier per robot");
  for (double s : speed) {
    if (!(s > 0.0)) throw ParameterError("speed multipliers must be positive");
  }
  if (!(cfg.base_time > 0.0) || !(cfg.jitter >= 0.0 && cfg.jitter < 1.0)) {
    throw ParameterError("base_time must be positive and jitter in [0, 1)");
  }
  const std::size_t m = graph.tasks.size();
  std::vector<double> factor(m, 1.0);
  Rng rng(cfg.seed);
  for (std::size_t k = 0; k < m; ++k) factor[k] = rng.uniform(1.0 - cfg.jitter, 1.0 + cfg.jitter);

  ExecutionLog log;
  log.start.assign(m, 0.0);
  log.finish.assign(m, 0.0);
  log.status.assign(m, TaskStatus::Staged);
  std::vector<int> remaining(m);
  for (std::size_t k = 0; k < m; ++k) remaining[k] = static_cast<int>(graph.tasks[k].dependencies.size());

  using Event = std::tuple<double, long, int>;  // (time, sequence, task)
  std::priority_queue<Event, std::vector<Event>, std::greater<>> pending;
  long seq = 0;
  auto enqueue = [&](int id, double t) {
    const AdgTask& task = graph.tasks[id];
    log.status[id] = TaskStatus::Enqueued;
    log.start[id] = t;
    log.events.push_back({t, id, task.robot, TaskStatus::Enqueued});
    const double duration = task.time == 0 ? 0.0 : cfg.base_time * speed[task.robot] * factor[id];
    pending.emplace(t + duration, seq++, id);
  };
  for (const auto& t : graph.tasks) {
    if (remaining[t.id] == 0) enqueue(t.id, 0.0);
  }
  while (!pending.empty()) {
    const auto [t, s, id] = pending.top();
    pending.pop();
    const AdgTask& task = graph.tasks[id];
    if (log.status[id] != TaskStatus::Enqueued) throw InternalError("task finished out of order");
    log.status[id] = TaskStatus::Done;
    log.finish[id] = t;
    log.makespan = std::max(log.makespan, t);
    log.events.push_back({t, id, task.robot, TaskStatus::Done});
    for (int d : task.dependents) {
      if (--remaining[d] == 0) enqueue(d, t);
    }
  }
  log.all_done = std::all_of(log.status.begin(), log.status.end(),
                             [](TaskStatus s) { return s == TaskStatus::Done; });
  return log;
}

std::vector<Occupancy> occupancy_intervals(const AdgGraph& graph, const ExecutionLog& log) {
  std::vector<Occupancy> out;
  for (int i = 0; i < graph.robots; ++i) {
    const auto& ids = graph.robot_tasks[i];
    Cell cell = graph.tasks[ids[0]].end;
    double from = 0.0;
    for (std::size_t k = 1; k < ids.size(); ++k) {
      const AdgTask& t = graph.tasks[ids[k]];
      if (t.start == t.end) continue;
      // Leaving: the old cell is held until the move completes; the new one
      // from the moment it starts.
      out.push_back({cell, i, from, log.finish[t.id]});
      cell = t.end;
      from = log.start[t.id];
    }
    out.push_back({cell, i, from, std::numeric_limits<double>::infinity()});
  }
  return out;
}

int count_cooccupancy(std::span<const Occupancy> intervals) {
  std::map<Cell, std::vector<const Occupancy*>> by_cell;
  for (const auto& o : intervals) by_cell[o.cell].push_back(&o);
  int bad = 0;
  for (auto& [cell, list] : by_cell) {
    for (std::size_t a = 0; a < list.size(); ++a) {
      for (std::size_t b = a + 1; b < list.size(); ++b) {
        if (list[a]->robot == list[b]->robot) continue;
        if (list[a]->from < list[b]->to && list[b]->from < list[a]->to) ++bad;
      }
    }
  }
  return bad;
}

std::string execution_log_jsonl(const ExecutionLog& log) {
  std::string out;
  for (const auto& e : log.events) {
    nlohmann::ordered_json j;
    j["t"] = e.t;
    j["task_id"] = e.task;
    j["robot_id"] = e.robot;
    j["transition"] = task_status_name(e.transition);
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace smapf

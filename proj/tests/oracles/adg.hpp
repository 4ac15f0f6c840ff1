#pragma once

// Independent checks on action dependency graphs and execution logs.

#include <limits>
#include <map>
#include <vector>

#include "smapf/execution.hpp"

namespace oracle {

using smapf::AdgGraph;
using smapf::AdgTask;
using smapf::Cell;
using smapf::ExecutionLog;
using smapf::TaskStatus;

// Occupancy rebuilt from the raw event log: a robot holds its cell until the
// move out finishes and holds the target from the moment the move starts.
struct Interval {
  int robot;
  double from, to;
};

inline std::map<Cell, std::vector<Interval>> intervals_from_events(const AdgGraph& g, const ExecutionLog& log) {
  std::map<int, double> enq, done;
  for (const auto& e : log.events) {
    (e.transition == TaskStatus::Enqueued ? enq : done)[e.task] = e.t;
  }
  std::map<Cell, std::vector<Interval>> out;
  for (int r = 0; r < g.robots; ++r) {
    double since = 0.0;
    Cell here = g.tasks[g.robot_tasks[r][0]].end;
    for (int id : g.robot_tasks[r]) {
      const auto& t = g.tasks[id];
      if (t.start == t.end) continue;
      out[here].push_back({r, since, done.at(id)});
      here = t.end;
      since = enq.at(id);
    }
    out[here].push_back({r, since, std::numeric_limits<double>::infinity()});
  }
  return out;
}

inline int overlaps(const std::map<Cell, std::vector<Interval>>& cells) {
  int bad = 0;
  for (const auto& [cell, list] : cells) {
    for (std::size_t a = 0; a < list.size(); ++a) {
      for (std::size_t b = a + 1; b < list.size(); ++b) {
        if (list[a].robot != list[b].robot && list[a].from < list[b].to && list[b].from < list[a].to) ++bad;
      }
    }
  }
  return bad;
}

// Every pair of arrivals into one cell appears in the topological order in
// planned-time order.
inline bool per_cell_order_ok(const AdgGraph& g) {
  std::vector<int> rank(g.tasks.size());
  for (std::size_t k = 0; k < g.topo_order.size(); ++k) rank[g.topo_order[k]] = static_cast<int>(k);
  std::map<Cell, std::vector<const AdgTask*>> arrivals;
  for (const auto& t : g.tasks) {
    if (t.time == 0 || t.start != t.end) arrivals[t.end].push_back(&t);
  }
  for (auto& [cell, list] : arrivals) {
    for (const auto* a : list) {
      for (const auto* b : list) {
        if (a->robot != b->robot && a->time < b->time && rank[a->id] > rank[b->id]) return false;
      }
    }
  }
  return true;
}

inline bool topo_valid(const AdgGraph& g) {
  std::vector<int> rank(g.tasks.size(), -1);
  for (std::size_t k = 0; k < g.topo_order.size(); ++k) rank[g.topo_order[k]] = static_cast<int>(k);
  for (const auto& t : g.tasks) {
    for (int d : t.dependencies) {
      if (rank[d] >= rank[t.id]) return false;
    }
  }
  return g.topo_order.size() == g.tasks.size();
}


}  // namespace oracle

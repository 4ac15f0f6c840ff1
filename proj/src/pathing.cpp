#include "smapf/pathing.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace smapf {

int worker_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

void bfs_fill(const GridMap& map, std::vector<int>& dist, std::vector<int>& queue, int avoid_idx) {
  const int w = map.width();
  const int h = map.height();
  const auto& blocked = map.raw();
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    const int r = u / w;
    const int c = u % w;
    const int du = dist[u] + 1;
    // Up, Down, Left, Right.
    const int nbr[4] = {r > 0 ? u - w : -1, r + 1 < h ? u + w : -1, c > 0 ? u - 1 : -1,
                        c + 1 < w ? u + 1 : -1};
    for (int v : nbr) {
      if (v < 0 || blocked[v] || v == avoid_idx || dist[v] != kUnreachable) continue;
      dist[v] = du;
      queue.push_back(v);
    }
  }
}

}  // namespace

DistanceField::DistanceField(const GridMap& map, Cell goal) : goal_(goal), width_(map.width()) {
  if (!map.passable(goal)) throw ParameterError("distance field goal must be a free cell");
  dist_.assign(map.size(), kUnreachable);
  std::vector<int> queue;
  queue.reserve(map.size());
  const int g = map.index(goal);
  dist_[g] = 0;
  queue.push_back(g);
  bfs_fill(map, dist_, queue, -1);
}

DistanceField distance_field(const GridMap& map, Cell goal) { return DistanceField(map, goal); }

std::vector<DistanceField> distance_fields(const GridMap& map, std::span<const Cell> goals,
                                           Exec exec) {
  const int n = static_cast<int>(goals.size());
  std::vector<DistanceField> out(n);
  if (exec == Exec::Serial) {
    for (int i = 0; i < n; ++i) out[i] = DistanceField(map, goals[i]);
    return out;
  }
  // Exceptions cannot cross the parallel region; record the first failure.
  std::vector<char> failed(n, 0);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    if (map.passable(goals[i])) {
      out[i] = DistanceField(map, goals[i]);
    } else {
      failed[i] = 1;
    }
  }
  for (char f : failed) {
    if (f) throw ParameterError("distance field goal must be a free cell");
  }
  return out;
}

PathFlow descend(const GridMap& map, const DistanceField& field, Cell start) {
  if (!map.passable(start) || !field.reachable(start)) {
    throw NoPathError("goal unreachable from start");
  }
  PathFlow flow;
  Cell cur = start;
  int d = field.at(cur);
  flow.cells.reserve(d + 1);
  flow.dirs.reserve(d + 1);
  while (d > 0) {
    bool moved = false;
    for (Action a : kMoveOrder) {
      const Cell nxt = step(cur, a);
      if (map.passable(nxt) && field.at(nxt) == d - 1) {
        flow.cells.push_back(cur);
        flow.dirs.push_back(a);
        cur = nxt;
        --d;
        moved = true;
        break;
      }
    }
    if (!moved) throw InternalError("distance field has no descending neighbor");
  }
  flow.cells.push_back(cur);
  flow.dirs.push_back(Action::Idle);
  return flow;
}

PathFlow astar_path(const GridMap& map, Cell start, Cell goal) {
  if (!map.passable(goal)) throw ParameterError("goal must be a free cell");
  return descend(map, distance_field(map, goal), start);
}

std::vector<int> bfs_distances(const GridMap& map, std::span<const Cell> sources,
                               std::optional<Cell> avoid) {
  std::vector<int> dist(map.size(), kUnreachable);
  std::vector<int> queue;
  queue.reserve(map.size());
  const int avoid_idx = avoid && map.in_bounds(*avoid) ? map.index(*avoid) : -1;
  for (Cell s : sources) {
    if (!map.passable(s)) continue;
    const int i = map.index(s);
    if (i == avoid_idx || dist[i] == 0) continue;
    dist[i] = 0;
    queue.push_back(i);
  }
  bfs_fill(map, dist, queue, avoid_idx);
  return dist;
}

int bounded_distance(const GridMap& map, Cell from, Cell to, Cell avoid, int limit) {
  if (from == avoid || to == avoid || !map.passable(from) || !map.passable(to)) {
    return from == to && map.passable(from) && from != avoid ? 0 : kUnreachable;
  }
  if (from == to) return 0;
  const int w = map.width();
  const int h = map.height();
  const auto& blocked = map.raw();
  const int target = map.index(to);
  const int avoid_idx = map.in_bounds(avoid) ? map.index(avoid) : -1;
  // Thread-local scratch keeps repeated queries allocation-free.
  thread_local std::vector<int> dist;
  thread_local std::vector<int> queue;
  dist.assign(map.size(), kUnreachable);
  queue.clear();
  const int s = map.index(from);
  dist[s] = 0;
  queue.push_back(s);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    const int du = dist[u] + 1;
    if (du > limit) break;
    const int r = u / w;
    const int c = u % w;
    const int nbr[4] = {r > 0 ? u - w : -1, r + 1 < h ? u + w : -1, c > 0 ? u - 1 : -1,
                        c + 1 < w ? u + 1 : -1};
    for (int v : nbr) {
      if (v < 0 || blocked[v] || v == avoid_idx || dist[v] != kUnreachable) continue;
      if (v == target) return du;
      dist[v] = du;
      queue.push_back(v);
    }
  }
  return kUnreachable;
}

}  // namespace smapf

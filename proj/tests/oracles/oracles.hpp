#pragma once

// Independent reference implementations used only by tests. They share no
// code with the library beyond the plain data types.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <tuple>
#include <vector>

#include "smapf/grid.hpp"
#include "smapf/pathing.hpp"

namespace oracle {

using smapf::Cell;
using smapf::GridMap;

inline bool free_cell(const GridMap& m, Cell c) {
  return c.r >= 0 && c.c >= 0 && c.r < m.height() && c.c < m.width() && !m.blocked(c);
}

inline std::vector<Cell> nbrs4(Cell c) {
  return {{c.r - 1, c.c}, {c.r + 1, c.c}, {c.r, c.c - 1}, {c.r, c.c + 1}};
}

/// O(V^2) Dijkstra with unit weights; -1 where unreachable.
inline std::vector<int> dijkstra(const GridMap& m, Cell goal) {
  const int V = m.width() * m.height();
  const int inf = std::numeric_limits<int>::max();
  std::vector<int> d(V, inf);
  std::vector<char> done(V, 0);
  if (!free_cell(m, goal)) return std::vector<int>(V, -1);
  d[goal.r * m.width() + goal.c] = 0;
  for (;;) {
    int u = -1;
    for (int v = 0; v < V; ++v) {
      if (!done[v] && d[v] != inf && (u < 0 || d[v] < d[u])) u = v;
    }
    if (u < 0) break;
    done[u] = 1;
    for (Cell nb : nbrs4({u / m.width(), u % m.width()})) {
      if (!free_cell(m, nb)) continue;
      const int v = nb.r * m.width() + nb.c;
      if (d[u] + 1 < d[v]) d[v] = d[u] + 1;
    }
  }
  for (auto& x : d) {
    if (x == inf) x = -1;
  }
  return d;
}

/// Shortest path cells from start by descent on the oracle field with the
/// Up, Down, Left, Right preference, plus direction codes (0 = stop,
/// 1..4 = U, D, L, R).
inline std::pair<std::vector<Cell>, std::vector<int>> descent_path(const GridMap& m, Cell start,
                                                                   Cell goal) {
  const auto d = dijkstra(m, goal);
  std::vector<Cell> cells;
  std::vector<int> dirs;
  auto D = [&](Cell c) { return d[c.r * m.width() + c.c]; };
  if (D(start) < 0) return {{start}, {0}};
  Cell cur = start;
  while (D(cur) > 0) {
    const auto nb = nbrs4(cur);
    for (int k = 0; k < 4; ++k) {
      if (free_cell(m, nb[k]) && D(nb[k]) == D(cur) - 1) {
        cells.push_back(cur);
        dirs.push_back(k + 1);
        cur = nb[k];
        break;
      }
    }
  }
  cells.push_back(cur);
  dirs.push_back(0);
  return {cells, dirs};
}

/// Brute-force overlap: every pair, every index pair of the two vertex lists.
inline std::vector<double> overlap(const GridMap& m, const std::vector<Cell>& pos,
                                   const std::vector<Cell>& goals, double gamma) {
  const int n = static_cast<int>(pos.size());
  std::vector<std::pair<std::vector<Cell>, std::vector<int>>> flows;
  for (int i = 0; i < n; ++i) flows.push_back(descent_path(m, pos[i], goals[i]));
  std::vector<double> O(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t a = 0; a < flows[i].first.size(); ++a) {
        for (std::size_t b = 0; b < flows[j].first.size(); ++b) {
          if (flows[i].first[a] == flows[j].first[b] && flows[i].second[a] != flows[j].second[b]) {
            s += std::pow(gamma, static_cast<double>(a)) + std::pow(gamma, static_cast<double>(b));
          }
        }
      }
      O[i * n + j] = s;
      O[j * n + i] = s;
    }
  }
  return O;
}

/// Joint-state BFS for two agents under vertex and swap constraints.
/// Returns the optimal joint makespan or -1 if the goal state is unreachable.
inline int joint_bfs(const GridMap& m, Cell s0, Cell s1, Cell g0, Cell g1) {
  using State = std::pair<Cell, Cell>;
  std::map<State, int> seen;
  std::queue<State> q;
  seen[{s0, s1}] = 0;
  q.push({s0, s1});
  while (!q.empty()) {
    const auto [a, b] = q.front();
    q.pop();
    const int d = seen[{a, b}];
    if (a == g0 && b == g1) return d;
    auto opts = [&](Cell c) {
      auto v = nbrs4(c);
      v.push_back(c);
      return v;
    };
    for (Cell na : opts(a)) {
      if (!free_cell(m, na)) continue;
      for (Cell nb : opts(b)) {
        if (!free_cell(m, nb) || na == nb) continue;
        if (na == b && nb == a) continue;
        if (seen.emplace(State{na, nb}, d + 1).second) q.push({na, nb});
      }
    }
  }
  return -1;
}

/// Number of connected components of free cells.
inline int components(const GridMap& m) {
  std::set<std::pair<int, int>> seen;
  int k = 0;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (!free_cell(m, {r, c}) || seen.count({r, c})) continue;
      ++k;
      std::vector<Cell> st{{r, c}};
      seen.insert({r, c});
      while (!st.empty()) {
        const Cell u = st.back();
        st.pop_back();
        for (Cell v : nbrs4(u)) {
          if (free_cell(m, v) && seen.insert({v.r, v.c}).second) st.push_back(v);
        }
      }
    }
  }
  return k;
}

/// A_t by the explicit double sum over future TD errors.
inline std::vector<double> gae_double_sum(const std::vector<double>& r, const std::vector<double>& v,
                                          double bootstrap, double gamma, double lambda) {
  const std::size_t n = r.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; t + k < n; ++k) {
      const std::size_t u = t + k;
      const double next = u + 1 < n ? v[u + 1] : bootstrap;
      const double delta = r[u] + gamma * next - v[u];
      out[t] += std::pow(gamma * lambda, static_cast<double>(k)) * delta;
    }
  }
  return out;
}

}  // namespace oracle

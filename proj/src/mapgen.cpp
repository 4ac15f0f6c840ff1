#include "smapf/mapgen.hpp"

#include <optional>
#include <string>

#include "smapf/rng.hpp"

namespace smapf {

MapFamily parse_family(std::string_view name) {
  if (name == "random") return MapFamily::Random;
  if (name == "room") return MapFamily::Room;
  if (name == "maze") return MapFamily::Maze;
  throw ParameterError("unknown map family '" + std::string(name) + "'");
}

CorridorKind parse_corridor_kind(std::string_view name) {
  if (name == "recess") return CorridorKind::Recess;
  if (name == "ishape" || name == "i_shape") return CorridorKind::IShape;
  throw ParameterError("unknown corridor kind '" + std::string(name) + "'");
}

const char* family_name(MapFamily f) {
  switch (f) {
    case MapFamily::Random: return "random";
    case MapFamily::Room: return "room";
    case MapFamily::Maze: return "maze";
  }
  return "?";
}

const char* corridor_kind_name(CorridorKind k) {
  return k == CorridorKind::Recess ? "recess" : "ishape";
}

namespace {

std::vector<int> label_components(const GridMap& map) {
  std::vector<int> label(map.size(), -1);
  std::vector<int> queue;
  int next = 0;
  for (int s = 0; s < map.size(); ++s) {
    if (map.raw()[s] || label[s] >= 0) continue;
    label[s] = next;
    queue.assign(1, s);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const Cell u = map.cell(queue[head]);
      for (Action a : kMoveOrder) {
        const Cell v = step(u, a);
        if (!map.passable(v) || label[map.index(v)] >= 0) continue;
        label[map.index(v)] = next;
        queue.push_back(map.index(v));
      }
    }
    ++next;
  }
  return label;
}

// Starts uniformly without replacement; each goal drawn from unused free cells
// until one lands in the start's component.
std::optional<Scenario> place_agents(const GridMap& map, int n, std::uint64_t seed, Rng& rng) {
  auto free = map.free_cells();
  if (static_cast<int>(free.size()) < n) return std::nullopt;
  const auto label = label_components(map);
  std::vector<Cell> pool = free;
  rng.shuffle(std::span<Cell>(pool));
  Scenario s{map, {pool.begin(), pool.begin() + n}, {}, seed};
  std::vector<char> goal_used(map.size(), 0);
  for (int i = 0; i < n; ++i) {
    const int comp = label[map.index(s.starts[i])];
    bool placed = false;
    for (int attempt = 0; attempt < kGenerationRetries; ++attempt) {
      const Cell g = free[rng.below(free.size())];
      if (goal_used[map.index(g)] || label[map.index(g)] != comp) continue;
      goal_used[map.index(g)] = 1;
      s.goals.push_back(g);
      placed = true;
      break;
    }
    if (!placed) return std::nullopt;
  }
  return s;
}

void check_agents(int n) {
  if (n < 1) throw ParameterError("need at least one agent");
}

// Recursive division. Every wall gets one door; a wall is never placed where
// it would seal a door of an enclosing wall.
void divide(GridMap& map, Rng& rng, int r0, int c0, int r1, int c1) {
  const int h = r1 - r0 + 1;
  const int w = c1 - c0 + 1;
  auto door_at = [&](Cell c) { return map.passable(c); };
  std::vector<int> cols;
  std::vector<int> rows;
  if (w >= 7) {
    for (int c = c0 + 3; c <= c1 - 3; ++c) {
      if (door_at({r0 - 1, c}) || door_at({r1 + 1, c})) continue;
      cols.push_back(c);
    }
  }
  if (h >= 7) {
    for (int r = r0 + 3; r <= r1 - 3; ++r) {
      if (door_at({r, c0 - 1}) || door_at({r, c1 + 1})) continue;
      rows.push_back(r);
    }
  }
  if (cols.empty() && rows.empty()) return;
  bool vertical;
  if (cols.empty()) {
    vertical = false;
  } else if (rows.empty()) {
    vertical = true;
  } else if (w != h) {
    vertical = w > h;
  } else {
    vertical = rng.bernoulli(0.5);
  }
  if (vertical) {
    const int c = cols[rng.below(cols.size())];
    for (int r = r0; r <= r1; ++r) map.set_blocked({r, c}, true);
    map.set_blocked({rng.range(r0, r1), c}, false);
    divide(map, rng, r0, c0, r1, c - 1);
    divide(map, rng, r0, c + 1, r1, c1);
  } else {
    const int r = rows[rng.below(rows.size())];
    for (int c = c0; c <= c1; ++c) map.set_blocked({r, c}, true);
    map.set_blocked({r, rng.range(c0, c1)}, false);
    divide(map, rng, r0, c0, r - 1, c1);
    divide(map, rng, r + 1, c0, r1, c1);
  }
}

GridMap carve_maze(int width, int height, Rng& rng) {
  GridMap map(width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 1));
  const int nr = (height + 1) / 2;
  const int nc = (width + 1) / 2;
  std::vector<char> seen(static_cast<std::size_t>(nr) * nc, 0);
  std::vector<std::pair<int, int>> stack;
  const int sr = static_cast<int>(rng.below(nr));
  const int sc = static_cast<int>(rng.below(nc));
  stack.emplace_back(sr, sc);
  seen[sr * nc + sc] = 1;
  map.set_blocked({2 * sr, 2 * sc}, false);
  while (!stack.empty()) {
    const auto [r, c] = stack.back();
    std::pair<int, int> options[4];
    int k = 0;
    for (Action a : kMoveOrder) {
      const Cell n = step({r, c}, a);
      if (n.r < 0 || n.r >= nr || n.c < 0 || n.c >= nc || seen[n.r * nc + n.c]) continue;
      options[k++] = {n.r, n.c};
    }
    if (k == 0) {
      stack.pop_back();
      continue;
    }
    const auto [tr, tc] = options[rng.below(k)];
    seen[tr * nc + tc] = 1;
    map.set_blocked({r + tr, c + tc}, false);  // wall cell between the two nodes
    map.set_blocked({2 * tr, 2 * tc}, false);
    stack.emplace_back(tr, tc);
  }
  return map;
}

}  // namespace

Scenario gen_random(int width, int height, double obstacle_density, int n_agents,
                    std::uint64_t seed) {
  if (!(obstacle_density >= 0.0 && obstacle_density <= 0.5)) {
    throw ParameterError("obstacle density must lie in [0, 0.5]");
  }
  check_agents(n_agents);
  GridMap map(width, height);
  Rng rng(seed);
  for (int attempt = 0; attempt < kGenerationRetries; ++attempt) {
    for (int i = 0; i < map.size(); ++i) map.set_blocked(map.cell(i), rng.bernoulli(obstacle_density));
    if (auto s = place_agents(map, n_agents, seed, rng)) return *s;
  }
  throw GenerationError("random map: agent placement infeasible after retry budget");
}

Scenario gen_room(int width, int height, int n_agents, std::uint64_t seed) {
  if (width < 8 || height < 8) throw ParameterError("room maps need width, height >= 8");
  check_agents(n_agents);
  const bool banded = width >= 16 && height >= 16;
  Rng rng(seed);
  for (int attempt = 0; attempt < kGenerationRetries; ++attempt) {
    GridMap map(width, height);
    divide(map, rng, 0, 0, height - 1, width - 1);
    const double d = map.obstacle_density();
    if (banded && (d < 0.25 || d > 0.35)) continue;
    if (auto s = place_agents(map, n_agents, seed, rng)) return *s;
  }
  throw GenerationError("room map: density band or placement infeasible after retry budget");
}

Scenario gen_maze(int width, int height, int n_agents, std::uint64_t seed) {
  check_agents(n_agents);
  Rng rng(seed);
  for (int attempt = 0; attempt < kGenerationRetries; ++attempt) {
    GridMap map = carve_maze(width, height, rng);
    if (auto s = place_agents(map, n_agents, seed, rng)) return *s;
  }
  throw GenerationError("maze map: agent placement infeasible after retry budget");
}

Scenario gen_corridor(CorridorKind kind, int corridor_len, std::uint64_t seed) {
  if (corridor_len < 3) throw ParameterError("corridor length must be at least 3");
  const int len = corridor_len;
  if (kind == CorridorKind::Recess) {
    // At length 3 both pockets would hang off the middle cell.
    if (len < 4) throw ParameterError("recess corridor length must be at least 4");
    GridMap map(len, 3, std::vector<std::uint8_t>(static_cast<std::size_t>(len) * 3, 1));
    for (int c = 0; c < len; ++c) map.set_blocked({1, c}, false);
    // Pocket columns k and len-1-k; the centre column is skipped for odd
    // lengths so the pockets never stack.
    Rng rng(seed);
    std::vector<int> ks;
    for (int x = 1; x <= len - 2; ++x) {
      if (x != len - 1 - x) ks.push_back(x);
    }
    const int k = ks[rng.below(ks.size())];
    map.set_blocked({0, k}, false);
    map.set_blocked({2, len - 1 - k}, false);
    Scenario s{map, {{1, 0}, {1, len - 1}}, {{1, len - 1}, {1, 0}}, seed};
    validate(s);
    return s;
  }
  const int w = len + 6;
  GridMap map(w, 3, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * 3, 1));
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      map.set_blocked({r, c}, false);
      map.set_blocked({r, w - 1 - c}, false);
    }
  }
  for (int c = 3; c < w - 3; ++c) map.set_blocked({1, c}, false);
  Scenario s{map, {{0, 0}, {0, w - 1}}, {{0, w - 1}, {0, 0}}, seed};
  validate(s);
  return s;
}

Scenario generate(MapFamily family, int width, int height, double density, int n_agents,
                  std::uint64_t seed) {
  switch (family) {
    case MapFamily::Random: return gen_random(width, height, density, n_agents, seed);
    case MapFamily::Room: return gen_room(width, height, n_agents, seed);
    case MapFamily::Maze: return gen_maze(width, height, n_agents, seed);
  }
  throw ParameterError("unknown map family");
}

}  // namespace smapf

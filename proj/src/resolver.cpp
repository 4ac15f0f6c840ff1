#include "smapf/resolver.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <unordered_map>

namespace smapf {

const char* annotation_name(Annotation a) {
  switch (a) {
    case Annotation::Normal: return "normal";
    case Annotation::Invalidated: return "invalidated";
    case Annotation::RestrictedIdled: return "restricted_idled";
  }
  return "?";
}

namespace {

// Target cells keyed by row-major index; off-map targets never match a
// free cell so they are keyed to -1 - agent to stay unique.
struct Targets {
  std::vector<Cell> cell;
  std::vector<long> key;
  std::unordered_multimap<long, int> by_key;
  std::unordered_map<long, int> occupant;

  Targets(const GridMap& map, std::span<const Cell> positions, std::span<const Action> intents) {
    const int n = static_cast<int>(positions.size());
    cell.resize(n);
    key.resize(n);
    for (int i = 0; i < n; ++i) {
      cell[i] = step(positions[i], intents[i]);
      key[i] = map.in_bounds(cell[i]) ? map.index(cell[i]) : -1 - i;
      by_key.emplace(key[i], i);
      occupant.emplace(map.index(positions[i]), i);
    }
  }

  void retarget(int i, Cell c, long k) {
    auto range = by_key.equal_range(key[i]);
    for (auto it = range.first; it != range.second; ++it) {
      if (it->second == i) {
        by_key.erase(it);
        break;
      }
    }
    cell[i] = c;
    key[i] = k;
    by_key.emplace(k, i);
  }
};

std::vector<int> conflicts_of(const GridMap& map, std::span<const Cell> positions,
                              const Targets& tg, int i) {
  std::vector<int> out;
  auto range = tg.by_key.equal_range(tg.key[i]);
  for (auto it = range.first; it != range.second; ++it) {
    if (it->second != i) out.push_back(it->second);
  }
  // Swap: i enters j's cell while j enters i's.
  if (tg.cell[i] != positions[i] && map.in_bounds(tg.cell[i])) {
    auto occ = tg.occupant.find(map.index(tg.cell[i]));
    if (occ != tg.occupant.end()) {
      const int j = occ->second;
      if (j != i && tg.cell[j] == positions[i]) out.push_back(j);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

Classification classify(const GridMap& map, std::span<const Cell> positions,
                        std::span<const Action> intents, int agent) {
  Classification out;
  const Cell target = step(positions[agent], intents[agent]);
  if (!map.passable(target)) {
    out.status = ActionStatus::Invalid;
    return out;
  }
  const Targets tg(map, positions, intents);
  out.conflicts = conflicts_of(map, positions, tg, agent);
  out.status = out.conflicts.empty() ? ActionStatus::Valid : ActionStatus::Restricted;
  return out;
}

ResolutionOutcome resolve(const GridMap& map, std::span<const Cell> positions,
                          std::span<const Action> intents, std::span<const double> svo_degrees) {
  const int n = static_cast<int>(positions.size());
  if (static_cast<int>(intents.size()) != n || static_cast<int>(svo_degrees.size()) != n) {
    throw ParameterError("resolve: input sizes differ");
  }
  ResolutionOutcome out;
  out.actions.assign(intents.begin(), intents.end());
  out.penalized.assign(n, 0);
  out.annotations.assign(n, Annotation::Normal);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return svo_degrees[a] > svo_degrees[b]; });
  std::deque<int> chain(order.begin(), order.end());
  std::vector<char> queued(n, 1);
  std::vector<char> idled(n, 0);

  Targets tg(map, positions, out.actions);

  auto idle = [&](int i, Annotation why) {
    out.actions[i] = Action::Idle;
    out.annotations[i] = why;
    idled[i] = 1;
    tg.retarget(i, positions[i], map.index(positions[i]));
    // Anyone heading into the now-held cell must be looked at again.
    auto range = tg.by_key.equal_range(map.index(positions[i]));
    std::vector<int> movers;
    for (auto it = range.first; it != range.second; ++it) {
      if (it->second != i && !queued[it->second]) movers.push_back(it->second);
    }
    std::sort(movers.begin(), movers.end());
    for (int j : movers) {
      chain.push_back(j);
      queued[j] = 1;
    }
  };

  const int bound = 4 * n;
  while (!chain.empty()) {
    const int i = chain.front();
    chain.pop_front();
    queued[i] = 0;
    out.pops.push_back(i);
    if (++out.iterations > bound) throw InternalError("resolver exceeded 4n chain evaluations");

    if (!map.passable(tg.cell[i])) {
      out.penalized[i] = 1;
      idle(i, Annotation::Invalidated);
      continue;
    }
    const auto conflicts = conflicts_of(map, positions, tg, i);
    if (conflicts.empty()) continue;
    for (int j : conflicts) {
      if (svo_degrees[i] > svo_degrees[j]) out.penalized[i] = 1;
      if (svo_degrees[j] > svo_degrees[i]) out.penalized[j] = 1;
    }
    if (!idled[i]) idle(i, Annotation::RestrictedIdled);
  }
  return out;
}

std::vector<Action> greedy_intents(const GridMap& map, std::span<const Cell> positions,
                                   std::span<const DistanceField> fields) {
  const int n = static_cast<int>(positions.size());
  std::vector<Action> out(n, Action::Idle);
  for (int i = 0; i < n; ++i) {
    const Cell p = positions[i];
    if (!fields[i].reachable(p)) continue;
    const int d = fields[i].at(p);
    if (d == 0) continue;
    for (Action a : kMoveOrder) {
      const Cell q = step(p, a);
      if (map.passable(q) && fields[i].at(q) == d - 1) {
        out[i] = a;
        break;
      }
    }
  }
  return out;
}

bool joint_action_safe(const GridMap& map, std::span<const Cell> positions,
                       std::span<const Action> actions) {
  const int n = static_cast<int>(positions.size());
  std::unordered_map<int, int> at;
  std::vector<Cell> next(n);
  for (int i = 0; i < n; ++i) {
    next[i] = step(positions[i], actions[i]);
    if (!map.passable(next[i])) return false;
    if (!at.emplace(map.index(next[i]), i).second) return false;
  }
  std::unordered_map<int, int> was;
  for (int i = 0; i < n; ++i) was.emplace(map.index(positions[i]), i);
  for (int i = 0; i < n; ++i) {
    if (next[i] == positions[i]) continue;
    auto it = was.find(map.index(next[i]));
    if (it != was.end() && next[it->second] == positions[i]) return false;
  }
  return true;
}

}  // namespace smapf

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "smapf/grid.hpp"
#include "smapf/parallel.hpp"

namespace smapf {

inline constexpr int kUnreachable = -1;

/// Exact BFS step distances from every cell to one goal. Immutable after
/// construction; obstacles and disconnected cells hold kUnreachable.
class DistanceField {
 public:
  DistanceField() = default;
  /// Throws ParameterError if `goal` is off-map or an obstacle.
  DistanceField(const GridMap& map, Cell goal);

  Cell goal() const { return goal_; }
  int width() const { return width_; }
  int at(Cell c) const { return dist_[c.r * width_ + c.c]; }
  bool reachable(Cell c) const { return at(c) != kUnreachable; }
  const std::vector<int>& raw() const { return dist_; }

 private:
  Cell goal_{};
  int width_ = 0;
  std::vector<int> dist_;
};

DistanceField distance_field(const GridMap& map, Cell goal);

/// One field per goal. The parallel kernel fans out over goals.
std::vector<DistanceField> distance_fields(const GridMap& map, std::span<const Cell> goals,
                                           Exec exec = Exec::Parallel);

/// Vertex sequence from a start to the goal with the movement direction taken
/// at each vertex; the last direction is Idle ("stop").
struct PathFlow {
  std::vector<Cell> cells;
  std::vector<Action> dirs;

  int length() const { return static_cast<int>(cells.size()) - 1; }
  friend bool operator==(const PathFlow&, const PathFlow&) = default;
};

/// Shortest path by greedy descent on `field`: from each vertex take the first
/// neighbor in Up, Down, Left, Right order whose distance is one less.
/// Throws NoPathError if `start` cannot reach the field's goal.
PathFlow descend(const GridMap& map, const DistanceField& field, Cell start);

/// Convenience wrapper that builds the field; identical result to descend().
PathFlow astar_path(const GridMap& map, Cell start, Cell goal);

/// Multi-source BFS distances (row-major, kUnreachable where not reached).
/// `avoid`, when set, is treated as an obstacle.
std::vector<int> bfs_distances(const GridMap& map, std::span<const Cell> sources,
                               std::optional<Cell> avoid = std::nullopt);

/// Shortest distance from `from` to `to` with `avoid` blocked, or
/// kUnreachable if it exceeds `limit` or no path exists.
int bounded_distance(const GridMap& map, Cell from, Cell to, Cell avoid, int limit);

}  // namespace smapf

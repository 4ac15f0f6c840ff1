#pragma once

#include <cstdint>
#include <vector>

#include "smapf/core.hpp"

namespace smapf {

/// Static occupancy grid. Vertices are free cells; edges join 4-adjacent
/// free cells. Moves off the edge are invalid; there is no implicit border.
class GridMap {
 public:
  GridMap() = default;
  /// All-free map. Throws ParameterError unless width, height >= 2.
  GridMap(int width, int height);
  GridMap(int width, int height, std::vector<std::uint8_t> blocked);

  int width() const { return width_; }
  int height() const { return height_; }
  int size() const { return width_ * height_; }

  bool in_bounds(Cell c) const { return c.r >= 0 && c.r < height_ && c.c >= 0 && c.c < width_; }
  int index(Cell c) const { return c.r * width_ + c.c; }
  Cell cell(int idx) const { return {idx / width_, idx % width_}; }

  bool blocked(Cell c) const { return blocked_[index(c)] != 0; }
  /// In bounds and not an obstacle.
  bool passable(Cell c) const { return in_bounds(c) && !blocked(c); }
  void set_blocked(Cell c, bool b) { blocked_[index(c)] = b ? 1 : 0; }

  int obstacle_count() const;
  double obstacle_density() const { return static_cast<double>(obstacle_count()) / size(); }
  std::vector<Cell> free_cells() const;

  const std::vector<std::uint8_t>& raw() const { return blocked_; }

  friend bool operator==(const GridMap&, const GridMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> blocked_;
};

}  // namespace smapf

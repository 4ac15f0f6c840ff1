#include "smapf/core.hpp"

#include "smapf/grid.hpp"

namespace smapf {

Action direction(Cell from, Cell to) {
  if (from == to) return Action::Idle;
  for (Action a : kMoveOrder) {
    if (step(from, a) == to) return a;
  }
  throw std::invalid_argument("cells are not 4-adjacent");
}

Action action_from_index(int i) {
  if (i < 0 || i >= kNumActions) throw ParameterError("action index out of range");
  return static_cast<Action>(i);
}

const char* action_name(Action a) {
  switch (a) {
    case Action::Idle: return "idle";
    case Action::Up: return "up";
    case Action::Down: return "down";
    case Action::Left: return "left";
    case Action::Right: return "right";
  }
  return "?";
}

GridMap::GridMap(int width, int height) : GridMap(width, height, {}) {}

GridMap::GridMap(int width, int height, std::vector<std::uint8_t> blocked)
    : width_(width), height_(height), blocked_(std::move(blocked)) {
  if (width < 2 || height < 2) throw ParameterError("map dimensions must be at least 2x2");
  if (blocked_.empty()) blocked_.assign(static_cast<std::size_t>(width) * height, 0);
  if (static_cast<int>(blocked_.size()) != width * height) {
    throw ParameterError("occupancy vector does not match map dimensions");
  }
}

int GridMap::obstacle_count() const {
  int n = 0;
  for (auto b : blocked_) n += b != 0;
  return n;
}

std::vector<Cell> GridMap::free_cells() const {
  std::vector<Cell> out;
  for (int i = 0; i < size(); ++i) {
    if (!blocked_[i]) out.push_back(cell(i));
  }
  return out;
}

}  // namespace smapf

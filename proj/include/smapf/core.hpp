#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace smapf {

/// A grid cell addressed by (row, col); row 0 is the top of the map.
struct Cell {
  int r = 0;
  int c = 0;

  friend constexpr bool operator==(const Cell&, const Cell&) = default;
  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

/// The five primitive actions. Idle is index 0; it doubles as the "Stop"
/// direction label on the last vertex of a path flow.
enum class Action : std::uint8_t { Idle = 0, Up = 1, Down = 2, Left = 3, Right = 4 };

inline constexpr int kNumActions = 5;

/// Fixed neighbor/tie order used everywhere a deterministic choice is needed.
inline constexpr std::array<Action, 4> kMoveOrder = {Action::Up, Action::Down, Action::Left,
                                                     Action::Right};

constexpr Cell step(Cell from, Action a) {
  switch (a) {
    case Action::Up: return {from.r - 1, from.c};
    case Action::Down: return {from.r + 1, from.c};
    case Action::Left: return {from.r, from.c - 1};
    case Action::Right: return {from.r, from.c + 1};
    case Action::Idle: break;
  }
  return from;
}

/// Direction that moves `from` onto the 4-adjacent `to`; Idle when equal.
/// Throws std::invalid_argument for non-adjacent cells.
Action direction(Cell from, Cell to);

constexpr int action_index(Action a) { return static_cast<int>(a); }
Action action_from_index(int i);
const char* action_name(Action a);

// Error hierarchy. Parameter/parse/generation errors are caller mistakes or
// infeasible inputs; contract and internal errors signal broken invariants.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParameterError : Error {
  using Error::Error;
};
struct ParseError : Error {
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line(line) {}
  int line;
};
struct GenerationError : Error {
  using Error::Error;
};
struct NoPathError : Error {
  using Error::Error;
};
struct ContractError : Error {
  using Error::Error;
};
struct InternalError : Error {
  using Error::Error;
};
struct DegenerateInputError : Error {
  using Error::Error;
};
struct TrainingError : Error {
  using Error::Error;
};

}  // namespace smapf

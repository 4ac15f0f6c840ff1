#pragma once

#include <cstdint>
#include <string_view>

#include "smapf/scenario.hpp"

namespace smapf {

enum class MapFamily { Random, Room, Maze };
enum class CorridorKind { Recess, IShape };

MapFamily parse_family(std::string_view name);
CorridorKind parse_corridor_kind(std::string_view name);
const char* family_name(MapFamily f);
const char* corridor_kind_name(CorridorKind k);

/// Regeneration budget for any generator before it gives up.
inline constexpr int kGenerationRetries = 100;

/// Obstacles by independent coin flips at `obstacle_density` in [0, 0.5];
/// starts and goals drawn without replacement from free cells, every pair
/// connected.
Scenario gen_random(int width, int height, double obstacle_density, int n_agents,
                    std::uint64_t seed);

/// Binary-space-partition rooms (minimum side 3) separated by one-cell walls,
/// one doorway per splitting wall. On maps of at least 16x16 the obstacle
/// density is kept inside [0.25, 0.35] by regeneration.
Scenario gen_room(int width, int height, int n_agents, std::uint64_t seed);

/// Perfect maze carved by randomized depth-first search on the even-coordinate
/// lattice; corridors are one cell wide.
Scenario gen_maze(int width, int height, int n_agents, std::uint64_t seed);

/// Two-agent symmetric corridor. Recess: a 3-row strip whose middle row is the
/// corridor, with one side pocket above column k and one below column
/// len-1-k (k seeded, len >= 4). IShape: a corridor with open 3x3 plazas at both ends;
/// agents start in opposite plaza corners. Goals are the swapped starts.
Scenario gen_corridor(CorridorKind kind, int corridor_len, std::uint64_t seed);

/// Dispatch by family; density is ignored for room/maze.
Scenario generate(MapFamily family, int width, int height, double density, int n_agents,
                  std::uint64_t seed);

}  // namespace smapf

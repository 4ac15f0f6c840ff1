#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "smapf/grid.hpp"

namespace smapf {

/// A map plus one start and one goal per agent.
struct Scenario {
  GridMap map;
  std::vector<Cell> starts;
  std::vector<Cell> goals;
  std::uint64_t seed = 0;

  int num_agents() const { return static_cast<int>(starts.size()); }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Checks the scenario invariants: equal, non-empty start/goal lists, all on
/// free cells, starts distinct, goals distinct, every goal reachable from its
/// start. Throws GenerationError describing the first violation.
void validate(const Scenario& s);

// Octile-benchmark text format: "type octile", "height H", "width W", "map",
// then H rows of W glyphs ('.' free, '@' obstacle).
std::string write_map(const GridMap& m);
GridMap read_map(std::string_view text);
GridMap load_map(const std::filesystem::path& path);
void save_map(const GridMap& m, const std::filesystem::path& path);

/// Scenario JSON: {"map": <path or inline text>, "starts": [[r,c],...],
/// "goals": [[r,c],...], "seed": u64}. `map_ref` is written verbatim as the
/// "map" field; pass an empty string to inline the map text.
std::string scenario_to_json(const Scenario& s, const std::string& map_ref = {});
/// Relative map paths resolve against `base_dir`.
Scenario scenario_from_json(std::string_view json,
                            const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace smapf

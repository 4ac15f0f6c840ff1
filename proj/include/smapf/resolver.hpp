#pragma once

#include <span>
#include <vector>

#include "smapf/grid.hpp"
#include "smapf/pathing.hpp"

namespace smapf {

enum class ActionStatus { Valid, Invalid, Restricted };
enum class Annotation : std::uint8_t { Normal, Invalidated, RestrictedIdled };

const char* annotation_name(Annotation a);

struct Classification {
  ActionStatus status = ActionStatus::Valid;
  std::vector<int> conflicts;  // agents sharing i's target or swapping with i
};

/// Status of agent i's intent under the working joint intent.
Classification classify(const GridMap& map, std::span<const Cell> positions,
                        std::span<const Action> intents, int agent);

struct ResolutionOutcome {
  std::vector<Action> actions;
  std::vector<char> penalized;  // collision penalty (-2) routed to this agent
  std::vector<Annotation> annotations;
  int iterations = 0;
  std::vector<int> pops;  // chain order, for tracing
};

/// SVO-ordered tie-breaking. The chain starts sorted by descending angle
/// (ties: lower index first) and is processed FIFO. Invalid intents idle with
/// a penalty; restricted intents idle and the strictly more prosocial member
/// of each conflicting pair is penalized. Whenever an agent idles, agents
/// heading into its cell are re-queued. Throws InternalError if the chain
/// exceeds 4n pops.
ResolutionOutcome resolve(const GridMap& map, std::span<const Cell> positions,
                          std::span<const Action> intents, std::span<const double> svo_degrees);

/// First distance-decreasing move per agent (Up, Down, Left, Right order);
/// Idle on goal or when the goal is unreachable.
std::vector<Action> greedy_intents(const GridMap& map, std::span<const Cell> positions,
                                   std::span<const DistanceField> fields);

/// Whether a joint action keeps every agent on free cells and satisfies the
/// vertex and swap conditions.
bool joint_action_safe(const GridMap& map, std::span<const Cell> positions,
                       std::span<const Action> actions);

}  // namespace smapf

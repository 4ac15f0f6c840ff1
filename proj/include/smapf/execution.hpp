#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smapf/core.hpp"

namespace smapf {

enum class TaskStatus : std::uint8_t { Staged, Enqueued, Done };
const char* task_status_name(TaskStatus s);

/// One planned step of one robot. Tasks with time 0 are synthetic anchors
/// marking each robot's start cell; they begin DONE.
struct AdgTask {
  int id = 0;
  int robot = 0;
  Action action = Action::Idle;
  Cell start;
  Cell end;
  int time = 0;
  std::vector<int> dependencies;
  std::vector<int> dependents;
};

struct AdgGraph {
  int robots = 0;
  std::vector<AdgTask> tasks;
  std::vector<std::vector<int>> robot_tasks;  // task ids per robot in plan order
  std::vector<int> topo_order;
};

/// Plan: one vertex sequence per robot, index = timestep. Shorter sequences
/// are padded with their last cell. Throws ContractError for non-adjacent
/// steps or vertex/swap conflicts, InternalError if the graph has a cycle.
AdgGraph build_adg(std::span<const std::vector<Cell>> plan);

struct ExecConfig {
  double base_time = 1.0;  // seconds per planned step at multiplier 1
  double jitter = 0.0;     // per-task factor drawn uniformly from [1 - jitter, 1 + jitter]
  std::uint64_t seed = 0;
};

struct ExecEvent {
  double t = 0.0;
  int task = 0;
  int robot = 0;
  TaskStatus transition = TaskStatus::Done;
};

struct ExecutionLog {
  std::vector<ExecEvent> events;
  std::vector<double> start;   // per task: time it became ENQUEUED
  std::vector<double> finish;  // per task: time it became DONE
  std::vector<TaskStatus> status;
  double makespan = 0.0;
  bool all_done = false;
};

/// Event-driven replay: a task is ENQUEUED the moment all its dependencies
/// are DONE and becomes DONE after base_time x multiplier x jitter. A move
/// occupies both its cells while it runs.
ExecutionLog simulate_execution(const AdgGraph& graph, std::span<const double> speed_multipliers,
                                const ExecConfig& cfg = {});

/// Half-open continuous occupancy interval of one robot in one cell.
struct Occupancy {
  Cell cell;
  int robot = 0;
  double from = 0.0;
  double to = 0.0;
};

std::vector<Occupancy> occupancy_intervals(const AdgGraph& graph, const ExecutionLog& log);

/// Pairs of different robots whose intervals in the same cell overlap.
int count_cooccupancy(std::span<const Occupancy> intervals);

/// JSON-lines rendering {t, task_id, robot_id, transition}.
std::string execution_log_jsonl(const ExecutionLog& log);

}  // namespace smapf

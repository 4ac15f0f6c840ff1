#include <doctest.h>

#include <algorithm>

#include "oracles/adg.hpp"
#include "oracles/plans.hpp"
#include "smapf/execution.hpp"

using namespace smapf;

namespace {

using Plan = std::vector<std::vector<Cell>>;
using oracle::intervals_from_events;
using oracle::overlaps;
using oracle::per_cell_order_ok;
using oracle::topo_valid;

}  // namespace

TEST_CASE("single straight path") {
  const std::vector<Plan::value_type> plan{{{0, 0}, {0, 1}, {0, 2}, {0, 3}}};
  const auto g = build_adg(plan);
  REQUIRE(g.tasks.size() == 4u);
  CHECK(g.tasks[0].time == 0);
  CHECK(g.tasks[0].dependencies.empty());
  for (int k = 1; k < 4; ++k) {
    CHECK(g.tasks[k].dependencies == std::vector<int>{k - 1});
    CHECK(g.tasks[k].action == Action::Right);
  }
  const std::vector<double> speed{1.0};
  const auto log = simulate_execution(g, speed, {2.0, 0.0, 0});
  CHECK(log.all_done);
  CHECK(log.makespan == 6.0);
  for (int k = 1; k < 4; ++k) CHECK(log.finish[k] == 2.0 * k);
}

TEST_CASE("following into a vacated cell waits for the leave task") {
  // B leads along the row; A moves into B's old cell at the same step.
  const Plan plan{{{0, 0}, {0, 1}, {0, 2}}, {{0, 1}, {0, 2}, {0, 3}}};
  const auto g = build_adg(plan);
  const int a1 = g.robot_tasks[0][1];
  const int b1 = g.robot_tasks[1][1];
  const auto& deps = g.tasks[a1].dependencies;
  CHECK(std::find(deps.begin(), deps.end(), b1) != deps.end());

  SUBCASE("slow leader delays its follower") {
    const std::vector<double> speed{1.0, 10.0};
    const auto log = simulate_execution(g, speed);
    CHECK(log.start[a1] == doctest::Approx(10.0));
    CHECK(log.start[g.robot_tasks[0][2]] == doctest::Approx(20.0));
    CHECK(log.all_done);
    CHECK(count_cooccupancy(occupancy_intervals(g, log)) == 0);
    CHECK(overlaps(intervals_from_events(g, log)) == 0);
  }
}

TEST_CASE("plan checks") {
  const Plan vertex{{{0, 0}, {0, 1}}, {{0, 2}, {0, 1}}};
  CHECK_THROWS_AS(build_adg(vertex), ContractError);
  const Plan swap{{{0, 0}, {0, 1}}, {{0, 1}, {0, 0}}};
  CHECK_THROWS_AS(build_adg(swap), ContractError);
  const Plan jump{{{0, 0}, {0, 2}}};
  CHECK_THROWS_AS(build_adg(jump), ContractError);
  const Plan rotation{{{0, 0}, {0, 1}}, {{0, 1}, {1, 1}}, {{1, 1}, {1, 0}}, {{1, 0}, {0, 0}}};
  CHECK_THROWS_AS(build_adg(rotation), ContractError);
  CHECK_THROWS_AS(simulate_execution(build_adg(Plan{{{0, 0}}}), std::vector<double>{0.0}), ParameterError);
}

TEST_CASE("unit speeds without handovers replay the plan step for step") {
  Rng rng(3);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 30; ++trial) {
    const auto s = gen_random(10, 10, 0.2, 4, rng.next());
    Plan plan;
    try {
      plan = oracle::random_plan(s, 12, rng);
      if (oracle::has_same_step_handover(plan)) continue;
      const auto g = build_adg(plan);
      const std::vector<double> speed(4, 1.0);
      const auto log = simulate_execution(g, speed);
      for (const auto& t : g.tasks) CHECK(log.finish[t.id] == static_cast<double>(t.time));
      CHECK(log.makespan == 12.0);
      ++checked;
    } catch (const ContractError&) {
      continue;  // rotation cycle
    }
  }
  CHECK(checked >= 10);
}

TEST_CASE("random plans under jitter stay safe and complete") {
  Rng rng(12);
  int plans = 0, rotations = 0;
  while (plans < 60) {
    Scenario s;
    try {
      s = gen_random(12, 12, 0.2, 8, rng.next());
    } catch (const GenerationError&) {
      continue;
    }
    const auto plan = oracle::random_plan(s, 20, rng);
    AdgGraph g;
    try {
      g = build_adg(plan);
    } catch (const ContractError&) {
      ++rotations;
      continue;
    }
    ++plans;
    CHECK(topo_valid(g));
    CHECK(per_cell_order_ok(g));
    std::vector<double> speed(8);
    for (int seed = 0; seed < 20; ++seed) {
      for (auto& v : speed) v = rng.uniform(0.2, 5.0);
      const auto log = simulate_execution(g, speed, {1.0, 0.5, static_cast<std::uint64_t>(seed)});
      CHECK(log.all_done);
      CHECK(overlaps(intervals_from_events(g, log)) == 0);
      CHECK(count_cooccupancy(occupancy_intervals(g, log)) == 0);
      // One ENQUEUED task per robot at a time, transitions forward only.
      for (int r = 0; r < 8; ++r) {
        const auto& ids = g.robot_tasks[r];
        for (std::size_t k = 1; k < ids.size(); ++k) CHECK(log.start[ids[k]] >= log.finish[ids[k - 1]]);
      }
      for (const auto& t : g.tasks) {
        CHECK(log.start[t.id] <= log.finish[t.id]);
        for (int d : t.dependencies) CHECK(log.finish[d] <= log.start[t.id]);
      }
    }
  }
  CHECK(rotations < plans);
}

TEST_CASE("execution log JSON lines") {
  const auto g = build_adg(Plan{{{0, 0}, {1, 0}}});
  const auto log = simulate_execution(g, std::vector<double>{1.0});
  const auto text = execution_log_jsonl(log);
  CHECK(text ==
        "{\"t\":0.0,\"task_id\":0,\"robot_id\":0,\"transition\":\"ENQUEUED\"}\n"
        "{\"t\":0.0,\"task_id\":0,\"robot_id\":0,\"transition\":\"DONE\"}\n"
        "{\"t\":0.0,\"task_id\":1,\"robot_id\":0,\"transition\":\"ENQUEUED\"}\n"
        "{\"t\":1.0,\"task_id\":1,\"robot_id\":0,\"transition\":\"DONE\"}\n");
}

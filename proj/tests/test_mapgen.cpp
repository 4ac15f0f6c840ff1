#include <doctest.h>

#include "oracles/oracles.hpp"
#include "smapf/mapgen.hpp"
#include "smapf/rng.hpp"

using namespace smapf;

TEST_CASE("rng streams are pinned") {
  std::uint64_t s = 0;
  CHECK(splitmix64(s) == 0xE220A8397B1DCDAFULL);
  Rng a(42), b(42);
  for (int k = 0; k < 1000; ++k) CHECK(a.next() == b.next());
  Rng u(7);
  for (int k = 0; k < 1000; ++k) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    const int r = u.range(-3, 3);
    CHECK(r >= -3);
    CHECK(r <= 3);
  }
}

TEST_CASE("random map with 50 agents on 32x32") {
  const auto s = gen_random(32, 32, 0.2, 50, 1);
  CHECK(s.num_agents() == 50);
  CHECK(s.map.width() == 32);
  // Binomial(1024, 0.2): mean 204.8, sd 12.8.
  CHECK(s.map.obstacle_count() > 140);
  CHECK(s.map.obstacle_count() < 270);
  CHECK_NOTHROW(validate(s));
}

TEST_CASE("zero density gives an empty map") {
  const auto s = gen_random(4, 4, 0.0, 1, 0);
  CHECK(s.map.obstacle_count() == 0);
  CHECK(s.num_agents() == 1);
}

TEST_CASE("random map pairs are connected per BFS oracle") {
  const auto s = gen_random(10, 10, 0.3, 8, 7);
  for (int i = 0; i < 8; ++i) {
    const auto d = oracle::dijkstra(s.map, s.goals[i]);
    CHECK(d[s.starts[i].r * 10 + s.starts[i].c] >= 0);
  }
}

TEST_CASE("generation is a pure function of its arguments") {
  for (auto fam : {MapFamily::Random, MapFamily::Room, MapFamily::Maze}) {
    const auto a = generate(fam, 24, 20, 0.25, 6, 99);
    const auto b = generate(fam, 24, 20, 0.25, 6, 99);
    CHECK(scenario_to_json(a) == scenario_to_json(b));
    const auto c = generate(fam, 24, 20, 0.25, 6, 100);
    CHECK(scenario_to_json(a) != scenario_to_json(c));
  }
}

TEST_CASE("generated scenarios pass their own validation") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    CHECK_NOTHROW(validate(gen_random(12, 9, 0.35, 5, seed)));
    CHECK_NOTHROW(validate(gen_room(16, 12, 5, seed)));
    CHECK_NOTHROW(validate(gen_maze(15, 11, 5, seed)));
  }
}

TEST_CASE("parameter checks") {
  CHECK_THROWS_AS(gen_random(8, 8, 0.6, 1, 0), ParameterError);
  CHECK_THROWS_AS(gen_random(8, 8, -0.1, 1, 0), ParameterError);
  CHECK_THROWS_AS(gen_room(7, 8, 1, 0), ParameterError);
  CHECK_THROWS_AS(gen_random(1, 8, 0.1, 1, 0), ParameterError);
  CHECK_THROWS_AS(gen_corridor(CorridorKind::Recess, 3, 0), ParameterError);
  CHECK_THROWS_AS(gen_corridor(CorridorKind::IShape, 2, 0), ParameterError);
  CHECK_THROWS_AS(gen_random(2, 2, 0.0, 5, 0), GenerationError);
}

TEST_CASE("room map density on 32x32") {
  for (std::uint64_t seed : {3ULL, 4ULL, 5ULL, 6ULL}) {
    const auto s = gen_room(32, 32, 100, seed);
    CHECK(s.map.obstacle_density() >= 0.25);
    CHECK(s.map.obstacle_density() <= 0.35);
  }
}

TEST_CASE("minimal room map has an interior wall with a doorway") {
  const auto s = gen_room(8, 8, 1, 0);
  CHECK(s.map.obstacle_count() > 0);
  CHECK(oracle::components(s.map) == 1);
  // A full wall line minus exactly one door.
  bool found = false;
  for (int c = 0; c < 8; ++c) {
    int blocked = 0;
    for (int r = 0; r < 8; ++r) blocked += s.map.blocked({r, c});
    found |= blocked == 7;
  }
  for (int r = 0; r < 8; ++r) {
    int blocked = 0;
    for (int c = 0; c < 8; ++c) blocked += s.map.blocked({r, c});
    found |= blocked == 7;
  }
  CHECK(found);
}

TEST_CASE("rooms are mutually reachable") {
  const auto s = gen_room(32, 32, 8, 11);
  CHECK(oracle::components(s.map) == 1);
}

TEST_CASE("maze density and structure") {
  const auto big = gen_maze(32, 32, 32, 5);
  CHECK(big.map.obstacle_density() >= 0.45);
  CHECK(big.map.obstacle_density() <= 0.55);

  const auto small = gen_maze(5, 5, 1, 0);
  CHECK(oracle::components(small.map) == 1);
  // Tree: edges = vertices - 1.
  int v = 0, e = 0;
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      if (small.map.blocked({r, c})) continue;
      ++v;
      if (c + 1 < 5 && !small.map.blocked({r, c + 1})) ++e;
      if (r + 1 < 5 && !small.map.blocked({r + 1, c})) ++e;
    }
  }
  CHECK(e == v - 1);

  const auto m17 = gen_maze(17, 17, 4, 9);
  for (int r = 0; r + 1 < 17; ++r) {
    for (int c = 0; c + 1 < 17; ++c) {
      const bool open = !m17.map.blocked({r, c}) && !m17.map.blocked({r + 1, c}) &&
                        !m17.map.blocked({r, c + 1}) && !m17.map.blocked({r + 1, c + 1});
      CHECK_FALSE(open);
    }
  }
}

TEST_CASE("recess corridor") {
  const auto s = gen_corridor(CorridorKind::Recess, 7, 2);
  CHECK(s.num_agents() == 2);
  CHECK(s.goals[0] == s.starts[1]);
  CHECK(s.goals[1] == s.starts[0]);
  CHECK(s.map.size() - s.map.obstacle_count() == 7 + 2);
  // Each pocket is a dead end that fits one robot.
  int pockets = 0;
  for (int c = 0; c < 7; ++c) {
    pockets += !s.map.blocked({0, c});
    pockets += !s.map.blocked({2, c});
  }
  CHECK(pockets == 2);
  CHECK(oracle::joint_bfs(s.map, s.starts[0], s.starts[1], s.goals[0], s.goals[1]) > 0);

  const auto s10 = gen_corridor(CorridorKind::Recess, 10, 4);
  CHECK(oracle::joint_bfs(s10.map, s10.starts[0], s10.starts[1], s10.goals[0], s10.goals[1]) > 0);
}

TEST_CASE("every corridor instance is solvable by joint BFS") {
  for (int len = 4; len <= 14; ++len) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      for (auto kind : {CorridorKind::Recess, CorridorKind::IShape}) {
        const auto s = gen_corridor(kind, len, seed);
        CHECK(oracle::joint_bfs(s.map, s.starts[0], s.starts[1], s.goals[0], s.goals[1]) > 0);
      }
    }
  }
}

TEST_CASE("i-shape corridor swaps starts") {
  const auto s = gen_corridor(CorridorKind::IShape, 3, 0);
  CHECK(s.map.width() == 9);
  CHECK(s.map.height() == 3);
  CHECK(s.goals[0] == s.starts[1]);
  CHECK(s.goals[1] == s.starts[0]);
}

TEST_CASE("map text format") {
  const GridMap m(2, 2);
  CHECK(write_map(m) == "type octile\nheight 2\nwidth 2\nmap\n..\n..\n");
  CHECK(read_map(write_map(m)) == m);

  const auto s = gen_random(32, 32, 0.2, 1, 3);
  CHECK(read_map(write_map(s.map)) == s.map);
  const auto text = write_map(s.map);
  CHECK(write_map(read_map(text)) == text);
}

TEST_CASE("map parse errors carry line numbers") {
  try {
    read_map("type octile\nheight 2\nwidth 3\nmap\n...\n.T.\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 6);
    CHECK(std::string(e.what()).find("'T'") != std::string::npos);
  }
  try {
    read_map("type octile\nheight 2\nwidth 3\nmap\n...\n..\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 6);
  }
  try {
    read_map("type grid\nheight 2\nwidth 2\nmap\n..\n..\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
  }
  try {
    read_map("type octile\nheight x\nwidth 2\nmap\n..\n..\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("scenario JSON round trip and validation") {
  const auto s = gen_random(9, 7, 0.2, 3, 5);
  const auto text = scenario_to_json(s);
  const auto back = scenario_from_json(text, {});
  CHECK(back.map == s.map);
  CHECK(back.starts == s.starts);
  CHECK(back.goals == s.goals);
  CHECK(back.seed == s.seed);
  CHECK(scenario_to_json(back) == text);

  Scenario dup = s;
  dup.starts[1] = dup.starts[0];
  CHECK_THROWS_AS(validate(dup), GenerationError);
  Scenario walled{GridMap(3, 3), {{0, 0}}, {{2, 2}}, 0};
  walled.map.set_blocked({1, 2}, true);
  walled.map.set_blocked({2, 1}, true);
  CHECK_THROWS_AS(validate(walled), GenerationError);
}

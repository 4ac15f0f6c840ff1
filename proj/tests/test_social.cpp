#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles/oracles.hpp"
#include "smapf/mapgen.hpp"
#include "smapf/rng.hpp"
#include "smapf/social.hpp"

using namespace smapf;

namespace {

Overlap make_overlap(int n, std::vector<double> w) {
  Overlap o;
  o.n = n;
  o.weights = std::move(w);
  o.partners = select_partners(o.weights, n);
  return o;
}

void check_matches_oracle(const GridMap& m, const std::vector<Cell>& pos,
                          const std::vector<Cell>& goals, double gamma) {
  const auto o = compute_overlap(m, pos, goals, gamma, Exec::Serial);
  const auto ref = oracle::overlap(m, pos, goals, gamma);
  REQUIRE(o.weights.size() == ref.size());
  for (std::size_t k = 0; k < ref.size(); ++k) CHECK(o.weights[k] == doctest::Approx(ref[k]).epsilon(1e-12));
}

}  // namespace

TEST_CASE("svo bins") {
  CHECK(svo_angle(0) == 0.0);
  CHECK(svo_angle(1) == 11.25);
  CHECK(svo_angle(2) == 22.5);
  CHECK(svo_angle(3) == 33.75);
  CHECK(svo_angle(4) == 45.0);
  CHECK_THROWS_AS(svo_angle(5), ParameterError);
  const auto s = SvoState::uniform();
  double total = 0.0;
  for (double p : s.dist) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("disjoint paths give zero overlap and self partners") {
  const GridMap m(5, 5);
  const std::vector<Cell> pos{{0, 0}, {4, 4}}, goals{{0, 2}, {4, 2}};
  const auto o = compute_overlap(m, pos, goals, 0.95);
  CHECK(o.weights == std::vector<double>(4, 0.0));
  CHECK(o.partners == std::vector<int>{0, 1});
}

TEST_CASE("single crossing cell at path indices 1 and 2") {
  // Agent 0 walks right along row 1; agent 1 walks up column 1 and crosses
  // (1,1) two steps in.
  const GridMap m(3, 4);
  const std::vector<Cell> pos{{1, 0}, {3, 1}}, goals{{1, 2}, {0, 1}};
  const auto o = compute_overlap(m, pos, goals, 0.95);
  CHECK(o.at(0, 1) == doctest::Approx(0.95 + 0.95 * 0.95).epsilon(1e-15));
  CHECK(o.at(0, 1) == doctest::Approx(1.8525));
  CHECK(o.at(1, 0) == o.at(0, 1));
  CHECK(o.partners == std::vector<int>{1, 0});
}

TEST_CASE("same-direction co-visits contribute nothing") {
  // Both follow row 1 rightwards; only the cell where agent 0 turns down
  // counts, since there the directions differ.
  GridMap m(5, 3);
  for (int c = 0; c < 5; ++c) m.set_blocked({2, c}, c != 2);
  for (int c = 0; c < 5; ++c) m.set_blocked({0, c}, true);
  const std::vector<Cell> pos{{1, 0}, {1, 1}}, goals{{2, 2}, {1, 4}};
  const auto o = compute_overlap(m, pos, goals, 0.95);
  // Shared cells (1,1) and (1,2); only (1,2) differs: t0 = 2, t1 = 1.
  CHECK(o.at(0, 1) == doctest::Approx(0.95 * 0.95 + 0.95).epsilon(1e-15));

  GridMap head_on(5, 3);
  for (int c = 0; c < 5; ++c) {
    head_on.set_blocked({0, c}, true);
    head_on.set_blocked({2, c}, true);
  }
  const std::vector<Cell> hp{{1, 0}, {1, 4}}, hg{{1, 4}, {1, 0}};
  CHECK(compute_overlap(head_on, hp, hg, 0.95).at(0, 1) > o.at(0, 1));
  check_matches_oracle(head_on, hp, hg, 0.95);
}

TEST_CASE("overlap matches brute force and holds its invariants") {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const int w = rng.range(4, 12), h = rng.range(4, 12);
    const int n = rng.range(2, std::min(8, w * h / 4));
    const auto s = gen_random(w, h, 0.2, n, rng.next());
    const double gamma = rng.range(1, 100) / 100.0;
    const auto o = compute_overlap(s.map, s.starts, s.goals, gamma, Exec::Serial);
    for (int i = 0; i < n; ++i) {
      CHECK(o.at(i, i) == 0.0);
      for (int j = 0; j < n; ++j) {
        CHECK(o.at(i, j) == o.at(j, i));
        CHECK(o.at(i, j) >= 0.0);
      }
    }
    if (trial % 10 == 0) check_matches_oracle(s.map, s.starts, s.goals, gamma);
  }
}

TEST_CASE("serial and parallel overlap are bitwise equal") {
  const auto s = gen_random(48, 48, 0.15, 120, 4);
  const auto a = compute_overlap(s.map, s.starts, s.goals, 0.95, Exec::Serial);
  const auto b = compute_overlap(s.map, s.starts, s.goals, 0.95, Exec::Parallel);
  CHECK(a.weights == b.weights);
  CHECK(a.partners == b.partners);
  const auto c = compute_overlap(s.map, s.starts, s.goals, 0.95, Exec::Parallel);
  CHECK(b.weights == c.weights);
}

TEST_CASE("unreachable goal falls back to a singleton flow") {
  GridMap m(4, 3);
  m.set_blocked({0, 1}, true);
  m.set_blocked({1, 0}, true);
  std::vector<Cell> pos{{2, 2}, {1, 1}};
  std::vector<Cell> goals{{0, 0}, {1, 3}};
  const auto fields = distance_fields(m, goals);
  const auto o = compute_overlap(m, pos, fields, 0.95);
  CHECK(o.unreachable == std::vector<char>{1, 0});
  CHECK(o.at(0, 1) == 0.0);
}

TEST_CASE("argmax ties go to the lowest index") {
  const std::vector<double> w{0, 1, 1, 1, 0, 0, 1, 0, 0};
  CHECK(select_partners(w, 3) == std::vector<int>{1, 0, 0});
}

TEST_CASE("fixed partners") {
  SUBCASE("kept while overlap with it stays positive") {
    const auto o = make_overlap(3, {0, 1, 5, 1, 0, 0, 5, 0, 0});
    const std::vector<int> prev{1, 0, 0};
    CHECK(o.partners[0] == 2);
    CHECK(update_fixed_partners(o.partners, o, prev) == std::vector<int>{1, 0, 0});
  }
  SUBCASE("all-zero overlap gives the identity") {
    const auto o = make_overlap(3, std::vector<double>(9, 0.0));
    CHECK(update_fixed_partners(o.partners, o, std::vector<int>{2, 2, 0}) ==
          std::vector<int>{0, 1, 2});
  }
  SUBCASE("switches when the old conflict resolves and a new one appears") {
    // Phase 1: 0 conflicts with 1. Phase 2: that conflict is gone and 0 now
    // conflicts with 2.
    const auto first = make_overlap(3, {0, 2, 0, 2, 0, 0, 0, 0, 0});
    const auto fixed1 = update_fixed_partners(first.partners, first, first.partners);
    CHECK(fixed1 == std::vector<int>{1, 0, 2});
    const auto second = make_overlap(3, {0, 0, 1, 0, 0, 0, 1, 0, 0});
    CHECK(update_fixed_partners(second.partners, second, fixed1) == std::vector<int>{2, 1, 0});
  }
  SUBCASE("tracker initializes from the first temporary partners") {
    const GridMap m(3, 4);
    const std::vector<Cell> pos{{1, 0}, {3, 1}}, goals{{1, 2}, {0, 1}};
    const auto fields = distance_fields(m, goals);
    PartnerTracker tracker;
    tracker.update(m, pos, fields);
    CHECK(tracker.fixed() == std::vector<int>{1, 0});
  }
}

TEST_CASE("reward redistribution") {
  for (double ri : {0.0, -0.3, -2.0, -2.3, -5.0}) {
    for (double rp : {0.0, -0.3, -2.0, -3.3}) {
      CHECK(redistribute_rewards(ri, rp, 0.0, 2.0).action == ri);
    }
  }
  CHECK(redistribute_rewards(-0.3, -0.3, 45.0, 2.0).action ==
        doctest::Approx(-0.6 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(redistribute_rewards(-0.3, -0.3, 45.0, 2.0).action == doctest::Approx(-0.42426).epsilon(1e-5));
  CHECK(redistribute_rewards(-2.0, -0.3, 0.0, 2.0).svo == doctest::Approx(-1.15).epsilon(1e-12));
  CHECK_THROWS_AS(redistribute_rewards(0, 0, 46.0, 2.0), ContractError);
  CHECK_THROWS_AS(redistribute_rewards(0, 0, -1.0, 2.0), ContractError);
  CHECK_THROWS_AS(redistribute_rewards(0, 0, 10.0, 0.0), ContractError);
}

namespace {

bool non_increasing_on_degree_grid(double a, double b) {
  for (int k = 0; k < 45; ++k) {
    const double x0 = k * std::numbers::pi / 180.0, x1 = (k + 1) * std::numbers::pi / 180.0;
    const double f0 = a * std::cos(x0) + b * std::sin(x0);
    const double f1 = a * std::cos(x1) + b * std::sin(x1);
    if (f1 > f0 + 1e-12) return false;
  }
  return true;
}

}  // namespace

// f(x) = a cos x + b sin x has f'(x) = -a sin x + b cos x, which stays <= 0 on
// [0, 45] degrees exactly when b <= a <= 0. Pairs with b > a rise near 45.
TEST_CASE("a cos x + b sin x is non-increasing iff the partner reward is not larger") {
  for (double c : {1.0, 2.0, 5.0}) {
    const std::vector<double> vals{-c, -2.0, -0.3, 0.0};
    for (double a : vals) {
      for (double b : vals) {
        CAPTURE(a);
        CAPTURE(b);
        CHECK(non_increasing_on_degree_grid(a, b) == (b <= a));
      }
    }
  }
}

TEST_CASE("own-reward-only composition rises with Z") {
  CHECK_FALSE(non_increasing_on_degree_grid(-0.3, 0.0));
  CHECK(redistribute_rewards(-0.3, 0.0, 45.0, 2.0).action >
        redistribute_rewards(-0.3, 0.0, 0.0, 2.0).action);
}

TEST_CASE("stability target") {
  const std::vector<double> z{0.1, 0.2, 0.3, 0.4, 0.0};
  const std::vector<double> zp{0.5, 0.0, 0.0, 0.0, 0.5};
  {
    const auto t = stability_target(z, zp, 0.0, 1.0);
    CHECK(t.alpha == 0.0);
    CHECK(t.z_exp == z);
  }
  {
    const auto t = stability_target(z, zp, 3.0, 1.0);
    CHECK(t.alpha == 1.0);
    CHECK(t.z_exp == zp);
  }
  {
    const auto t = stability_target(z, zp, 0.5, 1.0);
    CHECK(t.alpha == 0.5);
    for (std::size_t k = 0; k < z.size(); ++k) {
      CHECK(t.z_exp[k] == doctest::Approx((z[k] + zp[k]) / 2).epsilon(1e-15));
    }
  }
  double last = -1.0;
  for (int k = 0; k <= 40; ++k) {
    const auto t = stability_target(z, zp, k * 0.05, 1.0);
    CHECK(t.alpha >= last);
    last = t.alpha;
    double total = 0.0;
    for (double p : t.z_exp) {
      CHECK(p >= 0.0);
      total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

// Scenario sampling policies, grid mapping and manifest round-trips.

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "echolab/scenario.hpp"

using namespace echolab;
namespace fs = std::filesystem;

namespace {

bool near_grid(double deg, double step) {
  const double q = deg / step;
  return std::fabs(q - std::round(q)) < 1e-9;
}

double circ_dist(double a, double b) {
  const double d = std::fabs(a - b);
  return std::min(d, 360.0 - d);
}

}  // namespace

TEST_CASE("direction_to_grid_index snaps and wraps") {
  CHECK(direction_to_grid_index(0.0) == 0);
  CHECK(direction_to_grid_index(10.0) == 1);
  CHECK(direction_to_grid_index(14.9) == 1);
  CHECK(direction_to_grid_index(359.0) == 0);    // wraps to the 0 deg point
  CHECK(direction_to_grid_index(355.1) == 0);
  CHECK(direction_to_grid_index(344.9) == 34);
  CHECK(direction_to_grid_index(5.0) == 0);      // tie breaks to the lower index
  CHECK_THROWS_AS(direction_to_grid_index(360.0), DomainError);
  CHECK_THROWS_AS(direction_to_grid_index(-0.1), DomainError);
}

TEST_CASE("circular array geometry") {
  const ArraySpec a = ArraySpec::circular(6, 0.07, {1.0, 2.0, 1.5});
  REQUIRE(a.mic_positions.size() == 6);
  for (const Vec3& m : a.mic_positions) CHECK(norm(m - a.center) == doctest::Approx(0.035));
  // mic 1 sits at angle 0 (+x from the center)
  CHECK(a.mic_positions[0][0] == doctest::Approx(1.035));
  CHECK(a.mic_positions[0][1] == doctest::Approx(2.0));
  CHECK_THROWS_AS(ArraySpec::circular(1, 0.07, {0, 0, 0}), DomainError);
}

TEST_CASE("sampling is deterministic in (policy, seed)") {
  for (PolicyKind kind : {PolicyKind::kMatched, PolicyKind::kTalkerMoves, PolicyKind::kGrid1Deg,
                          PolicyKind::kCoDirectional}) {
    const Scenario a = sample_scenario(kind, 17);
    const Scenario b = sample_scenario(kind, 17);
    CHECK(scenario_to_json(a) == scenario_to_json(b));
    const Scenario c = sample_scenario(kind, 18);
    CHECK(scenario_to_json(a) != scenario_to_json(c));
  }
}

TEST_CASE("matched policy geometry invariants") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Scenario s = sample_scenario(PolicyKind::kMatched, seed);
    REQUIRE(s.loudspeakers.size() == 2);
    REQUIRE(s.talker.size() == 1);
    std::set<int> grid;
    for (const auto& ls : s.loudspeakers) {
      CHECK(near_grid(ls.direction_deg, kGridStepDeg));
      CHECK(ls.distance_m >= 1.0);
      grid.insert(direction_to_grid_index(ls.direction_deg));
    }
    const auto& t = s.talker[0].placement;
    CHECK(near_grid(t.direction_deg, kGridStepDeg));
    grid.insert(direction_to_grid_index(t.direction_deg));
    CHECK(grid.size() == 3);  // pairwise distinct directions
    CHECK(s.ser_db >= -10);
    CHECK(s.ser_db <= 10);
    CHECK(s.room.t60_s >= 0.1);
    CHECK(s.room.t60_s <= 0.8);
    // every source stays inside the room with margin
    for (const auto& ls : s.loudspeakers) {
      CHECK(ls.position[0] > 0.0);
      CHECK(ls.position[0] < s.room.length_m);
      CHECK(ls.position[1] > 0.0);
      CHECK(ls.position[1] < s.room.width_m);
    }
  }
}

TEST_CASE("grid_1deg policy uses the fine grid") {
  bool off_coarse = false;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scenario s = sample_scenario(PolicyKind::kGrid1Deg, seed);
    for (const auto& ls : s.loudspeakers) {
      CHECK(near_grid(ls.direction_deg, 1.0));
      if (!near_grid(ls.direction_deg, kGridStepDeg)) off_coarse = true;
    }
  }
  CHECK(off_coarse);  // the fine grid actually gets used between coarse points
}

TEST_CASE("co_directional talker shares a loudspeaker direction") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scenario s = sample_scenario(PolicyKind::kCoDirectional, seed);
    REQUIRE(s.talker.size() == 1);
    bool shared = false;
    for (const auto& ls : s.loudspeakers)
      if (circ_dist(ls.direction_deg, s.talker[0].placement.direction_deg) < 1e-9) shared = true;
    CHECK(shared);
  }
}

TEST_CASE("talker_moves policy switches at 3 s") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scenario s = sample_scenario(PolicyKind::kTalkerMoves, seed);
    REQUIRE(s.talker.size() == 2);
    CHECK(s.talker[0].start_s == 0.0);
    CHECK(s.talker[1].start_s == 3.0);
    CHECK(s.talker_moves());
    const int d0 = direction_to_grid_index(s.talker[0].placement.direction_deg);
    const int d1 = direction_to_grid_index(s.talker[1].placement.direction_deg);
    CHECK(d0 != d1);
    for (const auto& ls : s.loudspeakers) {
      CHECK(direction_to_grid_index(ls.direction_deg) != d0);
      CHECK(direction_to_grid_index(ls.direction_deg) != d1);
    }
    CHECK(&s.talker_at(0.0) == &s.talker[0].placement);
    CHECK(&s.talker_at(2.999) == &s.talker[0].placement);
    CHECK(&s.talker_at(3.0) == &s.talker[1].placement);
    CHECK(&s.talker_at(5.9) == &s.talker[1].placement);
  }
}

TEST_CASE("trajectory needs more than 3 s") {
  const Scenario s = sample_scenario(PolicyKind::kMatched, 3);
  Pcg32 rng(1);
  CHECK_THROWS_AS(talker_trajectory(s.room, s.array, {}, 2.5, rng), TrajectoryTooShort);
}

TEST_CASE("fixed pattern pin and anechoic flag") {
  ScenarioPolicy pol;
  pol.fixed_pattern = true;
  pol.pattern = TalkPattern::kFarEndOnly;
  pol.anechoic = true;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Scenario s = sample_scenario(pol, seed);
    CHECK(s.talk_pattern == TalkPattern::kFarEndOnly);
    CHECK(s.room.t60_s == 0.0);
  }
}

TEST_CASE("pattern and policy names round-trip") {
  for (TalkPattern p : {TalkPattern::kDoubleTalk, TalkPattern::kNearEndOnly,
                        TalkPattern::kFarEndOnly})
    CHECK(talk_pattern_from_string(to_string(p)) == p);
  for (PolicyKind k : {PolicyKind::kMatched, PolicyKind::kTalkerMoves, PolicyKind::kGrid1Deg,
                       PolicyKind::kCoDirectional})
    CHECK(policy_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(talk_pattern_from_string("DTX"), ConfigError);
  CHECK_THROWS_AS(policy_kind_from_string(""), ConfigError);
}

TEST_CASE("scenario json round-trip") {
  const Scenario s = sample_scenario(PolicyKind::kTalkerMoves, 99);
  const Scenario back = scenario_from_json(scenario_to_json(s));
  CHECK(scenario_to_json(back) == scenario_to_json(s));
  CHECK(back.room.t60_s == s.room.t60_s);
  CHECK(back.array.mic_positions == s.array.mic_positions);
  CHECK(back.talker.size() == s.talker.size());
  CHECK(back.ser_db == s.ser_db);
  CHECK(back.talk_pattern == s.talk_pattern);
  CHECK(back.rng_seed == s.rng_seed);

  const fs::path p = fs::temp_directory_path() / "echolab_test_scn.json";
  save_scenario(p.string(), s);
  const Scenario loaded = load_scenario(p.string());
  CHECK(scenario_to_json(loaded) == scenario_to_json(s));
  fs::remove(p);
}

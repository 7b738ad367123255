#include "echolab/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace echolab {

using json = nlohmann::ordered_json;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kMinSourceDistance = 1.0;
constexpr double kWallMargin = 0.3;

double circ_dist_deg(double a, double b) {
  double d = std::fabs(a - b);
  return std::min(d, 360.0 - d);
}

Vec3 place_on_circle(const Vec3& center, double direction_deg, double distance_m) {
  const double a = direction_deg * kPi / 180.0;
  return {center[0] + distance_m * std::cos(a), center[1] + distance_m * std::sin(a), center[2]};
}
}  // namespace

int direction_to_grid_index(double direction_deg) {
  require(direction_deg >= 0.0 && direction_deg < 360.0,
          "direction_to_grid_index: direction must lie in [0,360)");
  int best = 0;
  double best_dist = circ_dist_deg(direction_deg, 0.0);
  for (int k = 1; k < kNumDirections; ++k) {
    double d = circ_dist_deg(direction_deg, kGridStepDeg * k);
    if (d < best_dist) {
      best_dist = d;
      best = k;
    }
  }
  return best;
}

ArraySpec ArraySpec::circular(int num_mics, double diameter_m, const Vec3& center) {
  require(num_mics >= 2, "ArraySpec: need at least 2 mics");
  ArraySpec spec;
  spec.num_mics = num_mics;
  spec.diameter_m = diameter_m;
  spec.center = center;
  spec.mic_positions.resize(static_cast<std::size_t>(num_mics));
  const double r = diameter_m / 2.0;
  for (int q = 0; q < num_mics; ++q) {
    const double a = 2.0 * kPi * q / num_mics;
    spec.mic_positions[static_cast<std::size_t>(q)] = {center[0] + r * std::cos(a),
                                                       center[1] + r * std::sin(a), center[2]};
  }
  return spec;
}

std::string to_string(TalkPattern p) {
  switch (p) {
    case TalkPattern::kDoubleTalk: return "DT";
    case TalkPattern::kNearEndOnly: return "ST_NE";
    case TalkPattern::kFarEndOnly: return "ST_FE";
  }
  return "?";
}

TalkPattern talk_pattern_from_string(const std::string& s) {
  if (s == "DT") return TalkPattern::kDoubleTalk;
  if (s == "ST_NE") return TalkPattern::kNearEndOnly;
  if (s == "ST_FE") return TalkPattern::kFarEndOnly;
  throw ConfigError("unknown talk pattern: " + s);
}

std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kMatched: return "matched";
    case PolicyKind::kTalkerMoves: return "talker_moves";
    case PolicyKind::kGrid1Deg: return "grid_1deg";
    case PolicyKind::kCoDirectional: return "co_directional";
  }
  return "?";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "matched") return PolicyKind::kMatched;
  if (s == "talker_moves") return PolicyKind::kTalkerMoves;
  if (s == "grid_1deg") return PolicyKind::kGrid1Deg;
  if (s == "co_directional") return PolicyKind::kCoDirectional;
  throw ConfigError("unknown scenario policy: " + s);
}

const SourcePlacement& Scenario::talker_at(double time_s) const {
  require(!talker.empty(), "Scenario: no talker segments");
  const SourcePlacement* cur = &talker.front().placement;
  for (const TimedPlacement& seg : talker) {
    if (time_s + 1e-12 >= seg.start_s) cur = &seg.placement;
  }
  return *cur;
}

namespace {

// Max source distance: nearest horizontal wall minus a safety margin. Rooms
// sampled from the default bounds always leave r2 >= 1.2 m, so the [1, r2]
// draw is always feasible.
double max_source_distance(const RoomSpec& room) {
  return std::min(room.length_m, room.width_m) / 2.0 - kWallMargin;
}

SourcePlacement make_source(SourceKind kind, double direction_deg, const RoomSpec& room,
                            const Vec3& center, Pcg32& rng) {
  SourcePlacement p;
  p.kind = kind;
  p.direction_deg = direction_deg;
  p.distance_m = rng.uniform(kMinSourceDistance, max_source_distance(room));
  p.position = place_on_circle(center, direction_deg, p.distance_m);
  return p;
}

// Draw `count` pairwise-distinct directions on an integer grid of
// `grid_points` steps covering 360 degrees.
std::vector<double> draw_directions(int count, int grid_points, Pcg32& rng) {
  std::vector<int> picked;
  while (static_cast<int>(picked.size()) < count) {
    int k = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(grid_points)));
    if (std::find(picked.begin(), picked.end(), k) == picked.end()) picked.push_back(k);
  }
  std::vector<double> dirs;
  dirs.reserve(picked.size());
  for (int k : picked) dirs.push_back(360.0 * k / grid_points);
  return dirs;
}

}  // namespace

std::vector<TimedPlacement> talker_trajectory(const RoomSpec& room, const ArraySpec& array,
                                              const std::vector<int>& excluded_grid_dirs,
                                              double total_s, Pcg32& rng) {
  if (total_s <= 3.0)
    throw TrajectoryTooShort("talker_trajectory: total duration must exceed 3 s");
  std::vector<int> used = excluded_grid_dirs;
  auto draw_dir = [&]() {
    for (;;) {
      int k = static_cast<int>(rng.next_below(kNumDirections));
      if (std::find(used.begin(), used.end(), k) == used.end()) {
        used.push_back(k);
        return kGridStepDeg * k;
      }
    }
  };
  std::vector<TimedPlacement> traj(2);
  traj[0].start_s = 0.0;
  traj[0].placement = make_source(SourceKind::kTalker, draw_dir(), room, array.center, rng);
  traj[1].start_s = 3.0;
  traj[1].placement = make_source(SourceKind::kTalker, draw_dir(), room, array.center, rng);
  return traj;
}

Scenario sample_scenario(const ScenarioPolicy& policy, std::uint64_t seed) {
  Pcg32 rng(mix_seed(seed, 0x5ce7a110));

  Scenario scn;
  scn.policy = policy.kind;
  scn.rng_seed = seed;
  scn.duration_s = policy.duration_s;

  scn.room.length_m = rng.uniform(policy.room_length_min, policy.room_length_max);
  scn.room.width_m = rng.uniform(policy.room_width_min, policy.room_width_max);
  scn.room.height_m = rng.uniform(policy.room_height_min, policy.room_height_max);
  scn.room.t60_s = policy.anechoic ? 0.0 : rng.uniform(policy.t60_min, policy.t60_max);

  const Vec3 center{scn.room.length_m / 2.0, scn.room.width_m / 2.0, scn.room.height_m / 2.0};
  scn.array = ArraySpec::circular(policy.num_mics, policy.array_diameter_m, center);

  const int num_ls = policy.num_loudspeakers;
  switch (policy.kind) {
    case PolicyKind::kMatched: {
      std::vector<double> dirs = draw_directions(num_ls + 1, kNumDirections, rng);
      for (int p = 0; p < num_ls; ++p)
        scn.loudspeakers.push_back(
            make_source(SourceKind::kLoudspeaker, dirs[static_cast<std::size_t>(p)], scn.room, center, rng));
      scn.talker.push_back(
          {0.0, make_source(SourceKind::kTalker, dirs[static_cast<std::size_t>(num_ls)], scn.room, center, rng)});
      break;
    }
    case PolicyKind::kGrid1Deg: {
      std::vector<double> dirs = draw_directions(num_ls + 1, 360, rng);
      for (int p = 0; p < num_ls; ++p)
        scn.loudspeakers.push_back(
            make_source(SourceKind::kLoudspeaker, dirs[static_cast<std::size_t>(p)], scn.room, center, rng));
      scn.talker.push_back(
          {0.0, make_source(SourceKind::kTalker, dirs[static_cast<std::size_t>(num_ls)], scn.room, center, rng)});
      break;
    }
    case PolicyKind::kCoDirectional: {
      std::vector<double> dirs = draw_directions(num_ls, kNumDirections, rng);
      for (int p = 0; p < num_ls; ++p)
        scn.loudspeakers.push_back(
            make_source(SourceKind::kLoudspeaker, dirs[static_cast<std::size_t>(p)], scn.room, center, rng));
      const int shared = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(num_ls)));
      scn.talker.push_back(
          {0.0, make_source(SourceKind::kTalker,
                            scn.loudspeakers[static_cast<std::size_t>(shared)].direction_deg,
                            scn.room, center, rng)});
      break;
    }
    case PolicyKind::kTalkerMoves: {
      std::vector<double> dirs = draw_directions(num_ls, kNumDirections, rng);
      std::vector<int> used;
      for (int p = 0; p < num_ls; ++p) {
        scn.loudspeakers.push_back(
            make_source(SourceKind::kLoudspeaker, dirs[static_cast<std::size_t>(p)], scn.room, center, rng));
        used.push_back(direction_to_grid_index(dirs[static_cast<std::size_t>(p)]));
      }
      scn.talker = talker_trajectory(scn.room, scn.array, used, policy.duration_s, rng);
      break;
    }
  }

  scn.ser_db = rng.uniform_int(-10, 10);
  scn.talk_pattern = policy.fixed_pattern
                         ? policy.pattern
                         : static_cast<TalkPattern>(rng.next_below(3));
  return scn;
}

Scenario sample_scenario(PolicyKind kind, std::uint64_t seed) {
  ScenarioPolicy policy;
  policy.kind = kind;
  return sample_scenario(policy, seed);
}

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

Vec3 vec3_from_json(const json& j) { return {j.at(0), j.at(1), j.at(2)}; }

json placement_to_json(const SourcePlacement& p) {
  return json{{"kind", p.kind == SourceKind::kLoudspeaker ? "loudspeaker" : "talker"},
              {"direction_deg", p.direction_deg},
              {"distance_m", p.distance_m},
              {"position_m", vec3_to_json(p.position)}};
}

SourcePlacement placement_from_json(const json& j) {
  SourcePlacement p;
  p.kind = j.at("kind") == "loudspeaker" ? SourceKind::kLoudspeaker : SourceKind::kTalker;
  p.direction_deg = j.at("direction_deg");
  p.distance_m = j.at("distance_m");
  p.position = vec3_from_json(j.at("position_m"));
  return p;
}

}  // namespace

std::string scenario_to_json(const Scenario& scn) {
  json j;
  j["schema"] = "echolab-scenario/1";
  j["policy"] = to_string(scn.policy);
  j["seed"] = scn.rng_seed;
  j["duration_s"] = scn.duration_s;
  j["room"] = {{"length_m", scn.room.length_m},
               {"width_m", scn.room.width_m},
               {"height_m", scn.room.height_m},
               {"t60_s", scn.room.t60_s}};
  json mics = json::array();
  for (const Vec3& m : scn.array.mic_positions) mics.push_back(vec3_to_json(m));
  j["array"] = {{"num_mics", scn.array.num_mics},
                {"diameter_m", scn.array.diameter_m},
                {"center_m", vec3_to_json(scn.array.center)},
                {"mic_positions_m", mics}};
  json ls = json::array();
  for (const SourcePlacement& p : scn.loudspeakers) ls.push_back(placement_to_json(p));
  j["loudspeakers"] = ls;
  json talker = json::array();
  for (const TimedPlacement& t : scn.talker) {
    json seg = placement_to_json(t.placement);
    seg["start_s"] = t.start_s;
    talker.push_back(seg);
  }
  j["talker"] = talker;
  j["ser_db"] = scn.ser_db;
  j["talk_pattern"] = to_string(scn.talk_pattern);
  return j.dump(2);
}

Scenario scenario_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  require(j.at("schema") == "echolab-scenario/1", "scenario manifest: unknown schema");
  Scenario scn;
  scn.policy = policy_kind_from_string(j.at("policy"));
  scn.rng_seed = j.at("seed");
  scn.duration_s = j.at("duration_s");
  scn.room.length_m = j.at("room").at("length_m");
  scn.room.width_m = j.at("room").at("width_m");
  scn.room.height_m = j.at("room").at("height_m");
  scn.room.t60_s = j.at("room").at("t60_s");
  scn.array.num_mics = j.at("array").at("num_mics");
  scn.array.diameter_m = j.at("array").at("diameter_m");
  scn.array.center = vec3_from_json(j.at("array").at("center_m"));
  for (const json& m : j.at("array").at("mic_positions_m"))
    scn.array.mic_positions.push_back(vec3_from_json(m));
  for (const json& p : j.at("loudspeakers")) scn.loudspeakers.push_back(placement_from_json(p));
  for (const json& t : j.at("talker")) {
    TimedPlacement seg;
    seg.start_s = t.at("start_s");
    seg.placement = placement_from_json(t);
    scn.talker.push_back(seg);
  }
  scn.ser_db = j.at("ser_db");
  scn.talk_pattern = talk_pattern_from_string(j.at("talk_pattern"));
  return scn;
}

void save_scenario(const std::string& path, const Scenario& scn) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ConfigError("save_scenario: cannot open " + path);
  f << scenario_to_json(scn) << "\n";
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("load_scenario: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return scenario_from_json(ss.str());
}

}  // namespace echolab

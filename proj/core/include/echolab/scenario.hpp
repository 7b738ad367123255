#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "echolab/common.hpp"
#include "echolab/rng.hpp"

namespace echolab {

using Vec3 = std::array<double, 3>;

inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// DOA grid: 36 hypothesized directions, 10 degrees apart, 0 deg along +x,
// counter-clockwise in the horizontal array plane.
inline constexpr int kNumDirections = 36;
inline constexpr double kGridStepDeg = 10.0;

// Nearest grid point on the circle; ties break toward the lower index.
int direction_to_grid_index(double direction_deg);

struct RoomSpec {
  double length_m = 6.0;
  double width_m = 5.0;
  double height_m = 4.0;
  double t60_s = 0.3;  // 0 means anechoic
};

struct ArraySpec {
  int num_mics = 6;
  double diameter_m = 0.07;
  Vec3 center{0.0, 0.0, 0.0};
  std::vector<Vec3> mic_positions;

  // Mic 1 (the reference) sits at angle 0 on the circle.
  static ArraySpec circular(int num_mics, double diameter_m, const Vec3& center);
};

enum class SourceKind { kLoudspeaker, kTalker };

struct SourcePlacement {
  SourceKind kind = SourceKind::kLoudspeaker;
  double direction_deg = 0.0;  // [0, 360)
  double distance_m = 1.0;     // >= 1 from array center
  Vec3 position{0.0, 0.0, 0.0};
};

struct TimedPlacement {
  double start_s = 0.0;
  SourcePlacement placement;
};

enum class TalkPattern { kDoubleTalk, kNearEndOnly, kFarEndOnly };

std::string to_string(TalkPattern p);
TalkPattern talk_pattern_from_string(const std::string& s);

enum class PolicyKind { kMatched, kTalkerMoves, kGrid1Deg, kCoDirectional };

std::string to_string(PolicyKind k);
PolicyKind policy_kind_from_string(const std::string& s);

// Sampling policy. Geometric constraints follow the published setup; the
// pattern is drawn uniformly unless pinned.
struct ScenarioPolicy {
  PolicyKind kind = PolicyKind::kMatched;
  double duration_s = 6.0;
  bool anechoic = false;                  // force t60 = 0 (toy/test scenes)
  bool fixed_pattern = false;
  TalkPattern pattern = TalkPattern::kDoubleTalk;
  double room_length_min = 4.0, room_length_max = 8.0;
  double room_width_min = 3.0, room_width_max = 7.0;
  double room_height_min = 3.0, room_height_max = 5.0;
  double t60_min = 0.1, t60_max = 0.8;
  int num_loudspeakers = 2;
  int num_mics = 6;
  double array_diameter_m = 0.07;
};

struct Scenario {
  RoomSpec room;
  ArraySpec array;
  std::vector<SourcePlacement> loudspeakers;
  std::vector<TimedPlacement> talker;  // one segment when static
  int ser_db = 0;
  TalkPattern talk_pattern = TalkPattern::kDoubleTalk;
  double duration_s = 6.0;
  PolicyKind policy = PolicyKind::kMatched;
  std::uint64_t rng_seed = 0;

  bool talker_moves() const { return talker.size() > 1; }
  const SourcePlacement& talker_at(double time_s) const;
};

// Deterministic in (policy, seed): same inputs yield a bit-identical scenario.
Scenario sample_scenario(const ScenarioPolicy& policy, std::uint64_t seed);
Scenario sample_scenario(PolicyKind kind, std::uint64_t seed);

// Two-segment talker path: [0,3) at A, [3,total) at B, A != B. The second
// direction avoids `excluded_grid_dirs` (the loudspeakers and first position).
std::vector<TimedPlacement> talker_trajectory(const RoomSpec& room, const ArraySpec& array,
                                              const std::vector<int>& excluded_grid_dirs,
                                              double total_s, Pcg32& rng);

// Scenario manifest, schema "echolab-scenario/1", SI units and degrees.
std::string scenario_to_json(const Scenario& scn);
Scenario scenario_from_json(const std::string& json_text);
void save_scenario(const std::string& path, const Scenario& scn);
Scenario load_scenario(const std::string& path);

}  // namespace echolab

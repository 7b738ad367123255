#include "echolab/labels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace echolab {

namespace {

constexpr char kLabelsMagic[] = "echolab-labels/1\n";
constexpr double kActivityDbBelowPeak = -40.0;
constexpr double kActivityFloor = 1e-6;

nn::Tensor<float> presence_to_targets(const std::vector<std::uint8_t>& presence, int frames) {
  nn::Tensor<float> t({frames, kNumDirections, 2});
  for (int i = 0; i < frames; ++i)
    for (int d = 0; d < kNumDirections; ++d) {
      const bool on = presence[static_cast<std::size_t>(i) * kNumDirections +
                               static_cast<std::size_t>(d)] != 0;
      t.at(i, d, 0) = on ? 1.0f : 0.0f;
      t.at(i, d, 1) = on ? 0.0f : 1.0f;
    }
  return t;
}

// Per-frame RMS with the causal framing shared with the STFT (frame t covers
// samples [t*hop, t*hop + win), zero tail padding).
std::vector<double> frame_rms(const std::vector<double>& wave, const StftConfig& cfg) {
  const int win = cfg.win_samples();
  const int hop = cfg.hop_samples();
  const int frames = cfg.num_frames(wave.size());
  std::vector<double> rms(static_cast<std::size_t>(frames));
  for (int t = 0; t < frames; ++t) {
    double acc = 0.0;
    const std::size_t start = static_cast<std::size_t>(t) * hop;
    for (int i = 0; i < win; ++i) {
      const std::size_t idx = start + static_cast<std::size_t>(i);
      if (idx < wave.size()) acc += wave[idx] * wave[idx];
    }
    rms[static_cast<std::size_t>(t)] = std::sqrt(acc / win);
  }
  return rms;
}

std::vector<std::uint8_t> activity(const std::vector<double>& rms) {
  double peak = 0.0;
  for (double r : rms) peak = std::max(peak, r);
  const double thresh = std::max(peak * std::pow(10.0, kActivityDbBelowPeak / 20.0),
                                 kActivityFloor);
  std::vector<std::uint8_t> on(rms.size());
  for (std::size_t t = 0; t < rms.size(); ++t) on[t] = rms[t] > thresh ? 1 : 0;
  return on;
}

}  // namespace

nn::Tensor<float> DoaLabelTrack::loudspeaker_targets() const {
  return presence_to_targets(loudspeakers, frames);
}

nn::Tensor<float> DoaLabelTrack::talker_targets() const { return presence_to_targets(talker, frames); }

DoaLabelTrack make_labels(const Scenario& scn, const DrySources& dry, const StftConfig& config) {
  require(dry.loudspeakers.size() == scn.loudspeakers.size(),
          "make_labels: loudspeaker wave count does not match the scenario");
  const std::size_t n = dry.talker.size();
  if (n < static_cast<std::size_t>(config.win_samples()))
    throw DomainError("make_labels: waves shorter than one frame");
  for (const auto& w : dry.loudspeakers)
    if (w.size() != n) throw DomainError("make_labels: source wave lengths differ");

  DoaLabelTrack track;
  track.config = config;
  track.frames = config.num_frames(n);
  const std::size_t cells = static_cast<std::size_t>(track.frames) * kNumDirections;
  track.loudspeakers.assign(cells, 0);
  track.talker.assign(cells, 0);

  if (scn.talk_pattern != TalkPattern::kNearEndOnly) {
    for (std::size_t p = 0; p < dry.loudspeakers.size(); ++p) {
      const int d = direction_to_grid_index(scn.loudspeakers[p].direction_deg);
      const std::vector<std::uint8_t> on = activity(frame_rms(dry.loudspeakers[p], config));
      for (int t = 0; t < track.frames; ++t)
        if (on[static_cast<std::size_t>(t)])
          track.loudspeakers[static_cast<std::size_t>(t) * kNumDirections +
                             static_cast<std::size_t>(d)] = 1;
    }
  }

  if (scn.talk_pattern != TalkPattern::kFarEndOnly) {
    require(!scn.talker.empty(), "make_labels: scenario has no talker");
    const std::vector<std::uint8_t> on = activity(frame_rms(dry.talker, config));
    const double hop_s = static_cast<double>(config.hop_samples()) / config.fs;
    for (int t = 0; t < track.frames; ++t) {
      if (!on[static_cast<std::size_t>(t)]) continue;
      const int d = direction_to_grid_index(scn.talker_at(t * hop_s).direction_deg);
      track.talker[static_cast<std::size_t>(t) * kNumDirections + static_cast<std::size_t>(d)] =
          1;
    }
  }
  return track;
}

std::vector<std::vector<int>> decode_predictions(const nn::Tensor<float>& logits, int max_sources,
                                                 double threshold) {
  require(max_sources == 1 || max_sources == 2, "decode_predictions: max_sources must be 1 or 2");
  require(logits.rank() == 3 && logits.dim(1) == kNumDirections && logits.dim(2) == 2,
          "decode_predictions: logits must be frames x 36 x 2");
  const int frames = logits.dim(0);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(frames));
  for (int t = 0; t < frames; ++t) {
    std::vector<std::pair<double, int>> candidates;  // (p_present, direction)
    for (int d = 0; d < kNumDirections; ++d) {
      const double margin = static_cast<double>(logits.at(t, d, 1)) - logits.at(t, d, 0);
      const double p = 1.0 / (1.0 + std::exp(margin));
      if (p > threshold) candidates.emplace_back(p, d);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    if (static_cast<int>(candidates.size()) > max_sources)
      candidates.resize(static_cast<std::size_t>(max_sources));
    std::vector<int> dirs;
    dirs.reserve(candidates.size());
    for (const auto& [p, d] : candidates) dirs.push_back(d);
    std::sort(dirs.begin(), dirs.end());
    out[static_cast<std::size_t>(t)] = std::move(dirs);
  }
  return out;
}

namespace {

void pack_bits(std::ofstream& f, const std::vector<std::uint8_t>& bits) {
  std::vector<std::uint8_t> bytes((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) bytes[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> unpack_bits(std::ifstream& f, std::size_t count) {
  std::vector<std::uint8_t> bytes((count + 7) / 8);
  f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ProtocolError("labels file truncated");
  std::vector<std::uint8_t> bits(count);
  for (std::size_t i = 0; i < count; ++i) bits[i] = (bytes[i / 8] >> (i % 8)) & 1u;
  return bits;
}

void write_u32(std::ofstream& f, std::uint32_t v) {
  std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                       static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& f) {
  std::uint8_t b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f) throw ProtocolError("labels file truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_labels(const std::string& path, const DoaLabelTrack& track) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("save_labels: cannot open " + path);
  f.write(kLabelsMagic, static_cast<std::streamsize>(std::strlen(kLabelsMagic)));
  write_u32(f, static_cast<std::uint32_t>(track.frames));
  write_u32(f, kNumDirections);
  write_u32(f, static_cast<std::uint32_t>(track.config.fs));
  write_u32(f, static_cast<std::uint32_t>(track.config.win_ms));
  write_u32(f, static_cast<std::uint32_t>(track.config.hop_ms));
  pack_bits(f, track.loudspeakers);
  pack_bits(f, track.talker);
  if (!f) throw ConfigError("save_labels: write failed for " + path);
}

DoaLabelTrack load_labels(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("load_labels: cannot open " + path);
  char magic[sizeof(kLabelsMagic)] = {};
  f.read(magic, static_cast<std::streamsize>(std::strlen(kLabelsMagic)));
  if (!f || std::strncmp(magic, kLabelsMagic, std::strlen(kLabelsMagic)) != 0)
    throw ProtocolError("load_labels: not an echolab-labels/1 file: " + path);
  DoaLabelTrack track;
  track.frames = static_cast<int>(read_u32(f));
  const std::uint32_t dirs = read_u32(f);
  if (dirs != kNumDirections) throw ProtocolError("load_labels: unexpected direction count");
  track.config.fs = static_cast<int>(read_u32(f));
  track.config.win_ms = static_cast<int>(read_u32(f));
  track.config.hop_ms = static_cast<int>(read_u32(f));
  const std::size_t cells = static_cast<std::size_t>(track.frames) * kNumDirections;
  track.loudspeakers = unpack_bits(f, cells);
  track.talker = unpack_bits(f, cells);
  return track;
}

std::string labels_summary_json(const DoaLabelTrack& track) {
  int ls_active = 0, talker_active = 0, silent = 0;
  for (int t = 0; t < track.frames; ++t) {
    bool ls_on = false, tk_on = false;
    for (int d = 0; d < kNumDirections; ++d) {
      ls_on = ls_on || track.ls_present(t, d);
      tk_on = tk_on || track.talker_present(t, d);
    }
    ls_active += ls_on;
    talker_active += tk_on;
    silent += !ls_on && !tk_on;
  }
  nlohmann::ordered_json j;
  j["schema"] = "echolab-labels/1";
  j["frames"] = track.frames;
  j["directions"] = kNumDirections;
  j["loudspeaker_active_frames"] = ls_active;
  j["talker_active_frames"] = talker_active;
  j["silent_frames"] = silent;
  return j.dump(2);
}

}  // namespace echolab

#include "echolab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "echolab/labels.hpp"
#include "echolab/parallel.hpp"
#include "echolab/wav.hpp"

namespace echolab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kSyllabicRateHz = 4.0;
constexpr double kActiveBlockProb = 0.75;
constexpr double kRampS = 0.010;
}  // namespace

std::vector<double> pink_noise(std::size_t n, Pcg32& rng) {
  std::vector<double> out(n);
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = rng.normal();
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    out[i] = 0.25 * (b0 + b1 + b2 + w * 0.1848);
  }
  return out;
}

std::vector<double> speech_surrogate(std::size_t n, int fs, Pcg32& rng) {
  require(fs > 0, "speech_surrogate: bad sample rate");
  if (n == 0) return {};
  const double phase = rng.uniform(0.0, 2.0 * kPi);

  // Random talk/pause blocks; the first block always talks so the utterance
  // is never empty.
  std::vector<std::uint8_t> gate(n, 0);
  std::size_t pos = 0;
  bool first = true;
  while (pos < n) {
    const double block_s = rng.uniform(0.2, 0.6);
    const std::size_t len =
        std::min(n - pos, static_cast<std::size_t>(std::llround(block_s * fs)));
    const bool active = first || rng.uniform(0.0, 1.0) < kActiveBlockProb;
    first = false;
    std::fill(gate.begin() + static_cast<std::ptrdiff_t>(pos),
              gate.begin() + static_cast<std::ptrdiff_t>(pos + std::max<std::size_t>(len, 1)),
              active ? 1 : 0);
    pos += std::max<std::size_t>(len, 1);
  }

  std::vector<double> noise = pink_noise(n, rng);

  // Half-cosine ramps at gate transitions avoid clicks in the activity labels.
  const std::size_t ramp = std::max<std::size_t>(1, static_cast<std::size_t>(kRampS * fs));
  std::vector<double> smooth(n);
  double level = gate[0];
  for (std::size_t i = 0; i < n; ++i) {
    const double target = gate[i];
    if (level < target) level = std::min(target, level + 1.0 / static_cast<double>(ramp));
    else if (level > target) level = std::max(target, level - 1.0 / static_cast<double>(ramp));
    smooth[i] = 0.5 * (1.0 - std::cos(kPi * level));
  }

  std::vector<double> out(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double env = 0.3 + 0.7 * 0.5 * (1.0 + std::sin(2.0 * kPi * kSyllabicRateHz * t + phase));
    out[i] = noise[i] * env * smooth[i];
    peak = std::max(peak, std::fabs(out[i]));
  }
  if (peak > 0.0)
    for (double& v : out) v *= 0.5 / peak;
  return out;
}

namespace {

std::vector<double> corpus_utterance(const std::string& dir, std::size_t n, Pcg32& rng) {
  std::vector<std::string> files;
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".wav")
        files.push_back(e.path().string());
  }
  if (files.empty()) throw ConfigError("speech dir has no .wav files: " + dir);
  std::sort(files.begin(), files.end());
  const MultichannelWave w = read_wav(files[rng.next_below(static_cast<std::uint32_t>(files.size()))]);
  require(w.sample_rate == kSampleRate, "speech corpus sample rate must be 16 kHz");
  const std::vector<double>& src = w.channels.at(0);
  require(!src.empty(), "speech corpus file is empty");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = src[i % src.size()];
  return out;
}

std::string scenario_dir_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scenario_%04d", index);
  return buf;
}

}  // namespace

RenderedScenario render_scenario(const SynthConfig& cfg, int index) {
  const std::uint64_t seed_i = mix_seed(cfg.seed, static_cast<std::uint64_t>(index));
  RenderedScenario out;
  out.scenario = sample_scenario(cfg.policy, seed_i);
  const std::size_t n =
      static_cast<std::size_t>(std::llround(cfg.policy.duration_s * kSampleRate));
  Pcg32 far_rng(mix_seed(seed_i, 0xfa12));
  Pcg32 near_rng(mix_seed(seed_i, 0x4ea1));
  if (cfg.surrogate || cfg.speech_dir.empty()) {
    out.far_end = speech_surrogate(n, kSampleRate, far_rng);
    out.near_speech = speech_surrogate(n, kSampleRate, near_rng);
  } else {
    out.far_end = corpus_utterance(cfg.speech_dir, n, far_rng);
    out.near_speech = corpus_utterance(cfg.speech_dir, n, near_rng);
  }
  out.render = render_mixture(out.scenario, out.far_end, out.near_speech, cfg.render);
  return out;
}

void write_scenario_dir(const std::string& dir_path, const RenderedScenario& rs,
                        const StftConfig& stft) {
  const fs::path dir(dir_path);
  fs::create_directories(dir);

  write_wav((dir / "y.wav").string(), rs.render.mixture);
  MultichannelWave x(1, rs.far_end.size(), WaveRole::kFarEnd);
  x.channels[0] = rs.far_end;
  write_wav((dir / "x.wav").string(), x);
  MultichannelWave sd(1, rs.far_end.size(), WaveRole::kNearEndDirect);
  sd.channels[0] = rs.render.near_direct.channels.at(0);
  write_wav((dir / "s_d.wav").string(), sd);

  DrySources dry;
  dry.loudspeakers.assign(rs.scenario.loudspeakers.size(), rs.render.far_end_nl);
  dry.talker = rs.near_speech;
  save_labels((dir / "labels.bin").string(), make_labels(rs.scenario, dry, stft));
  save_scenario((dir / "scenario.json").string(), rs.scenario);
}

SynthResult synthesize_dataset(const SynthConfig& cfg) {
  require(cfg.count >= 1, "synth: count must be >= 1");
  require(cfg.train_frac >= 0.0 && cfg.val_frac >= 0.0 &&
              cfg.train_frac + cfg.val_frac <= 1.0,
          "synth: bad split fractions");
  if (!cfg.surrogate && cfg.speech_dir.empty())
    throw ConfigError("synth: need a speech dir or the surrogate");

  const fs::path root = fs::path(cfg.out_dir) / cfg.set_name;
  fs::create_directories(root);

  const int n_train = static_cast<int>(std::llround(cfg.train_frac * cfg.count));
  const int n_val = std::min(cfg.count - n_train,
                             static_cast<int>(std::llround(cfg.val_frac * cfg.count)));

  SynthResult result;
  result.entries.resize(static_cast<std::size_t>(cfg.count));
  parallel_for(static_cast<std::size_t>(cfg.count), cfg.jobs, [&](std::size_t idx) {
    const int i = static_cast<int>(idx);
    const RenderedScenario rs = render_scenario(cfg, i);
    const std::string dir_name = scenario_dir_name(i);
    write_scenario_dir((root / dir_name).string(), rs, cfg.stft);

    ScenarioEntry entry;
    entry.id = cfg.set_name + "/" + dir_name;
    entry.dir = dir_name;
    entry.split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
    entry.pattern = rs.scenario.talk_pattern;
    entry.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(i));
    result.entries[idx] = entry;
  });

  result.manifest_path = (root / "dataset.json").string();
  save_manifest(result.manifest_path, cfg, result.entries);
  return result;
}

void save_manifest(const std::string& path, const SynthConfig& cfg,
                   const std::vector<ScenarioEntry>& entries) {
  json j;
  j["schema"] = "echolab-dataset/1";
  j["set_name"] = cfg.set_name;
  j["count"] = cfg.count;
  j["seed"] = cfg.seed;
  j["config"] = {{"policy", to_string(cfg.policy.kind)},
                 {"duration_s", cfg.policy.duration_s},
                 {"anechoic", cfg.policy.anechoic},
                 {"pattern", cfg.policy.fixed_pattern ? to_string(cfg.policy.pattern)
                                                      : std::string("random")},
                 {"num_loudspeakers", cfg.policy.num_loudspeakers},
                 {"num_mics", cfg.policy.num_mics},
                 {"array_diameter_m", cfg.policy.array_diameter_m},
                 {"room_length", {cfg.policy.room_length_min, cfg.policy.room_length_max}},
                 {"room_width", {cfg.policy.room_width_min, cfg.policy.room_width_max}},
                 {"room_height", {cfg.policy.room_height_min, cfg.policy.room_height_max}},
                 {"t60", {cfg.policy.t60_min, cfg.policy.t60_max}},
                 {"train_frac", cfg.train_frac},
                 {"val_frac", cfg.val_frac},
                 {"surrogate", cfg.surrogate},
                 {"speech_dir", cfg.speech_dir},
                 {"win_ms", cfg.stft.win_ms},
                 {"hop_ms", cfg.stft.hop_ms}};
  j["entries"] = json::array();
  for (const ScenarioEntry& e : entries)
    j["entries"].push_back({{"id", e.id},
                            {"dir", e.dir},
                            {"split", e.split},
                            {"pattern", to_string(e.pattern)},
                            {"seed", e.seed}});
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ConfigError("cannot write manifest: " + path);
  f << j.dump(2) << '\n';
}

namespace {

json read_manifest_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read manifest: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("bad manifest JSON: " + std::string(e.what()));
  }
  if (j.value("schema", "") != "echolab-dataset/1")
    throw ConfigError("manifest schema mismatch");
  return j;
}

}  // namespace

std::vector<ScenarioEntry> load_manifest(const std::string& path) {
  const json j = read_manifest_json(path);
  std::vector<ScenarioEntry> out;
  for (const json& e : j.at("entries")) {
    ScenarioEntry entry;
    entry.id = e.at("id").get<std::string>();
    entry.dir = e.at("dir").get<std::string>();
    entry.split = e.at("split").get<std::string>();
    entry.pattern = talk_pattern_from_string(e.at("pattern").get<std::string>());
    entry.seed = e.at("seed").get<std::uint64_t>();
    out.push_back(entry);
  }
  return out;
}

SynthConfig synth_config_from_manifest(const std::string& path) {
  const json j = read_manifest_json(path);
  SynthConfig cfg;
  cfg.set_name = j.value("set_name", cfg.set_name);
  cfg.count = j.value("count", cfg.count);
  cfg.seed = j.value("seed", cfg.seed);
  const json& c = j.at("config");
  cfg.policy.kind = policy_kind_from_string(c.at("policy").get<std::string>());
  cfg.policy.duration_s = c.value("duration_s", cfg.policy.duration_s);
  cfg.policy.anechoic = c.value("anechoic", cfg.policy.anechoic);
  const std::string pattern = c.value("pattern", std::string("random"));
  cfg.policy.fixed_pattern = pattern != "random";
  if (cfg.policy.fixed_pattern) cfg.policy.pattern = talk_pattern_from_string(pattern);
  cfg.policy.num_loudspeakers = c.value("num_loudspeakers", cfg.policy.num_loudspeakers);
  cfg.policy.num_mics = c.value("num_mics", cfg.policy.num_mics);
  cfg.policy.array_diameter_m = c.value("array_diameter_m", cfg.policy.array_diameter_m);
  auto range = [&](const char* key, double& lo, double& hi) {
    if (c.contains(key)) {
      lo = c[key].at(0).get<double>();
      hi = c[key].at(1).get<double>();
    }
  };
  range("room_length", cfg.policy.room_length_min, cfg.policy.room_length_max);
  range("room_width", cfg.policy.room_width_min, cfg.policy.room_width_max);
  range("room_height", cfg.policy.room_height_min, cfg.policy.room_height_max);
  range("t60", cfg.policy.t60_min, cfg.policy.t60_max);
  cfg.train_frac = c.value("train_frac", cfg.train_frac);
  cfg.val_frac = c.value("val_frac", cfg.val_frac);
  cfg.surrogate = c.value("surrogate", cfg.surrogate);
  cfg.speech_dir = c.value("speech_dir", cfg.speech_dir);
  cfg.stft.win_ms = c.value("win_ms", cfg.stft.win_ms);
  cfg.stft.hop_ms = c.value("hop_ms", cfg.stft.hop_ms);
  return cfg;
}

}  // namespace echolab

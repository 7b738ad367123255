#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "echolab/acoustics.hpp"
#include "echolab/dsp.hpp"
#include "echolab/rng.hpp"
#include "echolab/scenario.hpp"

namespace echolab {

// 1/f-shaped noise (Kellet's pole approximation), unit-ish variance.
std::vector<double> pink_noise(std::size_t n, Pcg32& rng);

// Built-in speech stand-in: amplitude-modulated pink noise with a syllabic
// 4 Hz envelope and random pauses. Not speech; just enough temporal structure
// for activity labels and toy training. Peak-normalized to 0.5.
std::vector<double> speech_surrogate(std::size_t n, int fs, Pcg32& rng);

struct SynthConfig {
  ScenarioPolicy policy;
  int count = 16;
  double train_frac = 0.8;
  double val_frac = 0.1;  // test split takes the remainder
  std::string out_dir = "dataset";
  std::string set_name = "matched";
  std::uint64_t seed = 1;
  std::string speech_dir;  // user WAV corpus; empty selects the surrogate
  bool surrogate = true;
  int jobs = 1;  // scenario-level worker pool; results are keyed by index
  StftConfig stft;
  RenderOptions render;
};

struct ScenarioEntry {
  std::string id;
  std::string dir;  // relative to out_dir
  std::string split;
  TalkPattern pattern = TalkPattern::kDoubleTalk;
  std::uint64_t seed = 0;
};

struct SynthResult {
  std::string manifest_path;
  std::vector<ScenarioEntry> entries;
};

// Rendered signals for one scenario, kept in memory for training/eval without
// a disk round-trip.
struct RenderedScenario {
  Scenario scenario;
  RenderResult render;
  std::vector<double> far_end;      // x, pre-nonlinearity
  std::vector<double> near_speech;  // dry talker signal
};

// Deterministic per (cfg.seed, index); the same pair always renders the same
// scenario and signals.
RenderedScenario render_scenario(const SynthConfig& cfg, int index);

// Renders cfg.count scenarios into out_dir/<set_name>/scenario_NNNN/ with
// y.wav (Q-ch mixture), x.wav (far end), s_d.wav (reference-mic near-end
// direct target), labels.bin and scenario.json, plus a dataset manifest.
SynthResult synthesize_dataset(const SynthConfig& cfg);

// Writes one scenario directory (the exact files synthesize_dataset emits).
void write_scenario_dir(const std::string& dir_path, const RenderedScenario& rs,
                        const StftConfig& stft);

// Manifest I/O (schema "echolab-dataset/1").
void save_manifest(const std::string& path, const SynthConfig& cfg,
                   const std::vector<ScenarioEntry>& entries);
std::vector<ScenarioEntry> load_manifest(const std::string& path);

// Recovers the synthesis config embedded in a manifest, so any scenario can
// be re-rendered bit-identically from (manifest, index).
SynthConfig synth_config_from_manifest(const std::string& path);

}  // namespace echolab

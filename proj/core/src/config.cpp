#include "echolab/config.hpp"

#include <fstream>

#include <json.hpp>

namespace echolab {

using json = nlohmann::ordered_json;

std::string experiment_to_json(const ExperimentConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["data_dir"] = cfg.data_dir;
  j["run_dir"] = cfg.run_dir;
  j["synth"] = {{"policy", to_string(cfg.synth.policy.kind)},
                {"count", cfg.synth.count},
                {"duration_s", cfg.synth.policy.duration_s},
                {"anechoic", cfg.synth.policy.anechoic},
                {"pattern", cfg.synth.policy.fixed_pattern
                                ? to_string(cfg.synth.policy.pattern)
                                : std::string("random")},
                {"num_loudspeakers", cfg.synth.policy.num_loudspeakers},
                {"num_mics", cfg.synth.policy.num_mics},
                {"t60_min", cfg.synth.policy.t60_min},
                {"t60_max", cfg.synth.policy.t60_max},
                {"train_frac", cfg.synth.train_frac},
                {"val_frac", cfg.synth.val_frac},
                {"set_name", cfg.synth.set_name},
                {"surrogate", cfg.synth.surrogate},
                {"speech_dir", cfg.synth.speech_dir},
                {"seed", cfg.synth.seed}};
  j["stft"] = {{"win_ms", cfg.synth.stft.win_ms}, {"hop_ms", cfg.synth.stft.hop_ms}};
  j["ssdoa"] = {{"channels", cfg.ssdoa.channels},
                {"dropout", cfg.ssdoa.dropout},
                {"seed", cfg.ssdoa.seed}};
  j["iscrn"] = {{"channels", cfg.iscrn.channels},
                {"lstm_hidden", cfg.iscrn.lstm_hidden},
                {"s4d_state", cfg.iscrn.s4d_state},
                {"mode", to_string(cfg.iscrn.mode)},
                {"mask_output", cfg.iscrn.mask_output},
                {"seed", cfg.iscrn.seed}};
  j["train"] = {{"max_epochs", cfg.train.max_epochs},
                {"lr", cfg.train.lr},
                {"patience", cfg.train.patience},
                {"early_stop", cfg.train.early_stop},
                {"stop_at_fraction", cfg.train.stop_at_fraction},
                {"shuffle_seed", cfg.train.shuffle_seed}};
  return j.dump(2) + "\n";
}

ExperimentConfig experiment_from_json(const std::string& text, const ExperimentConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("bad experiment config JSON: " + std::string(e.what()));
  }
  ExperimentConfig cfg = base;
  try {
    cfg.seed = j.value("seed", cfg.seed);
    cfg.data_dir = j.value("data_dir", cfg.data_dir);
    cfg.run_dir = j.value("run_dir", cfg.run_dir);
    if (j.contains("synth")) {
      const json& s = j["synth"];
      if (s.contains("policy"))
        cfg.synth.policy.kind = policy_kind_from_string(s["policy"].get<std::string>());
      cfg.synth.count = s.value("count", cfg.synth.count);
      cfg.synth.policy.duration_s = s.value("duration_s", cfg.synth.policy.duration_s);
      cfg.synth.policy.anechoic = s.value("anechoic", cfg.synth.policy.anechoic);
      if (s.contains("pattern")) {
        const std::string p = s["pattern"].get<std::string>();
        cfg.synth.policy.fixed_pattern = p != "random";
        if (cfg.synth.policy.fixed_pattern) cfg.synth.policy.pattern = talk_pattern_from_string(p);
      }
      cfg.synth.policy.num_loudspeakers =
          s.value("num_loudspeakers", cfg.synth.policy.num_loudspeakers);
      cfg.synth.policy.num_mics = s.value("num_mics", cfg.synth.policy.num_mics);
      cfg.synth.policy.t60_min = s.value("t60_min", cfg.synth.policy.t60_min);
      cfg.synth.policy.t60_max = s.value("t60_max", cfg.synth.policy.t60_max);
      cfg.synth.train_frac = s.value("train_frac", cfg.synth.train_frac);
      cfg.synth.val_frac = s.value("val_frac", cfg.synth.val_frac);
      cfg.synth.set_name = s.value("set_name", cfg.synth.set_name);
      cfg.synth.surrogate = s.value("surrogate", cfg.synth.surrogate);
      cfg.synth.speech_dir = s.value("speech_dir", cfg.synth.speech_dir);
      cfg.synth.seed = s.value("seed", cfg.synth.seed);
    }
    if (j.contains("stft")) {
      cfg.synth.stft.win_ms = j["stft"].value("win_ms", cfg.synth.stft.win_ms);
      cfg.synth.stft.hop_ms = j["stft"].value("hop_ms", cfg.synth.stft.hop_ms);
    }
    if (j.contains("ssdoa")) {
      const json& s = j["ssdoa"];
      cfg.ssdoa.channels = s.value("channels", cfg.ssdoa.channels);
      cfg.ssdoa.dropout = s.value("dropout", cfg.ssdoa.dropout);
      cfg.ssdoa.seed = s.value("seed", cfg.ssdoa.seed);
    }
    if (j.contains("iscrn")) {
      const json& s = j["iscrn"];
      cfg.iscrn.channels = s.value("channels", cfg.iscrn.channels);
      cfg.iscrn.lstm_hidden = s.value("lstm_hidden", cfg.iscrn.lstm_hidden);
      cfg.iscrn.s4d_state = s.value("s4d_state", cfg.iscrn.s4d_state);
      if (s.contains("mode")) cfg.iscrn.mode = fusion_mode_from_string(s["mode"].get<std::string>());
      cfg.iscrn.mask_output = s.value("mask_output", cfg.iscrn.mask_output);
      cfg.iscrn.seed = s.value("seed", cfg.iscrn.seed);
    }
    if (j.contains("train")) {
      const json& s = j["train"];
      cfg.train.max_epochs = s.value("max_epochs", cfg.train.max_epochs);
      cfg.train.lr = s.value("lr", cfg.train.lr);
      cfg.train.patience = s.value("patience", cfg.train.patience);
      cfg.train.early_stop = s.value("early_stop", cfg.train.early_stop);
      cfg.train.stop_at_fraction = s.value("stop_at_fraction", cfg.train.stop_at_fraction);
      cfg.train.shuffle_seed = s.value("shuffle_seed", cfg.train.shuffle_seed);
    }
  } catch (const json::exception& e) {
    throw ConfigError("bad experiment config value: " + std::string(e.what()));
  }
  // The mic count is shared between the sampler and the two models.
  cfg.ssdoa.num_mics = cfg.synth.policy.num_mics;
  cfg.iscrn.num_mics = cfg.synth.policy.num_mics;
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path, const ExperimentConfig& base) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config: " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return experiment_from_json(text, base);
}

void save_experiment_config(const std::string& path, const ExperimentConfig& cfg) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ConfigError("cannot write config: " + path);
  f << experiment_to_json(cfg);
}

}  // namespace echolab

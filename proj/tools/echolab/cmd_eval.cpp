#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <json.hpp>

#include "commands.hpp"
#include "echolab/parallel.hpp"
#include "echolab/train.hpp"
#include "echolab/wav.hpp"

namespace echolab::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

bool needs_doa(FusionMode m) {
  return m == FusionMode::kE || m == FusionMode::kEt || m == FusionMode::kEta;
}

nn::Tensor<float> featurize(const MultichannelWave& mix, const std::vector<double>& far,
                            const StftConfig& sc, SpectroTensor* mix_spec) {
  const SpectroTensor mix_s = stft(mix, sc);
  MultichannelWave far_w(1, far.size(), WaveRole::kFarEnd);
  far_w.channels[0] = far;
  const SpectroTensor far_s = stft(far_w, sc);
  if (mix_spec != nullptr) *mix_spec = mix_s;
  return ri_pack({&mix_s, &far_s});
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  return f;
}

int infer_ssdoa(const InferArgs& args) {
  SsDoaNet<float> model = load_ssdoa_model(args.ckpt);

  MultichannelWave mix;
  std::vector<double> far;
  if (!args.scenario_dir.empty()) {
    mix = read_wav((fs::path(args.scenario_dir) / "y.wav").string());
    far = read_wav((fs::path(args.scenario_dir) / "x.wav").string()).channels.at(0);
  } else if (!args.mix_wav.empty() && !args.far_wav.empty()) {
    mix = read_wav(args.mix_wav);
    far = read_wav(args.far_wav).channels.at(0);
  } else {
    throw ConfigError("infer: need --scenario or both --mix and --far");
  }

  const nn::Tensor<float> input = featurize(mix, far, args.cfg.synth.stft, nullptr);
  const auto frames = stream_infer(model, input, args.threshold);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!args.out.empty()) {
    file = open_out(args.out);
    out = &file;
  }
  for (const SsDoaFrameResult& fr : frames) {
    json j{{"frame", fr.index},
           {"loudspeakers", fr.loudspeakers},
           {"talker", fr.talker},
           {"ls_prob", fr.ls_prob},
           {"talker_prob", fr.talker_prob}};
    *out << j.dump() << '\n';
  }
  if (!args.out.empty())
    std::printf("wrote %zu frame records to %s\n", frames.size(), args.out.c_str());
  return 0;
}

int infer_aec(const InferArgs& args) {
  IscrnModel<float> model = load_iscrn_model(args.ckpt);
  const FusionMode mode = model.config().mode;
  if (needs_doa(mode) && args.ssdoa_ckpt.empty())
    throw ConfigError("infer: mode " + to_string(mode) + " needs --ssdoa-ckpt");
  std::optional<SsDoaNet<float>> frozen;
  if (needs_doa(mode)) frozen.emplace(load_ssdoa_model(args.ssdoa_ckpt));
  if (args.out.empty()) throw ConfigError("infer: aec stage needs --out for the enhanced wav");

  AecExample ex;
  MultichannelWave mix;
  std::vector<double> target_ref;  // s_d when available
  bool have_scenario = false;
  const StftConfig& sc = args.cfg.synth.stft;
  if (!args.scenario_dir.empty()) {
    ex = load_aec_example(args.scenario_dir, sc);
    mix = read_wav((fs::path(args.scenario_dir) / "y.wav").string());
    target_ref = read_wav((fs::path(args.scenario_dir) / "s_d.wav").string()).channels.at(0);
    have_scenario = true;
  } else if (!args.mix_wav.empty() && !args.far_wav.empty()) {
    if (mode == FusionMode::kB)
      throw ConfigError("infer: mode B steers at the scenario talker; use --scenario");
    mix = read_wav(args.mix_wav);
    const std::vector<double> far = read_wav(args.far_wav).channels.at(0);
    ex.base = featurize(mix, far, sc, &ex.mix_spec);
  } else {
    throw ConfigError("infer: need --scenario or both --mix and --far");
  }
  attach_direction_info(ex, mode, frozen ? &*frozen : nullptr);

  const auto t0 = std::chrono::steady_clock::now();
  const nn::Tensor<float> fused = model.fuse(ex.base, ex.has_info ? &ex.info : nullptr, false);
  const auto out = model.forward(fused, false);
  const SpectroTensor est_spec = est_to_spectro(out.est_ri, sc, mix.num_samples());
  const std::vector<double> est = istft(est_spec, sc);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  MultichannelWave est_w(1, est.size(), WaveRole::kNearEndDirect);
  est_w.channels[0] = est;
  write_wav(args.out, est_w);

  const double dur = static_cast<double>(mix.num_samples()) / sc.fs;
  json rep{{"stage", "aec"},
           {"mode", to_string(mode)},
           {"frames", ex.base.dim(1)},
           {"duration_s", dur},
           {"rtf", wall / dur},
           {"erle_db", erle_db(mix.channels.at(0), est)}};
  if (have_scenario) {
    rep["pattern"] = to_string(ex.scenario.talk_pattern);
    if (ex.scenario.talk_pattern != TalkPattern::kFarEndOnly)
      rep["sdr_db"] = projection_sdr_db(target_ref, est);
    rep["loss_ri_mag"] = nn::ri_mag_loss(out.est_ri, ex.target).loss;
  }
  rep["config"] = json::parse(experiment_to_json(args.cfg));

  const std::string rep_path = args.out + ".json";
  open_out(rep_path) << rep.dump(2) << '\n';
  std::printf("wrote %s and %s (rtf %.3f)\n", args.out.c_str(), rep_path.c_str(), wall / dur);
  return 0;
}

}  // namespace

int cmd_infer(const InferArgs& args) {
  if (args.stage == "ssdoa") return infer_ssdoa(args);
  if (args.stage == "aec") return infer_aec(args);
  throw ConfigError("infer: stage must be ssdoa or aec");
}

int cmd_eval(const EvalArgs& args) {
  if (args.ckpts.empty()) throw ConfigError("eval: no checkpoints given");
  if (args.data.empty()) throw ConfigError("eval: no datasets given");
  if (args.split != "train" && args.split != "val" && args.split != "test" &&
      args.split != "all")
    throw ConfigError("eval: split must be train, val, test or all");

  struct TestSet {
    std::string name;
    std::vector<std::string> dirs;  // absolute scenario dirs
    std::vector<std::string> ids;
  };
  std::vector<TestSet> sets;
  for (const std::string& d : args.data) {
    const std::string manifest = resolve_manifest(d);
    TestSet set;
    set.name = synth_config_from_manifest(manifest).set_name;
    const fs::path root = fs::path(manifest).parent_path();
    for (const ScenarioEntry& e : load_manifest(manifest)) {
      if (args.split != "all" && e.split != args.split) continue;
      set.dirs.push_back((root / e.dir).string());
      set.ids.push_back(e.id);
    }
    sets.push_back(std::move(set));
  }

  // one model per checkpoint; evaluation never retrains or fine-tunes
  std::vector<IscrnModel<float>> models;
  bool any_needs_doa = false;
  for (const std::string& c : args.ckpts) {
    models.push_back(load_iscrn_model(c));
    any_needs_doa = any_needs_doa || needs_doa(models.back().config().mode);
  }
  if (any_needs_doa && args.ssdoa_ckpt.empty())
    throw ConfigError("eval: a checkpoint uses DOA fusion; --ssdoa-ckpt is required");
  std::optional<SsDoaNet<float>> frozen;
  if (!args.ssdoa_ckpt.empty()) frozen.emplace(load_ssdoa_model(args.ssdoa_ckpt));

  const StftConfig& sc = args.cfg.synth.stft;
  std::vector<MetricReport> reports;
  for (IscrnModel<float>& model : models) {
    const std::string mode = to_string(model.config().mode);
    for (const TestSet& set : sets) {
      if (set.dirs.empty()) {
        std::clog << "eval: empty cell " << mode << " x " << set.name << " (split "
                  << args.split << ")\n";
        continue;
      }
      std::vector<MetricReport> cell(set.dirs.size());
      const bool use_doa = frozen.has_value();
      parallel_for(set.dirs.size(), args.jobs, [&](std::size_t i) {
        IscrnModel<float> worker_model = model;  // forward caches are per copy
        std::optional<SsDoaNet<float>> worker_doa;
        SsDoaNet<float>* doa = nullptr;
        if (use_doa) {
          worker_doa.emplace(*frozen);
          doa = &*worker_doa;
        }
        cell[i] = evaluate_aec_dir(worker_model, doa, set.dirs[i], sc, set.name,
                                   args.sdr_filter_len);
        cell[i].scenario_id = set.ids[i];
      });
      reports.insert(reports.end(), cell.begin(), cell.end());
      std::printf("evaluated %s x %s: %zu scenario(s)\n", mode.c_str(), set.name.c_str(),
                  cell.size());
    }
  }

  const fs::path out_dir =
      args.out_dir.empty() ? fs::path(args.cfg.run_dir) / "eval" : fs::path(args.out_dir);
  fs::create_directories(out_dir);
  open_out((out_dir / "reports.csv").string()) << reports_csv(reports);
  const auto agg = aggregate_reports(reports);
  open_out((out_dir / "aggregate.csv").string()) << aggregate_csv(agg);
  save_experiment_config((out_dir / "eval_config.json").string(), args.cfg);

  std::printf("%s", aggregate_table(agg).c_str());
  std::printf("reports: %s\n", (out_dir / "reports.csv").string().c_str());
  return 0;
}

}  // namespace echolab::cli

#include <cstdio>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "commands.hpp"
#include "echolab/train.hpp"

namespace echolab::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct SplitDirs {
  std::vector<std::string> train, val;
};

SplitDirs split_dirs(const std::string& manifest, bool use_val) {
  const fs::path root = fs::path(manifest).parent_path();
  SplitDirs out;
  for (const ScenarioEntry& e : load_manifest(manifest)) {
    const std::string dir = (root / e.dir).string();
    if (e.split == "train") out.train.push_back(dir);
    else if (e.split == "val" && use_val) out.val.push_back(dir);
  }
  if (out.train.empty()) throw ConfigError("train: manifest has no train split: " + manifest);
  return out;
}

// Start epoch and Adam step for --resume, read from the existing checkpoint.
void resume_counters(const std::string& ckpt, TrainOptions& opt) {
  const nn::CheckpointInfo info = nn::peek_checkpoint(ckpt);
  const json meta = json::parse(info.meta_json);
  opt.start_epoch = meta.value("epochs_run", 0);
  opt.adam_step0 = info.adam_step;
  if (!info.has_moments)
    std::fprintf(stderr, "warning: %s has no optimizer moments; resume restarts them\n",
                 ckpt.c_str());
}

void print_result(const char* stage, const TrainResult& r, const TrainOptions& opt) {
  std::printf("%s: loss %.6f -> %.6f over %d epoch(s)%s\n", stage, r.initial_loss, r.final_loss,
              r.epochs_run, r.plateau_stopped ? " (plateau stop)" : "");
  std::printf("checkpoint: %s\nlog: %s\n", opt.checkpoint_path.c_str(), opt.log_path.c_str());
}

int train_ssdoa_cmd(const TrainArgs& args, const std::string& manifest, TrainOptions opt) {
  const SplitDirs dirs = split_dirs(manifest, args.use_val);
  const StftConfig& sc = args.cfg.synth.stft;

  std::vector<SsdoaExample> train_set, val_set;
  for (const auto& d : dirs.train) train_set.push_back(load_ssdoa_example(d, sc));
  for (const auto& d : dirs.val) val_set.push_back(load_ssdoa_example(d, sc));
  std::printf("ssdoa: %zu train / %zu val examples\n", train_set.size(), val_set.size());

  SsDoaNet<float> model(args.cfg.ssdoa);
  if (args.resume) {
    model = load_ssdoa_model(opt.checkpoint_path);
    resume_counters(opt.checkpoint_path, opt);
  }

  const TrainResult r =
      train_ssdoa(model, train_set, val_set.empty() ? nullptr : &val_set, opt);
  const Prf prf = eval_ssdoa_prf(model, train_set);
  print_result("ssdoa", r, opt);
  std::printf("train-set frame PRF: P=%.3f R=%.3f F1=%.3f\n", prf.precision, prf.recall, prf.f1);
  return 0;
}

int train_aec_cmd(const TrainArgs& args, const std::string& manifest, TrainOptions opt) {
  const FusionMode mode = args.cfg.iscrn.mode;
  const bool needs_doa =
      mode == FusionMode::kE || mode == FusionMode::kEt || mode == FusionMode::kEta;
  if (needs_doa && args.ssdoa_ckpt.empty())
    throw ConfigError("train: mode " + to_string(mode) + " needs --ssdoa-ckpt");

  std::optional<SsDoaNet<float>> frozen;
  if (needs_doa) {
    frozen.emplace(load_ssdoa_model(args.ssdoa_ckpt));
    if (frozen->config().f_bins != args.cfg.iscrn.f_bins ||
        frozen->config().num_mics != args.cfg.iscrn.num_mics)
      throw ConfigError("train: ssdoa checkpoint geometry does not match the aec config");
  }

  const SplitDirs dirs = split_dirs(manifest, args.use_val);
  const StftConfig& sc = args.cfg.synth.stft;
  std::vector<AecExample> train_set, val_set;
  for (const auto& d : dirs.train) {
    train_set.push_back(load_aec_example(d, sc));
    attach_direction_info(train_set.back(), mode, frozen ? &*frozen : nullptr);
  }
  for (const auto& d : dirs.val) {
    val_set.push_back(load_aec_example(d, sc));
    attach_direction_info(val_set.back(), mode, frozen ? &*frozen : nullptr);
  }
  std::printf("aec[%s]: %zu train / %zu val examples\n", to_string(mode).c_str(),
              train_set.size(), val_set.size());

  IscrnModel<float> model = build_iscrn(args.cfg.iscrn);
  if (args.resume) {
    model = load_iscrn_model(opt.checkpoint_path);
    if (model.config().mode != mode)
      throw ConfigError("train: checkpoint mode " + to_string(model.config().mode) +
                        " does not match requested mode " + to_string(mode));
    resume_counters(opt.checkpoint_path, opt);
  }

  const TrainResult r = train_aec(model, train_set, val_set.empty() ? nullptr : &val_set, opt);
  print_result(("aec[" + to_string(mode) + "]").c_str(), r, opt);
  return 0;
}

}  // namespace

int cmd_train(const TrainArgs& args) {
  if (args.stage != "ssdoa" && args.stage != "aec")
    throw ConfigError("train: stage must be ssdoa or aec");
  const std::string manifest = resolve_manifest(args.data);

  const std::string tag =
      args.stage == "aec" ? "aec_" + to_string(args.cfg.iscrn.mode) : args.stage;
  fs::create_directories(args.cfg.run_dir);

  TrainOptions opt = args.cfg.train;
  opt.checkpoint_path = args.ckpt_out.empty()
                            ? (fs::path(args.cfg.run_dir) / (tag + ".ckpt")).string()
                            : args.ckpt_out;
  opt.log_path = args.log_path.empty()
                     ? (fs::path(args.cfg.run_dir) / (tag + "_train.jsonl")).string()
                     : args.log_path;
  if (args.resume && !fs::exists(opt.checkpoint_path))
    throw ConfigError("train: --resume but no checkpoint at " + opt.checkpoint_path);

  save_experiment_config((fs::path(args.cfg.run_dir) / (tag + "_config.json")).string(),
                         args.cfg);

  return args.stage == "ssdoa" ? train_ssdoa_cmd(args, manifest, opt)
                               : train_aec_cmd(args, manifest, opt);
}

int cmd_report(const ReportArgs& args) {
  if (args.dump_config) {
    std::printf("%s\n", experiment_to_json(args.cfg).c_str());
    return 0;
  }

  SsDoaNet<float> ssdoa = args.ssdoa_ckpt.empty() ? SsDoaNet<float>(args.cfg.ssdoa)
                                                  : load_ssdoa_model(args.ssdoa_ckpt);
  IscrnModel<float> aec =
      args.aec_ckpt.empty() ? IscrnModel<float>(args.cfg.iscrn) : load_iscrn_model(args.aec_ckpt);

  const double fps = 1000.0 / args.cfg.synth.stft.hop_ms;
  std::printf("%-12s %12s %14s %10s\n", "model", "params", "macs/frame", "mmac/s");
  auto row = [&](const std::string& name, long params, long macs) {
    std::printf("%-12s %12ld %14ld %10.1f\n", name.c_str(), params, macs, macs * fps / 1e6);
  };
  row("ssdoa", ssdoa.param_count(), ssdoa.macs_per_frame());
  row("iscrn[" + to_string(aec.config().mode) + "]", aec.param_count(), aec.macs_per_frame());
  return 0;
}

}  // namespace echolab::cli

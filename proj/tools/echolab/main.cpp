#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace echolab;
using namespace echolab::cli;

namespace {

// Flag wiring: bind every option to a local, then copy the set ones onto the
// config after the file (if any) is loaded, so precedence is
// defaults < --config file < explicit flags.
template <typename T>
void apply(const CLI::Option* opt, T& dst, const T& parsed) {
  if (opt != nullptr && opt->count() > 0) dst = parsed;
}

struct ConfigOut {
  std::string path;
  ExperimentConfig load() const {
    ExperimentConfig base;
    if (!path.empty()) base = load_experiment_config(path, base);
    return base;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"echolab: multichannel acoustic echo cancellation toolkit"};
  app.require_subcommand(1);

  ConfigOut config;
  app.add_option("--config", config.path, "experiment config (JSON; flags override)");

  int exit_code = 0;

  // ---- synth ------------------------------------------------------------
  {
    auto* sub = app.add_subcommand("synth", "render a scenario dataset");
    auto st = std::make_shared<SynthArgs>();
    auto v = std::make_shared<SynthConfig>();
    auto flags = std::make_shared<std::map<std::string, CLI::Option*>>();
    auto pattern = std::make_shared<std::string>();
    auto policy = std::make_shared<std::string>();
    auto seed = std::make_shared<std::uint64_t>(1);
    auto anechoic = std::make_shared<bool>(false);
    auto surrogate = std::make_shared<bool>(false);

    (*flags)["out"] = sub->add_option("--out", v->out_dir, "dataset root directory");
    (*flags)["set"] = sub->add_option("--set", v->set_name, "dataset set name");
    (*flags)["count"] = sub->add_option("--count", v->count, "number of scenarios");
    (*flags)["policy"] = sub->add_option("--policy", *policy,
                                         "matched|talker_moves|grid_1deg|co_directional");
    (*flags)["duration"] = sub->add_option("--duration", v->policy.duration_s, "seconds");
    (*flags)["anechoic"] = sub->add_flag("--anechoic", *anechoic, "force T60 = 0");
    (*flags)["pattern"] = sub->add_option("--pattern", *pattern, "pin DT|ST_NE|ST_FE");
    (*flags)["seed"] = sub->add_option("--seed", *seed, "dataset seed");
    (*flags)["speech-dir"] =
        sub->add_option("--speech-dir", v->speech_dir, "user speech corpus (16 kHz WAVs)");
    (*flags)["surrogate"] =
        sub->add_flag("--surrogate", *surrogate, "use the built-in speech surrogate");
    (*flags)["train-frac"] = sub->add_option("--train-frac", v->train_frac, "train fraction");
    (*flags)["val-frac"] = sub->add_option("--val-frac", v->val_frac, "val fraction");
    (*flags)["jobs"] = sub->add_option("--jobs", v->jobs, "worker threads");

    sub->callback([=, &exit_code]() {
      SynthArgs args;
      args.cfg = config.load();
      SynthConfig& s = args.cfg.synth;
      auto& f = *flags;
      apply(f["out"], s.out_dir, v->out_dir);
      apply(f["set"], s.set_name, v->set_name);
      apply(f["count"], s.count, v->count);
      if (f["policy"]->count() > 0) s.policy.kind = policy_kind_from_string(*policy);
      apply(f["duration"], s.policy.duration_s, v->policy.duration_s);
      if (f["anechoic"]->count() > 0) s.policy.anechoic = *anechoic;
      if (f["pattern"]->count() > 0) {
        s.policy.fixed_pattern = true;
        s.policy.pattern = talk_pattern_from_string(*pattern);
      }
      apply(f["seed"], s.seed, *seed);
      apply(f["speech-dir"], s.speech_dir, v->speech_dir);
      if (f["speech-dir"]->count() > 0) s.surrogate = false;
      if (f["surrogate"]->count() > 0) s.surrogate = *surrogate;
      apply(f["train-frac"], s.train_frac, v->train_frac);
      apply(f["val-frac"], s.val_frac, v->val_frac);
      apply(f["jobs"], s.jobs, v->jobs);
      if (f["set"]->count() == 0 && f["policy"]->count() > 0) s.set_name = *policy;
      exit_code = cmd_synth(args);
    });
  }

  // ---- train ------------------------------------------------------------
  {
    auto* sub = app.add_subcommand("train", "train the ssdoa or aec stage");
    auto a = std::make_shared<TrainArgs>();
    auto mode = std::make_shared<std::string>();
    auto t = std::make_shared<TrainOptions>();
    auto dropout = std::make_shared<double>(0.2);
    auto run_dir = std::make_shared<std::string>();
    auto no_val = std::make_shared<bool>(false);
    auto no_moments = std::make_shared<bool>(false);
    auto flags = std::make_shared<std::map<std::string, CLI::Option*>>();

    sub->add_option("--stage", a->stage, "ssdoa|aec")->required();
    sub->add_option("--data", a->data, "dataset manifest or directory")->required();
    (*flags)["mode"] = sub->add_option("--mode", *mode, "fusion mode: none|B|E|ET|ETA");
    sub->add_option("--ssdoa-ckpt", a->ssdoa_ckpt, "frozen DOA checkpoint (modes E/ET/ETA)");
    sub->add_option("--ckpt-out", a->ckpt_out, "checkpoint path");
    sub->add_option("--log", a->log_path, "JSON-lines training log path");
    sub->add_flag("--resume", a->resume, "continue from the existing checkpoint");
    (*flags)["no-val"] = sub->add_flag("--no-val", *no_val, "ignore the val split");
    (*flags)["epochs"] = sub->add_option("--epochs", t->max_epochs, "epoch budget");
    (*flags)["lr"] = sub->add_option("--lr", t->lr, "initial learning rate");
    (*flags)["patience"] = sub->add_option("--patience", t->patience, "epochs before halving");
    (*flags)["early-stop"] =
        sub->add_option("--early-stop", t->early_stop, "stagnant epochs before stopping");
    (*flags)["stop-at-fraction"] = sub->add_option("--stop-at-fraction", t->stop_at_fraction,
                                                   "stop once eval loss reaches this fraction");
    (*flags)["shuffle-seed"] = sub->add_option("--shuffle-seed", t->shuffle_seed, "");
    (*flags)["no-moments"] =
        sub->add_flag("--no-moments", *no_moments, "do not save Adam moments");
    (*flags)["dropout"] = sub->add_option("--dropout", *dropout, "ssdoa head dropout");
    (*flags)["run-dir"] = sub->add_option("--run-dir", *run_dir, "artifact directory");

    sub->callback([=, &exit_code]() {
      TrainArgs args = *a;
      args.cfg = config.load();
      auto& f = *flags;
      if (f["mode"]->count() > 0) args.cfg.iscrn.mode = fusion_mode_from_string(*mode);
      if (f["no-val"]->count() > 0) args.use_val = !*no_val;
      apply(f["run-dir"], args.cfg.run_dir, *run_dir);
      apply(f["dropout"], args.cfg.ssdoa.dropout, *dropout);
      TrainOptions& o = args.cfg.train;
      apply(f["epochs"], o.max_epochs, t->max_epochs);
      apply(f["lr"], o.lr, t->lr);
      apply(f["patience"], o.patience, t->patience);
      apply(f["early-stop"], o.early_stop, t->early_stop);
      apply(f["stop-at-fraction"], o.stop_at_fraction, t->stop_at_fraction);
      apply(f["shuffle-seed"], o.shuffle_seed, t->shuffle_seed);
      if (f["no-moments"]->count() > 0) o.save_moments = !*no_moments;
      exit_code = cmd_train(args);
    });
  }

  // ---- infer ------------------------------------------------------------
  {
    auto* sub = app.add_subcommand("infer", "frame-online inference");
    auto a = std::make_shared<InferArgs>();
    sub->add_option("--stage", a->stage, "ssdoa|aec")->required();
    sub->add_option("--ckpt", a->ckpt, "model checkpoint")->required();
    sub->add_option("--ssdoa-ckpt", a->ssdoa_ckpt, "frozen DOA checkpoint");
    sub->add_option("--scenario", a->scenario_dir, "scenario directory");
    sub->add_option("--mix", a->mix_wav, "mixture wav (alternative to --scenario)");
    sub->add_option("--far", a->far_wav, "far-end wav");
    sub->add_option("--out", a->out, "output path (jsonl or wav)");
    sub->add_option("--threshold", a->threshold, "direction decode threshold");
    sub->callback([=, &exit_code]() {
      InferArgs args = *a;
      args.cfg = config.load();
      exit_code = cmd_infer(args);
    });
  }

  // ---- eval -------------------------------------------------------------
  {
    auto* sub = app.add_subcommand("eval", "metric grid over checkpoints and test sets");
    auto a = std::make_shared<EvalArgs>();
    auto run_dir = std::make_shared<std::string>();
    auto flags = std::make_shared<std::map<std::string, CLI::Option*>>();
    sub->add_option("--data", a->data, "dataset manifest(s), one per test set")->required();
    sub->add_option("--ckpt", a->ckpts, "aec checkpoint(s), one per mode")->required();
    sub->add_option("--ssdoa-ckpt", a->ssdoa_ckpt, "frozen DOA checkpoint");
    sub->add_option("--split", a->split, "train|val|test|all");
    sub->add_option("--out-dir", a->out_dir, "report directory");
    sub->add_option("--sdr-filter-len", a->sdr_filter_len, "projection filter taps");
    sub->add_option("--jobs", a->jobs, "worker threads");
    (*flags)["run-dir"] = sub->add_option("--run-dir", *run_dir, "artifact directory");
    sub->callback([=, &exit_code]() {
      EvalArgs args = *a;
      args.cfg = config.load();
      apply((*flags)["run-dir"], args.cfg.run_dir, *run_dir);
      exit_code = cmd_eval(args);
    });
  }

  // ---- verify -----------------------------------------------------------
  {
    auto* sub = app.add_subcommand("verify", "re-render scenarios and byte-compare");
    auto a = std::make_shared<VerifyArgs>();
    sub->add_option("--data", a->manifest, "dataset manifest or directory")->required();
    sub->add_option("--index", a->index, "scenario index (default 0)");
    sub->add_flag("--all", a->all, "verify every scenario");
    sub->callback([=, &exit_code]() { exit_code = cmd_verify(*a); });
  }

  // ---- report -----------------------------------------------------------
  {
    auto* sub = app.add_subcommand("report", "model complexity and resolved config");
    auto a = std::make_shared<ReportArgs>();
    sub->add_option("--ssdoa-ckpt", a->ssdoa_ckpt, "DOA checkpoint");
    sub->add_option("--ckpt", a->aec_ckpt, "AEC checkpoint");
    sub->add_flag("--dump-config", a->dump_config, "print the resolved config JSON");
    sub->callback([=, &exit_code]() {
      ReportArgs args = *a;
      args.cfg = config.load();
      exit_code = cmd_report(args);
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ProtocolError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return exit_code;
}

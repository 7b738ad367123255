#include "echolab/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "echolab/mvdr.hpp"
#include "echolab/wav.hpp"

namespace echolab {

using json = nlohmann::ordered_json;

namespace {

// Reference-mic near-end direct spectrum as RI planes (the training target).
nn::Tensor<float> target_ri(const RenderedScenario& rs, const StftConfig& cfg) {
  MultichannelWave ref(1, rs.render.near_direct.num_samples());
  ref.channels[0] = rs.render.near_direct.channels.at(0);
  const SpectroTensor spec = stft(ref, cfg);
  return ri_pack({&spec});
}

nn::Tensor<float> base_input(const RenderedScenario& rs, const StftConfig& cfg,
                             SpectroTensor* mix_out) {
  const SpectroTensor mix = stft(rs.render.mixture, cfg);
  MultichannelWave far(1, rs.far_end.size(), WaveRole::kFarEnd);
  far.channels[0] = rs.far_end;
  const SpectroTensor far_spec = stft(far, cfg);
  if (mix_out != nullptr) *mix_out = mix;
  return ri_pack({&mix, &far_spec});
}

void append_log(const std::string& path, const EpochLog& e) {
  if (path.empty()) return;
  std::ofstream f(path, std::ios::app);
  if (!f) throw ConfigError("cannot append training log: " + path);
  json j{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss},
         {"lr", e.lr}};
  f << j.dump() << '\n';
}

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Pcg32 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.next_below(static_cast<std::uint32_t>(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

const DirectionInfo<float>* info_ptr(const AecExample& ex) {
  return ex.has_info ? &ex.info : nullptr;
}

}  // namespace

SsdoaExample make_ssdoa_example(const RenderedScenario& rs, const StftConfig& cfg) {
  SsdoaExample ex;
  ex.input = base_input(rs, cfg, nullptr);
  DrySources dry;
  dry.loudspeakers.assign(rs.scenario.loudspeakers.size(), rs.render.far_end_nl);
  dry.talker = rs.near_speech;
  ex.labels = make_labels(rs.scenario, dry, cfg);
  ex.ls_target = ex.labels.loudspeaker_targets();
  ex.t_target = ex.labels.talker_targets();
  require(ex.ls_target.dim(0) == ex.input.dim(1), "ssdoa example: frame count mismatch");
  return ex;
}

AecExample make_aec_example(const RenderedScenario& rs, const StftConfig& cfg) {
  AecExample ex;
  ex.scenario = rs.scenario;
  ex.base = base_input(rs, cfg, &ex.mix_spec);
  ex.target = target_ri(rs, cfg);
  return ex;
}

namespace {

struct LoadedScenario {
  Scenario scenario;
  MultichannelWave mixture;
  std::vector<double> far_end;
  std::vector<double> near_direct_ref;
};

LoadedScenario load_scenario_dir(const std::string& dir) {
  LoadedScenario out;
  out.scenario = load_scenario(dir + "/scenario.json");
  out.mixture = read_wav(dir + "/y.wav");
  out.far_end = read_wav(dir + "/x.wav").channels.at(0);
  out.near_direct_ref = read_wav(dir + "/s_d.wav").channels.at(0);
  require(out.mixture.num_samples() == out.far_end.size(),
          "scenario dir: y/x length mismatch in " + dir);
  return out;
}

nn::Tensor<float> base_input_from(const MultichannelWave& mixture,
                                  const std::vector<double>& far_end, const StftConfig& cfg,
                                  SpectroTensor* mix_out) {
  const SpectroTensor mix = stft(mixture, cfg);
  MultichannelWave far(1, far_end.size(), WaveRole::kFarEnd);
  far.channels[0] = far_end;
  const SpectroTensor far_spec = stft(far, cfg);
  if (mix_out != nullptr) *mix_out = mix;
  return ri_pack({&mix, &far_spec});
}

}  // namespace

SsdoaExample load_ssdoa_example(const std::string& scenario_dir, const StftConfig& cfg) {
  const LoadedScenario ls = load_scenario_dir(scenario_dir);
  SsdoaExample ex;
  ex.id = scenario_dir;
  ex.input = base_input_from(ls.mixture, ls.far_end, cfg, nullptr);
  ex.labels = load_labels(scenario_dir + "/labels.bin");
  require(ex.labels.frames == ex.input.dim(1),
          "scenario dir: label frame count mismatch in " + scenario_dir);
  ex.ls_target = ex.labels.loudspeaker_targets();
  ex.t_target = ex.labels.talker_targets();
  return ex;
}

AecExample load_aec_example(const std::string& scenario_dir, const StftConfig& cfg) {
  const LoadedScenario ls = load_scenario_dir(scenario_dir);
  AecExample ex;
  ex.id = scenario_dir;
  ex.scenario = ls.scenario;
  ex.base = base_input_from(ls.mixture, ls.far_end, cfg, &ex.mix_spec);
  MultichannelWave ref(1, ls.near_direct_ref.size());
  ref.channels[0] = ls.near_direct_ref;
  const SpectroTensor spec = stft(ref, cfg);
  ex.target = ri_pack({&spec});
  return ex;
}

SsDoaNet<float> load_ssdoa_model(const std::string& checkpoint_path) {
  const nn::CheckpointInfo info = nn::peek_checkpoint(checkpoint_path);
  json meta;
  try {
    meta = json::parse(info.meta_json);
  } catch (const json::exception& e) {
    throw ProtocolError("checkpoint meta is not JSON: " + std::string(e.what()));
  }
  if (meta.value("stage", "") != "ssdoa")
    throw ProtocolError("checkpoint is not an ssdoa checkpoint: " + checkpoint_path);
  SsDoaConfig cfg;
  cfg.num_mics = meta.value("num_mics", cfg.num_mics);
  cfg.channels = meta.value("channels", cfg.channels);
  cfg.f_bins = meta.value("f_bins", cfg.f_bins);
  cfg.dropout = meta.value("dropout", cfg.dropout);
  cfg.seed = meta.value("seed", cfg.seed);
  SsDoaNet<float> model(cfg);
  auto params = model.params();
  nn::load_checkpoint(checkpoint_path, params);
  return model;
}

IscrnModel<float> load_iscrn_model(const std::string& checkpoint_path) {
  const nn::CheckpointInfo info = nn::peek_checkpoint(checkpoint_path);
  json meta;
  try {
    meta = json::parse(info.meta_json);
  } catch (const json::exception& e) {
    throw ProtocolError("checkpoint meta is not JSON: " + std::string(e.what()));
  }
  if (meta.value("stage", "") != "aec")
    throw ProtocolError("checkpoint is not an aec checkpoint: " + checkpoint_path);
  IscrnConfig cfg;
  cfg.mode = fusion_mode_from_string(meta.value("mode", "none"));
  cfg.num_mics = meta.value("num_mics", cfg.num_mics);
  cfg.channels = meta.value("channels", cfg.channels);
  cfg.f_bins = meta.value("f_bins", cfg.f_bins);
  cfg.lstm_hidden = meta.value("lstm_hidden", cfg.lstm_hidden);
  cfg.s4d_state = meta.value("s4d_state", cfg.s4d_state);
  cfg.mask_output = meta.value("mask_output", cfg.mask_output);
  cfg.seed = meta.value("seed", cfg.seed);
  IscrnModel<float> model(cfg);
  auto params = model.params();
  nn::load_checkpoint(checkpoint_path, params);
  return model;
}

void attach_direction_info(AecExample& ex, FusionMode mode, SsDoaNet<float>* frozen_doa) {
  ex.info = DirectionInfo<float>{};
  ex.has_info = false;
  switch (mode) {
    case FusionMode::kNone:
      return;
    case FusionMode::kE:
    case FusionMode::kEt:
    case FusionMode::kEta: {
      require(frozen_doa != nullptr, "attach_direction_info: mode " + to_string(mode) +
                                         " needs a frozen DOA model");
      const auto out = frozen_doa->forward(ex.base, false);
      ex.info.tap_e = out.tap_e;
      ex.info.tap_t = out.tap_t;
      ex.info.t_logits = out.t_logits;
      break;
    }
    case FusionMode::kB: {
      SpectroTensor beam;
      if (ex.scenario.talker_moves()) {
        std::vector<double> track(static_cast<std::size_t>(ex.mix_spec.frames));
        const double hop_s = ex.mix_spec.config.hop_ms / 1000.0;
        for (int t = 0; t < ex.mix_spec.frames; ++t)
          track[static_cast<std::size_t>(t)] = ex.scenario.talker_at(t * hop_s).direction_deg;
        beam = mvdr_online_tracked(ex.mix_spec, track, ex.scenario.array);
      } else {
        beam = mvdr_online(ex.mix_spec, ex.scenario.talker.front().placement.direction_deg,
                           ex.scenario.array);
      }
      ex.info.beam_ri = ri_pack({&beam});
      break;
    }
  }
  ex.has_info = true;
}

double eval_ssdoa_loss(SsDoaNet<float>& model, const std::vector<SsdoaExample>& set) {
  require(!set.empty(), "eval_ssdoa_loss: empty set");
  double total = 0.0;
  for (const SsdoaExample& ex : set) {
    const auto out = model.forward(ex.input, false);
    total += nn::bce_with_logits(out.ls_logits, ex.ls_target).loss +
             nn::bce_with_logits(out.t_logits, ex.t_target).loss;
  }
  return total / static_cast<double>(set.size());
}

double eval_aec_loss(IscrnModel<float>& model, std::vector<AecExample>& set) {
  require(!set.empty(), "eval_aec_loss: empty set");
  double total = 0.0;
  for (AecExample& ex : set) {
    const nn::Tensor<float> fused = model.fuse(ex.base, info_ptr(ex), false);
    const auto out = model.forward(fused, false);
    total += nn::ri_mag_loss(out.est_ri, ex.target).loss;
  }
  return total / static_cast<double>(set.size());
}

namespace {

// Shared epoch loop: both stages differ only in the per-example closure and
// the initial/eval loss functions.
template <typename StepFn, typename EvalTrainFn, typename EvalValFn, typename EpochHook>
TrainResult run_training(std::size_t train_size, const TrainOptions& opt, StepFn step_example,
                         EvalTrainFn eval_train, EvalValFn eval_val, bool has_val,
                         EpochHook on_epoch_start) {
  TrainResult result;
  result.initial_loss = eval_train();
  nn::PlateauSchedule schedule(opt.lr, opt.patience, opt.early_stop);

  for (int epoch = opt.start_epoch; epoch < opt.max_epochs; ++epoch) {
    on_epoch_start(epoch, schedule.lr());
    const auto order =
        shuffled_order(train_size, mix_seed(opt.shuffle_seed, static_cast<std::uint64_t>(epoch)));
    double train_loss = 0.0;
    for (const std::size_t idx : order) train_loss += step_example(idx, schedule.lr());
    train_loss /= static_cast<double>(train_size);
    const double val_loss = has_val ? eval_val() : train_loss;

    EpochLog entry{epoch, train_loss, val_loss, schedule.lr()};
    result.log.push_back(entry);
    append_log(opt.log_path, entry);
    result.final_loss = train_loss;
    result.epochs_run = epoch - opt.start_epoch + 1;

    if (opt.stop_at_fraction > 0.0) {
      // Compare like with like: initial_loss is an eval-mode measurement, so
      // the stop test re-evaluates instead of trusting the step average
      // (which carries dropout noise).
      const double cur = eval_train();
      result.final_loss = cur;
      if (cur <= opt.stop_at_fraction * result.initial_loss) break;
    }
    if (schedule.observe(val_loss)) {
      result.plateau_stopped = true;
      break;
    }
  }
  result.best_val = schedule.best();
  return result;
}

}  // namespace

TrainResult train_ssdoa(SsDoaNet<float>& model, std::vector<SsdoaExample>& train_set,
                        const std::vector<SsdoaExample>* val_set, const TrainOptions& opt) {
  require(!train_set.empty(), "train_ssdoa: empty training set");
  auto params = model.params();
  nn::Adam<float> adam;
  adam.lr = opt.lr;
  adam.set_step_count(opt.adam_step0);

  auto step_example = [&](std::size_t idx, double lr) {
    adam.lr = lr;
    SsdoaExample& ex = train_set[idx];
    nn::zero_grads(params);
    const auto out = model.forward(ex.input, true);
    auto l_ls = nn::bce_with_logits(out.ls_logits, ex.ls_target);
    auto l_t = nn::bce_with_logits(out.t_logits, ex.t_target);
    model.backward(l_ls.grad, l_t.grad);
    adam.step(params);
    return l_ls.loss + l_t.loss;
  };
  auto eval_train = [&] { return eval_ssdoa_loss(model, train_set); };
  auto eval_val = [&] { return val_set != nullptr ? eval_ssdoa_loss(model, *val_set) : 0.0; };
  auto on_epoch = [&](int epoch, double) {
    model.reseed_dropout(mix_seed(opt.shuffle_seed, 0xd0ull + static_cast<std::uint64_t>(epoch)));
  };

  TrainResult result = run_training(train_set.size(), opt, step_example, eval_train, eval_val,
                                    val_set != nullptr, on_epoch);
  if (!opt.checkpoint_path.empty()) {
    json meta{{"stage", "ssdoa"},
              {"epochs_run", result.epochs_run + opt.start_epoch},
              {"num_mics", model.config().num_mics},
              {"channels", model.config().channels},
              {"f_bins", model.config().f_bins},
              {"dropout", model.config().dropout},
              {"seed", model.config().seed}};
    nn::save_checkpoint(opt.checkpoint_path, params, meta.dump(), opt.save_moments,
                        adam.step_count());
  }
  return result;
}

TrainResult train_aec(IscrnModel<float>& model, std::vector<AecExample>& train_set,
                      const std::vector<AecExample>* val_set, const TrainOptions& opt) {
  require(!train_set.empty(), "train_aec: empty training set");
  for (const AecExample& ex : train_set)
    require(ex.has_info == (model.config().mode != FusionMode::kNone),
            "train_aec: example " + ex.id + " missing directional info for mode " +
                to_string(model.config().mode));
  auto params = model.params();
  nn::Adam<float> adam;
  adam.lr = opt.lr;
  adam.set_step_count(opt.adam_step0);

  auto step_example = [&](std::size_t idx, double lr) {
    adam.lr = lr;
    AecExample& ex = train_set[idx];
    nn::zero_grads(params);
    const nn::Tensor<float> fused = model.fuse(ex.base, info_ptr(ex), true);
    const auto out = model.forward(fused, true);
    auto loss = nn::ri_mag_loss(out.est_ri, ex.target);
    model.backward(loss.grad);
    adam.step(params);
    return loss.loss;
  };
  auto eval_train = [&] { return eval_aec_loss(model, train_set); };
  auto eval_val = [&] {
    return val_set != nullptr
               ? eval_aec_loss(model, *const_cast<std::vector<AecExample>*>(val_set))
               : 0.0;
  };
  auto on_epoch = [](int, double) {};

  TrainResult result = run_training(train_set.size(), opt, step_example, eval_train, eval_val,
                                    val_set != nullptr, on_epoch);
  if (!opt.checkpoint_path.empty()) {
    json meta{{"stage", "aec"},
              {"mode", to_string(model.config().mode)},
              {"epochs_run", result.epochs_run + opt.start_epoch},
              {"num_mics", model.config().num_mics},
              {"channels", model.config().channels},
              {"f_bins", model.config().f_bins},
              {"lstm_hidden", model.config().lstm_hidden},
              {"s4d_state", model.config().s4d_state},
              {"mask_output", model.config().mask_output},
              {"seed", model.config().seed}};
    nn::save_checkpoint(opt.checkpoint_path, params, meta.dump(), opt.save_moments,
                        adam.step_count());
  }
  return result;
}

Prf eval_ssdoa_prf(SsDoaNet<float>& model, const std::vector<SsdoaExample>& set,
                   double threshold) {
  require(!set.empty(), "eval_ssdoa_prf: empty set");
  std::vector<std::uint8_t> pred, truth;
  for (const SsdoaExample& ex : set) {
    const auto out = model.forward(ex.input, false);
    const auto ls_sets = decode_predictions(out.ls_logits, 2, threshold);
    const auto t_sets = decode_predictions(out.t_logits, 1, threshold);
    const int frames = ex.labels.frames;
    for (int t = 0; t < frames; ++t) {
      std::vector<std::uint8_t> row_ls(kNumDirections, 0), row_t(kNumDirections, 0);
      for (int d : ls_sets[static_cast<std::size_t>(t)]) row_ls[static_cast<std::size_t>(d)] = 1;
      for (int d : t_sets[static_cast<std::size_t>(t)]) row_t[static_cast<std::size_t>(d)] = 1;
      for (int d = 0; d < kNumDirections; ++d) {
        pred.push_back(row_ls[static_cast<std::size_t>(d)]);
        truth.push_back(ex.labels.ls_present(t, d) ? 1 : 0);
        pred.push_back(row_t[static_cast<std::size_t>(d)]);
        truth.push_back(ex.labels.talker_present(t, d) ? 1 : 0);
      }
    }
  }
  return doa_prf(pred, truth);
}

std::vector<double> enhance_scenario(IscrnModel<float>& model, SsDoaNet<float>* frozen_doa,
                                     const RenderedScenario& rs, const StftConfig& cfg) {
  AecExample ex = make_aec_example(rs, cfg);
  attach_direction_info(ex, model.config().mode, frozen_doa);
  const nn::Tensor<float> fused = model.fuse(ex.base, info_ptr(ex), false);
  const auto out = model.forward(fused, false);
  const SpectroTensor est = est_to_spectro(out.est_ri, cfg, rs.render.mixture.num_samples());
  return istft(est, cfg);
}

MetricReport evaluate_aec_dir(IscrnModel<float>& model, SsDoaNet<float>* frozen_doa,
                              const std::string& scenario_dir, const StftConfig& cfg,
                              const std::string& test_set, int sdr_filter_len) {
  const LoadedScenario ls = load_scenario_dir(scenario_dir);
  AecExample ex;
  ex.id = scenario_dir;
  ex.scenario = ls.scenario;
  ex.base = base_input_from(ls.mixture, ls.far_end, cfg, &ex.mix_spec);
  attach_direction_info(ex, model.config().mode, frozen_doa);

  MetricReport rep;
  rep.scenario_id = scenario_dir;
  rep.test_set = test_set;
  rep.pattern = ls.scenario.talk_pattern;
  rep.mode = to_string(model.config().mode);
  rep.sdr_filter_len = sdr_filter_len;

  const nn::Tensor<float> fused = model.fuse(ex.base, info_ptr(ex), false);
  const auto out = model.forward(fused, false);
  const SpectroTensor est_spec = est_to_spectro(out.est_ri, cfg, ls.mixture.num_samples());
  const std::vector<double> est = istft(est_spec, cfg);
  if (ls.scenario.talk_pattern == TalkPattern::kFarEndOnly)
    rep.erle_db = erle_db(ls.mixture.channels.at(0), est);
  else
    rep.sdr_db = projection_sdr_db(ls.near_direct_ref, est, sdr_filter_len);

  if (frozen_doa != nullptr) {
    std::vector<SsdoaExample> one;
    one.push_back(load_ssdoa_example(scenario_dir, cfg));
    const Prf prf = eval_ssdoa_prf(*frozen_doa, one);
    rep.doa_p = prf.precision;
    rep.doa_r = prf.recall;
    rep.doa_f1 = prf.f1;
  }
  return rep;
}

MetricReport evaluate_aec_scenario(IscrnModel<float>& model, SsDoaNet<float>* frozen_doa,
                                   const RenderedScenario& rs, const StftConfig& cfg,
                                   const std::string& test_set, int sdr_filter_len) {
  MetricReport rep;
  rep.test_set = test_set;
  rep.pattern = rs.scenario.talk_pattern;
  rep.mode = to_string(model.config().mode);
  rep.sdr_filter_len = sdr_filter_len;

  const std::vector<double> est = enhance_scenario(model, frozen_doa, rs, cfg);
  if (rs.scenario.talk_pattern == TalkPattern::kFarEndOnly) {
    rep.erle_db = erle_db(rs.render.mixture.channels.at(0), est);
  } else {
    rep.sdr_db = projection_sdr_db(rs.render.near_direct.channels.at(0), est, sdr_filter_len);
  }
  return rep;
}

}  // namespace echolab

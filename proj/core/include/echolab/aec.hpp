#pragma once

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "echolab/dsp.hpp"
#include "echolab/nn/layers.hpp"
#include "echolab/nn/lstm.hpp"
#include "echolab/nn/s4d.hpp"
#include "echolab/rng.hpp"
#include "echolab/scenario.hpp"

namespace echolab {

// How predicted directional information enters the AEC network:
//   kNone - plain ISCRN, no extra inputs
//   kE    - both planes of the DOA net's last-block embedding (+2 channels)
//   kEt   - only the talker plane of that embedding (+1 channel)
//   kEta  - talker logits -> softmax -> T x 72 -> learnable Linear(72 -> F) (+1)
//   kB    - MVDR beamformer output steered at the talker, RI-packed (+2)
enum class FusionMode { kNone, kE, kEt, kEta, kB };

int fusion_extra_channels(FusionMode mode);
std::string to_string(FusionMode mode);
FusionMode fusion_mode_from_string(const std::string& s);

struct IscrnConfig {
  int num_mics = 6;
  int channels = 24;      // width of every in-place conv block
  int f_bins = 161;
  int lstm_hidden = 48;   // T-chLSTM core
  int s4d_state = 16;
  FusionMode mode = FusionMode::kNone;
  bool mask_output = true;  // tanh-bounded complex ratio mask; false -> direct RI
  std::uint64_t seed = 0x15c21;

  int base_channels() const { return 2 * num_mics + 2; }
  int in_channels() const { return base_channels() + fusion_extra_channels(mode); }
};

// Directional information handed to the fusion step. Only the member the
// active mode needs has to be populated.
template <typename T>
struct DirectionInfo {
  nn::Tensor<T> tap_e;     // 2 x T x F, last CR block embedding (kE)
  nn::Tensor<T> tap_t;     // T x F, talker plane of that embedding (kEt)
  nn::Tensor<T> t_logits;  // T x 36 x 2, talker head logits (kEta)
  nn::Tensor<T> beam_ri;   // 2 x T x F, beamformed RI planes (kB)
};

// In-place unit: causal Conv2D 3x3 -> LayerNorm -> ELU, frequency-preserving.
template <typename T>
struct ConvBlock {
  nn::Conv2dCausal<T> conv;
  nn::LayerNormCF<T> ln;
  nn::Elu<T> elu;

  ConvBlock() = default;
  ConvBlock(const std::string& name, int cin, int cout, int f_bins, Pcg32& rng)
      : conv(name + ".conv", cin, cout, rng), ln(name + ".ln", cout, f_bins) {}

  nn::Tensor<T> forward(const nn::Tensor<T>& x, bool train) {
    return elu.forward(ln.forward(conv.forward(x, train), train), train);
  }
  nn::Tensor<T> backward(const nn::Tensor<T>& dy) {
    return conv.backward(ln.backward(elu.backward(dy)));
  }
  nn::Tensor<T> step(const nn::Tensor<T>& frame) {
    return elu.step(ln.step(conv.step(frame)));
  }
  void reset_stream() { conv.reset_stream(); }
  void collect(std::vector<nn::Param<T>*>& out) {
    for (auto* p : conv.params()) out.push_back(p);
    for (auto* p : ln.params()) out.push_back(p);
  }
  long param_count() const { return conv.param_count() + ln.param_count(); }
  long macs_per_frame(int f) const { return conv.macs_per_frame(f) + ln.macs_per_frame(f); }
};

// ISCRN-style mask estimator: six in-place conv blocks around a T-chLSTM core
// and an S4D module, head Conv2D(C -> 2). Every activation keeps F bins and
// the whole stack is strictly causal in T. The estimate is formed by applying
// a tanh-bounded complex ratio mask to the reference microphone (channels 0/1
// of the fused input), or by reading the head output directly as RI planes.
template <typename T>
class IscrnModel {
 public:
  struct Output {
    nn::Tensor<T> mask;    // 2 x T x F head output after bounding (or raw RI)
    nn::Tensor<T> est_ri;  // 2 x T x F estimated near-end direct spectrum
  };

  explicit IscrnModel(const IscrnConfig& cfg = {}) : cfg_(cfg) {
    require(cfg.channels > 0 && cfg.f_bins > 0 && cfg.lstm_hidden > 0 && cfg.s4d_state > 0,
            "iscrn: bad config");
    Pcg32 rng(mix_seed(cfg.seed, 0xa3c));
    const int c = cfg.channels, f = cfg.f_bins;
    blocks_.reserve(6);
    blocks_.emplace_back("iscrn.block1", cfg.in_channels(), c, f, rng);
    blocks_.emplace_back("iscrn.block2", c, c, f, rng);
    blocks_.emplace_back("iscrn.block3", c, c, f, rng);
    blocks_.emplace_back("iscrn.block4", c, c, f, rng);
    blocks_.emplace_back("iscrn.block5", c, c, f, rng);
    blocks_.emplace_back("iscrn.block6", c, c, f, rng);
    lstm_ = nn::TChLstm<T>("iscrn.lstm", c, cfg.lstm_hidden, rng);
    lstm_proj_ = nn::LinearChannel<T>("iscrn.lstm_proj", cfg.lstm_hidden, c, rng);
    s4d_ = nn::S4dBlock<T>("iscrn.s4d", c, cfg.s4d_state, rng);
    head_ = nn::Conv2dCausal<T>("iscrn.head", c, 2, rng);
    eta_lin_ = nn::LinearLastAxis<T>("iscrn.eta", 2 * kNumDirections, f, rng);
  }

  // Concatenates the directional extra channels onto the (2Q+2)-channel
  // mic+far-end RI tensor. For kEta this runs the learnable linear map; in
  // train mode its activations are cached for backward().
  nn::Tensor<T> fuse(const nn::Tensor<T>& mic_far_ri, const DirectionInfo<T>* info,
                     bool train) {
    const int base = cfg_.base_channels();
    require(mic_far_ri.rank() == 3 && mic_far_ri.dim(0) == base &&
                mic_far_ri.dim(2) == cfg_.f_bins,
            "iscrn fuse: bad base tensor " + mic_far_ri.shape_str());
    const int tlen = mic_far_ri.dim(1), f = cfg_.f_bins;
    if (cfg_.mode == FusionMode::kNone) {
      if (info != nullptr && ++ignored_info_ == 1)
        std::clog << "iscrn: directional info supplied in mode none, ignored\n";
      return mic_far_ri;
    }
    nn::Tensor<T> fused({cfg_.in_channels(), tlen, f});
    std::copy(mic_far_ri.raw().begin(), mic_far_ri.raw().end(), fused.raw().begin());
    require(info != nullptr, "iscrn fuse: mode " + to_string(cfg_.mode) +
                                 " needs directional info");
    auto copy_plane = [&](const nn::Tensor<T>& src, int src_plane, int dst_plane) {
      for (int t = 0; t < tlen; ++t)
        for (int j = 0; j < f; ++j)
          fused.at(dst_plane, t, j) =
              src.rank() == 3 ? src.at(src_plane, t, j) : src.at(t, j);
    };
    switch (cfg_.mode) {
      case FusionMode::kE:
        require(info->tap_e.rank() == 3 && info->tap_e.dim(0) == 2 &&
                    info->tap_e.dim(1) == tlen && info->tap_e.dim(2) == f,
                "iscrn fuse: tap_e shape " + info->tap_e.shape_str());
        copy_plane(info->tap_e, 0, base);
        copy_plane(info->tap_e, 1, base + 1);
        break;
      case FusionMode::kEt:
        require(info->tap_t.rank() == 2 && info->tap_t.dim(0) == tlen &&
                    info->tap_t.dim(1) == f,
                "iscrn fuse: tap_t shape " + info->tap_t.shape_str());
        copy_plane(info->tap_t, 0, base);
        break;
      case FusionMode::kEta: {
        require(info->t_logits.rank() == 3 && info->t_logits.dim(0) == tlen &&
                    info->t_logits.dim(1) == kNumDirections && info->t_logits.dim(2) == 2,
                "iscrn fuse: t_logits shape " + info->t_logits.shape_str());
        const nn::Tensor<T> probs = nn::softmax_lastaxis(info->t_logits);
        nn::Tensor<T> flat({tlen, 2 * kNumDirections});
        flat.raw() = probs.raw();
        copy_plane(eta_lin_.forward(flat, train), 0, base);
        break;
      }
      case FusionMode::kB:
        require(info->beam_ri.rank() == 3 && info->beam_ri.dim(0) == 2 &&
                    info->beam_ri.dim(1) == tlen && info->beam_ri.dim(2) == f,
                "iscrn fuse: beam_ri shape " + info->beam_ri.shape_str());
        copy_plane(info->beam_ri, 0, base);
        copy_plane(info->beam_ri, 1, base + 1);
        break;
      case FusionMode::kNone:
        break;
    }
    return fused;
  }

  // Per-frame fusion for streaming: base frame is (2Q+2) x F, extras likewise.
  nn::Tensor<T> fuse_frame(const nn::Tensor<T>& mic_far_frame,
                           const DirectionInfo<T>* info) {
    const int base = cfg_.base_channels(), f = cfg_.f_bins;
    require(mic_far_frame.rank() == 2 && mic_far_frame.dim(0) == base &&
                mic_far_frame.dim(1) == f,
            "iscrn fuse_frame: bad base frame");
    if (cfg_.mode == FusionMode::kNone) return mic_far_frame;
    require(info != nullptr, "iscrn fuse_frame: missing directional info");
    nn::Tensor<T> fused({cfg_.in_channels(), f});
    std::copy(mic_far_frame.raw().begin(), mic_far_frame.raw().end(), fused.raw().begin());
    auto copy_row = [&](const nn::Tensor<T>& src, int src_plane, int dst_plane) {
      for (int j = 0; j < f; ++j)
        fused.at(dst_plane, j) = src.rank() == 2 ? src.at(src_plane, j) : src.at(j);
    };
    switch (cfg_.mode) {
      case FusionMode::kE:
        require(info->tap_e.rank() == 2 && info->tap_e.dim(0) == 2 && info->tap_e.dim(1) == f,
                "iscrn fuse_frame: tap_e shape");
        copy_row(info->tap_e, 0, base);
        copy_row(info->tap_e, 1, base + 1);
        break;
      case FusionMode::kEt:
        require(info->tap_t.rank() == 1 && info->tap_t.dim(0) == f,
                "iscrn fuse_frame: tap_t shape");
        copy_row(info->tap_t, 0, base);
        break;
      case FusionMode::kEta: {
        require(info->t_logits.rank() == 2 && info->t_logits.dim(0) == kNumDirections &&
                    info->t_logits.dim(1) == 2,
                "iscrn fuse_frame: t_logits shape");
        const nn::Tensor<T> probs = nn::softmax_lastaxis(info->t_logits);
        nn::Tensor<T> flat({2 * kNumDirections});
        flat.raw() = probs.raw();
        copy_row(eta_lin_.step(flat), 0, base);
        break;
      }
      case FusionMode::kB:
        require(info->beam_ri.rank() == 2 && info->beam_ri.dim(0) == 2 &&
                    info->beam_ri.dim(1) == f,
                "iscrn fuse_frame: beam_ri shape");
        copy_row(info->beam_ri, 0, base);
        copy_row(info->beam_ri, 1, base + 1);
        break;
      case FusionMode::kNone:
        break;
    }
    return fused;
  }

  Output forward(const nn::Tensor<T>& fused, bool train) {
    require(fused.rank() == 3 && fused.dim(0) == cfg_.in_channels() &&
                fused.dim(2) == cfg_.f_bins,
            "iscrn: bad input shape " + fused.shape_str());
    nn::Tensor<T> y = blocks_[0].forward(fused, train);
    y = blocks_[1].forward(y, train);
    y = blocks_[2].forward(y, train);
    y = lstm_proj_.forward(lstm_.forward(y, train), train);
    y = blocks_[3].forward(y, train);
    y = s4d_.forward(y, train);
    y = blocks_[4].forward(y, train);
    y = blocks_[5].forward(y, train);
    nn::Tensor<T> m = head_.forward(y, train);

    Output out;
    if (!cfg_.mask_output) {
      out.mask = m;
      out.est_ri = m;
      return out;
    }
    out.mask = nn::tanh_act(m);
    const int tlen = fused.dim(1), f = cfg_.f_bins;
    out.est_ri = nn::Tensor<T>({2, tlen, f});
    for (int t = 0; t < tlen; ++t)
      for (int j = 0; j < f; ++j) {
        const T mr = out.mask.at(0, t, j), mi = out.mask.at(1, t, j);
        const T yr = fused.at(0, t, j), yi = fused.at(1, t, j);
        out.est_ri.at(0, t, j) = mr * yr - mi * yi;
        out.est_ri.at(1, t, j) = mr * yi + mi * yr;
      }
    if (train) {
      mask_cache_ = out.mask;
      ref_cache_ = nn::Tensor<T>({2, tlen, f});
      for (int t = 0; t < tlen; ++t)
        for (int j = 0; j < f; ++j) {
          ref_cache_.at(0, t, j) = fused.at(0, t, j);
          ref_cache_.at(1, t, j) = fused.at(1, t, j);
        }
    }
    return out;
  }

  // d_est: gradient w.r.t. est_ri. Accumulates parameter gradients, including
  // the kEta linear map (its gradient arrives through the fused input plane).
  void backward(const nn::Tensor<T>& d_est) {
    nn::Tensor<T> dm;
    if (!cfg_.mask_output) {
      dm = d_est;
    } else {
      const int tlen = d_est.dim(1), f = d_est.dim(2);
      nn::Tensor<T> db({2, tlen, f});
      for (int t = 0; t < tlen; ++t)
        for (int j = 0; j < f; ++j) {
          const T dre = d_est.at(0, t, j), dim = d_est.at(1, t, j);
          const T yr = ref_cache_.at(0, t, j), yi = ref_cache_.at(1, t, j);
          db.at(0, t, j) = dre * yr + dim * yi;
          db.at(1, t, j) = dim * yr - dre * yi;
        }
      dm = nn::tanh_backward(mask_cache_, db);
    }
    nn::Tensor<T> dy = head_.backward(dm);
    dy = blocks_[5].backward(dy);
    dy = blocks_[4].backward(dy);
    dy = s4d_.backward(dy);
    dy = blocks_[3].backward(dy);
    dy = lstm_.backward(lstm_proj_.backward(dy));
    dy = blocks_[2].backward(dy);
    dy = blocks_[1].backward(dy);
    const nn::Tensor<T> dx = blocks_[0].backward(dy);
    if (cfg_.mode == FusionMode::kEta) {
      const int base = cfg_.base_channels();
      const int tlen = dx.dim(1), f = dx.dim(2);
      nn::Tensor<T> dplane({tlen, f});
      for (int t = 0; t < tlen; ++t)
        for (int j = 0; j < f; ++j) dplane.at(t, j) = dx.at(base, t, j);
      eta_lin_.backward(dplane);  // upstream of the frozen DOA net: discard dx
    }
  }

  // One fused frame (C_in x F) -> {mask row, estimate row} (each 2 x F).
  Output step(const nn::Tensor<T>& frame) {
    require(frame.rank() == 2 && frame.dim(0) == cfg_.in_channels() &&
                frame.dim(1) == cfg_.f_bins,
            "iscrn step: bad frame shape");
    nn::Tensor<T> y = blocks_[0].step(frame);
    y = blocks_[1].step(y);
    y = blocks_[2].step(y);
    y = lstm_proj_.step(lstm_.step(y));
    y = blocks_[3].step(y);
    y = s4d_.step(y);
    y = blocks_[4].step(y);
    y = blocks_[5].step(y);
    nn::Tensor<T> m = head_.step(y);

    Output out;
    if (!cfg_.mask_output) {
      out.mask = m;
      out.est_ri = m;
      return out;
    }
    const int f = cfg_.f_bins;
    out.mask = nn::tanh_act(m);
    out.est_ri = nn::Tensor<T>({2, f});
    for (int j = 0; j < f; ++j) {
      const T mr = out.mask.at(0, j), mi = out.mask.at(1, j);
      const T yr = frame.at(0, j), yi = frame.at(1, j);
      out.est_ri.at(0, j) = mr * yr - mi * yi;
      out.est_ri.at(1, j) = mr * yi + mi * yr;
    }
    return out;
  }

  void reset_stream() {
    for (auto& b : blocks_) b.reset_stream();
    lstm_.reset_stream();
    s4d_.reset_stream();
    head_.reset_stream();
  }

  std::vector<nn::Param<T>*> params() {
    std::vector<nn::Param<T>*> out;
    for (auto& b : blocks_) b.collect(out);
    for (auto* p : lstm_.params()) out.push_back(p);
    for (auto* p : lstm_proj_.params()) out.push_back(p);
    for (auto* p : s4d_.params()) out.push_back(p);
    for (auto* p : head_.params()) out.push_back(p);
    if (cfg_.mode == FusionMode::kEta)
      for (auto* p : eta_lin_.params()) out.push_back(p);
    return out;
  }

  long param_count() const {
    long n = lstm_.param_count() + lstm_proj_.param_count() + s4d_.param_count() +
             head_.param_count();
    for (const auto& b : blocks_) n += b.param_count();
    if (cfg_.mode == FusionMode::kEta) n += eta_lin_.param_count();
    return n;
  }
  long macs_per_frame() const {
    const int f = cfg_.f_bins;
    long n = lstm_.macs_per_frame(f) + lstm_proj_.macs_per_frame(f) + s4d_.macs_per_frame(f) +
             head_.macs_per_frame(f);
    for (const auto& b : blocks_) n += b.macs_per_frame(f);
    if (cfg_.mode == FusionMode::kEta) n += eta_lin_.macs_per_frame(f);
    return n;
  }
  long s4d_clamp_warnings() const { return s4d_.clamp_warnings(); }
  const IscrnConfig& config() const { return cfg_; }
  long ignored_info_count() const { return ignored_info_; }

 private:
  IscrnConfig cfg_;
  std::vector<ConvBlock<T>> blocks_;
  nn::TChLstm<T> lstm_;
  nn::LinearChannel<T> lstm_proj_;
  nn::S4dBlock<T> s4d_;
  nn::Conv2dCausal<T> head_;
  nn::LinearLastAxis<T> eta_lin_;
  nn::Tensor<T> mask_cache_, ref_cache_;
  long ignored_info_ = 0;
};

// Builds the model, asserts the fusion channel accounting, and logs one
// parameter/MAC report line.
IscrnModel<float> build_iscrn(const IscrnConfig& cfg);

// Convenience batch entry points matching the module surface.
IscrnModel<float>::Output aec_forward(IscrnModel<float>& model, const nn::Tensor<float>& fused);

// Estimated RI planes (2 x T x F) -> mono SpectroTensor for istft.
SpectroTensor est_to_spectro(const nn::Tensor<float>& est_ri, const StftConfig& config,
                             std::size_t source_samples);

}  // namespace echolab

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "echolab/nn/layers.hpp"
#include "echolab/nn/lstm.hpp"
#include "echolab/rng.hpp"
#include "echolab/scenario.hpp"

namespace echolab {

struct SsDoaConfig {
  int num_mics = 6;
  int channels = 20;  // C
  int f_bins = 161;
  double dropout = 0.2;
  std::uint64_t seed = 0x55d0a11;

  int in_channels() const { return 2 * num_mics + 2; }
};

// One convolutional-recurrent block: Conv2D -> LN -> ELU -> T-chLSTM -> Linear.
template <typename T>
struct CrBlock {
  nn::Conv2dCausal<T> conv;
  nn::LayerNormCF<T> ln;
  nn::Elu<T> elu;
  nn::TChLstm<T> lstm;
  nn::LinearChannel<T> lin;

  CrBlock() = default;
  CrBlock(const std::string& name, int cin, int conv_out, int lstm_hidden, int out, int f_bins,
          Pcg32& rng)
      : conv(name + ".conv", cin, conv_out, rng),
        ln(name + ".ln", conv_out, f_bins),
        lstm(name + ".lstm", conv_out, lstm_hidden, rng),
        lin(name + ".lin", lstm_hidden, out, rng) {}

  nn::Tensor<T> forward(const nn::Tensor<T>& x, bool train) {
    return lin.forward(lstm.forward(elu.forward(ln.forward(conv.forward(x, train), train), train),
                                    train),
                       train);
  }
  nn::Tensor<T> backward(const nn::Tensor<T>& dy) {
    return conv.backward(ln.backward(elu.backward(lstm.backward(lin.backward(dy)))));
  }
  nn::Tensor<T> step(const nn::Tensor<T>& frame) {
    return lin.step(lstm.step(elu.step(ln.step(conv.step(frame)))));
  }
  void reset_stream() {
    conv.reset_stream();
    lstm.reset_stream();
  }
  void collect(std::vector<nn::Param<T>*>& out) {
    for (auto* p : conv.params()) out.push_back(p);
    for (auto* p : ln.params()) out.push_back(p);
    for (auto* p : lstm.params()) out.push_back(p);
    for (auto* p : lin.params()) out.push_back(p);
  }
  long param_count() const {
    return conv.param_count() + ln.param_count() + lstm.param_count() + lin.param_count();
  }
  long macs_per_frame(int f) const {
    return conv.macs_per_frame(f) + ln.macs_per_frame(f) + lstm.macs_per_frame(f) +
           lin.macs_per_frame(f);
  }
};

// SS-DOA classifier: 4 CR blocks squeeze (2Q+2) x T x F down to 2 x T x F,
// then each plane feeds its own Linear(F -> 72) head read as 36 x 2 logits.
template <typename T>
class SsDoaNet {
 public:
  struct Output {
    nn::Tensor<T> ls_logits;  // T x 36 x 2
    nn::Tensor<T> t_logits;   // T x 36 x 2
    nn::Tensor<T> tap_e;      // 2 x T x F, last CR block output
    nn::Tensor<T> tap_t;      // T x F, talker plane
  };
  struct FrameOutput {
    nn::Tensor<T> ls_logits;  // 36 x 2
    nn::Tensor<T> t_logits;   // 36 x 2
    nn::Tensor<T> tap_e;      // 2 x F
    nn::Tensor<T> tap_t;      // F
  };

  explicit SsDoaNet(const SsDoaConfig& cfg = {})
      : cfg_(cfg), drop_rng_(mix_seed(cfg.seed, 0xd70b)) {
    Pcg32 rng(mix_seed(cfg.seed, 0x1217));
    const int c = cfg.channels, h = 2 * cfg.channels, f = cfg.f_bins;
    blocks_.reserve(4);
    blocks_.emplace_back("ssdoa.block1", cfg.in_channels(), c, h, c, f, rng);
    blocks_.emplace_back("ssdoa.block2", c, c, h, c, f, rng);
    blocks_.emplace_back("ssdoa.block3", c, c, h, c, f, rng);
    blocks_.emplace_back("ssdoa.block4", c, 2, h, 2, f, rng);
    head_ls_ = nn::LinearLastAxis<T>("ssdoa.head_ls", f, 2 * kNumDirections, rng);
    head_t_ = nn::LinearLastAxis<T>("ssdoa.head_t", f, 2 * kNumDirections, rng);
    drop_ls_ = nn::Dropout<T>(cfg.dropout);
    drop_t_ = nn::Dropout<T>(cfg.dropout);
  }

  Output forward(const nn::Tensor<T>& x, bool train) {
    require(x.rank() == 3 && x.dim(0) == cfg_.in_channels() && x.dim(2) == cfg_.f_bins,
            "ssdoa: bad input shape " + x.shape_str());
    nn::Tensor<T> y = x;
    for (auto& b : blocks_) y = b.forward(y, train);
    const int tlen = y.dim(1), f = y.dim(2);

    Output out;
    out.tap_e = y;
    nn::Tensor<T> plane_ls({tlen, f}), plane_t({tlen, f});
    for (int t = 0; t < tlen; ++t)
      for (int j = 0; j < f; ++j) {
        plane_ls.at(t, j) = y.at(0, t, j);
        plane_t.at(t, j) = y.at(1, t, j);
      }
    out.tap_t = plane_t;

    out.ls_logits = head_pass(head_ls_, drop_ls_, plane_ls, train);
    out.t_logits = head_pass(head_t_, drop_t_, plane_t, train);
    return out;
  }

  // Accumulates parameter gradients from the two head losses.
  void backward(const nn::Tensor<T>& d_ls, const nn::Tensor<T>& d_t) {
    const nn::Tensor<T> dp_ls = head_back(head_ls_, drop_ls_, d_ls);
    const nn::Tensor<T> dp_t = head_back(head_t_, drop_t_, d_t);
    const int tlen = dp_ls.dim(0), f = dp_ls.dim(1);
    nn::Tensor<T> dy({2, tlen, f});
    for (int t = 0; t < tlen; ++t)
      for (int j = 0; j < f; ++j) {
        dy.at(0, t, j) = dp_ls.at(t, j);
        dy.at(1, t, j) = dp_t.at(t, j);
      }
    for (int b = 3; b >= 0; --b) dy = blocks_[static_cast<std::size_t>(b)].backward(dy);
  }

  FrameOutput step(const nn::Tensor<T>& frame) {
    require(frame.rank() == 2 && frame.dim(0) == cfg_.in_channels() &&
                frame.dim(1) == cfg_.f_bins,
            "ssdoa step: bad frame shape");
    nn::Tensor<T> y = frame;
    for (auto& b : blocks_) y = b.step(y);
    const int f = y.dim(1);
    FrameOutput out;
    out.tap_e = y;
    nn::Tensor<T> row_ls({f}), row_t({f});
    for (int j = 0; j < f; ++j) {
      row_ls.at(j) = y.at(0, j);
      row_t.at(j) = y.at(1, j);
    }
    out.tap_t = row_t;
    out.ls_logits = reshape_head(head_ls_.step(row_ls));
    out.t_logits = reshape_head(head_t_.step(row_t));
    return out;
  }

  void reset_stream() {
    for (auto& b : blocks_) b.reset_stream();
  }

  std::vector<nn::Param<T>*> params() {
    std::vector<nn::Param<T>*> out;
    for (auto& b : blocks_) b.collect(out);
    for (auto* p : head_ls_.params()) out.push_back(p);
    for (auto* p : head_t_.params()) out.push_back(p);
    return out;
  }

  long param_count() const {
    long n = head_ls_.param_count() + head_t_.param_count();
    for (const auto& b : blocks_) n += b.param_count();
    return n;
  }
  long macs_per_frame() const {
    long n = head_ls_.macs_per_frame(cfg_.f_bins) + head_t_.macs_per_frame(cfg_.f_bins);
    for (const auto& b : blocks_) n += b.macs_per_frame(cfg_.f_bins);
    return n;
  }
  const SsDoaConfig& config() const { return cfg_; }

  // Deterministic dropout masks for a given epoch; makes resumed runs replay
  // the exact same training noise.
  void reseed_dropout(std::uint64_t seed) { drop_rng_ = Pcg32(seed); }

 private:
  nn::Tensor<T> head_pass(nn::LinearLastAxis<T>& head, nn::Dropout<T>& drop,
                          const nn::Tensor<T>& plane, bool train) {
    nn::Tensor<T> z = drop.forward(head.forward(plane, train), train, drop_rng_);
    nn::Tensor<T> logits({plane.dim(0), kNumDirections, 2});
    logits.raw() = z.raw();
    return logits;
  }
  nn::Tensor<T> head_back(nn::LinearLastAxis<T>& head, nn::Dropout<T>& drop,
                          const nn::Tensor<T>& d_logits) {
    nn::Tensor<T> dz({d_logits.dim(0), 2 * kNumDirections});
    dz.raw() = d_logits.raw();
    return head.backward(drop.backward(dz));
  }
  static nn::Tensor<T> reshape_head(const nn::Tensor<T>& row) {
    nn::Tensor<T> logits({kNumDirections, 2});
    logits.raw() = row.raw();
    return logits;
  }

  SsDoaConfig cfg_;
  std::vector<CrBlock<T>> blocks_;
  nn::LinearLastAxis<T> head_ls_, head_t_;
  nn::Dropout<T> drop_ls_, drop_t_;
  Pcg32 drop_rng_;
};

// Per-frame streaming result with decoded direction sets.
struct SsDoaFrameResult {
  int index = 0;
  std::vector<int> loudspeakers;     // at most 2, distinct
  std::vector<int> talker;           // at most 1
  std::vector<float> ls_prob;        // 36 p(present)
  std::vector<float> talker_prob;    // 36
  nn::Tensor<float> tap_e;           // 2 x F
  nn::Tensor<float> tap_t;           // F
};

// Frame-online wrapper: frames must arrive with consecutive indices.
class SsDoaStream {
 public:
  explicit SsDoaStream(SsDoaNet<float>& model, double threshold = 0.5)
      : model_(model), threshold_(threshold) {
    model_.reset_stream();
  }
  SsDoaFrameResult push(int frame_index, const nn::Tensor<float>& ri_frame);
  void reset() {
    model_.reset_stream();
    expected_ = 0;
  }

 private:
  SsDoaNet<float>& model_;
  double threshold_;
  int expected_ = 0;
};

// p(present) per direction from a 36 x 2 (or T x 36 x 2) logits tensor.
std::vector<float> present_probabilities(const nn::Tensor<float>& logits_row);

// Batch convenience: run the stream over all frames of a packed RI tensor.
std::vector<SsDoaFrameResult> stream_infer(SsDoaNet<float>& model,
                                           const nn::Tensor<float>& ri_input,
                                           double threshold = 0.5);

}  // namespace echolab

#include "echolab/ssdoa.hpp"

#include <cmath>

#include "echolab/labels.hpp"

namespace echolab {

std::vector<float> present_probabilities(const nn::Tensor<float>& logits) {
  require(logits.numel() % 2 == 0, "present_probabilities: odd logits size");
  const std::size_t pairs = logits.numel() / 2;
  std::vector<float> p(pairs);
  for (std::size_t i = 0; i < pairs; ++i) {
    const double margin = static_cast<double>(logits[2 * i + 1]) - logits[2 * i];
    p[i] = static_cast<float>(1.0 / (1.0 + std::exp(margin)));
  }
  return p;
}

SsDoaFrameResult SsDoaStream::push(int frame_index, const nn::Tensor<float>& ri_frame) {
  if (frame_index != expected_)
    throw ProtocolError("ssdoa stream: expected frame " + std::to_string(expected_) + ", got " +
                        std::to_string(frame_index));
  ++expected_;

  SsDoaNet<float>::FrameOutput out = model_.step(ri_frame);
  SsDoaFrameResult res;
  res.index = frame_index;
  res.tap_e = std::move(out.tap_e);
  res.tap_t = std::move(out.tap_t);
  res.ls_prob = present_probabilities(out.ls_logits);
  res.talker_prob = present_probabilities(out.t_logits);

  nn::Tensor<float> ls_batch({1, kNumDirections, 2}), t_batch({1, kNumDirections, 2});
  ls_batch.raw() = out.ls_logits.raw();
  t_batch.raw() = out.t_logits.raw();
  res.loudspeakers = decode_predictions(ls_batch, 2, threshold_).front();
  res.talker = decode_predictions(t_batch, 1, threshold_).front();
  return res;
}

std::vector<SsDoaFrameResult> stream_infer(SsDoaNet<float>& model,
                                           const nn::Tensor<float>& ri_input, double threshold) {
  require(ri_input.rank() == 3, "stream_infer: expected C x T x F input");
  const int c = ri_input.dim(0), tlen = ri_input.dim(1), f = ri_input.dim(2);
  SsDoaStream stream(model, threshold);
  std::vector<SsDoaFrameResult> results;
  results.reserve(static_cast<std::size_t>(tlen));
  nn::Tensor<float> frame({c, f});
  for (int t = 0; t < tlen; ++t) {
    for (int ch = 0; ch < c; ++ch)
      for (int j = 0; j < f; ++j) frame.at(ch, j) = ri_input.at(ch, t, j);
    results.push_back(stream.push(t, frame));
  }
  return results;
}

}  // namespace echolab

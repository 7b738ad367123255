#include "echolab/aec.hpp"

#include "echolab/common.hpp"

namespace echolab {

int fusion_extra_channels(FusionMode mode) {
  switch (mode) {
    case FusionMode::kNone: return 0;
    case FusionMode::kE: return 2;
    case FusionMode::kEt: return 1;
    case FusionMode::kEta: return 1;
    case FusionMode::kB: return 2;
  }
  throw DomainError("unknown fusion mode");
}

std::string to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kNone: return "none";
    case FusionMode::kE: return "E";
    case FusionMode::kEt: return "ET";
    case FusionMode::kEta: return "ETA";
    case FusionMode::kB: return "B";
  }
  throw DomainError("unknown fusion mode");
}

FusionMode fusion_mode_from_string(const std::string& s) {
  if (s == "none") return FusionMode::kNone;
  if (s == "E") return FusionMode::kE;
  if (s == "ET") return FusionMode::kEt;
  if (s == "ETA") return FusionMode::kEta;
  if (s == "B") return FusionMode::kB;
  throw ConfigError("unknown fusion mode: " + s);
}

IscrnModel<float> build_iscrn(const IscrnConfig& cfg) {
  require(cfg.in_channels() ==
              2 * cfg.num_mics + 2 + fusion_extra_channels(cfg.mode),
          "iscrn: fusion channel accounting mismatch");
  IscrnModel<float> model(cfg);
  std::clog << "iscrn[" << to_string(cfg.mode) << "]: params=" << model.param_count()
            << " macs/frame=" << model.macs_per_frame() << " (~"
            << model.macs_per_frame() * 100.0 / 1e9 << " GMAC/s)\n";
  return model;
}

IscrnModel<float>::Output aec_forward(IscrnModel<float>& model,
                                      const nn::Tensor<float>& fused) {
  return model.forward(fused, false);
}

SpectroTensor est_to_spectro(const nn::Tensor<float>& est_ri, const StftConfig& config,
                             std::size_t source_samples) {
  require(est_ri.rank() == 3 && est_ri.dim(0) == 2, "est_to_spectro: need 2 x T x F");
  SpectroTensor out = ri_unpack(est_ri, config);
  out.source_samples = source_samples;
  return out;
}

}  // namespace echolab

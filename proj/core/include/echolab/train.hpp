#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "echolab/aec.hpp"
#include "echolab/labels.hpp"
#include "echolab/metrics.hpp"
#include "echolab/nn/checkpoint.hpp"
#include "echolab/nn/losses.hpp"
#include "echolab/nn/optim.hpp"
#include "echolab/ssdoa.hpp"
#include "echolab/synth.hpp"

namespace echolab {

// Featurized example for the DOA stage.
struct SsdoaExample {
  std::string id;
  nn::Tensor<float> input;      // (2Q+2) x T x F
  nn::Tensor<float> ls_target;  // T x 36 x 2
  nn::Tensor<float> t_target;   // T x 36 x 2
  DoaLabelTrack labels;
};

// Featurized example for the AEC stage. Directional info is attached after
// the DOA stage is frozen (or from the MVDR baseline).
struct AecExample {
  std::string id;
  Scenario scenario;
  nn::Tensor<float> base;    // (2Q+2) x T x F
  nn::Tensor<float> target;  // 2 x T x F, reference-mic near-end direct
  SpectroTensor mix_spec;    // kept for MVDR steering (mode B)
  DirectionInfo<float> info;
  bool has_info = false;
};

SsdoaExample make_ssdoa_example(const RenderedScenario& rs, const StftConfig& cfg);
AecExample make_aec_example(const RenderedScenario& rs, const StftConfig& cfg);

// Same examples assembled from a synthesized scenario directory
// (y.wav / x.wav / s_d.wav / labels.bin / scenario.json).
SsdoaExample load_ssdoa_example(const std::string& scenario_dir, const StftConfig& cfg);
AecExample load_aec_example(const std::string& scenario_dir, const StftConfig& cfg);

// Model reconstruction from a checkpoint's embedded config. Stage mismatch
// (or a foreign meta layout) -> ProtocolError.
SsDoaNet<float> load_ssdoa_model(const std::string& checkpoint_path);
IscrnModel<float> load_iscrn_model(const std::string& checkpoint_path);

// Fills ex.info for the mode: frozen-DOA taps (E/ET/ETA, eval-mode forward)
// or talker-steered MVDR planes (B). kNone clears it.
void attach_direction_info(AecExample& ex, FusionMode mode, SsDoaNet<float>* frozen_doa);

struct TrainOptions {
  int max_epochs = 200;
  double lr = 1e-3;
  int patience = 2;      // epochs without val improvement before halving
  int early_stop = 10;   // stagnant epochs before stopping
  double stop_at_fraction = 0.0;  // >0: stop once eval loss <= fraction * initial
  int start_epoch = 0;            // for resumed runs
  long adam_step0 = 0;            // Adam step counter carried across a resume
  std::uint64_t shuffle_seed = 77;
  std::string log_path;         // JSON-lines, appended
  std::string checkpoint_path;  // written when non-empty
  bool save_moments = true;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double best_val = 0.0;
  int epochs_run = 0;
  bool plateau_stopped = false;
  std::vector<EpochLog> log;
};

// Stage 1: both branch BCEs summed (L_DOA). Per-utterance Adam steps; the
// plateau schedule watches the validation loss (train loss when no val set).
TrainResult train_ssdoa(SsDoaNet<float>& model, std::vector<SsdoaExample>& train_set,
                        const std::vector<SsdoaExample>* val_set, const TrainOptions& opt);

// Stage 2: RI+Mag loss against the reference-mic direct spectrum. The DOA
// stage stays frozen; only the AEC parameters (and the mode-c linear map)
// receive gradient.
TrainResult train_aec(IscrnModel<float>& model, std::vector<AecExample>& train_set,
                      const std::vector<AecExample>* val_set, const TrainOptions& opt);

double eval_ssdoa_loss(SsDoaNet<float>& model, const std::vector<SsdoaExample>& set);
double eval_aec_loss(IscrnModel<float>& model, std::vector<AecExample>& set);

// Frame-level PRF over both branches (loudspeaker decode keeps 2 directions,
// talker 1), counted jointly over (frame, direction) pairs.
Prf eval_ssdoa_prf(SsDoaNet<float>& model, const std::vector<SsdoaExample>& set,
                   double threshold = 0.5);

// Runs the full AEC path on one rendered scenario and fills the metric row:
// ERLE for ST_FE, projection SDR whenever near-end speech is present.
MetricReport evaluate_aec_scenario(IscrnModel<float>& model, SsDoaNet<float>* frozen_doa,
                                   const RenderedScenario& rs, const StftConfig& cfg,
                                   const std::string& test_set, int sdr_filter_len = 32);

// Disk-based variant over a synthesized scenario directory; also fills the
// DOA PRF columns when a frozen DOA model is supplied.
MetricReport evaluate_aec_dir(IscrnModel<float>& model, SsDoaNet<float>* frozen_doa,
                              const std::string& scenario_dir, const StftConfig& cfg,
                              const std::string& test_set, int sdr_filter_len = 32);

// Enhanced time-domain estimate for one scenario (istft of the masked
// reference-mic spectrum).
std::vector<double> enhance_scenario(IscrnModel<float>& model, SsDoaNet<float>* frozen_doa,
                                     const RenderedScenario& rs, const StftConfig& cfg);

}  // namespace echolab

#pragma once

#include <string>

#include "echolab/aec.hpp"
#include "echolab/ssdoa.hpp"
#include "echolab/synth.hpp"
#include "echolab/train.hpp"

namespace echolab {

// One experiment, fully serializable; every run embeds its resolved copy in
// its outputs so artifacts are reproducible from (config, seed) alone.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string data_dir = "dataset";
  std::string run_dir = "runs";
  SynthConfig synth;
  SsDoaConfig ssdoa;
  IscrnConfig iscrn;
  TrainOptions train;
};

std::string experiment_to_json(const ExperimentConfig& cfg);

// Parses a (possibly partial) JSON document on top of `base`: absent keys
// keep their base values, so CLI flags can still override afterwards.
ExperimentConfig experiment_from_json(const std::string& text,
                                      const ExperimentConfig& base = {});

ExperimentConfig load_experiment_config(const std::string& path,
                                        const ExperimentConfig& base = {});
void save_experiment_config(const std::string& path, const ExperimentConfig& cfg);

}  // namespace echolab

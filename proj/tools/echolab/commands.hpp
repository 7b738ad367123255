#pragma once

#include <string>
#include <vector>

#include "echolab/config.hpp"

namespace echolab::cli {

struct SynthArgs {
  ExperimentConfig cfg;
};

struct TrainArgs {
  ExperimentConfig cfg;
  std::string stage;     // "ssdoa" | "aec"
  std::string data;      // manifest path or dataset directory
  std::string ssdoa_ckpt;
  std::string ckpt_out;  // empty: derived from run_dir
  std::string log_path;  // empty: derived from run_dir
  bool resume = false;
  bool use_val = true;
};

struct InferArgs {
  ExperimentConfig cfg;
  std::string stage;  // "ssdoa" | "aec"
  std::string ckpt;
  std::string ssdoa_ckpt;
  std::string scenario_dir;
  std::string mix_wav;  // alternative to scenario_dir (ssdoa / aec without metrics)
  std::string far_wav;
  std::string out;  // ssdoa: jsonl ("" = stdout); aec: enhanced wav
  double threshold = 0.5;
};

struct EvalArgs {
  ExperimentConfig cfg;
  std::vector<std::string> data;   // one manifest per test set
  std::vector<std::string> ckpts;  // one AEC checkpoint per mode
  std::string ssdoa_ckpt;
  std::string split = "test";
  std::string out_dir;  // empty: <run_dir>/eval
  int sdr_filter_len = 32;
  int jobs = 0;  // 0: hardware concurrency
};

struct VerifyArgs {
  std::string manifest;
  int index = 0;
  bool all = false;
};

struct ReportArgs {
  ExperimentConfig cfg;
  std::string ssdoa_ckpt;
  std::string aec_ckpt;
  bool dump_config = false;
};

int cmd_synth(const SynthArgs& args);
int cmd_train(const TrainArgs& args);
int cmd_infer(const InferArgs& args);
int cmd_eval(const EvalArgs& args);
int cmd_verify(const VerifyArgs& args);
int cmd_report(const ReportArgs& args);

// Accepts either a dataset.json path or a directory that contains one.
std::string resolve_manifest(const std::string& data);

}  // namespace echolab::cli

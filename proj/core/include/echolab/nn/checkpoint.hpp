#pragma once

#include <string>
#include <vector>

#include "echolab/nn/layers.hpp"

namespace echolab::nn {

// Single-file checkpoint: magic line, little-endian u32 header length, JSON
// header (schema tag, caller metadata, tensor directory), then raw 32-bit
// float blocks per tensor (value, then Adam m and v when moments are saved).
void save_checkpoint(const std::string& path, const std::vector<Param<float>*>& params,
                     const std::string& meta_json, bool with_moments, long adam_step);

struct CheckpointInfo {
  std::string meta_json;
  bool has_moments = false;
  long adam_step = 0;
};

// Fills the given parameter list in place; names and shapes must match the
// file exactly.
CheckpointInfo load_checkpoint(const std::string& path,
                               const std::vector<Param<float>*>& params);

// Header only, without touching any parameters.
CheckpointInfo peek_checkpoint(const std::string& path);

}  // namespace echolab::nn

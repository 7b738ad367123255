#pragma once

#include <string>

#include "echolab/wave.hpp"

namespace echolab {

enum class WavEncoding { kPcm16, kFloat32 };

// RIFF/WAVE writer. Multichannel data is interleaved on disk.
void write_wav(const std::string& path, const MultichannelWave& wave,
               WavEncoding enc = WavEncoding::kFloat32);

// Reads 16-bit PCM or 32-bit float WAV. Throws DomainError on anything else.
MultichannelWave read_wav(const std::string& path);

}  // namespace echolab

#include "echolab/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace echolab {

std::string to_string(WaveRole role) {
  switch (role) {
    case WaveRole::kMixture: return "mixture";
    case WaveRole::kEcho: return "echo";
    case WaveRole::kNearEnd: return "near_end";
    case WaveRole::kNearEndDirect: return "near_end_direct";
    case WaveRole::kNearEndReverb: return "near_end_reverb";
    case WaveRole::kFarEnd: return "far_end";
    case WaveRole::kFarEndNonlinear: return "far_end_nl";
  }
  return "?";
}

namespace {

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
  b.push_back((v >> 16) & 0xff);
  b.push_back((v >> 24) & 0xff);
}

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
}

void put_tag(std::vector<std::uint8_t>& b, const char* tag) {
  b.insert(b.end(), tag, tag + 4);
}

std::int16_t to_pcm16(double v) {
  double s = v * 32768.0;
  if (s > 32767.0) s = 32767.0;
  if (s < -32768.0) s = -32768.0;
  return static_cast<std::int16_t>(std::lrint(s));
}

}  // namespace

void write_wav(const std::string& path, const MultichannelWave& wave, WavEncoding enc) {
  wave.check_consistent();
  const std::uint16_t channels = static_cast<std::uint16_t>(wave.num_channels());
  require(channels > 0, "write_wav: no channels");
  const std::uint32_t frames = static_cast<std::uint32_t>(wave.num_samples());
  const std::uint16_t bytes_per_sample = enc == WavEncoding::kPcm16 ? 2 : 4;
  const std::uint32_t data_bytes = frames * channels * bytes_per_sample;

  std::vector<std::uint8_t> out;
  out.reserve(data_bytes + 64);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes + (enc == WavEncoding::kFloat32 ? 0 : 0));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, enc == WavEncoding::kPcm16 ? 1 : 3);  // PCM / IEEE float
  put_u16(out, channels);
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate) * channels * bytes_per_sample);
  put_u16(out, static_cast<std::uint16_t>(channels * bytes_per_sample));
  put_u16(out, static_cast<std::uint16_t>(8 * bytes_per_sample));
  put_tag(out, "data");
  put_u32(out, data_bytes);

  for (std::uint32_t n = 0; n < frames; ++n) {
    for (std::uint16_t q = 0; q < channels; ++q) {
      double v = wave.channels[q][n];
      if (enc == WavEncoding::kPcm16) {
        std::int16_t s = to_pcm16(v);
        out.push_back(s & 0xff);
        out.push_back((s >> 8) & 0xff);
      } else {
        float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
      }
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("write_wav: cannot open " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

MultichannelWave read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("read_wav: cannot open " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());
  require(buf.size() >= 44, "read_wav: truncated file " + path);
  auto u32 = [&](std::size_t off) {
    return static_cast<std::uint32_t>(buf[off]) | (buf[off + 1] << 8) | (buf[off + 2] << 16) |
           (static_cast<std::uint32_t>(buf[off + 3]) << 24);
  };
  auto u16 = [&](std::size_t off) {
    return static_cast<std::uint16_t>(buf[off] | (buf[off + 1] << 8));
  };
  require(std::memcmp(buf.data(), "RIFF", 4) == 0 && std::memcmp(buf.data() + 8, "WAVE", 4) == 0,
          "read_wav: not a RIFF/WAVE file: " + path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_off = 0, data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    std::uint32_t chunk_len = u32(pos + 4);
    if (std::memcmp(buf.data() + pos, "fmt ", 4) == 0) {
      format = u16(pos + 8);
      channels = u16(pos + 10);
      rate = u32(pos + 12);
      bits = u16(pos + 22);
    } else if (std::memcmp(buf.data() + pos, "data", 4) == 0) {
      data_off = pos + 8;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);
  }
  require(data_off != 0 && channels > 0, "read_wav: missing chunks in " + path);
  require(data_off + data_len <= buf.size(), "read_wav: data chunk overruns file " + path);

  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  require(pcm16 || f32, "read_wav: unsupported encoding in " + path);

  const std::size_t bytes_per = pcm16 ? 2 : 4;
  const std::size_t frames = data_len / (bytes_per * channels);
  MultichannelWave wave(channels, frames);
  wave.sample_rate = static_cast<int>(rate);
  std::size_t off = data_off;
  for (std::size_t n = 0; n < frames; ++n) {
    for (std::uint16_t q = 0; q < channels; ++q) {
      if (pcm16) {
        std::int16_t s = static_cast<std::int16_t>(buf[off] | (buf[off + 1] << 8));
        wave.channels[q][n] = static_cast<double>(s) / 32768.0;
      } else {
        std::uint32_t bitsv = u32(off);
        float fv;
        std::memcpy(&fv, &bitsv, 4);
        wave.channels[q][n] = fv;
      }
      off += bytes_per;
    }
  }
  return wave;
}

}  // namespace echolab

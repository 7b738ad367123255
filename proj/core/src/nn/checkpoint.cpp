#include "echolab/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace echolab::nn {

namespace {

constexpr char kCkptMagic[] = "echolab-ckpt/1\n";

void write_u32(std::ofstream& f, std::uint32_t v) {
  std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                       static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& f) {
  std::uint8_t b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f) throw ProtocolError("checkpoint truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_floats(std::ofstream& f, const Tensor<float>& t, std::size_t expected) {
  if (t.numel() == expected) {
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(expected * sizeof(float)));
  } else {
    const std::vector<float> zeros(expected, 0.0f);
    f.write(reinterpret_cast<const char*>(zeros.data()),
            static_cast<std::streamsize>(expected * sizeof(float)));
  }
}

void read_floats(std::ifstream& f, Tensor<float>& t) {
  f.read(reinterpret_cast<char*>(t.data()),
         static_cast<std::streamsize>(t.numel() * sizeof(float)));
  if (!f) throw ProtocolError("checkpoint truncated in tensor data");
}

nlohmann::json read_header(std::ifstream& f, const std::string& path) {
  char magic[sizeof(kCkptMagic)] = {};
  f.read(magic, static_cast<std::streamsize>(std::strlen(kCkptMagic)));
  if (!f || std::strncmp(magic, kCkptMagic, std::strlen(kCkptMagic)) != 0)
    throw ProtocolError("not an echolab-ckpt/1 file: " + path);
  const std::uint32_t hlen = read_u32(f);
  std::string header(hlen, '\0');
  f.read(header.data(), static_cast<std::streamsize>(hlen));
  if (!f) throw ProtocolError("checkpoint header truncated");
  nlohmann::json j = nlohmann::json::parse(header);
  if (j.at("schema") != "echolab-ckpt/1") throw ProtocolError("unexpected checkpoint schema");
  return j;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<Param<float>*>& params,
                     const std::string& meta_json, bool with_moments, long adam_step) {
  nlohmann::ordered_json header;
  header["schema"] = "echolab-ckpt/1";
  header["meta"] = meta_json.empty() ? nlohmann::json::object()
                                     : nlohmann::json::parse(meta_json);
  header["with_moments"] = with_moments;
  header["adam_step"] = adam_step;
  nlohmann::ordered_json dir = nlohmann::ordered_json::array();
  for (const Param<float>* p : params) {
    nlohmann::ordered_json e;
    e["name"] = p->name;
    e["shape"] = p->value.shape();
    dir.push_back(e);
  }
  header["tensors"] = dir;
  const std::string htext = header.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("save_checkpoint: cannot open " + path);
  f.write(kCkptMagic, static_cast<std::streamsize>(std::strlen(kCkptMagic)));
  write_u32(f, static_cast<std::uint32_t>(htext.size()));
  f.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const Param<float>* p : params) {
    const std::size_t n = p->value.numel();
    f.write(reinterpret_cast<const char*>(p->value.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    if (with_moments) {
      write_floats(f, p->m, n);
      write_floats(f, p->v, n);
    }
  }
  if (!f) throw ConfigError("save_checkpoint: write failed for " + path);
}

CheckpointInfo load_checkpoint(const std::string& path,
                               const std::vector<Param<float>*>& params) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("load_checkpoint: cannot open " + path);
  const nlohmann::json header = read_header(f, path);

  const auto& dir = header.at("tensors");
  if (dir.size() != params.size())
    throw ProtocolError("checkpoint tensor count mismatch: file has " +
                        std::to_string(dir.size()) + ", model has " +
                        std::to_string(params.size()));
  const bool with_moments = header.at("with_moments");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param<float>* p = params[i];
    const auto& e = dir.at(i);
    if (e.at("name") != p->name)
      throw ProtocolError("checkpoint tensor name mismatch at index " + std::to_string(i) +
                          ": file " + e.at("name").get<std::string>() + ", model " + p->name);
    const std::vector<int> shape = e.at("shape").get<std::vector<int>>();
    if (shape != p->value.shape())
      throw ProtocolError("checkpoint shape mismatch for " + p->name);
    read_floats(f, p->value);
    if (with_moments) {
      if (p->m.numel() != p->value.numel()) {
        p->m = Tensor<float>(p->value.shape());
        p->v = Tensor<float>(p->value.shape());
      }
      read_floats(f, p->m);
      read_floats(f, p->v);
    }
  }

  CheckpointInfo info;
  info.meta_json = header.at("meta").dump();
  info.has_moments = with_moments;
  info.adam_step = header.at("adam_step");
  return info;
}

CheckpointInfo peek_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("peek_checkpoint: cannot open " + path);
  const nlohmann::json header = read_header(f, path);
  CheckpointInfo info;
  info.meta_json = header.at("meta").dump();
  info.has_moments = header.at("with_moments");
  info.adam_step = header.at("adam_step");
  return info;
}

}  // namespace echolab::nn

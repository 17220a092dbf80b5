// "S2LW" weight container: versioned list of named f64 tensors with shapes.
// Round-trips bit-exactly. The model configuration travels in a sidecar
// key=value text file next to the container.
#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "s2lpc/byte_io.hpp"
#include "s2lpc/model.hpp"

namespace s2lpc::io {

constexpr uint32_t kWeightsVersion = 1;

inline std::string serialize_weights(const model::ParamStore& params) {
  using namespace detail;
  std::string out = "S2LW";
  put_u32(out, kWeightsVersion);
  put_u32(out, static_cast<uint32_t>(params.items().size()));
  for (const auto& [name, t] : params.items()) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(out, static_cast<uint32_t>(d));
    for (double x : t.v) put_f64(out, x);
  }
  return out;
}

inline void write_weights(const std::string& path,
                          const model::ParamStore& params) {
  detail::write_file_bytes(path, serialize_weights(params));
}

inline std::vector<std::pair<std::string, nn::Tensor>> parse_weights(
    const std::vector<unsigned char>& bytes, const std::string& origin) {
  using namespace detail;
  require(bytes.size() >= 12, origin + ": truncated weight container");
  require(std::memcmp(bytes.data(), "S2LW", 4) == 0,
          origin + ": not an S2LW weight container");
  require(get_u32(bytes.data() + 4) == kWeightsVersion,
          origin + ": unsupported container version");
  const uint32_t count = get_u32(bytes.data() + 8);
  size_t pos = 12;
  auto need = [&](size_t n) {
    require(pos + n <= bytes.size(), origin + ": truncated weight container");
  };

  std::vector<std::pair<std::string, nn::Tensor>> items;
  items.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    need(4);
    const uint32_t name_len = get_u32(bytes.data() + pos);
    pos += 4;
    need(name_len);
    std::string name(reinterpret_cast<const char*>(bytes.data() + pos),
                     name_len);
    pos += name_len;
    need(4);
    const uint32_t rank = get_u32(bytes.data() + pos);
    pos += 4;
    require(rank <= 4, origin + ": implausible tensor rank");
    std::vector<int> shape(rank);
    for (uint32_t r = 0; r < rank; ++r) {
      need(4);
      shape[r] = static_cast<int>(get_u32(bytes.data() + pos));
      pos += 4;
    }
    nn::Tensor t(shape);
    need(static_cast<size_t>(t.size()) * 8);
    for (int j = 0; j < t.size(); ++j) {
      t.at(j) = get_f64(bytes.data() + pos);
      pos += 8;
    }
    items.emplace_back(std::move(name), std::move(t));
  }
  require(pos == bytes.size(), origin + ": trailing bytes in weight container");
  return items;
}

inline std::vector<std::pair<std::string, nn::Tensor>> read_weights(
    const std::string& path) {
  return parse_weights(detail::read_file_bytes(path), path);
}

// Loads a container into an existing model; every parameter must match by
// name and shape.
inline void load_into_model(const std::string& path, model::Model& m) {
  const auto items = read_weights(path);
  require(items.size() == m.params().items().size(),
          path + ": parameter count does not match the model configuration");
  for (const auto& [name, tensor] : items) {
    nn::Tensor& dst = m.params().get(name);
    require(dst.shape == tensor.shape,
            path + ": shape mismatch for parameter " + name);
    dst = tensor;
  }
}

// ---- key=value config snapshots ----

inline std::map<std::string, std::string> parse_kv_text(
    const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    require(eq != std::string::npos, "config: malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

inline std::map<std::string, std::string> read_kv_file(
    const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  return parse_kv_text(std::string(bytes.begin(), bytes.end()));
}

inline void write_model_config(const std::string& path,
                               const model::ModelConfig& cfg) {
  std::ostringstream out;
  out << "profile=" << cfg.dims.profile << "\n";
  out << "vocab=" << cfg.dims.vocab << "\n";
  out << "double_feedback=" << (cfg.double_feedback ? 1 : 0) << "\n";
  out << "candidates_from_final=" << (cfg.candidates_from_final ? 1 : 0)
      << "\n";
  out << "n_candidates=" << cfg.n_candidates << "\n";
  out << "seed=" << cfg.seed << "\n";
  detail::write_file_bytes(path, out.str());
}

inline model::ModelConfig read_model_config(const std::string& path) {
  const auto kv = read_kv_file(path);
  auto get = [&](const std::string& key) {
    auto it = kv.find(key);
    require(it != kv.end(), path + ": missing config key '" + key + "'");
    return it->second;
  };
  model::ModelConfig cfg;
  const std::string profile = get("profile");
  const int vocab = std::stoi(get("vocab"));
  if (profile == "toy") {
    cfg.dims = model::ModelDims::toy(vocab);
  } else if (profile == "paper") {
    cfg.dims = model::ModelDims::paper(vocab);
  } else {
    throw Error(path + ": unknown profile '" + profile + "'");
  }
  cfg.double_feedback = get("double_feedback") == "1";
  cfg.candidates_from_final = get("candidates_from_final") == "1";
  cfg.n_candidates = std::stoi(get("n_candidates"));
  cfg.seed = std::stoull(get("seed"));
  return cfg;
}

}  // namespace s2lpc::io

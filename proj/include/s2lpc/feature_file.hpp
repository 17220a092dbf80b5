// Frame-major binary feature containers.
//
// Layout (little endian): magic (4 bytes), u32 version = 1, u32 n_features,
// u32 sample_rate, u32 hop, u32 n_frames, then n_frames * n_features f32
// values. Magic selects the payload: "LPCF" (22 features), "MELF" (80 mel
// channels), "LPCA" (LP coefficients).
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "s2lpc/byte_io.hpp"
#include "s2lpc/common.hpp"
#include "s2lpc/framing.hpp"

namespace s2lpc::io {

constexpr uint32_t kFeatureFileVersion = 1;

struct FeatureFile {
  std::string magic;  // 4 chars
  uint32_t version = kFeatureFileVersion;
  uint32_t n_features = 0;
  uint32_t sample_rate = dsp::kSampleRate;
  uint32_t hop = 256;
  std::vector<std::vector<float>> frames;  // n_frames x n_features
};

inline std::string serialize(const FeatureFile& file) {
  using namespace detail;
  require(file.magic.size() == 4, "feature file magic must be 4 characters");
  std::string out = file.magic;
  put_u32(out, file.version);
  put_u32(out, file.n_features);
  put_u32(out, file.sample_rate);
  put_u32(out, file.hop);
  put_u32(out, static_cast<uint32_t>(file.frames.size()));
  for (const std::vector<float>& frame : file.frames) {
    require(frame.size() == file.n_features,
            "feature frame width does not match n_features");
    for (float v : frame) put_f32(out, v);
  }
  return out;
}

inline void write_feature_file(const std::string& path,
                               const FeatureFile& file) {
  detail::write_file_bytes(path, serialize(file));
}

inline FeatureFile parse_feature_file(const std::vector<unsigned char>& bytes,
                                      const std::string& origin) {
  using namespace detail;
  require(bytes.size() >= 24, origin + ": truncated feature file header");
  FeatureFile file;
  file.magic.assign(reinterpret_cast<const char*>(bytes.data()), 4);
  require(file.magic == "LPCF" || file.magic == "MELF" || file.magic == "LPCA",
          origin + ": unknown magic '" + file.magic + "'");
  file.version = get_u32(bytes.data() + 4);
  require(file.version == kFeatureFileVersion,
          origin + ": unsupported version " + std::to_string(file.version));
  file.n_features = get_u32(bytes.data() + 8);
  file.sample_rate = get_u32(bytes.data() + 12);
  file.hop = get_u32(bytes.data() + 16);
  const uint32_t n_frames = get_u32(bytes.data() + 20);
  const size_t need = 24 + static_cast<size_t>(n_frames) * file.n_features * 4;
  require(bytes.size() == need, origin + ": payload size mismatch");
  file.frames.assign(n_frames, std::vector<float>(file.n_features));
  size_t pos = 24;
  for (uint32_t t = 0; t < n_frames; ++t)
    for (uint32_t i = 0; i < file.n_features; ++i, pos += 4)
      file.frames[t][i] = get_f32(bytes.data() + pos);
  return file;
}

inline FeatureFile read_feature_file(const std::string& path) {
  return parse_feature_file(detail::read_file_bytes(path), path);
}

}  // namespace s2lpc::io

// Minimal RIFF/WAVE reader and writer for PCM 16-bit mono material.
#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "s2lpc/byte_io.hpp"
#include "s2lpc/common.hpp"
#include "s2lpc/framing.hpp"

namespace s2lpc::io {

// Reads a PCM 16-bit mono 22050 Hz WAV file. Anything else is rejected with
// a diagnostic naming the offending field.
inline dsp::AudioClip read_wav(const std::string& path) {
  using namespace detail;
  const std::vector<unsigned char> bytes = read_file_bytes(path);
  require(bytes.size() >= 44, path + ": too short to be a WAV file");
  require(std::memcmp(bytes.data(), "RIFF", 4) == 0 &&
              std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
          path + ": not a RIFF/WAVE file");

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t pos = 12;
  dsp::AudioClip clip;
  bool have_data = false;

  while (pos + 8 <= bytes.size()) {
    const uint32_t chunk_size = get_u32(bytes.data() + pos + 4);
    const unsigned char* body = bytes.data() + pos + 8;
    const size_t avail = bytes.size() - pos - 8;
    require(chunk_size <= avail, path + ": truncated chunk");

    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      require(chunk_size >= 16, path + ": malformed fmt chunk");
      format = get_u16(body);
      channels = get_u16(body + 2);
      rate = get_u32(body + 4);
      bits = get_u16(body + 14);
      have_fmt = true;
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      require(have_fmt, path + ": data chunk before fmt chunk");
      require(format == 1, path + ": unsupported WAV encoding (need PCM)");
      require(channels == 1, path + ": unsupported channel count " +
                                 std::to_string(channels) + " (need mono)");
      require(bits == 16, path + ": unsupported bit depth " +
                              std::to_string(bits) + " (need 16-bit)");
      require(rate == static_cast<uint32_t>(dsp::kSampleRate),
              path + ": unsupported sample rate " + std::to_string(rate) +
                  " Hz (expected 22050 Hz)");
      const size_t n = chunk_size / 2;
      clip.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        const int16_t s = static_cast<int16_t>(get_u16(body + 2 * i));
        clip.samples[i] = static_cast<double>(s) / 32768.0;
      }
      clip.sample_rate = static_cast<int>(rate);
      have_data = true;
    }
    pos += 8 + chunk_size + (chunk_size & 1);  // chunks are word aligned
  }
  require(have_data, path + ": no data chunk");
  require(!clip.samples.empty(), path + ": empty audio data");
  return clip;
}

inline void write_wav(const std::string& path, const dsp::AudioClip& clip) {
  using namespace detail;
  dsp::validate(clip);
  std::string out;
  const uint32_t data_bytes = static_cast<uint32_t>(clip.samples.size() * 2);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<uint32_t>(clip.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (double s : clip.samples) {
    const double v = std::clamp(s, -1.0, 1.0) * 32767.0;
    put_u16(out, static_cast<uint16_t>(static_cast<int16_t>(std::lround(v))));
  }
  write_file_bytes(path, out);
}

}  // namespace s2lpc::io

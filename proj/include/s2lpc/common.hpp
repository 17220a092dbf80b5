// Shared error type and small numeric helpers.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace s2lpc {

// Thrown on any contract violation (bad input data, malformed files,
// dimension mismatches). The CLI maps it to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

constexpr double kPi = 3.14159265358979323846;

constexpr bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Log floor applied to band/mel energies before taking logs.
constexpr double kLogFloor = 1e-10;

// Pitch range contract shared by the tracker, the quantizer and the model.
constexpr double kPitchMinHz = 60.0;
constexpr double kPitchMaxHz = 360.0;

inline double log_pitch_lo() { return std::log(kPitchMinHz); }
inline double log_pitch_hi() { return std::log(kPitchMaxHz); }

}  // namespace s2lpc

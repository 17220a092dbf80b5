#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "s2lpc/pitch.hpp"
#include "test_util.hpp"

using namespace s2lpc;
using namespace s2lpc::dsp;
using Catch::Approx;

namespace {

void check_pitch_oracle(const AudioClip& clip, double f0_expected,
                        double min_corr = 0.0) {
  const PitchTrack track = estimate_pitch(clip, FrameSpec{});
  const int n = static_cast<int>(track.frames.size());
  REQUIRE(n > 4);
  for (int t = 2; t < n - 2; ++t) {  // interior frames only
    const auto& f = track.frames[t];
    REQUIRE(f.voiced);
    CHECK(std::abs(f.f0_hz - f0_expected) / f0_expected < 0.02);
    if (min_corr > 0.0) CHECK(f.corr >= min_corr);
  }
}

}  // namespace

TEST_CASE("pitch oracle on synthetic periodic signals") {
  check_pitch_oracle(testutil::sawtooth(110.0, 0.8, 0.5), 110.0);
  check_pitch_oracle(testutil::sine(220.0, 0.8, 0.5), 220.0, 0.95);
  for (double f0 : {80.0, 110.0, 220.0, 330.0})
    check_pitch_oracle(testutil::sawtooth(f0, 0.8, 0.5), f0);
}

TEST_CASE("silence is unvoiced everywhere") {
  const PitchTrack track = estimate_pitch(testutil::silence(0.4), FrameSpec{});
  for (const auto& f : track.frames) {
    CHECK_FALSE(f.voiced);
    CHECK(f.f0_hz == 0.0);
  }
}

TEST_CASE("estimate_pitch rejects clips shorter than one window") {
  auto clip = testutil::make_clip(std::vector<double>(300, 0.1));
  CHECK_THROWS_AS(estimate_pitch(clip, FrameSpec{}), Error);
}

TEST_CASE("quantizer endpoints and midpoint") {
  CHECK(quantize_log_pitch(std::log(60.0)) == 0);
  CHECK(quantize_log_pitch(std::log(360.0)) == 255);
  CHECK(quantize_log_pitch(std::log(147.0)) == 128);
  CHECK(dequantize_log_pitch(0) == Approx(std::log(60.0)));
  CHECK(dequantize_log_pitch(255) == Approx(std::log(360.0)));
}

TEST_CASE("process_pitch_track clipping, rectification, interpolation") {
  SECTION("400 Hz clips to the top level") {
    PitchTrack track;
    track.frames.push_back({400.0, 0.8, true});
    track.frames.push_back({400.0, 0.8, true});
    const ProcessedPitch p = process_pitch_track(track);
    CHECK(p.level[0] == 255);
    CHECK(p.log_pitch_q[0] == Approx(std::log(360.0)));
  }

  SECTION("negative correlation is replaced by zero") {
    PitchTrack track;
    track.frames.push_back({100.0, -0.2, false});
    const ProcessedPitch p = process_pitch_track(track);
    CHECK(p.corr[0] == 0.0);
  }

  SECTION("unvoiced gap is linearly interpolated in log pitch") {
    PitchTrack track;
    track.frames.push_back({100.0, 0.9, true});
    track.frames.push_back({0.0, 0.1, false});
    track.frames.push_back({0.0, 0.1, false});
    track.frames.push_back({0.0, 0.1, false});
    track.frames.push_back({200.0, 0.9, true});
    const ProcessedPitch p = process_pitch_track(track);
    const double lo = std::log(100.0);
    const double hi = std::log(200.0);
    // quantization adds at most half a step of error
    const double half_step =
        0.5 * (log_pitch_hi() - log_pitch_lo()) / (kPitchLevels - 1);
    for (int t = 0; t < 5; ++t) {
      const double expected = lo + (hi - lo) * t / 4.0;
      CHECK(std::abs(p.log_pitch_q[t] - expected) <= half_step + 1e-12);
    }
  }

  SECTION("edge gaps hold the nearest voiced value") {
    PitchTrack track;
    track.frames.push_back({0.0, 0.0, false});
    track.frames.push_back({150.0, 0.9, true});
    track.frames.push_back({0.0, 0.0, false});
    const ProcessedPitch p = process_pitch_track(track);
    CHECK(p.log_pitch_q[0] == p.log_pitch_q[1]);
    CHECK(p.log_pitch_q[2] == p.log_pitch_q[1]);
  }

  SECTION("all-unvoiced track falls back to log 147 and is flagged") {
    PitchTrack track;
    for (int i = 0; i < 6; ++i) track.frames.push_back({0.0, 0.05, false});
    const ProcessedPitch p = process_pitch_track(track);
    CHECK(p.all_unvoiced);
    const double expected =
        dequantize_log_pitch(quantize_log_pitch(std::log(147.0)));
    for (double v : p.log_pitch_q) CHECK(v == Approx(expected));
  }

  SECTION("empty track is rejected") {
    PitchTrack track;
    CHECK_THROWS_AS(process_pitch_track(track), Error);
  }
}

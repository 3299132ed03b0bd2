// Copyright 2026 The adscreen Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "adscreen/signal_features.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "adscreen/random.hpp"
#include "test_util.hpp"

namespace adscreen {
namespace {

using testing::code_of;
using testing::TempDir;

AudioBuffer sine(double hz, double seconds, double amplitude = 0.5, int rate = 16000) {
  AudioBuffer b;
  b.sample_rate = rate;
  const auto n = static_cast<std::size_t>(seconds * rate);
  b.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    b.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
  }
  return b;
}

AudioBuffer silence(double seconds, int rate = 16000) {
  AudioBuffer b;
  b.sample_rate = rate;
  b.samples.assign(static_cast<std::size_t>(seconds * rate), 0.0);
  return b;
}

std::vector<double> first_window(const AudioBuffer& b, std::size_t n = 400) {
  return {b.samples.begin(), b.samples.begin() + static_cast<std::ptrdiff_t>(n)};
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

TEST(WavTest, SilenceFile) {
  TempDir dir("wav");
  save_wav(dir.path() / "s.wav", silence(1.0));
  AudioBuffer b = load_wav(dir.path() / "s.wav");
  EXPECT_EQ(b.sample_rate, 16000);
  ASSERT_EQ(b.samples.size(), 16000u);
  for (double x : b.samples) ASSERT_EQ(x, 0.0);
}

TEST(WavTest, MinimumSampleScalesToMinusOne) {
  AudioBuffer b;
  b.samples = {-1.0, 0.5};
  std::vector<std::uint8_t> bytes = encode_wav(b);
  AudioBuffer d = decode_wav(bytes);
  EXPECT_EQ(d.samples[0], -1.0);
  EXPECT_EQ(d.samples[1], 0.5);
}

TEST(WavTest, StereoIsUnsupported) {
  TempDir dir("wav");
  AudioBuffer b = silence(0.1);
  std::vector<std::uint8_t> bytes = encode_wav(b);
  bytes[22] = 2;  // channel count
  write_bytes(dir.path() / "stereo.wav", bytes);
  EXPECT_EQ(code_of([&] { load_wav(dir.path() / "stereo.wav"); }), ErrorCode::kUnsupportedFormat);
  bytes[22] = 1;
  bytes[34] = 8;  // bits per sample
  EXPECT_EQ(code_of([&] { decode_wav(bytes); }), ErrorCode::kUnsupportedFormat);
  EXPECT_EQ(code_of([&] { load_wav(dir.path() / "missing.wav"); }), ErrorCode::kIoError);
}

TEST(FramingTest, FrameCounts) {
  FrameSpec spec;
  EXPECT_EQ(frame_signal(silence(1.0), spec).size(), 98u);  // 1 + floor(15600 / 160)
  AudioBuffer b;
  b.samples.assign(400, 0.1);
  EXPECT_EQ(frame_signal(b, spec).size(), 1u);
  b.samples.assign(399, 0.1);
  EXPECT_EQ(code_of([&] { frame_signal(b, spec); }), ErrorCode::kTooShort);
}

TEST(FramingTest, FramesAreHannWindowed) {
  AudioBuffer b;
  b.samples.assign(400, 1.0);
  const auto frames = frame_signal(b, {});
  EXPECT_NEAR(frames[0].front(), 0.0, 1e-12);
  EXPECT_NEAR(frames[0].back(), 0.0, 1e-12);
  EXPECT_GT(frames[0][200], 0.99);
}

TEST(PitchTest, SineFrequenciesWithinFiveHz) {
  for (double hz : {100.0, 150.0, 220.0, 300.0}) {
    const PitchEstimate p = estimate_f0(first_window(sine(hz, 0.1)), 16000);
    EXPECT_TRUE(p.voiced) << hz;
    EXPECT_NEAR(p.f0_hz, hz, hz == 100.0 ? 3.0 : 5.0) << hz;
  }
}

TEST(PitchTest, ZeroFrameIsUnvoiced) {
  const PitchEstimate p = estimate_f0(std::vector<double>(400, 0.0), 16000);
  EXPECT_FALSE(p.voiced);
  EXPECT_EQ(p.f0_hz, 0.0);
}

TEST(PitchTest, NoiseIsUnvoiced) {
  Rng rng(3);
  std::vector<double> noise(400);
  for (double& x : noise) x = rng.uniform(-0.5, 0.5);
  EXPECT_FALSE(estimate_f0(noise, 16000).voiced);
}

TEST(IntensityTest, KnownLevels) {
  EXPECT_EQ(intensity_db(std::vector<double>(400, 0.0)), -120.0);
  std::vector<double> square(400);
  for (std::size_t i = 0; i < square.size(); ++i) square[i] = (i / 20) % 2 ? 1.0 : -1.0;
  EXPECT_NEAR(intensity_db(square), 0.0, 1e-12);
  // 20 log10(0.5 / sqrt 2) over whole periods (400 samples = 5.5 periods of 220 Hz is not
  // whole, so use 200 Hz: 400 samples = 5 periods).
  EXPECT_NEAR(intensity_db(first_window(sine(200.0, 0.1))), 20.0 * std::log10(0.5 / std::sqrt(2.0)),
              1e-9);
  EXPECT_NEAR(intensity_db(first_window(sine(220.0, 0.1))), -9.03, 0.1);
}

TEST(IntensityTest, MonotoneInAmplitude) {
  double last = -121.0;
  for (double a : {1e-7, 1e-5, 1e-3, 0.01, 0.1, 0.5, 1.0}) {
    const double db = intensity_db(first_window(sine(200.0, 0.1, a)));
    EXPECT_GT(db, last);
    EXPECT_LE(db, 0.0);
    EXPECT_GE(db, -120.0);
    last = db;
  }
}

TEST(VadTest, ThresholdIsInclusive) {
  EXPECT_FALSE(voice_activity(std::vector<double>(400, 0.0)));
  EXPECT_TRUE(voice_activity(first_window(sine(220.0, 0.1))));
  // Constant frame at exactly -40 dBFS: amplitude 10^(-2).
  std::vector<double> exact(400, 0.01);
  const double level = intensity_db(exact);
  EXPECT_TRUE(voice_activity(exact, level));
  EXPECT_FALSE(voice_activity(exact, std::nextafter(level, 0.0)));
}

TEST(StabilityTest, Properties) {
  const auto frames = frame_signal(sine(220.0, 0.2), {});
  EXPECT_EQ(spectral_stability(frames[3], frames[3]), 1.0);
  for (std::size_t i = 1; i < frames.size(); ++i) {
    EXPECT_GE(spectral_stability(frames[i - 1], frames[i]), 0.99);
  }
  const std::vector<double> quiet(frames[0].size(), 0.0);
  EXPECT_LE(spectral_stability(frames[2], quiet), 0.1);
  EXPECT_EQ(code_of([&] { spectral_stability(frames[0], std::vector<double>(10)); }),
            ErrorCode::kLengthMismatch);
}

TEST(StabilityTest, AlwaysInUnitInterval) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(400), b(400);
    for (double& x : a) x = rng.uniform(-1, 1) * rng.uniform();
    for (double& x : b) x = rng.bernoulli(0.3) ? 0.0 : rng.uniform(-1, 1);
    const double s = spectral_stability(a, b);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(MfccTest, ShapeDeterminismAndDc) {
  std::vector<double> frame = first_window(sine(220.0, 0.1));
  apply_hann(frame);
  const auto c1 = mfcc(frame, 16000);
  EXPECT_EQ(c1.size(), 13u);
  EXPECT_EQ(mfcc(frame, 16000), c1);

  std::vector<double> dc(400, 0.5), quiet(400, 0.0);
  apply_hann(dc);
  const auto a = mfcc(dc, 16000);
  const auto b = mfcc(quiet, 16000);
  std::size_t largest = 0;
  for (std::size_t k = 1; k < a.size(); ++k) {
    if (std::abs(a[k] - b[k]) > std::abs(a[largest] - b[largest])) largest = k;
  }
  EXPECT_EQ(largest, 0u);
}

TEST(AcousticVectorTest, Sine) {
  namespace L = acoustic_layout;
  const AcousticAnalysis a = extract_acoustic_vector(sine(220.0, 1.0));
  ASSERT_EQ(a.summary.dim(), L::kDim);
  EXPECT_NEAR(a.summary.values[L::kF0], 220.0, 5.0);
  EXPECT_GE(a.summary.values[L::kVoicedRatio], 0.95);
  EXPECT_EQ(a.frames.size(), 98u);
  EXPECT_EQ(a.summary.sample_rate, 16000);
}

TEST(AcousticVectorTest, Silence) {
  namespace L = acoustic_layout;
  const AcousticAnalysis a = extract_acoustic_vector(silence(1.0));
  EXPECT_EQ(a.summary.values[L::kVoicedRatio], 0.0);
  EXPECT_EQ(a.summary.values[L::kIntensity], -120.0);
  EXPECT_EQ(a.summary.values[L::kF0], 0.0);
}

TEST(AcousticVectorTest, Deterministic) {
  const AudioBuffer b = sine(150.0, 0.7, 0.3);
  EXPECT_EQ(extract_acoustic_vector(b).summary, extract_acoustic_vector(b).summary);
  EXPECT_EQ(acoustic_segments(b), acoustic_segments(b));
}

TEST(AcousticVectorTest, RandomBuffersAreFinite) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    AudioBuffer b;
    b.sample_rate = trial % 2 ? 8000 : 16000;
    b.samples.resize(400 + rng.index(8000));
    const double gain = rng.uniform();
    for (double& x : b.samples) x = rng.bernoulli(0.2) ? 0.0 : gain * rng.uniform(-1, 1);
    const AcousticAnalysis a = extract_acoustic_vector(b);
    for (double v : a.summary.values) ASSERT_TRUE(std::isfinite(v));
    for (const auto& seg : acoustic_segments(b)) {
      for (double v : seg.values) ASSERT_TRUE(std::isfinite(v));
    }
  }
}

TEST(AcousticVectorTest, SegmentsCoverUtterance) {
  // 1.2 s: 118 frames, 50 per segment -> 50, 50, 18.
  const auto segs = acoustic_segments(sine(220.0, 1.2), 0.5);
  EXPECT_EQ(segs.size(), 3u);
  EXPECT_EQ(code_of([] { acoustic_segments(silence(0.01)); }), ErrorCode::kTooShort);
}

TEST(PauseTest, GapBetweenTonesIsAPause) {
  AudioBuffer b = sine(200.0, 0.5);
  const AudioBuffer gap = silence(0.4);
  const AudioBuffer tail = sine(200.0, 0.5);
  b.samples.insert(b.samples.end(), gap.samples.begin(), gap.samples.end());
  b.samples.insert(b.samples.end(), tail.samples.begin(), tail.samples.end());
  const AcousticAnalysis a = extract_acoustic_vector(b);
  const auto pauses = detect_pauses(a, 0.25);
  ASSERT_EQ(pauses.size(), 1u);
  EXPECT_NEAR(pauses[0].duration(), 0.4, 0.03);
  EXPECT_NEAR(pauses[0].start_s, 0.5, 0.03);
  EXPECT_TRUE(detect_pauses(a, 0.5).empty());
}

}  // namespace
}  // namespace adscreen

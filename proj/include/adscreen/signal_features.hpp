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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace adscreen {

struct AudioBuffer {
  std::vector<double> samples;  // mono, [-1, 1]
  int sample_rate = 16000;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// RIFF/WAVE, PCM 16-bit, mono. Samples are divided by 32768.
AudioBuffer load_wav(const std::filesystem::path& path);
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_wav(const AudioBuffer& buf);
void save_wav(const std::filesystem::path& path, const AudioBuffer& buf);

struct FrameSpec {
  double window_s = 0.025;
  double hop_s = 0.010;

  std::size_t window_samples(int sample_rate) const;
  std::size_t hop_samples(int sample_rate) const;
};

struct ProsodyConfig {
  double vad_threshold_db = -40.0;
  double voicing_threshold = 0.3;
  double f0_min_hz = 50.0;
  double f0_max_hz = 500.0;
  std::size_t mfcc_coeffs = 13;
  std::size_t mel_filters = 26;
  double mel_max_hz = 8000.0;
};

using Frame = std::vector<double>;

// Unwindowed slices; count = 1 + floor((N - W) / H). Throws kTooShort.
std::vector<Frame> slice_frames(const AudioBuffer& buf, const FrameSpec& spec);
// Hann-windowed copies of slice_frames.
std::vector<Frame> frame_signal(const AudioBuffer& buf, const FrameSpec& spec);
void apply_hann(std::span<double> frame);

// 20 log10(RMS), clamped to [-120, 0].
double intensity_db(std::span<const double> frame);

// Inclusive: true iff intensity_db(frame) >= threshold_db.
bool voice_activity(std::span<const double> frame, double threshold_db = -40.0);

struct PitchEstimate {
  bool voiced = false;
  double f0_hz = 0.0;
};

// Normalized autocorrelation peak over lags covering [f0_min, f0_max].
PitchEstimate estimate_f0(std::span<const double> frame, int sample_rate,
                          const ProsodyConfig& cfg = {});

// Magnitude spectrum of the frame zero-padded to the next power of two.
std::vector<double> magnitude_spectrum(std::span<const double> frame);

// 1 - ||M1 - M2|| / max(||M1||, ||M2||), clamped to [0, 1]. Two silent
// frames count as identical. Throws kLengthMismatch.
double spectral_stability(std::span<const double> prev_frame, std::span<const double> frame);

// Mel filterbank log energies followed by a DCT-II.
std::vector<double> mfcc(std::span<const double> frame, int sample_rate,
                         const ProsodyConfig& cfg = {});

struct ProsodicFrame {
  bool voiced = false;
  double f0_hz = 0.0;
  double intensity_db = -120.0;
  double stability = 1.0;

  bool operator==(const ProsodicFrame&) const = default;
};

// Layout of AcousticFeatureVector::values.
namespace acoustic_layout {
inline constexpr std::size_t kF0 = 0;          // mean, std, min, max over voiced frames
inline constexpr std::size_t kIntensity = 4;   // mean, std, min, max
inline constexpr std::size_t kStability = 8;   // mean, std, min, max
inline constexpr std::size_t kVoicedRatio = 12;
inline constexpr std::size_t kMfccMean = 13;   // 13 values
inline constexpr std::size_t kMfccStd = 26;    // 13 values
inline constexpr std::size_t kDim = 39;
}  // namespace acoustic_layout

struct AcousticFeatureVector {
  std::vector<double> values;
  int sample_rate = 0;

  std::size_t dim() const { return values.size(); }
  bool operator==(const AcousticFeatureVector&) const = default;
};

struct AcousticAnalysis {
  AcousticFeatureVector summary;
  std::vector<ProsodicFrame> frames;
  FrameSpec spec;
  int sample_rate = 0;
};

// Whole-utterance statistics plus the per-frame prosody they came from.
AcousticAnalysis extract_acoustic_vector(const AudioBuffer& audio, const FrameSpec& spec = {},
                                         const ProsodyConfig& cfg = {});

// Statistics vectors over consecutive segments of segment_s seconds; the
// sequence fed to the audio classifier. A trailing segment shorter than one
// window is merged into its predecessor.
std::vector<AcousticFeatureVector> acoustic_segments(const AudioBuffer& audio,
                                                     double segment_s = 0.5,
                                                     const FrameSpec& spec = {},
                                                     const ProsodyConfig& cfg = {});

struct TimeSpan {
  double start_s = 0.0;
  double end_s = 0.0;
  double duration() const { return end_s - start_s; }
};

// VAD-inactive runs of at least min_s seconds between voiced stretches,
// in seconds from the start of the analysed audio. Leading and trailing
// silence are not pauses.
std::vector<TimeSpan> detect_pauses(const AcousticAnalysis& analysis, double min_s,
                                    double vad_threshold_db = -40.0);

}  // namespace adscreen

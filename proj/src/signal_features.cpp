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

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

#include "adscreen/error.hpp"

namespace adscreen {
namespace {

constexpr double kFloorDb = -120.0;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// fftw_plan creation is not thread-safe; execution with new arrays is.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  // Magnitudes of bins 0..n/2 of the zero-padded input.
  std::vector<double> magnitudes(std::span<const double> x) const {
    double* in = fftw_alloc_real(n_);
    fftw_complex* out = fftw_alloc_complex(n_ / 2 + 1);
    std::fill(in, in + n_, 0.0);
    std::copy_n(x.begin(), std::min(x.size(), n_), in);
    fftw_execute_dft_r2c(plan_, in, out);
    std::vector<double> mag(n_ / 2 + 1);
    for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::hypot(out[k][0], out[k][1]);
    fftw_free(in);
    fftw_free(out);
    return mag;
  }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

const RealFft& fft_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<RealFft>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct Stats {
  double mean = 0, sd = 0, min = 0, max = 0;
};

Stats stats_of(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.sd = std::sqrt(ss / static_cast<double>(v.size()));
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

void put_stats(std::vector<double>& out, std::size_t at, const Stats& s) {
  out[at] = s.mean;
  out[at + 1] = s.sd;
  out[at + 2] = s.min;
  out[at + 3] = s.max;
}

struct FrameAnalysis {
  std::vector<ProsodicFrame> prosody;
  std::vector<std::vector<double>> mfccs;
};

FrameAnalysis analyse_frames(const AudioBuffer& audio, const FrameSpec& spec,
                             const ProsodyConfig& cfg) {
  const std::vector<Frame> raw = slice_frames(audio, spec);
  FrameAnalysis fa;
  fa.prosody.reserve(raw.size());
  fa.mfccs.reserve(raw.size());
  Frame prev_windowed;
  for (const Frame& f : raw) {
    Frame w = f;
    apply_hann(w);
    ProsodicFrame pf;
    pf.intensity_db = intensity_db(f);
    const PitchEstimate pe = estimate_f0(f, audio.sample_rate, cfg);
    pf.voiced = pe.voiced;
    pf.f0_hz = pe.f0_hz;
    pf.stability = prev_windowed.empty() ? 1.0 : spectral_stability(prev_windowed, w);
    fa.prosody.push_back(pf);
    fa.mfccs.push_back(mfcc(w, audio.sample_rate, cfg));
    prev_windowed = std::move(w);
  }
  return fa;
}

AcousticFeatureVector summarize(const FrameAnalysis& fa, std::size_t begin, std::size_t end,
                                int sample_rate, std::size_t n_mfcc) {
  namespace L = acoustic_layout;
  AcousticFeatureVector v;
  v.sample_rate = sample_rate;
  v.values.assign(L::kDim, 0.0);
  std::vector<double> f0, inten, stab;
  std::size_t voiced = 0;
  for (std::size_t i = begin; i < end; ++i) {
    const ProsodicFrame& p = fa.prosody[i];
    if (p.voiced) {
      ++voiced;
      f0.push_back(p.f0_hz);
    }
    inten.push_back(p.intensity_db);
    stab.push_back(p.stability);
  }
  put_stats(v.values, L::kF0, stats_of(f0));
  put_stats(v.values, L::kIntensity, stats_of(inten));
  put_stats(v.values, L::kStability, stats_of(stab));
  const std::size_t n = end - begin;
  v.values[L::kVoicedRatio] = n ? static_cast<double>(voiced) / static_cast<double>(n) : 0.0;
  const std::size_t nc = std::min<std::size_t>(n_mfcc, 13);
  for (std::size_t c = 0; c < nc; ++c) {
    std::vector<double> col;
    col.reserve(n);
    for (std::size_t i = begin; i < end; ++i) col.push_back(fa.mfccs[i][c]);
    const Stats s = stats_of(col);
    v.values[L::kMfccMean + c] = s.mean;
    v.values[L::kMfccStd + c] = s.sd;
  }
  return v;
}

}  // namespace

std::size_t FrameSpec::window_samples(int sample_rate) const {
  return static_cast<std::size_t>(std::lround(window_s * sample_rate));
}

std::size_t FrameSpec::hop_samples(int sample_rate) const {
  return static_cast<std::size_t>(std::lround(hop_s * sample_rate));
}

std::vector<Frame> slice_frames(const AudioBuffer& buf, const FrameSpec& spec) {
  if (!(spec.hop_s > 0.0) || spec.hop_s > spec.window_s || buf.sample_rate <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "frame spec needs 0 < hop <= window");
  }
  const std::size_t w = spec.window_samples(buf.sample_rate);
  const std::size_t h = std::max<std::size_t>(1, spec.hop_samples(buf.sample_rate));
  const std::size_t n = buf.samples.size();
  if (w == 0 || n < w) {
    throw Error(ErrorCode::kTooShort, "buffer of " + std::to_string(n) +
                                          " samples is shorter than one window");
  }
  const std::size_t count = 1 + (n - w) / h;
  std::vector<Frame> frames;
  frames.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto first = buf.samples.begin() + static_cast<std::ptrdiff_t>(k * h);
    frames.emplace_back(first, first + static_cast<std::ptrdiff_t>(w));
  }
  return frames;
}

void apply_hann(std::span<double> frame) {
  const std::size_t n = frame.size();
  if (n < 2) return;
  for (std::size_t i = 0; i < n; ++i) {
    frame[i] *= 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                      static_cast<double>(n - 1));
  }
}

std::vector<Frame> frame_signal(const AudioBuffer& buf, const FrameSpec& spec) {
  std::vector<Frame> frames = slice_frames(buf, spec);
  for (Frame& f : frames) apply_hann(f);
  return frames;
}

double intensity_db(std::span<const double> frame) {
  if (frame.empty()) return kFloorDb;
  double ss = 0.0;
  for (double x : frame) ss += x * x;
  const double rms = std::sqrt(ss / static_cast<double>(frame.size()));
  if (rms <= 0.0) return kFloorDb;
  return std::clamp(20.0 * std::log10(rms), kFloorDb, 0.0);
}

bool voice_activity(std::span<const double> frame, double threshold_db) {
  return intensity_db(frame) >= threshold_db;
}

PitchEstimate estimate_f0(std::span<const double> frame, int sample_rate,
                          const ProsodyConfig& cfg) {
  PitchEstimate none;
  if (sample_rate <= 0 || !voice_activity(frame, cfg.vad_threshold_db)) return none;
  const std::size_t n = frame.size();
  const auto lag_min = static_cast<std::size_t>(std::floor(sample_rate / cfg.f0_max_hz));
  const auto lag_max = std::min<std::size_t>(
      static_cast<std::size_t>(std::ceil(sample_rate / cfg.f0_min_hz)), n > 2 ? n - 2 : 0);
  if (lag_min < 1 || lag_max <= lag_min + 1) return none;

  // Normalized over the overlapping region of the two shifted copies.
  std::vector<double> r(lag_max + 2, 0.0);
  for (std::size_t lag = lag_min - 1; lag <= lag_max + 1 && lag < n; ++lag) {
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) {
      xy += frame[i] * frame[i + lag];
      xx += frame[i] * frame[i];
      yy += frame[i + lag] * frame[i + lag];
    }
    r[lag] = (xx > 0.0 && yy > 0.0) ? xy / std::sqrt(xx * yy) : 0.0;
  }

  double global = 0.0;
  for (std::size_t lag = lag_min; lag <= lag_max; ++lag) global = std::max(global, r[lag]);
  if (global < cfg.voicing_threshold) return none;

  // First local maximum close to the global one; avoids sub-harmonic lags.
  std::size_t best = 0;
  for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
    if (r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1] && r[lag] >= 0.9 * global) {
      best = lag;
      break;
    }
  }
  if (best == 0 || r[best] < cfg.voicing_threshold) return none;

  double shift = 0.0;
  const double denom = r[best - 1] - 2.0 * r[best] + r[best + 1];
  if (denom < 0.0) shift = 0.5 * (r[best - 1] - r[best + 1]) / denom;
  const double f0 = sample_rate / (static_cast<double>(best) + std::clamp(shift, -0.5, 0.5));
  return {true, std::clamp(f0, cfg.f0_min_hz, cfg.f0_max_hz)};
}

std::vector<double> magnitude_spectrum(std::span<const double> frame) {
  const std::size_t n = next_pow2(std::max<std::size_t>(frame.size(), 2));
  return fft_for(n).magnitudes(frame);
}

double spectral_stability(std::span<const double> prev_frame, std::span<const double> frame) {
  if (prev_frame.size() != frame.size()) {
    throw Error(ErrorCode::kLengthMismatch, "frames differ in length");
  }
  const std::vector<double> a = magnitude_spectrum(prev_frame);
  const std::vector<double> b = magnitude_spectrum(frame);
  double flux = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    flux += (a[k] - b[k]) * (a[k] - b[k]);
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  const double norm = std::sqrt(std::max(na, nb));
  if (norm == 0.0) return 1.0;
  return std::clamp(1.0 - std::sqrt(flux) / norm, 0.0, 1.0);
}

std::vector<double> mfcc(std::span<const double> frame, int sample_rate,
                         const ProsodyConfig& cfg) {
  const std::size_t nfft = next_pow2(std::max<std::size_t>(frame.size(), 2));
  const std::vector<double> mag = fft_for(nfft).magnitudes(frame);
  const std::size_t n_filters = cfg.mel_filters;
  const double f_hi = std::min(cfg.mel_max_hz, sample_rate / 2.0);
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(f_hi);

  std::vector<double> edges(n_filters + 2);
  for (std::size_t m = 0; m < edges.size(); ++m) {
    const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(m) /
                                    static_cast<double>(n_filters + 1);
    edges[m] = mel_to_hz(mel);
  }
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(nfft);

  std::vector<double> log_energy(n_filters);
  for (std::size_t m = 0; m < n_filters; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    double e = 0.0;
    for (std::size_t k = 0; k < mag.size(); ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      e += w * mag[k] * mag[k];
    }
    log_energy[m] = std::log(std::max(e, 1e-10));
  }

  std::vector<double> c(cfg.mfcc_coeffs);
  for (std::size_t k = 0; k < c.size(); ++k) {
    double s = 0.0;
    for (std::size_t m = 0; m < n_filters; ++m) {
      s += log_energy[m] * std::cos(std::numbers::pi * static_cast<double>(k) *
                                    (static_cast<double>(m) + 0.5) /
                                    static_cast<double>(n_filters));
    }
    c[k] = s;
  }
  return c;
}

AcousticAnalysis extract_acoustic_vector(const AudioBuffer& audio, const FrameSpec& spec,
                                         const ProsodyConfig& cfg) {
  const FrameAnalysis fa = analyse_frames(audio, spec, cfg);
  AcousticAnalysis out;
  out.summary = summarize(fa, 0, fa.prosody.size(), audio.sample_rate, cfg.mfcc_coeffs);
  out.frames = fa.prosody;
  out.spec = spec;
  out.sample_rate = audio.sample_rate;
  return out;
}

std::vector<AcousticFeatureVector> acoustic_segments(const AudioBuffer& audio, double segment_s,
                                                     const FrameSpec& spec,
                                                     const ProsodyConfig& cfg) {
  const FrameAnalysis fa = analyse_frames(audio, spec, cfg);
  const std::size_t per_segment = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(segment_s / spec.hop_s)));
  const std::size_t min_frames = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(spec.window_s / spec.hop_s)));
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t b = 0; b < fa.prosody.size(); b += per_segment) {
    const std::size_t e = std::min(b + per_segment, fa.prosody.size());
    if (!ranges.empty() && e - b < min_frames) {
      ranges.back().second = e;
    } else {
      ranges.emplace_back(b, e);
    }
  }
  std::vector<AcousticFeatureVector> out;
  out.reserve(ranges.size());
  for (auto [b, e] : ranges) {
    out.push_back(summarize(fa, b, e, audio.sample_rate, cfg.mfcc_coeffs));
  }
  return out;
}

std::vector<TimeSpan> detect_pauses(const AcousticAnalysis& analysis, double min_s,
                                    double vad_threshold_db) {
  std::vector<TimeSpan> pauses;
  const auto& fr = analysis.frames;
  const double hop = analysis.spec.hop_s;
  const double half_window = analysis.spec.window_s / 2.0;
  bool seen_active = false;
  std::size_t run_start = 0;
  bool in_run = false;
  for (std::size_t i = 0; i < fr.size(); ++i) {
    const bool active = fr[i].intensity_db >= vad_threshold_db;
    if (active) {
      if (in_run && seen_active) {
        const double start = half_window + hop * (static_cast<double>(run_start) - 0.5);
        const double end = half_window + hop * (static_cast<double>(i) - 0.5);
        if (end - start >= min_s - 1e-9) pauses.push_back({start, end});
      }
      in_run = false;
      seen_active = true;
    } else if (!in_run) {
      in_run = true;
      run_start = i;
    }
  }
  return pauses;
}

}  // namespace adscreen

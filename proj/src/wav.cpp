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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "adscreen/error.hpp"
#include "adscreen/signal_features.hpp"

namespace adscreen {
namespace {

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

}  // namespace

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw Error(ErrorCode::kUnsupportedFormat, "not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  AudioBuffer buf;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      throw Error(ErrorCode::kUnsupportedFormat, "truncated chunk");
    }
    if (tag_is(bytes, pos, "fmt ")) {
      if (size < 16) throw Error(ErrorCode::kUnsupportedFormat, "short fmt chunk");
      const std::uint16_t format = read_u16(bytes, body);
      const std::uint16_t channels = read_u16(bytes, body + 2);
      const std::uint32_t rate = read_u32(bytes, body + 4);
      const std::uint16_t bits = read_u16(bytes, body + 14);
      if (format != 1) throw Error(ErrorCode::kUnsupportedFormat, "not PCM");
      if (channels != 1) {
        throw Error(ErrorCode::kUnsupportedFormat, std::to_string(channels) + " channels");
      }
      if (bits != 16) {
        throw Error(ErrorCode::kUnsupportedFormat, std::to_string(bits) + "-bit samples");
      }
      if (rate == 0) throw Error(ErrorCode::kUnsupportedFormat, "zero sample rate");
      buf.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      if (!have_fmt) throw Error(ErrorCode::kUnsupportedFormat, "data before fmt");
      const std::size_t count = size / 2;
      buf.samples.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        const auto s = static_cast<std::int16_t>(read_u16(bytes, body + 2 * i));
        buf.samples[i] = static_cast<double>(s) / 32768.0;
      }
      return buf;
    }
    pos = body + size + (size & 1U);
  }
  throw Error(ErrorCode::kUnsupportedFormat, "no data chunk");
}

AudioBuffer load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& buf) {
  const auto data_bytes = static_cast<std::uint32_t>(buf.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (double x : buf.samples) {
    const long v = std::lround(std::clamp(x, -1.0, 1.0) * 32768.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(v, -32768L, 32767L))));
  }
  return out;
}

void save_wav(const std::filesystem::path& path, const AudioBuffer& buf) {
  const std::vector<std::uint8_t> bytes = encode_wav(buf);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace adscreen

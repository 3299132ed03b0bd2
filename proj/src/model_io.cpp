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

#include <charconv>
#include <fstream>
#include <sstream>

#include "adscreen/bigru.hpp"
#include "adscreen/error.hpp"

namespace adscreen {
namespace {

constexpr const char* kMagic = "ADSCREEN-BIGRU";

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

[[noreturn]] void bad_format(const std::string& what) {
  throw Error(ErrorCode::kFormatVersionMismatch, what);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_format("bad number '" + s + "'");
  return v;
}

void write_values(std::ostream& out, const double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out << (i ? " " : "") << format_double(data[i]);
  out << '\n';
}

// Column-major storage written row by row.
void write_row_major(std::ostream& out, const NamedTensor& t) {
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 0; c < t.cols; ++c) {
      out << (r || c ? " " : "") << format_double(t.data[c * t.rows + r]);
    }
  }
  out << '\n';
}

// Expects "<key> <value>" and returns value.
std::string expect_field(std::istream& in, const std::string& key) {
  std::string k, v;
  if (!(in >> k >> v) || k != key) bad_format("expected field '" + key + "'");
  return v;
}

std::size_t to_size(const std::string& s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_format("bad integer '" + s + "'");
  return v;
}

void read_values(std::istream& in, double* data, std::size_t n) {
  std::string tok;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(in >> tok)) bad_format("truncated tensor data");
    data[i] = parse_double(tok);
  }
}

void read_row_major(std::istream& in, const NamedTensor& t) {
  std::string tok;
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 0; c < t.cols; ++c) {
      if (!(in >> tok)) bad_format("truncated tensor data");
      t.data[c * t.rows + r] = parse_double(tok);
    }
  }
}

}  // namespace

void save_model(const BiGRUClassifier& model, const std::filesystem::path& path) {
  std::ostringstream out;
  out << kMagic << ' ' << kModelFormatVersion << '\n';
  out << "input_dim " << model.input_dim() << '\n';
  out << "hidden_dim " << model.hidden_dim() << '\n';
  out << "num_classes " << model.num_classes() << '\n';
  out << "seed " << model.seed << '\n';
  const bool norm = !model.input_norm.is_identity();
  out << "standardizer " << (norm ? 1 : 0) << '\n';
  if (norm) {
    write_values(out, model.input_norm.mean.data(), static_cast<std::size_t>(model.input_norm.mean.size()));
    write_values(out, model.input_norm.scale.data(), static_cast<std::size_t>(model.input_norm.scale.size()));
  }
  BiGRUClassifier copy = model;
  for (const NamedTensor& t : parameter_tensors(copy)) {
    out << "tensor " << t.name << ' ' << t.rows << ' ' << t.cols << '\n';
    write_row_major(out, t);
  }
  out << "end\n";

  std::ofstream file(path, std::ios::trunc);
  if (!file) throw Error(ErrorCode::kIoError, "cannot write model " + path.string());
  file << out.str();
  if (!file) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

BiGRUClassifier load_model(const std::filesystem::path& path, std::size_t expected_classes) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open model " + path.string());
  std::string magic, version;
  if (!(in >> magic >> version) || magic != kMagic) bad_format("not a model file");
  if (version != std::to_string(kModelFormatVersion)) bad_format("unsupported version " + version);
  const std::size_t d = to_size(expect_field(in, "input_dim"));
  const std::size_t h = to_size(expect_field(in, "hidden_dim"));
  const std::size_t c = to_size(expect_field(in, "num_classes"));
  if (d == 0 || h == 0 || c < 2) bad_format("degenerate dimensions");
  if (expected_classes != 0 && c != expected_classes) {
    bad_format("model has " + std::to_string(c) + " classes, expected " +
               std::to_string(expected_classes));
  }
  BiGRUClassifier m = BiGRUClassifier::zeros(d, h, c);
  m.seed = to_size(expect_field(in, "seed"));
  if (to_size(expect_field(in, "standardizer")) == 1) {
    m.input_norm.mean.resize(static_cast<Eigen::Index>(d));
    m.input_norm.scale.resize(static_cast<Eigen::Index>(d));
    read_values(in, m.input_norm.mean.data(), d);
    read_values(in, m.input_norm.scale.data(), d);
  }
  for (const NamedTensor& t : parameter_tensors(m)) {
    std::string kw, name, rows, cols;
    if (!(in >> kw >> name >> rows >> cols) || kw != "tensor" || name != t.name) {
      bad_format("expected tensor " + t.name);
    }
    if (to_size(rows) != t.rows || to_size(cols) != t.cols) {
      bad_format("tensor " + t.name + " has wrong shape");
    }
    read_row_major(in, t);
  }
  std::string end;
  if (!(in >> end) || end != "end") bad_format("missing end marker");
  return m;
}

}  // namespace adscreen

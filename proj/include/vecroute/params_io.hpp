/*
 * Copyright 2026 The vecroute Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef VECROUTE_PARAMS_IO_HPP_
#define VECROUTE_PARAMS_IO_HPP_

// Seeded parameter initialization and the parameter file format.
//
// A parameter file is a line-oriented ASCII header followed by a binary
// payload; see docs/param_format.md for the byte-level description.

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vecroute/errors.hpp"
#include "vecroute/params.hpp"
#include "vecroute/tensor.hpp"

namespace vecroute {

struct InitOptions {
  double beta_use = 1.0;
  double beta_ign = 0.0;
  // Draw biases and betas (or beta generators) from N(0, 1) instead of the
  // constants above; used to exercise the routers away from the neutral point.
  bool randomize_biases_and_betas = false;

  static InitOptions randomized() {
    InitOptions o;
    o.randomize_biases_and_betas = true;
    return o;
  }
};

namespace detail {

// Standard deviation of a weight tensor's initial values, 1/sqrt(fan_in).
// W_F1 and W_G2 are elementwise scalings, so their fan-in is 1.
inline double init_stddev(const std::string& name, const RoutingDims& dims) {
  if (name == "W_F1" || name == "W_G2") return 1.0;
  if (name == "W_G1") return 1.0 / std::sqrt(double(dims.d_out));
  return 1.0 / std::sqrt(double(dims.d_inp));  // W_A, W_F2, W_S, W_use, W_ign
}

inline bool is_weight(const std::string& name) {
  return name[0] == 'W';
}

inline void fill_normal(DenseTensor<float>& t, std::uint64_t seed, std::size_t tensor_index,
                        double mean, double stddev) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(tensor_index)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> dist(mean, stddev);
  for (float& v : t.values()) v = float(dist(rng));
}

}  // namespace detail

/// Deterministic parameters for (dims, seed). Weights are N(0, 1/sqrt(fan_in));
/// each tensor is drawn from its own stream so tensors do not shift each
/// other's values.
inline RoutingParams<float> init_params(const RoutingDims& dims, std::uint64_t seed,
                                        const InitOptions& options = {}) {
  dims.validate();
  RoutingParams<float> p;
  if (dims.n_inp) {
    p.fixed_betas.emplace();
  } else {
    p.beta_generators.emplace();
  }
  const auto layout = parameter_layout(dims);
  std::size_t k = 0;
  p.for_each_tensor([&](const std::string& name, DenseTensor<float>& t) {
    t = DenseTensor<float>(layout.at(k).second);
    if (detail::is_weight(name)) {
      const bool generator = name == "W_use" || name == "W_ign";
      if (!generator || options.randomize_biases_and_betas) {
        detail::fill_normal(t, seed, k, 0.0, detail::init_stddev(name, dims));
      }
    } else if (options.randomize_biases_and_betas) {
      detail::fill_normal(t, seed, k, 0.0, 1.0);
    } else if (name == "beta_use" || name == "B_use") {
      t = DenseTensor<float>(t.shape(), float(options.beta_use));
    } else if (name == "beta_ign" || name == "B_ign") {
      t = DenseTensor<float>(t.shape(), float(options.beta_ign));
    }
    ++k;
  });
  return p;
}

struct LoadedParams {
  RoutingParams<float> params;
  RoutingDims dims;
};

inline constexpr std::string_view kParamMagic = "vecroute-params";
inline constexpr int kParamFormatVersion = 1;

inline std::uint32_t payload_crc32(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large payloads in chunks.
  constexpr std::size_t kChunk = std::size_t{1} << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
    const std::size_t len = std::min(kChunk, bytes.size() - off);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), uInt(len));
  }
  return std::uint32_t(crc);
}

/// Serializes params and dims; the output is identical on every host.
inline std::string serialize_params(const RoutingParams<float>& params, const RoutingDims& dims) {
  validate_params(params, dims);
  std::string payload;
  payload.reserve(params.element_count() * 4);
  std::ostringstream tensors;
  params.for_each_tensor([&](const std::string& name, const DenseTensor<float>& t) {
    tensors << "tensor " << name << " f32 " << shape_string(t.shape()) << ' ' << payload.size()
            << '\n';
    for (float v : t.values()) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) payload.push_back(char((bits >> (8 * b)) & 0xffu));
    }
  });
  char crc_hex[9];
  std::snprintf(crc_hex, sizeof crc_hex, "%08x", unsigned(payload_crc32(payload)));

  std::ostringstream header;
  header << kParamMagic << ' ' << kParamFormatVersion << '\n';
  header << "n_inp " << (dims.n_inp ? std::to_string(*dims.n_inp) : "variable") << '\n';
  header << "n_out " << dims.n_out << '\n';
  header << "d_inp " << dims.d_inp << '\n';
  header << "d_out " << dims.d_out << '\n';
  header << "n_iters " << dims.n_iters << '\n';
  header << "mode " << to_string(params.mode()) << '\n';
  header << tensors.str();
  header << "payload_bytes " << payload.size() << '\n';
  header << "crc32 " << crc_hex << '\n';
  header << "end\n";
  return header.str() + payload;
}

namespace detail {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view header) : header_(header) {}

  std::vector<std::string> next_line(std::string_view keyword, std::size_t fields) {
    if (pos_ >= header_.size()) fail("header ends before '" + std::string(keyword) + "'");
    const auto eol = header_.find('\n', pos_);
    const std::string line(header_.substr(pos_, eol - pos_));
    pos_ = eol + 1;
    ++line_no_;
    std::istringstream in(line);
    std::vector<std::string> words{std::istream_iterator<std::string>(in),
                                   std::istream_iterator<std::string>()};
    if (words.empty() || words[0] != keyword || words.size() != fields + 1) {
      fail("expected '" + std::string(keyword) + "' with " + std::to_string(fields) +
           " field(s), got \"" + line + "\"");
    }
    return words;
  }

  bool peek(std::string_view keyword) const {
    return header_.substr(pos_).starts_with(std::string(keyword) + ' ');
  }

  bool at_end() const { return pos_ >= header_.size(); }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError("parameter header line " + std::to_string(line_no_) + ": " + msg);
  }

  std::size_t count(const std::string& word) const {
    if (word.empty() || word.find_first_not_of("0123456789") != std::string::npos ||
        word.size() > 18) {
      fail("expected a non-negative integer, got \"" + word + "\"");
    }
    return std::stoull(word);
  }

 private:
  std::string_view header_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

inline Shape parse_shape(const HeaderReader& r, const std::string& text) {
  Shape shape;
  std::size_t start = 0;
  while (true) {
    const auto x = text.find('x', start);
    shape.push_back(r.count(text.substr(start, x == std::string::npos ? x : x - start)));
    if (x == std::string::npos) break;
    start = x + 1;
  }
  return shape;
}

}  // namespace detail

/// Parses a serialized parameter file. Nothing is returned unless the
/// whole file validates.
inline LoadedParams deserialize_params(std::string_view bytes) {
  const auto end_marker = bytes.find("\nend\n");
  if (end_marker == std::string_view::npos) {
    throw FormatError("parameter file has no header terminator (truncated or not a parameter file)");
  }
  const std::string_view header = bytes.substr(0, end_marker + 1);
  const std::string_view payload = bytes.substr(end_marker + 5);
  detail::HeaderReader r(header);

  const auto magic = r.next_line(kParamMagic, 1);
  if (magic[1] != std::to_string(kParamFormatVersion)) {
    throw FormatError("unsupported parameter format version " + magic[1]);
  }
  RoutingDims dims;
  const auto n_inp = r.next_line("n_inp", 1);
  if (n_inp[1] != "variable") dims.n_inp = r.count(n_inp[1]);
  dims.n_out = r.count(r.next_line("n_out", 1)[1]);
  dims.d_inp = r.count(r.next_line("d_inp", 1)[1]);
  dims.d_out = r.count(r.next_line("d_out", 1)[1]);
  dims.n_iters = r.count(r.next_line("n_iters", 1)[1]);
  try {
    dims.validate();
  } catch (const DimensionError& e) {
    r.fail(e.what());
  }
  const std::string mode = r.next_line("mode", 1)[1];
  if (mode != "fixed" && mode != "variable") r.fail("unknown mode " + mode);
  if (mode != to_string(mode_of(dims))) r.fail("mode " + mode + " contradicts n_inp");

  std::map<std::string, Shape> expected;
  for (auto& [name, shape] : parameter_layout(dims)) expected[name] = shape;

  struct Entry {
    Shape shape;
    std::size_t offset;
  };
  std::map<std::string, Entry> entries;
  std::size_t next_offset = 0;
  while (r.peek("tensor")) {
    const auto w = r.next_line("tensor", 4);
    const std::string& name = w[1];
    if (!expected.count(name)) r.fail("unexpected tensor " + name + " for " + mode + " mode");
    if (entries.count(name)) r.fail("tensor " + name + " appears twice");
    if (w[2] != "f32") r.fail("tensor " + name + " has unsupported element type " + w[2]);
    Shape shape = detail::parse_shape(r, w[3]);
    if (shape != expected[name]) {
      r.fail("tensor " + name + " has shape " + w[3] + ", expected " +
             shape_string(expected[name]));
    }
    const std::size_t offset = r.count(w[4]);
    if (offset != next_offset) {
      r.fail("tensor " + name + " at offset " + w[4] + ", expected " + std::to_string(next_offset));
    }
    next_offset += element_count(shape) * 4;
    entries[name] = {std::move(shape), offset};
  }
  if (entries.size() != expected.size()) r.fail("header lists " + std::to_string(entries.size()) +
                                                " tensors, " + mode + " mode needs " +
                                                std::to_string(expected.size()));
  const std::size_t payload_bytes = r.count(r.next_line("payload_bytes", 1)[1]);
  if (payload_bytes != next_offset) {
    r.fail("payload_bytes " + std::to_string(payload_bytes) + " does not match tensor sizes " +
           std::to_string(next_offset));
  }
  const std::string crc_text = r.next_line("crc32", 1)[1];
  if (crc_text.size() != 8 || crc_text.find_first_not_of("0123456789abcdef") != std::string::npos) {
    r.fail("malformed crc32 " + crc_text);
  }
  // The terminator line is outside `header`; nothing else may precede it.
  if (!r.at_end()) r.fail("unexpected lines before the header terminator");

  if (payload.size() < payload_bytes) {
    throw FormatError("parameter payload truncated: " + std::to_string(payload.size()) + " of " +
                      std::to_string(payload_bytes) + " bytes");
  }
  if (payload.size() > payload_bytes) {
    throw FormatError("parameter file has " + std::to_string(payload.size() - payload_bytes) +
                      " bytes of trailing data");
  }
  char actual_crc[9];
  std::snprintf(actual_crc, sizeof actual_crc, "%08x", unsigned(payload_crc32(payload)));
  if (crc_text != actual_crc) {
    throw FormatError("parameter payload checksum mismatch: header " + crc_text + ", payload " +
                      actual_crc);
  }

  LoadedParams out;
  out.dims = dims;
  if (dims.n_inp) {
    out.params.fixed_betas.emplace();
  } else {
    out.params.beta_generators.emplace();
  }
  out.params.for_each_tensor([&](const std::string& name, DenseTensor<float>& t) {
    const Entry& e = entries.at(name);
    t = DenseTensor<float>(e.shape);
    const unsigned char* src = reinterpret_cast<const unsigned char*>(payload.data()) + e.offset;
    for (std::size_t k = 0; k < t.size(); ++k, src += 4) {
      const std::uint32_t bits = std::uint32_t(src[0]) | std::uint32_t(src[1]) << 8 |
                                 std::uint32_t(src[2]) << 16 | std::uint32_t(src[3]) << 24;
      t.data()[k] = std::bit_cast<float>(bits);
    }
    if (!t.all_finite()) throw FormatError("tensor " + name + " holds non-finite values");
  });
  return out;
}

inline void save(const RoutingParams<float>& params, const RoutingDims& dims,
                 const std::filesystem::path& path) {
  const std::string bytes = serialize_params(params, dims);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

inline LoadedParams load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize_params(bytes);
}

}  // namespace vecroute

#endif  // VECROUTE_PARAMS_IO_HPP_

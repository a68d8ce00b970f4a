// Copyright 2026 The evdenoise Authors
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

#include "evd/nn/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "evd/error.hpp"

namespace evd::nn {
namespace {

constexpr char kMagic[4] = {'W', 'E', 'D', 'N'};

// Shortest decimal that rounds to f, read back as double: 0.05f -> 0.05.
double widen(float f) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, f);
  double d = f;
  if (ec == std::errc()) std::from_chars(buf, end, d);
  return d;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

struct Block {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

void put_block(std::string& out, const std::string& name, const std::vector<std::uint32_t>& dims,
               std::span<const float> values) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.append(name);
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) put_u32(out, d);
  for (float v : values) put_f32(out, v);
}

class Reader {
 public:
  Reader(std::string_view bytes, std::string origin) : bytes_(bytes), origin_(std::move(origin)) {}

  bool done() const { return pos_ == bytes_.size(); }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw TruncatedFile(origin_);
  }
  std::string_view bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ModelParams& params) {
  std::string out(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  const auto& cfg = params.config;
  std::vector<float> levels;
  for (const auto& l : cfg.levels) {
    levels.insert(levels.end(), {float(l.T), float(l.K), float(l.r), float(l.D)});
  }
  put_block(out, "meta.levels", {static_cast<std::uint32_t>(cfg.levels.size()), 4}, levels);
  const std::vector<float> net = {float(cfg.kernel_width), float(cfg.hyper.iterations),
                                  float(cfg.lambda_init)};
  put_block(out, "meta.net", {3}, net);
  for_each_block<float>(params, [&](const std::string& name, const std::vector<std::uint32_t>& dims,
                                    std::span<const float> v) { put_block(out, name, dims, v); });
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(out.data()), static_cast<uInt>(out.size()));
  put_u32(out, static_cast<std::uint32_t>(crc));
  return out;
}

ModelParams decode_checkpoint(std::string_view bytes, const std::string& origin) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw MagicMismatch("WEDN");
  if (bytes.size() < 12) throw TruncatedFile(origin);
  const auto body = bytes.substr(0, bytes.size() - 4);
  Reader tail(bytes.substr(bytes.size() - 4), origin);
  const auto stored = tail.u32();
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));
  if (stored != static_cast<std::uint32_t>(crc)) throw ParseError(origin, "checkpoint CRC mismatch");

  Reader in(body.substr(4), origin);
  const auto version = in.u32();
  if (version != kCheckpointVersion) {
    throw ParseError(origin, "unsupported checkpoint version " + std::to_string(version));
  }
  std::map<std::string, Block> blocks;
  while (!in.done()) {
    const auto name = in.str(in.u32());
    Block b;
    b.dims.resize(in.u32());
    std::size_t count = 1;
    for (auto& d : b.dims) {
      d = in.u32();
      count *= d;
    }
    b.values.resize(count);
    for (auto& v : b.values) v = in.f32();
    blocks[name] = std::move(b);
  }

  auto take = [&](const std::string& name) -> Block& {
    auto it = blocks.find(name);
    if (it == blocks.end()) throw ParseError(origin, "missing block '" + name + "'");
    return it->second;
  };
  NetConfig cfg;
  const auto& lv = take("meta.levels");
  if (lv.dims.size() != 2 || lv.dims[1] != 4) throw ParseError(origin, "bad meta.levels shape");
  for (std::size_t j = 0; j < lv.dims[0]; ++j) {
    const float* r = lv.values.data() + 4 * j;
    cfg.levels.push_back({static_cast<std::size_t>(r[0]), static_cast<std::size_t>(r[1]),
                          widen(r[2]), static_cast<std::size_t>(r[3])});
  }
  const auto& net = take("meta.net");
  if (net.values.size() != 3) throw ParseError(origin, "bad meta.net shape");
  cfg.kernel_width = static_cast<std::size_t>(net.values[0]);
  cfg.hyper.iterations = static_cast<std::size_t>(net.values[1]);
  cfg.lambda_init = widen(net.values[2]);

  auto params = ModelParams::zeros(cfg);
  for_each_block<float>(params, [&](const std::string& name, const std::vector<std::uint32_t>& dims,
                                    std::span<float> v) {
    const auto& b = take(name);
    if (b.dims != dims) throw ParseError(origin, "block '" + name + "' has the wrong shape");
    std::copy(b.values.begin(), b.values.end(), v.begin());
  });
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingCheckpoint(path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes, path.string());
}

}  // namespace evd::nn

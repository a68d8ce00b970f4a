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

#include "evd/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "evd/error.hpp"

namespace evd {
namespace {

constexpr char kMagic[4] = {'E', 'V', 'D', '1'};

template <class T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(u & 0xFF));
    u = static_cast<U>(u >> 8);
  }
}

template <class T>
T get_le(const char* p) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u = static_cast<U>(u | (static_cast<U>(static_cast<unsigned char>(p[i])) << (8 * i)));
  }
  return static_cast<T>(u);
}

std::string where(const std::string& origin, std::size_t line) {
  return origin + ":" + std::to_string(line);
}

template <class T>
T parse_int(std::string_view field, const std::string& loc) {
  T value{};
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  // from_chars rejects a leading '+', the text format does not.
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ParseError(loc, "bad integer '" + std::string(field) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

EventFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".bin" || ext == ".evd") ? EventFormat::Binary : EventFormat::Text;
}

std::string encode_binary(std::span<const Event> events, const SensorGeometry& geometry) {
  std::string out;
  out.reserve(kBinaryHeaderBytes + kBinaryRecordBytes * events.size());
  out.append(kMagic, 4);
  put_le<std::uint16_t>(out, geometry.width);
  put_le<std::uint16_t>(out, geometry.height);
  put_le<std::uint32_t>(out, 0);
  put_le<std::uint64_t>(out, events.size());
  for (const auto& e : events) {
    put_le<std::uint64_t>(out, e.t);
    put_le<std::uint16_t>(out, e.x);
    put_le<std::uint16_t>(out, e.y);
    put_le<std::int8_t>(out, e.p);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(e.label));
  }
  return out;
}

EventFile decode_binary(std::string_view bytes, const std::string& origin) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw MagicMismatch("EVD1");
  if (bytes.size() < kBinaryHeaderBytes) throw TruncatedFile(origin);
  EventFile file;
  const char* p = bytes.data();
  file.geometry.width = get_le<std::uint16_t>(p + 4);
  file.geometry.height = get_le<std::uint16_t>(p + 6);
  const auto count = get_le<std::uint64_t>(p + 12);
  const std::size_t available = (bytes.size() - kBinaryHeaderBytes) / kBinaryRecordBytes;
  if (count > available) throw TruncatedFile(origin);
  if (bytes.size() != kBinaryHeaderBytes + count * kBinaryRecordBytes) {
    throw ParseError(origin, "trailing bytes after " + std::to_string(count) + " records");
  }
  file.events.resize(count);
  p += kBinaryHeaderBytes;
  for (std::size_t i = 0; i < count; ++i, p += kBinaryRecordBytes) {
    auto& e = file.events[i];
    e.t = get_le<std::uint64_t>(p);
    e.x = get_le<std::uint16_t>(p + 8);
    e.y = get_le<std::uint16_t>(p + 10);
    e.p = get_le<std::int8_t>(p + 12);
    const auto label = get_le<std::uint8_t>(p + 13);
    if (label > 2) {
      throw ParseError(origin + "@" + std::to_string(kBinaryHeaderBytes + i * kBinaryRecordBytes),
                       "bad label byte");
    }
    e.label = static_cast<Label>(label);
  }
  return file;
}

std::string encode_text(std::span<const Event> events, const SensorGeometry& geometry) {
  std::ostringstream out;
  out << "# width=" << geometry.width << " height=" << geometry.height << '\n';
  for (const auto& e : events) {
    out << e.t << ',' << e.x << ',' << e.y << ',' << int{e.p};
    if (e.label == Label::Real) out << ",R";
    if (e.label == Label::Noise) out << ",N";
    out << '\n';
  }
  return out.str();
}

EventFile decode_text(std::string_view text, const std::string& origin) {
  EventFile file;
  bool have_header = false;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (line.empty()) continue;
    const auto loc = where(origin, line_no);
    if (line.front() == '#') {
      if (have_header) continue;
      line.remove_prefix(1);
      bool w = false, h = false;
      std::size_t pos = 0;
      while (pos < line.size()) {
        auto end = line.find(' ', pos);
        auto tok = trim(line.substr(pos, end == std::string_view::npos ? end : end - pos));
        pos = end == std::string_view::npos ? line.size() : end + 1;
        if (tok.starts_with("width=")) {
          file.geometry.width = parse_int<std::uint16_t>(tok.substr(6), loc);
          w = true;
        } else if (tok.starts_with("height=")) {
          file.geometry.height = parse_int<std::uint16_t>(tok.substr(7), loc);
          h = true;
        }
      }
      if (!w || !h) throw ParseError(loc, "header must be '# width=<W> height=<H>'");
      have_header = true;
      continue;
    }
    if (!have_header) throw ParseError(loc, "missing '# width=<W> height=<H>' header");

    std::string_view fields[5];
    std::size_t n = 0;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      if (n == 5) throw ParseError(loc, "too many fields");
      fields[n++] = trim(line.substr(pos, comma == std::string_view::npos ? comma : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (n < 4) throw ParseError(loc, "expected t,x,y,p[,label]");
    Event e;
    e.t = parse_int<std::uint64_t>(fields[0], loc);
    e.x = parse_int<std::uint16_t>(fields[1], loc);
    e.y = parse_int<std::uint16_t>(fields[2], loc);
    const int p = parse_int<int>(fields[3], loc);
    if (p != 1 && p != -1) throw ParseError(loc, "polarity must be -1 or 1");
    e.p = static_cast<std::int8_t>(p);
    if (n == 5) {
      if (fields[4] == "R") {
        e.label = Label::Real;
      } else if (fields[4] == "N") {
        e.label = Label::Noise;
      } else {
        throw ParseError(loc, "label must be R or N");
      }
    }
    file.events.push_back(e);
  }
  if (!have_header) throw ParseError(origin, "empty file");
  return file;
}

EventFile read_events(const std::filesystem::path& path, EventFormat format) {
  const auto bytes = read_file(path);
  return format == EventFormat::Binary ? decode_binary(bytes, path.string())
                                       : decode_text(bytes, path.string());
}

void write_events(const std::filesystem::path& path, std::span<const Event> events,
                  const SensorGeometry& geometry, EventFormat format) {
  const auto bytes =
      format == EventFormat::Binary ? encode_binary(events, geometry) : encode_text(events, geometry);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace evd

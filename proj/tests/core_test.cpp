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

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "evd/core.hpp"
#include "evd/error.hpp"
#include "evd/io.hpp"
#include "helpers.hpp"

using namespace evd;

namespace {

Event ev(std::uint64_t t, std::uint16_t x = 0, std::uint16_t y = 0, std::int8_t p = 1,
         Label l = Label::Unknown) {
  return Event{t, x, y, p, l};
}

}  // namespace

TEST(ValidateStream, EmptyStaysEmpty) {
  EXPECT_TRUE(validate_stream({}, SensorGeometry{}).empty());
}

TEST(ValidateStream, SortedInputUnchanged) {
  std::vector<Event> s{ev(1, 1, 2), ev(4, 3, 3, -1), ev(9, 127, 127)};
  EXPECT_EQ(validate_stream(s, SensorGeometry{}), s);
}

TEST(ValidateStream, ReordersAgainstNaiveSort) {
  std::vector<Event> s{ev(5, 1), ev(2, 2), ev(9, 3)};
  auto v = validate_stream(s, SensorGeometry{});
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].t, 2u);
  EXPECT_EQ(v[1].t, 5u);
  EXPECT_EQ(v[2].t, 9u);

  std::mt19937_64 rng(11);
  auto r = test::random_events(rng, 500, SensorGeometry{}, 50, false);
  auto naive = r;
  // insertion sort is stable by construction
  for (std::size_t i = 1; i < naive.size(); ++i) {
    for (std::size_t j = i; j > 0 && naive[j - 1].t > naive[j].t; --j) std::swap(naive[j - 1], naive[j]);
  }
  EXPECT_EQ(validate_stream(r, SensorGeometry{}), naive);
}

TEST(ValidateStream, Idempotent) {
  std::mt19937_64 rng(3);
  auto r = test::random_events(rng, 300, SensorGeometry{}, 100, false);
  auto once = validate_stream(r, SensorGeometry{});
  EXPECT_EQ(validate_stream(once, SensorGeometry{}), once);
}

TEST(ValidateStream, ReportsOffendingIndex) {
  SensorGeometry g;
  g.width = 10;
  g.height = 10;
  try {
    validate_stream({ev(0, 1, 1), ev(1, 10, 0)}, g);
    FAIL() << "expected OutOfBounds";
  } catch (const OutOfBounds& e) {
    EXPECT_EQ(e.index(), 1u);
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
  }
  EXPECT_THROW(validate_stream({ev(0, 1, 1, 0)}, g), NegativePolarityEncoding);
  EXPECT_THROW(validate_stream({ev(0, 1, 1, 2)}, g), NegativePolarityEncoding);
}

TEST(PartitionWindows, Sizes) {
  std::vector<Event> s;
  for (std::uint64_t t = 0; t < 10; ++t) s.push_back(ev(t));
  auto w = partition_windows(s, 4);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0].size(), 4u);
  EXPECT_EQ(w[1].size(), 4u);
  EXPECT_EQ(w[2].size(), 2u);
  EXPECT_FALSE(w[1].tail);
  EXPECT_TRUE(w[2].tail);
  EXPECT_EQ(w[2].offset, 8u);
}

TEST(PartitionWindows, SingleWindowMean) {
  std::vector<Event> s{ev(1), ev(2), ev(4), ev(9)};
  auto w = partition_windows(s, 4);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_DOUBLE_EQ(w[0].t_mu, 4.0);
  EXPECT_EQ(w[0].t_min, 1u);
  EXPECT_EQ(w[0].t_max, 9u);
  EXPECT_FALSE(w[0].tail);
}

TEST(PartitionWindows, MeanWithinBoundsAndConcatenation) {
  std::mt19937_64 rng(5);
  auto s = test::random_events(rng, 4096, SensorGeometry{});
  auto ws = partition_windows(s, 300);
  std::vector<Event> joined;
  for (const auto& w : ws) {
    long double sum = 0;
    for (const auto& e : w.events) sum += e.t;
    const double direct = double(sum / w.events.size());
    EXPECT_NEAR(w.t_mu, direct, 1e-6);
    EXPECT_LE(double(w.t_min), w.t_mu);
    EXPECT_LE(w.t_mu, double(w.t_max));
    joined.insert(joined.end(), w.events.begin(), w.events.end());
  }
  EXPECT_EQ(joined, s);
  EXPECT_THROW(partition_windows(s, 0), std::invalid_argument);
}

TEST(MeanTimestamp, LargeTimestampsStayExact) {
  const std::uint64_t base = (1ULL << 50);
  std::vector<Event> s{ev(base + 1), ev(base + 2), ev(base + 4)};
  EXPECT_NEAR(mean_timestamp(s) - double(base), 7.0 / 3.0, 0.25);
}

TEST(Io, TextLineParse) {
  auto f = decode_text("# width=128 height=128\n1500,10,20,1,R\n");
  ASSERT_EQ(f.events.size(), 1u);
  EXPECT_EQ(f.events[0], (Event{1500, 10, 20, 1, Label::Real}));
  EXPECT_EQ(f.geometry.width, 128);
}

TEST(Io, TextErrorsCarryLine) {
  try {
    decode_text("# width=4 height=4\n1,1,1,1\n2,1,x,1\n", "f.txt");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("f.txt:3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(decode_text("1,1,1,1\n"), ParseError);
  EXPECT_THROW(decode_text("# width=4 height=4\n1,1,1,0\n"), ParseError);
  EXPECT_THROW(decode_text("# width=4 height=4\n1,1,1,1,Q\n"), ParseError);
}

TEST(Io, BinaryRoundTrip) {
  std::mt19937_64 rng(8);
  SensorGeometry g;
  auto s = test::random_events(rng, 1000, g);
  test::TempDir dir("io");
  write_events(dir / "a.bin", s, g);
  auto back = read_events(dir / "a.bin");
  EXPECT_EQ(back.events, s);
  EXPECT_EQ(back.geometry.width, g.width);
  EXPECT_EQ(std::filesystem::file_size(dir / "a.bin"), 20u + 14u * s.size());
}

TEST(Io, TextRoundTrip) {
  std::mt19937_64 rng(9);
  SensorGeometry g;
  g.width = 346;
  g.height = 260;
  auto s = test::random_events(rng, 700, g);
  test::TempDir dir("io");
  write_events(dir / "a.txt", s, g);
  auto back = read_events(dir / "a.txt");
  EXPECT_EQ(back.events, s);
  EXPECT_EQ(back.geometry.width, 346);
  EXPECT_EQ(back.geometry.height, 260);
}

TEST(Io, EmptyBinaryIsHeaderOnly) {
  test::TempDir dir("io");
  write_events(dir / "e.bin", std::vector<Event>{}, SensorGeometry{});
  EXPECT_EQ(std::filesystem::file_size(dir / "e.bin"), 20u);
  EXPECT_TRUE(read_events(dir / "e.bin").events.empty());
}

TEST(Io, DeterministicBytes) {
  std::mt19937_64 rng(10);
  auto s = test::random_events(rng, 50, SensorGeometry{});
  test::TempDir dir("io");
  write_events(dir / "a.bin", s, SensorGeometry{});
  write_events(dir / "b.bin", s, SensorGeometry{});
  EXPECT_EQ(test::slurp(dir / "a.bin"), test::slurp(dir / "b.bin"));
  write_events(dir / "a.txt", s, SensorGeometry{});
  write_events(dir / "b.txt", s, SensorGeometry{});
  EXPECT_EQ(test::slurp(dir / "a.txt"), test::slurp(dir / "b.txt"));
}

TEST(Io, BinaryLayoutLittleEndian) {
  SensorGeometry g;
  g.width = 0x0102;
  g.height = 0x0304;
  auto bytes = encode_binary(std::vector<Event>{Event{0x1122334455667788ULL, 5, 6, -1, Label::Noise}}, g);
  ASSERT_EQ(bytes.size(), 34u);
  EXPECT_EQ(bytes.substr(0, 4), "EVD1");
  EXPECT_EQ(std::uint8_t(bytes[4]), 0x02);
  EXPECT_EQ(std::uint8_t(bytes[5]), 0x01);
  EXPECT_EQ(std::uint8_t(bytes[12]), 1);  // count low byte
  EXPECT_EQ(std::uint8_t(bytes[20]), 0x88);
  EXPECT_EQ(std::uint8_t(bytes[27]), 0x11);
  EXPECT_EQ(std::uint8_t(bytes[28]), 5);
  EXPECT_EQ(std::int8_t(bytes[32]), -1);
  EXPECT_EQ(std::uint8_t(bytes[33]), 2);
}

TEST(Io, CorruptMagicAndTruncation) {
  auto bytes = encode_binary(std::vector<Event>{Event{1, 1, 1, 1, Label::Real}}, SensorGeometry{});
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_binary(bad), MagicMismatch);
  EXPECT_THROW(decode_binary(bytes.substr(0, bytes.size() - 1)), TruncatedFile);
  EXPECT_THROW(decode_binary(bytes.substr(0, 10)), TruncatedFile);
  EXPECT_THROW(decode_binary(bytes + "z"), ParseError);
  test::TempDir dir("io");
  EXPECT_THROW(read_events(dir / "missing.bin"), IoError);
}

TEST(Io, FormatFromExtension) {
  EXPECT_EQ(format_from_path("a.bin"), EventFormat::Binary);
  EXPECT_EQ(format_from_path("a.evd"), EventFormat::Binary);
  EXPECT_EQ(format_from_path("a.txt"), EventFormat::Text);
  EXPECT_EQ(format_from_path("a.csv"), EventFormat::Text);
}

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

#include <sstream>

#include "cli.hpp"
#include "evd/io.hpp"
#include "evd/nn/checkpoint.hpp"
#include "helpers.hpp"

using namespace evd;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  test::TempDir dir{"cli"};
  std::string path(const std::string& name) const { return (dir / name).string(); }

  std::string small_scene(const std::string& name, std::uint64_t seed = 1) {
    auto r = run({"simulate", "--out", path(name), "--seed", std::to_string(seed), "--width", "48", "--height",
                  "48", "--duration-us", "60000", "--velocity", "150", "--angle", "30", "--kind", "moving_disk"});
    EXPECT_EQ(r.code, 0) << r.err;
    return path(name);
  }

  std::string noisy_scene(const std::string& name) {
    const auto clean = small_scene("clean_" + name);
    auto r = run({"inject-noise", "--in", clean, "--out", path(name), "--ratio", "1", "--seed", "5"});
    EXPECT_EQ(r.code, 0) << r.err;
    return path(name);
  }
};

}  // namespace

TEST_F(Cli, SimulateWritesReadableDeterministicStreams) {
  const auto a = small_scene("a.bin", 3);
  const auto b = small_scene("b.bin", 3);
  auto file = read_events(a);
  EXPECT_GT(file.events.size(), 0u);
  EXPECT_EQ(file.geometry.width, 48);
  EXPECT_EQ(test::slurp(a), test::slurp(b));
  EXPECT_TRUE(std::filesystem::exists(a + ".config.ini"));
  for (const auto& e : file.events) EXPECT_EQ(e.label, Label::Real);
}

TEST_F(Cli, ZeroVelocityIsADomainError) {
  auto r = run({"simulate", "--out", path("s.bin"), "--velocity", "0"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"simulate"}).code, 1);
  EXPECT_EQ(run({"denoise", "--in", path("missing.bin"), "--out", path("o.bin")}).code, 1);
  const auto s = small_scene("s.bin");
  EXPECT_EQ(run({"denoise", "--in", s, "--out", path("o.bin"), "--filter", "median"}).code, 1);
  EXPECT_EQ(run({"denoise", "--in", s, "--out", path("o.bin"), "--filter", "wednet"}).code, 1);
  EXPECT_EQ(run({"denoise", "--in", s, "--out", path("o.bin"), "--filter", "wednet", "--checkpoint",
                 path("none.wdn")})
                .code,
            1);
  EXPECT_EQ(run({"inject-noise", "--in", s, "--out", path("n.bin")}).code, 1);
  EXPECT_EQ(run({"bench", "--in", s, "--reps", "2"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, RefractoryFilterKeepsDistinctPixels) {
  std::vector<Event> ev;
  SensorGeometry g;
  g.width = g.height = 16;
  for (std::uint16_t i = 0; i < 200; ++i) ev.push_back(Event{std::uint64_t(i) * 3, std::uint16_t(i % 16), std::uint16_t(i / 16), 1});
  write_events(path("distinct.txt"), ev, g);
  auto r = run({"denoise", "--in", path("distinct.txt"), "--out", path("rp.txt"), "--filter", "rp"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto out = read_events(path("rp.txt"));
  ASSERT_EQ(out.events.size(), ev.size());
  for (const auto& e : out.events) EXPECT_EQ(e.label, Label::Real);
}

TEST_F(Cli, HugeTemporalBoundKeepsEverything) {
  const auto s = noisy_scene("n.bin");
  auto r = run({"denoise", "--in", s, "--out", path("tw.bin"), "--filter", "tw", "--t-lim", "1e15"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto out = read_events(path("tw.bin"));
  EXPECT_EQ(out.events.size(), read_events(s).events.size());
  for (const auto& e : out.events) EXPECT_EQ(e.label, Label::Real);
  EXPECT_NE(r.out.find("SNR_dB 0.0000"), std::string::npos) << r.out;
}

TEST_F(Cli, TrainWithoutEpochsSavesInitialisation) {
  const auto s = noisy_scene("n.bin");
  auto r = run({"train", "--train", s, "--out", path("m.wdn"), "--epochs", "0", "--net", "tiny", "--seed",
                "11", "--window", "256"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto saved = nn::load_checkpoint(path("m.wdn"));
  EXPECT_EQ(nn::encode_checkpoint(saved), nn::encode_checkpoint(nn::init_params<float>(nn::tiny_config(), 11)));

  auto d = run({"denoise", "--in", s, "--out", path("w.bin"), "--filter", "wednet", "--checkpoint",
                path("m.wdn"), "--window", "256", "--threads", "2"});
  ASSERT_EQ(d.code, 0) << d.err;
  EXPECT_EQ(read_events(path("w.bin")).events.size(), read_events(s).events.size());
}

TEST_F(Cli, TrainIsReproducible) {
  const auto s = noisy_scene("n.bin");
  for (const char* name : {"a.wdn", "b.wdn"}) {
    auto r = run({"train", "--train", s, "--val", s, "--out", path(name), "--epochs", "2", "--net", "tiny",
                  "--window", "256", "--history", path(std::string(name) + ".csv"), "--quiet"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(test::slurp(path("a.wdn")), test::slurp(path("b.wdn")));
  EXPECT_EQ(test::slurp(path("a.wdn.csv")), test::slurp(path("b.wdn.csv")));
  EXPECT_EQ(test::slurp(path("a.wdn.csv")).rfind("epoch,train_loss,val_loss,val_snr_db\n1,", 0), 0u);
}

TEST_F(Cli, EvalReportsRawSnrZeroAtEqualCounts) {
  const auto s = noisy_scene("n.bin");
  auto r = run({"eval", "--in", s, "--methods", "raw", "baf", "--out", path("e.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("raw,"), std::string::npos);
  EXPECT_NE(r.out.find(",0.0000,0.500000,1.000000,"), std::string::npos) << r.out;
  EXPECT_EQ(test::slurp(path("e.csv")), r.out);
}

TEST_F(Cli, EvalWithoutGroundTruthOmitsSnr) {
  auto file = read_events(noisy_scene("n.bin"));
  for (auto& e : file.events) e.label = Label::Unknown;
  write_events(path("u.bin"), file.events, file.geometry);
  auto r = run({"eval", "--in", path("u.bin"), "--methods", "baf"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("method,events,real,noise\nbaf,", 0), 0u) << r.out;
  EXPECT_EQ(r.out.find("SNR_dB"), std::string::npos);
  EXPECT_NE(r.out.find("SNR omitted"), std::string::npos);
}

TEST_F(Cli, BenchSingleMethod) {
  const auto s = noisy_scene("n.bin");
  auto r = run({"bench", "--in", s, "--methods", "nnb", "--out", path("b.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = test::slurp(path("b.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_NE(csv.find("\nnnb,"), std::string::npos);
}

TEST_F(Cli, ConfigFileWithFlagOverrides) {
  test::spit(path("c.ini"), "# scene\nseed = 9\nkind = moving_disk\nsize = 20\nwidth=48\nheight=48\nduration-us=40000\n");
  auto r = run({"simulate", "--out", path("a.txt"), "--config", path("c.ini"), "--size", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto echoed = test::slurp(path("a.txt.config.ini"));
  EXPECT_NE(echoed.find("seed=9"), std::string::npos);
  EXPECT_NE(echoed.find("kind=\"moving_disk\""), std::string::npos);
  EXPECT_NE(echoed.find("size=10"), std::string::npos);

  // the echo is itself a valid config
  r = run({"simulate", "--config", path("a.txt.config.ini"), "--out", path("b.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(test::slurp(path("a.txt")), test::slurp(path("b.txt")));

  test::spit(path("bad.ini"), "colour=blue\n");
  EXPECT_EQ(run({"simulate", "--out", path("x.txt"), "--config", path("bad.ini")}).code, 1);
}

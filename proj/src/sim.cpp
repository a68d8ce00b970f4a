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

#include "evd/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "evd/error.hpp"

namespace evd {
namespace {

// Tolerance on the comparator so that a change of exactly theta still fires
// after the round trip through log().
constexpr double kCrossingSlack = 1e-9;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double rect_coverage(double px, double py, double x0, double x1, double y0, double y1) {
  const double ox = std::max(0.0, std::min(px + 1.0, x1) - std::max(px, x0));
  const double oy = std::max(0.0, std::min(py + 1.0, y1) - std::max(py, y0));
  return ox * oy;
}

double disk_coverage(double px, double py, double cx, double cy, double radius) {
  const double dx = px + 0.5 - cx;
  const double dy = py + 0.5 - cy;
  return std::clamp(radius - std::sqrt(dx * dx + dy * dy) + 0.5, 0.0, 1.0);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const KeyValues& kv, const std::string& key, double fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for '" + key + "': " + it->second);
  }
}

}  // namespace

std::uint64_t rng_key(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

SceneKind parse_scene_kind(const std::string& name) {
  if (name == "moving_bar" || name == "bar") return SceneKind::MovingBar;
  if (name == "moving_disk" || name == "disk") return SceneKind::MovingDisk;
  if (name == "two_objects") return SceneKind::TwoObjects;
  throw ConfigError("unknown scene kind '" + name + "'");
}

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::MovingBar: return "moving_bar";
    case SceneKind::MovingDisk: return "moving_disk";
    case SceneKind::TwoObjects: return "two_objects";
  }
  return "?";
}

void SceneSpec::check() const {
  if (duration_us == 0) throw ConfigError("scene duration must be positive");
  if (!(contrast >= 1.0)) throw ConfigError("scene contrast must be >= 1");
  if (!(object_size > 0.0)) throw ConfigError("object size must be positive");
  if (!(frame_rate > 0.0)) throw ConfigError("frame rate must be positive");
  if (!(threshold_mismatch >= 0.0)) throw ConfigError("threshold mismatch must be >= 0");
  const double step = std::hypot(vx, vy) / frame_rate;
  if (!(step <= 1.0)) {
    throw ConfigError("frame rate too low: object moves " + std::to_string(step) +
                      " pixels per step");
  }
}

void NoiseSpec::check() const {
  if (!(eta >= 0.0)) throw ConfigError("noise rate must be >= 0");
  if (ratio && !(*ratio >= 0.0)) throw ConfigError("noise ratio must be >= 0");
  if (!(dead_time_us >= 0.0)) throw ConfigError("dead time must be >= 0");
}

double scene_intensity(const SceneSpec& scene, const SensorGeometry& geometry, int px, int py,
                       double t_us) {
  constexpr double kBackground = 1.0;
  const double a = geometry.gain_a;
  const double b = geometry.offset_b;
  const double object = (scene.contrast * (a * kBackground + b) - b) / a;

  const double cx0 = std::isnan(scene.center_x) ? geometry.width / 2.0 : scene.center_x;
  const double cy0 = std::isnan(scene.center_y) ? geometry.height / 2.0 : scene.center_y;
  const double dt = (t_us - scene.duration_us / 2.0) * 1e-6;

  auto bar = [&](double cx, double cy) {
    const double hw = scene.object_size / 2.0;
    const double hh = geometry.height / 4.0;
    return rect_coverage(px, py, cx - hw, cx + hw, cy - hh, cy + hh);
  };
  auto disk = [&](double cx, double cy) {
    return disk_coverage(px, py, cx, cy, scene.object_size / 2.0);
  };

  double coverage = 0.0;
  switch (scene.kind) {
    case SceneKind::MovingBar:
      coverage = bar(cx0 + scene.vx * dt, cy0 + scene.vy * dt);
      break;
    case SceneKind::MovingDisk:
      coverage = disk(cx0 + scene.vx * dt, cy0 + scene.vy * dt);
      break;
    case SceneKind::TwoObjects: {
      const double off = geometry.height / 6.0;
      coverage = std::min(1.0, bar(cx0 + scene.vx * dt, cy0 - off + scene.vy * dt) +
                                   disk(cx0 - scene.vx * dt, cy0 + off - scene.vy * dt));
      break;
    }
  }
  return kBackground + coverage * (object - kBackground);
}

std::vector<Event> simulate_events(const SceneSpec& scene, const SensorGeometry& geometry,
                                   std::uint64_t seed, bool reject_degenerate) {
  geometry.check();
  scene.check();
  if (scene.is_static()) {
    if (reject_degenerate) throw DegenerateScene();
    return {};
  }

  const auto steps = static_cast<std::size_t>(
      std::ceil(static_cast<double>(scene.duration_us) * scene.frame_rate * 1e-6));
  const double step_us = static_cast<double>(scene.duration_us) / static_cast<double>(steps);
  const double a = geometry.gain_a;
  const double b = geometry.offset_b;

  std::vector<Event> out;
  std::vector<double> level(steps + 1);
  for (int py = 0; py < geometry.height; ++py) {
    for (int px = 0; px < geometry.width; ++px) {
      double theta = geometry.threshold_theta;
      if (scene.threshold_mismatch > 0.0) {
        std::mt19937_64 rng(rng_key(seed, std::size_t(py) * geometry.width + px));
        std::normal_distribution<double> spread(1.0, scene.threshold_mismatch);
        theta *= std::max(0.1, spread(rng));
      }
      bool changes = false;
      for (std::size_t k = 0; k <= steps; ++k) {
        level[k] = std::log(a * scene_intensity(scene, geometry, px, py, k * step_us) + b);
        changes = changes || level[k] != level[0];
      }
      if (!changes) continue;

      double reference = level[0];
      for (std::size_t k = 1; k <= steps; ++k) {
        const double omega = level[k] - reference;
        const auto crossings = static_cast<long>(std::floor((std::abs(omega) + kCrossingSlack) / theta));
        if (crossings <= 0) continue;
        const std::int8_t polarity = omega > 0 ? 1 : -1;
        const double t0 = (k - 1) * step_us;
        for (long c = 0; c < crossings; ++c) {
          Event e;
          e.t = static_cast<std::uint64_t>(
              std::floor(t0 + (c + 1) * step_us / static_cast<double>(crossings + 1)));
          e.x = static_cast<std::uint16_t>(px);
          e.y = static_cast<std::uint16_t>(py);
          e.p = polarity;
          e.label = Label::Real;
          out.push_back(e);
        }
        reference += polarity * crossings * theta;
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Event& l, const Event& r) { return l.t < r.t; });
  if (out.empty() && reject_degenerate) throw DegenerateScene();
  return out;
}

std::vector<Event> inject_ba_noise(std::span<const Event> stream, const NoiseSpec& spec,
                                   const SensorGeometry& geometry, std::uint64_t duration_us) {
  spec.check();
  std::vector<Event> out(stream.begin(), stream.end());
  if (duration_us == 0) return out;
  const double duration = static_cast<double>(duration_us);

  // Last real event per pixel, for the optional dead time.
  std::vector<std::vector<std::uint64_t>> real_times;
  if (spec.dead_time_us > 0.0) {
    real_times.resize(geometry.pixel_count());
    for (const auto& e : stream) {
      if (e.label != Label::Noise) real_times[std::size_t(e.y) * geometry.width + e.x].push_back(e.t);
    }
  }
  auto suppressed = [&](std::size_t pixel, std::uint64_t t) {
    if (real_times.empty()) return false;
    const auto& times = real_times[pixel];
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return false;
    return static_cast<double>(t - *std::prev(it)) < spec.dead_time_us;
  };
  auto make_noise = [&](std::size_t pixel, std::uint64_t t, std::mt19937_64& rng) {
    Event e;
    e.t = t;
    e.x = static_cast<std::uint16_t>(pixel % geometry.width);
    e.y = static_cast<std::uint16_t>(pixel / geometry.width);
    e.p = (rng() & 1U) ? 1 : -1;
    e.label = Label::Noise;
    return e;
  };
  std::uniform_real_distribution<double> uniform_t(0.0, duration);
  auto draw_t = [&](std::mt19937_64& rng) {
    return std::min(duration_us - 1, static_cast<std::uint64_t>(uniform_t(rng)));
  };

  if (spec.ratio) {
    const auto real = static_cast<std::size_t>(
        std::count_if(stream.begin(), stream.end(), [](const Event& e) { return e.label != Label::Noise; }));
    const auto target = static_cast<std::size_t>(std::llround(*spec.ratio * static_cast<double>(real)));
    std::mt19937_64 rng(rng_key(spec.seed, geometry.pixel_count()));
    std::uniform_int_distribution<std::size_t> uniform_pixel(0, geometry.pixel_count() - 1);
    std::size_t made = 0;
    std::size_t attempts = 0;
    while (made < target) {
      if (++attempts > 1000 * (target + 1)) throw Error(ErrorKind::Domain, "dead time leaves no room for noise");
      const auto pixel = uniform_pixel(rng);
      const auto t = draw_t(rng);
      if (suppressed(pixel, t)) continue;
      out.push_back(make_noise(pixel, t, rng));
      ++made;
    }
  } else if (spec.eta > 0.0) {
    const double mean = spec.eta * duration * 1e-6;
    for (std::size_t pixel = 0; pixel < geometry.pixel_count(); ++pixel) {
      std::mt19937_64 rng(rng_key(spec.seed, pixel));
      std::poisson_distribution<std::uint64_t> count(mean);
      const auto n = count(rng);
      for (std::uint64_t i = 0; i < n; ++i) {
        const auto t = draw_t(rng);
        if (!suppressed(pixel, t)) out.push_back(make_noise(pixel, t, rng));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Event& l, const Event& r) { return l.t < r.t; });
  return out;
}

double poisson_count_pmf(std::uint64_t n, double eta, double t_seconds) {
  const double mean = eta * t_seconds;
  if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
  const double nd = static_cast<double>(n);
  return std::exp(nd * std::log(mean) - mean - std::lgamma(nd + 1.0));
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(line_no), "expected key=value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

SceneSpec scene_from_config(const KeyValues& kv, SceneSpec base) {
  if (auto it = kv.find("kind"); it != kv.end()) base.kind = parse_scene_kind(it->second);
  base.vx = to_double(kv, "vx", base.vx);
  base.vy = to_double(kv, "vy", base.vy);
  base.object_size = to_double(kv, "object_size", base.object_size);
  base.contrast = to_double(kv, "contrast", base.contrast);
  base.duration_us = static_cast<std::uint64_t>(to_double(kv, "duration_us", double(base.duration_us)));
  base.frame_rate = to_double(kv, "frame_rate", base.frame_rate);
  base.center_x = to_double(kv, "center_x", base.center_x);
  base.center_y = to_double(kv, "center_y", base.center_y);
  base.threshold_mismatch = to_double(kv, "threshold_mismatch", base.threshold_mismatch);
  return base;
}

NoiseSpec noise_from_config(const KeyValues& kv, NoiseSpec base) {
  base.eta = to_double(kv, "eta", base.eta);
  if (kv.count("ratio")) base.ratio = to_double(kv, "ratio", 0.0);
  base.seed = static_cast<std::uint64_t>(to_double(kv, "seed", double(base.seed)));
  base.dead_time_us = to_double(kv, "dead_time_us", base.dead_time_us);
  return base;
}

}  // namespace evd

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

#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include "evd/bec.hpp"
#include "evd/error.hpp"
#include "evd/eval.hpp"
#include "evd/io.hpp"
#include "evd/nn/checkpoint.hpp"
#include "evd/nn/train.hpp"
#include "evd/parallel.hpp"
#include "evd/pipeline.hpp"
#include "evd/sim.hpp"

namespace evd::cli {
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kFilters = {"tw", "baf", "nnb", "rp", "wednet"};

// Options shared by the subcommands that touch windows or filters.
struct Common {
  std::uint64_t seed = 1;
  std::size_t threads = default_threads();
  double snr_factor = 20.0;
  PipelineConfig pipeline;
  std::optional<double> t_lim;
  FilterConfig filters;
  std::string checkpoint;
};

void add_seed_threads(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "random seed")->capture_default_str();
  app->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--config", "key=value file; command-line flags win")->check(CLI::ExistingFile);
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return v;
}

// Turns `--config FILE` into ordinary flags placed in front of the user's own
// arguments, skipping keys the command line already sets. The echoed
// *.config.ini files are accepted as input.
std::vector<std::string> expand_config(CLI::App& app, const std::vector<std::string>& args) {
  if (args.empty()) return args;
  CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args[0]);
  } catch (const CLI::OptionNotFound&) {
    return args;
  }
  std::string path;
  std::set<std::string> given;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const auto& a = args[i];
    if (!a.starts_with("--")) continue;
    const auto eq = a.find('=');
    const auto name = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
    given.insert(name);
    if (name != "config") continue;
    if (eq != std::string::npos) path = a.substr(eq + 1);
    else if (i + 1 < args.size()) path = args[i + 1];
  }
  if (path.empty() || !fs::exists(path)) return args;

  std::vector<std::string> injected;
  for (const auto& [key, raw] : read_key_values(path)) {
    const auto value = unquote(raw);
    if (key == "config" || given.count(key) || value.empty()) continue;
    const auto* opt = sub->get_option_no_throw("--" + key);
    if (!opt) throw ConfigError(path + ": unknown key '" + key + "'");
    if (opt->get_expected_max() == 0) {
      if (value == "true" || value == "1") injected.push_back("--" + key);
      continue;
    }
    injected.push_back("--" + key);
    if (opt->get_expected_max() > 1) {
      std::string flat = value;
      for (char& ch : flat)
        if (ch == '[' || ch == ']' || ch == ',') ch = ' ';
      std::istringstream parts(flat);
      for (std::string v; parts >> v;) injected.push_back(unquote(v));
    } else {
      injected.push_back(value);
    }
  }
  std::vector<std::string> out{args[0]};
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

void add_pipeline(CLI::App* app, Common& c) {
  app->add_option("--window", c.pipeline.window, "events per window")->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--L", c.pipeline.tw.L, "events per transient movement")->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--t-lim", c.t_lim, "explicit temporal bound in microseconds");
  app->add_option("--bec-tau", c.pipeline.bec_tau, "minimum bone domain size")->capture_default_str();
}

void add_filters(CLI::App* app, Common& c) {
  app->add_option("--baf-dt", c.filters.baf_dt)->capture_default_str();
  app->add_option("--radius", c.filters.radius)->capture_default_str();
  app->add_option("--nnb-count", c.filters.nnb_count)->capture_default_str();
  app->add_option("--nnb-dt", c.filters.nnb_dt)->capture_default_str();
  app->add_option("--rp-period", c.filters.rp_period)->capture_default_str();
  app->add_option("--snr-factor", c.snr_factor, "dB factor in front of log10")->capture_default_str();
}

void finish_pipeline(Common& c) {
  c.pipeline.tw.explicit_t_lim = c.t_lim;
  c.filters.check();
  if (c.t_lim && !(*c.t_lim >= 0)) throw ConfigError("--t-lim must be non-negative");
}

// The echoed configuration sits next to the primary output.
void echo_config(const CLI::App* app, const fs::path& output) {
  std::ofstream f(fs::path(output).concat(".config.ini"));
  if (!f) throw IoError("cannot write " + output.string() + ".config.ini");
  f << app->config_to_str(true, false);
}

Denoiser make_denoiser(const std::string& name, const SensorGeometry& g, const Common& c,
                       const nn::ModelParams* params, std::size_t threads) {
  if (name == "raw") {
    return {name, 1, [](std::span<const Event> s) { return std::vector<Label>(s.size(), Label::Real); }};
  }
  if (name == "tw") {
    return {name, c.pipeline.window, [&c](std::span<const Event> s) { return tw_denoise(s, c.pipeline); }};
  }
  if (name == "baf") {
    return {name, 1, [&g, &c](std::span<const Event> s) { return baf_filter(s, g, c.filters); }};
  }
  if (name == "nnb") {
    return {name, 1, [&g, &c](std::span<const Event> s) { return nnb_filter(s, g, c.filters); }};
  }
  if (name == "rp") {
    return {name, 1, [&g, &c](std::span<const Event> s) { return rp_filter(s, g, c.filters); }};
  }
  if (name == "wednet") {
    if (!params) throw ConfigError("wednet needs --checkpoint");
    return {name, c.pipeline.window, [&g, &c, params, threads](std::span<const Event> s) {
              return wednet_denoise(s, g, *params, c.pipeline, threads);
            }};
  }
  throw ConfigError("unknown filter '" + name + "'");
}

std::optional<nn::ModelParams> maybe_checkpoint(const std::string& path, bool needed) {
  if (path.empty()) {
    if (needed) throw ConfigError("wednet needs --checkpoint");
    return std::nullopt;
  }
  return nn::load_checkpoint(path);
}

std::string fmt(double v, int precision) {
  if (std::isnan(v)) return "-";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

nn::NetConfig net_preset(const std::string& name) {
  if (name == "full") return nn::full_config();
  if (name == "tiny") return nn::tiny_config();
  return nn::desk_config();
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string out;
  std::string kind = "moving_bar";
  std::optional<double> velocity;
  double angle_deg = 0.0;
  SceneSpec scene;
  SensorGeometry geometry;
};

void cmd_simulate(const CLI::App* app, SimulateArgs& a, std::ostream& out) {
  a.scene.kind = parse_scene_kind(a.kind);
  if (a.velocity) {
    const double rad = a.angle_deg * std::numbers::pi / 180.0;
    a.scene.vx = *a.velocity * std::cos(rad);
    a.scene.vy = *a.velocity * std::sin(rad);
    if (*a.velocity == 0.0) a.scene.vy = a.scene.vx = 0.0;
  }
  a.geometry.check();
  a.scene.check();
  auto events = simulate_events(a.scene, a.geometry, a.common.seed, true);
  write_events(a.out, events, a.geometry);
  echo_config(app, a.out);
  out << "wrote " << events.size() << " events to " << a.out << '\n';
}

// inject-noise --------------------------------------------------------------

struct InjectArgs {
  Common common;
  std::string in, out;
  std::optional<double> eta, ratio;
  double dead_time_us = 0.0;
  std::optional<std::uint64_t> duration_us;
};

void cmd_inject(const CLI::App* app, InjectArgs& a, std::ostream& out) {
  if (a.eta.has_value() == a.ratio.has_value()) throw ConfigError("give exactly one of --eta and --ratio");
  auto file = read_events(a.in);
  auto stream = validate_stream(std::move(file.events), file.geometry);
  NoiseSpec spec;
  spec.seed = a.common.seed;
  spec.dead_time_us = a.dead_time_us;
  if (a.eta) spec.eta = *a.eta;
  spec.ratio = a.ratio;
  spec.check();
  const std::uint64_t duration =
      a.duration_us.value_or(stream.empty() ? 0 : stream.back().t + 1);
  auto noisy = inject_ba_noise(stream, spec, file.geometry, duration);
  write_events(a.out, noisy, file.geometry);
  echo_config(app, a.out);
  out << "wrote " << noisy.size() << " events (" << noisy.size() - stream.size() << " noise) to " << a.out
      << '\n';
}

// denoise -------------------------------------------------------------------

struct DenoiseArgs {
  Common common;
  std::string in, out;
  std::string filter = "baf";
};

void print_metrics(std::ostream& out, std::span<const Label> truth, std::span<const Label> pred,
                   double factor) {
  const auto c = confusion_metrics(pred, truth);
  double snr = std::numeric_limits<double>::quiet_NaN();
  try {
    snr = snr_db(truth, pred, factor);
  } catch (const EmptyStream&) {
  }
  out << "SNR_dB " << fmt(snr, 4) << "  precision " << fmt(c.precision, 6) << "  recall "
      << fmt(c.recall, 6) << "  f1 " << fmt(c.f1, 6) << '\n';
}

void cmd_denoise(const CLI::App* app, DenoiseArgs& a, std::ostream& out) {
  finish_pipeline(a.common);
  auto params = maybe_checkpoint(a.common.checkpoint, a.filter == "wednet");
  auto file = read_events(a.in);
  auto stream = validate_stream(std::move(file.events), file.geometry);
  const auto d = make_denoiser(a.filter, file.geometry, a.common, params ? &*params : nullptr,
                               a.common.threads);
  const auto result = run_denoiser(d, stream);
  const auto truth = labels_of(stream);
  std::vector<Event> labelled = stream;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < labelled.size(); ++i) {
    labelled[i].label = result.labels[i];
    kept += result.labels[i] == Label::Real;
  }
  write_events(a.out, labelled, file.geometry);
  echo_config(app, a.out);
  out << a.filter << ": " << stream.size() << " events, " << kept << " Real, " << stream.size() - kept
      << " Noise\n";
  if (has_ground_truth(stream)) print_metrics(out, truth, result.labels, a.common.snr_factor);
}

// train ---------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::vector<std::string> train, validation;
  std::string out, history;
  std::string net = "desk";
  std::string weighting = "balanced";
  nn::TrainConfig config;
  bool quiet = false;
};

std::vector<PreparedWindow> load_windows(const std::vector<std::string>& paths, const Common& c,
                                         const nn::NetConfig& net) {
  std::vector<PreparedWindow> all;
  for (const auto& p : paths) {
    auto file = read_events(p);
    auto stream = validate_stream(std::move(file.events), file.geometry);
    if (!has_ground_truth(stream)) throw ConfigError(p + " has no ground-truth labels");
    auto w = prepare_windows(stream, file.geometry, c.pipeline, net, c.threads);
    std::move(w.begin(), w.end(), std::back_inserter(all));
  }
  return all;
}

void cmd_train(const CLI::App* app, TrainArgs& a, std::ostream& out) {
  finish_pipeline(a.common);
  const auto net = net_preset(a.net);
  net.check();
  a.config.seed = a.common.seed;
  a.config.threads = a.common.threads;
  a.config.weighting = a.weighting == "uniform" ? nn::LossWeighting::Uniform : nn::LossWeighting::Balanced;
  a.config.check();
  const auto train_set = load_windows(a.train, a.common, net);
  const auto val_set = load_windows(a.validation, a.common, net);
  const auto init = nn::init_params<float>(net, a.common.seed);
  nn::TrainResult result{init, {}};
  if (a.config.epochs > 0) {
    result = nn::train(init, train_set, val_set, a.config, [&](const nn::EpochRecord& r) {
      if (a.quiet) return;
      out << "epoch " << r.epoch << "  train_loss " << fmt(r.train_loss, 6) << "  val_loss "
          << fmt(r.val_loss, 6) << "  val_SNR_dB " << fmt(r.val_snr, 3) << std::endl;
    });
  }
  nn::save_checkpoint(a.out, result.params);
  echo_config(app, a.out);
  if (!a.history.empty()) {
    std::ofstream h(a.history);
    if (!h) throw IoError("cannot write " + a.history);
    nn::write_history_csv(h, result.history);
  }
  out << "saved " << result.params.parameter_count() << " parameters to " << a.out << '\n';
}

// eval / bench --------------------------------------------------------------

struct ReportArgs {
  Common common;
  std::string in, out;
  std::vector<std::string> methods;
  std::size_t reps = 3;
};

std::vector<std::string> resolve_methods(const ReportArgs& a, bool include_raw) {
  if (!a.methods.empty()) return a.methods;
  std::vector<std::string> m;
  if (include_raw) m.push_back("raw");
  for (const auto& f : kFilters)
    if (f != "wednet" || !a.common.checkpoint.empty()) m.push_back(f);
  return m;
}

void cmd_eval(const CLI::App* app, ReportArgs& a, std::ostream& out) {
  finish_pipeline(a.common);
  const auto methods = resolve_methods(a, true);
  const bool needs_net = std::find(methods.begin(), methods.end(), "wednet") != methods.end();
  auto params = maybe_checkpoint(a.common.checkpoint, needs_net);
  auto file = read_events(a.in);
  auto stream = validate_stream(std::move(file.events), file.geometry);
  const bool truth = has_ground_truth(stream);
  const auto truth_labels = labels_of(stream);

  std::ostringstream csv;
  csv << (truth ? "method,events,real,noise,SNR_dB,precision,recall,f1\n" : "method,events,real,noise\n");
  for (const auto& m : methods) {
    const auto d = make_denoiser(m, file.geometry, a.common, params ? &*params : nullptr, a.common.threads);
    const auto labels = d.run(stream);
    const auto real = std::size_t(std::count(labels.begin(), labels.end(), Label::Real));
    csv << m << ',' << stream.size() << ',' << real << ',' << stream.size() - real;
    if (truth) {
      double snr = std::numeric_limits<double>::quiet_NaN();
      try {
        snr = snr_db(truth_labels, labels, a.common.snr_factor);
      } catch (const EmptyStream&) {
      }
      const auto c = confusion_metrics(labels, truth_labels);
      csv << ',' << fmt(snr, 4) << ',' << fmt(c.precision, 6) << ',' << fmt(c.recall, 6) << ','
          << fmt(c.f1, 6);
    }
    csv << '\n';
  }
  out << csv.str();
  if (!truth) out << "no ground truth in " << a.in << "; SNR omitted\n";
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw IoError("cannot write " + a.out);
    f << csv.str();
    echo_config(app, a.out);
  }
}

void cmd_bench(const CLI::App* app, ReportArgs& a, std::ostream& out) {
  finish_pipeline(a.common);
  const auto methods = resolve_methods(a, false);
  const bool needs_net = std::find(methods.begin(), methods.end(), "wednet") != methods.end();
  auto params = maybe_checkpoint(a.common.checkpoint, needs_net);
  auto file = read_events(a.in);
  auto stream = validate_stream(std::move(file.events), file.geometry);
  std::vector<Denoiser> ds;
  // One worker for every method so that timings compare like with like.
  for (const auto& m : methods) ds.push_back(make_denoiser(m, file.geometry, a.common, params ? &*params : nullptr, 1));
  const auto rows = bench(ds, stream, a.reps, a.common.snr_factor);
  write_bench_text(out, rows);
  if (!a.out.empty()) {
    std::ofstream f(a.out);
    if (!f) throw IoError("cannot write " + a.out);
    write_bench_csv(f, rows);
    echo_config(app, a.out);
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Event-camera denoising toolkit", "evdenoise"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "evdenoise 1.0");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "render a labelled event stream from a synthetic scene");
  add_seed_threads(s, sim.common);
  s->add_option("--out", sim.out, "output event file (.txt, .bin or .evd)")->required();
  s->add_option("--kind", sim.kind, "moving_bar, moving_disk or two_objects")->capture_default_str();
  s->add_option("--velocity", sim.velocity, "speed in pixels per second along --angle");
  s->add_option("--angle", sim.angle_deg, "direction of motion in degrees")->capture_default_str();
  s->add_option("--vx", sim.scene.vx)->capture_default_str();
  s->add_option("--vy", sim.scene.vy)->capture_default_str();
  s->add_option("--size", sim.scene.object_size, "bar width or disk diameter")->capture_default_str();
  s->add_option("--contrast", sim.scene.contrast)->capture_default_str();
  s->add_option("--duration-us", sim.scene.duration_us)->capture_default_str();
  s->add_option("--frame-rate", sim.scene.frame_rate)->capture_default_str();
  s->add_option("--threshold-mismatch", sim.scene.threshold_mismatch)->capture_default_str();
  s->add_option("--width", sim.geometry.width)->capture_default_str();
  s->add_option("--height", sim.geometry.height)->capture_default_str();
  s->add_option("--theta", sim.geometry.threshold_theta, "contrast threshold")->capture_default_str();

  InjectArgs inj;
  auto* n = app.add_subcommand("inject-noise", "add Poisson background activity labelled Noise");
  add_seed_threads(n, inj.common);
  n->add_option("--in", inj.in)->required()->check(CLI::ExistingFile);
  n->add_option("--out", inj.out)->required();
  n->add_option("--eta", inj.eta, "noise events per pixel per second");
  n->add_option("--ratio", inj.ratio, "noise count relative to the input event count");
  n->add_option("--dead-time-us", inj.dead_time_us)->capture_default_str();
  n->add_option("--duration-us", inj.duration_us, "defaults to the last timestamp + 1");

  DenoiseArgs den;
  auto* d = app.add_subcommand("denoise", "label every event Real or Noise");
  add_seed_threads(d, den.common);
  add_pipeline(d, den.common);
  add_filters(d, den.common);
  d->add_option("--in", den.in)->required()->check(CLI::ExistingFile);
  d->add_option("--out", den.out)->required();
  d->add_option("--filter", den.filter)->capture_default_str()->check(CLI::IsMember(kFilters));
  d->add_option("--checkpoint", den.common.checkpoint, "network weights for --filter wednet");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "fit the network on labelled streams");
  add_seed_threads(t, tr.common);
  add_pipeline(t, tr.common);
  t->add_option("--train", tr.train, "labelled training streams")->required()->check(CLI::ExistingFile);
  t->add_option("--val", tr.validation, "labelled validation streams")->check(CLI::ExistingFile);
  t->add_option("--out", tr.out, "checkpoint path")->required();
  t->add_option("--history", tr.history, "per-epoch CSV");
  t->add_option("--net", tr.net, "desk, full or tiny")->capture_default_str()
      ->check(CLI::IsMember({"desk", "full", "tiny"}));
  t->add_option("--epochs", tr.config.epochs)->capture_default_str();
  t->add_option("--lr", tr.config.lr)->capture_default_str();
  t->add_option("--momentum", tr.config.momentum)->capture_default_str();
  t->add_option("--batch", tr.config.batch, "windows per update")->capture_default_str();
  t->add_option("--clip", tr.config.clip, "gradient-norm bound, 0 disables")->capture_default_str();
  t->add_option("--weighting", tr.weighting)->capture_default_str()
      ->check(CLI::IsMember({"balanced", "uniform"}));
  t->add_flag("--quiet", tr.quiet, "no per-epoch progress");

  ReportArgs ev;
  auto* e = app.add_subcommand("eval", "SNR, precision and recall per method");
  add_seed_threads(e, ev.common);
  add_pipeline(e, ev.common);
  add_filters(e, ev.common);
  e->add_option("--in", ev.in)->required()->check(CLI::ExistingFile);
  e->add_option("--out", ev.out, "CSV report");
  e->add_option("--methods", ev.methods, "raw, tw, baf, nnb, rp, wednet");
  e->add_option("--checkpoint", ev.common.checkpoint);

  ReportArgs be;
  auto* b = app.add_subcommand("bench", "throughput table");
  add_seed_threads(b, be.common);
  add_pipeline(b, be.common);
  add_filters(b, be.common);
  b->add_option("--in", be.in)->required()->check(CLI::ExistingFile);
  b->add_option("--out", be.out, "CSV report");
  b->add_option("--methods", be.methods, "tw, baf, nnb, rp, wednet");
  b->add_option("--checkpoint", be.common.checkpoint);
  b->add_option("--reps", be.reps, "repetitions, at least 3")->capture_default_str();

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(app, args);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return static_cast<int>(ex.kind());
  }
  try {
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    // help and version requests exit 0; everything else is a usage error
    return app.exit(ex, out, err) == 0 ? 0 : 1;
  }

  try {
    if (s->parsed()) cmd_simulate(s, sim, out);
    else if (n->parsed()) cmd_inject(n, inj, out);
    else if (d->parsed()) cmd_denoise(d, den, out);
    else if (t->parsed()) cmd_train(t, tr, out);
    else if (e->parsed()) cmd_eval(e, ev, out);
    else if (b->parsed()) cmd_bench(b, be, out);
    return 0;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return static_cast<int>(ex.kind());
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << '\n';
    return 3;
  }
}

}  // namespace evd::cli

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivd/errors.hpp"
#include "ivd/irdata.hpp"
#include "ivd/rng.hpp"

namespace ivd {

enum class Region { hood, exhaust, brakes, body, windows };

inline std::string to_string(Region r) {
  switch (r) {
    case Region::hood: return "hood";
    case Region::exhaust: return "exhaust";
    case Region::brakes: return "brakes";
    case Region::body: return "body";
    case Region::windows: return "windows";
  }
  throw DomainError("invalid region enum");
}

// Per-region dynamics. Mean temperature before noise:
//   T(t) = T_eq(state) + (T0 - T_eq(state)) * exp(-t/tau(state))
//        + H(state) * (exp(-t/tau2) - exp(-t/tau1))      [soak bump, tau1<tau2]
//        + osc(state) * sin(2*pi*t/period)
struct RegionParams {
  double t0 = 30.0;
  double eq_idle = 30.0;
  double eq_stop = 30.0;
  double tau_idle = 100.0;
  double tau_stop = 100.0;
  double soak_idle = 0.0;  // H when idling
  double soak_stop = 0.0;  // H when stopped
  double tau1 = 100.0;
  double tau2 = 400.0;
  double osc_idle = 0.0;
  double osc_stop = 0.0;
  double period = 80.0;
};

// Axis-aligned rect in unit car-box coordinates.
struct UnitRect {
  double x, y, w, h;
};

struct ViewSilhouette {
  double box_w = 100.0;  // pixels
  double box_h = 80.0;
  std::vector<std::pair<Region, UnitRect>> regions;  // painted in order
};

struct CarThermalParams {
  std::string car_id;
  std::map<Region, RegionParams> regions;
  std::map<View, ViewSilhouette> silhouettes;

  void validate() const {
    for (const auto& [r, p] : regions) {
      if (p.tau_idle <= 0 || p.tau_stop <= 0 || p.tau1 <= 0 || p.tau2 <= 0)
        throw DataError("time constants must be positive");
      if (p.tau1 >= p.tau2) throw DataError("soak requires tau1 < tau2");
      if (p.soak_idle < 0 || p.soak_stop < 0 || p.osc_idle < 0 ||
          p.osc_stop < 0)
        throw DataError("amplitudes must be non-negative");
      if (r == Region::exhaust) {
        if (p.eq_idle < 90.0 || p.eq_idle > 120.0)
          throw DataError("idling exhaust equilibrium outside [90, 120]");
      }
    }
    for (const auto& [v, s] : silhouettes)
      for (const auto& [r, u] : s.regions)
        if (u.x < 0 || u.y < 0 || u.x + u.w > 1.0 + 1e-9 ||
            u.y + u.h > 1.0 + 1e-9)
          throw DataError("region rect outside unit car box");
  }
};

struct SceneParams {
  double ambient = 30.0;         // degC
  double noise_sigma = 0.3;      // degC per pixel per frame
  double sun_drift = 0.0;        // degC/min on the body region
  double texture_amplitude = 1.0;
  int image_w = 320;
  int image_h = 240;
  // Optional fixed car-box top-left; negative means centered with seeded
  // jitter.
  double car_x = -1.0;
  double car_y = -1.0;
};

// ---------------------------------------------------------------------------
// Parameter sampling. Ranges are declared choices: they reproduce the trend
// observations (front max keeps rising either state; rear exhaust rises when
// idling from a low start and falls when stopped; side brake temps fall) and
// keep the whole car well above a 30 degC ambient.

inline CarThermalParams sample_car_params(std::uint64_t seed) {
  Rng rng(Rng::derive(seed, 0xca7));
  const auto in = [&](double lo, double hi) { return rng.uniform(lo, hi); };

  CarThermalParams p;
  p.car_id = "car" + std::to_string(seed);

  RegionParams hood;
  hood.t0 = in(70, 78);
  hood.eq_idle = hood.t0 + in(14, 18);
  hood.eq_stop = hood.t0 + in(6, 10);
  hood.tau_idle = in(220, 280);
  hood.tau_stop = in(260, 340);
  hood.soak_stop = in(8, 14);
  hood.tau1 = in(140, 160);
  hood.tau2 = in(850, 950);
  hood.osc_idle = in(0.08, 0.18);
  hood.period = in(70, 90);
  p.regions[Region::hood] = hood;

  RegionParams exhaust;
  exhaust.t0 = in(50, 64);
  exhaust.eq_idle = in(90, 105);
  exhaust.eq_stop = in(34, 38);
  exhaust.tau_idle = in(140, 180);
  exhaust.tau_stop = in(130, 180);
  exhaust.osc_idle = in(0.1, 0.25);
  exhaust.period = in(80, 90);
  p.regions[Region::exhaust] = exhaust;

  RegionParams brakes;
  brakes.t0 = in(68, 80);
  brakes.eq_idle = in(40, 44);
  brakes.eq_stop = brakes.eq_idle;
  brakes.tau_idle = in(110, 160);
  brakes.tau_stop = brakes.tau_idle;
  p.regions[Region::brakes] = brakes;

  RegionParams body;
  body.t0 = in(66, 69);
  body.eq_idle = body.t0 - in(1, 3);
  body.eq_stop = body.t0 - in(5, 8);
  body.tau_idle = in(700, 1100);
  body.tau_stop = in(700, 1100);
  p.regions[Region::body] = body;

  RegionParams windows;
  windows.t0 = in(48, 56);
  windows.eq_idle = windows.t0 + in(2, 6);  // cabin climate keeps glass warm
  windows.eq_stop = in(37, 41);
  windows.tau_idle = in(150, 250);
  windows.tau_stop = in(200, 300);
  windows.osc_idle = in(0.2, 0.5);
  windows.period = in(60, 90);
  p.regions[Region::windows] = windows;

  ViewSilhouette front;
  front.box_w = in(100, 120);
  front.box_h = in(82, 96);
  front.regions = {{Region::body, {0, 0, 1, 1}},
                   {Region::windows, {0.20, 0.05, 0.60, 0.30}},
                   {Region::hood, {0.15, 0.45, 0.70, 0.35}}};
  p.silhouettes[View::front] = front;

  ViewSilhouette side;
  side.box_w = in(140, 165);
  side.box_h = in(68, 80);
  side.regions = {{Region::body, {0, 0, 1, 1}},
                  {Region::windows, {0.25, 0.05, 0.50, 0.30}},
                  {Region::hood, {0.00, 0.35, 0.28, 0.40}},
                  {Region::brakes, {0.08, 0.70, 0.18, 0.30}},
                  {Region::brakes, {0.70, 0.70, 0.18, 0.30}},
                  {Region::exhaust, {0.88, 0.75, 0.10, 0.20}}};
  p.silhouettes[View::side] = side;

  ViewSilhouette rear;
  rear.box_w = in(92, 110);
  rear.box_h = in(74, 88);
  rear.regions = {{Region::body, {0, 0, 1, 1}},
                  {Region::windows, {0.20, 0.05, 0.60, 0.30}},
                  {Region::exhaust, {0.15, 0.80, 0.18, 0.18}}};
  p.silhouettes[View::rear] = rear;

  p.validate();
  return p;
}

// Closed-form mean temperature before noise. Sun-load drift applies to the
// body region only.
inline double region_temperature(double t, Region region, EngineState state,
                                 const CarThermalParams& params,
                                 const SceneParams& scene) {
  if (t < 0) throw DomainError("time must be non-negative");
  if (state == EngineState::unknown)
    throw DomainError("engine state must be idling or stopped");
  const auto it = params.regions.find(region);
  if (it == params.regions.end())
    throw DomainError("no parameters for region " + to_string(region));
  const RegionParams& p = it->second;
  const bool idle = state == EngineState::idling;

  const double eq = idle ? p.eq_idle : p.eq_stop;
  const double tau = idle ? p.tau_idle : p.tau_stop;
  const double soak = idle ? p.soak_idle : p.soak_stop;
  const double osc = idle ? p.osc_idle : p.osc_stop;

  double temp = eq + (p.t0 - eq) * std::exp(-t / tau) +
                soak * (std::exp(-t / p.tau2) - std::exp(-t / p.tau1)) +
                osc * std::sin(2.0 * std::numbers::pi * t / p.period);
  if (region == Region::body) temp += scene.sun_drift * (t / 60.0);
  return temp;
}

// Time of the soak-bump extremum.
inline double soak_peak_time(const RegionParams& p) {
  return p.tau1 * p.tau2 / (p.tau2 - p.tau1) * std::log(p.tau2 / p.tau1);
}

// ---------------------------------------------------------------------------
// Rendering.

namespace internal {

// Static smooth background texture, bounded by the configured amplitude.
inline double texture_at(int x, int y, double amp, const std::array<double, 3>& phase) {
  if (amp <= 0) return 0.0;
  const double a = std::sin(2 * std::numbers::pi * x / 97.0 + phase[0]);
  const double b = std::sin(2 * std::numbers::pi * y / 71.0 + phase[1]);
  const double c = std::sin(2 * std::numbers::pi * (x + y) / 153.0 + phase[2]);
  return amp * (0.5 * a * b + 0.5 * c);
}

}  // namespace internal

struct SyntheticSequence {
  IRSequence sequence;
  Annotation annotation;
};

inline SyntheticSequence synthesize_sequence(const CarThermalParams& params,
                                             const SceneParams& scene,
                                             View view, EngineState state,
                                             int n_frames,
                                             std::uint64_t seed) {
  if (n_frames < 36)
    throw UsageError("training/eval sequences need at least 36 frames");
  params.validate();
  const auto sil_it = params.silhouettes.find(view);
  if (sil_it == params.silhouettes.end())
    throw DomainError("no silhouette for view " + to_string(view));
  const ViewSilhouette& sil = sil_it->second;

  Rng layout_rng(Rng::derive(seed, 1));
  Rng noise_rng(Rng::derive(seed, 2));
  Rng texture_rng(Rng::derive(seed, 3));
  const std::array<double, 3> phase = {
      texture_rng.uniform(0, 2 * std::numbers::pi),
      texture_rng.uniform(0, 2 * std::numbers::pi),
      texture_rng.uniform(0, 2 * std::numbers::pi)};

  double cx = scene.car_x, cy = scene.car_y;
  if (cx < 0 || cy < 0) {
    cx = (scene.image_w - sil.box_w) / 2.0 + layout_rng.uniform(-12, 12);
    cy = (scene.image_h - sil.box_h) / 2.0 + layout_rng.uniform(-12, 12);
  }
  const BoundingBox car_box{std::floor(cx), std::floor(cy),
                            std::floor(sil.box_w), std::floor(sil.box_h)};
  if (car_box.x < 0 || car_box.y < 0 || car_box.x2() > scene.image_w ||
      car_box.y2() > scene.image_h)
    throw GeometryError("car box outside image");

  // Side-view cars face left or right at random.
  const bool mirrored = view == View::side && layout_rng.bernoulli(0.5);

  SyntheticSequence out;
  out.sequence.frame_interval = 5.0;
  out.sequence.view = view;
  out.sequence.engine_state = state;
  out.sequence.car_id = params.car_id;
  out.sequence.frames.reserve(std::size_t(n_frames));

  for (int fi = 0; fi < n_frames; ++fi) {
    const double t = fi * out.sequence.frame_interval;
    IRFrame frame;
    frame.width = scene.image_w;
    frame.height = scene.image_h;
    frame.temps.resize(std::size_t(scene.image_w) * scene.image_h);
    for (int y = 0; y < scene.image_h; ++y)
      for (int x = 0; x < scene.image_w; ++x)
        frame.at(x, y) =
            float(scene.ambient +
                  internal::texture_at(x, y, scene.texture_amplitude, phase));

    for (const auto& [region, unit] : sil.regions) {
      UnitRect u = unit;
      if (mirrored) u.x = 1.0 - u.x - u.w;
      const double temp = region_temperature(t, region, state, params, scene);
      const int x0 = int(std::lround(car_box.x + u.x * car_box.w));
      const int y0 = int(std::lround(car_box.y + u.y * car_box.h));
      const int x1 = int(std::lround(car_box.x + (u.x + u.w) * car_box.w));
      const int y1 = int(std::lround(car_box.y + (u.y + u.h) * car_box.h));
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) frame.at(x, y) = float(temp);
    }

    if (scene.noise_sigma > 0)
      for (auto& v : frame.temps)
        v = float(v + noise_rng.normal(0.0, scene.noise_sigma));

    out.sequence.frames.push_back(std::move(frame));
  }

  out.annotation.box = car_box;
  out.annotation.view = view;
  out.annotation.engine_state = state;
  return out;
}

// ---------------------------------------------------------------------------
// Dataset building.

struct DatasetConfig {
  int n_cars = 8;
  int n_frames = 60;
  std::uint64_t seed = 1;
  SceneParams scene;
  std::vector<View> views = {View::front, View::side, View::rear};
  std::vector<EngineState> states = {EngineState::idling, EngineState::stopped};
};

inline std::string sequence_name(int car, View v, EngineState s) {
  return "car" + std::to_string(car) + "_" + to_string(v) + "_" + to_string(s);
}

// In-memory generation; deterministic given the config seed.
inline std::vector<SyntheticSequence> generate_dataset(
    const DatasetConfig& cfg) {
  if (cfg.n_cars < 2) throw UsageError("dataset needs at least 2 cars");
  std::vector<SyntheticSequence> out;
  for (int car = 0; car < cfg.n_cars; ++car) {
    const CarThermalParams params =
        sample_car_params(Rng::derive(cfg.seed, std::uint64_t(car)));
    for (View v : cfg.views)
      for (EngineState s : cfg.states) {
        const std::uint64_t seq_seed = Rng::derive(
            cfg.seed, 1000 + std::uint64_t(car) * 16 + std::uint64_t(v) * 4 +
                          std::uint64_t(s));
        SyntheticSequence ss =
            synthesize_sequence(params, cfg.scene, v, s, cfg.n_frames, seq_seed);
        ss.sequence.car_id = "car" + std::to_string(car);
        ss.sequence.sequence_id = sequence_name(car, v, s);
        ss.annotation.sequence_id = ss.sequence.sequence_id;
        out.push_back(std::move(ss));
      }
  }
  return out;
}

// Writes IRS containers, a dataset manifest, and the annotation JSONL.
inline void build_dataset(const DatasetConfig& cfg,
                          const std::filesystem::path& out_dir,
                          const std::string& config_digest = "") {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  const auto sequences = generate_dataset(cfg);

  nlohmann::json manifest;
  manifest["seed"] = cfg.seed;
  manifest["n_cars"] = cfg.n_cars;
  manifest["n_frames"] = cfg.n_frames;
  manifest["ambient"] = cfg.scene.ambient;
  manifest["noise"] = cfg.scene.noise_sigma;
  if (!config_digest.empty()) manifest["config_digest"] = config_digest;
  manifest["sequences"] = nlohmann::json::array();

  std::vector<Annotation> annotations;
  for (const auto& ss : sequences) {
    const std::string file = ss.sequence.sequence_id + ".irs";
    save_sequence(ss.sequence, out_dir / file);
    manifest["sequences"].push_back(
        {{"sequence_id", ss.sequence.sequence_id},
         {"car_id", ss.sequence.car_id},
         {"view", to_string(ss.sequence.view)},
         {"engine_state", to_string(ss.sequence.engine_state)},
         {"file", file}});
    annotations.push_back(ss.annotation);
  }
  save_annotations(annotations, out_dir / "annotations.jsonl");

  std::ofstream mf(out_dir / "manifest.json");
  if (!mf) throw IoError("cannot write manifest in " + out_dir.string());
  mf << manifest.dump(2) << "\n";
}

struct LoadedDataset {
  std::vector<IRSequence> sequences;
  std::vector<Annotation> annotations;
};

inline LoadedDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw IoError("cannot open manifest in " + dir.string());
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad manifest in " + dir.string() + ": " + e.what());
  }
  LoadedDataset ds;
  for (const auto& entry : manifest.at("sequences")) {
    IRSequence seq = load_sequence(dir / entry.at("file").get<std::string>());
    seq.sequence_id = entry.at("sequence_id").get<std::string>();
    seq.car_id = entry.at("car_id").get<std::string>();
    seq.view = view_from_string(entry.at("view").get<std::string>());
    seq.engine_state =
        state_from_string(entry.at("engine_state").get<std::string>());
    ds.sequences.push_back(std::move(seq));
  }
  ds.annotations = load_annotations(dir / "annotations.jsonl");
  return ds;
}

}  // namespace ivd

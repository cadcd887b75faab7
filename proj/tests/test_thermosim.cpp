#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "ivd/detect.hpp"
#include "ivd/thermosim.hpp"

using namespace ivd;

TEST_CASE("region temperature matches the closed form") {
  RegionParams p;
  p.t0 = 50.0;
  p.eq_idle = 90.0;
  p.tau_idle = 200.0;
  p.soak_idle = 8.0;
  p.tau1 = 100.0;
  p.tau2 = 400.0;
  p.osc_idle = 0.5;
  p.period = 80.0;
  CarThermalParams car;
  car.regions[Region::exhaust] = p;
  SceneParams scene;

  for (double t : {0.0, 12.5, 60.0, 175.0}) {
    const double expected =
        90.0 + (50.0 - 90.0) * std::exp(-t / 200.0) +
        8.0 * (std::exp(-t / 400.0) - std::exp(-t / 100.0)) +
        0.5 * std::sin(2.0 * std::numbers::pi * t / 80.0);
    CHECK(region_temperature(t, Region::exhaust, EngineState::idling, car,
                             scene) == Catch::Approx(expected).epsilon(1e-12));
  }
  // At t = 0 the temperature is exactly T0: the soak bump vanishes.
  CHECK(region_temperature(0.0, Region::exhaust, EngineState::idling, car,
                           scene) == Catch::Approx(50.0));
}

TEST_CASE("soak bump is non-negative, zero at t=0, and peaks at the known time") {
  RegionParams p;
  p.tau1 = 150.0;
  p.tau2 = 900.0;
  const double tstar = soak_peak_time(p);
  CHECK(tstar ==
        Catch::Approx(150.0 * 900.0 / 750.0 * std::log(6.0)).epsilon(1e-12));
  const auto bump = [&](double t) {
    return std::exp(-t / p.tau2) - std::exp(-t / p.tau1);
  };
  CHECK(bump(0.0) == Catch::Approx(0.0).margin(1e-15));
  for (double t : {10.0, 100.0, 500.0, 3000.0}) CHECK(bump(t) >= 0.0);
  // Derivative changes sign at the peak.
  CHECK(bump(tstar - 1) < bump(tstar));
  CHECK(bump(tstar + 1) < bump(tstar));
}

TEST_CASE("sun drift shifts the body region linearly in time") {
  CarThermalParams car;
  car.regions[Region::body] = RegionParams{};
  SceneParams scene;
  scene.sun_drift = 2.0;  // degC per minute
  const double base =
      region_temperature(120.0, Region::body, EngineState::idling, car,
                         SceneParams{});
  const double shifted =
      region_temperature(120.0, Region::body, EngineState::idling, car, scene);
  CHECK(shifted - base == Catch::Approx(4.0));
}

TEST_CASE("parameter validation catches bad physics") {
  CarThermalParams car;
  RegionParams p;
  p.tau1 = 500.0;
  p.tau2 = 100.0;  // reversed
  car.regions[Region::hood] = p;
  CHECK_THROWS_AS(car.validate(), DataError);

  car.regions.clear();
  RegionParams ex;
  ex.eq_idle = 60.0;  // idling exhaust must reach [90, 120]
  car.regions[Region::exhaust] = ex;
  CHECK_THROWS_AS(car.validate(), DataError);
}

TEST_CASE("sampled car parameters are valid across many seeds") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto car = sample_car_params(seed);
    CHECK_NOTHROW(car.validate());
    const auto& ex = car.regions.at(Region::exhaust);
    CHECK(ex.eq_idle >= 90.0);
    CHECK(ex.eq_idle <= 120.0);
  }
}

TEST_CASE("synthesized sequences reproduce the trend observations") {
  SceneParams scene;
  scene.noise_sigma = 0.0;  // trends are on the mean signal
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const auto car = sample_car_params(seed);

    // Front view, either state: the hottest pixel keeps rising (monotone
    // non-decreasing over the sequence).
    for (auto state : {EngineState::idling, EngineState::stopped}) {
      const auto sim = synthesize_sequence(car, scene, View::front, state, 60,
                                           seed * 17 + 1);
      const auto& box = sim.annotation.box;
      float prev = max_over_box(sim.sequence.frames[0], box);
      for (std::size_t f = 1; f < sim.sequence.length(); ++f) {
        const float cur = max_over_box(sim.sequence.frames[f], box);
        CHECK(cur >= prev - 0.05f);
        prev = cur;
      }
    }

    // Rear view: idling exhaust climbs from a low start; stopped cools.
    const auto rear_idle = synthesize_sequence(
        car, scene, View::rear, EngineState::idling, 60, seed * 17 + 2);
    const auto rear_stop = synthesize_sequence(
        car, scene, View::rear, EngineState::stopped, 60, seed * 17 + 3);
    const auto& rib = rear_idle.annotation.box;
    CHECK(max_over_box(rear_idle.sequence.frames[59], rib) >
          max_over_box(rear_idle.sequence.frames[0], rib) + 5.0f);
    const auto& rsb = rear_stop.annotation.box;
    CHECK(max_over_box(rear_stop.sequence.frames[59], rsb) <
          max_over_box(rear_stop.sequence.frames[0], rsb));
  }
}

TEST_CASE("synthesis is deterministic in the seed") {
  const auto car = sample_car_params(3);
  SceneParams scene;
  const auto a = synthesize_sequence(car, scene, View::side,
                                     EngineState::idling, 40, 77);
  const auto b = synthesize_sequence(car, scene, View::side,
                                     EngineState::idling, 40, 77);
  const auto c = synthesize_sequence(car, scene, View::side,
                                     EngineState::idling, 40, 78);
  REQUIRE(a.sequence.length() == b.sequence.length());
  for (std::size_t f = 0; f < a.sequence.length(); ++f)
    CHECK(a.sequence.frames[f].temps == b.sequence.frames[f].temps);
  CHECK(a.sequence.frames[0].temps != c.sequence.frames[0].temps);
}

TEST_CASE("sequences shorter than the window are rejected") {
  const auto car = sample_car_params(1);
  CHECK_THROWS_AS(synthesize_sequence(car, SceneParams{}, View::front,
                                      EngineState::idling, 35, 1),
                  UsageError);
}

TEST_CASE("car stays detectable for the whole default sequence") {
  // The stationary-car filter requires detector scores >= 0.9; the simulated
  // car must stay hot enough for that over every frame and view.
  SceneParams scene;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto car = sample_car_params(seed);
    for (View v : {View::front, View::side, View::rear})
      for (auto state : {EngineState::idling, EngineState::stopped}) {
        const auto sim =
            synthesize_sequence(car, scene, v, state, 60, seed * 31 + int(v));
        for (std::size_t f = 0; f < sim.sequence.length(); ++f) {
          const auto dets = detect_cars(sim.sequence.frames[f], {});
          REQUIRE(!dets.empty());
          CHECK(iou(dets[0].box, sim.annotation.box) >= 0.8);
          CHECK(dets[0].score >= 0.9);
        }
      }
  }
}

TEST_CASE("dataset builder writes a loadable, consistent tree") {
  DatasetConfig cfg;
  cfg.n_cars = 2;
  cfg.n_frames = 36;
  cfg.seed = 5;
  const auto dir = std::filesystem::temp_directory_path() / "ivd_ds_test";
  std::filesystem::remove_all(dir);
  build_dataset(cfg, dir);
  const auto ds = load_dataset(dir);
  CHECK(ds.sequences.size() == 12);  // 2 cars x 3 views x 2 states
  CHECK(ds.annotations.size() == 12);
  for (const auto& seq : ds.sequences) {
    CHECK(seq.length() == 36);
    CHECK((seq.car_id == "car0" || seq.car_id == "car1"));
  }
  // Regenerating in memory gives bit-identical frames.
  const auto mem = generate_dataset(cfg);
  REQUIRE(mem.size() == ds.sequences.size());
  for (std::size_t i = 0; i < mem.size(); ++i)
    CHECK(mem[i].sequence.frames[0].temps == ds.sequences[i].frames[0].temps);
  std::filesystem::remove_all(dir);
}

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "ivd/classify.hpp"
#include "ivd/thermosim.hpp"

using namespace ivd;

namespace {

IRFrame flat_frame(int w, int h, float temp) {
  IRFrame f;
  f.width = w;
  f.height = h;
  f.temps.assign(std::size_t(w) * h, temp);
  return f;
}

SpatioTemporalStack random_stack(int n, int size, std::uint64_t seed) {
  SpatioTemporalStack s;
  s.size = size;
  s.n_frames = n;
  s.data.resize(std::size_t(n) * size * size);
  Rng rng(seed);
  for (auto& v : s.data) v = float(rng.uniform(20.0, 90.0));
  return s;
}

}  // namespace

TEST_CASE("subsequence starts: stride 1 capped at 30") {
  CHECK(window_subsequences(36) == std::vector<int>{0});
  CHECK(window_subsequences(40).size() == 5);
  // 60-frame sequences give 25 starts; long ones saturate at the cap.
  CHECK(window_subsequences(60).size() == 25);
  CHECK(window_subsequences(500).size() == 30);
  CHECK(window_subsequences(500).back() == 29);
  CHECK_THROWS_AS(window_subsequences(35), UsageError);
}

TEST_CASE("subsequence starts honor a coarser stride") {
  const auto starts = window_subsequences(60, 36, 6);
  CHECK(starts == std::vector<int>{0, 6, 12, 18, 24});
}

TEST_CASE("temporal feature is the shifted max-temperature profile") {
  IRSequence seq;
  seq.engine_state = EngineState::idling;
  for (int f = 0; f < 36; ++f) {
    IRFrame fr = flat_frame(20, 20, 30.0f);
    fr.at(10, 10) = float(50 + f);  // hottest pixel climbs 1 degC per frame
    seq.frames.push_back(fr);
  }
  const BoundingBox box{5, 5, 10, 10};
  const auto w = temporal_feature(seq, box, 0);
  CHECK(w.values[0] == 0.0);
  for (int k = 1; k < kWindowFrames; ++k)
    CHECK(w.values[std::size_t(k)] == Catch::Approx(double(k)));
  CHECK(w.label == EngineState::idling);
}

TEST_CASE("stack offsets cover the window uniformly; N=7 is the paper grid") {
  CHECK(stack_offsets(7) == std::vector<int>{0, 6, 12, 18, 23, 29, 35});
  CHECK(stack_offsets(2) == std::vector<int>{0, 35});
  const auto o36 = stack_offsets(36);
  for (int i = 0; i < 36; ++i) CHECK(o36[std::size_t(i)] == i);
}

TEST_CASE("side orientation picks the hotter third, tie goes left") {
  IRFrame f = flat_frame(90, 30, 30.0f);
  const BoundingBox box{0, 0, 90, 30};
  for (int y = 0; y < 30; ++y)
    for (int x = 60; x < 90; ++x) f.at(x, y) = 80.0f;
  CHECK(side_orientation(f, box) == SideOrientation::front_at_right);
  const IRFrame flat = flat_frame(90, 30, 40.0f);
  CHECK(side_orientation(flat, box) == SideOrientation::front_at_left);
}

TEST_CASE("square crop: min side centered for front/rear, engine end for side") {
  IRFrame f = flat_frame(200, 150, 30.0f);
  SECTION("front takes the min-side centered square") {
    const auto sq = square_crop_box({10, 20, 60, 40}, View::front, f);
    CHECK(sq.w == Catch::Approx(40));
    CHECK(sq.h == Catch::Approx(40));
    CHECK(sq.x == Catch::Approx(20));  // centered horizontally
    CHECK(sq.y == Catch::Approx(20));
  }
  SECTION("side anchors an h-sided square at the hot end") {
    const BoundingBox box{40, 50, 90, 30};
    for (int y = 50; y < 80; ++y)
      for (int x = 100; x < 130; ++x) f.at(x, y) = 90.0f;  // right third hot
    const auto sq = square_crop_box(box, View::side, f);
    CHECK(sq.w == Catch::Approx(30));
    CHECK(sq.h == Catch::Approx(30));
    CHECK(sq.x == Catch::Approx(40 + 90 - 30));  // right-aligned
  }
  SECTION("crop is clipped to the frame") {
    const auto sq = square_crop_box({-5, -5, 30, 30}, View::front, f);
    CHECK(sq.x >= 0);
    CHECK(sq.y >= 0);
  }
}

TEST_CASE("sample_stack produces N resized slices with the right label") {
  const auto car = sample_car_params(2);
  SceneParams scene;
  const auto sim = synthesize_sequence(car, scene, View::rear,
                                       EngineState::idling, 40, 5);
  const auto stack =
      sample_stack(sim.sequence, sim.annotation.box, 0, 7, 100);
  CHECK(stack.n_frames == 7);
  CHECK(stack.size == 100);
  CHECK(stack.data.size() == 7u * 100 * 100);
  CHECK(stack.label == EngineState::idling);
  // Values stay in a plausible thermal range.
  for (float v : stack.data) {
    CHECK(v > 0.0f);
    CHECK(v < 150.0f);
  }
}

TEST_CASE("horizontal flip is an involution") {
  auto s = random_stack(3, 24, 7);
  const auto orig = s.data;
  hflip_stack(s);
  CHECK(s.data != orig);
  hflip_stack(s);
  CHECK(s.data == orig);
}

TEST_CASE("augmentation keeps shape and plausible value bounds") {
  const auto s = random_stack(7, 40, 11);
  const float lo = *std::min_element(s.data.begin(), s.data.end());
  const float hi = *std::max_element(s.data.begin(), s.data.end());
  AugmentConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto out = augment(s, cfg, rng);
    REQUIRE(out.data.size() == s.data.size());
    for (float v : out.data) {
      // Rotation, blur and erasure all interpolate: no new extrema.
      CHECK(v >= lo - 1e-3f);
      CHECK(v <= hi + 1e-3f);
    }
  }
}

TEST_CASE("augmentation draws from the rng deterministically") {
  const auto s = random_stack(3, 32, 13);
  AugmentConfig cfg;
  Rng a(55), b(55), c(56);
  const auto ra = augment(s, cfg, a);
  const auto rb = augment(s, cfg, b);
  const auto rc = augment(s, cfg, c);
  CHECK(ra.data == rb.data);
  CHECK(ra.data != rc.data);
}

TEST_CASE("zero-probability augmentation is the identity") {
  const auto s = random_stack(2, 16, 3);
  AugmentConfig cfg;
  cfg.flip_prob = cfg.rotation_prob = cfg.patch_prob = cfg.blur_prob = 0.0;
  Rng rng(1);
  CHECK(augment(s, cfg, rng).data == s.data);
}

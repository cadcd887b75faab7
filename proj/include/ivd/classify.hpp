#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ivd/errors.hpp"
#include "ivd/irdata.hpp"
#include "ivd/rng.hpp"

namespace ivd {

inline constexpr int kWindowFrames = 36;  // 3 minutes at 5 s/frame
inline constexpr int kWindowCap = 30;     // max subsequences per sequence

// 36-value max-temperature profile, shifted to start at zero.
struct TemporalWindow {
  std::array<double, kWindowFrames> values{};
  EngineState label = EngineState::unknown;
  std::string sequence_id;
  int start_frame = 0;
};

// W x H x N crop stack (layout [N][H][W]).
struct SpatioTemporalStack {
  int size = 100;
  int n_frames = 7;
  std::vector<float> data;  // n_frames * size * size
  EngineState label = EngineState::unknown;
  std::string sequence_id;
  int start_frame = 0;

  float& at(int n, int y, int x) {
    return data[(std::size_t(n) * size + y) * size + x];
  }
  float at(int n, int y, int x) const {
    return data[(std::size_t(n) * size + y) * size + x];
  }
};

struct AugmentConfig {
  double flip_prob = 0.5;
  double rotation_prob = 0.5;
  double max_rotation_deg = 5.0;
  double patch_prob = 0.5;  // erase-or-blur over a random patch
  int patch_max = 10;
  double blur_prob = 0.5;
  double blur_max_sigma = 1.0;
};

// Window start indices: stride over [0, L-window], capped.
inline std::vector<int> window_subsequences(int length, int window = kWindowFrames,
                                            int stride = 1,
                                            int cap = kWindowCap) {
  if (length < window)
    throw UsageError("sequence shorter than the subsequence window");
  std::vector<int> starts;
  for (int s = 0; s + window <= length && int(starts.size()) < cap; s += stride)
    starts.push_back(s);
  return starts;
}

// v_k = max(frame_{start+k}, box) - max(frame_start, box).
inline TemporalWindow temporal_feature(const IRSequence& seq,
                                       const BoundingBox& avg_box, int start) {
  if (start < 0 || std::size_t(start + kWindowFrames) > seq.length())
    throw UsageError("window exceeds sequence length");
  TemporalWindow win;
  win.label = seq.engine_state;
  win.sequence_id = seq.sequence_id;
  win.start_frame = start;
  const double first = max_over_box(seq.frames[std::size_t(start)], avg_box);
  for (int k = 0; k < kWindowFrames; ++k)
    win.values[std::size_t(k)] =
        max_over_box(seq.frames[std::size_t(start + k)], avg_box) - first;
  return win;
}

enum class SideOrientation { front_at_left, front_at_right };

// The engine end of a side-view car is the hotter end; ties go left.
inline SideOrientation side_orientation(const IRFrame& frame,
                                        const BoundingBox& box) {
  const double third = box.w / 3.0;
  const BoundingBox left{box.x, box.y, third, box.h};
  const BoundingBox right{box.x + 2.0 * third, box.y, third, box.h};
  const auto mean_over = [&](const BoundingBox& b) {
    const PixelSpan s = pixel_span(frame, b);
    if (s.empty()) throw GeometryError("orientation box outside frame");
    double sum = 0.0;
    int count = 0;
    for (int y = s.y0; y < s.y1; ++y)
      for (int x = s.x0; x < s.x1; ++x) {
        sum += frame.at(x, y);
        ++count;
      }
    return sum / count;
  };
  return mean_over(right) > mean_over(left) ? SideOrientation::front_at_right
                                            : SideOrientation::front_at_left;
}

// Square crop: front/rear views take a min-side square at the box center;
// side view takes an h-sided square at the engine end. Clipped to the frame.
inline BoundingBox square_crop_box(const BoundingBox& avg_box, View view,
                                   const IRFrame& frame) {
  if (!avg_box.valid()) throw GeometryError("degenerate box");
  BoundingBox sq;
  if (view == View::side) {
    const double side = avg_box.h;
    const SideOrientation orient = side_orientation(frame, avg_box);
    const double x = orient == SideOrientation::front_at_left
                         ? avg_box.x
                         : avg_box.x2() - side;
    sq = {x, avg_box.y, side, side};
  } else {
    const double side = std::min(avg_box.w, avg_box.h);
    sq = {avg_box.x + (avg_box.w - side) / 2.0,
          avg_box.y + (avg_box.h - side) / 2.0, side, side};
  }
  const BoundingBox clipped = intersect(sq, frame.bounds());
  if (!clipped.valid()) throw GeometryError("square crop outside frame");
  return clipped;
}

// Frame offsets for N uniform samples over the 36-frame window:
// round(i * 35 / (N-1)). For N=7: 0, 6, 12, 18, 23, 29, 35.
inline std::vector<int> stack_offsets(int n) {
  if (n < 2) throw UsageError("stack needs at least 2 samples");
  std::vector<int> offsets;
  for (int i = 0; i < n; ++i)
    offsets.push_back(
        int(std::lround(double(i) * (kWindowFrames - 1) / double(n - 1))));
  return offsets;
}

inline SpatioTemporalStack sample_stack(const IRSequence& seq,
                                        const BoundingBox& avg_box, int start,
                                        int n = 7, int size = 100) {
  if (start < 0 || std::size_t(start + kWindowFrames) > seq.length())
    throw UsageError("window exceeds sequence length");
  SpatioTemporalStack stack;
  stack.size = size;
  stack.n_frames = n;
  stack.label = seq.engine_state;
  stack.sequence_id = seq.sequence_id;
  stack.start_frame = start;
  stack.data.resize(std::size_t(n) * size * size);

  // Orientation is decided once per window, on the first sampled frame.
  const BoundingBox crop =
      square_crop_box(avg_box, seq.view, seq.frames[std::size_t(start)]);
  const auto offsets = stack_offsets(n);
  for (int i = 0; i < n; ++i) {
    const IRFrame resized = crop_resize(
        seq.frames[std::size_t(start + offsets[std::size_t(i)])], crop, size,
        size);
    std::copy(resized.temps.begin(), resized.temps.end(),
              stack.data.begin() + std::size_t(i) * size * size);
  }
  return stack;
}

// ---------------------------------------------------------------------------
// Augmentation. All slices of a stack transform together.

namespace internal {

inline void rotate_stack(SpatioTemporalStack& stack, double degrees) {
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(rad), sn = std::sin(rad);
  const int sz = stack.size;
  const double c = (sz - 1) / 2.0;
  std::vector<float> out(stack.data.size());
  for (int n = 0; n < stack.n_frames; ++n)
    for (int y = 0; y < sz; ++y)
      for (int x = 0; x < sz; ++x) {
        // Inverse mapping with bilinear sampling, edge replication.
        const double dx = x - c, dy = y - c;
        const double sx = std::clamp(cs * dx + sn * dy + c, 0.0, sz - 1.0);
        const double sy = std::clamp(-sn * dx + cs * dy + c, 0.0, sz - 1.0);
        const int x0 = int(sx), y0 = int(sy);
        const int x1 = std::min(x0 + 1, sz - 1), y1 = std::min(y0 + 1, sz - 1);
        const double fx = sx - x0, fy = sy - y0;
        const double top =
            stack.at(n, y0, x0) * (1 - fx) + stack.at(n, y0, x1) * fx;
        const double bot =
            stack.at(n, y1, x0) * (1 - fx) + stack.at(n, y1, x1) * fx;
        out[(std::size_t(n) * sz + y) * sz + x] =
            float(top * (1 - fy) + bot * fy);
      }
  stack.data = std::move(out);
}

inline void blur_region(SpatioTemporalStack& stack, double sigma, int rx0,
                        int ry0, int rx1, int ry1) {
  const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(std::size_t(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i)
    sum += kernel[std::size_t(i + radius)] =
        std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& k : kernel) k /= sum;

  const int sz = stack.size;
  for (int n = 0; n < stack.n_frames; ++n) {
    // Horizontal then vertical pass over the region, edge clamped.
    std::vector<float> tmp(std::size_t(ry1 - ry0) * (rx1 - rx0));
    for (int y = ry0; y < ry1; ++y)
      for (int x = rx0; x < rx1; ++x) {
        double v = 0.0;
        for (int i = -radius; i <= radius; ++i)
          v += kernel[std::size_t(i + radius)] *
               stack.at(n, y, std::clamp(x + i, 0, sz - 1));
        tmp[std::size_t(y - ry0) * (rx1 - rx0) + (x - rx0)] = float(v);
      }
    for (int y = ry0; y < ry1; ++y)
      for (int x = rx0; x < rx1; ++x) {
        double v = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int yy = std::clamp(y + i, ry0, ry1 - 1);
          v += kernel[std::size_t(i + radius)] *
               tmp[std::size_t(yy - ry0) * (rx1 - rx0) + (x - rx0)];
        }
        stack.at(n, y, x) = float(v);
      }
  }
}

}  // namespace internal

inline void hflip_stack(SpatioTemporalStack& stack) {
  const int sz = stack.size;
  for (int n = 0; n < stack.n_frames; ++n)
    for (int y = 0; y < sz; ++y)
      for (int x = 0; x < sz / 2; ++x)
        std::swap(stack.at(n, y, x), stack.at(n, y, sz - 1 - x));
}

inline SpatioTemporalStack augment(const SpatioTemporalStack& input,
                                   const AugmentConfig& cfg, Rng& rng) {
  SpatioTemporalStack stack = input;
  const int sz = stack.size;

  if (rng.bernoulli(cfg.flip_prob)) hflip_stack(stack);

  if (rng.bernoulli(cfg.rotation_prob)) {
    const double deg =
        rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg);
    internal::rotate_stack(stack, deg);
  }

  if (rng.bernoulli(cfg.patch_prob)) {
    const int pw = 1 + int(rng.uniform_index(std::uint64_t(cfg.patch_max)));
    const int ph = 1 + int(rng.uniform_index(std::uint64_t(cfg.patch_max)));
    const int px = int(rng.uniform_index(std::uint64_t(std::max(1, sz - pw))));
    const int py = int(rng.uniform_index(std::uint64_t(std::max(1, sz - ph))));
    if (rng.bernoulli(0.5)) {
      // Erase: replace the patch with its own mean per slice.
      for (int n = 0; n < stack.n_frames; ++n) {
        double mean = 0.0;
        for (int y = py; y < py + ph; ++y)
          for (int x = px; x < px + pw; ++x) mean += stack.at(n, y, x);
        mean /= double(pw) * ph;
        for (int y = py; y < py + ph; ++y)
          for (int x = px; x < px + pw; ++x) stack.at(n, y, x) = float(mean);
      }
    } else {
      internal::blur_region(stack, 0.8, px, py, px + pw, py + ph);
    }
  }

  if (rng.bernoulli(cfg.blur_prob)) {
    const double sigma =
        std::max(1e-3, rng.uniform() * cfg.blur_max_sigma);
    internal::blur_region(stack, sigma, 0, 0, sz, sz);
  }
  return stack;
}

}  // namespace ivd

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivd/errors.hpp"
#include "ivd/evalharness.hpp"
#include "ivd/irdata.hpp"

namespace ivd {

struct Detection {
  int frame_index = 0;
  BoundingBox box;
  double score = 0.0;
};

enum class AmbientEstimator { fixed, frame_median };

struct DetectorConfig {
  double excess_threshold = 5.0;  // degC above ambient
  AmbientEstimator ambient_estimator = AmbientEstimator::frame_median;
  double fixed_ambient = 30.0;
  int min_blob_area = 64;
  double min_side = 8.0;
  double max_side = 300.0;
  double min_aspect = 0.2;  // w/h
  double max_aspect = 5.0;
  int closing_radius = 2;
};

namespace internal {

inline double frame_median(const IRFrame& frame) {
  std::vector<float> v = frame.temps;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  return v[mid];
}

// Binary morphological closing with a disk structuring element.
inline std::vector<std::uint8_t> close_mask(const std::vector<std::uint8_t>& mask,
                                            int w, int h, int radius) {
  if (radius <= 0) return mask;
  std::vector<std::pair<int, int>> disk;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) disk.emplace_back(dx, dy);

  std::vector<std::uint8_t> dil(mask.size(), 0), out(mask.size(), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask[std::size_t(y) * w + x]) continue;
      for (auto [dx, dy] : disk) {
        const int nx = x + dx, ny = y + dy;
        if (nx >= 0 && nx < w && ny >= 0 && ny < h)
          dil[std::size_t(ny) * w + nx] = 1;
      }
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::uint8_t all = 1;
      for (auto [dx, dy] : disk) {
        const int nx = x + dx, ny = y + dy;
        if (nx >= 0 && nx < w && ny >= 0 && ny < h && !dil[std::size_t(ny) * w + nx]) {
          all = 0;
          break;
        }
      }
      out[std::size_t(y) * w + x] = all;
    }
  return out;
}

}  // namespace internal

// Threshold at ambient + excess, close, label 8-connected components, box
// them, filter by size priors. Score is the blob's mean excess over 30 degC,
// clamped to [0, 1]. Output sorted by descending score.
inline std::vector<Detection> detect_cars(const IRFrame& frame,
                                          const DetectorConfig& cfg) {
  const double ambient = cfg.ambient_estimator == AmbientEstimator::fixed
                             ? cfg.fixed_ambient
                             : internal::frame_median(frame);
  const double threshold = ambient + cfg.excess_threshold;
  const int w = frame.width, h = frame.height;

  std::vector<std::uint8_t> mask(frame.temps.size());
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = frame.temps[i] > threshold;
  mask = internal::close_mask(mask, w, h, cfg.closing_radius);

  std::vector<int> label(mask.size(), -1);
  std::vector<Detection> dets;
  int next_label = 0;
  for (int sy = 0; sy < h; ++sy)
    for (int sx = 0; sx < w; ++sx) {
      const std::size_t si = std::size_t(sy) * w + sx;
      if (!mask[si] || label[si] >= 0) continue;
      // BFS over the 8-connected component.
      int min_x = sx, max_x = sx, min_y = sy, max_y = sy;
      int area = 0;
      double excess_sum = 0.0;
      std::queue<std::pair<int, int>> q;
      q.emplace(sx, sy);
      label[si] = next_label;
      while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop();
        ++area;
        excess_sum += frame.at(x, y) - ambient;
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            const std::size_t ni = std::size_t(ny) * w + nx;
            if (mask[ni] && label[ni] < 0) {
              label[ni] = next_label;
              q.emplace(nx, ny);
            }
          }
      }
      ++next_label;

      if (area < cfg.min_blob_area) continue;
      const double bw = max_x - min_x + 1, bh = max_y - min_y + 1;
      if (bw < cfg.min_side || bw > cfg.max_side) continue;
      if (bh < cfg.min_side || bh > cfg.max_side) continue;
      const double aspect = bw / bh;
      if (aspect < cfg.min_aspect || aspect > cfg.max_aspect) continue;
      Detection d;
      d.box = {double(min_x), double(min_y), bw, bh};
      d.score = std::clamp(excess_sum / area / 30.0, 0.0, 1.0);
      dets.push_back(d);
    }

  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) {
                     return a.score > b.score;
                   });
  return dets;
}

// ---------------------------------------------------------------------------
// Detections JSON lines: {"frame": int, "box": [x,y,w,h], "score": float}.

inline void save_detections(const std::vector<Detection>& dets,
                            const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (const auto& d : dets) {
    nlohmann::json j{{"frame", d.frame_index},
                     {"box", {d.box.x, d.box.y, d.box.w, d.box.h}},
                     {"score", d.score}};
    out << j.dump() << "\n";
  }
}

// Detections grouped and ordered by frame index.
inline std::map<int, std::vector<Detection>> load_external_detections(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  std::map<int, std::vector<Detection>> by_frame;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Detection d;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      d.frame_index = j.at("frame").get<int>();
      const auto& b = j.at("box");
      d.box = {b.at(0).get<double>(), b.at(1).get<double>(),
               b.at(2).get<double>(), b.at(3).get<double>()};
      d.score = j.at("score").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("bad detection record at " + path.string() + ":" +
                        std::to_string(line_no) + ": " + e.what());
    }
    if (d.score < 0.0 || d.score > 1.0)
      throw ValidationError("detection score outside [0,1] at " +
                            path.string() + ":" + std::to_string(line_no));
    if (!d.box.valid())
      throw ValidationError("degenerate detection box at " + path.string() +
                            ":" + std::to_string(line_no));
    by_frame[d.frame_index].push_back(d);
  }
  return by_frame;
}

// Greedy per-frame matching in descending score; AP over the pooled ranked
// detections with recall denominator = total ground-truth boxes.
inline double detection_ap(
    const std::map<int, std::vector<Detection>>& detections,
    const std::map<int, std::vector<BoundingBox>>& ground_truth,
    double iou_threshold = 0.5) {
  std::vector<std::pair<double, bool>> hits;
  std::size_t num_gt = 0;
  for (const auto& [frame, boxes] : ground_truth) num_gt += boxes.size();

  for (const auto& [frame, dets] : detections) {
    std::vector<Detection> ranked = dets;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Detection& a, const Detection& b) {
                       return a.score > b.score;
                     });
    const auto it = ground_truth.find(frame);
    std::vector<bool> taken(it != ground_truth.end() ? it->second.size() : 0,
                            false);
    for (const auto& d : ranked) {
      int best = -1;
      double best_iou = iou_threshold;
      if (it != ground_truth.end())
        for (std::size_t g = 0; g < it->second.size(); ++g) {
          if (taken[g]) continue;
          const double v = iou(d.box, it->second[g]);
          if (v >= best_iou) {
            best_iou = v;
            best = int(g);
          }
        }
      if (best >= 0) taken[std::size_t(best)] = true;
      hits.emplace_back(d.score, best >= 0);
    }
  }
  return pr_from_scored_hits(std::move(hits), num_gt).ap;
}

}  // namespace ivd

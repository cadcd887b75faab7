#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "ivd/detect.hpp"
#include "ivd/irdata.hpp"

namespace ivd {

struct Track {
  int id = 0;
  std::vector<Detection> detections;  // frame indices strictly increasing

  int start_frame() const { return detections.front().frame_index; }
  int end_frame() const { return detections.back().frame_index; }
  int length() const { return end_frame() - start_frame() + 1; }

  double mean_score() const {
    double s = 0.0;
    for (const auto& d : detections) s += d.score;
    return s / double(detections.size());
  }

  BoundingBox avg_box() const {
    BoundingBox b;
    for (const auto& d : detections) {
      b.x += d.box.x;
      b.y += d.box.y;
      b.w += d.box.w;
      b.h += d.box.h;
    }
    const double n = double(detections.size());
    return {b.x / n, b.y / n, b.w / n, b.h / n};
  }
};

struct StationaryCar {
  Track track;
  BoundingBox avg_box;
  double mean_score = 0.0;
};

struct TrackerConfig {
  double iou_threshold = 0.6;  // strict: association requires IoU > 0.6
  int max_gap = 0;             // frames a track may go unmatched before closing
};

// Greedy IoU association over consecutive frames. Candidate (track,
// detection) pairs above the threshold are taken in order of IoU, then
// detection score, then lower track id; unmatched detections open new tracks.
inline std::vector<Track> build_tracks(
    const std::map<int, std::vector<Detection>>& per_frame,
    const TrackerConfig& cfg = {}) {
  std::vector<Track> closed, open;
  std::vector<int> unmatched_count;
  int next_id = 0;
  int prev_frame = 0;
  bool first = true;

  for (const auto& [frame, dets] : per_frame) {
    // Frame gaps in the input count against open tracks too.
    if (!first) {
      const int skipped = frame - prev_frame - 1;
      for (auto& c : unmatched_count) c += skipped;
    }
    first = false;
    prev_frame = frame;

    struct Cand {
      double iou_value;
      double score;
      std::size_t track_idx;
      std::size_t det_idx;
    };
    std::vector<Cand> cands;
    for (std::size_t ti = 0; ti < open.size(); ++ti)
      for (std::size_t di = 0; di < dets.size(); ++di) {
        const double v = iou(open[ti].detections.back().box, dets[di].box);
        if (v > cfg.iou_threshold)
          cands.push_back({v, dets[di].score, ti, di});
      }
    std::stable_sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
      if (a.iou_value != b.iou_value) return a.iou_value > b.iou_value;
      if (a.score != b.score) return a.score > b.score;
      return open[a.track_idx].id < open[b.track_idx].id;
    });

    std::vector<bool> track_used(open.size(), false), det_used(dets.size(), false);
    for (const auto& c : cands) {
      if (track_used[c.track_idx] || det_used[c.det_idx]) continue;
      track_used[c.track_idx] = true;
      det_used[c.det_idx] = true;
      Detection d = dets[c.det_idx];
      d.frame_index = frame;
      open[c.track_idx].detections.push_back(d);
      unmatched_count[c.track_idx] = 0;
    }

    // Close tracks that exceeded the gap budget.
    std::vector<Track> still_open;
    std::vector<int> still_count;
    for (std::size_t ti = 0; ti < open.size(); ++ti) {
      if (!track_used[ti]) ++unmatched_count[ti];
      if (unmatched_count[ti] > cfg.max_gap)
        closed.push_back(std::move(open[ti]));
      else {
        still_open.push_back(std::move(open[ti]));
        still_count.push_back(unmatched_count[ti]);
      }
    }
    open = std::move(still_open);
    unmatched_count = std::move(still_count);

    for (std::size_t di = 0; di < dets.size(); ++di) {
      if (det_used[di]) continue;
      Track t;
      t.id = next_id++;
      Detection d = dets[di];
      d.frame_index = frame;
      t.detections.push_back(d);
      open.push_back(std::move(t));
      unmatched_count.push_back(0);
    }
  }
  for (auto& t : open) closed.push_back(std::move(t));
  std::sort(closed.begin(), closed.end(),
            [](const Track& a, const Track& b) { return a.id < b.id; });
  return closed;
}

// Keep tracks parked for at least min_len frames with reliable detections;
// the fixed averaged box summarizes the stationary car.
inline std::vector<StationaryCar> filter_stationary(
    const std::vector<Track>& tracks, int min_len = 36,
    double min_score = 0.9) {
  std::vector<StationaryCar> cars;
  for (const auto& t : tracks) {
    if (t.length() < min_len) continue;
    const double ms = t.mean_score();
    if (ms < min_score) continue;
    cars.push_back({t, t.avg_box(), ms});
  }
  return cars;
}

// Track export JSON lines:
// {"track": id, "start": f0, "end": f1, "avg_box": [x,y,w,h], "mean_score": s}
inline void save_stationary_cars(const std::vector<StationaryCar>& cars,
                                 const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (const auto& c : cars) {
    nlohmann::json j{
        {"track", c.track.id},
        {"start", c.track.start_frame()},
        {"end", c.track.end_frame()},
        {"avg_box", {c.avg_box.x, c.avg_box.y, c.avg_box.w, c.avg_box.h}},
        {"mean_score", c.mean_score}};
    out << j.dump() << "\n";
  }
}

inline std::vector<StationaryCar> load_stationary_cars(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  std::vector<StationaryCar> cars;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      StationaryCar c;
      c.track.id = j.at("track").get<int>();
      const auto& b = j.at("avg_box");
      c.avg_box = {b.at(0).get<double>(), b.at(1).get<double>(),
                   b.at(2).get<double>(), b.at(3).get<double>()};
      c.mean_score = j.at("mean_score").get<double>();
      Detection d0, d1;
      d0.frame_index = j.at("start").get<int>();
      d1.frame_index = j.at("end").get<int>();
      d0.box = d1.box = c.avg_box;
      d0.score = d1.score = c.mean_score;
      c.track.detections = {d0, d1};
      cars.push_back(std::move(c));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("bad track record at " + path.string() + ":" +
                        std::to_string(line_no) + ": " + e.what());
    }
  }
  return cars;
}

}  // namespace ivd

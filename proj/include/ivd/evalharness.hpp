#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivd/errors.hpp"
#include "ivd/irdata.hpp"
#include "ivd/rng.hpp"

namespace ivd {

// ---------------------------------------------------------------------------
// Cross-validation fold plans.

struct Fold {
  std::vector<std::string> train_cars;
  std::string v1;                // held-out validation car
  std::optional<std::string> v2; // early-stopping car (leave-two-cars-out)
};

struct FoldPlan {
  std::vector<Fold> folds;
};

// Leave-one-car-out: one fold per car, that car as V1, no V2.
inline FoldPlan loco_folds(std::vector<std::string> car_ids) {
  if (car_ids.size() < 2)
    throw UsageError("leave-one-car-out needs at least 2 cars");
  std::sort(car_ids.begin(), car_ids.end());
  FoldPlan plan;
  for (const auto& v1 : car_ids) {
    Fold f;
    f.v1 = v1;
    for (const auto& c : car_ids)
      if (c != v1) f.train_cars.push_back(c);
    plan.folds.push_back(std::move(f));
  }
  return plan;
}

// Leave-two-cars-out: V1 rotates over all cars, V2 drawn uniformly from the
// remaining cars per fold (seeded).
inline FoldPlan ltco_folds(std::vector<std::string> car_ids,
                           std::uint64_t seed) {
  if (car_ids.size() < 3)
    throw UsageError("leave-two-cars-out needs at least 3 cars");
  std::sort(car_ids.begin(), car_ids.end());
  FoldPlan plan;
  Rng rng(Rng::derive(seed, 0x0f1dfu));
  for (const auto& v1 : car_ids) {
    std::vector<std::string> rest;
    for (const auto& c : car_ids)
      if (c != v1) rest.push_back(c);
    const std::string v2 = rest[rng.uniform_index(rest.size())];
    Fold f;
    f.v1 = v1;
    f.v2 = v2;
    for (const auto& c : rest)
      if (c != v2) f.train_cars.push_back(c);
    plan.folds.push_back(std::move(f));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Precision-recall / average precision (all-points AP).

struct PRPoint {
  double threshold;
  double precision;
  double recall;
};

struct PRCurve {
  std::vector<PRPoint> points;  // descending threshold
  double ap = 0.0;
};

// Curve from ranked (score, is_positive-hit) pairs with an explicit positive
// count; covers the detection case where misses never appear as samples.
// Ties in score are grouped at one threshold.
inline PRCurve pr_from_scored_hits(std::vector<std::pair<double, bool>> hits,
                                   std::size_t num_positives) {
  if (num_positives == 0) throw UsageError("AP undefined without positives");
  std::stable_sort(hits.begin(), hits.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  PRCurve curve;
  std::size_t tp = 0, fp = 0, prev_tp = 0;
  std::size_t i = 0;
  while (i < hits.size()) {
    const double thr = hits[i].first;
    for (; i < hits.size() && hits[i].first == thr; ++i)
      (hits[i].second ? tp : fp)++;
    const double precision = double(tp) / double(tp + fp);
    const double recall = double(tp) / double(num_positives);
    curve.points.push_back({thr, precision, recall});
    curve.ap += double(tp - prev_tp) * precision;
    prev_tp = tp;
  }
  curve.ap /= double(num_positives);
  return curve;
}

inline PRCurve pr_curve(const std::vector<double>& scores,
                        const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw UsageError("scores/labels size mismatch");
  std::vector<std::pair<double, bool>> hits;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    hits.emplace_back(scores[i], labels[i] != 0);
    pos += labels[i] != 0;
  }
  return pr_from_scored_hits(std::move(hits), pos);
}

inline double average_precision(const std::vector<double>& scores,
                                const std::vector<int>& labels) {
  return pr_curve(scores, labels).ap;
}

// ---------------------------------------------------------------------------
// Event matching: 50% area (box IoU) and 90% time overlap, time measured
// against the prediction's interval. Frame intervals are inclusive.

struct Event {
  BoundingBox box;
  int start = 0;
  int end = 0;  // inclusive
  double score = 0.0;
  EngineState label = EngineState::idling;
  View view = View::front;
};

struct MatchResult {
  std::vector<bool> tp;        // per prediction, in input order
  std::vector<int> matched_gt; // index of matched GT or -1
  std::size_t fn = 0;          // unmatched ground-truth events
};

inline MatchResult match_events(const std::vector<Event>& predictions,
                                const std::vector<Event>& ground_truth,
                                double area_overlap = 0.5,
                                double time_overlap = 0.9) {
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].score > predictions[b].score;
  });

  MatchResult res;
  res.tp.assign(predictions.size(), false);
  res.matched_gt.assign(predictions.size(), -1);
  std::vector<bool> gt_taken(ground_truth.size(), false);

  for (std::size_t pi : order) {
    const Event& p = predictions[pi];
    if (p.start > p.end) throw UsageError("event with start > end");
    int best = -1;
    double best_iou = 0.0;
    for (std::size_t gi = 0; gi < ground_truth.size(); ++gi) {
      if (gt_taken[gi]) continue;
      const Event& g = ground_truth[gi];
      if (g.label != p.label) continue;
      const double biou = iou(p.box, g.box);
      if (biou < area_overlap) continue;
      const int inter = std::min(p.end, g.end) - std::max(p.start, g.start) + 1;
      const int plen = p.end - p.start + 1;
      if (double(std::max(inter, 0)) / double(plen) < time_overlap) continue;
      if (biou > best_iou) {
        best_iou = biou;
        best = int(gi);
      }
    }
    if (best >= 0) {
      gt_taken[std::size_t(best)] = true;
      res.tp[pi] = true;
      res.matched_gt[pi] = best;
    }
  }
  for (bool taken : gt_taken) res.fn += !taken;
  return res;
}

inline void save_events(const std::vector<Event>& events,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (const auto& e : events) {
    nlohmann::json j;
    j["box"] = {e.box.x, e.box.y, e.box.w, e.box.h};
    j["start"] = e.start;
    j["end"] = e.end;
    j["score"] = e.score;
    j["label"] = to_string(e.label);
    j["view"] = to_string(e.view);
    out << j.dump() << "\n";
  }
}

inline std::vector<Event> load_events(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  std::vector<Event> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Event e;
      const auto& b = j.at("box");
      e.box = {b.at(0).get<double>(), b.at(1).get<double>(),
               b.at(2).get<double>(), b.at(3).get<double>()};
      e.start = j.at("start").get<int>();
      e.end = j.at("end").get<int>();
      e.score = j.at("score").get<double>();
      e.label = state_from_string(j.at("label").get<std::string>());
      e.view = view_from_string(j.at("view").get<std::string>());
      if (e.start > e.end)
        throw FormatError("event with start > end");
      events.push_back(e);
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " +
                        ex.what());
    }
  }
  return events;
}

// Short stable digest of a canonical JSON config, embedded in outputs so a
// report can be traced back to the exact configuration that produced it.
inline std::string config_digest(const nlohmann::json& config) {
  const std::string s = config.dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

// Mean of subsequence scores.
inline double sequence_score(const std::vector<double>& subsequence_scores) {
  if (subsequence_scores.empty())
    throw UsageError("sequence score needs at least one subsequence");
  return std::accumulate(subsequence_scores.begin(), subsequence_scores.end(),
                         0.0) /
         double(subsequence_scores.size());
}

// ---------------------------------------------------------------------------
// Report: one PR curve per view plus the pooled all-views curve.

struct EvalReport {
  // Curve keys: "front", "side", "rear", "all".
  std::map<std::string, PRCurve> curves;
  std::string mode;   // "subsequence" or "sequence"
  std::string boxes;  // "annotated" or "detected"
};

// Builds the 4-curve report from pooled held-out predictions. Predictions
// carry idling scores; ground-truth events carry the idling label for
// positive sequences only.
inline EvalReport make_report(const std::vector<Event>& predictions,
                              const std::vector<Event>& ground_truth,
                              const std::string& mode,
                              const std::string& boxes) {
  EvalReport report;
  report.mode = mode;
  report.boxes = boxes;
  const std::vector<std::optional<View>> selections = {
      View::front, View::side, View::rear, std::nullopt};
  for (const auto& sel : selections) {
    std::vector<Event> preds, gts;
    for (const auto& p : predictions)
      if (!sel || p.view == *sel) preds.push_back(p);
    for (const auto& g : ground_truth)
      if (!sel || g.view == *sel) gts.push_back(g);
    const MatchResult m = match_events(preds, gts);
    std::vector<std::pair<double, bool>> hits;
    for (std::size_t i = 0; i < preds.size(); ++i)
      hits.emplace_back(preds[i].score, m.tp[i]);
    const std::string key = sel ? to_string(*sel) : "all";
    report.curves[key] = pr_from_scored_hits(std::move(hits), gts.size());
  }
  return report;
}

inline void save_report_csv(const EvalReport& report,
                            const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "curve,threshold,precision,recall\n";
  for (const auto& [name, curve] : report.curves)
    for (const auto& p : curve.points)
      out << name << "," << p.threshold << "," << p.precision << ","
          << p.recall << "\n";
}

inline void save_report_json(const EvalReport& report,
                             const std::filesystem::path& path,
                             const std::string& config_digest = "") {
  nlohmann::json j;
  j["mode"] = report.mode;
  j["boxes"] = report.boxes;
  if (!config_digest.empty()) j["config_digest"] = config_digest;
  for (const auto& [name, curve] : report.curves) j["ap"][name] = curve.ap;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace ivd

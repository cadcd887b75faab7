// ivd: command-line front end for the idling-vehicle detection pipeline.
//
//   ivd synth   — generate a synthetic thermal dataset
//   ivd detect  — per-frame hot-region detection on one sequence
//   ivd track   — associate detections into stationary cars
//   ivd train   — train one classifier and write a checkpoint
//   ivd eval    — cross-validated evaluation over a dataset
//   ivd report  — rebuild PR curves from saved event files

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ivd/classify.hpp"
#include "ivd/detect.hpp"
#include "ivd/errors.hpp"
#include "ivd/evalharness.hpp"
#include "ivd/experiment.hpp"
#include "ivd/learn/checkpoint.hpp"
#include "ivd/thermosim.hpp"
#include "ivd/track.hpp"

namespace {

using nlohmann::json;

int cmd_synth(const std::string& out_dir, int cars, int frames,
              std::uint64_t seed, double noise, double ambient) {
  ivd::DatasetConfig cfg;
  cfg.n_cars = cars;
  cfg.n_frames = frames;
  cfg.seed = seed;
  cfg.scene.noise_sigma = noise;
  cfg.scene.ambient = ambient;
  const json digest_src = {{"cmd", "synth"},   {"cars", cars},
                           {"frames", frames}, {"seed", seed},
                           {"noise", noise},   {"ambient", ambient}};
  ivd::build_dataset(cfg, out_dir, ivd::config_digest(digest_src));
  std::printf("wrote %d sequences to %s\n", cars * 6, out_dir.c_str());
  return 0;
}

int cmd_detect(const std::string& input, const std::string& out,
               double threshold, const std::string& ambient_mode,
               double fixed_ambient) {
  ivd::DetectorConfig cfg;
  cfg.excess_threshold = threshold;
  if (ambient_mode == "fixed") {
    cfg.ambient_estimator = ivd::AmbientEstimator::fixed;
    cfg.fixed_ambient = fixed_ambient;
  } else if (ambient_mode != "median") {
    throw ivd::UsageError("--ambient must be median or fixed");
  }
  const ivd::IRSequence seq = ivd::load_sequence(input);
  std::vector<ivd::Detection> dets;
  for (std::size_t fi = 0; fi < seq.length(); ++fi) {
    auto fd = ivd::detect_cars(seq.frames[fi], cfg);
    for (auto& d : fd) d.frame_index = int(fi);
    dets.insert(dets.end(), fd.begin(), fd.end());
  }
  ivd::save_detections(dets, out);
  std::printf("%zu detections over %zu frames -> %s\n", dets.size(),
              seq.length(), out.c_str());
  return 0;
}

int cmd_track(const std::string& detections_path, const std::string& out,
              double iou_threshold, int min_len, double min_score) {
  const auto by_frame = ivd::load_external_detections(detections_path);
  ivd::TrackerConfig cfg;
  cfg.iou_threshold = iou_threshold;
  const auto tracks = ivd::build_tracks(by_frame, cfg);
  const auto cars = ivd::filter_stationary(tracks, min_len, min_score);
  ivd::save_stationary_cars(cars, out);
  std::printf("%zu tracks, %zu stationary cars -> %s\n", tracks.size(),
              cars.size(), out.c_str());
  return 0;
}

ivd::ExperimentConfig make_experiment_config(
    const std::string& model, const std::string& cv, const std::string& boxes,
    const std::string& mode, int restarts, std::uint64_t seed,
    int train_stride, int epochs, bool no_augment) {
  ivd::ExperimentConfig cfg;
  cfg.family = model;
  cfg.cv = cv;
  cfg.boxes = boxes;
  cfg.mode = mode;
  cfg.restarts = restarts;
  cfg.seed = seed;
  cfg.train_stride = train_stride;
  cfg.augment_train = !no_augment;
  if (epochs > 0) cfg.optimizer.max_epochs = epochs;
  return cfg;
}

int cmd_train(const std::string& data_dir, const std::string& model,
              const std::string& out, std::uint64_t seed, int epochs,
              int train_stride, const std::string& v2_car, bool no_augment) {
  const auto ds = ivd::load_dataset(data_dir);
  ivd::ExperimentConfig cfg = make_experiment_config(
      model, "ltco", "annotated", "sequence", 1, seed, train_stride, epochs,
      no_augment);

  std::map<std::string, const ivd::Annotation*> ann;
  for (const auto& a : ds.annotations) ann[a.sequence_id] = &a;
  std::vector<const ivd::IRSequence*> train_seqs, v2_seqs;
  std::vector<ivd::BoundingBox> train_boxes, v2_boxes;
  for (const auto& seq : ds.sequences) {
    const auto it = ann.find(seq.sequence_id);
    if (it == ann.end())
      throw ivd::UsageError("no annotation for " + seq.sequence_id);
    if (!v2_car.empty() && seq.car_id == v2_car) {
      v2_seqs.push_back(&seq);
      v2_boxes.push_back(it->second->box);
    } else {
      train_seqs.push_back(&seq);
      train_boxes.push_back(it->second->box);
    }
  }
  if (train_seqs.empty()) throw ivd::UsageError("no training sequences");

  const json meta = {{"data", data_dir}, {"seed", seed}, {"model", model}};
  const ivd::OptimizerConfig opt = ivd::optimizer_for_family(cfg);

  if (model == "svm") {
    auto set = ivd::internal::temporal_set<double>(train_seqs, train_boxes,
                                                   cfg.train_stride, false);
    std::vector<std::vector<double>> feats;
    std::vector<int> labels;
    for (std::size_t i = 0; i < set.size(); ++i) {
      feats.emplace_back(set.x.ptr() + i * std::size_t(ivd::kWindowFrames),
                         set.x.ptr() + (i + 1) * std::size_t(ivd::kWindowFrames));
      labels.push_back(set.labels[i] ? 1 : -1);
    }
    ivd::SvmConfig sc = cfg.svm;
    sc.seed = seed;
    const ivd::SvmModel svm = ivd::svm_train(feats, labels, sc);
    ivd::save_svm_checkpoint(svm, out, meta);
  } else {
    const bool temporal = ivd::family_is_temporal(model);
    ivd::LabeledSet<float> train_set, v2_set;
    if (temporal) {
      train_set = ivd::internal::temporal_set<float>(
          train_seqs, train_boxes, cfg.train_stride, model == "lstm");
      v2_set = ivd::internal::temporal_set<float>(v2_seqs, v2_boxes, 1,
                                                  model == "lstm");
    } else {
      train_set = ivd::internal::stack_set<float>(
          train_seqs, train_boxes, cfg.train_stride, cfg, cfg.augment_train,
          ivd::Rng::derive(seed, 0xa0));
      v2_set =
          ivd::internal::stack_set<float>(v2_seqs, v2_boxes, 1, cfg, false, 0);
    }
    ivd::Model<float> m(ivd::spec_for_family(cfg));
    const auto fr = ivd::fit(m, train_set, v2_set, opt, seed, cfg.fit_options);
    ivd::save_checkpoint(m, out, meta);
    std::printf("final train loss %.4f, train acc %.3f\n",
                fr.history.back().train_loss, fr.history.back().train_acc);
  }
  std::printf("checkpoint -> %s\n", out.c_str());
  return 0;
}

int cmd_eval(const std::string& data_dir, const std::string& model,
             const std::string& cv, const std::string& boxes,
             const std::string& mode, int restarts, std::uint64_t seed,
             int train_stride, int epochs, bool no_augment,
             const std::string& out_prefix) {
  const auto ds = ivd::load_dataset(data_dir);
  const ivd::ExperimentConfig cfg = make_experiment_config(
      model, cv, boxes, mode, restarts, seed, train_stride, epochs,
      no_augment);
  const auto result = ivd::run_experiment(ds.sequences, ds.annotations, cfg);

  const json digest_src = {{"cmd", "eval"},       {"model", model},
                           {"cv", cv},            {"boxes", boxes},
                           {"mode", mode},        {"restarts", restarts},
                           {"seed", seed},        {"stride", train_stride},
                           {"epochs", epochs},    {"augment", !no_augment}};
  ivd::save_events(result.predictions, out_prefix + "_predictions.jsonl");
  ivd::save_events(result.ground_truth, out_prefix + "_ground_truth.jsonl");
  ivd::save_report_csv(result.report, out_prefix + "_curves.csv");
  ivd::save_report_json(result.report, out_prefix + "_report.json",
                        ivd::config_digest(digest_src));
  for (const auto& [name, curve] : result.report.curves)
    std::printf("AP[%s] = %.4f\n", name.c_str(), curve.ap);
  if (!result.undetected.empty())
    std::printf("%zu sequences had no detected stationary car\n",
                result.undetected.size());
  return 0;
}

int cmd_report(const std::string& predictions_path, const std::string& gt_path,
               const std::string& mode, const std::string& boxes,
               const std::string& out_prefix) {
  const auto preds = ivd::load_events(predictions_path);
  const auto gts = ivd::load_events(gt_path);
  const auto report = ivd::make_report(preds, gts, mode, boxes);
  ivd::save_report_csv(report, out_prefix + "_curves.csv");
  ivd::save_report_json(report, out_prefix + "_report.json");
  for (const auto& [name, curve] : report.curves)
    std::printf("AP[%s] = %.4f\n", name.c_str(), curve.ap);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"idling-vehicle detection pipeline"};
  app.require_subcommand(1);

  // synth
  std::string out_dir = "dataset";
  int cars = 8, frames = 60;
  std::uint64_t seed = 1;
  double noise = 0.3, ambient = 30.0;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--out", out_dir, "output directory");
  synth->add_option("--cars", cars, "number of cars");
  synth->add_option("--frames", frames, "frames per sequence (>= 36)");
  synth->add_option("--seed", seed, "dataset seed");
  synth->add_option("--noise", noise, "sensor noise sigma");
  synth->add_option("--ambient", ambient, "ambient temperature [C]");

  // detect
  std::string input, out = "detections.jsonl", ambient_mode = "median";
  double threshold = 5.0, fixed_ambient = 30.0;
  auto* detect = app.add_subcommand("detect", "detect hot regions");
  detect->add_option("--input", input, "input .irs sequence")->required();
  detect->add_option("--out", out, "output detections JSONL");
  detect->add_option("--threshold", threshold, "excess over ambient [C]");
  detect->add_option("--ambient", ambient_mode, "median | fixed");
  detect->add_option("--ambient-value", fixed_ambient,
                     "ambient for --ambient fixed");

  // track
  std::string det_path, track_out = "stationary.jsonl";
  double iou_threshold = 0.6, min_score = 0.9;
  int min_len = 36;
  auto* track = app.add_subcommand("track", "track and filter stationary cars");
  track->add_option("--detections", det_path, "detections JSONL")->required();
  track->add_option("--out", track_out, "output stationary-car JSONL");
  track->add_option("--iou", iou_threshold, "association IoU threshold");
  track->add_option("--min-length", min_len, "minimum track length [frames]");
  track->add_option("--min-score", min_score, "minimum mean detection score");

  // train
  std::string data_dir, model = "cnn2d", ckpt_out = "model.ivdc", v2_car;
  int epochs = 0, train_stride = 6;
  bool no_augment = false;
  auto* train = app.add_subcommand("train", "train a classifier");
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--model", model,
                    "cnn1d | lstm | svm | cnn2d | cnn_lstm");
  train->add_option("--out", ckpt_out, "checkpoint path");
  train->add_option("--seed", seed, "training seed");
  train->add_option("--epochs", epochs, "override max epochs");
  train->add_option("--train-stride", train_stride, "window stride (train)");
  train->add_option("--v2", v2_car, "car held out for early stopping");
  train->add_flag("--no-augment", no_augment, "disable augmentation");

  // eval
  std::string cv = "ltco", boxes = "annotated", mode = "sequence",
              out_prefix = "eval";
  int restarts = 2;
  auto* eval = app.add_subcommand("eval", "cross-validated evaluation");
  eval->add_option("--data", data_dir, "dataset directory")->required();
  eval->add_option("--model", model, "cnn1d | lstm | svm | cnn2d | cnn_lstm");
  eval->add_option("--cv", cv, "loco | ltco");
  eval->add_option("--boxes", boxes, "annotated | detected");
  eval->add_option("--mode", mode, "sequence | subsequence");
  eval->add_option("--restarts", restarts, "training restarts per fold");
  eval->add_option("--seed", seed, "experiment seed");
  eval->add_option("--epochs", epochs, "override max epochs");
  eval->add_option("--train-stride", train_stride, "window stride (train)");
  eval->add_flag("--no-augment", no_augment, "disable augmentation");
  eval->add_option("--out", out_prefix, "output path prefix");

  // report
  std::string preds_path, gt_path;
  auto* report = app.add_subcommand("report", "PR curves from event files");
  report->add_option("--predictions", preds_path, "predictions JSONL")
      ->required();
  report->add_option("--ground-truth", gt_path, "ground-truth JSONL")
      ->required();
  report->add_option("--mode", mode, "sequence | subsequence");
  report->add_option("--boxes", boxes, "annotated | detected");
  report->add_option("--out", out_prefix, "output path prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return cmd_synth(out_dir, cars, frames, seed, noise, ambient);
    if (detect->parsed())
      return cmd_detect(input, out, threshold, ambient_mode, fixed_ambient);
    if (track->parsed())
      return cmd_track(det_path, track_out, iou_threshold, min_len, min_score);
    if (train->parsed())
      return cmd_train(data_dir, model, ckpt_out, seed, epochs, train_stride,
                       v2_car, no_augment);
    if (eval->parsed())
      return cmd_eval(data_dir, model, cv, boxes, mode, restarts, seed,
                      train_stride, epochs, no_augment, out_prefix);
    if (report->parsed())
      return cmd_report(preds_path, gt_path, mode, boxes, out_prefix);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivd/errors.hpp"

namespace ivd {

static_assert(std::endian::native == std::endian::little,
              "IRS container I/O assumes a little-endian host");

// Plausible LWIR range; engine internals cap out at 600-700 degC.
inline constexpr float kMinPlausibleTemp = -40.0f;
inline constexpr float kMaxPlausibleTemp = 700.0f;

enum class View { front, side, rear };
enum class EngineState { idling, stopped, unknown };

inline std::string to_string(View v) {
  switch (v) {
    case View::front: return "front";
    case View::side: return "side";
    case View::rear: return "rear";
  }
  throw DomainError("invalid view enum");
}

inline std::string to_string(EngineState s) {
  switch (s) {
    case EngineState::idling: return "idling";
    case EngineState::stopped: return "stopped";
    case EngineState::unknown: return "unknown";
  }
  throw DomainError("invalid engine state enum");
}

inline View view_from_string(const std::string& s) {
  if (s == "front") return View::front;
  if (s == "side") return View::side;
  if (s == "rear") return View::rear;
  throw DomainError("unknown view: " + s);
}

inline EngineState state_from_string(const std::string& s) {
  if (s == "idling") return EngineState::idling;
  if (s == "stopped") return EngineState::stopped;
  if (s == "unknown") return EngineState::unknown;
  throw DomainError("unknown engine state: " + s);
}

// Axis-aligned box, real-valued since averaged boxes are not integral.
struct BoundingBox {
  double x = 0, y = 0, w = 0, h = 0;

  double x2() const { return x + w; }
  double y2() const { return y + h; }
  double area() const { return w * h; }
  bool valid() const { return w > 0 && h > 0; }
};

inline BoundingBox intersect(const BoundingBox& a, const BoundingBox& b) {
  const double x1 = std::max(a.x, b.x), y1 = std::max(a.y, b.y);
  const double x2 = std::min(a.x2(), b.x2()), y2 = std::min(a.y2(), b.y2());
  return {x1, y1, x2 - x1, y2 - y1};
}

// Intersection over union with real-valued areas.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const BoundingBox c = intersect(a, b);
  if (!c.valid()) return 0.0;
  return c.area() / (a.area() + b.area() - c.area());
}

struct IRFrame {
  int width = 0;
  int height = 0;
  std::vector<float> temps;  // row-major, degC

  float at(int x, int y) const { return temps[std::size_t(y) * width + x]; }
  float& at(int x, int y) { return temps[std::size_t(y) * width + x]; }

  BoundingBox bounds() const {
    return {0, 0, double(width), double(height)};
  }

  void validate() const {
    if (width <= 0 || height <= 0)
      throw DataError("frame dimensions must be positive");
    if (temps.size() != std::size_t(width) * height)
      throw DataError("temps length does not match width*height");
    for (float t : temps) {
      if (!std::isfinite(t))
        throw DataError("non-finite temperature value");
      if (t < kMinPlausibleTemp || t > kMaxPlausibleTemp)
        throw DataError("temperature outside plausible range: " +
                        std::to_string(t));
    }
  }
};

struct IRSequence {
  std::vector<IRFrame> frames;
  double frame_interval = 5.0;  // seconds
  std::string sequence_id;
  std::string car_id;
  View view = View::front;
  EngineState engine_state = EngineState::unknown;

  std::size_t length() const { return frames.size(); }
  double duration() const {
    return frames.empty() ? 0.0 : (frames.size() - 1) * frame_interval;
  }

  void validate() const {
    if (frames.empty()) throw DataError("sequence must have at least 1 frame");
    if (frame_interval <= 0) throw DataError("frame interval must be > 0");
    for (const auto& f : frames) {
      f.validate();
      if (f.width != frames[0].width || f.height != frames[0].height)
        throw DataError("all frames must share dimensions");
    }
  }
};

struct Annotation {
  std::string sequence_id;
  BoundingBox box;
  View view = View::front;
  EngineState engine_state = EngineState::unknown;
};

// ---------------------------------------------------------------------------
// IRS container: magic "IRSQ"; u32 width, height, frame_count,
// frame_interval_ms; then frame-major row-major float32, all little-endian.

inline void save_sequence(const IRSequence& seq,
                          const std::filesystem::path& path) {
  seq.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write("IRSQ", 4);
  const std::uint32_t header[4] = {
      std::uint32_t(seq.frames[0].width), std::uint32_t(seq.frames[0].height),
      std::uint32_t(seq.frames.size()),
      std::uint32_t(std::lround(seq.frame_interval * 1000.0))};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (const auto& f : seq.frames)
    out.write(reinterpret_cast<const char*>(f.temps.data()),
              std::streamsize(f.temps.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + path.string());
}

inline IRSequence load_sequence(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "IRSQ", 4) != 0)
    throw FormatError("bad magic in " + path.string());
  std::uint32_t header[4];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) throw FormatError("short header in " + path.string());
  const std::uint32_t w = header[0], h = header[1], n = header[2];
  if (w == 0 || h == 0 || n == 0 || header[3] == 0)
    throw FormatError("degenerate header fields in " + path.string());

  IRSequence seq;
  seq.frame_interval = header[3] / 1000.0;
  seq.frames.resize(n);
  for (auto& f : seq.frames) {
    f.width = int(w);
    f.height = int(h);
    f.temps.resize(std::size_t(w) * h);
    in.read(reinterpret_cast<char*>(f.temps.data()),
            std::streamsize(f.temps.size() * sizeof(float)));
    if (in.gcount() != std::streamsize(f.temps.size() * sizeof(float)))
      throw TruncationError("payload shorter than declared frame count in " +
                            path.string());
  }
  // Trailing bytes mean the header undercounts the payload.
  if (in.peek() != std::char_traits<char>::eof())
    throw TruncationError("payload longer than declared frame count in " +
                          path.string());
  seq.validate();
  return seq;
}

inline void save_manifest(const IRSequence& seq, const std::string& file_name,
                          const std::filesystem::path& path) {
  nlohmann::json j{{"sequence_id", seq.sequence_id},
                   {"car_id", seq.car_id},
                   {"view", to_string(seq.view)},
                   {"engine_state", to_string(seq.engine_state)},
                   {"file", file_name}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

inline void load_manifest(IRSequence& seq, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    seq.sequence_id = j.at("sequence_id").get<std::string>();
    seq.car_id = j.at("car_id").get<std::string>();
    seq.view = view_from_string(j.at("view").get<std::string>());
    seq.engine_state = state_from_string(j.at("engine_state").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad manifest " + path.string() + ": " + e.what());
  }
}

inline void save_annotations(const std::vector<Annotation>& anns,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (const auto& a : anns) {
    nlohmann::json j{{"sequence_id", a.sequence_id},
                     {"box", {a.box.x, a.box.y, a.box.w, a.box.h}},
                     {"view", to_string(a.view)},
                     {"engine_state", to_string(a.engine_state)}};
    out << j.dump() << "\n";
  }
}

inline std::vector<Annotation> load_annotations(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  std::vector<Annotation> anns;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      Annotation a;
      a.sequence_id = j.at("sequence_id").get<std::string>();
      const auto& b = j.at("box");
      a.box = {b.at(0).get<double>(), b.at(1).get<double>(),
               b.at(2).get<double>(), b.at(3).get<double>()};
      a.view = view_from_string(j.at("view").get<std::string>());
      a.engine_state = state_from_string(j.at("engine_state").get<std::string>());
      anns.push_back(a);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("bad annotation at " + path.string() + ":" +
                        std::to_string(line_no) + ": " + e.what());
    }
  }
  return anns;
}

// ---------------------------------------------------------------------------
// Geometry over frames. A pixel (px, py) belongs to a box iff its center
// (px+0.5, py+0.5) lies in [x, x+w) x [y, y+h).

struct PixelSpan {
  int x0, y0, x1, y1;  // half-open pixel index ranges
  bool empty() const { return x0 >= x1 || y0 >= y1; }
};

inline PixelSpan pixel_span(const IRFrame& frame, const BoundingBox& box) {
  BoundingBox c = intersect(box, frame.bounds());
  if (!c.valid()) return {0, 0, 0, 0};
  // First pixel whose center >= edge is ceil(edge - 0.5).
  const auto lo = [](double e) { return int(std::ceil(e - 0.5)); };
  // Last pixel with center < edge, half-open: ceil(edge - 0.5).
  PixelSpan s{std::max(0, lo(c.x)), std::max(0, lo(c.y)),
              std::min(frame.width, lo(c.x2())),
              std::min(frame.height, lo(c.y2()))};
  return s;
}

inline float max_over_box(const IRFrame& frame, const BoundingBox& box) {
  const PixelSpan s = pixel_span(frame, box);
  if (s.empty()) throw GeometryError("box does not intersect frame");
  float best = -std::numeric_limits<float>::infinity();
  for (int y = s.y0; y < s.y1; ++y)
    for (int x = s.x0; x < s.x1; ++x) best = std::max(best, frame.at(x, y));
  return best;
}

// Bilinear crop-and-resize. The box is clipped to frame bounds first; output
// pixel centers are mapped linearly into the clipped crop and sampled with
// border clamping, so values stay within [min, max] of the source crop.
inline IRFrame crop_resize(const IRFrame& frame, const BoundingBox& box,
                           int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0)
    throw GeometryError("output size must be positive");
  BoundingBox c = intersect(box, frame.bounds());
  if (!c.valid()) throw GeometryError("box does not intersect frame");

  const PixelSpan span = pixel_span(frame, c);
  if (span.empty()) throw GeometryError("clipped box covers no pixel centers");

  IRFrame out;
  out.width = out_w;
  out.height = out_h;
  out.temps.resize(std::size_t(out_w) * out_h);

  // Sampling is clamped to the crop's own pixels, so every output value is a
  // convex combination of crop values.
  const auto sample = [&](double sx, double sy) -> float {
    sx = std::clamp(sx, double(span.x0), double(span.x1 - 1));
    sy = std::clamp(sy, double(span.y0), double(span.y1 - 1));
    const int x0 = int(std::floor(sx));
    const int y0 = int(std::floor(sy));
    const int x1 = std::min(x0 + 1, span.x1 - 1);
    const int y1 = std::min(y0 + 1, span.y1 - 1);
    const double fx = std::clamp(sx - x0, 0.0, 1.0);
    const double fy = std::clamp(sy - y0, 0.0, 1.0);
    const double top = frame.at(x0, y0) * (1 - fx) + frame.at(x1, y0) * fx;
    const double bot = frame.at(x0, y1) * (1 - fx) + frame.at(x1, y1) * fx;
    return float(top * (1 - fy) + bot * fy);
  };

  for (int oy = 0; oy < out_h; ++oy) {
    const double sy = c.y + (oy + 0.5) * c.h / out_h - 0.5;
    for (int ox = 0; ox < out_w; ++ox) {
      const double sx = c.x + (ox + 0.5) * c.w / out_w - 0.5;
      out.at(ox, oy) = sample(sx, sy);
    }
  }
  return out;
}

}  // namespace ivd

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivd/errors.hpp"
#include "ivd/learn/model.hpp"
#include "ivd/learn/svm.hpp"

namespace ivd {

// Checkpoint container: magic "IVDC", u32 header length, JSON header (model
// spec + tensor name/shape table + metadata), then raw little-endian float32
// tensor payloads in table order.

namespace internal {

inline void write_checkpoint(const nlohmann::json& header,
                             const std::vector<std::vector<float>>& payloads,
                             const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  const std::string hs = header.dump();
  out.write("IVDC", 4);
  const std::uint32_t len = std::uint32_t(hs.size());
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(hs.data(), std::streamsize(hs.size()));
  for (const auto& p : payloads)
    out.write(reinterpret_cast<const char*>(p.data()),
              std::streamsize(p.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::pair<nlohmann::json, std::vector<std::vector<float>>>
read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "IVDC")
    throw FormatError("bad checkpoint magic in " + path.string());
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 4);
  std::string hs(len, '\0');
  in.read(hs.data(), len);
  if (!in) throw FormatError("short checkpoint header in " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad checkpoint header: " + std::string(e.what()));
  }
  std::vector<std::vector<float>> payloads;
  for (const auto& t : header.at("tensors")) {
    std::size_t n = 1;
    for (int d : t.at("shape").get<std::vector<int>>()) n *= std::size_t(d);
    std::vector<float> data(n);
    in.read(reinterpret_cast<char*>(data.data()),
            std::streamsize(n * sizeof(float)));
    if (in.gcount() != std::streamsize(n * sizeof(float)))
      throw TruncationError("checkpoint payload shorter than tensor table in " +
                            path.string());
    payloads.push_back(std::move(data));
  }
  return {std::move(header), std::move(payloads)};
}

}  // namespace internal

template <class T>
inline void save_checkpoint(Model<T>& model, const std::filesystem::path& path,
                            const nlohmann::json& metadata = {}) {
  nlohmann::json header;
  header["kind"] = "neural";
  header["model"] = model_spec_to_json(model.spec());
  if (!metadata.is_null() && !metadata.empty()) header["meta"] = metadata;
  header["tensors"] = nlohmann::json::array();
  std::vector<std::vector<float>> payloads;
  const auto names = model.param_names();
  const auto params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    header["tensors"].push_back(
        {{"name", names[i]}, {"shape", params[i]->shape}});
    std::vector<float> data(params[i]->data.size());
    for (std::size_t j = 0; j < data.size(); ++j)
      data[j] = float(params[i]->data[j]);
    payloads.push_back(std::move(data));
  }
  internal::write_checkpoint(header, payloads, path);
}

inline ModelSpec peek_checkpoint_spec(const std::filesystem::path& path) {
  auto [header, payloads] = internal::read_checkpoint(path);
  if (header.at("kind") != "neural")
    throw FormatError("not a neural checkpoint: " + path.string());
  return model_spec_from_json(header.at("model"));
}

template <class T>
inline void load_checkpoint(Model<T>& model,
                            const std::filesystem::path& path) {
  auto [header, payloads] = internal::read_checkpoint(path);
  const auto params = model.params();
  if (payloads.size() != params.size())
    throw FormatError("checkpoint tensor count mismatch in " + path.string());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (payloads[i].size() != params[i]->data.size())
      throw FormatError("checkpoint tensor size mismatch in " + path.string());
    for (std::size_t j = 0; j < payloads[i].size(); ++j)
      params[i]->data[j] = T(payloads[i][j]);
  }
}

// SVM checkpoints reuse the same container with tensors for the support
// vectors and dual coefficients.
inline void save_svm_checkpoint(const SvmModel& model,
                                const std::filesystem::path& path,
                                const nlohmann::json& metadata = {}) {
  const int n = int(model.support_vectors.size());
  const int d = n ? int(model.support_vectors[0].size()) : 1;
  nlohmann::json header;
  header["kind"] = "svm";
  header["gamma"] = model.gamma;
  header["bias"] = model.bias;
  header["platt_a"] = model.platt_a;
  header["platt_b"] = model.platt_b;
  if (!metadata.is_null() && !metadata.empty()) header["meta"] = metadata;
  header["tensors"] = nlohmann::json::array();
  header["tensors"].push_back(
      {{"name", "support_vectors"}, {"shape", {std::max(n, 1), d}}});
  header["tensors"].push_back({{"name", "alpha_y"}, {"shape", {std::max(n, 1), 1}}});
  std::vector<std::vector<float>> payloads(2);
  payloads[0].resize(std::size_t(std::max(n, 1)) * d, 0.0f);
  payloads[1].resize(std::size_t(std::max(n, 1)), 0.0f);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j)
      payloads[0][std::size_t(i) * d + j] = float(model.support_vectors[i][j]);
    payloads[1][std::size_t(i)] = float(model.alpha_y[i]);
  }
  internal::write_checkpoint(header, payloads, path);
}

inline SvmModel load_svm_checkpoint(const std::filesystem::path& path) {
  auto [header, payloads] = internal::read_checkpoint(path);
  if (header.at("kind") != "svm")
    throw FormatError("not an svm checkpoint: " + path.string());
  SvmModel model;
  model.gamma = header.at("gamma").get<double>();
  model.bias = header.at("bias").get<double>();
  model.platt_a = header.at("platt_a").get<double>();
  model.platt_b = header.at("platt_b").get<double>();
  const auto shape =
      header.at("tensors")[0].at("shape").get<std::vector<int>>();
  const int n = shape[0], d = shape[1];
  for (int i = 0; i < n; ++i) {
    std::vector<double> sv(std::size_t(d), 0.0);
    for (int j = 0; j < d; ++j)
      sv[std::size_t(j)] = payloads[0][std::size_t(i) * std::size_t(d) + std::size_t(j)];
    model.support_vectors.push_back(std::move(sv));
    model.alpha_y.push_back(payloads[1][std::size_t(i)]);
  }
  return model;
}

}  // namespace ivd

#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ivd/errors.hpp"
#include "ivd/learn/layers.hpp"

namespace ivd {

enum class LayerKind { conv1d, conv2d, maxpool, dense, dropout, lstm, softmax };

struct LayerSpec {
  LayerKind kind;
  int filters = 0;          // conv
  int kernel = 3;           // conv
  int pool = 2;             // maxpool
  int units = 0;            // dense / lstm
  double rate = 0.0;        // dropout / lstm input dropout
  double recurrent_rate = 0.0;
  Activation activation = Activation::relu;
};

// A model is an optional per-timestep extractor (stem) followed by trunk
// layers ending in a 2-way softmax. Plain sequential models leave the stem
// empty. Inputs are normalized as (x - input_shift) * input_scale on entry.
struct ModelSpec {
  std::string family;            // svm | cnn1d | lstm | cnn2d | cnn_lstm
  std::vector<int> input_shape;  // without batch
  std::vector<LayerSpec> stem;   // applied per time step when non-empty
  std::vector<LayerSpec> trunk;
  int num_classes = 2;
  double input_shift = 0.0;
  double input_scale = 1.0;
};

namespace internal {

inline std::string kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::dense: return "dense";
    case LayerKind::dropout: return "dropout";
    case LayerKind::lstm: return "lstm";
    case LayerKind::softmax: return "softmax";
  }
  throw SpecError("invalid layer kind");
}

inline LayerKind kind_from_name(const std::string& s) {
  for (LayerKind k : {LayerKind::conv1d, LayerKind::conv2d, LayerKind::maxpool,
                      LayerKind::dense, LayerKind::dropout, LayerKind::lstm,
                      LayerKind::softmax})
    if (kind_name(k) == s) return k;
  throw SpecError("unknown layer kind: " + s);
}

inline std::string act_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::linear: return "linear";
    case Activation::tanh_act: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  throw SpecError("invalid activation");
}

inline Activation act_from_name(const std::string& s) {
  for (Activation a : {Activation::relu, Activation::linear,
                       Activation::tanh_act, Activation::sigmoid})
    if (act_name(a) == s) return a;
  throw SpecError("unknown activation: " + s);
}

}  // namespace internal

inline nlohmann::json model_spec_to_json(const ModelSpec& spec) {
  const auto layers_json = [](const std::vector<LayerSpec>& layers) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& l : layers)
      arr.push_back({{"kind", internal::kind_name(l.kind)},
                     {"filters", l.filters},
                     {"kernel", l.kernel},
                     {"pool", l.pool},
                     {"units", l.units},
                     {"rate", l.rate},
                     {"recurrent_rate", l.recurrent_rate},
                     {"activation", internal::act_name(l.activation)}});
    return arr;
  };
  return {{"family", spec.family},       {"input_shape", spec.input_shape},
          {"stem", layers_json(spec.stem)}, {"trunk", layers_json(spec.trunk)},
          {"num_classes", spec.num_classes}, {"input_shift", spec.input_shift},
          {"input_scale", spec.input_scale}};
}

inline ModelSpec model_spec_from_json(const nlohmann::json& j) {
  const auto layers_from = [](const nlohmann::json& arr) {
    std::vector<LayerSpec> layers;
    for (const auto& e : arr) {
      LayerSpec l;
      l.kind = internal::kind_from_name(e.at("kind").get<std::string>());
      l.filters = e.at("filters").get<int>();
      l.kernel = e.at("kernel").get<int>();
      l.pool = e.at("pool").get<int>();
      l.units = e.at("units").get<int>();
      l.rate = e.at("rate").get<double>();
      l.recurrent_rate = e.at("recurrent_rate").get<double>();
      l.activation = internal::act_from_name(e.at("activation").get<std::string>());
      layers.push_back(l);
    }
    return layers;
  };
  ModelSpec spec;
  spec.family = j.at("family").get<std::string>();
  spec.input_shape = j.at("input_shape").get<std::vector<int>>();
  spec.stem = layers_from(j.at("stem"));
  spec.trunk = layers_from(j.at("trunk"));
  spec.num_classes = j.at("num_classes").get<int>();
  spec.input_shift = j.at("input_shift").get<double>();
  spec.input_scale = j.at("input_scale").get<double>();
  return spec;
}

// ---------------------------------------------------------------------------

template <class T>
class Model {
 public:
  explicit Model(const ModelSpec& spec) : spec_(spec) { build(); }

  const ModelSpec& spec() const { return spec_; }

  void init(Rng& rng) {
    for (auto& l : stem_) l->init(rng);
    for (auto& l : trunk_) l->init(rng);
  }

  // Input [B, ...input_shape...]. Returns logits [B, num_classes].
  Tensor<T> forward(const Tensor<T>& input, bool training, Rng& rng) {
    check_input(input);
    Tensor<T> x = input;
    if (spec_.input_shift != 0 || spec_.input_scale != 1)
      for (auto& v : x.data)
        v = T((v - spec_.input_shift) * spec_.input_scale);

    if (stem_.empty()) {
      for (auto& l : trunk_) x = l->forward(x, training, rng);
      if (!training) clear_caches();
      return x;
    }

    // Shared extractor per time step, then the recurrent trunk.
    const int batch = x.dim(0), steps = x.dim(1);
    const int hw = x.dim(2) * x.dim(3);
    Tensor<T> features;
    int feat_dim = 0;
    for (int t = 0; t < steps; ++t) {
      Tensor<T> xt({batch, 1, x.dim(2), x.dim(3)});
      for (int bi = 0; bi < batch; ++bi)
        std::copy_n(x.ptr() + (std::size_t(bi) * steps + t) * hw, hw,
                    xt.ptr() + std::size_t(bi) * hw);
      Tensor<T> f = xt;
      for (auto& l : stem_) f = l->forward(f, training, rng);
      if (t == 0) {
        feat_dim = int(f.numel()) / batch;
        features = Tensor<T>({batch, steps, feat_dim});
      }
      for (int bi = 0; bi < batch; ++bi)
        std::copy_n(f.ptr() + std::size_t(bi) * feat_dim, feat_dim,
                    features.ptr() + (std::size_t(bi) * steps + t) * feat_dim);
    }
    Tensor<T> y = features;
    for (auto& l : trunk_) y = l->forward(y, training, rng);
    last_stem_io_ = {batch, steps, feat_dim, x.dim(2), x.dim(3)};
    if (!training) clear_caches();
    return y;
  }

  // Accumulates parameter gradients; call zero_grads() between steps.
  void backward(const Tensor<T>& dlogits) {
    Tensor<T> d = dlogits;
    for (auto it = trunk_.rbegin(); it != trunk_.rend(); ++it)
      d = (*it)->backward(d);
    if (stem_.empty()) return;
    const auto [batch, steps, feat_dim, h, w] = last_stem_io_;
    for (int t = steps - 1; t >= 0; --t) {
      Tensor<T> df({batch, feat_dim});
      for (int bi = 0; bi < batch; ++bi)
        std::copy_n(d.ptr() + (std::size_t(bi) * steps + t) * feat_dim,
                    feat_dim, df.ptr() + std::size_t(bi) * feat_dim);
      Tensor<T> dstem = df;
      for (auto it = stem_.rbegin(); it != stem_.rend(); ++it)
        dstem = (*it)->backward(dstem);
    }
  }

  // Idling probability (class 1) per sample; inference mode.
  std::vector<double> predict_proba(const Tensor<T>& input) {
    Rng rng(0);
    Tensor<T> logits = forward(input, /*training=*/false, rng);
    Tensor<T> p = softmax(logits);
    std::vector<double> out(std::size_t(input.dim(0)));
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = double(p.data[i * std::size_t(spec_.num_classes) + 1]);
    return out;
  }

  std::vector<Tensor<T>*> params() {
    std::vector<Tensor<T>*> out;
    for (auto& l : stem_)
      for (auto* p : l->params()) out.push_back(p);
    for (auto& l : trunk_)
      for (auto* p : l->params()) out.push_back(p);
    return out;
  }
  std::vector<Tensor<T>*> grads() {
    std::vector<Tensor<T>*> out;
    for (auto& l : stem_)
      for (auto* g : l->grads()) out.push_back(g);
    for (auto& l : trunk_)
      for (auto* g : l->grads()) out.push_back(g);
    return out;
  }
  std::vector<std::string> param_names() const {
    std::vector<std::string> out;
    for (const auto& l : stem_)
      for (const auto& n : l->param_names()) out.push_back(n);
    for (const auto& l : trunk_)
      for (const auto& n : l->param_names()) out.push_back(n);
    return out;
  }

  void zero_grads() {
    for (auto& l : stem_) l->zero_grads();
    for (auto& l : trunk_) l->zero_grads();
  }

  void clear_caches() {
    for (auto& l : stem_) l->clear_cache();
    for (auto& l : trunk_) l->clear_cache();
  }

  std::vector<Tensor<T>> snapshot() const {
    std::vector<Tensor<T>> out;
    for (const auto& l : stem_)
      for (auto* p : const_cast<Layer<T>*>(l.get())->params()) out.push_back(*p);
    for (const auto& l : trunk_)
      for (auto* p : const_cast<Layer<T>*>(l.get())->params()) out.push_back(*p);
    return out;
  }
  void restore(const std::vector<Tensor<T>>& snap) {
    auto ps = params();
    if (snap.size() != ps.size()) throw UsageError("snapshot size mismatch");
    for (std::size_t i = 0; i < ps.size(); ++i) *ps[i] = snap[i];
  }

 private:
  void check_input(const Tensor<T>& x) const {
    if (x.rank() != int(spec_.input_shape.size()) + 1)
      throw SpecError("model input rank mismatch: " + x.shape_str());
    for (std::size_t i = 0; i < spec_.input_shape.size(); ++i)
      if (x.dim(int(i) + 1) != spec_.input_shape[i])
        throw SpecError("model input shape mismatch: " + x.shape_str());
  }

  void build() {
    if (spec_.num_classes != 2) throw SpecError("two-class models only");
    std::vector<int> shape = spec_.input_shape;
    shape.insert(shape.begin(), 1);  // batch placeholder

    if (!spec_.stem.empty()) {
      if (shape.size() != 4)
        throw SpecError("per-timestep extractor expects [N, H, W] input");
      std::vector<int> s = {1, 1, shape[2], shape[3]};
      build_chain(spec_.stem, stem_, s, "stem");
      // Features per step flatten into the recurrent trunk input.
      int feat = 1;
      for (std::size_t i = 1; i < s.size(); ++i) feat *= s[std::size_t(i)];
      shape = {1, shape[1], feat};
    }
    build_chain(spec_.trunk, trunk_, shape, "trunk");
    if (shape.size() != 2 || shape[1] != spec_.num_classes)
      throw SpecError("model does not end in a " +
                      std::to_string(spec_.num_classes) + "-way head");
  }

  void build_chain(const std::vector<LayerSpec>& specs,
                   std::vector<std::unique_ptr<Layer<T>>>& out,
                   std::vector<int>& shape, const std::string& prefix) {
    int idx = 0;
    for (const auto& ls : specs) {
      const std::string nm = prefix + std::to_string(idx++);
      switch (ls.kind) {
        case LayerKind::conv1d:
        case LayerKind::conv2d: {
          const int rank = ls.kind == LayerKind::conv2d ? 2 : 1;
          if (int(shape.size()) != rank + 2)
            throw SpecError("conv input rank mismatch at " + nm);
          auto l = std::make_unique<Conv<T>>(ls.filters, ls.kernel, rank,
                                            ls.activation, nm);
          l->set_input_channels(shape[1]);
          shape = l->output_shape(shape);
          out.push_back(std::move(l));
          break;
        }
        case LayerKind::maxpool: {
          auto l = std::make_unique<MaxPool<T>>(ls.pool, nm);
          shape = l->output_shape(shape);
          out.push_back(std::move(l));
          break;
        }
        case LayerKind::dense: {
          auto l = std::make_unique<Dense<T>>(ls.units, ls.activation, nm);
          int feat = 1;
          for (std::size_t i = 1; i < shape.size(); ++i) feat *= shape[i];
          l->set_input_features(feat);
          shape = {shape[0], ls.units};
          out.push_back(std::move(l));
          break;
        }
        case LayerKind::dropout:
          out.push_back(std::make_unique<Dropout<T>>(ls.rate, nm));
          break;
        case LayerKind::lstm: {
          if (shape.size() != 3)
            throw SpecError("lstm expects [B, T, D] input at " + nm);
          auto l = std::make_unique<Lstm<T>>(ls.units, ls.rate,
                                            ls.recurrent_rate, nm);
          l->set_input_features(shape[2]);
          shape = {shape[0], ls.units};
          out.push_back(std::move(l));
          break;
        }
        case LayerKind::softmax:
          // Terminal marker; the softmax itself lives in the loss / predict.
          break;
      }
    }
  }

  ModelSpec spec_;
  std::vector<std::unique_ptr<Layer<T>>> stem_, trunk_;
  std::tuple<int, int, int, int, int> last_stem_io_;
};

// ---------------------------------------------------------------------------
// The five model families.

inline ModelSpec temporal_cnn1d_spec() {
  ModelSpec s;
  s.family = "cnn1d";
  s.input_shape = {1, 36};
  s.input_scale = 0.1;
  s.trunk = {
      {.kind = LayerKind::conv1d, .filters = 64},
      {.kind = LayerKind::conv1d, .filters = 64},
      {.kind = LayerKind::maxpool, .pool = 2},
      {.kind = LayerKind::conv1d, .filters = 128},
      {.kind = LayerKind::conv1d, .filters = 128},
      {.kind = LayerKind::maxpool, .pool = 2},
      {.kind = LayerKind::dropout, .rate = 0.5},
      {.kind = LayerKind::dense, .units = 128},
      {.kind = LayerKind::dropout, .rate = 0.5},
      {.kind = LayerKind::dense, .units = 2, .activation = Activation::linear},
      {.kind = LayerKind::softmax},
  };
  return s;
}

inline ModelSpec temporal_lstm_spec() {
  ModelSpec s;
  s.family = "lstm";
  s.input_shape = {36, 1};
  s.input_scale = 0.1;
  s.trunk = {
      {.kind = LayerKind::lstm, .units = 512, .rate = 0.5},
      {.kind = LayerKind::dense, .units = 128},
      {.kind = LayerKind::dropout, .rate = 0.5},
      {.kind = LayerKind::dense, .units = 2, .activation = Activation::linear},
      {.kind = LayerKind::softmax},
  };
  return s;
}

// The N sampled frames enter as input channels of a single 2D network.
inline ModelSpec cnn2d_spec(int n_frames = 7, int size = 100) {
  ModelSpec s;
  s.family = "cnn2d";
  s.input_shape = {n_frames, size, size};
  s.input_shift = 30.0;
  s.input_scale = 0.05;
  s.trunk = {
      {.kind = LayerKind::conv2d, .filters = 32},
      {.kind = LayerKind::conv2d, .filters = 32},
      {.kind = LayerKind::maxpool, .pool = 2},
      {.kind = LayerKind::conv2d, .filters = 64},
      {.kind = LayerKind::conv2d, .filters = 64},
      {.kind = LayerKind::maxpool, .pool = 2},
      {.kind = LayerKind::dropout, .rate = 0.5},
      {.kind = LayerKind::conv2d, .filters = 128},
      {.kind = LayerKind::conv2d, .filters = 128},
      {.kind = LayerKind::maxpool, .pool = 2},
      {.kind = LayerKind::dropout, .rate = 0.5},
      {.kind = LayerKind::conv2d, .filters = 256},
      {.kind = LayerKind::conv2d, .filters = 256},
      {.kind = LayerKind::maxpool, .pool = 2},
      {.kind = LayerKind::dropout, .rate = 0.5},
      {.kind = LayerKind::dense, .units = 512},
      {.kind = LayerKind::dropout, .rate = 0.5},
      {.kind = LayerKind::dense, .units = 2, .activation = Activation::linear},
      {.kind = LayerKind::softmax},
  };
  return s;
}

// Shared convolutional extractor per frame feeding an LSTM over the N steps.
inline ModelSpec cnn_lstm_spec(int n_frames = 7, int size = 100) {
  ModelSpec s;
  s.family = "cnn_lstm";
  s.input_shape = {n_frames, size, size};
  s.input_shift = 30.0;
  s.input_scale = 0.05;
  s.stem = {
      {.kind = LayerKind::conv2d, .filters = 32},
      {.kind = LayerKind::conv2d, .filters = 32},
      {.kind = LayerKind::maxpool, .pool = 2},
      {.kind = LayerKind::conv2d, .filters = 64},
      {.kind = LayerKind::conv2d, .filters = 64},
      {.kind = LayerKind::maxpool, .pool = 2},
      {.kind = LayerKind::dropout, .rate = 0.5},
      {.kind = LayerKind::conv2d, .filters = 80},
      {.kind = LayerKind::conv2d, .filters = 80},
      {.kind = LayerKind::maxpool, .pool = 2},
      {.kind = LayerKind::dropout, .rate = 0.5},
      {.kind = LayerKind::conv2d, .filters = 96},
      {.kind = LayerKind::conv2d, .filters = 96},
      {.kind = LayerKind::maxpool, .pool = 2},
      {.kind = LayerKind::dropout, .rate = 0.5},
  };
  s.trunk = {
      {.kind = LayerKind::lstm, .units = 256, .rate = 0.5,
       .recurrent_rate = 0.5},
      {.kind = LayerKind::dropout, .rate = 0.5},
      {.kind = LayerKind::dense, .units = 2, .activation = Activation::linear},
      {.kind = LayerKind::softmax},
  };
  return s;
}

}  // namespace ivd

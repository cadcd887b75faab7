#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "ivd/errors.hpp"
#include "ivd/learn/tensor.hpp"
#include "ivd/rng.hpp"

namespace ivd {

enum class Activation { relu, linear, tanh_act, sigmoid };

template <class T>
inline T activate(Activation a, T x) {
  switch (a) {
    case Activation::relu: return x > T(0) ? x : T(0);
    case Activation::linear: return x;
    case Activation::tanh_act: return std::tanh(x);
    case Activation::sigmoid: return T(1) / (T(1) + std::exp(-x));
  }
  throw SpecError("invalid activation");
}

// Derivative expressed through the activation output.
template <class T>
inline T activate_grad_from_output(Activation a, T y) {
  switch (a) {
    case Activation::relu: return y > T(0) ? T(1) : T(0);
    case Activation::linear: return T(1);
    case Activation::tanh_act: return T(1) - y * y;
    case Activation::sigmoid: return y * (T(1) - y);
  }
  throw SpecError("invalid activation");
}

// A layer owns its parameters and accumulates gradients. Forward pushes a
// cache, backward pops it (LIFO), so a layer applied several times per step
// (the shared per-frame extractor) backpropagates correctly.
template <class T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, bool training, Rng& rng) = 0;
  virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
  virtual std::vector<int> output_shape(const std::vector<int>& in) const = 0;

  virtual void init(Rng&) {}
  // Drops any pending forward caches; inference-only forwards never pair
  // with a backward, so their caches must be released explicitly.
  virtual void clear_cache() {}
  virtual std::vector<Tensor<T>*> params() { return {}; }
  virtual std::vector<Tensor<T>*> grads() { return {}; }
  virtual std::vector<std::string> param_names() const { return {}; }
  virtual std::string name() const = 0;

  void zero_grads() {
    for (auto* g : grads()) g->zero();
  }
};

// ---------------------------------------------------------------------------

template <class T>
class Dense : public Layer<T> {
 public:
  Dense(int units, Activation act, std::string name)
      : units_(units), act_(act), name_(std::move(name)) {}

  std::vector<int> output_shape(const std::vector<int>& in) const override {
    return {in[0], units_};
  }

  void set_input_features(int in_features) {
    in_features_ = in_features;
    w_ = Tensor<T>({units_, in_features_});
    b_ = Tensor<T>({units_, 1});
    dw_ = Tensor<T>({units_, in_features_});
    db_ = Tensor<T>({units_, 1});
  }

  void init(Rng& rng) override {
    w_ = xavier_init<T>({units_, in_features_}, rng);
    b_.zero();
  }

  Tensor<T> forward(const Tensor<T>& x, bool, Rng&) override {
    const int batch = x.dim(0);
    if (int(x.numel()) / batch != in_features_)
      throw SpecError("dense " + name_ + ": got " + x.shape_str() +
                      ", expected " + std::to_string(in_features_) +
                      " features");
    Tensor<T> y({batch, units_});
    matmul<T>(false, true, batch, units_, in_features_, x.ptr(), w_.ptr(),
              y.ptr());
    for (int i = 0; i < batch; ++i)
      for (int j = 0; j < units_; ++j) {
        T& v = y.data[std::size_t(i) * units_ + j];
        v = activate(act_, v + b_.data[std::size_t(j)]);
      }
    cache_.push_back({x, y});
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy_in) override {
    if (cache_.empty()) throw UsageError("dense backward without forward");
    auto [x, y] = std::move(cache_.back());
    cache_.pop_back();
    const int batch = x.dim(0);

    Tensor<T> dz = dy_in;
    for (std::size_t i = 0; i < dz.data.size(); ++i)
      dz.data[i] *= activate_grad_from_output(act_, y.data[i]);

    matmul<T>(true, false, units_, in_features_, batch, dz.ptr(), x.ptr(),
              dw_.ptr(), T(1));
    for (int i = 0; i < batch; ++i)
      for (int j = 0; j < units_; ++j)
        db_.data[std::size_t(j)] += dz.data[std::size_t(i) * units_ + j];

    Tensor<T> dx(x.shape);
    matmul<T>(false, false, batch, in_features_, units_, dz.ptr(), w_.ptr(),
              dx.ptr());
    return dx;
  }

  std::vector<Tensor<T>*> params() override { return {&w_, &b_}; }
  std::vector<Tensor<T>*> grads() override { return {&dw_, &db_}; }
  std::vector<std::string> param_names() const override {
    return {name_ + ".w", name_ + ".b"};
  }
  std::string name() const override { return name_; }
  void clear_cache() override { cache_.clear(); }

 private:
  int units_;
  int in_features_ = 0;
  Activation act_;
  std::string name_;
  Tensor<T> w_, b_, dw_, db_;
  struct Cache {
    Tensor<T> x, y;
  };
  std::vector<Cache> cache_;
};

// ---------------------------------------------------------------------------
// Convolutions use "same" zero padding, stride 1, kernel 3, via im2col + GEMM.

template <class T>
class Conv : public Layer<T> {
 public:
  // spatial_rank 1: input [B, C, L]; spatial_rank 2: input [B, C, H, W].
  Conv(int filters, int kernel, int spatial_rank, Activation act,
       std::string name)
      : filters_(filters), kernel_(kernel), spatial_rank_(spatial_rank),
        act_(act), name_(std::move(name)) {}

  void set_input_channels(int c) {
    in_ch_ = c;
    const int k = patch_size();
    w_ = Tensor<T>({filters_, in_ch_, kernel_, spatial_rank_ == 2 ? kernel_ : 1});
    dw_ = Tensor<T>(w_.shape);
    b_ = Tensor<T>({filters_, 1});
    db_ = Tensor<T>({filters_, 1});
    (void)k;
  }

  void init(Rng& rng) override {
    w_ = xavier_init<T>(w_.shape, rng);
    b_.zero();
  }

  std::vector<int> output_shape(const std::vector<int>& in) const override {
    std::vector<int> out = in;
    out[1] = filters_;
    return out;
  }

  Tensor<T> forward(const Tensor<T>& x, bool, Rng&) override {
    check_input(x);
    const int batch = x.dim(0);
    const int h = spatial_rank_ == 2 ? x.dim(2) : 1;
    const int w = spatial_rank_ == 2 ? x.dim(3) : x.dim(2);
    const int spatial = h * w;
    const int k = patch_size();

    Tensor<T> y(output_shape(x.shape));
    Tensor<T> col({k, spatial});
    Cache c;
    c.x = x;
    for (int bi = 0; bi < batch; ++bi) {
      im2col(x.ptr() + std::size_t(bi) * in_ch_ * spatial, h, w, col.ptr());
      T* yb = y.ptr() + std::size_t(bi) * filters_ * spatial;
      matmul<T>(false, false, filters_, spatial, k, w_.ptr(), col.ptr(), yb);
      for (int f = 0; f < filters_; ++f)
        for (int s = 0; s < spatial; ++s) {
          T& v = yb[std::size_t(f) * spatial + s];
          v = activate(act_, v + b_.data[std::size_t(f)]);
        }
    }
    c.y = y;
    cache_.push_back(std::move(c));
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy_in) override {
    if (cache_.empty()) throw UsageError("conv backward without forward");
    Cache c = std::move(cache_.back());
    cache_.pop_back();
    const Tensor<T>& x = c.x;
    const int batch = x.dim(0);
    const int h = spatial_rank_ == 2 ? x.dim(2) : 1;
    const int w = spatial_rank_ == 2 ? x.dim(3) : x.dim(2);
    const int spatial = h * w;
    const int k = patch_size();

    Tensor<T> dz = dy_in;
    for (std::size_t i = 0; i < dz.data.size(); ++i)
      dz.data[i] *= activate_grad_from_output(act_, c.y.data[i]);

    Tensor<T> dx(x.shape);
    Tensor<T> col({k, spatial}), dcol({k, spatial});
    for (int bi = 0; bi < batch; ++bi) {
      const T* dzb = dz.ptr() + std::size_t(bi) * filters_ * spatial;
      im2col(x.ptr() + std::size_t(bi) * in_ch_ * spatial, h, w, col.ptr());
      // dW += dz * col^T
      matmul<T>(false, true, filters_, k, spatial, dzb, col.ptr(), dw_.ptr(),
                T(1));
      for (int f = 0; f < filters_; ++f) {
        T s = 0;
        for (int j = 0; j < spatial; ++j) s += dzb[std::size_t(f) * spatial + j];
        db_.data[std::size_t(f)] += s;
      }
      // dcol = W^T * dz, then scatter back.
      matmul<T>(true, false, k, spatial, filters_, w_.ptr(), dzb, dcol.ptr());
      col2im(dcol.ptr(), h, w, dx.ptr() + std::size_t(bi) * in_ch_ * spatial);
    }
    return dx;
  }

  std::vector<Tensor<T>*> params() override { return {&w_, &b_}; }
  std::vector<Tensor<T>*> grads() override { return {&dw_, &db_}; }
  std::vector<std::string> param_names() const override {
    return {name_ + ".w", name_ + ".b"};
  }
  std::string name() const override { return name_; }
  void clear_cache() override { cache_.clear(); }

 private:
  int patch_size() const {
    return in_ch_ * kernel_ * (spatial_rank_ == 2 ? kernel_ : 1);
  }

  void check_input(const Tensor<T>& x) const {
    if (x.rank() != 2 + spatial_rank_ || x.dim(1) != in_ch_)
      throw SpecError("conv " + name_ + ": bad input " + x.shape_str());
  }

  // col is [in_ch * kernel(^2), spatial] for one sample.
  void im2col(const T* x, int h, int w, T* col) const {
    const int r = kernel_ / 2;
    const int spatial = h * w;
    int row = 0;
    for (int ch = 0; ch < in_ch_; ++ch) {
      const T* xc = x + std::size_t(ch) * spatial;
      for (int ky = spatial_rank_ == 2 ? -r : 0;
           ky <= (spatial_rank_ == 2 ? r : 0); ++ky)
        for (int kx = -r; kx <= r; ++kx, ++row) {
          T* crow = col + std::size_t(row) * spatial;
          for (int y = 0; y < h; ++y) {
            const int sy = y + ky;
            if (sy < 0 || sy >= h) {
              std::fill(crow + std::size_t(y) * w, crow + std::size_t(y + 1) * w,
                        T(0));
              continue;
            }
            for (int xx = 0; xx < w; ++xx) {
              const int sx = xx + kx;
              crow[std::size_t(y) * w + xx] =
                  (sx < 0 || sx >= w) ? T(0) : xc[std::size_t(sy) * w + sx];
            }
          }
        }
    }
  }

  void col2im(const T* col, int h, int w, T* dx) const {
    const int r = kernel_ / 2;
    const int spatial = h * w;
    int row = 0;
    for (int ch = 0; ch < in_ch_; ++ch) {
      T* xc = dx + std::size_t(ch) * spatial;
      for (int ky = spatial_rank_ == 2 ? -r : 0;
           ky <= (spatial_rank_ == 2 ? r : 0); ++ky)
        for (int kx = -r; kx <= r; ++kx, ++row) {
          const T* crow = col + std::size_t(row) * spatial;
          for (int y = 0; y < h; ++y) {
            const int sy = y + ky;
            if (sy < 0 || sy >= h) continue;
            for (int xx = 0; xx < w; ++xx) {
              const int sx = xx + kx;
              if (sx >= 0 && sx < w)
                xc[std::size_t(sy) * w + sx] += crow[std::size_t(y) * w + xx];
            }
          }
        }
    }
  }

  int filters_, kernel_, spatial_rank_;
  int in_ch_ = 0;
  Activation act_;
  std::string name_;
  Tensor<T> w_, b_, dw_, db_;
  struct Cache {
    Tensor<T> x, y;
  };
  std::vector<Cache> cache_;
};

// ---------------------------------------------------------------------------
// Max pooling with stride equal to the pool size; trailing remainder dropped.

template <class T>
class MaxPool : public Layer<T> {
 public:
  MaxPool(int pool, std::string name) : pool_(pool), name_(std::move(name)) {}

  std::vector<int> output_shape(const std::vector<int>& in) const override {
    std::vector<int> out = in;
    for (std::size_t i = 2; i < in.size(); ++i) {
      out[i] = in[i] / pool_;
      if (out[i] == 0) throw SpecError("pool larger than input");
    }
    return out;
  }

  Tensor<T> forward(const Tensor<T>& x, bool, Rng&) override {
    Tensor<T> y(output_shape(x.shape));
    Cache c;
    c.in_shape = x.shape;
    c.argmax.resize(y.numel());
    const bool two_d = x.rank() == 4;
    const int maps = x.dim(0) * x.dim(1);
    const int ih = two_d ? x.dim(2) : 1;
    const int iw = two_d ? x.dim(3) : x.dim(2);
    const int oh = two_d ? y.dim(2) : 1;
    const int ow = two_d ? y.dim(3) : y.dim(2);
    const int ph = two_d ? pool_ : 1;

    for (int m = 0; m < maps; ++m) {
      const T* xm = x.ptr() + std::size_t(m) * ih * iw;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          T best = xm[std::size_t(oy) * ph * iw + std::size_t(ox) * pool_];
          std::size_t best_idx = std::size_t(oy) * ph * iw + ox * pool_;
          for (int dy = 0; dy < ph; ++dy)
            for (int dx = 0; dx < pool_; ++dx) {
              const std::size_t idx =
                  std::size_t(oy * ph + dy) * iw + ox * pool_ + dx;
              if (xm[idx] > best) {
                best = xm[idx];
                best_idx = idx;
              }
            }
          const std::size_t oidx = std::size_t(m) * oh * ow +
                                   std::size_t(oy) * ow + ox;
          y.data[oidx] = best;
          c.argmax[oidx] = std::size_t(m) * ih * iw + best_idx;
        }
    }
    cache_.push_back(std::move(c));
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    if (cache_.empty()) throw UsageError("maxpool backward without forward");
    Cache c = std::move(cache_.back());
    cache_.pop_back();
    Tensor<T> dx(c.in_shape);
    for (std::size_t i = 0; i < dy.data.size(); ++i)
      dx.data[c.argmax[i]] += dy.data[i];
    return dx;
  }

  std::string name() const override { return name_; }
  void clear_cache() override { cache_.clear(); }

 private:
  int pool_;
  std::string name_;
  struct Cache {
    std::vector<int> in_shape;
    std::vector<std::size_t> argmax;
  };
  std::vector<Cache> cache_;
};

// ---------------------------------------------------------------------------
// Inverted dropout: scales by 1/(1-rate) while training, identity at
// inference.

template <class T>
class Dropout : public Layer<T> {
 public:
  Dropout(double rate, std::string name) : rate_(rate), name_(std::move(name)) {
    if (rate < 0 || rate >= 1) throw SpecError("dropout rate must be in [0,1)");
  }

  std::vector<int> output_shape(const std::vector<int>& in) const override {
    return in;
  }

  Tensor<T> forward(const Tensor<T>& x, bool training, Rng& rng) override {
    if (!training || rate_ == 0) {
      cache_.push_back({});
      return x;
    }
    const T keep_inv = T(1) / T(1 - rate_);
    Cache c;
    c.mask.resize(x.numel());
    Tensor<T> y = x;
    for (std::size_t i = 0; i < y.data.size(); ++i) {
      c.mask[i] = rng.uniform() >= rate_;
      y.data[i] = c.mask[i] ? y.data[i] * keep_inv : T(0);
    }
    cache_.push_back(std::move(c));
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    if (cache_.empty()) throw UsageError("dropout backward without forward");
    Cache c = std::move(cache_.back());
    cache_.pop_back();
    if (c.mask.empty()) return dy;
    const T keep_inv = T(1) / T(1 - rate_);
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
      dx.data[i] = c.mask[i] ? dx.data[i] * keep_inv : T(0);
    return dx;
  }

  std::string name() const override { return name_; }
  void clear_cache() override { cache_.clear(); }

 private:
  double rate_;
  std::string name_;
  struct Cache {
    std::vector<std::uint8_t> mask;
  };
  std::vector<Cache> cache_;
};

// ---------------------------------------------------------------------------
// LSTM over a [B, T, D] sequence, returning the final hidden state [B, U].
// Gates i, f, g, o; c_t = f.c_{t-1} + i.g; h_t = o.tanh(c_t). Input and
// recurrent dropout are variational: one mask per sequence, applied at every
// step. Forget-gate bias starts at 1.
template <class T>
class Lstm : public Layer<T> {
 public:
  Lstm(int units, double dropout, double recurrent_dropout, std::string name)
      : units_(units), dropout_(dropout), rec_dropout_(recurrent_dropout),
        name_(std::move(name)) {}

  void set_input_features(int d) {
    input_ = d;
    wx_ = Tensor<T>({4 * units_, input_});
    wh_ = Tensor<T>({4 * units_, units_});
    b_ = Tensor<T>({4 * units_, 1});
    dwx_ = Tensor<T>(wx_.shape);
    dwh_ = Tensor<T>(wh_.shape);
    db_ = Tensor<T>(b_.shape);
  }

  void init(Rng& rng) override {
    wx_ = xavier_init<T>(wx_.shape, rng);
    wh_ = xavier_init<T>(wh_.shape, rng);
    b_.zero();
    for (int u = 0; u < units_; ++u) b_.data[std::size_t(units_ + u)] = T(1);
  }

  std::vector<int> output_shape(const std::vector<int>& in) const override {
    return {in[0], units_};
  }

  Tensor<T> forward(const Tensor<T>& x, bool training, Rng& rng) override {
    if (x.rank() != 3 || x.dim(2) != input_)
      throw SpecError("lstm " + name_ + ": bad input " + x.shape_str());
    const int batch = x.dim(0), steps = x.dim(1);

    Cache c;
    c.x = x;
    c.batch = batch;
    c.steps = steps;
    c.in_mask.assign(std::size_t(batch) * input_, T(1));
    c.rec_mask.assign(std::size_t(batch) * units_, T(1));
    if (training && dropout_ > 0)
      for (auto& m : c.in_mask)
        m = rng.uniform() >= dropout_ ? T(1 / (1 - dropout_)) : T(0);
    if (training && rec_dropout_ > 0)
      for (auto& m : c.rec_mask)
        m = rng.uniform() >= rec_dropout_ ? T(1 / (1 - rec_dropout_)) : T(0);

    const int g4 = 4 * units_;
    Tensor<T> h({batch, units_}), cs({batch, units_});
    c.gates.assign(std::size_t(steps), Tensor<T>({batch, g4}));
    c.h_prev.assign(std::size_t(steps), Tensor<T>({batch, units_}));
    c.c_prev.assign(std::size_t(steps), Tensor<T>({batch, units_}));
    c.c_state.assign(std::size_t(steps), Tensor<T>({batch, units_}));
    c.xt.assign(std::size_t(steps), Tensor<T>({batch, input_}));

    for (int t = 0; t < steps; ++t) {
      Tensor<T>& xt = c.xt[std::size_t(t)];
      for (int bi = 0; bi < batch; ++bi)
        for (int d = 0; d < input_; ++d)
          xt.data[std::size_t(bi) * input_ + d] =
              x.data[(std::size_t(bi) * steps + t) * input_ + d] *
              c.in_mask[std::size_t(bi) * input_ + d];
      Tensor<T> hd = h;
      for (std::size_t i = 0; i < hd.data.size(); ++i)
        hd.data[i] *= c.rec_mask[i];

      c.h_prev[std::size_t(t)] = hd;
      c.c_prev[std::size_t(t)] = cs;

      Tensor<T>& z = c.gates[std::size_t(t)];
      matmul<T>(false, true, batch, g4, input_, xt.ptr(), wx_.ptr(), z.ptr());
      matmul<T>(false, true, batch, g4, units_, hd.ptr(), wh_.ptr(), z.ptr(),
                T(1));
      for (int bi = 0; bi < batch; ++bi)
        for (int j = 0; j < g4; ++j) {
          T& v = z.data[std::size_t(bi) * g4 + j];
          v += b_.data[std::size_t(j)];
          v = (j / units_ == 2) ? std::tanh(v)
                                : T(1) / (T(1) + std::exp(-v));
        }
      for (int bi = 0; bi < batch; ++bi)
        for (int u = 0; u < units_; ++u) {
          const std::size_t zi = std::size_t(bi) * g4;
          const T i_g = z.data[zi + u];
          const T f_g = z.data[zi + units_ + u];
          const T g_g = z.data[zi + 2 * units_ + u];
          const T o_g = z.data[zi + 3 * units_ + u];
          const std::size_t hi = std::size_t(bi) * units_ + u;
          cs.data[hi] = f_g * cs.data[hi] + i_g * g_g;
          h.data[hi] = o_g * std::tanh(cs.data[hi]);
        }
      c.c_state[std::size_t(t)] = cs;
    }
    cache_.push_back(std::move(c));
    return h;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    if (cache_.empty()) throw UsageError("lstm backward without forward");
    Cache c = std::move(cache_.back());
    cache_.pop_back();
    const int batch = c.batch, steps = c.steps, g4 = 4 * units_;

    Tensor<T> dx(c.x.shape);
    Tensor<T> dh = dy;                       // gradient wrt h_t
    Tensor<T> dc({batch, units_});           // gradient wrt c_t
    Tensor<T> dz({batch, g4});

    for (int t = steps - 1; t >= 0; --t) {
      const Tensor<T>& z = c.gates[std::size_t(t)];
      const Tensor<T>& cprev = c.c_prev[std::size_t(t)];
      const Tensor<T>& cst = c.c_state[std::size_t(t)];

      for (int bi = 0; bi < batch; ++bi)
        for (int u = 0; u < units_; ++u) {
          const std::size_t zi = std::size_t(bi) * g4;
          const std::size_t hi = std::size_t(bi) * units_ + u;
          const T i_g = z.data[zi + u];
          const T f_g = z.data[zi + units_ + u];
          const T g_g = z.data[zi + 2 * units_ + u];
          const T o_g = z.data[zi + 3 * units_ + u];
          const T tanh_c = std::tanh(cst.data[hi]);
          const T dct = dc.data[hi] +
                        dh.data[hi] * o_g * (T(1) - tanh_c * tanh_c);
          dz.data[zi + u] = dct * g_g * i_g * (T(1) - i_g);
          dz.data[zi + units_ + u] =
              dct * cprev.data[hi] * f_g * (T(1) - f_g);
          dz.data[zi + 2 * units_ + u] = dct * i_g * (T(1) - g_g * g_g);
          dz.data[zi + 3 * units_ + u] =
              dh.data[hi] * tanh_c * o_g * (T(1) - o_g);
          dc.data[hi] = dct * f_g;
        }

      // Parameter gradients.
      matmul<T>(true, false, g4, input_, batch, dz.ptr(),
                c.xt[std::size_t(t)].ptr(), dwx_.ptr(), T(1));
      matmul<T>(true, false, g4, units_, batch, dz.ptr(),
                c.h_prev[std::size_t(t)].ptr(), dwh_.ptr(), T(1));
      for (int bi = 0; bi < batch; ++bi)
        for (int j = 0; j < g4; ++j)
          db_.data[std::size_t(j)] += dz.data[std::size_t(bi) * g4 + j];

      // Input gradient through the variational mask.
      Tensor<T> dxt({batch, input_});
      matmul<T>(false, false, batch, input_, g4, dz.ptr(), wx_.ptr(),
                dxt.ptr());
      for (int bi = 0; bi < batch; ++bi)
        for (int d = 0; d < input_; ++d)
          dx.data[(std::size_t(bi) * steps + t) * input_ + d] =
              dxt.data[std::size_t(bi) * input_ + d] *
              c.in_mask[std::size_t(bi) * input_ + d];

      // Recurrent gradient into h_{t-1}.
      Tensor<T> dhd({batch, units_});
      matmul<T>(false, false, batch, units_, g4, dz.ptr(), wh_.ptr(),
                dhd.ptr());
      for (std::size_t i = 0; i < dhd.data.size(); ++i)
        dhd.data[i] *= c.rec_mask[i];
      dh = std::move(dhd);
    }
    return dx;
  }

  std::vector<Tensor<T>*> params() override { return {&wx_, &wh_, &b_}; }
  std::vector<Tensor<T>*> grads() override { return {&dwx_, &dwh_, &db_}; }
  std::vector<std::string> param_names() const override {
    return {name_ + ".wx", name_ + ".wh", name_ + ".b"};
  }
  std::string name() const override { return name_; }
  void clear_cache() override { cache_.clear(); }

  int units() const { return units_; }

 private:
  int units_, input_ = 0;
  double dropout_, rec_dropout_;
  std::string name_;
  Tensor<T> wx_, wh_, b_, dwx_, dwh_, db_;
  struct Cache {
    Tensor<T> x;
    int batch = 0, steps = 0;
    std::vector<T> in_mask, rec_mask;
    std::vector<Tensor<T>> gates, h_prev, c_prev, c_state, xt;
  };
  std::vector<Cache> cache_;
};

// Single LSTM step on one sample. wx [4U, D], wh [4U, U], b [4U]; gate order
// i, f, g, o. Masks are the variational dropout masks (pass 1s when not
// training).
template <class T>
inline std::pair<std::vector<T>, std::vector<T>> lstm_step(
    const Tensor<T>& wx, const Tensor<T>& wh, const Tensor<T>& b,
    const std::vector<T>& x_t, const std::vector<T>& h_prev,
    const std::vector<T>& c_prev, const std::vector<T>& in_mask,
    const std::vector<T>& rec_mask) {
  const int units = wh.dim(1);
  const int input = wx.dim(1);
  if (int(x_t.size()) != input || int(h_prev.size()) != units ||
      int(c_prev.size()) != units)
    throw SpecError("lstm_step: shape mismatch");
  std::vector<T> h(units), c(units);
  for (int u = 0; u < units; ++u) {
    T z[4];
    for (int g = 0; g < 4; ++g) {
      const int row = g * units + u;
      T v = b.data[std::size_t(row)];
      for (int d = 0; d < input; ++d)
        v += wx.data[std::size_t(row) * input + d] * x_t[std::size_t(d)] *
             in_mask[std::size_t(d)];
      for (int k = 0; k < units; ++k)
        v += wh.data[std::size_t(row) * units + k] * h_prev[std::size_t(k)] *
             rec_mask[std::size_t(k)];
      z[g] = (g == 2) ? std::tanh(v) : T(1) / (T(1) + std::exp(-v));
    }
    c[std::size_t(u)] = z[1] * c_prev[std::size_t(u)] + z[0] * z[2];
    h[std::size_t(u)] = z[3] * std::tanh(c[std::size_t(u)]);
  }
  return {std::move(h), std::move(c)};
}

// ---------------------------------------------------------------------------
// Softmax + categorical cross entropy on logits [B, K].

template <class T>
inline Tensor<T> softmax(const Tensor<T>& logits) {
  const int batch = logits.dim(0), k = logits.dim(1);
  Tensor<T> p(logits.shape);
  for (int bi = 0; bi < batch; ++bi) {
    const T* row = logits.ptr() + std::size_t(bi) * k;
    T* prow = p.ptr() + std::size_t(bi) * k;
    const T mx = *std::max_element(row, row + k);
    T sum = 0;
    for (int j = 0; j < k; ++j) sum += prow[j] = std::exp(row[j] - mx);
    for (int j = 0; j < k; ++j) prow[j] /= sum;
  }
  return p;
}

// Returns (mean loss, dlogits). dlogits = (softmax - onehot) / B.
template <class T>
inline std::pair<T, Tensor<T>> softmax_cross_entropy(
    const Tensor<T>& logits, const std::vector<int>& labels) {
  const int batch = logits.dim(0), k = logits.dim(1);
  if (int(labels.size()) != batch)
    throw UsageError("label count does not match batch");
  Tensor<T> p = softmax(logits);
  T loss = 0;
  for (int bi = 0; bi < batch; ++bi) {
    const T prob = p.data[std::size_t(bi) * k + labels[std::size_t(bi)]];
    loss -= std::log(std::max(prob, T(1e-12)));
  }
  loss /= T(batch);
  Tensor<T> dlogits = p;
  for (int bi = 0; bi < batch; ++bi)
    dlogits.data[std::size_t(bi) * k + labels[std::size_t(bi)]] -= T(1);
  for (auto& v : dlogits.data) v /= T(batch);
  return {loss, std::move(dlogits)};
}

}  // namespace ivd

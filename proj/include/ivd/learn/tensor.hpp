#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include <cblas.h>

#include "ivd/errors.hpp"
#include "ivd/rng.hpp"

namespace ivd {

template <class T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel(), T(0));
  }

  std::size_t numel() const {
    std::size_t n = 1;
    for (int d : shape) {
      if (d <= 0) throw SpecError("non-positive tensor dimension");
      n *= std::size_t(d);
    }
    return n;
  }

  int dim(int i) const { return shape[std::size_t(i)]; }
  int rank() const { return int(shape.size()); }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  void zero() { std::fill(data.begin(), data.end(), T(0)); }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i)
      s += (i ? "," : "") + std::to_string(shape[i]);
    return s + "]";
  }
};

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C.
template <class T>
inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha,
                 const T* a, int lda, const T* b, int ldb, T beta, T* c,
                 int ldc) {
  const CBLAS_TRANSPOSE ta = trans_a ? CblasTrans : CblasNoTrans;
  const CBLAS_TRANSPOSE tb = trans_b ? CblasTrans : CblasNoTrans;
  if constexpr (std::is_same_v<T, float>)
    cblas_sgemm(CblasRowMajor, ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c,
                ldc);
  else
    cblas_dgemm(CblasRowMajor, ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c,
                ldc);
}

// Convenience: C[m,n] = op(A) * op(B) with natural leading dimensions.
template <class T>
inline void matmul(bool trans_a, bool trans_b, int m, int n, int k, const T* a,
                   const T* b, T* c, T beta = T(0)) {
  gemm<T>(trans_a, trans_b, m, n, k, T(1), a, trans_a ? m : k, b,
          trans_b ? k : n, beta, c, n);
}

// Uniform Xavier/Glorot init in +-sqrt(6 / (fan_in + fan_out)).
// Shapes: dense [out, in]; conv [out_ch, in_ch, k...] where the kernel dims
// multiply into both fans; vectors (biases) are zero-initialized by the
// layers, not here.
template <class T>
inline Tensor<T> xavier_init(const std::vector<int>& shape, Rng& rng) {
  if (shape.size() < 2) throw SpecError("xavier init needs rank >= 2");
  std::size_t kernel = 1;
  for (std::size_t i = 2; i < shape.size(); ++i) kernel *= std::size_t(shape[i]);
  const double fan_out = double(shape[0]) * double(kernel);
  const double fan_in = double(shape[1]) * double(kernel);
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor<T> t(shape);
  for (auto& v : t.data) v = T(rng.uniform(-bound, bound));
  return t;
}

}  // namespace ivd

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <type_traits>
#include <vector>

#include "splicegan/errors.hpp"
#include "splicegan/rng.hpp"
#include "splicegan/tensor.hpp"

// Convolution / normalization / activation primitives with explicit backward
// passes. Everything is templated on the scalar so gradient checks can run
// the exact same code in 64-bit.
namespace splicegan::nn {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapRM = Eigen::Map<const RowMat<T>>;

inline int conv_out_size(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

inline int conv_transpose_out_size(int in, int kernel, int stride, int pad) {
  return (in - 1) * stride - 2 * pad + kernel;
}

// Unrolls k*k patches of a CxHxW map into a (C*k*k) x (Hs*Ws) matrix, where
// (Hs, Ws) are the stride-s patch positions.
template <typename T>
void im2col(const T* x, int channels, int h, int w, int kernel, int stride, int pad,
            int hs, int ws, T* cols) {
  for (int c = 0; c < channels; ++c) {
    for (int ki = 0; ki < kernel; ++ki) {
      for (int kj = 0; kj < kernel; ++kj) {
        T* out = cols + (static_cast<int64_t>(c) * kernel * kernel + ki * kernel + kj) *
                            (static_cast<int64_t>(hs) * ws);
        for (int oy = 0; oy < hs; ++oy) {
          const int iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= h) {
            std::fill(out, out + ws, T(0));
            out += ws;
            continue;
          }
          const T* row = x + (static_cast<int64_t>(c) * h + iy) * w;
          for (int ox = 0; ox < ws; ++ox) {
            const int ix = ox * stride - pad + kj;
            *out++ = (ix >= 0 && ix < w) ? row[ix] : T(0);
          }
        }
      }
    }
  }
}

// Scatter-add inverse of im2col.
template <typename T>
void col2im_add(const T* cols, int channels, int h, int w, int kernel, int stride,
                int pad, int hs, int ws, T* x) {
  for (int c = 0; c < channels; ++c) {
    for (int ki = 0; ki < kernel; ++ki) {
      for (int kj = 0; kj < kernel; ++kj) {
        const T* in = cols + (static_cast<int64_t>(c) * kernel * kernel + ki * kernel + kj) *
                                 (static_cast<int64_t>(hs) * ws);
        for (int oy = 0; oy < hs; ++oy) {
          const int iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= h) {
            in += ws;
            continue;
          }
          T* row = x + (static_cast<int64_t>(c) * h + iy) * w;
          for (int ox = 0; ox < ws; ++ox) {
            const int ix = ox * stride - pad + kj;
            if (ix >= 0 && ix < w) row[ix] += in[ox];
          }
          in += ws;
        }
      }
    }
  }
}

// x: NxCinxHxW, w: CoutxCinxkxk, b: Cout (optional).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w,
                 const Tensor<std::type_identity_t<T>>* b, int stride, int pad) {
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int cout = w.dim(0), k = w.dim(2);
  if (w.dim(1) != cin) throw ShapeError("conv2d: weight/input channel mismatch");
  const int ho = conv_out_size(h, k, stride, pad);
  const int wo = conv_out_size(wd, k, stride, pad);
  Tensor<T> y({n, cout, ho, wo});
  const int64_t patch = static_cast<int64_t>(cin) * k * k;
  const int64_t cols_n = static_cast<int64_t>(ho) * wo;
  std::vector<T> cols(static_cast<size_t>(patch * cols_n));
  ConstMapRM<T> wm(w.ptr(), cout, patch);
  for (int i = 0; i < n; ++i) {
    im2col(x.ptr() + static_cast<int64_t>(i) * cin * h * wd, cin, h, wd, k, stride, pad, ho,
           wo, cols.data());
    ConstMapRM<T> cm(cols.data(), patch, cols_n);
    MapRM<T> ym(y.ptr() + static_cast<int64_t>(i) * cout * cols_n, cout, cols_n);
    ym.noalias() = wm * cm;
    if (b) {
      for (int c = 0; c < cout; ++c) ym.row(c).array() += (*b)[c];
    }
  }
  return y;
}

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy,
                     int stride, int pad, Tensor<T>* gx, Tensor<T>* gw, Tensor<T>* gb) {
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int cout = w.dim(0), k = w.dim(2);
  const int ho = gy.dim(2), wo = gy.dim(3);
  const int64_t patch = static_cast<int64_t>(cin) * k * k;
  const int64_t cols_n = static_cast<int64_t>(ho) * wo;
  std::vector<T> cols(static_cast<size_t>(patch * cols_n));
  ConstMapRM<T> wm(w.ptr(), cout, patch);
  for (int i = 0; i < n; ++i) {
    ConstMapRM<T> gym(gy.ptr() + static_cast<int64_t>(i) * cout * cols_n, cout, cols_n);
    if (gw || gx) {
      if (gw) {
        im2col(x.ptr() + static_cast<int64_t>(i) * cin * h * wd, cin, h, wd, k, stride, pad,
               ho, wo, cols.data());
        ConstMapRM<T> cm(cols.data(), patch, cols_n);
        MapRM<T> gwm(gw->ptr(), cout, patch);
        gwm.noalias() += gym * cm.transpose();
      }
      if (gx) {
        MapRM<T> gcols(cols.data(), patch, cols_n);
        gcols.noalias() = wm.transpose() * gym;
        col2im_add(cols.data(), cin, h, wd, k, stride, pad, ho, wo,
                   gx->ptr() + static_cast<int64_t>(i) * cin * h * wd);
      }
    }
    if (gb) {
      // Fixed-order accumulation; Eigen's redux folds by pointer alignment,
      // which would make the low bits depend on where the buffer landed.
      const T* gyp = gy.ptr() + static_cast<int64_t>(i) * cout * cols_n;
      for (int c = 0; c < cout; ++c) {
        T acc = T(0);
        for (int64_t j = 0; j < cols_n; ++j) acc += gyp[static_cast<int64_t>(c) * cols_n + j];
        (*gb)[c] += acc;
      }
    }
  }
}

// x: NxCinxHxW, w: CinxCoutxkxk (transposed-conv layout), b: Cout (optional).
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& w,
                           const Tensor<std::type_identity_t<T>>* b, int stride, int pad) {
  const int n = x.dim(0), cin = x.dim(1), hi = x.dim(2), wi = x.dim(3);
  if (w.dim(0) != cin) throw ShapeError("conv_transpose2d: weight/input channel mismatch");
  const int cout = w.dim(1), k = w.dim(2);
  const int ho = conv_transpose_out_size(hi, k, stride, pad);
  const int wo = conv_transpose_out_size(wi, k, stride, pad);
  Tensor<T> y({n, cout, ho, wo}, T(0));
  const int64_t patch = static_cast<int64_t>(cout) * k * k;
  const int64_t pos = static_cast<int64_t>(hi) * wi;
  std::vector<T> cols(static_cast<size_t>(patch * pos));
  ConstMapRM<T> wm(w.ptr(), cin, patch);
  for (int i = 0; i < n; ++i) {
    ConstMapRM<T> xm(x.ptr() + static_cast<int64_t>(i) * cin * pos, cin, pos);
    MapRM<T> cm(cols.data(), patch, pos);
    cm.noalias() = wm.transpose() * xm;
    T* yp = y.ptr() + static_cast<int64_t>(i) * cout * ho * wo;
    col2im_add(cols.data(), cout, ho, wo, k, stride, pad, hi, wi, yp);
    if (b) {
      for (int c = 0; c < cout; ++c) {
        T* row = yp + static_cast<int64_t>(c) * ho * wo;
        const T bias = (*b)[c];
        for (int64_t j = 0; j < static_cast<int64_t>(ho) * wo; ++j) row[j] += bias;
      }
    }
  }
  return y;
}

template <typename T>
void conv_transpose2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy,
                               int stride, int pad, Tensor<T>* gx, Tensor<T>* gw,
                               Tensor<T>* gb) {
  const int n = x.dim(0), cin = x.dim(1), hi = x.dim(2), wi = x.dim(3);
  const int cout = w.dim(1), k = w.dim(2);
  const int ho = gy.dim(2), wo = gy.dim(3);
  const int64_t patch = static_cast<int64_t>(cout) * k * k;
  const int64_t pos = static_cast<int64_t>(hi) * wi;
  std::vector<T> cols(static_cast<size_t>(patch * pos));
  ConstMapRM<T> wm(w.ptr(), cin, patch);
  for (int i = 0; i < n; ++i) {
    im2col(gy.ptr() + static_cast<int64_t>(i) * cout * ho * wo, cout, ho, wo, k, stride, pad,
           hi, wi, cols.data());
    ConstMapRM<T> cm(cols.data(), patch, pos);
    if (gx) {
      MapRM<T> gxm(gx->ptr() + static_cast<int64_t>(i) * cin * pos, cin, pos);
      gxm.noalias() += wm * cm;
    }
    if (gw) {
      ConstMapRM<T> xm(x.ptr() + static_cast<int64_t>(i) * cin * pos, cin, pos);
      MapRM<T> gwm(gw->ptr(), cin, patch);
      gwm.noalias() += xm * cm.transpose();
    }
    if (gb) {
      const T* gyp = gy.ptr() + static_cast<int64_t>(i) * cout * ho * wo;
      const int64_t hw = static_cast<int64_t>(ho) * wo;
      for (int c = 0; c < cout; ++c) {
        T acc = T(0);
        for (int64_t j = 0; j < hw; ++j) acc += gyp[static_cast<int64_t>(c) * hw + j];
        (*gb)[c] += acc;
      }
    }
  }
}

// Per-sample, per-channel normalization over the spatial extent with affine
// scale/shift. Identical in training and inference, which keeps the
// generator's infer pass equal to train mode with dropout off.
template <typename T>
struct InstanceNormCache {
  Tensor<T> xhat;
  std::vector<T> inv_std;  // one entry per (n, c)
};

template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                        T eps, InstanceNormCache<T>* cache) {
  const int n = x.dim(0), c = x.dim(1);
  const int64_t hw = static_cast<int64_t>(x.dim(2)) * x.dim(3);
  Tensor<T> y(x.shape);
  if (cache) {
    cache->xhat = Tensor<T>(x.shape);
    cache->inv_std.assign(static_cast<size_t>(n) * c, T(0));
  }
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const T* xp = x.ptr() + (static_cast<int64_t>(i) * c + ch) * hw;
      T* yp = y.ptr() + (static_cast<int64_t>(i) * c + ch) * hw;
      T mean = T(0);
      for (int64_t j = 0; j < hw; ++j) mean += xp[j];
      mean /= static_cast<T>(hw);
      T var = T(0);
      for (int64_t j = 0; j < hw; ++j) {
        const T d = xp[j] - mean;
        var += d * d;
      }
      var /= static_cast<T>(hw);
      const T inv = T(1) / std::sqrt(var + eps);
      const T g = gamma[ch], bt = beta[ch];
      T* hp = cache ? cache->xhat.ptr() + (static_cast<int64_t>(i) * c + ch) * hw : nullptr;
      for (int64_t j = 0; j < hw; ++j) {
        const T xh = (xp[j] - mean) * inv;
        if (hp) hp[j] = xh;
        yp[j] = g * xh + bt;
      }
      if (cache) cache->inv_std[static_cast<size_t>(i) * c + ch] = inv;
    }
  }
  return y;
}

template <typename T>
void instance_norm_backward(const InstanceNormCache<T>& cache, const Tensor<T>& gamma,
                            const Tensor<T>& gy, Tensor<T>* gx, Tensor<T>* ggamma,
                            Tensor<T>* gbeta) {
  const int n = gy.dim(0), c = gy.dim(1);
  const int64_t hw = static_cast<int64_t>(gy.dim(2)) * gy.dim(3);
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const int64_t off = (static_cast<int64_t>(i) * c + ch) * hw;
      const T* gyp = gy.ptr() + off;
      const T* xh = cache.xhat.ptr() + off;
      const T inv = cache.inv_std[static_cast<size_t>(i) * c + ch];
      const T g = gamma[ch];
      T sum_gy = T(0), sum_gy_xh = T(0);
      for (int64_t j = 0; j < hw; ++j) {
        sum_gy += gyp[j];
        sum_gy_xh += gyp[j] * xh[j];
      }
      if (ggamma) (*ggamma)[ch] += sum_gy_xh;
      if (gbeta) (*gbeta)[ch] += sum_gy;
      if (gx) {
        T* gxp = gx->ptr() + off;
        const T scale = g * inv / static_cast<T>(hw);
        for (int64_t j = 0; j < hw; ++j)
          gxp[j] += scale * (static_cast<T>(hw) * gyp[j] - sum_gy - xh[j] * sum_gy_xh);
      }
    }
  }
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T alpha) {
  Tensor<T> y(x.shape);
  for (int64_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : alpha * x[i];
  return y;
}

// Uses the forward output; sign(y) == sign(x) for alpha > 0.
template <typename T>
void leaky_relu_backward(const Tensor<T>& y, const Tensor<T>& gy, T alpha, Tensor<T>* gx) {
  for (int64_t i = 0; i < y.size(); ++i) (*gx)[i] += y[i] > T(0) ? gy[i] : alpha * gy[i];
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y(x.shape);
  for (int64_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

template <typename T>
void relu_backward(const Tensor<T>& y, const Tensor<T>& gy, Tensor<T>* gx) {
  for (int64_t i = 0; i < y.size(); ++i) (*gx)[i] += y[i] > T(0) ? gy[i] : T(0);
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y(x.shape);
  for (int64_t i = 0; i < x.size(); ++i) y[i] = T(1) / (T(1) + std::exp(-x[i]));
  return y;
}

template <typename T>
void sigmoid_backward(const Tensor<T>& y, const Tensor<T>& gy, Tensor<T>* gx) {
  for (int64_t i = 0; i < y.size(); ++i) (*gx)[i] += gy[i] * y[i] * (T(1) - y[i]);
}

// Inverted dropout; the kept mask is cached for the backward pass.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, T p, Rng& rng, std::vector<uint8_t>* mask) {
  Tensor<T> y(x.shape);
  const T scale = T(1) / (T(1) - p);
  mask->assign(static_cast<size_t>(x.size()), 1);
  for (int64_t i = 0; i < x.size(); ++i) {
    if (rng.uniform() < static_cast<double>(p)) {
      (*mask)[static_cast<size_t>(i)] = 0;
      y[i] = T(0);
    } else {
      y[i] = x[i] * scale;
    }
  }
  return y;
}

template <typename T>
void dropout_backward(const std::vector<uint8_t>& mask, T p, const Tensor<T>& gy,
                      Tensor<T>* gx) {
  const T scale = T(1) / (T(1) - p);
  for (int64_t i = 0; i < gy.size(); ++i)
    (*gx)[i] += mask[static_cast<size_t>(i)] ? gy[i] * scale : T(0);
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3))
    throw ShapeError("concat_channels: shape mismatch");
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  const int64_t hw = static_cast<int64_t>(a.dim(2)) * a.dim(3);
  Tensor<T> y({n, ca + cb, a.dim(2), a.dim(3)});
  for (int i = 0; i < n; ++i) {
    std::copy(a.ptr() + static_cast<int64_t>(i) * ca * hw,
              a.ptr() + static_cast<int64_t>(i + 1) * ca * hw,
              y.ptr() + static_cast<int64_t>(i) * (ca + cb) * hw);
    std::copy(b.ptr() + static_cast<int64_t>(i) * cb * hw,
              b.ptr() + static_cast<int64_t>(i + 1) * cb * hw,
              y.ptr() + static_cast<int64_t>(i) * (ca + cb) * hw + ca * hw);
  }
  return y;
}

template <typename T>
void split_channels_add(const Tensor<T>& gy, int ca, Tensor<T>* ga, Tensor<T>* gb) {
  const int n = gy.dim(0), c = gy.dim(1);
  const int cb = c - ca;
  const int64_t hw = static_cast<int64_t>(gy.dim(2)) * gy.dim(3);
  for (int i = 0; i < n; ++i) {
    const T* src = gy.ptr() + static_cast<int64_t>(i) * c * hw;
    if (ga) {
      T* dst = ga->ptr() + static_cast<int64_t>(i) * ca * hw;
      for (int64_t j = 0; j < static_cast<int64_t>(ca) * hw; ++j) dst[j] += src[j];
    }
    if (gb) {
      T* dst = gb->ptr() + static_cast<int64_t>(i) * cb * hw;
      const T* s2 = src + static_cast<int64_t>(ca) * hw;
      for (int64_t j = 0; j < static_cast<int64_t>(cb) * hw; ++j) dst[j] += s2[j];
    }
  }
}

}  // namespace splicegan::nn

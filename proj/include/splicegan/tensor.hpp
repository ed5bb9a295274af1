#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace splicegan {

// Dense row-major tensor. Feature maps follow the NCHW convention.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(count(shape)) {}
  Tensor(std::vector<int> s, T value) : shape(std::move(s)), data(count(shape), value) {}

  static size_t count(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) {
      if (d < 0) throw std::invalid_argument("negative tensor dimension");
      n *= d;
    }
    return static_cast<size_t>(n);
  }

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  bool empty() const { return data.empty(); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape.at(static_cast<size_t>(i)); }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }
  T& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  void fill(T v) { std::fill(data.begin(), data.end(), v); }
  void zero() { fill(T(0)); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    return out;
  }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <typename T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.data)
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

template <typename T>
T tensor_mean(const Tensor<T>& t) {
  if (t.empty()) return T(0);
  double acc = 0.0;
  for (T v : t.data) acc += static_cast<double>(v);
  return static_cast<T>(acc / static_cast<double>(t.size()));
}

}  // namespace splicegan

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tsff/error.hpp"

namespace tsff {

// Dense row-major 4-D tensor laid out as (n, c, h, w). Matrices use (n, d, 1, 1).
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, T fill = T(0))
      : dims_{n, c, h, w}, data_(n * c * h * w, fill) {}

  static Tensor matrix(std::size_t rows, std::size_t cols, T fill = T(0)) {
    return Tensor(rows, cols, 1, 1, fill);
  }

  std::size_t n() const { return dims_[0]; }
  std::size_t c() const { return dims_[1]; }
  std::size_t h() const { return dims_[2]; }
  std::size_t w() const { return dims_[3]; }
  const std::array<std::size_t, 4>& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }
  // Elements per leading index.
  std::size_t stride0() const { return dims_[1] * dims_[2] * dims_[3]; }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w];
  }

  std::span<T> sample(std::size_t i) { return {data_.data() + i * stride0(), stride0()}; }
  std::span<const T> sample(std::size_t i) const {
    return {data_.data() + i * stride0(), stride0()};
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  // Same element count, new shape.
  Tensor reshaped(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    if (n * c * h * w != size()) throw ArgumentError("reshape: element count mismatch");
    Tensor out;
    out.dims_ = {n, c, h, w};
    out.data_ = data_;
    return out;
  }

  bool same_shape(const Tensor& o) const { return dims_ == o.dims_; }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(dims_[0], dims_[1], dims_[2], dims_[3]);
    std::transform(data_.begin(), data_.end(), out.data(), [](T v) { return static_cast<U>(v); });
    return out;
  }

  std::string shape_string() const {
    return "(" + std::to_string(dims_[0]) + "," + std::to_string(dims_[1]) + "," +
           std::to_string(dims_[2]) + "," + std::to_string(dims_[3]) + ")";
  }

 private:
  std::array<std::size_t, 4> dims_{0, 0, 0, 0};
  std::vector<T> data_;
};

}  // namespace tsff

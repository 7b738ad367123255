#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "echolab/common.hpp"

namespace echolab::nn {

// Dense row-major tensor, rank <= 4. Canonical network layout is C x T x F
// (batchless); the scalar type is templated so the gradient checks can run
// the exact same kernels in double.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    require(!shape_.empty() && shape_.size() <= 4, "Tensor: rank must be 1..4");
    std::size_t n = 1;
    for (int d : shape_) {
      require(d > 0, "Tensor: nonpositive dim");
      n *= static_cast<std::size_t>(d);
    }
    data_.assign(n, T(0));
  }

  static Tensor like(const Tensor& other) { return Tensor(other.shape_); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  std::size_t numel() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& raw() { return data_; }
  const std::vector<T>& raw() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(int i) { return data_[static_cast<std::size_t>(i)]; }
  T& at(int i, int j) { return data_[idx2(i, j)]; }
  T& at(int i, int j, int k) { return data_[idx3(i, j, k)]; }
  T& at(int i, int j, int k, int l) { return data_[idx4(i, j, k, l)]; }
  const T& at(int i) const { return data_[static_cast<std::size_t>(i)]; }
  const T& at(int i, int j) const { return data_[idx2(i, j)]; }
  const T& at(int i, int j, int k) const { return data_[idx3(i, j, k)]; }
  const T& at(int i, int j, int k, int l) const { return data_[idx4(i, j, k, l)]; }

  void zero() { std::fill(data_.begin(), data_.end(), T(0)); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i)
      s += (i ? "," : "") + std::to_string(shape_[i]);
    return s + "]";
  }

 private:
  std::size_t idx2(int i, int j) const {
    return static_cast<std::size_t>(i) * shape_[1] + j;
  }
  std::size_t idx3(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k;
  }
  std::size_t idx4(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l;
  }

  std::vector<int> shape_;
  std::vector<T> data_;
};

template <typename T>
Tensor<T> convert(const Tensor<float>& src) {
  Tensor<T> out(src.shape());
  for (std::size_t i = 0; i < src.numel(); ++i) out[i] = static_cast<T>(src[i]);
  return out;
}

}  // namespace echolab::nn

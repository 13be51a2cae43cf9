#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "aste/error.hpp"

namespace aste {

/// Dense row-major array of doubles. 1-D for vectors/scalars, 2-D for
/// everything the encoder touches.
class Array {
 public:
  Array() = default;

  static Array zeros(std::vector<int> shape) {
    Array a;
    a.shape_ = std::move(shape);
    a.data_.assign(a.count(), 0.0);
    return a;
  }

  static Array zeros_like(const Array& other) { return zeros(other.shape_); }

  static Array scalar(double v) {
    Array a = zeros({1});
    a.data_[0] = v;
    return a;
  }

  static Array row(std::initializer_list<double> vals) {
    Array a;
    a.shape_ = {1, static_cast<int>(vals.size())};
    a.data_.assign(vals.begin(), vals.end());
    return a;
  }

  static Array vec(std::initializer_list<double> vals) {
    Array a;
    a.shape_ = {static_cast<int>(vals.size())};
    a.data_.assign(vals.begin(), vals.end());
    return a;
  }

  static Array from(std::vector<int> shape, std::vector<double> data) {
    Array a;
    a.shape_ = std::move(shape);
    a.data_ = std::move(data);
    check(a.data_.size() == a.count(), "array: data size does not match shape");
    return a;
  }

  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }

  int rows() const { return ndim() == 2 ? shape_[0] : (ndim() == 1 ? 1 : 0); }
  int cols() const { return ndim() == 2 ? shape_[1] : (ndim() == 1 ? shape_[0] : 0); }

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols() + c]; }

  bool same_shape(const Array& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void fill(double v) { data_.assign(data_.size(), v); }

 private:
  std::size_t count() const {
    std::size_t n = 1;
    for (int d : shape_) n *= static_cast<std::size_t>(d);
    return shape_.empty() ? 0 : n;
  }

  std::vector<int> shape_;
  std::vector<double> data_;
};

/// Boolean matrix used for attention masks. True = visible.
struct BoolMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> cells;

  BoolMatrix() = default;
  BoolMatrix(int r, int c, bool init = false)
      : rows(r), cols(c), cells(static_cast<std::size_t>(r) * c, init ? 1 : 0) {}

  bool at(int r, int c) const { return cells[static_cast<std::size_t>(r) * cols + c] != 0; }
  void set(int r, int c, bool v) { cells[static_cast<std::size_t>(r) * cols + c] = v ? 1 : 0; }

  bool operator==(const BoolMatrix& o) const {
    return rows == o.rows && cols == o.cols && cells == o.cells;
  }
};

}  // namespace aste

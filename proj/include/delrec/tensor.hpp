#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

#include "delrec/check.hpp"

namespace delrec {

// Dense row-major tensor of doubles, rank 1..3.
//
// Activation sequences are time-major: (time, batch, channels). Matrices are
// (rows, cols). The class is a plain value type; copies are deep.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::size_t n0) : rank_(1), dims_{n0, 1, 1}, data_(n0, 0.0) {}
  Tensor(std::size_t n0, std::size_t n1)
      : rank_(2), dims_{n0, n1, 1}, data_(n0 * n1, 0.0) {}
  Tensor(std::size_t n0, std::size_t n1, std::size_t n2)
      : rank_(3), dims_{n0, n1, n2}, data_(n0 * n1 * n2, 0.0) {}

  int rank() const { return rank_; }
  std::size_t dim(int i) const { return dims_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator()(std::size_t i) { return data_[i]; }
  double operator()(std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * dims_[1] + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * dims_[1] + j];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }

  // Pointer to row (i) of a rank-2 tensor or plane/row (i[,j]) of a rank-3 one.
  double* row(std::size_t i) { return data_.data() + i * dims_[1] * dims_[2]; }
  const double* row(std::size_t i) const {
    return data_.data() + i * dims_[1] * dims_[2];
  }
  double* row(std::size_t i, std::size_t j) {
    return data_.data() + (i * dims_[1] + j) * dims_[2];
  }
  const double* row(std::size_t i, std::size_t j) const {
    return data_.data() + (i * dims_[1] + j) * dims_[2];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(0.0); }

  bool same_shape(const Tensor& o) const {
    return rank_ == o.rank_ && dims_ == o.dims_;
  }

 private:
  int rank_ = 0;
  std::array<std::size_t, 3> dims_{0, 0, 0};
  std::vector<double> data_;
};

inline Tensor zeros_like(const Tensor& t) {
  Tensor out = t;
  out.zero();
  return out;
}

}  // namespace delrec

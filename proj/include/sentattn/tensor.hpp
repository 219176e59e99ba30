#pragma once

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace sentattn {

// Dense row-major float64 tensor, rank 1..3. Core arithmetic is float64
// throughout so oracle tolerances in the 1e-10 range are meaningful.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    std::size_t n = 1;
    for (int d : shape_) {
      assert(d >= 0);
      n *= static_cast<std::size_t>(d);
    }
    data_.assign(n, 0.0);
  }
  Tensor(int r, int c) : Tensor(std::vector<int>{r, c}) {}
  Tensor(std::vector<int> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    assert(data_.size() == count(shape_));
  }

  static Tensor scalar(double v) {
    Tensor t(std::vector<int>{1});
    t.data_[0] = v;
    return t;
  }
  static Tensor row(std::initializer_list<double> vals) {
    Tensor t(std::vector<int>{1, static_cast<int>(vals.size())});
    std::size_t i = 0;
    for (double v : vals) t.data_[i++] = v;
    return t;
  }

  int dim() const { return static_cast<int>(shape_.size()); }
  int shape(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // 2-d conveniences (most tensors in this codebase are matrices).
  int rows() const { return dim() == 1 ? 1 : shape_[0]; }
  int cols() const { return dim() == 1 ? shape_[0] : shape_[dim() - 1]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(int i) { return data_[static_cast<std::size_t>(i)]; }
  double at(int i) const { return data_[static_cast<std::size_t>(i)]; }
  double& at(int i, int j) {
    return data_[static_cast<std::size_t>(i) * shape_[1] + j];
  }
  double at(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * shape_[1] + j];
  }
  double& at(int i, int j, int k) {
    return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  double at(int i, int j, int k) const {
    return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  double* row_ptr(int i) { return data_.data() + static_cast<std::size_t>(i) * cols(); }
  const double* row_ptr(int i) const {
    return data_.data() + static_cast<std::size_t>(i) * cols();
  }

  void fill(double v) { data_.assign(data_.size(), v); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool operator==(const Tensor& o) const {
    return shape_ == o.shape_ && data_ == o.data_;
  }

  bool all_finite() const;
  double max_abs() const;

 private:
  static std::size_t count(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) n *= static_cast<std::size_t>(d);
    return n;
  }
  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace sentattn

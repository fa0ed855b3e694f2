#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace visitscope {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  void push_row(std::span<const double> values) {
    assert(cols_ == 0 || values.size() == cols_);
    if (cols_ == 0) cols_ = values.size();
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace visitscope

namespace visitscope {

/// Column-major copy of a sample matrix, the layout the SIMD kernels expect.
class ColumnStore {
 public:
  explicit ColumnStore(const Matrix& m) : n_(m.rows()), d_(m.cols()), data_(m.rows() * m.cols()) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t a = 0; a < d_; ++a) data_[a * n_ + i] = m(i, a);
    for (std::size_t a = 0; a < d_; ++a) ptrs_.push_back(data_.data() + a * n_);
  }

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return d_; }
  const double* col(std::size_t a) const { return ptrs_[a]; }
  const double* const* cols_ptr() const { return ptrs_.data(); }
  double at(std::size_t i, std::size_t a) const { return data_[a * n_ + i]; }

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<double> data_;
  std::vector<const double*> ptrs_;
};

}  // namespace visitscope

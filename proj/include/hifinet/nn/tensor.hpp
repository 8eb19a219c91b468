#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace hifinet::nn {

/// Dense row-major matrix of doubles.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor row_vector(std::span<const double> values);
  static Tensor column_vector(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return std::span(data_).subspan(r * cols_, cols_); }
  std::span<const double> row(std::size_t r) const { return std::span(data_).subspan(r * cols_, cols_); }

  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_str() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

  void fill(double v);
  Tensor& operator+=(const Tensor& o);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// c += a * b (a: n x k, b: k x m).
void gemm_acc(const Tensor& a, const Tensor& b, Tensor& c);
/// c += a^T * b (a: k x n, b: k x m).
void gemm_tn_acc(const Tensor& a, const Tensor& b, Tensor& c);
/// c += a * b^T (a: n x k, b: m x k).
void gemm_nt_acc(const Tensor& a, const Tensor& b, Tensor& c);

/// Rows of `src` selected by index.
Tensor gather_rows(const Tensor& src, std::span<const std::size_t> rows);

/// Numerically stable softmax of one vector.
std::vector<double> softmax(std::span<const double> z);

}  // namespace hifinet::nn

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <type_traits>
#include <vector>

namespace ozemu {

/// Non-owning view of a column-major block with leading dimension `ld`.
template <typename T>
class BasicMatrixView {
 public:
  BasicMatrixView() = default;
  BasicMatrixView(T* data, std::size_t rows, std::size_t cols, std::size_t ld)
      : data_(data), rows_(rows), cols_(cols), ld_(ld) {}

  // Allows MatrixView -> ConstMatrixView.
  template <typename U>
    requires std::is_convertible_v<U*, T*>
  BasicMatrixView(const BasicMatrixView<U>& other)
      : data_(other.data()), rows_(other.rows()), cols_(other.cols()), ld_(other.ld()) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t ld() const { return ld_; }
  T* data() const { return data_; }

  T& operator()(std::size_t i, std::size_t j) const { return data_[i + j * ld_]; }
  std::span<T> col(std::size_t j) const { return {data_ + j * ld_, rows_}; }

  BasicMatrixView block(std::size_t i0, std::size_t j0, std::size_t rows, std::size_t cols) const {
    return {data_ + i0 + j0 * ld_, rows, cols, ld_};
  }

 private:
  T* data_ = nullptr;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t ld_ = 0;
};

using MatrixView = BasicMatrixView<double>;
using ConstMatrixView = BasicMatrixView<const double>;

/// Column-major FP64 matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n);
  /// Row-wise literal, e.g. `from_rows({{1, 2}, {3, 4}})`.
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseMatrix from_view(ConstMatrixView view);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_square() const { return rows_ == cols_; }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return values_[i + j * rows_]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i + j * rows_]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  MatrixView view() { return {values_.data(), rows_, cols_, rows_}; }
  ConstMatrixView view() const { return {values_.data(), rows_, cols_, rows_}; }

  bool all_finite() const;
  double max_abs() const;
  /// Max row sum of absolute values.
  double norm_inf() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

bool all_finite(ConstMatrixView m);
double norm_inf(std::span<const double> v);

}  // namespace ozemu

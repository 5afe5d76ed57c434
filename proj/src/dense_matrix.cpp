#include "ozemu/dense_matrix.hpp"

#include <algorithm>
#include <cmath>

#include "ozemu/error.hpp"

namespace ozemu {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::NonFiniteEntry: return "NonFiniteEntry";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::InvalidDim: return "InvalidDim";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonSquare: return "NonSquare";
    case Errc::AccumulatorOverflowRisk: return "AccumulatorOverflowRisk";
    case Errc::SingularPivot: return "SingularPivot";
    case Errc::NonPowerOfTwoScale: return "NonPowerOfTwoScale";
    case Errc::InvalidPermutation: return "InvalidPermutation";
    case Errc::ExhaustedSearch: return "ExhaustedSearch";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t nrows = rows.size();
  const std::size_t ncols = nrows ? rows.begin()->size() : 0;
  DenseMatrix m(nrows, ncols);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != ncols) throw Error(Errc::ShapeMismatch, "ragged row literal");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

DenseMatrix DenseMatrix::from_view(ConstMatrixView view) {
  DenseMatrix m(view.rows(), view.cols());
  for (std::size_t j = 0; j < view.cols(); ++j) {
    std::ranges::copy(view.col(j), m.values_.begin() + static_cast<std::ptrdiff_t>(j * m.rows_));
  }
  return m;
}

bool DenseMatrix::all_finite() const {
  return std::ranges::all_of(values_, [](double v) { return std::isfinite(v); });
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double DenseMatrix::norm_inf() const {
  std::vector<double> row_sums(rows_, 0.0);
  for (std::size_t j = 0; j < cols_; ++j) {
    for (std::size_t i = 0; i < rows_; ++i) row_sums[i] += std::abs((*this)(i, j));
  }
  return ozemu::norm_inf(row_sums);
}

bool all_finite(ConstMatrixView m) {
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (double v : m.col(j)) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) {
    if (std::isnan(x)) return x;
    m = std::max(m, std::abs(x));
  }
  return m;
}

}  // namespace ozemu

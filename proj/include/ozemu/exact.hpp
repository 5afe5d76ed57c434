#pragma once

#include <cstddef>
#include <vector>

#include <gmpxx.h>

#include "ozemu/dense_matrix.hpp"

namespace ozemu {

/// Exact binary fraction mantissa * 2^exponent.
struct Dyadic {
  mpz_class mantissa;
  long exponent = 0;

  static Dyadic from_double(double v);
  /// Round-to-nearest-even conversion (normal range).
  double to_double() const;
  int sign() const { return sgn(mantissa); }
};

Dyadic operator-(const Dyadic& x, const Dyadic& y);
bool operator==(const Dyadic& x, const Dyadic& y);

/// Exact dense product computed with big-integer fixed-point accumulation.
class ExactMatrix {
 public:
  ExactMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const Dyadic& operator()(std::size_t i, std::size_t j) const { return values_[i + j * rows_]; }
  Dyadic& operator()(std::size_t i, std::size_t j) { return values_[i + j * rows_]; }

  /// Elementwise correctly rounded FP64 image.
  DenseMatrix rounded() const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Dyadic> values_;
};

ExactMatrix exact_product(ConstMatrixView a, ConstMatrixView b);

/// |approx - exact| as a double (rounded).
double abs_error(double approx, const Dyadic& exact);
/// |approx - exact| / |exact|; 0 when both vanish, +inf when only exact does.
double relative_error(double approx, const Dyadic& exact);

}  // namespace ozemu

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ozemu/dense_matrix.hpp"

namespace ozemu {

/// Which vectors share a scaling exponent: rows of a left operand, columns of
/// a right operand.
enum class Orientation { RowScaled, ColScaled };

/// PerVector keeps one exponent per row/column; Global uses one exponent for
/// the whole matrix and therefore loses small rows next to large ones.
enum class ScalingMode { PerVector, Global };

inline constexpr int kDefaultSliceBits = 7;
inline constexpr int kMaxSliceBits = 10;
inline constexpr int kMaxSlices = 128;

/// A matrix split into `k` signed integer slices of `q` bits each.
///
/// Element (i, j) is represented as
///   a_ij = sum_{s=1..k} slice_s(i, j) * 2^(e - s*q) + r_ij,   |r_ij| < 2^(e - k*q)
/// where `e` is the exponent of row i (RowScaled) or column j (ColScaled).
///
/// Storage is vector-major: each scaled vector (a row for RowScaled, a column
/// for ColScaled) is contiguous along the inner dimension and zero padded, so
/// the integer kernels can stream it directly.
class SliceStack {
 public:
  static constexpr std::size_t kInnerAlign = 32;
  static constexpr std::size_t kVectorAlign = 4;

  SliceStack() = default;

  Orientation orientation() const { return orientation_; }
  ScalingMode scaling() const { return scaling_; }
  int num_slices() const { return num_slices_; }
  int slice_bits() const { return slice_bits_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  /// Number of scaled vectors (rows for RowScaled, columns for ColScaled).
  std::size_t num_vectors() const { return orientation_ == Orientation::RowScaled ? rows_ : cols_; }
  /// Length of each scaled vector.
  std::size_t inner_length() const { return orientation_ == Orientation::RowScaled ? cols_ : rows_; }
  std::size_t padded_vectors() const { return padded_vectors_; }
  std::size_t padded_inner() const { return padded_inner_; }

  /// One exponent per vector; padding vectors carry 0.
  std::span<const int> exponents() const { return {exponents_.data(), num_vectors()}; }
  int exponent(std::size_t v) const { return exponents_[v]; }

  /// Slice value with 0-based slice index `s` (weight 2^(e - (s+1)q)).
  std::int16_t at(int s, std::size_t i, std::size_t j) const;

  /// Contiguous, padded slice data of vector `v` in slice `s`.
  const std::int16_t* vector_data(int s, std::size_t v) const {
    return slices_.data() + (static_cast<std::size_t>(s) * padded_vectors_ + v) * padded_inner_;
  }

  friend SliceStack split_matrix(ConstMatrixView m, int k, int q, Orientation orientation,
                                 ScalingMode mode);

 private:
  std::int16_t* mutable_vector(int s, std::size_t v) {
    return slices_.data() + (static_cast<std::size_t>(s) * padded_vectors_ + v) * padded_inner_;
  }

  Orientation orientation_ = Orientation::RowScaled;
  ScalingMode scaling_ = ScalingMode::PerVector;
  int num_slices_ = 0;
  int slice_bits_ = kDefaultSliceBits;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t padded_vectors_ = 0;
  std::size_t padded_inner_ = 0;
  std::vector<int> exponents_;
  std::vector<std::int16_t> slices_;
};

/// Splits `m` into `k` slices of `q` bits by truncation toward zero.
/// Throws Errc::InvalidParams for k outside [1, kMaxSlices] or q outside
/// [1, kMaxSliceBits], and Errc::NonFiniteEntry for NaN/Inf input.
SliceStack split_matrix(ConstMatrixView m, int k, int q, Orientation orientation,
                        ScalingMode mode = ScalingMode::PerVector);

inline SliceStack split_matrix(const DenseMatrix& m, int k, int q, Orientation orientation,
                               ScalingMode mode = ScalingMode::PerVector) {
  return split_matrix(m.view(), k, q, orientation, mode);
}

/// Sums the slices back in FP64, most significant slice first.
DenseMatrix reconstruct(const SliceStack& stack);

}  // namespace ozemu

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ozemu/dense_matrix.hpp"
#include "ozemu/gemm.hpp"

namespace ozemu {

inline constexpr double kEpsilon = 0x1p-52;
inline constexpr double kResidualThreshold = 16.0;

/// Packed LU factors with the row permutation: row i of P*A is row
/// `pivots[i]` of A.
struct LuFactors {
  DenseMatrix lu;
  std::vector<std::size_t> pivots;
  std::size_t lu_block = 0;
  /// max |u_ij| / max |a_ij|.
  double growth = 0.0;
  FlopCounter flops;

  std::size_t n() const { return lu.rows(); }
  DenseMatrix lower() const;  ///< unit lower triangle
  DenseMatrix upper() const;
};

struct SolveReport {
  std::size_t n = 0;
  double scaled_residual = 0.0;
  bool passed = false;
  double raw_residual_inf = 0.0;
  double norm_a_inf = 0.0;
  double norm_x_inf = 0.0;
  double norm_b_inf = 0.0;
  double epsilon = kEpsilon;
  std::string backend = "native";
  std::size_t lu_block = 0;
  double growth = 0.0;
  std::vector<std::size_t> pivots;
  FlopCounter flops;
  double seconds = 0.0;
};

/// Blocked right-looking LU with partial pivoting. Panel factorization and
/// the U12 triangular solve run in FP64; only the trailing update
/// A22 <- A22 - A21 * U12 goes through `schur_backend`.
/// Throws Errc::NonSquare, Errc::InvalidParams (lu_block), Errc::NonFiniteEntry
/// and Errc::SingularPivot (a pivot column that is exactly zero).
LuFactors lu_factor(const DenseMatrix& a, std::size_t lu_block, const GemmBackend& schur_backend);

/// Solves A x = b from the factors (FP64 substitution).
std::vector<double> lu_solve(const LuFactors& f, std::span<const double> b);

/// HPL scaled residual ||Ax-b||_inf / ((||A||_inf ||x||_inf + ||b||_inf) n eps).
SolveReport scaled_residual(const DenseMatrix& a, std::span<const double> x, std::span<const double> b);

/// lu_factor + lu_solve + scaled_residual, with timing and flop counts.
std::pair<std::vector<double>, SolveReport> solve_system(const DenseMatrix& a, std::span<const double> b,
                                                         std::size_t lu_block, const GemmBackend& backend);

/// b = A * ones, accumulated column by column in FP64.
std::vector<double> rhs_for_ones(const DenseMatrix& a);

}  // namespace ozemu

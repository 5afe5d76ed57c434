#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include <gmpxx.h>

#include "ozemu/dense_matrix.hpp"

namespace ozemu {

/// Parameters of ParaWilk_n(d, b, alpha): `d` subdiagonals of -1, unit
/// diagonal, and `alpha` above the diagonal in every column j (1-based) with
/// (j - 1) mod b == 0. `b` here is the spacing of alpha-columns, unrelated to
/// the LU panel width.
struct ParaWilkParams {
  std::size_t n = 0;
  std::size_t d = 1;
  std::size_t b = 1;
  double alpha = 1.0;
  bool randomize = false;
  std::uint64_t seed = 0;

  /// Throws Errc::InvalidParams. `d` above n - 1 is accepted and capped;
  /// `b` >= n is accepted and yields no alpha-columns.
  void validate() const;
  std::size_t effective_d() const { return n > 0 ? std::min(d, n - 1) : 0; }
};

/// Square integer matrix with exact big-integer entries, column-major.
class BigIntMatrix {
 public:
  explicit BigIntMatrix(std::size_t n) : n_(n), values_(n * n) {}
  std::size_t n() const { return n_; }
  mpz_class& operator()(std::size_t i, std::size_t j) { return values_[i + j * n_]; }
  const mpz_class& operator()(std::size_t i, std::size_t j) const { return values_[i + j * n_]; }
  friend bool operator==(const BigIntMatrix&, const BigIntMatrix&) = default;

 private:
  std::size_t n_;
  std::vector<mpz_class> values_;
};

/// Binary matrix, 1 where the source entry is nonzero.
class NnzPattern {
 public:
  explicit NnzPattern(const DenseMatrix& m);
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::uint8_t operator()(std::size_t i, std::size_t j) const { return bits_[i + j * rows_]; }
  std::size_t count() const;
  friend bool operator==(const NnzPattern&, const NnzPattern&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::uint8_t> bits_;
};

/// Unit diagonal, -1 strictly below, 1 in rows 1..n-1 of the last column.
DenseMatrix wilkinson(std::size_t n);

/// Unit lower triangular with -1 on subdiagonals 1..d.
DenseMatrix turing(std::size_t n, std::size_t d);
/// Exact inverse of turing(n, d) by forward substitution over the integers.
BigIntMatrix turing_inverse(std::size_t n, std::size_t d);

/// Generalized Fibonacci sequence of order d: G_0 = 1, G_i = 2^(i-1) for
/// 1 <= i < d, then G_m = G_{m-1} + ... + G_{m-d}. Returns the first
/// `length` terms.
std::vector<mpz_class> gen_fib(std::size_t d, std::size_t length);

/// Deterministic ParaWilk matrix (ignores `randomize`).
DenseMatrix parawilk(const ParaWilkParams& p);

/// ParaWilk with every structurally zero entry replaced by 2u^2, u ~ U(0,1)
/// drawn from Rng(p.seed) in row-major order. Structural entries are kept.
DenseMatrix parawilk_randomized(const ParaWilkParams& p);

/// I.i.d. U(-1/2, 1/2) entries drawn from Rng(seed) in row-major order.
DenseMatrix hpl_uniform(std::size_t n, std::uint64_t seed);

/// Left or right factor for apply_scaling.
struct IdentityScale {};
/// Diagonal of positive powers of two.
struct DiagonalScale {
  std::vector<double> diag;
};
/// Permutation matrix P with P(i, perm[i]) = 1.
struct PermutationScale {
  std::vector<std::size_t> perm;
};
using ScaleSpec = std::variant<IdentityScale, DiagonalScale, PermutationScale>;

/// Returns L * A * R exactly. Throws Errc::NonPowerOfTwoScale,
/// Errc::InvalidPermutation, Errc::ShapeMismatch, and Errc::InvalidParams when
/// a scaled entry would overflow or lose bits to underflow.
DenseMatrix apply_scaling(const DenseMatrix& a, const ScaleSpec& left, const ScaleSpec& right);

}  // namespace ozemu

#include "ozemu/lu.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ozemu/error.hpp"

namespace ozemu {
namespace {

void swap_rows(DenseMatrix& m, std::size_t r1, std::size_t r2) {
  for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(r1, j), m(r2, j));
}

// Unblocked factorization of columns [k0, k0 + kb) over rows [k0, n). Row
// swaps are applied across the full width.
void factor_panel(DenseMatrix& lu, std::size_t k0, std::size_t kb, std::vector<std::size_t>& perm,
                  FlopCounter& counter) {
  const std::size_t n = lu.rows();
  for (std::size_t j = k0; j < k0 + kb; ++j) {
    // Ties go to the smallest row index.
    std::size_t piv = j;
    double best = std::abs(lu(j, j));
    for (std::size_t i = j + 1; i < n; ++i) {
      const double v = std::abs(lu(i, j));
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (best == 0.0) throw Error(Errc::SingularPivot, "zero pivot column " + std::to_string(j));
    if (piv != j) {
      swap_rows(lu, piv, j);
      std::swap(perm[piv], perm[j]);
    }
    const double pivot = lu(j, j);
    for (std::size_t i = j + 1; i < n; ++i) lu(i, j) /= pivot;
    for (std::size_t c = j + 1; c < k0 + kb; ++c) {
      const double u = lu(j, c);
      if (u == 0.0) continue;
      for (std::size_t i = j + 1; i < n; ++i) lu(i, c) -= lu(i, j) * u;
    }
    counter.f64_ops += (n - j - 1) * (k0 + kb - j);
  }
}

// U12 <- L11^-1 A12 for the columns right of the panel.
void solve_u12(DenseMatrix& lu, std::size_t k0, std::size_t kb, FlopCounter& counter) {
  const std::size_t n = lu.cols();
  for (std::size_t c = k0 + kb; c < n; ++c) {
    for (std::size_t j = k0; j < k0 + kb; ++j) {
      const double u = lu(j, c);
      if (u == 0.0) continue;
      for (std::size_t i = j + 1; i < k0 + kb; ++i) lu(i, c) -= lu(i, j) * u;
    }
  }
  counter.f64_ops += (n - k0 - kb) * kb * (kb - 1) / 2;
}

}  // namespace

DenseMatrix LuFactors::lower() const {
  const std::size_t n = lu.rows();
  DenseMatrix l = DenseMatrix::identity(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = j + 1; i < n; ++i) l(i, j) = lu(i, j);
  }
  return l;
}

DenseMatrix LuFactors::upper() const {
  const std::size_t n = lu.rows();
  DenseMatrix u(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i <= j; ++i) u(i, j) = lu(i, j);
  }
  return u;
}

LuFactors lu_factor(const DenseMatrix& a, std::size_t lu_block, const GemmBackend& schur_backend) {
  if (!a.is_square()) throw Error(Errc::NonSquare, "LU needs a square matrix");
  const std::size_t n = a.rows();
  if (n == 0) throw Error(Errc::InvalidDim, "empty matrix");
  if (lu_block < 1 || lu_block > n) throw Error(Errc::InvalidParams, "lu_block must be in [1, n]");
  if (!a.all_finite()) throw Error(Errc::NonFiniteEntry, "matrix has NaN/Inf");
  schur_backend.validate();

  LuFactors f;
  f.lu = a;
  f.lu_block = lu_block;
  f.pivots.resize(n);
  std::iota(f.pivots.begin(), f.pivots.end(), std::size_t{0});

  for (std::size_t k0 = 0; k0 < n; k0 += lu_block) {
    const std::size_t kb = std::min(lu_block, n - k0);
    factor_panel(f.lu, k0, kb, f.pivots, f.flops);
    const std::size_t rest = n - k0 - kb;
    if (rest == 0) break;
    solve_u12(f.lu, k0, kb, f.flops);
    MatrixView whole = f.lu.view();
    gemm(schur_backend, -1.0, whole.block(k0 + kb, k0, rest, kb), whole.block(k0, k0 + kb, kb, rest), 1.0,
         whole.block(k0 + kb, k0 + kb, rest, rest), f.flops);
  }

  double max_u = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i <= j; ++i) max_u = std::max(max_u, std::abs(f.lu(i, j)));
  }
  f.growth = max_u / a.max_abs();
  return f;
}

std::vector<double> lu_solve(const LuFactors& f, std::span<const double> b) {
  const std::size_t n = f.n();
  if (b.size() != n) throw Error(Errc::ShapeMismatch, "rhs length differs from n");
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[f.pivots[i]];
  // L y = P b, unit diagonal; column-oriented.
  for (std::size_t j = 0; j < n; ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    for (std::size_t i = j + 1; i < n; ++i) x[i] -= f.lu(i, j) * xj;
  }
  // U x = y.
  for (std::size_t j = n; j-- > 0;) {
    const double d = f.lu(j, j);
    if (d == 0.0) throw Error(Errc::SingularPivot, "zero diagonal in U at " + std::to_string(j));
    x[j] /= d;
    const double xj = x[j];
    if (xj == 0.0) continue;
    for (std::size_t i = 0; i < j; ++i) x[i] -= f.lu(i, j) * xj;
  }
  return x;
}

SolveReport scaled_residual(const DenseMatrix& a, std::span<const double> x, std::span<const double> b) {
  const std::size_t n = a.rows();
  if (a.cols() != x.size() || b.size() != n) throw Error(Errc::ShapeMismatch, "dimensions disagree");
  std::vector<double> r(n, 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const double xj = x[j];
    for (std::size_t i = 0; i < n; ++i) r[i] += a(i, j) * xj;
  }
  for (std::size_t i = 0; i < n; ++i) r[i] -= b[i];

  SolveReport rep;
  rep.n = n;
  rep.raw_residual_inf = norm_inf(r);
  rep.norm_a_inf = a.norm_inf();
  rep.norm_x_inf = norm_inf(x);
  rep.norm_b_inf = norm_inf(b);
  const double denom = (rep.norm_a_inf * rep.norm_x_inf + rep.norm_b_inf) * static_cast<double>(n) * kEpsilon;
  if (rep.raw_residual_inf == 0.0) {
    rep.scaled_residual = 0.0;
  } else {
    rep.scaled_residual = denom == 0.0 ? HUGE_VAL : rep.raw_residual_inf / denom;
  }
  // NaN compares false, so a NaN residual fails.
  rep.passed = rep.scaled_residual < kResidualThreshold;
  return rep;
}

std::pair<std::vector<double>, SolveReport> solve_system(const DenseMatrix& a, std::span<const double> b,
                                                         std::size_t lu_block, const GemmBackend& backend) {
  const auto start = std::chrono::steady_clock::now();
  const LuFactors f = lu_factor(a, lu_block, backend);
  std::vector<double> x = lu_solve(f, b);
  const auto stop = std::chrono::steady_clock::now();
  SolveReport rep = scaled_residual(a, x, b);
  rep.backend = backend.describe();
  rep.lu_block = lu_block;
  rep.growth = f.growth;
  rep.pivots = f.pivots;
  rep.flops = f.flops;
  rep.flops.f64_ops += f.n() * f.n();  // triangular solves
  rep.seconds = std::chrono::duration<double>(stop - start).count();
  return {std::move(x), std::move(rep)};
}

std::vector<double> rhs_for_ones(const DenseMatrix& a) {
  std::vector<double> b(a.rows(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (std::size_t i = 0; i < a.rows(); ++i) b[i] += a(i, j);
  }
  return b;
}

}  // namespace ozemu

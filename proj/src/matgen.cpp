#include "ozemu/matgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ozemu/error.hpp"
#include "ozemu/rng.hpp"

namespace ozemu {
namespace {

void require_dim(std::size_t n, std::size_t min_n) {
  if (n < min_n) throw Error(Errc::InvalidDim, "dimension must be at least " + std::to_string(min_n));
}

// Exponent e with v == 2^e, or throws.
int power_of_two_exponent(double v) {
  int e = 0;
  if (!(v > 0.0) || !std::isfinite(v) || std::frexp(v, &e) != 0.5) {
    throw Error(Errc::NonPowerOfTwoScale, "diagonal scale entries must be positive powers of two");
  }
  return e - 1;
}

std::vector<std::size_t> checked_inverse(const std::vector<std::size_t>& perm, std::size_t n) {
  if (perm.size() != n) throw Error(Errc::InvalidPermutation, "permutation has wrong length");
  std::vector<std::size_t> inv(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (perm[i] >= n || inv[perm[i]] != n) throw Error(Errc::InvalidPermutation, "not a bijection");
    inv[perm[i]] = i;
  }
  return inv;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

void ParaWilkParams::validate() const {
  if (n < 2) throw Error(Errc::InvalidParams, "ParaWilk needs n >= 2");
  if (d < 1) throw Error(Errc::InvalidParams, "ParaWilk needs d >= 1");
  if (b < 1) throw Error(Errc::InvalidParams, "ParaWilk needs b >= 1");
  if (!std::isfinite(alpha) || alpha == 0.0) throw Error(Errc::InvalidParams, "alpha must be finite and nonzero");
}

NnzPattern::NnzPattern(const DenseMatrix& m) : rows_(m.rows()), cols_(m.cols()), bits_(m.rows() * m.cols()) {
  std::ranges::transform(m.values(), bits_.begin(), [](double v) -> std::uint8_t { return v != 0.0; });
}

std::size_t NnzPattern::count() const { return static_cast<std::size_t>(std::ranges::count(bits_, 1)); }

DenseMatrix wilkinson(std::size_t n) {
  require_dim(n, 2);
  DenseMatrix m(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    m(j, j) = 1.0;
    for (std::size_t i = j + 1; i < n; ++i) m(i, j) = -1.0;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) m(i, n - 1) = 1.0;
  return m;
}

DenseMatrix turing(std::size_t n, std::size_t d) {
  require_dim(n, 2);
  if (d < 1 || d > n - 1) throw Error(Errc::InvalidDim, "band depth must be in [1, n-1]");
  DenseMatrix m(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    m(j, j) = 1.0;
    for (std::size_t i = j + 1; i < std::min(n, j + d + 1); ++i) m(i, j) = -1.0;
  }
  return m;
}

BigIntMatrix turing_inverse(std::size_t n, std::size_t d) {
  require_dim(n, 2);
  if (d < 1 || d > n - 1) throw Error(Errc::InvalidDim, "band depth must be in [1, n-1]");
  // T X = I with T(i, l) = -1 for 0 < i - l <= d gives
  // X(i, j) = delta_ij + sum_{l = i-d}^{i-1} X(l, j).
  BigIntMatrix x(n);
  for (std::size_t j = 0; j < n; ++j) {
    x(j, j) = 1;
    for (std::size_t i = j + 1; i < n; ++i) {
      mpz_class sum = 0;
      for (std::size_t l = (i > d ? i - d : 0); l < i; ++l) sum += x(l, j);
      x(i, j) = sum;
    }
  }
  return x;
}

std::vector<mpz_class> gen_fib(std::size_t d, std::size_t length) {
  if (d < 1 || length < 1) throw Error(Errc::InvalidParams, "gen_fib needs d >= 1 and length >= 1");
  std::vector<mpz_class> g;
  g.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    if (i == 0) {
      g.emplace_back(1);
    } else if (i < d) {
      mpz_class p;
      mpz_ui_pow_ui(p.get_mpz_t(), 2, i - 1);
      g.push_back(p);
    } else {
      mpz_class sum = 0;
      for (std::size_t l = i - d; l < i; ++l) sum += g[l];
      g.push_back(sum);
    }
  }
  return g;
}

DenseMatrix parawilk(const ParaWilkParams& p) {
  p.validate();
  const std::size_t n = p.n;
  const std::size_t d = p.effective_d();
  DenseMatrix m(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    m(j, j) = 1.0;
    for (std::size_t i = j + 1; i < std::min(n, j + d + 1); ++i) m(i, j) = -1.0;
    // 1-based column j+1 is an alpha-column when (j+1 - 1) mod b == 0.
    if (j > 0 && j % p.b == 0) {
      for (std::size_t i = 0; i < j; ++i) m(i, j) = p.alpha;
    }
  }
  return m;
}

DenseMatrix parawilk_randomized(const ParaWilkParams& p) {
  DenseMatrix m = parawilk(p);
  Rng rng(p.seed);
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t j = 0; j < p.n; ++j) {
      if (m(i, j) != 0.0) continue;
      const double u = rng.uniform_open();
      m(i, j) = 2.0 * u * u;
    }
  }
  return m;
}

DenseMatrix hpl_uniform(std::size_t n, std::uint64_t seed) {
  require_dim(n, 1);
  DenseMatrix m(n, n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rng.uniform() - 0.5;
  }
  return m;
}

DenseMatrix apply_scaling(const DenseMatrix& a, const ScaleSpec& left, const ScaleSpec& right) {
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  std::vector<int> row_exp(rows, 0);
  std::vector<int> col_exp(cols, 0);
  std::vector<std::size_t> row_src(rows);
  std::vector<std::size_t> col_src(cols);
  for (std::size_t i = 0; i < rows; ++i) row_src[i] = i;
  for (std::size_t j = 0; j < cols; ++j) col_src[j] = j;

  std::visit(overloaded{
                 [](const IdentityScale&) {},
                 [&](const DiagonalScale& s) {
                   if (s.diag.size() != rows) throw Error(Errc::ShapeMismatch, "left diagonal has wrong length");
                   for (std::size_t i = 0; i < rows; ++i) row_exp[i] = power_of_two_exponent(s.diag[i]);
                 },
                 // (P A)(i, j) = A(perm[i], j)
                 [&](const PermutationScale& s) {
                   checked_inverse(s.perm, rows);
                   row_src = s.perm;
                 },
             },
             left);
  std::visit(overloaded{
                 [](const IdentityScale&) {},
                 [&](const DiagonalScale& s) {
                   if (s.diag.size() != cols) throw Error(Errc::ShapeMismatch, "right diagonal has wrong length");
                   for (std::size_t j = 0; j < cols; ++j) col_exp[j] = power_of_two_exponent(s.diag[j]);
                 },
                 // (A P)(i, j) = A(i, perm^-1[j])
                 [&](const PermutationScale& s) { col_src = checked_inverse(s.perm, cols); },
             },
             right);

  DenseMatrix out(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) {
      const double v = a(row_src[i], col_src[j]);
      const int e = row_exp[i] + col_exp[j];
      const double s = std::ldexp(v, e);
      if (!std::isfinite(s) || std::ldexp(s, -e) != v) {
        throw Error(Errc::InvalidParams, "scaling is not exact for this matrix (overflow or underflow)");
      }
      out(i, j) = s;
    }
  }
  return out;
}

}  // namespace ozemu

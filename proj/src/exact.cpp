#include "ozemu/exact.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>

#include "ozemu/error.hpp"

namespace ozemu {
namespace {

// Shift both operands to the smaller exponent.
void align(const Dyadic& x, const Dyadic& y, mpz_class& mx, mpz_class& my, long& e) {
  e = std::min(x.exponent, y.exponent);
  mx = x.mantissa;
  my = y.mantissa;
  if (x.exponent > e) mpz_mul_2exp(mx.get_mpz_t(), mx.get_mpz_t(), static_cast<mp_bitcnt_t>(x.exponent - e));
  if (y.exponent > e) mpz_mul_2exp(my.get_mpz_t(), my.get_mpz_t(), static_cast<mp_bitcnt_t>(y.exponent - e));
}

}  // namespace

Dyadic Dyadic::from_double(double v) {
  if (!std::isfinite(v)) throw Error(Errc::NonFiniteEntry, "exact arithmetic needs finite input");
  Dyadic d;
  if (v == 0.0) return d;
  int e = 0;
  const double f = std::frexp(v, &e);  // |f| in [0.5, 1)
  const double m = std::ldexp(f, 53);   // integral
  d.mantissa = static_cast<long>(m);
  d.exponent = e - 53;
  return d;
}

double Dyadic::to_double() const {
  if (mantissa == 0) return 0.0;
  mpz_class mag = abs(mantissa);
  const long bits = static_cast<long>(mpz_sizeinbase(mag.get_mpz_t(), 2));
  long e = exponent;
  if (bits > 53) {
    const long shift = bits - 53;
    mpz_class kept;
    mpz_class rem;
    mpz_fdiv_q_2exp(kept.get_mpz_t(), mag.get_mpz_t(), static_cast<mp_bitcnt_t>(shift));
    mpz_fdiv_r_2exp(rem.get_mpz_t(), mag.get_mpz_t(), static_cast<mp_bitcnt_t>(shift));
    mpz_class half = 1;
    mpz_mul_2exp(half.get_mpz_t(), half.get_mpz_t(), static_cast<mp_bitcnt_t>(shift - 1));
    const int cmp_half = cmp(rem, half);
    if (cmp_half > 0 || (cmp_half == 0 && mpz_odd_p(kept.get_mpz_t()))) ++kept;
    mag = kept;
    e += shift;
  }
  const double m = mag.get_d();  // exact: at most 54 bits, and 2^53 is representable
  const double r = std::ldexp(m, static_cast<int>(std::clamp<long>(e, INT_MIN / 2, INT_MAX / 2)));
  return sgn(mantissa) < 0 ? -r : r;
}

Dyadic operator-(const Dyadic& x, const Dyadic& y) {
  Dyadic d;
  mpz_class mx;
  mpz_class my;
  align(x, y, mx, my, d.exponent);
  d.mantissa = mx - my;
  return d;
}

bool operator==(const Dyadic& x, const Dyadic& y) { return (x - y).mantissa == 0; }

DenseMatrix ExactMatrix::rounded() const {
  DenseMatrix out(rows_, cols_);
  for (std::size_t j = 0; j < cols_; ++j) {
    for (std::size_t i = 0; i < rows_; ++i) out(i, j) = (*this)(i, j).to_double();
  }
  return out;
}

ExactMatrix exact_product(ConstMatrixView a, ConstMatrixView b) {
  if (a.cols() != b.rows()) throw Error(Errc::ShapeMismatch, "inner dimensions differ");
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const std::size_t p = b.cols();

  std::vector<Dyadic> da(m * n);
  std::vector<Dyadic> db(n * p);
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t i = 0; i < m; ++i) da[i * n + l] = Dyadic::from_double(a(i, l));
  }
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t l = 0; l < n; ++l) db[j * n + l] = Dyadic::from_double(b(l, j));
  }

  ExactMatrix out(m, p);
  mpz_class term;
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      long base = std::numeric_limits<long>::max();
      for (std::size_t l = 0; l < n; ++l) {
        const Dyadic& x = da[i * n + l];
        const Dyadic& y = db[j * n + l];
        if (x.mantissa != 0 && y.mantissa != 0) base = std::min(base, x.exponent + y.exponent);
      }
      Dyadic& acc = out(i, j);
      if (base == std::numeric_limits<long>::max()) continue;
      acc.exponent = base;
      for (std::size_t l = 0; l < n; ++l) {
        const Dyadic& x = da[i * n + l];
        const Dyadic& y = db[j * n + l];
        if (x.mantissa == 0 || y.mantissa == 0) continue;
        term = x.mantissa * y.mantissa;
        mpz_mul_2exp(term.get_mpz_t(), term.get_mpz_t(),
                     static_cast<mp_bitcnt_t>(x.exponent + y.exponent - base));
        acc.mantissa += term;
      }
    }
  }
  return out;
}

double abs_error(double approx, const Dyadic& exact) {
  return std::abs((Dyadic::from_double(approx) - exact).to_double());
}

double relative_error(double approx, const Dyadic& exact) {
  const Dyadic diff = Dyadic::from_double(approx) - exact;
  if (diff.mantissa == 0) return 0.0;
  if (exact.mantissa == 0) return std::numeric_limits<double>::infinity();
  long e_diff = 0;
  long e_exact = 0;
  const double m_diff = mpz_get_d_2exp(&e_diff, diff.mantissa.get_mpz_t());
  const double m_exact = mpz_get_d_2exp(&e_exact, exact.mantissa.get_mpz_t());
  const long e = (e_diff + diff.exponent) - (e_exact + exact.exponent);
  return std::abs(std::ldexp(m_diff / m_exact, static_cast<int>(std::clamp<long>(e, -2000, 2000))));
}

}  // namespace ozemu

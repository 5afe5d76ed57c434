#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace oracle {
namespace {

mpq_class pow2(long e) {
  mpz_class p = 1;
  mpz_mul_2exp(p.get_mpz_t(), p.get_mpz_t(), static_cast<mp_bitcnt_t>(std::labs(e)));
  mpq_class r = e >= 0 ? mpq_class(p) : mpq_class(1) / mpq_class(p);
  r.canonicalize();
  return r;
}

}  // namespace

RationalMatrix to_rational(const ozemu::DenseMatrix& m) {
  RationalMatrix r(m.rows(), m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (std::size_t i = 0; i < m.rows(); ++i) r(i, j) = mpq_class(m(i, j));
  }
  return r;
}

RationalMatrix product(const RationalMatrix& a, const RationalMatrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("shape");
  RationalMatrix c(a.rows, b.cols);
  for (std::size_t j = 0; j < b.cols; ++j) {
    for (std::size_t i = 0; i < a.rows; ++i) {
      mpq_class s = 0;
      for (std::size_t l = 0; l < a.cols; ++l) s += a(i, l) * b(l, j);
      c(i, j) = s;
    }
  }
  return c;
}

RationalMatrix product(const ozemu::DenseMatrix& a, const ozemu::DenseMatrix& b) {
  return product(to_rational(a), to_rational(b));
}

RationalMatrix inverse(const RationalMatrix& a) {
  const std::size_t n = a.rows;
  RationalMatrix w = a;
  RationalMatrix inv(n, n);
  for (std::size_t i = 0; i < n; ++i) inv(i, i) = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && w(p, c) == 0) ++p;
    if (p == n) throw std::domain_error("singular");
    for (std::size_t j = 0; j < n; ++j) {
      std::swap(w(p, j), w(c, j));
      std::swap(inv(p, j), inv(c, j));
    }
    const mpq_class piv = w(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      w(c, j) /= piv;
      inv(c, j) /= piv;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || w(r, c) == 0) continue;
      const mpq_class f = w(r, c);
      for (std::size_t j = 0; j < n; ++j) {
        w(r, j) -= f * w(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

std::vector<mpq_class> solve(const RationalMatrix& a, const std::vector<mpq_class>& b) {
  const RationalMatrix inv = inverse(a);
  std::vector<mpq_class> x(a.rows, 0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) x[i] += inv(i, j) * b[j];
  }
  return x;
}

double abs_error(double approx, const mpq_class& exact) {
  const mpq_class d = abs(mpq_class(approx) - exact);
  return d.get_d();
}

double relative_error(double approx, const mpq_class& exact) {
  const mpq_class d = abs(mpq_class(approx) - exact);
  if (exact == 0) return d == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  return mpq_class(d / abs(exact)).get_d();
}

double condition_inf(const RationalMatrix& a) {
  auto norm = [](const RationalMatrix& m) {
    mpq_class best = 0;
    for (std::size_t i = 0; i < m.rows; ++i) {
      mpq_class s = 0;
      for (std::size_t j = 0; j < m.cols; ++j) s += abs(m(i, j));
      if (s > best) best = s;
    }
    return best;
  };
  return mpq_class(norm(a) * norm(inverse(a))).get_d();
}

int scale_exponent(const std::vector<double>& values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  if (m == 0.0) return 0;
  int e = 0;
  while (m >= std::ldexp(1.0, e)) ++e;
  while (m < std::ldexp(1.0, e - 1)) --e;
  return e;
}

std::vector<long> reference_slices(double a, int e, int k, int q) {
  const mpq_class x = abs(mpq_class(a)) * pow2(static_cast<long>(k) * q - e);
  mpz_class digits;
  mpz_fdiv_q(digits.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
  std::vector<long> out(static_cast<std::size_t>(k));
  const mpz_class radix = mpz_class(1) << q;
  for (int s = k - 1; s >= 0; --s) {
    const mpz_class d = digits % radix;
    out[static_cast<std::size_t>(s)] = (a < 0 ? -1 : 1) * d.get_si();
    digits /= radix;
  }
  return out;
}

ReferenceLu reference_lu(const ozemu::DenseMatrix& a) {
  const std::size_t n = a.rows();
  // Row-major working copy.
  std::vector<std::vector<double>> w(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) w[i][j] = a(i, j);
  }
  ReferenceLu r;
  r.perm.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.perm[i] = i;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(w[i][k]) > std::abs(w[p][k])) p = i;
    }
    if (w[p][k] == 0.0) throw std::domain_error("singular");
    std::swap(w[p], w[k]);
    std::swap(r.perm[p], r.perm[k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = w[i][k] / w[k][k];
      w[i][k] = l;
      for (std::size_t j = k + 1; j < n; ++j) w[i][j] -= l * w[k][j];
    }
  }
  r.lu = ozemu::DenseMatrix(n, n);
  double max_u = 0.0;
  double max_a = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      r.lu(i, j) = w[i][j];
      if (j >= i) max_u = std::max(max_u, std::abs(w[i][j]));
      max_a = std::max(max_a, std::abs(a(i, j)));
    }
  }
  r.growth = max_u / max_a;
  return r;
}

ozemu::DenseMatrix naive_product(const ozemu::DenseMatrix& a, const ozemu::DenseMatrix& b) {
  ozemu::DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < a.cols(); ++l) s += a(i, l) * b(l, j);
      c(i, j) = s;
    }
  }
  return c;
}

ozemu::DenseMatrix random_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  ozemu::DenseMatrix m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = dist(gen);
  }
  return m;
}

ozemu::DenseMatrix random_integers(std::size_t rows, std::size_t cols, int lo, int hi, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> dist(lo, hi);
  ozemu::DenseMatrix m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = dist(gen);
  }
  return m;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string drop_csv_columns(const std::string& csv, const std::vector<std::string>& names) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  std::vector<bool> keep;
  while (std::getline(in, line)) {
    if (line.starts_with("#")) {
      out << line << '\n';
      continue;
    }
    const auto fields = split_csv_line(line);
    if (keep.empty()) {
      for (const auto& f : fields) keep.push_back(std::find(names.begin(), names.end(), f) == names.end());
    }
    bool first = true;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i < keep.size() && !keep[i]) continue;
      if (!first) out << '|';
      out << fields[i];
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace oracle

#include "ozemu/gemm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "int_kernel.hpp"
#include "ozemu/error.hpp"
#include "ozemu/exact.hpp"
#include "ozemu/rng.hpp"

namespace ozemu {
namespace {

void native_gemm(double alpha, ConstMatrixView a, ConstMatrixView b, double beta, MatrixView c) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  for (std::size_t j = 0; j < b.cols(); ++j) {
    double* cj = c.col(j).data();
    if (beta == 0.0) {
      std::fill_n(cj, m, 0.0);
    } else if (beta != 1.0) {
      for (std::size_t i = 0; i < m; ++i) cj[i] *= beta;
    }
    for (std::size_t l = 0; l < n; ++l) {
      const double t = alpha * b(l, j);
      if (t == 0.0) continue;
      const double* al = a.col(l).data();
      for (std::size_t i = 0; i < m; ++i) cj[i] += t * al[i];
    }
  }
}

struct Level {
  int sum = 0;
  std::vector<SlicePair> pairs;
};

std::vector<Level> group_by_level(const std::vector<SlicePair>& pairs) {
  std::vector<Level> levels;
  for (const SlicePair& p : pairs) {
    if (levels.empty() || levels.back().sum != p.level()) levels.push_back({p.level(), {}});
    levels.back().pairs.push_back(p);
  }
  return levels;
}

int max_abs_exponent(std::span<const int> e) {
  int m = 0;
  for (int x : e) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

int GemmBackend::effective_threshold() const {
  if (truncation.kind == TruncationKind::Full) return 2 * splits;
  return truncation.threshold == 0 ? splits + 1 : truncation.threshold;
}

void GemmBackend::validate() const {
  if (is_native()) return;
  if (splits < 1 || splits > kMaxSlices) throw Error(Errc::InvalidParams, "splits must be in [1, 128]");
  if (slice_bits < 1 || slice_bits > kMaxSliceBits) throw Error(Errc::InvalidParams, "slice bits must be in [1, 10]");
  if (truncation.kind == TruncationKind::Band) {
    const int t = effective_threshold();
    if (t < 2 || t > 2 * splits) {
      throw Error(Errc::InvalidParams, "band threshold " + std::to_string(t) + " outside [2, 2k]");
    }
  }
}

std::string GemmBackend::describe() const {
  if (is_native()) return "native";
  std::string s = "int8(k=" + std::to_string(splits) + ",q=" + std::to_string(slice_bits) + ",";
  s += truncation.kind == TruncationKind::Full ? std::string("full")
                                                : "band=" + std::to_string(effective_threshold());
  s += scaling == ScalingMode::PerVector ? ",pervector" : ",global";
  if (hardware_faithful) s += ",faithful";
  return s + ")";
}

std::vector<SlicePair> retained_pairs(int k, Truncation t) {
  const int threshold = t.kind == TruncationKind::Full ? 2 * k : (t.threshold == 0 ? k + 1 : t.threshold);
  std::vector<SlicePair> out;
  for (int level = 2; level <= std::min(threshold, 2 * k); ++level) {
    for (int a = std::max(1, level - k); a <= std::min(k, level - 1); ++a) out.push_back({a, level - a});
  }
  return out;
}

DenseMatrix emulated_product(const SliceStack& a, const SliceStack& b, const std::vector<SlicePair>& pairs,
                             FlopCounter& counter) {
  if (a.orientation() != Orientation::RowScaled || b.orientation() != Orientation::ColScaled) {
    throw Error(Errc::InvalidParams, "left operand must be RowScaled and right operand ColScaled");
  }
  if (a.cols() != b.rows()) throw Error(Errc::ShapeMismatch, "inner dimensions differ");
  if (a.slice_bits() != b.slice_bits()) throw Error(Errc::InvalidParams, "slice widths differ");
  for (const SlicePair& p : pairs) {
    if (p.a < 1 || p.a > a.num_slices() || p.b < 1 || p.b > b.num_slices()) {
      throw Error(Errc::InvalidParams, "slice pair out of range");
    }
  }

  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const std::size_t p = b.cols();
  const int q = a.slice_bits();
  DenseMatrix s(m, p);
  counter.emulated_int_ops += static_cast<std::uint64_t>(pairs.size()) * m * n * p;
  counter.slice_products_computed += pairs.size();
  if (m == 0 || p == 0 || n == 0 || pairs.empty()) return s;

  const std::vector<Level> levels = group_by_level(pairs);
  const std::size_t stride = a.padded_inner();
  const int max_entry = (1 << q) - 1;

  // Scaling by multiplication with powers of two is exact as long as every
  // intermediate stays in the normal range; otherwise use ldexp.
  const int max_level = levels.back().sum;
  const bool fast_scale = max_abs_exponent(a.exponents()) + max_abs_exponent(b.exponents()) +
                              max_level * q + 64 < 1000;
  std::vector<double> level_pow;
  for (const Level& lv : levels) level_pow.push_back(std::ldexp(1.0, -lv.sum * q));

  std::vector<detail::TileOperands> ops;
  std::int64_t v[detail::kTile][detail::kTile];
  for (std::size_t j0 = 0; j0 < p; j0 += detail::kTile) {
    const std::size_t nc = std::min(detail::kTile, p - j0);
    for (std::size_t i0 = 0; i0 < m; i0 += detail::kTile) {
      const std::size_t nr = std::min(detail::kTile, m - i0);
      double acc[detail::kTile][detail::kTile] = {};
      double row_pow[detail::kTile];
      double col_pow[detail::kTile];
      for (std::size_t r = 0; r < nr; ++r) row_pow[r] = std::ldexp(1.0, a.exponent(i0 + r));
      for (std::size_t c = 0; c < nc; ++c) col_pow[c] = std::ldexp(1.0, b.exponent(j0 + c));

      for (std::size_t li = 0; li < levels.size(); ++li) {
        const Level& lv = levels[li];
        ops.clear();
        for (const SlicePair& pr : lv.pairs) {
          ops.push_back({a.vector_data(pr.a - 1, i0), b.vector_data(pr.b - 1, j0)});
        }
        detail::tile_dot(ops, stride, stride, max_entry, v);
        for (std::size_t c = 0; c < nc; ++c) {
          for (std::size_t r = 0; r < nr; ++r) {
            if (v[r][c] == 0) continue;
            const double raw = static_cast<double>(v[r][c]);
            acc[r][c] += fast_scale
                             ? raw * level_pow[li] * row_pow[r] * col_pow[c]
                             : std::ldexp(raw, a.exponent(i0 + r) + b.exponent(j0 + c) - lv.sum * q);
          }
        }
      }
      for (std::size_t c = 0; c < nc; ++c) {
        for (std::size_t r = 0; r < nr; ++r) s(i0 + r, j0 + c) = acc[r][c];
      }
    }
  }
  return s;
}

void gemm(const GemmBackend& backend, double alpha, ConstMatrixView a, ConstMatrixView b, double beta,
          MatrixView c, FlopCounter& counter) {
  backend.validate();
  if (a.cols() != b.rows()) throw Error(Errc::ShapeMismatch, "inner dimensions differ");
  if (c.rows() != a.rows() || c.cols() != b.cols()) throw Error(Errc::ShapeMismatch, "C has wrong shape");
  if (!all_finite(a) || !all_finite(b)) throw Error(Errc::NonFiniteEntry, "gemm operand has NaN/Inf");
  if (beta != 0.0 && !all_finite(c)) throw Error(Errc::NonFiniteEntry, "C has NaN/Inf");

  if (backend.is_native()) {
    native_gemm(alpha, a, b, beta, c);
    counter.f64_ops += static_cast<std::uint64_t>(a.rows()) * a.cols() * b.cols();
    return;
  }

  const int q = backend.slice_bits;
  if (backend.hardware_faithful) {
    const double bound = static_cast<double>(a.cols()) * std::ldexp(1.0, 2 * q);
    if (bound >= 0x1p31) {
      throw Error(Errc::AccumulatorOverflowRisk,
                  "inner dimension " + std::to_string(a.cols()) + " too long for exact 32-bit accumulation");
    }
  }
  const SliceStack sa = split_matrix(a, backend.splits, q, Orientation::RowScaled, backend.scaling);
  const SliceStack sb = split_matrix(b, backend.splits, q, Orientation::ColScaled, backend.scaling);
  const DenseMatrix s =
      emulated_product(sa, sb, retained_pairs(backend.splits, backend.truncation), counter);

  for (std::size_t j = 0; j < c.cols(); ++j) {
    double* cj = c.col(j).data();
    for (std::size_t i = 0; i < c.rows(); ++i) {
      cj[i] = beta == 0.0 ? alpha * s(i, j) : alpha * s(i, j) + beta * cj[i];
    }
  }
}

DenseMatrix gemm(const GemmBackend& backend, double alpha, const DenseMatrix& a, const DenseMatrix& b,
                 double beta, const DenseMatrix& c, FlopCounter& counter) {
  DenseMatrix out = (beta == 0.0 && c.empty()) ? DenseMatrix(a.rows(), b.cols()) : c;
  gemm(backend, alpha, a.view(), b.view(), beta, out.view(), counter);
  return out;
}

ErrorProfile gemm_error_profile(const GemmBackend& backend, const DenseMatrix& a, const DenseMatrix& b,
                                int trials, std::uint64_t rng_seed) {
  if (a.cols() != b.rows()) throw Error(Errc::ShapeMismatch, "inner dimensions differ");
  if (a.cols() > kMaxProfileInnerDim) throw Error(Errc::InvalidParams, "inner dimension too large for the exact oracle");
  if (trials < 1) throw Error(Errc::InvalidParams, "trials must be positive");

  const ExactMatrix exact = exact_product(a.view(), b.view());
  DenseMatrix abs_a(a.rows(), a.cols());
  DenseMatrix abs_b(b.rows(), b.cols());
  std::ranges::transform(a.values(), abs_a.values().begin(), [](double x) { return std::abs(x); });
  std::ranges::transform(b.values(), abs_b.values().begin(), [](double x) { return std::abs(x); });
  FlopCounter scratch;
  const DenseMatrix abs_ab = gemm(GemmBackend::native(), 1.0, abs_a, abs_b, 0.0, {}, scratch);

  Rng rng(rng_seed);
  ErrorProfile prof;
  std::vector<double> rel;
  std::vector<double> cw;
  for (int t = 0; t < trials; ++t) {
    DenseMatrix at = a;
    DenseMatrix bt = b;
    if (t > 0) {
      for (std::size_t l = 0; l < a.cols(); ++l) {
        const int e = static_cast<int>(rng.uniform_int(-t, t));
        for (std::size_t i = 0; i < a.rows(); ++i) at(i, l) = std::ldexp(a(i, l), e);
        for (std::size_t j = 0; j < b.cols(); ++j) bt(l, j) = std::ldexp(b(l, j), -e);
      }
    }
    FlopCounter fc;
    const DenseMatrix c = gemm(backend, 1.0, at, bt, 0.0, {}, fc);
    double trial_max = 0.0;
    for (std::size_t j = 0; j < c.cols(); ++j) {
      for (std::size_t i = 0; i < c.rows(); ++i) {
        const double r = relative_error(c(i, j), exact(i, j));
        const double err = abs_error(c(i, j), exact(i, j));
        const double d = abs_ab(i, j);
        rel.push_back(r);
        cw.push_back(d == 0.0 ? (err == 0.0 ? 0.0 : HUGE_VAL) : err / d);
        trial_max = std::max(trial_max, r);
      }
    }
    prof.max_relative_per_trial.push_back(trial_max);
  }

  auto median = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
  };
  prof.elements = rel.size();
  if (!rel.empty()) {
    prof.max_relative = *std::ranges::max_element(rel);
    prof.max_componentwise = *std::ranges::max_element(cw);
    double sum = 0.0;
    for (double r : rel) sum += r;
    prof.mean_relative = sum / static_cast<double>(rel.size());
  }
  prof.median_relative = median(rel);
  prof.median_componentwise = median(cw);
  return prof;
}

}  // namespace ozemu

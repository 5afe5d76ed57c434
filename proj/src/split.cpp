#include "ozemu/split.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ozemu/error.hpp"

namespace ozemu {
namespace {

std::size_t round_up(std::size_t n, std::size_t align) { return (n + align - 1) / align * align; }

int scaling_exponent(double max_abs) {
  if (max_abs == 0.0) return 0;
  int e = 0;
  std::frexp(max_abs, &e);  // max_abs = f * 2^e, f in [0.5, 1)
  return e;
}

// Slices one element. The scaled value x = a * 2^-e lies in (-1, 1); each
// step shifts q bits above the binary point, truncates toward zero and keeps
// the fraction. Every operation is exact.
void slice_element(double a, int e, int k, int q, double radix, std::int16_t* out,
                   std::size_t stride) {
  double x = std::ldexp(a, -e);
  if (std::ldexp(x, e) != a) {
    // Scaling underflowed into the subnormal range; peel slices in the
    // original exponent range instead.
    double r = a;
    for (int s = 0; s < k; ++s) {
      const double d = std::trunc(std::ldexp(r, (s + 1) * q - e));
      out[s * stride] = static_cast<std::int16_t>(d);
      r -= std::ldexp(d, e - (s + 1) * q);
    }
    return;
  }
  for (int s = 0; s < k; ++s) {
    x *= radix;
    const double d = std::trunc(x);
    x -= d;
    out[s * stride] = static_cast<std::int16_t>(d);
  }
}

}  // namespace

std::int16_t SliceStack::at(int s, std::size_t i, std::size_t j) const {
  return orientation_ == Orientation::RowScaled ? vector_data(s, i)[j] : vector_data(s, j)[i];
}

SliceStack split_matrix(ConstMatrixView m, int k, int q, Orientation orientation,
                        ScalingMode mode) {
  if (k < 1 || k > kMaxSlices) {
    throw Error(Errc::InvalidParams, "split count must be in [1, " + std::to_string(kMaxSlices) + "]");
  }
  if (q < 1 || q > kMaxSliceBits) {
    throw Error(Errc::InvalidParams, "slice bits must be in [1, " + std::to_string(kMaxSliceBits) + "]");
  }
  if (!all_finite(m)) throw Error(Errc::NonFiniteEntry, "cannot split a matrix with NaN/Inf");

  SliceStack st;
  st.orientation_ = orientation;
  st.scaling_ = mode;
  st.num_slices_ = k;
  st.slice_bits_ = q;
  st.rows_ = m.rows();
  st.cols_ = m.cols();

  const bool by_row = orientation == Orientation::RowScaled;
  const std::size_t nvec = st.num_vectors();
  const std::size_t inner = st.inner_length();
  st.padded_vectors_ = round_up(nvec, SliceStack::kVectorAlign);
  st.padded_inner_ = round_up(std::max<std::size_t>(inner, 1), SliceStack::kInnerAlign);
  st.exponents_.assign(st.padded_vectors_, 0);
  st.slices_.assign(static_cast<std::size_t>(k) * st.padded_vectors_ * st.padded_inner_, 0);

  std::vector<double> vec_max(nvec, 0.0);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      double& slot = vec_max[by_row ? i : j];
      slot = std::max(slot, std::abs(m(i, j)));
    }
  }
  if (mode == ScalingMode::Global) {
    const double global = vec_max.empty() ? 0.0 : *std::ranges::max_element(vec_max);
    const int e = scaling_exponent(global);
    for (std::size_t v = 0; v < nvec; ++v) st.exponents_[v] = vec_max[v] == 0.0 ? 0 : e;
  } else {
    for (std::size_t v = 0; v < nvec; ++v) st.exponents_[v] = scaling_exponent(vec_max[v]);
  }

  const double radix = std::ldexp(1.0, q);
  const std::size_t slice_stride = st.padded_vectors_ * st.padded_inner_;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double a = m(i, j);
      if (a == 0.0) continue;
      const std::size_t v = by_row ? i : j;
      const std::size_t l = by_row ? j : i;
      slice_element(a, st.exponents_[v], k, q, radix, st.mutable_vector(0, v) + l, slice_stride);
    }
  }
  return st;
}

DenseMatrix reconstruct(const SliceStack& stack) {
  DenseMatrix out(stack.rows(), stack.cols());
  const int q = stack.slice_bits();
  const bool by_row = stack.orientation() == Orientation::RowScaled;
  for (std::size_t j = 0; j < stack.cols(); ++j) {
    for (std::size_t i = 0; i < stack.rows(); ++i) {
      const int e = stack.exponent(by_row ? i : j);
      double sum = 0.0;
      for (int s = 0; s < stack.num_slices(); ++s) {
        sum += std::ldexp(static_cast<double>(stack.at(s, i, j)), e - (s + 1) * q);
      }
      out(i, j) = sum;
    }
  }
  return out;
}

}  // namespace ozemu

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ozemu/dense_matrix.hpp"
#include "ozemu/split.hpp"

namespace ozemu {

enum class BackendKind { NativeF64, EmulatedInt8 };

enum class TruncationKind { Band, Full };

/// Which slice products A_i * B_j are evaluated. Band(t) keeps i + j <= t;
/// Full keeps all k^2 products.
struct Truncation {
  TruncationKind kind = TruncationKind::Band;
  int threshold = 0;  // Band only; 0 selects the default k + 1.

  static Truncation band(int t = 0) { return {TruncationKind::Band, t}; }
  static Truncation full() { return {TruncationKind::Full, 0}; }

  friend bool operator==(const Truncation&, const Truncation&) = default;
};

/// 1-based slice indices of one retained product A_a * B_b.
struct SlicePair {
  int a = 1;
  int b = 1;
  int level() const { return a + b; }
  friend bool operator==(const SlicePair&, const SlicePair&) = default;
};

struct GemmBackend {
  BackendKind kind = BackendKind::NativeF64;
  int splits = 1;
  int slice_bits = kDefaultSliceBits;
  Truncation truncation = Truncation::band();
  ScalingMode scaling = ScalingMode::PerVector;
  /// Reject inner dimensions for which 32-bit integer accumulation of a
  /// single slice product could overflow.
  bool hardware_faithful = false;

  static GemmBackend native() { return {}; }
  static GemmBackend emulated(int k, Truncation t = Truncation::band(),
                              ScalingMode mode = ScalingMode::PerVector) {
    GemmBackend be;
    be.kind = BackendKind::EmulatedInt8;
    be.splits = k;
    be.truncation = t;
    be.scaling = mode;
    return be;
  }

  bool is_native() const { return kind == BackendKind::NativeF64; }
  /// Effective band threshold; 2k for Full.
  int effective_threshold() const;
  /// Throws Errc::InvalidParams if the configuration is inconsistent.
  void validate() const;
  /// Compact self-describing label, e.g. "int8(k=7,q=7,band=8,pervector)".
  std::string describe() const;
};

/// Retained slice pairs ordered by ascending level, then ascending `a`.
std::vector<SlicePair> retained_pairs(int k, Truncation t);

/// Operation counts. All counters are additive across calls.
struct FlopCounter {
  std::uint64_t emulated_int_ops = 0;  ///< integer multiply-adds
  std::uint64_t f64_ops = 0;           ///< FP64 multiply-adds
  std::uint64_t slice_products_computed = 0;

  FlopCounter& operator+=(const FlopCounter& o) {
    emulated_int_ops += o.emulated_int_ops;
    f64_ops += o.f64_ops;
    slice_products_computed += o.slice_products_computed;
    return *this;
  }
  friend bool operator==(const FlopCounter&, const FlopCounter&) = default;
};

/// C <- alpha * A * B + beta * C, in place on views. With beta == 0, C is
/// not read.
void gemm(const GemmBackend& backend, double alpha, ConstMatrixView a, ConstMatrixView b, double beta,
          MatrixView c, FlopCounter& counter);

/// Value-returning form. `c` may be empty when beta == 0.
DenseMatrix gemm(const GemmBackend& backend, double alpha, const DenseMatrix& a, const DenseMatrix& b,
                 double beta, const DenseMatrix& c, FlopCounter& counter);

/// Emulated product S = A * B from pre-split operands (A RowScaled, B
/// ColScaled). Partial products are formed exactly in integers, one level
/// i + j at a time, and accumulated in FP64 from the most significant level.
DenseMatrix emulated_product(const SliceStack& a, const SliceStack& b, const std::vector<SlicePair>& pairs,
                             FlopCounter& counter);

struct ErrorProfile {
  std::size_t elements = 0;   ///< compared elements over all trials
  double max_relative = 0.0;  ///< |c~ - c| / |c|
  double median_relative = 0.0;
  double mean_relative = 0.0;
  /// |c~ - c| / (|A| |B|)_ij, the componentwise GEMM error measure; finite
  /// even where c_ij cancels to zero.
  double max_componentwise = 0.0;
  double median_componentwise = 0.0;
  std::vector<double> max_relative_per_trial;
};

/// Error statistics of `backend` against the exact product. Trial 0 uses the
/// inputs as given; trial t >= 1 evaluates (A D)(D^-1 B) with a random
/// power-of-two diagonal D whose exponents are uniform in [-t, t], which
/// leaves the exact product unchanged but widens the dynamic range seen by
/// the splitting. Deterministic for a given seed.
ErrorProfile gemm_error_profile(const GemmBackend& backend, const DenseMatrix& a, const DenseMatrix& b,
                                int trials, std::uint64_t rng_seed);

inline constexpr std::size_t kMaxProfileInnerDim = 256;

}  // namespace ozemu

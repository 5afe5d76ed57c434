#include "int_kernel.hpp"

#if defined(__AVX512BW__) || defined(__AVX2__)
#include <immintrin.h>
#endif

namespace ozemu::detail {
namespace {

constexpr std::size_t kChunk = 32;  // int16 lanes per step
constexpr std::int64_t kInt32Max = 2147483647;

// Chunks that can be accumulated into one set of 32-bit lanes without
// overflow, counting every product of the chunk against a single lane.
std::size_t chunks_per_flush(int max_abs_entry) {
  const std::int64_t per_chunk = static_cast<std::int64_t>(kChunk) * max_abs_entry * max_abs_entry;
  const std::int64_t n = per_chunk == 0 ? kInt32Max : kInt32Max / per_chunk;
  return n < 1 ? 1 : static_cast<std::size_t>(n);
}

}  // namespace

#if defined(__AVX512BW__)

const char* tile_kernel_name() {
#if defined(__AVX512VNNI__)
  return "avx512-vnni";
#else
  return "avx512bw";
#endif
}

static inline __m512i dot_accumulate(__m512i acc, __m512i a, __m512i b) {
#if defined(__AVX512VNNI__)
  return _mm512_dpwssd_epi32(acc, a, b);
#else
  return _mm512_add_epi32(acc, _mm512_madd_epi16(a, b));
#endif
}

void tile_dot(std::span<const TileOperands> operands, std::size_t stride, std::size_t len,
              int max_abs_entry, std::int64_t out[kTile][kTile]) {
  for (std::size_t r = 0; r < kTile; ++r) {
    for (std::size_t c = 0; c < kTile; ++c) out[r][c] = 0;
  }
  const std::size_t flush_every = chunks_per_flush(max_abs_entry);
  __m512i acc[kTile][kTile];
  auto zero = [&] {
    for (auto& row : acc) {
      for (auto& v : row) v = _mm512_setzero_si512();
    }
  };
  auto flush = [&] {
    for (std::size_t r = 0; r < kTile; ++r) {
      for (std::size_t c = 0; c < kTile; ++c) out[r][c] += _mm512_reduce_add_epi32(acc[r][c]);
    }
    zero();
  };
  zero();
  std::size_t pending = 0;
  for (const TileOperands& op : operands) {
    for (std::size_t l = 0; l < len; l += kChunk) {
      const __m512i a0 = _mm512_loadu_si512(op.a + l);
      const __m512i a1 = _mm512_loadu_si512(op.a + stride + l);
      const __m512i a2 = _mm512_loadu_si512(op.a + 2 * stride + l);
      const __m512i a3 = _mm512_loadu_si512(op.a + 3 * stride + l);
      for (std::size_t c = 0; c < kTile; ++c) {
        const __m512i bc = _mm512_loadu_si512(op.b + c * stride + l);
        acc[0][c] = dot_accumulate(acc[0][c], a0, bc);
        acc[1][c] = dot_accumulate(acc[1][c], a1, bc);
        acc[2][c] = dot_accumulate(acc[2][c], a2, bc);
        acc[3][c] = dot_accumulate(acc[3][c], a3, bc);
      }
      if (++pending == flush_every) {
        flush();
        pending = 0;
      }
    }
  }
  if (pending) flush();
}

#elif defined(__AVX2__)

const char* tile_kernel_name() { return "avx2"; }

static inline std::int64_t hsum(__m256i v) {
  __m128i s = _mm_add_epi32(_mm256_castsi256_si128(v), _mm256_extracti128_si256(v, 1));
  s = _mm_add_epi32(s, _mm_shuffle_epi32(s, 0x4e));
  s = _mm_add_epi32(s, _mm_shuffle_epi32(s, 0xb1));
  return _mm_cvtsi128_si32(s);
}

void tile_dot(std::span<const TileOperands> operands, std::size_t stride, std::size_t len,
              int max_abs_entry, std::int64_t out[kTile][kTile]) {
  for (std::size_t r = 0; r < kTile; ++r) {
    for (std::size_t c = 0; c < kTile; ++c) out[r][c] = 0;
  }
  const std::size_t flush_every = chunks_per_flush(max_abs_entry);
  __m256i acc[kTile][kTile];
  auto zero = [&] {
    for (auto& row : acc) {
      for (auto& v : row) v = _mm256_setzero_si256();
    }
  };
  auto flush = [&] {
    for (std::size_t r = 0; r < kTile; ++r) {
      for (std::size_t c = 0; c < kTile; ++c) out[r][c] += hsum(acc[r][c]);
    }
    zero();
  };
  zero();
  std::size_t pending = 0;
  for (const TileOperands& op : operands) {
    for (std::size_t l = 0; l < len; l += kChunk) {
      for (std::size_t h = 0; h < kChunk; h += 16) {
        __m256i a[kTile];
        for (std::size_t r = 0; r < kTile; ++r) {
          a[r] = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(op.a + r * stride + l + h));
        }
        for (std::size_t c = 0; c < kTile; ++c) {
          const __m256i bc = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(op.b + c * stride + l + h));
          for (std::size_t r = 0; r < kTile; ++r) {
            acc[r][c] = _mm256_add_epi32(acc[r][c], _mm256_madd_epi16(a[r], bc));
          }
        }
      }
      if (++pending == flush_every) {
        flush();
        pending = 0;
      }
    }
  }
  if (pending) flush();
}

#else

const char* tile_kernel_name() { return "scalar"; }

void tile_dot(std::span<const TileOperands> operands, std::size_t stride, std::size_t len,
              int max_abs_entry, std::int64_t out[kTile][kTile]) {
  const std::size_t flush_every = chunks_per_flush(max_abs_entry);
  for (std::size_t r = 0; r < kTile; ++r) {
    for (std::size_t c = 0; c < kTile; ++c) {
      std::int64_t total = 0;
      std::int32_t acc = 0;
      std::size_t pending = 0;
      for (const TileOperands& op : operands) {
        const std::int16_t* a = op.a + r * stride;
        const std::int16_t* b = op.b + c * stride;
        for (std::size_t l = 0; l < len; l += kChunk) {
          for (std::size_t t = 0; t < kChunk; ++t) {
            acc += static_cast<std::int32_t>(a[l + t]) * static_cast<std::int32_t>(b[l + t]);
          }
          if (++pending == flush_every) {
            total += acc;
            acc = 0;
            pending = 0;
          }
        }
      }
      out[r][c] = total + acc;
    }
  }
}

#endif

}  // namespace ozemu::detail

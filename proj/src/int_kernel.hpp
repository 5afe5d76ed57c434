#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace ozemu::detail {

inline constexpr std::size_t kTile = 4;

/// Base pointers of one slice pair for a 4x4 output tile: four consecutive A
/// vectors and four consecutive B vectors, each `stride` elements apart.
struct TileOperands {
  const std::int16_t* a;
  const std::int16_t* b;
};

/// out[r][c] = sum over operands p of dot(p.a + r*stride, p.b + c*stride, len).
/// `len` must be a multiple of 32. Integer accumulation is exact: partial sums
/// are flushed from 32-bit lanes to 64 bits before they can overflow given
/// entries bounded by `max_abs_entry`.
void tile_dot(std::span<const TileOperands> operands, std::size_t stride, std::size_t len,
              int max_abs_entry, std::int64_t out[kTile][kTile]);

/// Name of the compiled kernel variant ("avx512-vnni", "avx2", "scalar").
const char* tile_kernel_name();

}  // namespace ozemu::detail

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ozemu {

enum class Errc {
  NonFiniteEntry,
  InvalidParams,
  InvalidDim,
  ShapeMismatch,
  NonSquare,
  AccumulatorOverflowRisk,
  SingularPivot,
  NonPowerOfTwoScale,
  InvalidPermutation,
  ExhaustedSearch,
  Io,
};

std::string_view to_string(Errc code) noexcept;

/// Single exception type for the library; `code()` identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ozemu

#pragma once

#include <iosfwd>
#include <string>

#include "ozemu/dense_matrix.hpp"

namespace ozemu {

/// Writes `%%MatrixMarket matrix array real general`, an optional comment
/// line, the dimensions, then one value per line in column-major order. Values
/// use the shortest representation that round-trips.
void write_matrix_market(std::ostream& out, const DenseMatrix& m, const std::string& comment = {});

/// Reads the array real general format (comment lines allowed). Throws
/// Errc::Io on malformed input.
DenseMatrix read_matrix_market(std::istream& in);

void save_matrix_market(const std::string& path, const DenseMatrix& m, const std::string& comment = {});
DenseMatrix load_matrix_market(const std::string& path);

}  // namespace ozemu

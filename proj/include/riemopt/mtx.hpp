// Minimal MatrixMarket reader for real matrices (coordinate or array format,
// general or symmetric storage).
#pragma once

#include <iosfwd>
#include <string>

#include "riemopt/core.hpp"

namespace riemopt {

struct MtxFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

DenseMat read_matrix_market(std::istream& in);
DenseMat read_matrix_market_file(const std::string& path);

}  // namespace riemopt

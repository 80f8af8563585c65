#pragma once

#include <filesystem>

#include "cgeig/linops.hpp"

namespace cgeig {

struct MatrixMarketOptions {
  // Accept a `general` file with non-Hermitian values by replacing A with (A + A*)/2.
  bool symmetrize = false;
  double hermitian_tol = 1e-13;
};

// Reads `%%MatrixMarket matrix` files in coordinate or array format with
// real/integer (and, for complex scalars, complex) fields. Pattern files are
// rejected; symmetric/hermitian qualifiers expand the stored triangle.
template <Scalar S>
HermitianOperator<S> load_matrix_market(const std::filesystem::path& path,
                                        const MatrixMarketOptions& options = {});

// Writes the lower triangle in coordinate format with the symmetric (real)
// or hermitian (complex) qualifier.
template <Scalar S>
void write_matrix_market(const std::filesystem::path& path, const HermitianOperator<S>& op);

}  // namespace cgeig

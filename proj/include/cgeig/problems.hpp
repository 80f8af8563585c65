#pragma once

#include <string>
#include <vector>

#include "cgeig/linops.hpp"

namespace cgeig {

// A generated pencil with the eigenvalues known in closed form (possibly a
// leading subset; empty when none are known).
struct Problem {
  std::string name;
  HermitianPencil<double> pencil;
  std::vector<double> exact_eigenvalues;
};

// A = diag(spectrum), M = I. The spectrum must be ascending and finite.
Problem gen_diag(std::vector<double> spectrum);

// (1, 1 + gap, 2, 3, ..., top).
std::vector<double> cluster_spectrum(double gap = 1e-6, int top = 1000);

// tridiag(-1, 2, -1), M = I.
Problem gen_laplace1d(Eigen::Index n);

// 5-point stencil on an nx-by-ny interior grid, unit spacing, M = I.
Problem gen_laplace2d(Eigen::Index nx, Eigen::Index ny);

struct SlitSpec {
  double y_lo = 0.1;
  double y_hi = 0.9;  // y_hi <= y_lo means no slit
};

// 5-point Laplacian on [0,2]x[0,1] (interior nodes, Dirichlet boundary) with the
// couplings across x = 1 removed for y in [y_lo, y_hi]. nx must be even so the
// grid is mirror-symmetric about the slit. Scaled as A = hx*hy*(-Lap_h),
// M = hx*hy*I, which keeps the spectrum of -Lap_h.
Problem gen_slit2d(Eigen::Index nx, Eigen::Index ny, SlitSpec slit = {});

// Row-major node index of grid point (i, j), 0-based, i along x.
inline Eigen::Index grid_index(Eigen::Index i, Eigen::Index j, Eigen::Index nx) { return j * nx + i; }

template <Scalar S>
struct DenseSpectrum {
  Eigen::VectorXd values;  // ascending
  DenseMat<S> vectors;     // M-orthonormal columns
};

// Full dense solution via Cholesky of M and a symmetric eigensolve.
template <Scalar S>
DenseSpectrum<S> dense_oracle(const HermitianPencil<S>& pencil, Eigen::Index max_n = 512,
                              bool want_vectors = true);

// Eigenvalue relation between a transformed pencil (canonical A x = mu M x,
// smallest eigenvalues of interest) and the original problem.
enum class MapKind {
  kShift,          // mu = lambda - sigma
  kFolded,         // mu = (lambda - sigma)^2
  kSignSplit,      // mu = sign * (lambda - sigma)
  kNegated,        // mu = -(lambda - sigma)
  kSquare,         // mu = omega^2
  kNegReciprocal,  // mu = -1/omega
};

struct EigenvalueMap {
  MapKind kind = MapKind::kShift;
  double sigma = 0.0;
  int sign = 1;

  double to_canonical(double lambda) const;
  // `branch` picks the root for the folded map (+1: lambda >= sigma).
  double to_original(double mu, int branch = 1) const;
  std::string describe() const;
};

struct Transformed {
  HermitianPencil<double> pencil;
  EigenvalueMap map;
};

// (L - sigma S, S). L - sigma S must be positive definite.
Transformed transform_shift_definite(const HermitianOperator<double>& l,
                                     const HermitianOperator<double>& s, double sigma);

// (Lt S^{-1} Lt, S) with Lt = L - sigma S, dense. With sign_split set the
// pencil is (Lt S^{-1} Lt, sign * Lt), which needs sign * Lt positive definite.
Transformed transform_interior_folded(const HermitianOperator<double>& l,
                                      const HermitianOperator<double>& s, double sigma,
                                      int sign_split = 0);

// Sign of u*(L - sigma S)u; resolves the folded map's branch for eigenvector u.
int folded_branch(const HermitianOperator<double>& l, const HermitianOperator<double>& s,
                  double sigma, const Vec<double>& u);

// L - sigma S positive definite: same as transform_shift_definite.
// Negative definite: (-(L - sigma S), S) with mu = -(lambda - sigma).
Transformed transform_definite_pencil(const HermitianOperator<double>& l,
                                      const HermitianOperator<double>& s, double sigma);

enum class LinearResponseForm { kInversePair, kBlockPencil };

// Targets are the smallest positive eigenvalues omega of [0 Lt; St 0].
//   kInversePair: (St, Lt^{-1}) when Lt is definite, else (Lt, St^{-1}); mu = omega^2.
//   kBlockPencil: L = diag(Lt, St), S = [0 I; I 0]; since L is positive definite the
//     canonical pencil is (S, L) with mu = -1/omega on its negative part.
Transformed transform_linear_response(const HermitianOperator<double>& lt,
                                      const HermitianOperator<double>& st,
                                      LinearResponseForm form);

// Sign of a Hermitian matrix via sparse LDL^T inertia: +1 positive definite,
// -1 negative definite, 0 otherwise.
int definiteness(const HermitianOperator<double>& mat);

}  // namespace cgeig

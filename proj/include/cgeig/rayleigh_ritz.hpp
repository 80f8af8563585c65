#pragma once

#include <string_view>
#include <vector>

#include "cgeig/linops.hpp"

namespace cgeig {

enum class BasisRole {
  kCurrentIterate,
  kPrecondResidual,
  kDirection,
  kAuxiliary,
  kStoredMinResidual,
};

std::string_view to_string(BasisRole role);

// Ordered trial basis; vectors[0] is the weighting anchor x. Images A*v and
// M*v may be supplied per vector so that callers can avoid re-applying the
// operators; empty image slots are computed on demand.
template <Scalar S>
struct TrialBasis {
  static constexpr std::size_t kMaxCount = 5;

  std::vector<Vec<S>> vectors;
  std::vector<BasisRole> roles;
  std::vector<Vec<S>> a_images;
  std::vector<Vec<S>> m_images;

  std::size_t size() const { return vectors.size(); }

  void push(Vec<S> v, BasisRole role) { push(std::move(v), role, Vec<S>(), Vec<S>()); }
  void push(Vec<S> v, BasisRole role, Vec<S> av, Vec<S> mv) {
    vectors.push_back(std::move(v));
    roles.push_back(role);
    a_images.push_back(std::move(av));
    m_images.push_back(std::move(mv));
  }

  // Keeps the entries whose flag is false.
  TrialBasis without(const std::vector<bool>& drop) const;
};

template <Scalar S>
struct RitzOutput {
  Vec<S> x_next;
  Vec<S> ax_next;  // A * x_next, formed from basis images
  Vec<S> mx_next;  // M * x_next
  double theta_next = 0.0;
  Eigen::VectorXd ritz_values;  // ascending, over the retained subspace
  std::vector<S> coefficients;  // x_next = sum_j coefficients[j] * basis.vectors[j]
  std::vector<bool> dropped;    // per input basis vector
  std::vector<double> gram_diag;  // M-Gram diagonal after orthogonalization, 0 when dropped
  bool anchor_fallback = false;   // minimizer had no component on x; unit M-norm output
  bool retried_reduced = false;   // dense eigensolve failed once and was retried on {x, w}
  MatvecCounts matvecs;
};

struct RrwOptions {
  // Drop basis vector j when delta_0 > gamma * delta_j (relative to the anchor).
  double gamma = 1e26;
  // Drop basis vector j when orthogonalization leaves less than this
  // fraction of its own M-norm.
  double min_independence = 1e-10;
  std::size_t max_basis = TrialBasis<double>::kMaxCount;
};

template <Scalar S>
struct DenseEigen {
  Eigen::VectorXd values;  // ascending
  DenseMat<S> vectors;     // columns; gram_m-orthonormal for the generalized solve
};

// Cyclic Jacobi for a Hermitian matrix of any (small) order.
template <Scalar S>
DenseEigen<S> jacobi_eigensolve(const DenseMat<S>& mat);

// gram_a v = theta gram_m v for k <= 5 via Cholesky of gram_m followed by
// Jacobi. Throws kConditioning when gram_m is not positive definite.
template <Scalar S>
DenseEigen<S> small_dense_eigensolve(const DenseMat<S>& gram_a, const DenseMat<S>& gram_m);

// Weighted Rayleigh-Ritz: returns x' in x + span(basis[1..]) minimizing the
// Rayleigh quotient over span(basis).
template <Scalar S>
RitzOutput<S> rrw(const HermitianPencil<S>& pencil, const TrialBasis<S>& basis,
                  const RrwOptions& options = {});

template <Scalar S>
struct OrthogonalizedBasis {
  TrialBasis<S> basis;  // M-orthogonal vectors (unnormalized), reduced
  std::vector<double> gram_diag;  // delta_1..delta_k of the full basis
  std::vector<bool> dropped;      // per input vector
  bool reduced_to_psd = false;    // delta_1 > gamma * delta_3: kept {x, w}
  bool dropped_auxiliary = false; // k = 4 and delta_1 > gamma * delta_4: kept {x, w, p}
};

// Unnormalized modified Gram-Schmidt in the M-inner product over
// {x, w, p[, a]} followed by the conditioning-based reduction.
template <Scalar S>
OrthogonalizedBasis<S> m_orthogonalize_with_reduction(const HermitianOperator<S>& m,
                                                      const TrialBasis<S>& basis, double gamma);

}  // namespace cgeig

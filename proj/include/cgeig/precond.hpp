#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "cgeig/linops.hpp"

namespace cgeig {

enum class PrecondKind { kIdentity, kJacobi, kIchol, kDenseShiftedInverse, kUser };

std::string_view to_string(PrecondKind kind);

// Symmetric positive definite map w = T r. Immutable and cheap to copy.
template <Scalar S>
class Preconditioner {
 public:
  struct Impl;

  Preconditioner() = default;

  static Preconditioner identity(Eigen::Index n);
  // T = diag(1/a_ii); throws on a non-positive diagonal entry.
  static Preconditioner jacobi(const HermitianOperator<S>& a);
  // Threshold incomplete Cholesky of A - sigma*M. Entries of column j of L
  // below droptol * |K(j,:)|_2 are dropped (K = A - sigma*M). On a
  // non-positive pivot the factorization is retried once with the diagonal
  // of K scaled by 1 + 1e-3.
  static Preconditioner incomplete_cholesky(const HermitianPencil<S>& pencil, double droptol,
                                            double sigma = 0.0);
  // Exact (A - sigma*M)^{-1} through a dense Cholesky factorization.
  static Preconditioner dense_shifted_inverse(const HermitianPencil<S>& pencil, double sigma,
                                              Eigen::Index max_n = 2048);
  // Arbitrary dense SPD matrix; checked on random probes.
  static Preconditioner user(DenseMat<S> t);

  Vec<S> apply(const Vec<S>& r) const;
  void apply(const Vec<S>& r, Vec<S>& out) const;

  Eigen::Index n() const;
  PrecondKind kind() const;
  bool empty() const { return impl_ == nullptr; }
  double droptol() const;
  double sigma() const;
  // True when the incomplete factorization needed the diagonal boost.
  bool diagonal_boosted() const;
  // Nonzeros of the incomplete factor (0 for other kinds).
  std::int64_t factor_nonzeros() const;
  std::string describe() const;

  // Explicit T by applying to unit vectors.
  DenseMat<S> to_dense() const;

 private:
  explicit Preconditioner(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

struct PrecondQuality {
  double sigma = 0.0;
  double kappa = 1.0;
  double eta = 1.0;
  double beta_min = 0.0;
  double beta_max = 0.0;
  double mu1 = 0.0;
  double alpha1 = 0.0;  // extreme eigenvalues of (A - sigma*M, T^{-1})
  double alphan = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambdan = 0.0;
};

// Dense evaluation (n <= max_n) of kappa, eta, beta_min/max and mu1.
template <Scalar S>
PrecondQuality quality_metrics(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                               double sigma, Eigen::Index max_n = 512);

// eta from its ingredients; +inf when lambda2 == lambda1.
double eta_from(double kappa, double lambda1, double lambda2, double lambdan, double sigma);

}  // namespace cgeig

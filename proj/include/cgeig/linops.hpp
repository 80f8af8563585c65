#pragma once

#include <complex>
#include <concepts>
#include <cstdint>
#include <memory>
#include <variant>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "cgeig/error.hpp"

namespace cgeig {

template <class S>
concept Scalar = std::same_as<S, double> || std::same_as<S, std::complex<double>>;

using Complex = std::complex<double>;

template <Scalar S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <Scalar S>
using DenseMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// Compressed-row storage with sorted column indices.
template <Scalar S>
using SparseMat = Eigen::SparseMatrix<S, Eigen::RowMajor, int>;

inline double real_part(double v) { return v; }
inline double real_part(const Complex& v) { return v.real(); }

template <Scalar S>
bool all_finite(const Vec<S>& v) {
  return v.allFinite();
}

// Immutable Hermitian operator, sparse or dense. Copies share storage.
template <Scalar S>
class HermitianOperator {
 public:
  static constexpr double kDefaultHermitianTol = 1e-13;

  HermitianOperator() = default;

  // Both factories reject non-finite values and non-Hermitian input
  // (relative Frobenius defect above `tol`).
  static HermitianOperator from_sparse(SparseMat<S> mat, double tol = kDefaultHermitianTol);
  static HermitianOperator from_dense(DenseMat<S> mat, double tol = kDefaultHermitianTol);
  static HermitianOperator identity(Eigen::Index n);
  static HermitianOperator diagonal(const Eigen::VectorXd& diag);

  Eigen::Index n() const { return n_; }
  bool is_sparse() const { return std::holds_alternative<SparseMat<S>>(*storage_); }
  bool empty() const { return storage_ == nullptr; }

  Vec<S> apply(const Vec<S>& v) const;
  void apply(const Vec<S>& v, Vec<S>& out) const;

  DenseMat<S> to_dense() const;
  SparseMat<S> to_sparse() const;
  Eigen::VectorXd diagonal_entries() const;

  // Null when the storage is of the other kind.
  const SparseMat<S>* sparse() const { return std::get_if<SparseMat<S>>(storage_.get()); }
  const DenseMat<S>* dense() const { return std::get_if<DenseMat<S>>(storage_.get()); }

 private:
  using Storage = std::variant<SparseMat<S>, DenseMat<S>>;
  explicit HermitianOperator(std::shared_ptr<const Storage> storage, Eigen::Index n)
      : storage_(std::move(storage)), n_(n) {}

  std::shared_ptr<const Storage> storage_;
  Eigen::Index n_ = 0;
};

// The pair (A, M) with M positive definite.
template <Scalar S>
class HermitianPencil {
 public:
  HermitianPencil() = default;
  // Checks matching dimensions and v*Mv > 0 on seeded random probes.
  HermitianPencil(HermitianOperator<S> a, HermitianOperator<S> m, int probes = 8);

  const HermitianOperator<S>& a() const { return a_; }
  const HermitianOperator<S>& m() const { return m_; }
  Eigen::Index n() const { return a_.n(); }

 private:
  HermitianOperator<S> a_;
  HermitianOperator<S> m_;
};

// Matrix-vector product counts; the portable cost unit of a solver run.
struct MatvecCounts {
  std::int64_t a = 0;
  std::int64_t m = 0;
  std::int64_t t = 0;
};

template <Scalar S>
double rayleigh_quotient(const HermitianPencil<S>& pencil, const Vec<S>& x);

template <Scalar S>
Vec<S> residual(const HermitianPencil<S>& pencil, const Vec<S>& x, double theta);

template <Scalar S>
S m_inner(const HermitianOperator<S>& m, const Vec<S>& v, const Vec<S>& w);

template <Scalar S>
double m_norm(const HermitianOperator<S>& m, const Vec<S>& v);

// |v*Mw| / (|v|_M |w|_M), clamped to [0, 1].
template <Scalar S>
double m_cosine(const HermitianOperator<S>& m, const Vec<S>& v, const Vec<S>& w);

}  // namespace cgeig

#include "cgeig/precond.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <variant>
#include <vector>

namespace cgeig {

std::string_view to_string(PrecondKind kind) {
  switch (kind) {
    case PrecondKind::kIdentity: return "identity";
    case PrecondKind::kJacobi: return "jacobi";
    case PrecondKind::kIchol: return "ichol";
    case PrecondKind::kDenseShiftedInverse: return "dense-shifted-inverse";
    case PrecondKind::kUser: return "user";
  }
  return "unknown";
}

namespace {

template <Scalar S>
S conj_of(const S& v) {
  if constexpr (std::same_as<S, double>) {
    return v;
  } else {
    return std::conj(v);
  }
}

// Lower factor in compressed columns; the diagonal is the first entry of each column.
template <Scalar S>
struct LowerFactor {
  std::vector<std::int64_t> col_ptr;
  std::vector<Eigen::Index> rows;
  std::vector<S> vals;
};

struct IdentityPart {};
struct DiagPart {
  Eigen::VectorXd inv;
};
template <Scalar S>
struct DenseFactorPart {
  Eigen::LLT<DenseMat<S>> llt;
};
template <Scalar S>
struct DenseMatPart {
  DenseMat<S> t;
};

// Left-looking IC(droptol). Returns false on a non-positive pivot.
template <Scalar S>
bool ichol_factor(const Eigen::SparseMatrix<S, Eigen::ColMajor, int>& k, double droptol,
                  double diag_scale, LowerFactor<S>& out) {
  const Eigen::Index n = k.rows();
  Eigen::VectorXd col_norm = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (typename Eigen::SparseMatrix<S, Eigen::ColMajor, int>::InnerIterator it(k, j); it; ++it) {
      col_norm[j] += std::norm(it.value());
    }
    col_norm[j] = std::sqrt(col_norm[j]);
  }

  // row_links[j] lists (column k, position of L(j,k) inside column k).
  std::vector<std::vector<std::pair<Eigen::Index, std::int64_t>>> row_links(
      static_cast<std::size_t>(n));
  out.col_ptr.assign(1, 0);
  out.rows.clear();
  out.vals.clear();

  std::vector<S> work(static_cast<std::size_t>(n), S(0));
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  std::vector<Eigen::Index> pattern;

  for (Eigen::Index j = 0; j < n; ++j) {
    pattern.clear();
    auto touch = [&](Eigen::Index i) {
      if (!used[i]) {
        used[i] = 1;
        pattern.push_back(i);
      }
    };
    for (typename Eigen::SparseMatrix<S, Eigen::ColMajor, int>::InnerIterator it(k, j); it; ++it) {
      const Eigen::Index i = it.row();
      if (i < j) continue;
      touch(i);
      work[i] += (i == j) ? it.value() * diag_scale : it.value();
    }
    touch(j);
    for (const auto& [col, pos] : row_links[j]) {
      const S ljk = conj_of(out.vals[pos]);
      const std::int64_t end = out.col_ptr[col + 1];
      for (std::int64_t q = pos; q < end; ++q) {
        const Eigen::Index i = out.rows[q];
        touch(i);
        work[i] -= out.vals[q] * ljk;
      }
    }
    const double pivot = real_part(work[j]);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      for (Eigen::Index i : pattern) {
        work[i] = S(0);
        used[i] = 0;
      }
      return false;
    }
    const double ljj = std::sqrt(pivot);
    std::sort(pattern.begin(), pattern.end());
    const double drop = droptol * col_norm[j];
    out.rows.push_back(j);
    out.vals.push_back(S(ljj));
    for (Eigen::Index i : pattern) {
      if (i != j) {
        const S v = work[i] / ljj;
        if (v != S(0) && std::abs(v) >= drop) {
          row_links[i].emplace_back(j, static_cast<std::int64_t>(out.rows.size()));
          out.rows.push_back(i);
          out.vals.push_back(v);
        }
      }
      work[i] = S(0);
      used[i] = 0;
    }
    out.col_ptr.push_back(static_cast<std::int64_t>(out.rows.size()));
  }
  return true;
}

template <Scalar S>
void ichol_solve(const LowerFactor<S>& l, const Vec<S>& r, Vec<S>& out) {
  const Eigen::Index n = r.size();
  out = r;
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::int64_t begin = l.col_ptr[j], end = l.col_ptr[j + 1];
    out[j] /= l.vals[begin];
    const S yj = out[j];
    for (std::int64_t q = begin + 1; q < end; ++q) out[l.rows[q]] -= l.vals[q] * yj;
  }
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    const std::int64_t begin = l.col_ptr[j], end = l.col_ptr[j + 1];
    S acc = out[j];
    for (std::int64_t q = begin + 1; q < end; ++q) acc -= conj_of(l.vals[q]) * out[l.rows[q]];
    out[j] = acc / l.vals[begin];
  }
}

template <Scalar S>
Vec<S> probe_vec(Eigen::Index n, std::mt19937_64& gen) {
  std::normal_distribution<double> d;
  Vec<S> v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if constexpr (std::same_as<S, double>) {
      v[i] = d(gen);
    } else {
      const double re = d(gen);
      v[i] = S(re, d(gen));
    }
  }
  return v;
}

template <Scalar S>
SparseMat<S> shifted(const HermitianPencil<S>& pencil, double sigma) {
  SparseMat<S> a = pencil.a().to_sparse();
  if (sigma == 0.0) return a;
  SparseMat<S> m = pencil.m().to_sparse();
  return SparseMat<S>(a - S(sigma) * m);
}

}  // namespace

template <Scalar S>
struct Preconditioner<S>::Impl {
  PrecondKind kind = PrecondKind::kIdentity;
  Eigen::Index n = 0;
  double droptol = 0.0;
  double sigma = 0.0;
  bool boosted = false;
  std::variant<IdentityPart, DiagPart, LowerFactor<S>, DenseFactorPart<S>, DenseMatPart<S>> part;
};

template <Scalar S>
Preconditioner<S> Preconditioner<S>::identity(Eigen::Index n) {
  if (n < 1) throw Error(ErrorCode::kInvalidInput, "preconditioner dimension must be positive");
  auto impl = std::make_shared<Impl>();
  impl->kind = PrecondKind::kIdentity;
  impl->n = n;
  impl->part = IdentityPart{};
  return Preconditioner(std::move(impl));
}

template <Scalar S>
Preconditioner<S> Preconditioner<S>::jacobi(const HermitianOperator<S>& a) {
  const Eigen::VectorXd d = a.diagonal_entries();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) {
      throw Error(ErrorCode::kInvalidInput,
                  "Jacobi preconditioner needs a positive diagonal (row " + std::to_string(i) + ")");
    }
  }
  auto impl = std::make_shared<Impl>();
  impl->kind = PrecondKind::kJacobi;
  impl->n = d.size();
  impl->part = DiagPart{d.cwiseInverse()};
  return Preconditioner(std::move(impl));
}

template <Scalar S>
Preconditioner<S> Preconditioner<S>::incomplete_cholesky(const HermitianPencil<S>& pencil,
                                                         double droptol, double sigma) {
  if (!(droptol >= 0.0) || !std::isfinite(droptol)) {
    throw Error(ErrorCode::kInvalidInput, "droptol must be a finite non-negative number");
  }
  const Eigen::SparseMatrix<S, Eigen::ColMajor, int> k = shifted(pencil, sigma);
  auto impl = std::make_shared<Impl>();
  impl->kind = PrecondKind::kIchol;
  impl->n = k.rows();
  impl->droptol = droptol;
  impl->sigma = sigma;
  LowerFactor<S> l;
  if (!ichol_factor<S>(k, droptol, 1.0, l)) {
    impl->boosted = true;
    if (!ichol_factor<S>(k, droptol, 1.0 + 1e-3, l)) {
      throw Error(ErrorCode::kNumericalBreakdown,
                  "incomplete Cholesky hit a non-positive pivot; lower sigma or the drop tolerance");
    }
  }
  impl->part = std::move(l);
  return Preconditioner(std::move(impl));
}

template <Scalar S>
Preconditioner<S> Preconditioner<S>::dense_shifted_inverse(const HermitianPencil<S>& pencil,
                                                           double sigma, Eigen::Index max_n) {
  if (pencil.n() > max_n) {
    throw Error(ErrorCode::kUnsupported, "dense shifted inverse limited to n <= " +
                                             std::to_string(max_n));
  }
  DenseMat<S> k = pencil.a().to_dense() - S(sigma) * pencil.m().to_dense();
  DenseFactorPart<S> part{Eigen::LLT<DenseMat<S>>(k)};
  if (part.llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kInvalidShift, "A - sigma*M is not positive definite");
  }
  auto impl = std::make_shared<Impl>();
  impl->kind = PrecondKind::kDenseShiftedInverse;
  impl->n = pencil.n();
  impl->sigma = sigma;
  impl->part = std::move(part);
  return Preconditioner(std::move(impl));
}

template <Scalar S>
Preconditioner<S> Preconditioner<S>::user(DenseMat<S> t) {
  if (t.rows() != t.cols() || t.rows() < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "preconditioner matrix must be square");
  }
  if (!t.allFinite()) throw Error(ErrorCode::kInvalidInput, "preconditioner has non-finite entries");
  const double defect = (t - DenseMat<S>(t.adjoint())).norm();
  if (defect > 1e-12 * t.norm()) {
    throw Error(ErrorCode::kInvalidInput, "preconditioner matrix is not Hermitian");
  }
  std::mt19937_64 gen(0x7e57);
  for (int probe = 0; probe < 16; ++probe) {
    const Vec<S> r = probe_vec<S>(t.rows(), gen);
    if (!(real_part(r.dot(t * r)) > 0.0)) {
      throw Error(ErrorCode::kInvalidInput, "preconditioner is not positive definite");
    }
  }
  auto impl = std::make_shared<Impl>();
  impl->kind = PrecondKind::kUser;
  impl->n = t.rows();
  impl->part = DenseMatPart<S>{std::move(t)};
  return Preconditioner(std::move(impl));
}

template <Scalar S>
Vec<S> Preconditioner<S>::apply(const Vec<S>& r) const {
  Vec<S> out;
  apply(r, out);
  return out;
}

template <Scalar S>
void Preconditioner<S>::apply(const Vec<S>& r, Vec<S>& out) const {
  if (!impl_) throw Error(ErrorCode::kInvalidInput, "preconditioner is not initialized");
  if (r.size() != impl_->n) {
    throw Error(ErrorCode::kDimensionMismatch, "preconditioner/vector size mismatch");
  }
  std::visit(
      [&](const auto& part) {
        using P = std::decay_t<decltype(part)>;
        if constexpr (std::same_as<P, IdentityPart>) {
          out = r;
        } else if constexpr (std::same_as<P, DiagPart>) {
          out = part.inv.template cast<S>().cwiseProduct(r);
        } else if constexpr (std::same_as<P, LowerFactor<S>>) {
          ichol_solve<S>(part, r, out);
        } else if constexpr (std::same_as<P, DenseFactorPart<S>>) {
          out = part.llt.solve(r);
        } else {
          out.noalias() = part.t * r;
        }
      },
      impl_->part);
}

template <Scalar S>
Eigen::Index Preconditioner<S>::n() const {
  return impl_ ? impl_->n : 0;
}

template <Scalar S>
PrecondKind Preconditioner<S>::kind() const {
  return impl_ ? impl_->kind : PrecondKind::kIdentity;
}

template <Scalar S>
double Preconditioner<S>::droptol() const {
  return impl_ ? impl_->droptol : 0.0;
}

template <Scalar S>
double Preconditioner<S>::sigma() const {
  return impl_ ? impl_->sigma : 0.0;
}

template <Scalar S>
bool Preconditioner<S>::diagonal_boosted() const {
  return impl_ && impl_->boosted;
}

template <Scalar S>
std::int64_t Preconditioner<S>::factor_nonzeros() const {
  if (!impl_) return 0;
  if (const auto* l = std::get_if<LowerFactor<S>>(&impl_->part)) {
    return static_cast<std::int64_t>(l->vals.size());
  }
  return 0;
}

template <Scalar S>
std::string Preconditioner<S>::describe() const {
  if (!impl_) return "none";
  char buf[96];
  switch (impl_->kind) {
    case PrecondKind::kIchol:
      std::snprintf(buf, sizeof(buf), "ichol(droptol=%g, sigma=%g)", impl_->droptol, impl_->sigma);
      return buf;
    case PrecondKind::kDenseShiftedInverse:
      std::snprintf(buf, sizeof(buf), "dense-shifted-inverse(sigma=%g)", impl_->sigma);
      return buf;
    default:
      return std::string(to_string(impl_->kind));
  }
}

template <Scalar S>
DenseMat<S> Preconditioner<S>::to_dense() const {
  const Eigen::Index n = this->n();
  DenseMat<S> t(n, n);
  Vec<S> e = Vec<S>::Zero(n), col;
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = S(1);
    apply(e, col);
    t.col(j) = col;
    e[j] = S(0);
  }
  return t;
}

double eta_from(double kappa, double lambda1, double lambda2, double lambdan, double sigma) {
  if (lambda2 == lambda1) return std::numeric_limits<double>::infinity();
  return kappa * (lambdan - lambda1) * (lambda2 - sigma) / ((lambda2 - lambda1) * (lambdan - sigma));
}

template <Scalar S>
PrecondQuality quality_metrics(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                               double sigma, Eigen::Index max_n) {
  const Eigen::Index n = pencil.n();
  if (n > max_n) {
    throw Error(ErrorCode::kUnsupported,
                "quality metrics are dense evaluations limited to n <= " + std::to_string(max_n));
  }
  if (n < 2) throw Error(ErrorCode::kInvalidInput, "quality metrics need n >= 2");
  if (t.n() != n) throw Error(ErrorCode::kDimensionMismatch, "preconditioner size mismatch");
  const DenseMat<S> a = pencil.a().to_dense();
  const DenseMat<S> m = pencil.m().to_dense();
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMat<S>> spectrum(a, m, Eigen::EigenvaluesOnly);
  if (spectrum.info() != Eigen::Success) {
    throw Error(ErrorCode::kNumericalBreakdown, "dense eigensolve of the pencil failed");
  }
  const Eigen::VectorXd lam = spectrum.eigenvalues();
  if (!(sigma < lam[0])) {
    throw Error(ErrorCode::kInvalidShift, "sigma must lie below the smallest eigenvalue");
  }

  DenseMat<S> tm = t.to_dense();
  tm = (tm + DenseMat<S>(tm.adjoint())) * S(0.5);
  Eigen::LLT<DenseMat<S>> chol(tm);
  if (chol.info() != Eigen::Success) {
    throw Error(ErrorCode::kConditioning, "preconditioner is not numerically positive definite");
  }
  const DenseMat<S> c = chol.matrixL();
  Eigen::SelfAdjointEigenSolver<DenseMat<S>> alpha(DenseMat<S>(c.adjoint() * (a - S(sigma) * m) * c),
                                                   Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<DenseMat<S>> mu(DenseMat<S>(c.adjoint() * m * c),
                                                Eigen::EigenvaluesOnly);

  PrecondQuality q;
  q.sigma = sigma;
  q.lambda1 = lam[0];
  q.lambda2 = lam[1];
  q.lambdan = lam[n - 1];
  q.alpha1 = alpha.eigenvalues()[0];
  q.alphan = alpha.eigenvalues()[n - 1];
  q.kappa = q.alphan / q.alpha1;
  q.mu1 = mu.eigenvalues()[0];
  q.eta = eta_from(q.kappa, q.lambda1, q.lambda2, q.lambdan, sigma);
  const double psi2 = (q.lambda2 - q.lambda1) / (q.lambda2 - sigma);
  const double psin = (q.lambdan - q.lambda1) / (q.lambdan - sigma);
  q.beta_min = q.alpha1 * psi2;
  q.beta_max = q.alphan * psin;
  return q;
}

template class Preconditioner<double>;
template class Preconditioner<Complex>;
template PrecondQuality quality_metrics<double>(const HermitianPencil<double>&,
                                                const Preconditioner<double>&, double, Eigen::Index);
template PrecondQuality quality_metrics<Complex>(const HermitianPencil<Complex>&,
                                                 const Preconditioner<Complex>&, double,
                                                 Eigen::Index);

}  // namespace cgeig

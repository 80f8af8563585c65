#include "cgeig/linops.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace cgeig {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid input";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kNumericalBreakdown: return "numerical breakdown";
    case ErrorCode::kDegenerateSubspace: return "degenerate subspace";
    case ErrorCode::kConditioning: return "conditioning error";
    case ErrorCode::kInvalidShift: return "invalid shift";
    case ErrorCode::kClusterDegenerate: return "cluster degenerate";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kConfig: return "config error";
  }
  return "unknown error";
}

namespace {

template <Scalar S>
void check_finite_values(const S* values, Eigen::Index count) {
  for (Eigen::Index k = 0; k < count; ++k) {
    if (!std::isfinite(std::abs(values[k]))) {
      throw Error(ErrorCode::kInvalidInput, "operator contains non-finite entries");
    }
  }
}

template <class Mat>
void check_hermitian(const Mat& mat, double tol) {
  const double scale = mat.norm();
  const double defect = (mat - Mat(mat.adjoint())).norm();
  if (defect > tol * std::max(scale, 1e-300)) {
    std::ostringstream msg;
    msg << "operator is not Hermitian (relative defect " << defect / scale << ")";
    throw Error(ErrorCode::kInvalidInput, msg.str());
  }
}

template <Scalar S>
Vec<S> random_probe(Eigen::Index n, std::mt19937_64& gen) {
  std::normal_distribution<double> dist;
  Vec<S> v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if constexpr (std::same_as<S, double>) {
      v[i] = dist(gen);
    } else {
      v[i] = S(dist(gen), dist(gen));
    }
  }
  return v;
}

}  // namespace

template <Scalar S>
HermitianOperator<S> HermitianOperator<S>::from_sparse(SparseMat<S> mat, double tol) {
  if (mat.rows() != mat.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "operator must be square");
  }
  mat.makeCompressed();
  check_finite_values<S>(mat.valuePtr(), mat.nonZeros());
  check_hermitian(mat, tol);
  const Eigen::Index n = mat.rows();
  return HermitianOperator(std::make_shared<const Storage>(std::move(mat)), n);
}

template <Scalar S>
HermitianOperator<S> HermitianOperator<S>::from_dense(DenseMat<S> mat, double tol) {
  if (mat.rows() != mat.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "operator must be square");
  }
  check_finite_values<S>(mat.data(), mat.size());
  check_hermitian(mat, tol);
  const Eigen::Index n = mat.rows();
  return HermitianOperator(std::make_shared<const Storage>(std::move(mat)), n);
}

template <Scalar S>
HermitianOperator<S> HermitianOperator<S>::identity(Eigen::Index n) {
  SparseMat<S> mat(n, n);
  mat.setIdentity();
  return from_sparse(std::move(mat));
}

template <Scalar S>
HermitianOperator<S> HermitianOperator<S>::diagonal(const Eigen::VectorXd& diag) {
  const Eigen::Index n = diag.size();
  SparseMat<S> mat(n, n);
  mat.reserve(Eigen::VectorXi::Ones(n));
  for (Eigen::Index i = 0; i < n; ++i) mat.insert(i, i) = S(diag[i]);
  return from_sparse(std::move(mat));
}

template <Scalar S>
Vec<S> HermitianOperator<S>::apply(const Vec<S>& v) const {
  Vec<S> out;
  apply(v, out);
  return out;
}

template <Scalar S>
void HermitianOperator<S>::apply(const Vec<S>& v, Vec<S>& out) const {
  if (v.size() != n_) {
    throw Error(ErrorCode::kDimensionMismatch, "operator/vector size mismatch");
  }
  if (const auto* sp = sparse()) {
    out.noalias() = (*sp) * v;
  } else {
    out.noalias() = (*dense()) * v;
  }
}

template <Scalar S>
DenseMat<S> HermitianOperator<S>::to_dense() const {
  if (const auto* sp = sparse()) return DenseMat<S>(*sp);
  return *dense();
}

template <Scalar S>
SparseMat<S> HermitianOperator<S>::to_sparse() const {
  if (const auto* sp = sparse()) return *sp;
  return dense()->sparseView();
}

template <Scalar S>
Eigen::VectorXd HermitianOperator<S>::diagonal_entries() const {
  Eigen::VectorXd d(n_);
  if (const auto* sp = sparse()) {
    for (Eigen::Index i = 0; i < n_; ++i) d[i] = real_part(sp->coeff(i, i));
  } else {
    for (Eigen::Index i = 0; i < n_; ++i) d[i] = real_part((*dense())(i, i));
  }
  return d;
}

template <Scalar S>
HermitianPencil<S>::HermitianPencil(HermitianOperator<S> a, HermitianOperator<S> m, int probes)
    : a_(std::move(a)), m_(std::move(m)) {
  if (a_.empty() || m_.empty()) {
    throw Error(ErrorCode::kInvalidInput, "pencil operators must be initialized");
  }
  if (a_.n() != m_.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "A and M dimensions differ");
  }
  std::mt19937_64 gen(0x5eed);
  for (int k = 0; k < probes; ++k) {
    const Vec<S> v = random_probe<S>(m_.n(), gen);
    const double vmv = real_part(v.dot(m_.apply(v)));
    if (!(vmv > 0.0)) {
      throw Error(ErrorCode::kInvalidInput, "M is not positive definite (probe " +
                                                std::to_string(k) + ")");
    }
  }
}

template <Scalar S>
double rayleigh_quotient(const HermitianPencil<S>& pencil, const Vec<S>& x) {
  const double xmx = real_part(x.dot(pencil.m().apply(x)));
  if (x.size() != pencil.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "vector size does not match pencil");
  }
  if (!(xmx > 0.0)) throw Error(ErrorCode::kInvalidInput, "Rayleigh quotient of a zero vector");
  return real_part(x.dot(pencil.a().apply(x))) / xmx;
}

template <Scalar S>
Vec<S> residual(const HermitianPencil<S>& pencil, const Vec<S>& x, double theta) {
  if (x.size() == 0 || x.isZero(0.0)) {
    throw Error(ErrorCode::kInvalidInput, "residual of a zero vector");
  }
  return pencil.a().apply(x) - S(theta) * pencil.m().apply(x);
}

template <Scalar S>
S m_inner(const HermitianOperator<S>& m, const Vec<S>& v, const Vec<S>& w) {
  if (v.size() != m.n() || w.size() != m.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "m_inner operands do not match M");
  }
  return v.dot(m.apply(w));
}

template <Scalar S>
double m_norm(const HermitianOperator<S>& m, const Vec<S>& v) {
  return std::sqrt(std::max(0.0, real_part(m_inner(m, v, v))));
}

template <Scalar S>
double m_cosine(const HermitianOperator<S>& m, const Vec<S>& v, const Vec<S>& w) {
  const double denom = m_norm(m, v) * m_norm(m, w);
  if (!(denom > 0.0)) throw Error(ErrorCode::kInvalidInput, "angle with a zero vector");
  return std::min(1.0, std::abs(m_inner(m, v, w)) / denom);
}

#define CGEIG_INSTANTIATE(S)                                                         \
  template class HermitianOperator<S>;                                               \
  template class HermitianPencil<S>;                                                 \
  template double rayleigh_quotient<S>(const HermitianPencil<S>&, const Vec<S>&);    \
  template Vec<S> residual<S>(const HermitianPencil<S>&, const Vec<S>&, double);     \
  template S m_inner<S>(const HermitianOperator<S>&, const Vec<S>&, const Vec<S>&);  \
  template double m_norm<S>(const HermitianOperator<S>&, const Vec<S>&);             \
  template double m_cosine<S>(const HermitianOperator<S>&, const Vec<S>&, const Vec<S>&);

CGEIG_INSTANTIATE(double)
CGEIG_INSTANTIATE(Complex)
#undef CGEIG_INSTANTIATE

}  // namespace cgeig

#include "cgeig/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SparseCholesky>

namespace cgeig {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseMat<double> from_triplets(Eigen::Index n, const Triplets& t) {
  SparseMat<double> mat(n, n);
  mat.setFromTriplets(t.begin(), t.end());
  mat.makeCompressed();
  return mat;
}

double laplace_eig(Eigen::Index k, Eigen::Index n) {
  return 2.0 - 2.0 * std::cos(static_cast<double>(k) * std::numbers::pi / static_cast<double>(n + 1));
}

struct Inertia {
  Eigen::Index positive = 0;
  Eigen::Index negative = 0;
  Eigen::Index zero = 0;
  bool failed = false;
};

// Inertia by Sylvester's law from a sparse LDL^T.
Inertia inertia(const HermitianOperator<double>& mat) {
  Eigen::SparseMatrix<double> col = mat.to_sparse();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(col);
  Inertia out;
  if (ldlt.info() != Eigen::Success) {
    out.failed = true;
    return out;
  }
  const Eigen::VectorXd d = ldlt.vectorD();
  const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (std::abs(d[i]) <= 1e-14 * scale) ++out.zero;
    else if (d[i] > 0.0) ++out.positive;
    else ++out.negative;
  }
  return out;
}

HermitianOperator<double> shifted(const HermitianOperator<double>& l,
                                  const HermitianOperator<double>& s, double sigma) {
  if (l.n() != s.n()) throw Error(ErrorCode::kDimensionMismatch, "L and S differ in size");
  if (!std::isfinite(sigma)) throw Error(ErrorCode::kInvalidInput, "shift must be finite");
  if (l.is_sparse() && s.is_sparse()) {
    SparseMat<double> out = *l.sparse() - sigma * *s.sparse();
    out.prune(0.0);
    return HermitianOperator<double>::from_sparse(std::move(out));
  }
  return HermitianOperator<double>::from_dense(l.to_dense() - sigma * s.to_dense());
}

DenseMat<double> symmetrized(const DenseMat<double>& m) { return 0.5 * (m + m.transpose()); }

DenseMat<double> spd_inverse(const DenseMat<double>& m, const char* what) {
  Eigen::LLT<DenseMat<double>> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kInvalidInput, std::string(what) + " is not positive definite");
  }
  return symmetrized(llt.solve(DenseMat<double>::Identity(m.rows(), m.cols())));
}

}  // namespace

Problem gen_diag(std::vector<double> spectrum) {
  if (spectrum.empty()) throw Error(ErrorCode::kInvalidInput, "empty spectrum");
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    if (!std::isfinite(spectrum[i])) throw Error(ErrorCode::kInvalidInput, "non-finite spectrum entry");
    if (i > 0 && spectrum[i] < spectrum[i - 1]) {
      throw Error(ErrorCode::kInvalidInput, "spectrum must be ascending (entry " + std::to_string(i) + ")");
    }
  }
  const auto n = static_cast<Eigen::Index>(spectrum.size());
  const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(spectrum.data(), n);
  Problem p;
  p.name = "diag(n=" + std::to_string(n) + ")";
  p.pencil = HermitianPencil<double>(HermitianOperator<double>::diagonal(d),
                                     HermitianOperator<double>::identity(n));
  p.exact_eigenvalues = std::move(spectrum);
  return p;
}

std::vector<double> cluster_spectrum(double gap, int top) {
  if (!(gap > 0.0) || gap >= 1.0 || top < 2) {
    throw Error(ErrorCode::kInvalidInput, "cluster spectrum needs 0 < gap < 1 and top >= 2");
  }
  std::vector<double> out{1.0, 1.0 + gap};
  for (int k = 2; k <= top; ++k) out.push_back(static_cast<double>(k));
  return out;
}

Problem gen_laplace1d(Eigen::Index n) {
  if (n < 2) throw Error(ErrorCode::kInvalidInput, "laplace1d needs n >= 2");
  Triplets t;
  for (Eigen::Index i = 0; i < n; ++i) {
    t.emplace_back(i, i, 2.0);
    if (i + 1 < n) {
      t.emplace_back(i, i + 1, -1.0);
      t.emplace_back(i + 1, i, -1.0);
    }
  }
  Problem p;
  p.name = "laplace1d(n=" + std::to_string(n) + ")";
  p.pencil = HermitianPencil<double>(HermitianOperator<double>::from_sparse(from_triplets(n, t)),
                                     HermitianOperator<double>::identity(n));
  for (Eigen::Index k = 1; k <= n; ++k) p.exact_eigenvalues.push_back(laplace_eig(k, n));
  return p;
}

Problem gen_laplace2d(Eigen::Index nx, Eigen::Index ny) {
  if (nx < 1 || ny < 1 || nx * ny < 2) throw Error(ErrorCode::kInvalidInput, "degenerate grid");
  const Eigen::Index n = nx * ny;
  Triplets t;
  for (Eigen::Index j = 0; j < ny; ++j) {
    for (Eigen::Index i = 0; i < nx; ++i) {
      const Eigen::Index k = grid_index(i, j, nx);
      t.emplace_back(k, k, 4.0);
      if (i + 1 < nx) {
        t.emplace_back(k, k + 1, -1.0);
        t.emplace_back(k + 1, k, -1.0);
      }
      if (j + 1 < ny) {
        t.emplace_back(k, k + nx, -1.0);
        t.emplace_back(k + nx, k, -1.0);
      }
    }
  }
  Problem p;
  p.name = "laplace2d(" + std::to_string(nx) + "x" + std::to_string(ny) + ")";
  p.pencil = HermitianPencil<double>(HermitianOperator<double>::from_sparse(from_triplets(n, t)),
                                     HermitianOperator<double>::identity(n));
  for (Eigen::Index a = 1; a <= nx; ++a)
    for (Eigen::Index b = 1; b <= ny; ++b) p.exact_eigenvalues.push_back(laplace_eig(a, nx) + laplace_eig(b, ny));
  std::sort(p.exact_eigenvalues.begin(), p.exact_eigenvalues.end());
  return p;
}

Problem gen_slit2d(Eigen::Index nx, Eigen::Index ny, SlitSpec slit) {
  if (nx < 2 || ny < 1 || nx % 2 != 0) {
    throw Error(ErrorCode::kInvalidInput, "slit2d needs an even nx >= 2 and ny >= 1");
  }
  const Eigen::Index n = nx * ny;
  const double hx = 2.0 / static_cast<double>(nx + 1);
  const double hy = 1.0 / static_cast<double>(ny + 1);
  const double cx = hy / hx, cy = hx / hy;  // hx*hy/hx^2, hx*hy/hy^2
  const Eigen::Index left = nx / 2 - 1;       // last column with x < 1
  // A bond is cut when its dual face {1} x [y - hy/2, y + hy/2] overlaps the slit.
  auto cut = [&](Eigen::Index j) {
    if (!(slit.y_hi > slit.y_lo)) return false;
    const double y = static_cast<double>(j + 1) * hy;
    return y + 0.5 * hy > slit.y_lo && y - 0.5 * hy < slit.y_hi;
  };
  Triplets t;
  for (Eigen::Index j = 0; j < ny; ++j) {
    for (Eigen::Index i = 0; i < nx; ++i) {
      const Eigen::Index k = grid_index(i, j, nx);
      t.emplace_back(k, k, 2.0 * cx + 2.0 * cy);
      if (i + 1 < nx && !(i == left && cut(j))) {
        t.emplace_back(k, k + 1, -cx);
        t.emplace_back(k + 1, k, -cx);
      }
      if (j + 1 < ny) {
        t.emplace_back(k, k + nx, -cy);
        t.emplace_back(k + nx, k, -cy);
      }
    }
  }
  Problem p;
  p.name = "slit2d(" + std::to_string(nx) + "x" + std::to_string(ny) + ")";
  const Eigen::VectorXd mdiag = Eigen::VectorXd::Constant(n, hx * hy);
  p.pencil = HermitianPencil<double>(HermitianOperator<double>::from_sparse(from_triplets(n, t)),
                                     HermitianOperator<double>::diagonal(mdiag));
  if (!(slit.y_hi > slit.y_lo)) {
    for (Eigen::Index a = 1; a <= nx; ++a)
      for (Eigen::Index b = 1; b <= ny; ++b)
        p.exact_eigenvalues.push_back(laplace_eig(a, nx) / (hx * hx) + laplace_eig(b, ny) / (hy * hy));
    std::sort(p.exact_eigenvalues.begin(), p.exact_eigenvalues.end());
  }
  return p;
}

template <Scalar S>
DenseSpectrum<S> dense_oracle(const HermitianPencil<S>& pencil, Eigen::Index max_n, bool want_vectors) {
  const Eigen::Index n = pencil.n();
  if (n > max_n) {
    throw Error(ErrorCode::kUnsupported,
                "dense oracle limited to n <= " + std::to_string(max_n) + " (got " + std::to_string(n) + ")");
  }
  const DenseMat<S> a = pencil.a().to_dense();
  const DenseMat<S> m = pencil.m().to_dense();
  Eigen::LLT<DenseMat<S>> llt(m);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::kInvalidInput, "M is not positive definite");
  // C = L^{-1} A L^{-*}
  DenseMat<S> c = llt.matrixL().solve(a);
  c = llt.matrixL().solve(c.adjoint().eval()).adjoint().eval();
  c = (c + c.adjoint()) * S(0.5);
  Eigen::SelfAdjointEigenSolver<DenseMat<S>> es(c, want_vectors ? Eigen::ComputeEigenvectors
                                                                 : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::kNumericalBreakdown, "dense eigensolve failed");
  DenseSpectrum<S> out;
  out.values = es.eigenvalues();
  if (want_vectors) out.vectors = llt.matrixU().solve(es.eigenvectors());
  return out;
}

template DenseSpectrum<double> dense_oracle<double>(const HermitianPencil<double>&, Eigen::Index, bool);
template DenseSpectrum<Complex> dense_oracle<Complex>(const HermitianPencil<Complex>&, Eigen::Index, bool);

double EigenvalueMap::to_canonical(double lambda) const {
  switch (kind) {
    case MapKind::kShift: return lambda - sigma;
    case MapKind::kFolded: return (lambda - sigma) * (lambda - sigma);
    case MapKind::kSignSplit: return sign * (lambda - sigma);
    case MapKind::kNegated: return -(lambda - sigma);
    case MapKind::kSquare: return lambda * lambda;
    case MapKind::kNegReciprocal: return -1.0 / lambda;
  }
  return lambda;
}

double EigenvalueMap::to_original(double mu, int branch) const {
  switch (kind) {
    case MapKind::kShift: return mu + sigma;
    case MapKind::kFolded: return sigma + (branch < 0 ? -1.0 : 1.0) * std::sqrt(std::max(0.0, mu));
    case MapKind::kSignSplit: return sigma + sign * mu;
    case MapKind::kNegated: return sigma - mu;
    case MapKind::kSquare: return std::sqrt(std::max(0.0, mu));
    case MapKind::kNegReciprocal: return -1.0 / mu;
  }
  return mu;
}

std::string EigenvalueMap::describe() const {
  char buf[96];
  switch (kind) {
    case MapKind::kShift: std::snprintf(buf, sizeof buf, "mu = lambda - %.17g", sigma); break;
    case MapKind::kFolded: std::snprintf(buf, sizeof buf, "mu = (lambda - %.17g)^2", sigma); break;
    case MapKind::kSignSplit:
      std::snprintf(buf, sizeof buf, "mu = %d * (lambda - %.17g)", sign, sigma);
      break;
    case MapKind::kNegated: std::snprintf(buf, sizeof buf, "mu = -(lambda - %.17g)", sigma); break;
    case MapKind::kSquare: std::snprintf(buf, sizeof buf, "mu = omega^2"); break;
    case MapKind::kNegReciprocal: std::snprintf(buf, sizeof buf, "mu = -1/omega"); break;
  }
  return buf;
}

int definiteness(const HermitianOperator<double>& mat) {
  const Inertia in = inertia(mat);
  if (in.failed || in.zero > 0) return 0;
  if (in.negative == 0) return 1;
  if (in.positive == 0) return -1;
  return 0;
}

Transformed transform_shift_definite(const HermitianOperator<double>& l,
                                     const HermitianOperator<double>& s, double sigma) {
  HermitianOperator<double> lt = shifted(l, s, sigma);
  const Inertia in = inertia(lt);
  if (in.failed || in.negative > 0 || in.zero > 0) {
    throw Error(ErrorCode::kInvalidShift,
                "L - sigma*S is not positive definite: LDL^T inertia (+" + std::to_string(in.positive) +
                    ", -" + std::to_string(in.negative) + ", 0:" + std::to_string(in.zero) + ")");
  }
  return {HermitianPencil<double>(std::move(lt), s), {MapKind::kShift, sigma, 1}};
}

Transformed transform_interior_folded(const HermitianOperator<double>& l,
                                      const HermitianOperator<double>& s, double sigma,
                                      int sign_split) {
  const HermitianOperator<double> lt = shifted(l, s, sigma);
  const DenseMat<double> ltd = lt.to_dense();
  Eigen::FullPivLU<DenseMat<double>> lu(ltd);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kInvalidShift, "L - sigma*S is singular: sigma hits an eigenvalue");
  }
  Eigen::LLT<DenseMat<double>> sf(s.to_dense());
  if (sf.info() != Eigen::Success) throw Error(ErrorCode::kInvalidInput, "S is not positive definite");
  const DenseMat<double> a = symmetrized(ltd * sf.solve(ltd));
  auto aop = HermitianOperator<double>::from_dense(a, 1e-10);
  if (sign_split == 0) {
    return {HermitianPencil<double>(std::move(aop), s), {MapKind::kFolded, sigma, 1}};
  }
  const int sign = sign_split > 0 ? 1 : -1;
  if (definiteness(lt) != sign) {
    throw Error(ErrorCode::kInvalidShift, "sign-split folding needs sign*(L - sigma*S) positive definite");
  }
  auto mop = HermitianOperator<double>::from_dense(sign * ltd);
  return {HermitianPencil<double>(std::move(aop), std::move(mop)), {MapKind::kSignSplit, sigma, sign}};
}

int folded_branch(const HermitianOperator<double>& l, const HermitianOperator<double>& s,
                  double sigma, const Vec<double>& u) {
  const double v = u.dot(l.apply(u)) - sigma * u.dot(s.apply(u));
  return v < 0.0 ? -1 : 1;
}

Transformed transform_definite_pencil(const HermitianOperator<double>& l,
                                      const HermitianOperator<double>& s, double sigma) {
  HermitianOperator<double> lt = shifted(l, s, sigma);
  const int sign = definiteness(lt);
  if (sign == 1) return {HermitianPencil<double>(std::move(lt), s), {MapKind::kShift, sigma, 1}};
  if (sign == -1) {
    HermitianOperator<double> neg = lt.is_sparse()
                                        ? HermitianOperator<double>::from_sparse(-*lt.sparse())
                                        : HermitianOperator<double>::from_dense(-*lt.dense());
    return {HermitianPencil<double>(std::move(neg), s), {MapKind::kNegated, sigma, -1}};
  }
  throw Error(ErrorCode::kInvalidShift, "L - sigma*S is indefinite");
}

Transformed transform_linear_response(const HermitianOperator<double>& lt,
                                      const HermitianOperator<double>& st,
                                      LinearResponseForm form) {
  if (lt.n() != st.n()) throw Error(ErrorCode::kDimensionMismatch, "blocks differ in size");
  const Eigen::Index n = lt.n();
  if (form == LinearResponseForm::kInversePair) {
    const HermitianOperator<double>* a = nullptr;
    const HermitianOperator<double>* inv = nullptr;
    if (definiteness(lt) == 1) {
      a = &st;
      inv = &lt;
    } else if (definiteness(st) == 1) {
      a = &lt;
      inv = &st;
    } else {
      throw Error(ErrorCode::kInvalidInput, "inverse-pair form needs one positive definite block");
    }
    auto m = HermitianOperator<double>::from_dense(spd_inverse(inv->to_dense(), "block"), 1e-10);
    return {HermitianPencil<double>(*a, std::move(m)), {MapKind::kSquare, 0.0, 1}};
  }
  if (definiteness(lt) != 1 || definiteness(st) != 1) {
    throw Error(ErrorCode::kInvalidInput, "block-pencil form needs both blocks positive definite");
  }
  Triplets t;
  for (Eigen::Index i = 0; i < n; ++i) {
    t.emplace_back(i, n + i, 1.0);
    t.emplace_back(n + i, i, 1.0);
  }
  SparseMat<double> swap = from_triplets(2 * n, t);
  HermitianOperator<double> m;
  if (lt.is_sparse() && st.is_sparse()) {
    Triplets mt;
    for (int b = 0; b < 2; ++b) {
      const SparseMat<double>& blk = b == 0 ? *lt.sparse() : *st.sparse();
      for (Eigen::Index r = 0; r < n; ++r)
        for (SparseMat<double>::InnerIterator it(blk, r); it; ++it) mt.emplace_back(b * n + r, b * n + it.col(), it.value());
    }
    m = HermitianOperator<double>::from_sparse(from_triplets(2 * n, mt));
  } else {
    DenseMat<double> md = DenseMat<double>::Zero(2 * n, 2 * n);
    md.topLeftCorner(n, n) = lt.to_dense();
    md.bottomRightCorner(n, n) = st.to_dense();
    m = HermitianOperator<double>::from_dense(std::move(md));
  }
  return {HermitianPencil<double>(HermitianOperator<double>::from_sparse(std::move(swap)), std::move(m)),
          {MapKind::kNegReciprocal, 0.0, 1}};
}

}  // namespace cgeig

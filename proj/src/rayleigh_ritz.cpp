#include "cgeig/rayleigh_ritz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cgeig {

std::string_view to_string(BasisRole role) {
  switch (role) {
    case BasisRole::kCurrentIterate: return "current-iterate";
    case BasisRole::kPrecondResidual: return "precond-residual";
    case BasisRole::kDirection: return "direction";
    case BasisRole::kAuxiliary: return "auxiliary";
    case BasisRole::kStoredMinResidual: return "stored-min-residual";
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

// Unit-modulus phase of b (sign for real scalars).
template <Scalar S>
S phase_of(const S& b) {
  const double mag = std::abs(b);
  return mag > 0.0 ? b / mag : S(1.0);
}

template <Scalar S>
DenseMat<S> hermitian_part(const DenseMat<S>& mat) {
  return (mat + mat.adjoint()) * S(0.5);
}

// Lower Cholesky factor; false when a pivot is not safely positive.
template <Scalar S>
bool cholesky(const DenseMat<S>& g, DenseMat<S>& l) {
  const Eigen::Index k = g.rows();
  l = DenseMat<S>::Zero(k, k);
  double max_diag = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) max_diag = std::max(max_diag, real_part(g(i, i)));
  const double floor = static_cast<double>(k) * std::numeric_limits<double>::epsilon() * max_diag;
  for (Eigen::Index j = 0; j < k; ++j) {
    double pivot = real_part(g(j, j));
    for (Eigen::Index p = 0; p < j; ++p) pivot -= std::norm(l(j, p));
    if (!std::isfinite(pivot) || pivot <= floor) return false;
    const double ljj = std::sqrt(pivot);
    l(j, j) = S(ljj);
    for (Eigen::Index i = j + 1; i < k; ++i) {
      S sum = g(i, j);
      for (Eigen::Index p = 0; p < j; ++p) sum -= l(i, p) * conj_of(l(j, p));
      l(i, j) = sum / ljj;
    }
  }
  return true;
}

template <Scalar S>
DenseEigen<S> generalized_eigensolve(const DenseMat<S>& gram_a, const DenseMat<S>& gram_m) {
  DenseMat<S> l;
  if (!cholesky<S>(hermitian_part<S>(gram_m), l)) {
    throw Error(ErrorCode::kConditioning, "Gram matrix of the trial basis is not positive definite");
  }
  const auto tri = l.template triangularView<Eigen::Lower>();
  // H = L^{-1} A L^{-*}
  DenseMat<S> half = tri.solve(hermitian_part<S>(gram_a));
  DenseMat<S> h = tri.solve(DenseMat<S>(half.adjoint()));
  DenseEigen<S> eig = jacobi_eigensolve<S>(hermitian_part<S>(h));
  eig.vectors = l.adjoint().template triangularView<Eigen::Upper>().solve(eig.vectors);
  return eig;
}

template <Scalar S>
void check_basis(const TrialBasis<S>& basis, Eigen::Index n, std::size_t max_count) {
  const std::size_t k = basis.size();
  if (k < 2 || k > max_count) {
    throw Error(ErrorCode::kInvalidInput,
                "trial basis must hold 2.." + std::to_string(max_count) + " vectors, got " +
                    std::to_string(k));
  }
  if (basis.roles.size() != k || basis.a_images.size() != k || basis.m_images.size() != k) {
    throw Error(ErrorCode::kInvalidInput, "trial basis fields have inconsistent lengths");
  }
  for (std::size_t j = 0; j < k; ++j) {
    const auto& v = basis.vectors[j];
    if (v.size() != n) throw Error(ErrorCode::kDimensionMismatch, "basis vector size mismatch");
    if (!v.allFinite()) throw Error(ErrorCode::kInvalidInput, "basis vector is not finite");
    if (j == 0 && v.isZero(0.0)) throw Error(ErrorCode::kInvalidInput, "anchor vector is zero");
    for (const auto* img : {&basis.a_images[j], &basis.m_images[j]}) {
      if (img->size() != 0 && img->size() != n) {
        throw Error(ErrorCode::kDimensionMismatch, "basis image size mismatch");
      }
    }
  }
}

// Working state of the unnormalized M-MGS: W = V * coef, with images.
template <Scalar S>
struct MgsState {
  std::vector<Vec<S>> w, aw, mw;
  std::vector<double> delta;
  std::vector<double> own_norm2;  // |v_j|_M^2 before orthogonalization
  std::vector<bool> dropped;
  DenseMat<S> coef;
  bool have_a = true;
};

template <Scalar S>
MgsState<S> run_mgs(const TrialBasis<S>& basis, const HermitianOperator<S>* a,
                    const HermitianOperator<S>& m, const RrwOptions* drop_rule,
                    MatvecCounts& counts) {
  const std::size_t k = basis.size();
  MgsState<S> st;
  st.w.resize(k);
  st.aw.resize(k);
  st.mw.resize(k);
  st.delta.assign(k, 0.0);
  st.own_norm2.assign(k, 0.0);
  st.dropped.assign(k, false);
  st.coef = DenseMat<S>::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j) {
    st.w[j] = basis.vectors[j];
    if (basis.m_images[j].size() != 0) {
      st.mw[j] = basis.m_images[j];
    } else {
      st.mw[j] = m.apply(st.w[j]);
      ++counts.m;
    }
    if (basis.a_images[j].size() != 0) {
      st.aw[j] = basis.a_images[j];
    } else if (a != nullptr) {
      st.aw[j] = a->apply(st.w[j]);
      ++counts.a;
    } else {
      st.have_a = false;
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    st.own_norm2[j] = real_part(st.w[j].dot(st.mw[j]));
    // Two passes of classical-order MGS keep the Gram diagonal to working accuracy.
    for (int pass = 0; pass < (j == 0 ? 0 : 2); ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        if (st.dropped[i] || !(st.delta[i] > 0.0)) continue;
        const S c = st.mw[i].dot(st.w[j]) / st.delta[i];
        st.w[j] -= c * st.w[i];
        st.mw[j] -= c * st.mw[i];
        if (st.have_a) st.aw[j] -= c * st.aw[i];
        st.coef.col(static_cast<Eigen::Index>(j)) -= c * st.coef.col(static_cast<Eigen::Index>(i));
      }
    }
    st.delta[j] = real_part(st.w[j].dot(st.mw[j]));
    if (!std::isfinite(st.delta[j])) {
      throw Error(ErrorCode::kNumericalBreakdown, "non-finite M-Gram entry");
    }
    if (j == 0) {
      if (!(st.delta[0] > 0.0)) {
        throw Error(ErrorCode::kNumericalBreakdown, "iterate is numerically zero in the M-norm");
      }
      continue;
    }
    if (!(st.delta[j] > 0.0)) st.delta[j] = 0.0;
    if (drop_rule != nullptr) {
      // Dropped vectors must not pollute later projections.
      const double floor2 = drop_rule->min_independence * drop_rule->min_independence;
      st.dropped[j] = st.delta[j] == 0.0 || st.delta[0] > drop_rule->gamma * st.delta[j] ||
                      st.delta[j] < floor2 * st.own_norm2[j];
    }
  }
  return st;
}

template <Scalar S>
RitzOutput<S> solve_on(const MgsState<S>& st, const std::vector<std::size_t>& kept,
                       std::size_t k) {
  const auto q = static_cast<Eigen::Index>(kept.size());
  DenseMat<S> ga(q, q), gm(q, q);
  Eigen::VectorXd scale(q);
  for (Eigen::Index i = 0; i < q; ++i) scale[i] = 1.0 / std::sqrt(st.delta[kept[i]]);
  for (Eigen::Index i = 0; i < q; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) {
      ga(i, j) = st.w[kept[i]].dot(st.aw[kept[j]]) * (scale[i] * scale[j]);
      gm(i, j) = st.w[kept[i]].dot(st.mw[kept[j]]) * (scale[i] * scale[j]);
    }
  }
  if (!ga.allFinite() || !gm.allFinite()) {
    throw Error(ErrorCode::kNumericalBreakdown, "non-finite projected Gram matrix");
  }
  const DenseEigen<S> eig = generalized_eigensolve<S>(ga, gm);

  // Coefficient on x of y = sum_l z_l * scale_l * W_l, as a linear functional of z.
  Vec<S> anchor_row(q);
  for (Eigen::Index l = 0; l < q; ++l) {
    anchor_row[l] = st.coef(0, static_cast<Eigen::Index>(kept[l])) * scale[l];
  }

  const double span = std::max({std::abs(eig.values[0]), std::abs(eig.values[q - 1]), 1e-300});
  const double tie_tol = 64.0 * std::numeric_limits<double>::epsilon() * span;
  Vec<S> z = eig.vectors.col(0);
  Eigen::Index cluster = 1;
  while (cluster < q && eig.values[cluster] - eig.values[0] <= tie_tol) ++cluster;
  if (cluster > 1) {
    // Degenerate minimum: pick the member of the eigenspace with the largest x-coefficient.
    Vec<S> combo = Vec<S>::Zero(q);
    for (Eigen::Index j = 0; j < cluster; ++j) {
      const S g = (anchor_row.transpose() * eig.vectors.col(j))(0);
      combo += conj_of(g) * eig.vectors.col(j);
    }
    const double norm_m = std::sqrt(std::max(0.0, real_part(combo.dot(gm * combo))));
    if (norm_m > 0.0) z = combo / norm_m;
  }

  const Eigen::Index n = st.w[0].size();
  Vec<S> y = Vec<S>::Zero(n), ay = Vec<S>::Zero(n), my = Vec<S>::Zero(n);
  Vec<S> coeff_v = Vec<S>::Zero(static_cast<Eigen::Index>(k));
  for (Eigen::Index l = 0; l < q; ++l) {
    const S f = z[l] * scale[l];
    y += f * st.w[kept[l]];
    ay += f * st.aw[kept[l]];
    my += f * st.mw[kept[l]];
    coeff_v += f * st.coef.col(static_cast<Eigen::Index>(kept[l]));
  }
  const S c0 = coeff_v[0];
  const double y_norm = std::sqrt(std::max(0.0, real_part(y.dot(my))));

  RitzOutput<S> out;
  out.theta_next = eig.values[0];
  out.ritz_values = eig.values;
  if (std::abs(c0) * std::sqrt(st.own_norm2[0]) < 1e-10 * y_norm) {
    out.anchor_fallback = true;
    const S s(1.0 / y_norm);
    out.x_next = y * s;
    out.ax_next = ay * s;
    out.mx_next = my * s;
    coeff_v *= s;
  } else {
    const S s = S(1.0) / c0;
    out.x_next = y * s;
    out.ax_next = ay * s;
    out.mx_next = my * s;
    coeff_v *= s;
    coeff_v[0] = S(1.0);
  }
  out.coefficients.assign(coeff_v.data(), coeff_v.data() + k);
  return out;
}

}  // namespace

template <Scalar S>
TrialBasis<S> TrialBasis<S>::without(const std::vector<bool>& drop) const {
  TrialBasis<S> out;
  for (std::size_t j = 0; j < size(); ++j) {
    if (j < drop.size() && drop[j]) continue;
    out.push(vectors[j], roles[j], a_images[j], m_images[j]);
  }
  return out;
}

template <Scalar S>
DenseEigen<S> jacobi_eigensolve(const DenseMat<S>& mat) {
  if (mat.rows() != mat.cols()) throw Error(ErrorCode::kDimensionMismatch, "matrix must be square");
  if (!mat.allFinite()) throw Error(ErrorCode::kNumericalBreakdown, "non-finite matrix");
  const Eigen::Index k = mat.rows();
  DenseMat<S> h = hermitian_part<S>(mat);
  DenseMat<S> v = DenseMat<S>::Identity(k, k);
  const double total = std::max(h.norm(), 1e-300);
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < k; ++p) {
      for (Eigen::Index q = p + 1; q < k; ++q) off += std::norm(h(p, q));
    }
    if (std::sqrt(off) <= 1e-16 * total) break;
    for (Eigen::Index p = 0; p < k; ++p) {
      for (Eigen::Index q = p + 1; q < k; ++q) {
        const S b = h(p, q);
        const double mag = std::abs(b);
        if (mag == 0.0) continue;
        const S e = phase_of(b);
        const S ec = conj_of(e);
        const double theta = (real_part(h(q, q)) - real_part(h(p, p))) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // Columns: J_p = c e_p - s conj(e) e_q, J_q = s e_p + c conj(e) e_q.
        for (Eigen::Index r = 0; r < k; ++r) {
          const S hp = h(r, p), hq = h(r, q);
          h(r, p) = c * hp - s * ec * hq;
          h(r, q) = s * hp + c * ec * hq;
          const S vp = v(r, p), vq = v(r, q);
          v(r, p) = c * vp - s * ec * vq;
          v(r, q) = s * vp + c * ec * vq;
        }
        for (Eigen::Index r = 0; r < k; ++r) {
          const S hp = h(p, r), hq = h(q, r);
          h(p, r) = c * hp - s * e * hq;
          h(q, r) = s * hp + c * e * hq;
        }
        h(p, q) = S(0.0);
        h(q, p) = S(0.0);
        h(p, p) = S(real_part(h(p, p)));
        h(q, q) = S(real_part(h(q, q)));
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return real_part(h(i, i)) < real_part(h(j, j));
  });
  DenseEigen<S> out;
  out.values.resize(k);
  out.vectors.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    out.values[i] = real_part(h(order[i], order[i]));
    out.vectors.col(i) = v.col(order[i]);
  }
  return out;
}

template <Scalar S>
DenseEigen<S> small_dense_eigensolve(const DenseMat<S>& gram_a, const DenseMat<S>& gram_m) {
  const Eigen::Index k = gram_a.rows();
  if (gram_a.cols() != k || gram_m.rows() != k || gram_m.cols() != k) {
    throw Error(ErrorCode::kDimensionMismatch, "Gram matrices must be square and equal-sized");
  }
  if (k < 1 || k > static_cast<Eigen::Index>(TrialBasis<S>::kMaxCount)) {
    throw Error(ErrorCode::kInvalidInput, "small_dense_eigensolve supports 1..5 rows");
  }
  if (!gram_a.allFinite() || !gram_m.allFinite()) {
    throw Error(ErrorCode::kNumericalBreakdown, "non-finite Gram entries");
  }
  return generalized_eigensolve<S>(gram_a, gram_m);
}

template <Scalar S>
RitzOutput<S> rrw(const HermitianPencil<S>& pencil, const TrialBasis<S>& basis,
                  const RrwOptions& options) {
  check_basis(basis, pencil.n(), options.max_basis);
  const std::size_t k = basis.size();
  MatvecCounts counts;
  const MgsState<S> st = run_mgs<S>(basis, &pencil.a(), pencil.m(), &options, counts);
  std::vector<bool> dropped = st.dropped;
  std::vector<std::size_t> kept{0};
  for (std::size_t j = 1; j < k; ++j) {
    if (!dropped[j]) kept.push_back(j);
  }
  if (kept.size() < 2) {
    throw Error(ErrorCode::kDegenerateSubspace,
                "every non-anchor basis vector is numerically dependent on the iterate");
  }

  RitzOutput<S> out;
  bool retried = false;
  try {
    out = solve_on<S>(st, kept, k);
  } catch (const Error& err) {
    if (err.code() != ErrorCode::kConditioning || kept.size() <= 2) throw;
    // Last resort: the two leading retained vectors.
    for (std::size_t idx = 2; idx < kept.size(); ++idx) dropped[kept[idx]] = true;
    kept.resize(2);
    out = solve_on<S>(st, kept, k);
    retried = true;
  }
  out.retried_reduced = retried;
  out.dropped = dropped;
  out.gram_diag.assign(k, 0.0);
  for (std::size_t j : kept) out.gram_diag[j] = st.delta[j];
  out.matvecs = counts;
  return out;
}

template <Scalar S>
OrthogonalizedBasis<S> m_orthogonalize_with_reduction(const HermitianOperator<S>& m,
                                                      const TrialBasis<S>& basis, double gamma) {
  if (!(gamma > 1.0)) throw Error(ErrorCode::kInvalidInput, "gamma must exceed 1");
  check_basis(basis, m.n(), TrialBasis<S>::kMaxCount);
  const std::size_t k = basis.size();
  MatvecCounts counts;
  const MgsState<S> st = run_mgs<S>(basis, nullptr, m, nullptr, counts);

  OrthogonalizedBasis<S> out;
  out.gram_diag = st.delta;
  out.dropped.assign(k, false);
  if (k >= 3 && st.delta[0] > gamma * st.delta[2]) {
    out.reduced_to_psd = true;
    for (std::size_t j = 2; j < k; ++j) out.dropped[j] = true;
  } else if (k == 4 && st.delta[0] > gamma * st.delta[3]) {
    out.dropped_auxiliary = true;
    out.dropped[3] = true;
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (out.dropped[j]) continue;
    out.basis.push(st.w[j], basis.roles[j], st.have_a ? st.aw[j] : Vec<S>(), st.mw[j]);
  }
  return out;
}

#define CGEIG_INSTANTIATE(S)                                                                   \
  template struct TrialBasis<S>;                                                               \
  template DenseEigen<S> jacobi_eigensolve<S>(const DenseMat<S>&);                             \
  template DenseEigen<S> small_dense_eigensolve<S>(const DenseMat<S>&, const DenseMat<S>&);    \
  template RitzOutput<S> rrw<S>(const HermitianPencil<S>&, const TrialBasis<S>&,               \
                                const RrwOptions&);                                            \
  template OrthogonalizedBasis<S> m_orthogonalize_with_reduction<S>(                           \
      const HermitianOperator<S>&, const TrialBasis<S>&, double);

CGEIG_INSTANTIATE(double)
CGEIG_INSTANTIATE(Complex)
#undef CGEIG_INSTANTIATE

}  // namespace cgeig

// Test-side reference computations, kept independent of the library kernels.
#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Complex = std::complex<double>;

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Col = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <class S>
S draw(std::mt19937_64& gen) {
  std::normal_distribution<double> d;
  if constexpr (std::is_same_v<S, double>) {
    return d(gen);
  } else {
    const double re = d(gen);
    return S(re, d(gen));
  }
}

template <class S>
Col<S> random_vec(Eigen::Index n, std::mt19937_64& gen) {
  Col<S> v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = draw<S>(gen);
  return v;
}

template <class S>
Mat<S> random_hermitian(Eigen::Index n, std::mt19937_64& gen) {
  Mat<S> g(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = draw<S>(gen);
  return (g + g.adjoint()) * S(0.5);
}

// Hermitian positive definite with eigenvalues in [1, 1 + spread].
template <class S>
Mat<S> random_hpd(Eigen::Index n, std::mt19937_64& gen, double spread = 2.0) {
  Mat<S> g(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = draw<S>(gen);
  Eigen::HouseholderQR<Mat<S>> qr(g);
  Mat<S> q = qr.householderQ();
  std::uniform_real_distribution<double> u(1.0, 1.0 + spread);
  Col<S> d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = S(u(gen));
  Mat<S> out = q * d.asDiagonal() * q.adjoint();
  return (out + out.adjoint()) * S(0.5);
}

// Ascending eigenvalues of A v = lambda M v via LAPACK-style library solver.
template <class S>
Eigen::VectorXd pencil_eigenvalues(const Mat<S>& a, const Mat<S>& m) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat<S>> es(a, m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

template <class S>
double min_eig_projected(const Mat<S>& a, const Mat<S>& m, const Mat<S>& v) {
  // Orthonormalize V first so the projected M-Gram is well conditioned.
  Eigen::HouseholderQR<Mat<S>> qr(v);
  Mat<S> q = qr.householderQ() * Mat<S>::Identity(v.rows(), v.cols());
  Mat<S> pa = q.adjoint() * a * q;
  Mat<S> pm = q.adjoint() * m * q;
  pa = (pa + pa.adjoint()) * S(0.5);
  pm = (pm + pm.adjoint()) * S(0.5);
  return pencil_eigenvalues<S>(pa, pm)[0];
}

// Brute-force minimum of the Rayleigh quotient on span{x, u} (real): scans the
// angle on the unit circle of the M-orthonormalized pair, then refines.
inline double grid_min_rq_2d(const Mat<double>& a, const Mat<double>& m, const Col<double>& x,
                             const Col<double>& u, int points = 20000) {
  auto rq = [&](double t) {
    Col<double> y = std::cos(t) * x + std::sin(t) * u;
    return y.dot(a * y) / y.dot(m * y);
  };
  const double pi = std::acos(-1.0);
  double best_t = 0.0, best = rq(0.0);
  for (int k = 1; k < points; ++k) {
    const double t = pi * k / points;
    const double v = rq(t);
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  // Golden-section refinement on the bracketing cell.
  double lo = best_t - pi / points, hi = best_t + pi / points;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 100; ++it) {
    const double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    if (rq(c) < rq(d)) hi = d; else lo = c;
  }
  return std::min(best, rq(0.5 * (lo + hi)));
}

// Chebyshev polynomial of the first kind for |t| >= 1 in closed form.
inline double chebyshev_cosh(int m, double t) {
  if (std::abs(t) <= 1.0) return std::cos(m * std::acos(t));
  const double s = (t > 0 || m % 2 == 0) ? 1.0 : -1.0;
  return s * std::cosh(m * std::acosh(std::abs(t)));
}

// Plain Lanczos with full reorthogonalization on M^{-1}A in the M-inner product;
// returns the smallest Ritz value after `steps` steps.
inline double lanczos_min(const Mat<double>& a, const Mat<double>& m, const Col<double>& start,
                          int steps) {
  const Eigen::Index n = a.rows();
  Eigen::LLT<Mat<double>> mf(m);
  std::vector<Col<double>> q;
  Col<double> v = start / std::sqrt(start.dot(m * start));
  Eigen::VectorXd alpha(steps), beta(steps);
  int k = 0;
  for (; k < steps && k < n; ++k) {
    q.push_back(v);
    Col<double> w = mf.solve(a * v);
    alpha[k] = v.dot(a * v);
    for (const auto& qi : q) w -= qi.dot(m * w) * qi;
    for (const auto& qi : q) w -= qi.dot(m * w) * qi;
    const double b = std::sqrt(std::max(0.0, w.dot(m * w)));
    beta[k] = b;
    if (b < 1e-14) { ++k; break; }
    v = w / b;
  }
  Mat<double> t = Mat<double>::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    t(i, i) = alpha[i];
    if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Mat<double>> es(t);
  return es.eigenvalues()[0];
}

}  // namespace oracle

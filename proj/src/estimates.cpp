#include "cgeig/estimates.hpp"

#include <cmath>
#include <string>

#include "cgeig/error.hpp"

namespace cgeig {

namespace {

void check(const BoundInputs& in) {
  if (!(in.lambda1 <= in.lambda2) || !(in.lambda2 <= in.lambdan)) {
    throw Error(ErrorCode::kInvalidInput, "bound inputs need lambda1 <= lambda2 <= lambdan");
  }
  if (!(in.sigma < in.lambda1)) throw Error(ErrorCode::kInvalidShift, "sigma must be below lambda1");
  if (!(in.kappa >= 1.0)) throw Error(ErrorCode::kInvalidInput, "kappa must be at least 1");
}

double factor_from_eta(double e) {
  const double ratio = (e - 1.0) / (e + 1.0);
  return ratio * ratio;
}

}  // namespace

double chebyshev(int i, double phi) {
  if (i < 0) throw Error(ErrorCode::kInvalidInput, "Chebyshev degree must be non-negative");
  if (i == 0) return 1.0;
  double prev = 1.0, cur = phi;
  for (int k = 1; k < i; ++k) {
    const double next = 2.0 * phi * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double eta(const BoundInputs& in) {
  check(in);
  if (in.lambda2 == in.lambda1) {
    throw Error(ErrorCode::kClusterDegenerate, "lambda2 == lambda1 makes eta unbounded");
  }
  return in.kappa * (in.lambdan - in.lambda1) * (in.lambda2 - in.sigma) /
         ((in.lambda2 - in.lambda1) * (in.lambdan - in.sigma));
}

double eta(const InteriorBoundInputs& in) {
  if (!(in.lambda_j <= in.lambda_j1) || !(in.lambda_j1 <= in.lambdan)) {
    throw Error(ErrorCode::kInvalidInput, "interior inputs need lambda_j <= lambda_j+1 <= lambdan");
  }
  if (!(in.sigma < in.lambda_j)) throw Error(ErrorCode::kInvalidShift, "sigma must be below lambda_j");
  if (!(in.kappa >= 1.0)) throw Error(ErrorCode::kInvalidInput, "kappa must be at least 1");
  if (in.lambda_j1 == in.lambda_j) {
    throw Error(ErrorCode::kClusterDegenerate, "lambda_j+1 == lambda_j makes eta_j unbounded");
  }
  return in.kappa * (in.lambdan - in.lambda_j) * (in.lambda_j1 - in.sigma) /
         ((in.lambda_j1 - in.lambda_j) * (in.lambdan - in.sigma));
}

double pcg_bound(const BoundInputs& in, int i, double lam0_err, double norm_ratio) {
  if (i < 0) throw Error(ErrorCode::kInvalidInput, "step index must be non-negative");
  const double e = eta(in);
  if (e < 1.0) {
    throw Error(ErrorCode::kInvalidInput, "eta below 1 contradicts the bound derivation");
  }
  if (i == 0) return lam0_err * norm_ratio;
  if (e == 1.0) return 0.0;
  const double c = chebyshev(i, (e + 1.0) / (e - 1.0));
  return lam0_err * norm_ratio / (c * c);
}

double psd_factor(const InteriorBoundInputs& in) { return factor_from_eta(eta(in)); }

double psd_factor(const BoundInputs& in) { return factor_from_eta(eta(in)); }

namespace {
// (sqrt(eta) - 1)/(sqrt(eta) + 1) without the cancellation near eta = 1.
double psi_of(double e) {
  if (!(e >= 1.0)) throw Error(ErrorCode::kInvalidInput, "eta must be at least 1");
  const double s = std::sqrt(e) + 1.0;
  return (e - 1.0) / (s * s);
}
}  // namespace

double average_factor_psi2(double e) {
  const double psi = psi_of(e);
  return psi * psi;
}

double chebyshev_inverse_square_via_psi(double e, int m) {
  const double psi = psi_of(e);
  const double pm = std::pow(psi, m);
  const double v = 2.0 * pm / (1.0 + pm * pm);
  return v * v;
}

std::vector<AsymptoticTerms> asymptotic_terms(const std::vector<double>& theta,
                                              const std::vector<double>& theta_tilde,
                                              double lambda1) {
  std::vector<AsymptoticTerms> out;
  for (std::size_t i = 0; i + 2 < theta.size(); ++i) {
    const double t0 = theta[i], t1 = theta[i + 1], t2 = theta[i + 2];
    const double tt = i + 2 < theta_tilde.size() ? theta_tilde[i + 2] : std::nan("");
    AsymptoticTerms terms;
    terms.iter = static_cast<int>(i);
    const double d01 = t0 - t1, d12 = t1 - t2, d1t = t1 - tt;
    if (d01 != 0.0 && d12 != 0.0 && std::isfinite(tt) && d1t != 0.0) {
      const double lhs = 1.0 / d01 + 1.0 / d12;
      terms.delta1 = std::abs(lhs * d1t - 1.0);
      const double lhs2 = (t1 - lambda1) / d01 + (t2 - lambda1) / d12;
      terms.delta2 = std::abs(lhs2 - (tt - lambda1) / d1t);
    }
    const double e0 = t0 - lambda1, e2 = t2 - lambda1, et = tt - lambda1;
    if (e0 > 0.0 && e2 > 0.0 && et > 0.0 && std::isfinite(tt)) {
      const double inv = 1.0 / std::sqrt(e0) + 1.0 / std::sqrt(e2) - 2.0 / std::sqrt(et);
      if (inv != 0.0) terms.delta3 = std::abs(1.0 / inv);
    }
    if (terms.delta1 || terms.delta3) out.push_back(terms);
  }
  return out;
}

}  // namespace cgeig

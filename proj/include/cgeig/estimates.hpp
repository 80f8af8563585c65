#pragma once

#include <optional>
#include <vector>

namespace cgeig {

struct BoundInputs {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambdan = 0.0;
  double sigma = 0.0;
  double kappa = 1.0;
};

// Interior variant: lambda_j, lambda_{j+1} take the place of lambda1, lambda2.
struct InteriorBoundInputs {
  double lambda_j = 0.0;
  double lambda_j1 = 0.0;
  double lambdan = 0.0;
  double sigma = 0.0;
  double kappa = 1.0;
};

// C_i(phi) by the three-term recurrence.
double chebyshev(int i, double phi);

double eta(const BoundInputs& in);
double eta(const InteriorBoundInputs& in);

// (C_i(phi))^{-2} * norm_ratio * lam0_err with phi = (eta+1)/(eta-1).
// norm_ratio is |x0|_M^2 / |x_i|_M^2 (or a lower-bound surrogate).
double pcg_bound(const BoundInputs& in, int i, double lam0_err, double norm_ratio);

// Sharp single-step PSD factor ((eta_j - 1)/(eta_j + 1))^2.
double psd_factor(const InteriorBoundInputs& in);
double psd_factor(const BoundInputs& in);

// Average per-step factor psi^2 with psi = (sqrt(eta)-1)/(sqrt(eta)+1).
double average_factor_psi2(double eta);

// (2 psi^m / (1 + psi^{2m}))^2, the closed form of (C_m(phi))^{-2}.
double chebyshev_inverse_square_via_psi(double eta, int m);

struct AsymptoticTerms {
  int iter = 0;
  std::optional<double> delta1;
  std::optional<double> delta2;
  std::optional<double> delta3;
};

// Diagnostic terms along a trajectory.
//   theta[i]       Rayleigh quotients of the iterates
//   theta_tilde[i] Rayleigh quotient after one PSD step from iterate i-1
//                  (NaN when unavailable), used for delta3 at i+2
// Steps with vanishing denominators are skipped.
std::vector<AsymptoticTerms> asymptotic_terms(const std::vector<double>& theta,
                                              const std::vector<double>& theta_tilde,
                                              double lambda1);

}  // namespace cgeig

#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "cgeig/history.hpp"
#include "cgeig/linops.hpp"
#include "cgeig/precond.hpp"

namespace cgeig {

enum class Method { kPcgHeuristic, kPsd, kGd, kLopcg, kLopcgx, kLopcga, kTpcg, kTpcga };

// Coefficient families of the two-term recurrence.
//   kJacobiShift      conjugacy w.r.t. Q_alpha^*(A - beta*M)Q_alpha (alpha, beta rule configurable)
//   kPerdonGambolati  the same with alpha = 0, beta = sigma
enum class TpcgFamily { kBradburyFletcher, kPolakRibiere, kJacobiShift, kPerdonGambolati };
enum class TpcgVariant { kStandard, kLaggedProjector };
// beta = max{(sigma + theta)/2, 2 theta - theta_prev} | theta | sigma
enum class BetaRule { kShiftRule, kTheta, kSigma };

std::string_view to_string(Method m);
std::string_view to_string(TpcgFamily f);
std::string_view to_string(TpcgVariant v);
std::string_view to_string(BetaRule b);
Method parse_method(std::string_view name);
TpcgFamily parse_tpcg_family(std::string_view name);
TpcgVariant parse_tpcg_variant(std::string_view name);
BetaRule parse_beta_rule(std::string_view name);

// Event tokens written to IterationRecord::event.
namespace events {
inline constexpr std::string_view kAugment = "augment";
inline constexpr std::string_view kFlag1 = "flag1";
inline constexpr std::string_view kFlag2 = "flag2";
inline constexpr std::string_view kAUpdate = "a_update";
inline constexpr std::string_view kReduceA = "reduce_a";
inline constexpr std::string_view kReduceP = "reduce_p";
inline constexpr std::string_view kReduce = "reduce";
inline constexpr std::string_view kRestart = "restart";
inline constexpr std::string_view kPsdFallback = "psd_fallback";
inline constexpr std::string_view kAnchorFallback = "anchor_fallback";
inline constexpr std::string_view kLambdaUpdate = "lambda1_update";
}  // namespace events

struct SolverConfig {
  Method method = Method::kLopcg;
  TpcgFamily tpcg_family = TpcgFamily::kJacobiShift;
  TpcgVariant tpcg_variant = TpcgVariant::kLaggedProjector;
  double tpcg_alpha = 1.0;
  BetaRule beta_rule = BetaRule::kShiftRule;
  double tau_angle = 0.7;
  double gamma_gram = 1e26;
  double peak_factor = 1.5;
  int peak_decrease_window = 1;
  double peak_activation = 0.1;  // augmentation armed once nu < peak_activation * nu_0
  double tol_residual = 1e-10;
  int max_iters = 1000;
  std::optional<double> sigma_guess;
  int normalize_every = 10;  // 0 disables periodic rescaling
  std::optional<double> lambda1_input;  // pcg-heuristic only
  // pcg-heuristic: replace lambda1 once by the current theta when nu first
  // drops below lambda1_update_nu.
  bool lambda1_final_update = false;
  double lambda1_update_nu = 1e-6;
  int gd_max_dim = 64;
  std::uint64_t seed = 0;
  std::optional<double> lambda1_reference;  // fills IterationRecord::theta_err
  bool retain_iterates = false;
  bool debug_identities = false;  // TPCG: record the w*x = 0 and conjugacy residuals

  void validate() const;
};

template <Scalar S>
struct SolveResult {
  double theta_final = 0.0;
  Vec<S> x_final;  // unit M-norm
  int iterations = 0;
  bool converged = false;
  double nu_final = 0.0;
  ConvergenceHistory history;
  MatvecCounts matvecs;
  std::vector<Vec<S>> iterates;  // x^{(0)}, x^{(1)}, ... when retain_iterates is set
  // Debug-mode identity residuals per TPCG step (family c).
  std::vector<double> wx_residuals;
  std::vector<double> conjugacy_residuals;
};

// Residual-peak detector driving TPCGa's augmentation.
class PeakDetector {
 public:
  PeakDetector(double factor = 1.5, int window = 1, double activation = 0.1);

  // Feeds nu^{(i)}; returns the flag after the transition (2 means augment now,
  // after which the flag is reset to 0 internally).
  int update(double nu);

  int flag() const { return flag_; }
  bool armed() const { return armed_; }
  double nu_min() const { return nu_min_; }
  // True when the latest update set a new minimum.
  bool new_minimum() const { return new_min_; }

 private:
  double factor_;
  int window_;
  double activation_;
  double nu0_ = -1.0;
  double nu_min_ = 0.0;
  bool armed_ = false;
  bool new_min_ = false;
  int flag_ = 0;
  std::deque<double> recent_;
};

template <Scalar S>
SolveResult<S> solve_pcg_heuristic(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                                   double lambda1, const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config);
template <Scalar S>
SolveResult<S> solve_psd(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                         const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config);
template <Scalar S>
SolveResult<S> solve_gd(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                        const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config);
template <Scalar S>
SolveResult<S> solve_lopcg(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                           const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config);
template <Scalar S>
SolveResult<S> solve_lopcgx(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                            const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config);
template <Scalar S>
SolveResult<S> solve_lopcga(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                            const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config);
template <Scalar S>
SolveResult<S> solve_tpcg(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                          const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config);
template <Scalar S>
SolveResult<S> solve_tpcga(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                           const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config);

// Dispatch on config.method (pcg-heuristic needs config.lambda1_input).
template <Scalar S>
SolveResult<S> solve(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                     const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config);

// Rayleigh quotient after one PSD step from x.
template <Scalar S>
double psd_step_value(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                      const std::type_identity_t<Vec<S>>& x);

}  // namespace cgeig

#include "cgeig/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cgeig/rayleigh_ritz.hpp"

namespace cgeig {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kPcgHeuristic: return "pcg-heuristic";
    case Method::kPsd: return "psd";
    case Method::kGd: return "gd";
    case Method::kLopcg: return "lopcg";
    case Method::kLopcgx: return "lopcgx";
    case Method::kLopcga: return "lopcga";
    case Method::kTpcg: return "tpcg";
    case Method::kTpcga: return "tpcga";
  }
  return "unknown";
}

std::string_view to_string(TpcgFamily f) {
  switch (f) {
    case TpcgFamily::kBradburyFletcher: return "bradbury-fletcher";
    case TpcgFamily::kPolakRibiere: return "polak-ribiere";
    case TpcgFamily::kJacobiShift: return "jacobi-shift";
    case TpcgFamily::kPerdonGambolati: return "perdon-gambolati";
  }
  return "unknown";
}

std::string_view to_string(TpcgVariant v) {
  return v == TpcgVariant::kStandard ? "standard" : "lagged-projector";
}

std::string_view to_string(BetaRule b) {
  switch (b) {
    case BetaRule::kShiftRule: return "shift-rule";
    case BetaRule::kTheta: return "theta";
    case BetaRule::kSigma: return "sigma";
  }
  return "unknown";
}

namespace {

template <class E>
E parse_enum(std::string_view name, std::initializer_list<E> values, std::string_view what) {
  for (E v : values) {
    if (to_string(v) == name) return v;
  }
  throw Error(ErrorCode::kConfig, "unknown " + std::string(what) + " '" + std::string(name) + "'");
}

}  // namespace

Method parse_method(std::string_view name) {
  return parse_enum(name,
                    {Method::kPcgHeuristic, Method::kPsd, Method::kGd, Method::kLopcg,
                     Method::kLopcgx, Method::kLopcga, Method::kTpcg, Method::kTpcga},
                    "method");
}

TpcgFamily parse_tpcg_family(std::string_view name) {
  return parse_enum(name,
                    {TpcgFamily::kBradburyFletcher, TpcgFamily::kPolakRibiere,
                     TpcgFamily::kJacobiShift, TpcgFamily::kPerdonGambolati},
                    "TPCG family");
}

TpcgVariant parse_tpcg_variant(std::string_view name) {
  return parse_enum(name, {TpcgVariant::kStandard, TpcgVariant::kLaggedProjector}, "TPCG variant");
}

BetaRule parse_beta_rule(std::string_view name) {
  return parse_enum(name, {BetaRule::kShiftRule, BetaRule::kTheta, BetaRule::kSigma}, "beta rule");
}

void SolverConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kConfig, msg); };
  if (!(tol_residual > 0.0)) fail("tol_residual must be positive");
  if (max_iters < 0) fail("max_iters must be non-negative");
  if (!(tau_angle >= 0.0)) fail("tau_angle must be non-negative");
  if (!(gamma_gram > 1.0)) fail("gamma_gram must exceed 1");
  if (!(peak_factor > 0.0)) fail("peak_factor must be positive");
  if (peak_decrease_window < 1) fail("peak_decrease_window must be at least 1");
  if (!(peak_activation > 0.0)) fail("peak_activation must be positive");
  if (normalize_every < 0) fail("normalize_every must be non-negative");
  if (gd_max_dim < 3 || gd_max_dim > 64) fail("gd_max_dim must lie in [3, 64]");
  if (!std::isfinite(tpcg_alpha)) fail("tpcg_alpha must be finite");
  if (method == Method::kPcgHeuristic && !lambda1_input) {
    fail("pcg-heuristic needs lambda1_input");
  }
}

PeakDetector::PeakDetector(double factor, int window, double activation)
    : factor_(factor), window_(window), activation_(activation) {
  if (!(factor > 0.0) || window < 1 || !(activation > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "invalid peak detector parameters");
  }
}

int PeakDetector::update(double nu) {
  new_min_ = false;
  if (nu0_ < 0.0) {
    nu0_ = nu;
    nu_min_ = nu;
    new_min_ = true;
  } else if (nu < nu_min_) {
    nu_min_ = nu;
    new_min_ = true;
  }
  if (!armed_ && nu < activation_ * nu0_) armed_ = true;
  recent_.push_back(nu);
  while (static_cast<int>(recent_.size()) > window_ + 1) recent_.pop_front();

  if (flag_ == 2) flag_ = 0;
  if (!armed_) return flag_;
  if (flag_ == 0 && nu > factor_ * nu_min_) {
    flag_ = 1;
  } else if (flag_ == 1 && static_cast<int>(recent_.size()) == window_ + 1) {
    bool decreasing = true;
    for (std::size_t k = 1; k < recent_.size(); ++k) decreasing = decreasing && recent_[k] < recent_[k - 1];
    if (decreasing) flag_ = 2;
  }
  return flag_;
}

namespace {

// A vector together with its A and M images.
template <Scalar S>
struct Tracked {
  Vec<S> v, av, mv;

  bool empty() const { return v.size() == 0; }
  void scale(const S& s) {
    v *= s;
    av *= s;
    mv *= s;
  }
  // this += c * o
  void add(const S& c, const Tracked& o) {
    v += c * o.v;
    av += c * o.av;
    mv += c * o.mv;
  }
};

template <Scalar S>
Tracked<S> linear(const S& a, const Tracked<S>& u, const S& b, const Tracked<S>& w) {
  return {a * u.v + b * w.v, a * u.av + b * w.av, a * u.mv + b * w.mv};
}

bool recoverable(const Error& e) {
  return e.code() == ErrorCode::kConditioning || e.code() == ErrorCode::kNumericalBreakdown ||
         e.code() == ErrorCode::kDegenerateSubspace;
}

template <Scalar S>
class Engine {
 public:
  Engine(const HermitianPencil<S>& pencil, const Preconditioner<S>& t, const Vec<S>& x0,
         const SolverConfig& config)
      : pencil_(pencil), t_(t), config_(config) {
    config.validate();
    if (x0.size() != pencil.n()) throw Error(ErrorCode::kDimensionMismatch, "x0 size mismatch");
    if (t.empty() || t.n() != pencil.n()) {
      throw Error(ErrorCode::kDimensionMismatch, "preconditioner size mismatch");
    }
    if (!x0.allFinite()) throw Error(ErrorCode::kInvalidInput, "x0 is not finite");
    if (x0.isZero(0.0)) throw Error(ErrorCode::kInvalidInput, "x0 is zero");
    x_.v = x0;
    x_.av = apply_a(x0);
    x_.mv = apply_m(x0);
  }

  Vec<S> apply_a(const Vec<S>& v) {
    ++counts_.a;
    return pencil_.a().apply(v);
  }
  Vec<S> apply_m(const Vec<S>& v) {
    ++counts_.m;
    return pencil_.m().apply(v);
  }
  Vec<S> apply_t(const Vec<S>& v) {
    ++counts_.t;
    return t_.apply(v);
  }
  Tracked<S> track(Vec<S> v) {
    Tracked<S> out;
    out.av = apply_a(v);
    out.mv = apply_m(v);
    out.v = std::move(v);
    return out;
  }

  bool refresh_due(int i) const {
    return config_.normalize_every > 0 && i > 0 && i % config_.normalize_every == 0;
  }

  // Recomputes the images of x explicitly and rescales x to unit M-norm.
  // Returns the scale factor.
  double refresh() {
    x_.av = apply_a(x_.v);
    x_.mv = apply_m(x_.v);
    const double norm = std::sqrt(std::max(0.0, real_part(x_.v.dot(x_.mv))));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorCode::kNumericalBreakdown, "iterate lost its M-norm");
    }
    const double s = 1.0 / norm;
    x_.scale(S(s));
    return s;
  }

  void evaluate() {
    const double xmx = real_part(x_.v.dot(x_.mv));
    if (!(xmx > 0.0) || !std::isfinite(xmx)) {
      throw Error(ErrorCode::kNumericalBreakdown, "iterate has a non-positive M-norm");
    }
    xnorm_ = std::sqrt(xmx);
    theta_ = real_part(x_.v.dot(x_.av)) / xmx;
    r_ = x_.av - S(theta_) * x_.mv;
    nu_ = r_.norm() / xnorm_;
    if (!std::isfinite(theta_) || !std::isfinite(nu_)) {
      throw Error(ErrorCode::kNumericalBreakdown, "non-finite Rayleigh quotient or residual");
    }
  }

  void record(int i, std::optional<double> phi = std::nullopt) {
    IterationRecord rec;
    rec.iter = i;
    rec.theta = theta_;
    if (config_.lambda1_reference) rec.theta_err = theta_ - *config_.lambda1_reference;
    rec.nu = nu_;
    rec.phi = phi;
    if (!history_.empty()) {
      const auto& prev = history_.back();
      if (prev.theta != 0.0) rec.delta_lambda = std::sqrt(std::abs(theta_ / prev.theta - 1.0));
      if (phi && prev.phi && *prev.phi != 0.0) rec.delta_phi = std::abs(*phi / *prev.phi - 1.0);
    }
    history_.push_back(std::move(rec));
    if (config_.retain_iterates) iterates_.push_back(x_.v);
  }

  void event(std::string_view token) {
    auto& e = history_.back().event;
    if (!e.empty()) e += '|';
    e += token;
  }

  bool converged() const { return nu_ <= config_.tol_residual; }

  SolveResult<S> finish(bool converged) {
    SolveResult<S> out;
    out.theta_final = theta_;
    out.x_final = x_.v / S(xnorm_);
    out.iterations = history_.empty() ? 0 : history_.back().iter;
    out.converged = converged;
    out.nu_final = nu_;
    out.history = std::move(history_);
    out.matvecs = counts_;
    out.iterates = std::move(iterates_);
    out.wx_residuals = std::move(wx_residuals_);
    out.conjugacy_residuals = std::move(conjugacy_residuals_);
    return out;
  }

  // Runs rrw and accounts for its operator applies.
  RitzOutput<S> rrw_counted(const TrialBasis<S>& basis) {
    RrwOptions opt;
    opt.gamma = config_.gamma_gram;
    RitzOutput<S> out = rrw(pencil_, basis, opt);
    counts_.a += out.matvecs.a;
    counts_.m += out.matvecs.m;
    return out;
  }

  // x <- RRw(x + span(basis[1..])). Returns the step p = x_new - x_old (with
  // images) and writes flags for dropped vectors.
  Tracked<S> advance(const TrialBasis<S>& basis, const RitzOutput<S>& out) {
    Tracked<S> p;
    if (!out.anchor_fallback) {
      p.v = Vec<S>::Zero(x_.v.size());
      p.av = Vec<S>::Zero(x_.v.size());
      p.mv = Vec<S>::Zero(x_.v.size());
      for (std::size_t j = 1; j < basis.size(); ++j) {
        const S c = out.coefficients[j];
        if (c == S(0)) continue;
        p.v += c * basis.vectors[j];
        p.av += c * basis.a_images[j];
        p.mv += c * basis.m_images[j];
      }
      x_.add(S(1), p);
    } else {
      event(events::kAnchorFallback);
      p.v = out.x_next - x_.v;
      p.av = out.ax_next - x_.av;
      p.mv = out.mx_next - x_.mv;
      x_.v = out.x_next;
      x_.av = out.ax_next;
      x_.mv = out.mx_next;
    }
    if (out.retried_reduced) event(events::kReduce);
    return p;
  }

  const HermitianPencil<S>& pencil_;
  const Preconditioner<S>& t_;
  const SolverConfig& config_;
  MatvecCounts counts_;
  Tracked<S> x_;
  Vec<S> r_;
  double theta_ = 0.0;
  double nu_ = 0.0;
  double xnorm_ = 1.0;
  ConvergenceHistory history_;
  std::vector<Vec<S>> iterates_;
  std::vector<double> wx_residuals_;
  std::vector<double> conjugacy_residuals_;
};

template <Scalar S>
void push(TrialBasis<S>& basis, const Tracked<S>& t, BasisRole role) {
  basis.push(t.v, role, t.av, t.mv);
}

enum class RrKind { kPsd, kLopcg, kLopcgx, kLopcga };

template <Scalar S>
double m_cos(const Tracked<S>& a, const Tracked<S>& x) {
  const double na = std::sqrt(std::max(0.0, real_part(a.v.dot(a.mv))));
  const double nx = std::sqrt(std::max(0.0, real_part(x.v.dot(x.mv))));
  if (!(na > 0.0) || !(nx > 0.0)) return 0.0;
  return std::min(1.0, std::abs(a.mv.dot(x.v)) / (na * nx));
}

// PSD, LOPCG, LOPCGx and LOPCGa share one loop.
template <Scalar S>
SolveResult<S> run_rr(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                      const Vec<S>& x0, const SolverConfig& config, RrKind kind) {
  Engine<S> eng(pencil, t, x0, config);
  // x^{(i-2)} enters through the previous step: span{x, p, x^{(i-2)}} equals
  // span{x, p, p_prev}, and the differences stay well conditioned near convergence.
  Tracked<S> p;       // x^{(i)} - x^{(i-1)}
  Tracked<S> p_prev;  // x^{(i-1)} - x^{(i-2)}
  Tracked<S> a = eng.x_;          // LOPCGa auxiliary vector
  for (int i = 0;; ++i) {
    if (eng.refresh_due(i)) {
      const double s = eng.refresh();
      if (!p.empty()) p.scale(S(s));
      if (!p_prev.empty()) p_prev.scale(S(s));
    }
    eng.evaluate();
    std::optional<double> phi;
    if (kind == RrKind::kLopcga) phi = m_cos(a, eng.x_);
    eng.record(i, phi);
    if (eng.converged()) return eng.finish(true);
    if (i >= config.max_iters) return eng.finish(false);

    Tracked<S> w = eng.track(eng.apply_t(eng.r_));
    TrialBasis<S> basis;
    push(basis, eng.x_, BasisRole::kCurrentIterate);
    push(basis, w, BasisRole::kPrecondResidual);
    const bool use_p = kind != RrKind::kPsd && i > 0 && !p.empty();
    if (use_p) push(basis, p, BasisRole::kDirection);
    if (kind == RrKind::kLopcgx && use_p && !p_prev.empty()) {
      push(basis, p_prev, BasisRole::kAuxiliary);
    }
    if (kind == RrKind::kLopcga && use_p) {
      if (*phi < config.tau_angle) {
        a = eng.x_;
        eng.event(events::kAUpdate);
      } else {
        push(basis, a, BasisRole::kAuxiliary);
      }
      const OrthogonalizedBasis<S> ob =
          m_orthogonalize_with_reduction(pencil.m(), basis, config.gamma_gram);
      if (ob.reduced_to_psd) eng.event(events::kReduceP);
      if (ob.dropped_auxiliary) eng.event(events::kReduceA);
      basis = ob.basis;
    }

    RitzOutput<S> out;
    try {
      out = eng.rrw_counted(basis);
      for (std::size_t j = 2; j < basis.size(); ++j) {
        if (!out.dropped[j]) continue;
        eng.event(basis.roles[j] == BasisRole::kDirection ? events::kReduceP : events::kReduce);
      }
    } catch (const Error& e) {
      if (!recoverable(e) || basis.size() <= 2) throw;
      eng.event(events::kPsdFallback);
      TrialBasis<S> psd;
      push(psd, eng.x_, BasisRole::kCurrentIterate);
      push(psd, w, BasisRole::kPrecondResidual);
      basis = psd;
      out = eng.rrw_counted(basis);
    }
    p_prev = p;
    p = eng.advance(basis, out);
  }
}

template <Scalar S>
SolveResult<S> run_tpcg(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                        const Vec<S>& x0, const SolverConfig& config, bool augmented) {
  const TpcgFamily family = config.tpcg_family;
  const bool jacobi = family == TpcgFamily::kJacobiShift || family == TpcgFamily::kPerdonGambolati;
  const double alpha = family == TpcgFamily::kPerdonGambolati ? 0.0 : config.tpcg_alpha;
  const bool lagged = jacobi && config.tpcg_variant == TpcgVariant::kLaggedProjector;
  if (lagged && alpha != 1.0) {
    throw Error(ErrorCode::kConfig, "the lagged-projector variant requires alpha = 1");
  }

  Engine<S> eng(pencil, t, x0, config);
  Tracked<S> p;  // search direction (lagged: Q^{(i-1)} p^{(i)})
  // Families (a)/(b).
  double gamma_prev = 1.0;
  Vec<S> iota_tr_prev;
  // Family (c).
  std::optional<double> sigma = config.sigma_guess;
  double theta_prev = 0.0, theta0 = 0.0;
  // TPCGa.
  PeakDetector detector(config.peak_factor, config.peak_decrease_window, config.peak_activation);
  Tracked<S> xcheck;

  for (int i = 0;; ++i) {
    if (eng.refresh_due(i)) {
      const double s = eng.refresh();
      if (!p.empty()) p.scale(S(jacobi ? s : 1.0 / s));
      if (!jacobi) {
        if (iota_tr_prev.size() != 0) iota_tr_prev *= S(1.0 / s);
        gamma_prev /= s * s;
      }
    }
    eng.evaluate();
    bool augment = false;
    std::optional<double> phi;
    int flag_before = detector.flag();
    if (augmented) {
      const int flag = detector.update(eng.nu_);
      if (detector.new_minimum()) xcheck = eng.x_;
      phi = m_cos(xcheck, eng.x_);
      eng.record(i, phi);
      if (flag_before == 2) flag_before = 0;
      if (flag == 1 && flag_before == 0) eng.event(events::kFlag1);
      if (flag == 2) {
        eng.event(events::kFlag2);
        augment = true;
      }
    } else {
      eng.record(i);
    }
    if (eng.converged()) return eng.finish(true);
    if (i >= config.max_iters) return eng.finish(false);

    if (i == 0) theta0 = eng.theta_;
    if (i == 1 && !sigma) sigma = theta0 - 10.0 * (theta0 - eng.theta_);

    const Tracked<S> tr = eng.track(eng.apply_t(eng.r_));
    const double xx = eng.xnorm_ * eng.xnorm_;
    Tracked<S> d;
    Tracked<S> basis_dir;

    if (!jacobi) {
      const double iota = 2.0 / xx;
      const double gamma = iota * iota * real_part(eng.r_.dot(tr.v));
      S tau(0);
      if (i > 0 && !p.empty()) {
        if (family == TpcgFamily::kBradburyFletcher) {
          tau = S(gamma / gamma_prev);
        } else {
          tau = (S(gamma) - S(iota) * eng.r_.dot(iota_tr_prev)) / S(gamma_prev);
        }
      }
      d = p.empty() ? linear(S(iota), tr, S(0), tr) : linear(S(iota), tr, tau, p);
      gamma_prev = gamma;
      iota_tr_prev = S(iota) * tr.v;
      p = d;
      basis_dir = d;
    } else {
      bool restart = i == 0 || p.empty();
      if (!restart) {
        const double sig = std::min(*sigma, eng.theta_);
        double beta = eng.theta_;
        if (family == TpcgFamily::kPerdonGambolati || config.beta_rule == BetaRule::kSigma) {
          beta = sig;
        } else if (config.beta_rule == BetaRule::kShiftRule) {
          beta = std::max(0.5 * (sig + eng.theta_), 2.0 * eng.theta_ - theta_prev);
        }
        Tracked<S> v = p;
        if (!lagged && alpha != 0.0) {
          const S c = eng.x_.mv.dot(p.v) / S(xx);
          v.add(-S(alpha) * c, eng.x_);
        }
        const Vec<S> w = v.av - S(beta) * v.mv;
        const S wv = w.dot(v.v);
        if (std::abs(wv) == 0.0 || !std::isfinite(std::abs(wv))) {
          restart = true;
        } else {
          S numer = w.dot(tr.v);
          if (alpha != 1.0 && alpha != 0.0) {
            numer -= S(alpha) * (eng.x_.mv.dot(tr.v) / S(xx)) * w.dot(eng.x_.v);
          }
          const S tau = -numer / wv;
          if (config.debug_identities) {
            const double wx = std::abs(w.dot(eng.x_.v)) / (w.norm() * eng.x_.v.norm());
            eng.wx_residuals_.push_back(wx);
            const S a1 = w.dot(tr.v), a2 = tau * wv;
            const double scale = std::abs(a1) + std::abs(a2);
            eng.conjugacy_residuals_.push_back(scale > 0.0 ? std::abs(a1 + a2) / scale : 0.0);
          }
          d = linear(S(1), tr, tau, lagged ? v : p);
        }
      }
      if (restart) {
        if (i > 0) eng.event(events::kRestart);
        d = tr;
      }
      if (lagged) {
        const S c = eng.x_.mv.dot(d.v) / S(xx);
        Tracked<S> q = d;
        q.add(-c, eng.x_);
        p = q;
        basis_dir = q;
      } else {
        p = d;
        basis_dir = d;
      }
    }
    theta_prev = eng.theta_;

    TrialBasis<S> basis;
    push(basis, eng.x_, BasisRole::kCurrentIterate);
    push(basis, basis_dir, BasisRole::kDirection);
    if (augment && !xcheck.empty()) {
      // Same span with the component along x removed. xcheck is often close to x,
      // so the difference gets fresh images rather than differenced tracked ones.
      const S c = eng.x_.mv.dot(xcheck.v) / S(xx);
      push(basis, eng.track(xcheck.v - c * eng.x_.v), BasisRole::kStoredMinResidual);
      eng.event(events::kAugment);
    }
    RitzOutput<S> out;
    try {
      out = eng.rrw_counted(basis);
      if (basis.size() > 2 && out.dropped[2]) eng.event(events::kReduce);
    } catch (const Error& e) {
      if (!recoverable(e)) throw;
      // Fall back to a PSD step and restart the recurrence.
      eng.event(events::kPsdFallback);
      basis = TrialBasis<S>();
      push(basis, eng.x_, BasisRole::kCurrentIterate);
      push(basis, tr, BasisRole::kPrecondResidual);
      out = eng.rrw_counted(basis);
      p = Tracked<S>();
      gamma_prev = 1.0;
    }
    eng.advance(basis, out);
  }
}

template <Scalar S>
SolveResult<S> run_gd(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                      const Vec<S>& x0, const SolverConfig& config) {
  Engine<S> eng(pencil, t, x0, config);
  std::vector<Tracked<S>> basis;
  DenseMat<S> h;

  auto rebuild_h = [&]() {
    const auto k = static_cast<Eigen::Index>(basis.size());
    h.resize(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) h(a, b) = basis[a].v.dot(basis[b].av);
  };
  // M-orthonormalizes v against the basis (two passes); false if dependent.
  auto append = [&](Vec<S> v) {
    const double before = v.norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) v -= b.mv.dot(v) * b.v;
    }
    if (!(v.norm() > 1e-12 * before)) return false;
    Tracked<S> tv = eng.track(std::move(v));
    const double norm = std::sqrt(std::max(0.0, real_part(tv.v.dot(tv.mv))));
    if (!(norm > 0.0)) return false;
    tv.scale(S(1.0 / norm));
    basis.push_back(std::move(tv));
    return true;
  };

  {
    Tracked<S> x0t = eng.x_;
    const double norm = std::sqrt(real_part(x0t.v.dot(x0t.mv)));
    x0t.scale(S(1.0 / norm));
    basis.push_back(x0t);
    eng.x_ = x0t;
    rebuild_h();
  }
  Tracked<S> prev;
  for (int i = 0;; ++i) {
    eng.evaluate();
    eng.record(i);
    if (eng.converged()) return eng.finish(true);
    if (i >= config.max_iters) return eng.finish(false);

    if (static_cast<int>(basis.size()) >= config.gd_max_dim) {
      // Hard restart to span{x, p}; Tr is added below.
      eng.event(events::kRestart);
      Tracked<S> x = eng.x_;
      basis.clear();
      const double nx = std::sqrt(real_part(x.v.dot(x.mv)));
      x.scale(S(1.0 / nx));
      basis.push_back(x);
      if (!prev.empty()) {
        Vec<S> pv = eng.x_.v - prev.v;
        append(std::move(pv));
      }
      rebuild_h();
    }
    if (!append(eng.apply_t(eng.r_))) {
      throw Error(ErrorCode::kDegenerateSubspace,
                  "preconditioned residual lies in the accumulated subspace");
    }
    const auto k = static_cast<Eigen::Index>(basis.size());
    DenseMat<S> grown(k, k);
    grown.topLeftCorner(k - 1, k - 1) = h;
    for (Eigen::Index a = 0; a < k; ++a) {
      grown(a, k - 1) = basis[a].v.dot(basis[k - 1].av);
      grown(k - 1, a) = basis[k - 1].v.dot(basis[a].av);
    }
    h = grown;
    const DenseEigen<S> eig = jacobi_eigensolve<S>(h);
    Tracked<S> x;
    x.v = Vec<S>::Zero(pencil.n());
    x.av = Vec<S>::Zero(pencil.n());
    x.mv = Vec<S>::Zero(pencil.n());
    for (Eigen::Index a = 0; a < k; ++a) x.add(eig.vectors(a, 0), basis[a]);
    // Keep the orientation of the previous iterate.
    const S overlap = eng.x_.mv.dot(x.v);
    if (std::abs(overlap) > 0.0) x.scale(std::abs(overlap) / overlap);
    prev = eng.x_;
    eng.x_ = x;
  }
}

}  // namespace

template <Scalar S>
SolveResult<S> solve_pcg_heuristic(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                                   double lambda1, const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config) {
  SolverConfig cfg = config;
  cfg.method = Method::kPcgHeuristic;
  cfg.lambda1_input = lambda1;
  if (!std::isfinite(lambda1)) throw Error(ErrorCode::kInvalidInput, "lambda1 must be finite");
  Engine<S> eng(pencil, t, x0, cfg);
  double lam = lambda1;
  bool updated = false;

  Vec<S> r = -(eng.x_.av - S(lam) * eng.x_.mv);
  Vec<S> w = eng.apply_t(r);
  double gamma = real_part(w.dot(r));
  Vec<S> p = w;

  for (int i = 0;; ++i) {
    eng.evaluate();
    eng.record(i);
    if (eng.converged()) return eng.finish(true);
    if (i >= cfg.max_iters) return eng.finish(false);

    if (cfg.lambda1_final_update && !updated && eng.nu_ < cfg.lambda1_update_nu) {
      updated = true;
      lam = eng.theta_;
      r = -(eng.x_.av - S(lam) * eng.x_.mv);
      w = eng.apply_t(r);
      gamma = real_part(w.dot(r));
      p = w;
      eng.event(events::kLambdaUpdate);
    }
    if (gamma == 0.0) return eng.finish(eng.converged());

    const Vec<S> ap = eng.apply_a(p);
    const Vec<S> mp = eng.apply_m(p);
    const Vec<S> wp_vec = ap - S(lam) * mp;
    const double wp = real_part(wp_vec.dot(p));
    if (!(wp > 0.0)) {
      throw Error(ErrorCode::kNumericalBreakdown,
                  "w*p <= 0: the shifted operator is indefinite (lambda1 too large?)");
    }
    const double delta = gamma / wp;
    eng.x_.v += S(delta) * p;
    eng.x_.av += S(delta) * ap;
    eng.x_.mv += S(delta) * mp;
    r -= S(delta) * wp_vec;
    w = eng.apply_t(r);
    const double gamma_next = real_part(w.dot(r));
    p = w + S(gamma_next / gamma) * p;
    gamma = gamma_next;
  }
}

template <Scalar S>
SolveResult<S> solve_psd(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                         const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config) {
  return run_rr(pencil, t, x0, config, RrKind::kPsd);
}

template <Scalar S>
SolveResult<S> solve_gd(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                        const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config) {
  return run_gd(pencil, t, x0, config);
}

template <Scalar S>
SolveResult<S> solve_lopcg(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                           const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config) {
  return run_rr(pencil, t, x0, config, RrKind::kLopcg);
}

template <Scalar S>
SolveResult<S> solve_lopcgx(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                            const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config) {
  return run_rr(pencil, t, x0, config, RrKind::kLopcgx);
}

template <Scalar S>
SolveResult<S> solve_lopcga(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                            const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config) {
  return run_rr(pencil, t, x0, config, RrKind::kLopcga);
}

template <Scalar S>
SolveResult<S> solve_tpcg(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                          const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config) {
  return run_tpcg(pencil, t, x0, config, false);
}

template <Scalar S>
SolveResult<S> solve_tpcga(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                           const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config) {
  return run_tpcg(pencil, t, x0, config, true);
}

template <Scalar S>
SolveResult<S> solve(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                     const std::type_identity_t<Vec<S>>& x0, const SolverConfig& config) {
  switch (config.method) {
    case Method::kPcgHeuristic:
      if (!config.lambda1_input) throw Error(ErrorCode::kConfig, "pcg-heuristic needs lambda1_input");
      return solve_pcg_heuristic(pencil, t, *config.lambda1_input, x0, config);
    case Method::kPsd: return solve_psd(pencil, t, x0, config);
    case Method::kGd: return solve_gd(pencil, t, x0, config);
    case Method::kLopcg: return solve_lopcg(pencil, t, x0, config);
    case Method::kLopcgx: return solve_lopcgx(pencil, t, x0, config);
    case Method::kLopcga: return solve_lopcga(pencil, t, x0, config);
    case Method::kTpcg: return solve_tpcg(pencil, t, x0, config);
    case Method::kTpcga: return solve_tpcga(pencil, t, x0, config);
  }
  throw Error(ErrorCode::kConfig, "unknown method");
}

template <Scalar S>
double psd_step_value(const HermitianPencil<S>& pencil, const Preconditioner<S>& t,
                      const std::type_identity_t<Vec<S>>& x) {
  const double theta = rayleigh_quotient(pencil, x);
  const Vec<S> w = t.apply(residual(pencil, x, theta));
  TrialBasis<S> basis;
  basis.push(x, BasisRole::kCurrentIterate);
  basis.push(w, BasisRole::kPrecondResidual);
  try {
    return rrw(pencil, basis).theta_next;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDegenerateSubspace) return theta;
    throw;
  }
}

#define CGEIG_INSTANTIATE(S)                                                                     \
  template SolveResult<S> solve_pcg_heuristic<S>(const HermitianPencil<S>&,                     \
                                                 const Preconditioner<S>&, double, const Vec<S>&, \
                                                 const SolverConfig&);                           \
  template SolveResult<S> solve_psd<S>(const HermitianPencil<S>&, const Preconditioner<S>&,     \
                                       const Vec<S>&, const SolverConfig&);                      \
  template SolveResult<S> solve_gd<S>(const HermitianPencil<S>&, const Preconditioner<S>&,      \
                                      const Vec<S>&, const SolverConfig&);                       \
  template SolveResult<S> solve_lopcg<S>(const HermitianPencil<S>&, const Preconditioner<S>&,   \
                                         const Vec<S>&, const SolverConfig&);                    \
  template SolveResult<S> solve_lopcgx<S>(const HermitianPencil<S>&, const Preconditioner<S>&,  \
                                          const Vec<S>&, const SolverConfig&);                   \
  template SolveResult<S> solve_lopcga<S>(const HermitianPencil<S>&, const Preconditioner<S>&,  \
                                          const Vec<S>&, const SolverConfig&);                   \
  template SolveResult<S> solve_tpcg<S>(const HermitianPencil<S>&, const Preconditioner<S>&,    \
                                        const Vec<S>&, const SolverConfig&);                     \
  template SolveResult<S> solve_tpcga<S>(const HermitianPencil<S>&, const Preconditioner<S>&,   \
                                         const Vec<S>&, const SolverConfig&);                    \
  template SolveResult<S> solve<S>(const HermitianPencil<S>&, const Preconditioner<S>&,         \
                                   const Vec<S>&, const SolverConfig&);                          \
  template double psd_step_value<S>(const HermitianPencil<S>&, const Preconditioner<S>&,        \
                                    const Vec<S>&);

CGEIG_INSTANTIATE(double)
CGEIG_INSTANTIATE(Complex)
#undef CGEIG_INSTANTIATE

}  // namespace cgeig

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <string_view>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/io.hpp"
#include "selfsim/numeric.hpp"

namespace selfsim {

/// Which single-layer contraction bound eta(c, p) to use.
///
/// `lemma` is the bound proved for normalized alphabets (t1=0, t2=1):
///     eta = p1 + p2 - sqrt(p1^2 + 2 p1 p2 cos(pi c) + p2^2).
/// `remark` is the stronger value 1 - cos(pi c) quoted for unbiased Bernoulli
/// convolutions; it is what the published sigma = 0.016 chain uses, so it is
/// the default for two-atom (1/2, 1/2) pipelines. The two disagree even at
/// p = (1/2, 1/2) (the lemma gives 1 - cos(pi c / 2)); both are exposed and
/// the choice is always recorded in reports.
enum class EtaMode { lemma, remark };

/// Coefficient of the log-ceiling term in the covering exponent. `stated` is
/// the displayed formula; `conservative` doubles the coefficient to match the
/// sequence-count bound ceil(1+1/a)^(2 eps~ N + 1) used in its derivation.
enum class DeltaVariant { stated, conservative };

inline std::string_view to_string(EtaMode m) {
  return m == EtaMode::lemma ? "lemma" : "remark";
}
inline std::string_view to_string(DeltaVariant v) {
  return v == DeltaVariant::stated ? "stated" : "conservative";
}

/// Binary entropy, natural logarithm; h(0) = h(1) = 0 by continuity.
inline double entropy(double x) {
  if (!(x >= 0.0) || !(x <= 1.0)) throw DomainError("entropy argument must be in [0,1]");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log(x) - (1.0 - x) * std::log(1.0 - x);
}

namespace detail {

inline void check_two_leading_weights(const std::vector<double>& p) {
  if (p.size() < 2) throw DomainError("need at least two weights");
  for (double w : p) {
    if (!(w > 0.0)) throw DomainError("weights must be positive");
  }
}

inline bool is_unbiased_pair(const std::vector<double>& p) {
  return p.size() == 2 && std::abs(p[0] - 0.5) <= 1e-12 && std::abs(p[1] - 0.5) <= 1e-12;
}

}  // namespace detail

/// Contraction of |Phi| away from the integers: if d(y, Z) > c/2 then
/// |Phi(y)| < 1 - eta(c, p).
inline double eta(double c, const std::vector<double>& p, EtaMode mode) {
  if (!(c > 0.0) || !(c < 1.0)) throw DomainError("eta argument c must be in (0,1)");
  detail::check_two_leading_weights(p);
  if (mode == EtaMode::remark) {
    if (!detail::is_unbiased_pair(p)) {
      throw DomainError("eta remark mode requires p = (1/2, 1/2)");
    }
    return 1.0 - std::cos(std::numbers::pi * c);
  }
  const double p1 = p[0], p2 = p[1];
  return p1 + p2 -
         std::sqrt(p1 * p1 + 2.0 * p1 * p2 * std::cos(std::numbers::pi * c) + p2 * p2);
}

/// Default mode used by the pipelines: remark for the unbiased two-atom case,
/// lemma otherwise.
inline EtaMode default_eta_mode(const std::vector<double>& p) {
  return detail::is_unbiased_pair(p) ? EtaMode::remark : EtaMode::lemma;
}

inline constexpr double kEpsTildeGuard = 0.5;

/// Slope d(eps~)/d(eps) = log(a) / log(1 - eta(a/(a+1), p)); both logs are
/// negative, so the slope is positive.
inline double epsilon_tilde_slope(double a, const std::vector<double>& p, EtaMode mode) {
  if (!(a > 0.0) || !(a < 1.0)) throw DomainError("a must be in (0,1)");
  return std::log(a) / std::log(1.0 - eta(a / (a + 1.0), p, mode));
}

/// eps~ = slope * eps. Throws ValidityError at eps~ >= 1/2: the covering
/// proposition only holds for eps small enough, and 1/2 is the guard adopted
/// here (the entropy term is increasing only up to 1/2).
inline double epsilon_tilde(double a, const std::vector<double>& p, double eps, EtaMode mode) {
  if (!(eps >= 0.0)) throw DomainError("eps must be >= 0");
  const double et = epsilon_tilde_slope(a, p, mode) * eps;
  if (et >= kEpsTildeGuard) {
    throw ValidityError("eps_tilde = " + std::to_string(et) + " >= 1/2 (outside validity range)");
  }
  return et;
}

/// Covering exponent: frequencies in [-T, T] with |mu^| >= T^{-eps} are
/// covered by O(T^delta) unit intervals,
///     delta = (log(ceil(1 + 1/a)) * eps~ + h(eps~)) / log(1/a).
inline double delta(double a, const std::vector<double>& p, double eps, EtaMode mode,
                    DeltaVariant variant = DeltaVariant::stated) {
  const double et = epsilon_tilde(a, p, eps, mode);
  const double log_ceil = std::log(ceil_snapped(1.0 + 1.0 / a));
  const double coef = variant == DeltaVariant::conservative ? 2.0 : 1.0;
  return (coef * log_ceil * et + entropy(et)) / std::log(1.0 / a);
}

/// Largest admissible eps (exclusive) for the chain at these parameters.
inline double eps_validity_limit(double a, const std::vector<double>& p, EtaMode mode) {
  return kEpsTildeGuard / epsilon_tilde_slope(a, p, mode);
}

struct KaufmanResult {
  double eps_star = 0.0;
  double sigma = 0.0;
};

/// Balance point of the pushforward-decay exponent min{(s - delta)/3, eps/3}:
/// eps* is the unique root of G(eps) = s - delta(eps) - eps (G is strictly
/// decreasing, G(0) = s > 0), and sigma = eps*/3.
inline KaufmanResult kaufman_sigma(double a, const std::vector<double>& p, double s,
                                   EtaMode mode, DeltaVariant variant = DeltaVariant::stated) {
  if (!(s > 0.0) || s > 1.0) throw DomainError("Frostman exponent s must be in (0,1]");
  const double hi = eps_validity_limit(a, p, mode) * (1.0 - 1e-12);
  auto g = [&](double e) { return s - delta(a, p, e, mode, variant) - e; };
  if (!(g(hi) < 0.0)) {
    throw InfeasibleError("kaufman_sigma: G has no root inside the validity range");
  }
  const double root = bisect_decreasing(g, 0.0, hi, 1e-10);
  return KaufmanResult{root, root / 3.0};
}

struct FlatteningResult {
  double eps = 0.0;
  double sigma = 0.0;
};

/// Flattening exponent: convolving with the measure raises correlation
/// dimension of any nu with dim_2(nu) <= 1 - kappa by sigma = 2 eps, where
/// eps solves kappa - 2 eps = delta(eps).
inline FlatteningResult flattening_sigma(double a, const std::vector<double>& p, double kappa,
                                         EtaMode mode,
                                         DeltaVariant variant = DeltaVariant::stated) {
  if (!(kappa > 0.0) || !(kappa < 1.0)) throw DomainError("kappa must be in (0,1)");
  const double guard = eps_validity_limit(a, p, mode) * (1.0 - 1e-12);
  const double hi = std::min(0.5 * kappa, guard);
  auto f = [&](double e) { return kappa - 2.0 * e - delta(a, p, e, mode, variant); };
  if (!(f(hi) < 0.0)) {
    throw InfeasibleError("flattening_sigma: validity guard reached before sign change");
  }
  const double root = bisect_decreasing(f, 0.0, hi, 1e-10);
  return FlatteningResult{root, 2.0 * root};
}

struct FrostmanOsc {
  double s = 0.0;
  bool capped = false;  // true when min_i log(p_i)/log(a) exceeded 1
};

/// Closed-form Frostman exponent min_i log(p_i)/log(a), valid under the open
/// set condition (asserted by the caller, not checked).
inline FrostmanOsc frostman_exponent_osc(double a, const std::vector<double>& p) {
  if (!(a > 0.0) || !(a < 1.0)) throw DomainError("a must be in (0,1)");
  detail::check_two_leading_weights(p);
  double s = std::numeric_limits<double>::infinity();
  for (double w : p) s = std::min(s, std::log(w) / std::log(a));
  if (s > 1.0) return FrostmanOsc{1.0, true};
  return FrostmanOsc{s, false};
}

/// Smallest n with a^n < 1/2 (strict inequality), so a/2 <= a^n < 1/2.
inline int n_a(double a) {
  if (!(a > 0.0) || !(a < 1.0)) throw DomainError("a must be in (0,1)");
  double guess = std::floor(std::log(0.5) / std::log(a));
  int n = guess > 1.0 ? static_cast<int>(guess) : 1;
  while (std::pow(a, n) >= 0.5) ++n;
  while (n > 1 && std::pow(a, n - 1) < 0.5) --n;
  return n;
}

/// One Bernoulli-convolution dimension bound plus the chain that produced it.
struct BernoulliBound {
  double bound = 0.0;     // the certified lower bound (clamped at 0)
  double kappa = 0.0;     // kappa* = 2 eps + delta
  double eps = 0.0;       // flattening eps = sigma / 2
  double sigma = 0.0;     // per-step dimension gain
  double delta_val = 0.0;
  double a_inner = 0.0;   // contraction ratio a^N of the inner OSC system
  int n = 0;              // N = n_a(a)
  double baseline = 0.0;  // dim_2 of the inner OSC measure (unbiased chain)
  EtaMode mode = EtaMode::lemma;
};

/// Lower bound for dim_2(nu_a^p): decompose nu_a^p into N = n_a(a) scaled
/// copies of nu_{a^N}^p (which satisfies the open set condition since
/// a^N < 1/2) and apply the flattening step N-1 times with sigma = 1/(N-1),
/// i.e. eps = 1/(2(N-1)) and kappa* = 2 eps + delta(a^N, p, eps).
inline BernoulliBound bernoulli_dim2_bound(double a, double p, EtaMode mode) {
  if (!(p > 0.0) || !(p < 1.0)) throw DomainError("bernoulli weight must be in (0,1)");
  const int n = n_a(a);
  if (n < 2) {
    throw DomainError("bernoulli_dim2_bound requires a >= 1/2 (so that n_a >= 2)");
  }
  BernoulliBound out;
  out.n = n;
  out.mode = mode;
  out.a_inner = std::pow(a, n);
  out.sigma = 1.0 / static_cast<double>(n - 1);
  out.eps = 0.5 * out.sigma;
  const std::vector<double> w{p, 1.0 - p};
  out.delta_val = delta(out.a_inner, w, out.eps, mode);
  out.kappa = 2.0 * out.eps + out.delta_val;
  out.bound = std::max(0.0, 1.0 - out.kappa);
  out.baseline = std::log(p * p + (1.0 - p) * (1.0 - p)) / std::log(out.a_inner);
  return out;
}

/// Sharper unbiased chain: the inner OSC measure has
/// dim_2(nu_{a^N}) = log(1/2)/log(a^N) >= 1 - log(1/a)/log(2/a), so the
/// per-step gain only needs sigma = (log(1/a)/log(2/a)) / (N-1) to reach 1.
inline BernoulliBound bernoulli_dim2_bound_unbiased(double a) {
  const int n = n_a(a);
  if (n < 2) {
    throw DomainError("bernoulli_dim2_bound_unbiased requires a >= 1/2");
  }
  BernoulliBound out;
  out.n = n;
  out.mode = EtaMode::remark;
  out.a_inner = std::pow(a, n);
  out.sigma = std::log(1.0 / a) / std::log(2.0 / a) / static_cast<double>(n - 1);
  out.eps = 0.5 * out.sigma;
  const std::vector<double> w{0.5, 0.5};
  out.delta_val = delta(out.a_inner, w, out.eps, out.mode);
  out.kappa = out.sigma + out.delta_val;
  out.bound = std::max(0.0, 1.0 - out.kappa);
  // a^N < 1/2 strictly (n_a uses strict inequality), so baseline < 1.
  out.baseline = std::log(0.5) / std::log(out.a_inner);
  return out;
}

/// Frostman-exponent bound via one Young step: nu_a^p splits as
/// nu_{a^2}^p * S_a nu_{a^2}^p, and dim_inf of a convolution dominates the
/// mean of the dim_2 of its factors, so dim_inf(nu_a^p) >= dim_2(nu_{a^2}^p).
inline BernoulliBound bernoulli_diminf_bound(double a, double p, EtaMode mode) {
  if (!(a > 0.0) || !(a < 1.0)) throw DomainError("a must be in (0,1)");
  return bernoulli_dim2_bound(a * a, p, mode);
}

/// Aggregated effective constants at one parameter set.
struct ConstantsReport {
  double eta_val = 0.0;        // eta(a/(a+1), p)
  double eps_tilde_val = 0.0;  // eps~ at eps_star
  double delta_val = 0.0;      // delta at eps_star
  double eps_star = 0.0;
  double sigma = 0.0;
  double kappa = 0.0;
  double s_frostman = 0.0;
  int n_a_val = 0;
  EtaMode mode = EtaMode::lemma;
  DeltaVariant variant = DeltaVariant::stated;
  bool s_capped = false;
};

/// Runs the Kaufman chain when `s` is positive (pass 0 to use the OSC
/// closed form), or the flattening chain when `kappa` is positive.
inline ConstantsReport constants_report(double a, const std::vector<double>& p, double s,
                                        double kappa, EtaMode mode, DeltaVariant variant) {
  ConstantsReport r;
  r.mode = mode;
  r.variant = variant;
  r.eta_val = eta(a / (a + 1.0), p, mode);
  r.n_a_val = n_a(a);
  if (s <= 0.0) {
    const FrostmanOsc fr = frostman_exponent_osc(a, p);
    r.s_frostman = fr.s;
    r.s_capped = fr.capped;
  } else {
    if (s > 1.0) throw DomainError("s must be in (0,1]");
    r.s_frostman = s;
  }
  if (kappa > 0.0) {
    const FlatteningResult fl = flattening_sigma(a, p, kappa, mode, variant);
    r.eps_star = fl.eps;
    r.sigma = fl.sigma;
    r.kappa = kappa;
  } else {
    const KaufmanResult ek = kaufman_sigma(a, p, r.s_frostman, mode, variant);
    r.eps_star = ek.eps_star;
    r.sigma = ek.sigma;
    r.kappa = delta(a, p, ek.eps_star, mode, variant) + 2.0 * ek.eps_star;
  }
  r.eps_tilde_val = epsilon_tilde(a, p, r.eps_star, mode);
  r.delta_val = delta(a, p, r.eps_star, mode, variant);
  return r;
}

inline void write_json(const ConstantsReport& r, std::ostream& out) {
  JsonObjectWriter w(out);
  w.field("eta", r.eta_val)
      .field("eps_tilde", r.eps_tilde_val)
      .field("delta", r.delta_val)
      .field("eps_star", r.eps_star)
      .field("sigma", r.sigma)
      .field("kappa", r.kappa)
      .field("s", r.s_frostman)
      .field("n_a", r.n_a_val)
      .field("mode", to_string(r.mode))
      .field("variant", to_string(r.variant))
      .field_bool("s_capped", r.s_capped);
  w.close();
}

inline void write_json(const BernoulliBound& b, std::ostream& out, std::string_view target) {
  JsonObjectWriter w(out);
  w.field("target", target)
      .field("bound", b.bound)
      .field("kappa", b.kappa)
      .field("eps", b.eps)
      .field("sigma", b.sigma)
      .field("delta", b.delta_val)
      .field("a_inner", b.a_inner)
      .field("n", b.n)
      .field("baseline", b.baseline)
      .field("mode", to_string(b.mode));
  w.close();
}

}  // namespace selfsim

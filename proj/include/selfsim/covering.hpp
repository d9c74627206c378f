#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "selfsim/constants.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/fourier.hpp"
#include "selfsim/io.hpp"
#include "selfsim/measure.hpp"

namespace selfsim {

struct FlaggedInterval {
  std::int64_t k = 0;       // unit interval [k, k+1)
  double max_modulus = 0.0; // largest sampled |mu^| in the interval
};

/// Empirical covering data for the frequencies in [0, T] where |mu^| stays
/// above T^{-eps} (the negative half axis mirrors by conjugate symmetry).
struct CoveringReport {
  double t_max = 0.0;
  double eps = 0.0;
  double threshold = 0.0;  // T^{-eps}
  double step = 0.0;
  double tol = 0.0;
  std::vector<FlaggedInterval> flagged;
  std::int64_t count = 0;
  double delta_stated = 0.0;
  double delta_conservative = 0.0;
  double theory_stated = 0.0;       // T^delta, stated variant
  double theory_conservative = 0.0; // T^delta, conservative variant
  double ratio_stated = 0.0;
  double ratio_conservative = 0.0;
  EtaMode mode = EtaMode::lemma;
};

/// Flags the unit interval [k, k+1) when some sample has modulus + err above
/// the threshold, so no frequency whose certified upper bound clears the
/// threshold is missed at the sampled points. Interval k = 0 is always
/// flagged because mu^(0) = 1.
inline CoveringReport covering_report(const HomogeneousSSM& s, double t_max, double eps,
                                      double step, double tol,
                                      EtaMode mode) {
  validate(s);
  if (!(t_max >= 1.0)) throw DomainError("t_max must be >= 1");
  if (!(eps >= 0.0)) throw DomainError("eps must be >= 0");
  if (!(step > 0.0) || step > 0.25) throw DomainError("step must be in (0, 1/4]");
  const double threshold = std::pow(t_max, -eps);
  if (!(tol > 0.0) || tol > threshold / 10.0) {
    throw DomainError("tol must be in (0, T^{-eps}/10]");
  }
  const double approx = t_max / step + 1.0;
  if (approx > static_cast<double>(kMaxScanSamples)) {
    throw ResourceError("covering_report would need about " + std::to_string(approx) +
                        " samples (guard 1e8)");
  }

  CoveringReport out;
  out.t_max = t_max;
  out.eps = eps;
  out.threshold = threshold;
  out.step = step;
  out.tol = tol;
  out.mode = mode;

  const std::int64_t buckets = static_cast<std::int64_t>(std::ceil(t_max)) + 1;
  std::vector<double> max_mod(static_cast<std::size_t>(buckets), 0.0);
  std::vector<char> hit(static_cast<std::size_t>(buckets), 0);
  const std::int64_t n = static_cast<std::int64_t>(std::floor(t_max / step * (1.0 + 1e-15)));
  for (std::int64_t i = 0; i <= n; ++i) {
    const double xi = static_cast<double>(i) * step;
    const FourierValue fv = fourier_transform(s, xi, tol);
    const double modulus = std::abs(fv.value);
    const std::int64_t k = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(xi)),
                                                  buckets - 1);
    max_mod[static_cast<std::size_t>(k)] =
        std::max(max_mod[static_cast<std::size_t>(k)], modulus);
    if (modulus + fv.err >= threshold) hit[static_cast<std::size_t>(k)] = 1;
  }
  for (std::int64_t k = 0; k < buckets; ++k) {
    if (hit[static_cast<std::size_t>(k)]) {
      out.flagged.push_back(FlaggedInterval{k, max_mod[static_cast<std::size_t>(k)]});
    }
  }
  out.count = static_cast<std::int64_t>(out.flagged.size());

  out.delta_stated = delta(s.a, s.p, eps, mode, DeltaVariant::stated);
  out.delta_conservative = delta(s.a, s.p, eps, mode, DeltaVariant::conservative);
  out.theory_stated = std::pow(t_max, out.delta_stated);
  out.theory_conservative = std::pow(t_max, out.delta_conservative);
  out.ratio_stated = static_cast<double>(out.count) / out.theory_stated;
  out.ratio_conservative = static_cast<double>(out.count) / out.theory_conservative;
  return out;
}

inline void write_csv(const CoveringReport& r, std::ostream& out) {
  out << "k,max_modulus\n";
  for (const FlaggedInterval& f : r.flagged) {
    out << f.k << ',' << fmt17(f.max_modulus) << '\n';
  }
}

inline void write_json(const CoveringReport& r, std::ostream& out) {
  JsonObjectWriter w(out);
  w.field("t_max", r.t_max)
      .field("eps", r.eps)
      .field("threshold", r.threshold)
      .field("step", r.step)
      .field("tol", r.tol)
      .field("count", r.count)
      .field("delta_stated", r.delta_stated)
      .field("delta_conservative", r.delta_conservative)
      .field("theory_count_stated", r.theory_stated)
      .field("theory_count_conservative", r.theory_conservative)
      .field("ratio_stated", r.ratio_stated)
      .field("ratio_conservative", r.ratio_conservative)
      .field("mode", to_string(r.mode));
  w.close();
}

struct EKTerm {
  std::int64_t r = 0;
  double eps = 0.0;  // in [-1/2, 1/2)
};

/// Integer/remainder decomposition a^{-j} t = r_j + eps_j, j = 0..N-1.
/// Each pair reconstructs the running value exactly in double arithmetic.
struct EKDecomposition {
  double t = 0.0;
  double a = 0.0;
  std::vector<EKTerm> terms;
};

inline EKDecomposition decompose(double t, double a, int n_terms) {
  if (!(a > 0.0) || !(a < 1.0)) throw DomainError("a must be in (0,1)");
  if (!(t >= 0.0) || !(t <= 1.0)) throw DomainError("t must be in [0,1]");
  if (n_terms < 1) throw DomainError("need at least one term");
  EKDecomposition out;
  out.t = t;
  out.a = a;
  out.terms.reserve(static_cast<std::size_t>(n_terms));
  const double inv = 1.0 / a;
  double x = t;
  for (int j = 0; j < n_terms; ++j) {
    if (std::abs(x) > 0x1p52) {
      throw ResourceError("decompose: a^{-j} t exceeds 2^52, remainders lose meaning");
    }
    const double r = std::floor(x + 0.5);  // eps in [-1/2, 1/2)
    out.terms.push_back(EKTerm{static_cast<std::int64_t>(r), x - r});
    x *= inv;
  }
  return out;
}

inline void write_csv(const EKDecomposition& d, std::ostream& out) {
  out << "j,r,eps\n";
  for (std::size_t j = 0; j < d.terms.size(); ++j) {
    out << j << ',' << d.terms[j].r << ',' << fmt17(d.terms[j].eps) << '\n';
  }
}

/// The frequency set of the covering argument, scaled to [0,1]:
/// S(N, eps~) = {t : ||a^{-j} t|| < xi(a) for at least (1 - eps~) N of the
/// indices j in [N]}, with xi(a) = a / (2 (a+1)).
inline bool s_set_member(double t, double a, int n_levels, double eps_tilde_val) {
  const double xi = a / (2.0 * (a + 1.0));
  const double inv = 1.0 / a;
  double x = t;
  int hits = 0;
  for (int j = 0; j < n_levels; ++j) {
    if (std::abs(x - std::round(x)) < xi) ++hits;
    x *= inv;
  }
  return static_cast<double>(hits) >= (1.0 - eps_tilde_val) * n_levels - 1e-9;
}

struct SSetCoverCount {
  std::int64_t empirical = 0;  // cells of length a^N meeting the sampled S set
  double bound = 0.0;          // ceil(1+1/a)^{2 eps~ N + 1} e^{h N} (N+1)
  std::int64_t cells = 0;
  std::int64_t grid = 0;
  double xi = 0.0;
};

/// Brute-force cover count of S(N, eps~) by length-a^N cells, sampled on a
/// uniform grid, against the counting bound of the covering argument. The
/// (N+1) factor converts the asymptotic e^{hN} bound on the number of index
/// sets into one valid for every N (binomial(N, k) <= (N+1) e^{hN}).
inline SSetCoverCount s_set_cover_count(double a, int n_levels, double eps_tilde_val,
                                        std::int64_t grid) {
  if (!(a > 0.0) || !(a < 1.0)) throw DomainError("a must be in (0,1)");
  if (n_levels < 1 || n_levels > 14) throw DomainError("brute force limited to N in [1,14]");
  if (!(eps_tilde_val >= 0.0)) throw DomainError("eps_tilde must be >= 0");
  const double cell = std::pow(a, n_levels);
  if (static_cast<double>(grid) < 10.0 / cell - 1e-6) {
    throw DomainError("grid must be at least 10 * a^{-N}");
  }
  if (grid > kMaxScanSamples) throw ResourceError("grid exceeds 1e8 samples");

  SSetCoverCount out;
  out.grid = grid;
  out.xi = a / (2.0 * (a + 1.0));
  out.cells = static_cast<std::int64_t>(ceil_snapped(std::pow(a, -n_levels)));
  std::vector<char> seen(static_cast<std::size_t>(out.cells), 0);
  for (std::int64_t i = 0; i <= grid; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(grid);
    if (!s_set_member(t, a, n_levels, eps_tilde_val)) continue;
    const std::int64_t c =
        std::min<std::int64_t>(static_cast<std::int64_t>(t / cell), out.cells - 1);
    seen[static_cast<std::size_t>(c)] = 1;
  }
  for (char f : seen) out.empirical += f;

  const double log_ceil = std::log(ceil_snapped(1.0 + 1.0 / a));
  const double h = entropy(std::min(eps_tilde_val, 1.0));
  out.bound = std::exp(log_ceil * (2.0 * eps_tilde_val * n_levels + 1.0) + h * n_levels) *
              static_cast<double>(n_levels + 1);
  return out;
}

inline void write_json(const SSetCoverCount& r, double a, int n_levels, double eps_tilde_val,
                       std::ostream& out) {
  JsonObjectWriter w(out);
  w.field("a", a)
      .field("n", n_levels)
      .field("eps_tilde", eps_tilde_val)
      .field("xi", r.xi)
      .field("grid", r.grid)
      .field("cells", r.cells)
      .field("empirical", r.empirical)
      .field("bound", r.bound)
      .field_bool("within_bound", static_cast<double>(r.empirical) <= r.bound);
  w.close();
}

}  // namespace selfsim

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/fourier.hpp"
#include "selfsim/io.hpp"
#include "selfsim/measure.hpp"
#include "selfsim/numeric.hpp"

namespace selfsim {

struct MomentRow {
  int n = 0;        // dyadic level: cells [k 2^-n, (k+1) 2^-n)
  double s_n = 0.0; // sum over cells of mass^q
  double max_q = 0.0;
};

struct MomentTable {
  double q = 2.0;
  std::vector<MomentRow> rows;
};

namespace detail {

// Aggregates atom weights into dyadic cells at one level. Atoms are sorted,
// so cell masses come from a single pass.
inline MomentRow moment_row(const DiscreteMeasure& x, int n, double q) {
  const double scale = std::exp2(n);
  MomentRow row;
  row.n = n;
  double s = 0.0, mx = 0.0;
  double cell_mass = 0.0;
  double cell_idx = std::floor(x.atoms.front().position * scale);
  auto flush = [&]() {
    s += q == 2.0 ? cell_mass * cell_mass : std::pow(cell_mass, q);
    mx = std::max(mx, cell_mass);
  };
  for (const Atom& a : x.atoms) {
    const double idx = std::floor(a.position * scale);
    if (idx != cell_idx) {
      flush();
      cell_mass = 0.0;
      cell_idx = idx;
    }
    cell_mass += a.weight;
  }
  flush();
  row.s_n = s;
  row.max_q = mx;
  return row;
}

}  // namespace detail

/// Dyadic moment sums s_n(mu, q) = sum_Q mu(Q)^q and max_Q mu(Q) for each
/// level n in [n_lo, n_hi]. Cells are anchored at integer multiples of 2^-n.
inline MomentTable moment_sums(const DiscreteMeasure& x, int n_lo, int n_hi, double q) {
  if (x.atoms.empty()) throw DomainError("empty measure");
  if (n_lo > n_hi) throw DomainError("level range is empty");
  if (!(q > 1.0)) throw DomainError("q must be > 1");
  MomentTable table;
  table.q = q;
  for (int n = n_lo; n <= n_hi; ++n) table.rows.push_back(detail::moment_row(x, n, q));
  return table;
}

inline void write_csv(const MomentTable& t, std::ostream& out) {
  out << "n,s_n,max_q\n";
  for (const MomentRow& r : t.rows) {
    out << r.n << ',' << fmt17(r.s_n) << ',' << fmt17(r.max_q) << '\n';
  }
}

struct DimEstimate {
  double value = 0.0;
  double stderr_value = 0.0;
  int n_lo_used = 0;
  int n_hi_used = 0;
  double sandwich_spread = 0.0;  // slope change between dilated/eroded cells
  bool sandwich_ok = true;
};

/// Slope fit of log s_n against (q-1) log(2^-n) over the table rows.
inline DimEstimate dim_q_from_table(const MomentTable& t, int drop_levels = 0) {
  if (static_cast<int>(t.rows.size()) - drop_levels < 2) {
    throw DomainError("need at least two levels after dropping transients");
  }
  std::vector<double> xs, ys;
  for (std::size_t i = static_cast<std::size_t>(drop_levels); i < t.rows.size(); ++i) {
    xs.push_back(-(t.q - 1.0) * t.rows[i].n * std::numbers::ln2);
    ys.push_back(std::log(t.rows[i].s_n));
  }
  const LineFit fit = fit_line(xs, ys);
  DimEstimate est;
  est.value = fit.slope;
  est.stderr_value = fit.slope_stderr;
  est.n_lo_used = t.rows[static_cast<std::size_t>(drop_levels)].n;
  est.n_hi_used = t.rows.back().n;
  return est;
}

/// Same for dim_inf: slope of log max_Q mu(Q) against log(2^-n).
inline DimEstimate dim_inf_from_table(const MomentTable& t, int drop_levels = 0) {
  if (static_cast<int>(t.rows.size()) - drop_levels < 2) {
    throw DomainError("need at least two levels after dropping transients");
  }
  std::vector<double> xs, ys;
  for (std::size_t i = static_cast<std::size_t>(drop_levels); i < t.rows.size(); ++i) {
    xs.push_back(-t.rows[i].n * std::numbers::ln2);
    ys.push_back(std::log(t.rows[i].max_q));
  }
  const LineFit fit = fit_line(xs, ys);
  DimEstimate est;
  est.value = fit.slope;
  est.stderr_value = fit.slope_stderr;
  est.n_lo_used = t.rows[static_cast<std::size_t>(drop_levels)].n;
  est.n_hi_used = t.rows.back().n;
  return est;
}

namespace detail {

// Cell masses with every cell dilated (pad > 0) or eroded (pad < 0) by |pad|
// on both ends; brackets the true masses of mu through mu_N, since mu and
// mu_N differ by a convolution factor supported in [-pad, pad].
inline MomentRow moment_row_padded(const DiscreteMeasure& x, int n, double q, double pad) {
  const double h = std::exp2(-n);
  std::vector<double> prefix(x.size() + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x.atoms[i].weight;
  auto mass_below = [&](double pos) {
    auto it = std::lower_bound(x.atoms.begin(), x.atoms.end(), pos,
                               [](const Atom& a, double v) { return a.position < v; });
    return prefix[static_cast<std::size_t>(it - x.atoms.begin())];
  };
  const auto lo_cell = static_cast<std::int64_t>(std::floor(x.atoms.front().position / h));
  const auto hi_cell = static_cast<std::int64_t>(std::floor(x.atoms.back().position / h));
  MomentRow row;
  row.n = n;
  for (std::int64_t k = lo_cell; k <= hi_cell; ++k) {
    const double lo = static_cast<double>(k) * h - pad;
    const double hi = static_cast<double>(k + 1) * h + pad;
    if (hi <= lo) continue;
    const double mass = mass_below(hi) - mass_below(lo);
    if (mass <= 0.0) continue;
    row.s_n += q == 2.0 ? mass * mass : std::pow(mass, q);
    row.max_q = std::max(row.max_q, mass);
  }
  return row;
}

struct DimInputs {
  DiscreteMeasure measure;
  double pad = 0.0;
};

inline DimInputs dim_inputs(const HomogeneousSSM& s, int n_hi, int approx_level,
                            double merge_tol) {
  // Dyadic cells live in the normalized coordinate frame.
  const HomogeneousSSM norm = normalize(s).ssm;
  const Interval supp = support_bounds(norm);
  const double displacement = std::pow(norm.a, approx_level) * supp.diameter();
  if (!(displacement < std::exp2(-n_hi - 3))) {
    throw DomainError("approx_level too small: atom displacement above cell resolution");
  }
  return DimInputs{discrete_approximation(norm, approx_level, merge_tol), displacement};
}

inline void add_sandwich(DimEstimate& est, const DiscreteMeasure& m, int n_lo, int n_hi,
                         double q, double pad, int drop, bool use_max) {
  MomentTable up, down;
  up.q = down.q = q;
  for (int n = n_lo; n <= n_hi; ++n) {
    up.rows.push_back(moment_row_padded(m, n, q, pad));
    down.rows.push_back(moment_row_padded(m, n, q, -pad));
  }
  for (const MomentRow& r : down.rows) {
    if (!(r.s_n > 0.0)) {  // erosion emptied a level; bracket uninformative
      est.sandwich_spread = std::numeric_limits<double>::infinity();
      est.sandwich_ok = false;
      return;
    }
  }
  const DimEstimate hi = use_max ? dim_inf_from_table(up, drop) : dim_q_from_table(up, drop);
  const DimEstimate lo =
      use_max ? dim_inf_from_table(down, drop) : dim_q_from_table(down, drop);
  est.sandwich_spread = std::abs(hi.value - lo.value);
  est.sandwich_ok = est.sandwich_spread <= 0.01;
}

}  // namespace detail

/// Finite-level estimate of dim_q through the level-`approx_level` discrete
/// approximation. The two smallest levels are dropped by default (transients
/// bias the asymptotic slope). Requires the atom displacement
/// a^approx_level * diam(supp) to stay below 2^-(n_hi+3).
inline DimEstimate dim_q_estimate(const HomogeneousSSM& s, double q, int n_lo, int n_hi,
                                  int approx_level, int drop_levels = 2,
                                  double merge_tol = kDefaultMergeTol) {
  const detail::DimInputs in = detail::dim_inputs(s, n_hi, approx_level, merge_tol);
  const MomentTable table = moment_sums(in.measure, n_lo, n_hi, q);
  DimEstimate est = dim_q_from_table(table, drop_levels);
  detail::add_sandwich(est, in.measure, n_lo, n_hi, q, in.pad, drop_levels, false);
  return est;
}

inline DimEstimate dim_inf_estimate(const HomogeneousSSM& s, int n_lo, int n_hi,
                                    int approx_level, int drop_levels = 2,
                                    double merge_tol = kDefaultMergeTol) {
  const detail::DimInputs in = detail::dim_inputs(s, n_hi, approx_level, merge_tol);
  const MomentTable table = moment_sums(in.measure, n_lo, n_hi, 2.0);
  DimEstimate est = dim_inf_from_table(table, drop_levels);
  detail::add_sandwich(est, in.measure, n_lo, n_hi, 2.0, in.pad, drop_levels, true);
  return est;
}

inline void write_json(const DimEstimate& e, std::ostream& out, std::string_view target) {
  JsonObjectWriter w(out);
  w.field("target", target)
      .field("value", e.value)
      .field("stderr", e.stderr_value)
      .field("n_lo_used", e.n_lo_used)
      .field("n_hi_used", e.n_hi_used)
      .field("sandwich_spread", e.sandwich_spread)
      .field_bool("sandwich_ok", e.sandwich_ok);
  w.close();
}

struct Alpha2Result {
  double alpha2 = 0.0;
  double dim2_via_fourier = 0.0;  // 1 - alpha2
  std::vector<double> t_list;
  std::vector<double> energy;  // integral of |mu^|^2 over [-T, T]
  double step = 0.0;
};

/// Growth exponent of the truncated Fourier energy from an arbitrary modulus
/// function; slope fit of log energy against log T over the given ladder.
template <typename ModulusFn>
Alpha2Result alpha2_from_modulus(ModulusFn&& modulus, const std::vector<double>& t_list,
                                 double step) {
  if (t_list.size() < 4) throw DomainError("need at least 4 ladder entries");
  for (std::size_t i = 0; i < t_list.size(); ++i) {
    if (!(t_list[i] > 0.0) || (i > 0 && t_list[i] <= t_list[i - 1])) {
      throw DomainError("t_list must be positive and increasing");
    }
  }
  if (!(step > 0.0)) throw DomainError("step must be positive");
  const double t_top = t_list.back();
  if (t_top / step > static_cast<double>(kMaxScanSamples)) {
    throw ResourceError("alpha2 grid exceeds 1e8 samples");
  }
  Alpha2Result out;
  out.t_list = t_list;
  out.step = step;
  std::vector<double> xs, ys;
  double integral = 0.0;
  double prev_sq = 1.0;  // |mu^(0)|^2
  std::size_t next = 0;
  const auto n = static_cast<std::int64_t>(std::ceil(t_top / step));
  for (std::int64_t i = 1; i <= n && next < t_list.size(); ++i) {
    const double xi = std::min(static_cast<double>(i) * step, t_top);
    const double m = modulus(xi);
    const double sq = m * m;
    integral += 0.5 * (prev_sq + sq) * (xi - static_cast<double>(i - 1) * step);
    prev_sq = sq;
    while (next < t_list.size() && xi >= t_list[next] - 0.5 * step) {
      out.energy.push_back(2.0 * integral);
      xs.push_back(std::log(t_list[next]));
      ys.push_back(std::log(2.0 * integral));
      ++next;
    }
  }
  const LineFit fit = fit_line(xs, ys);
  out.alpha2 = fit.slope;
  out.dim2_via_fourier = 1.0 - fit.slope;
  return out;
}

/// Default grid spacing for energy integrals: half of the derivative-rule
/// step 0.5 / (2 pi sup|x|), using the support envelope for sup|x|.
inline double alpha2_default_step(const HomogeneousSSM& s) {
  const Interval supp = support_bounds(s);
  return 0.25 / (2.0 * std::numbers::pi * std::max(supp.max_abs(), 1e-3));
}

inline Alpha2Result alpha2_estimate(const HomogeneousSSM& s, const std::vector<double>& t_list,
                                    double tol, double step = 0.0) {
  validate(s);
  if (step == 0.0) step = alpha2_default_step(s);
  return alpha2_from_modulus(
      [&](double xi) { return std::abs(fourier_transform(s, xi, tol).value); }, t_list, step);
}

inline void write_json(const Alpha2Result& r, std::ostream& out) {
  JsonObjectWriter w(out);
  w.field("alpha2", r.alpha2)
      .field("dim2_via_fourier", r.dim2_via_fourier)
      .field("step", r.step)
      .field_array("t_list", r.t_list)
      .field_array("energy", r.energy);
  w.close();
}

struct YoungCheck {
  double lhs = 0.0;  // max dyadic cell mass of x * y at the level
  double rhs = 0.0;  // 5 sqrt(s_n(x,2) s_n(y,2))
  bool pass = false;
};

/// Convolution bound from Young's inequality: the max level-n cell mass of
/// x * y never exceeds 5 sqrt(s_n(x,2) s_n(y,2)). Failure means a bug.
inline YoungCheck young_check(const DiscreteMeasure& x, const DiscreteMeasure& y, int n,
                              double merge_tol = kDefaultMergeTol) {
  const DiscreteMeasure conv = convolve(x, y, merge_tol);
  YoungCheck out;
  out.lhs = detail::moment_row(conv, n, 2.0).max_q;
  out.rhs = 5.0 * std::sqrt(detail::moment_row(x, n, 2.0).s_n *
                            detail::moment_row(y, n, 2.0).s_n);
  out.pass = out.lhs <= out.rhs * (1.0 + 1e-12);
  return out;
}

}  // namespace selfsim

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/numeric.hpp"

namespace selfsim {

inline constexpr double kDefaultMergeTol = 1e-12;
inline constexpr double kMassTol = 1e-10;
inline constexpr std::size_t kMaxAtoms = std::size_t{1} << 26;

/// Parameters (a, t, p) of the homogeneous self-similar measure generated by
/// the maps x -> a*x + t_i chosen with probabilities p_i, i.e. the
/// distribution of sum_{n>=1} a^n T_n with P(T_n = t_i) = p_i.
struct HomogeneousSSM {
  double a = 0.0;
  std::vector<double> t;
  std::vector<double> p;

  std::size_t alphabet_size() const { return t.size(); }
  bool normalized() const {
    return t.size() >= 2 && t[0] == 0.0 && t[1] == 1.0;
  }
};

inline void validate(const HomogeneousSSM& s) {
  if (!(s.a > 0.0) || !(s.a < 1.0)) {
    throw DomainError("contraction ratio must be in (0,1)");
  }
  if (s.t.size() < 2 || s.t.size() != s.p.size()) {
    throw DomainError("need at least two translations, one weight each");
  }
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    for (std::size_t j = i + 1; j < s.t.size(); ++j) {
      if (s.t[i] == s.t[j]) throw DomainError("translations must be pairwise distinct");
    }
  }
  double mass = 0.0;
  for (double w : s.p) {
    if (!(w > 0.0)) throw DomainError("weights must be strictly positive");
    mass += w;
  }
  if (std::abs(mass - 1.0) > 1e-12) {
    throw DomainError("weights must sum to 1 within 1e-12");
  }
}

inline HomogeneousSSM make_ssm(double a, std::vector<double> t, std::vector<double> p) {
  HomogeneousSSM s{a, std::move(t), std::move(p)};
  validate(s);
  return s;
}

/// Bernoulli convolution nu_a^p in normalized coordinates: the +/-1 alphabet
/// is replaced by its affine image t = (0, 1), which leaves all decay moduli
/// and dimensions unchanged.
inline HomogeneousSSM bernoulli_ssm(double a, double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw DomainError("bernoulli weight must be in (0,1)");
  return make_ssm(a, {0.0, 1.0}, {p, 1.0 - p});
}

/// Affine map recorded by normalize(): applied to translations as
/// s -> (s - shift) / scale.
struct AffineMap {
  double shift = 0.0;
  double scale = 1.0;
};

struct NormalizeResult {
  HomogeneousSSM ssm;
  AffineMap map;
};

/// Affine change of coordinates bringing the alphabet to t1 = 0, t2 = 1.
/// a and p are unchanged.
inline NormalizeResult normalize(const HomogeneousSSM& raw) {
  validate(raw);
  const double t1 = raw.t[0];
  const double t2 = raw.t[1];
  if (t1 == t2) throw DomainError("degenerate alphabet: t1 == t2");
  NormalizeResult out;
  out.map = AffineMap{t1, t2 - t1};
  out.ssm = raw;
  for (double& s : out.ssm.t) s = (s - t1) / (t2 - t1);
  out.ssm.t[0] = 0.0;
  out.ssm.t[1] = 1.0;
  validate(out.ssm);
  return out;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double diameter() const { return hi - lo; }
  double max_abs() const { return std::max(std::abs(lo), std::abs(hi)); }
};

/// Geometric-series envelope of sum a^n t: supp(mu) is contained in the
/// returned interval.
inline Interval support_bounds(const HomogeneousSSM& s) {
  validate(s);
  const auto [mn, mx] = std::minmax_element(s.t.begin(), s.t.end());
  return Interval{s.a * (*mn) / (1.0 - s.a), s.a * (*mx) / (1.0 - s.a)};
}

struct Atom {
  double position = 0.0;
  double weight = 0.0;
};

/// Finite measure given by a sorted atom list. After construction positions
/// are strictly increasing with gaps larger than the merge tolerance, and the
/// total mass is 1 within 1e-10.
struct DiscreteMeasure {
  std::vector<Atom> atoms;

  std::size_t size() const { return atoms.size(); }
  double total_mass() const {
    double sum = 0.0, c = 0.0;
    for (const Atom& a : atoms) {
      double y = a.weight - c;
      double t = sum + y;
      c = (t - sum) - y;
      sum = t;
    }
    return sum;
  }
  Interval extent() const {
    if (atoms.empty()) return {};
    return Interval{atoms.front().position, atoms.back().position};
  }
};

namespace detail {

// Sort + one linear merge pass. A cluster grows while the next atom is within
// merge_tol of the previous one; cluster means then stay > merge_tol apart.
inline DiscreteMeasure finalize_atoms(std::vector<Atom> raw, double merge_tol,
                                      double expected_mass) {
  if (raw.empty()) throw DomainError("measure needs at least one atom");
  if (!(merge_tol >= 0.0)) throw DomainError("merge tolerance must be >= 0");
  std::sort(raw.begin(), raw.end(),
            [](const Atom& x, const Atom& y) { return x.position < y.position; });
  DiscreteMeasure out;
  out.atoms.reserve(raw.size());
  double cluster_w = raw[0].weight;
  double cluster_wx = raw[0].weight * raw[0].position;
  double prev_pos = raw[0].position;
  for (std::size_t i = 1; i < raw.size(); ++i) {
    if (!(raw[i].weight > 0.0)) throw DomainError("atom weights must be positive");
    if (raw[i].position - prev_pos <= merge_tol) {
      cluster_w += raw[i].weight;
      cluster_wx += raw[i].weight * raw[i].position;
    } else {
      out.atoms.push_back(Atom{cluster_wx / cluster_w, cluster_w});
      cluster_w = raw[i].weight;
      cluster_wx = raw[i].weight * raw[i].position;
    }
    prev_pos = raw[i].position;
  }
  out.atoms.push_back(Atom{cluster_wx / cluster_w, cluster_w});
  const double mass = out.total_mass();
  if (std::abs(mass - expected_mass) > kMassTol) {
    throw DomainError("atom weights sum to " + std::to_string(mass) +
                      ", expected " + std::to_string(expected_mass));
  }
  return out;
}

}  // namespace detail

inline DiscreteMeasure make_measure(std::vector<Atom> atoms,
                                    double merge_tol = kDefaultMergeTol) {
  return detail::finalize_atoms(std::move(atoms), merge_tol, 1.0);
}

inline DiscreteMeasure dirac(double x) { return DiscreteMeasure{{Atom{x, 1.0}}}; }

/// The single convolution layer sum_i p_i delta(a^level t_i).
inline DiscreteMeasure level_layer(const HomogeneousSSM& s, int level) {
  validate(s);
  if (level < 1) throw DomainError("level must be >= 1");
  const double an = std::pow(s.a, level);
  std::vector<Atom> atoms;
  atoms.reserve(s.t.size());
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    atoms.push_back(Atom{an * s.t[i], s.p[i]});
  }
  return detail::finalize_atoms(std::move(atoms), 0.0, 1.0);
}

/// mu_N: the level-N discrete approximation, i.e. the distribution of
/// sum_{n=1}^{N} a^n T_n. Enumerates all m^N words, then sorts and merges.
inline DiscreteMeasure discrete_approximation(const HomogeneousSSM& s, int levels,
                                              double merge_tol = kDefaultMergeTol) {
  validate(s);
  if (levels < 1) throw DomainError("levels must be >= 1");
  const std::size_t m = s.alphabet_size();
  double count = 1.0;
  for (int n = 0; n < levels; ++n) {
    count *= static_cast<double>(m);
    if (count > static_cast<double>(kMaxAtoms)) {
      throw ResourceError("discrete approximation would need " +
                          std::to_string(count) + " atoms (guard 2^26)");
    }
  }
  std::vector<Atom> atoms{Atom{0.0, 1.0}};
  double an = 1.0;
  for (int n = 1; n <= levels; ++n) {
    an *= s.a;
    std::vector<Atom> next;
    next.reserve(atoms.size() * m);
    for (const Atom& atom : atoms) {
      for (std::size_t i = 0; i < m; ++i) {
        next.push_back(Atom{atom.position + an * s.t[i], atom.weight * s.p[i]});
      }
    }
    atoms.swap(next);
  }
  return detail::finalize_atoms(std::move(atoms), merge_tol, 1.0);
}

/// Convolution: atoms at all pairwise sums with multiplied weights, merged.
inline DiscreteMeasure convolve(const DiscreteMeasure& x, const DiscreteMeasure& y,
                                double merge_tol = kDefaultMergeTol) {
  if (x.atoms.empty() || y.atoms.empty()) throw DomainError("empty measure");
  if (x.size() > kMaxAtoms / y.size()) {
    throw ResourceError("convolution would need " + std::to_string(x.size()) + " * " +
                        std::to_string(y.size()) + " atoms (guard 2^26)");
  }
  std::vector<Atom> atoms;
  atoms.reserve(x.size() * y.size());
  for (const Atom& ax : x.atoms) {
    for (const Atom& ay : y.atoms) {
      atoms.push_back(Atom{ax.position + ay.position, ax.weight * ay.weight});
    }
  }
  return detail::finalize_atoms(std::move(atoms), merge_tol, 1.0);
}

/// Pushforward under x -> c*x. c = 0 collapses to a point mass at 0.
inline DiscreteMeasure scale(const DiscreteMeasure& x, double c) {
  if (x.atoms.empty()) throw DomainError("empty measure");
  if (c == 0.0) return dirac(0.0);
  std::vector<Atom> atoms = x.atoms;
  for (Atom& a : atoms) a.position *= c;
  if (c < 0.0) std::reverse(atoms.begin(), atoms.end());
  return detail::finalize_atoms(std::move(atoms), kDefaultMergeTol, 1.0);
}

}  // namespace selfsim

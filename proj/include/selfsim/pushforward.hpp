#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "selfsim/constants.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/fourier.hpp"
#include "selfsim/io.hpp"
#include "selfsim/measure.hpp"
#include "selfsim/numeric.hpp"

namespace selfsim {

inline constexpr int kMaxPolyDegree = 6;

/// C^2 map from the restricted grammar: a polynomial of degree <= 6 plus
/// exponential terms c * exp(k * x), with exact symbolic derivatives.
class SmoothMap {
 public:
  SmoothMap() = default;
  SmoothMap(std::array<double, kMaxPolyDegree + 1> poly,
            std::vector<std::pair<double, double>> exps, std::string text)
      : poly_(poly), exps_(std::move(exps)), text_(std::move(text)) {}

  double value(double x) const {
    double acc = 0.0;
    for (int d = kMaxPolyDegree; d >= 0; --d) acc = acc * x + poly_[static_cast<std::size_t>(d)];
    for (const auto& [c, k] : exps_) acc += c * std::exp(k * x);
    return acc;
  }
  double d1(double x) const {
    double acc = 0.0;
    for (int d = kMaxPolyDegree; d >= 1; --d) {
      acc = acc * x + static_cast<double>(d) * poly_[static_cast<std::size_t>(d)];
    }
    for (const auto& [c, k] : exps_) acc += c * k * std::exp(k * x);
    return acc;
  }
  double d2(double x) const {
    double acc = 0.0;
    for (int d = kMaxPolyDegree; d >= 2; --d) {
      acc = acc * x + static_cast<double>(d) * static_cast<double>(d - 1) *
                          poly_[static_cast<std::size_t>(d)];
    }
    for (const auto& [c, k] : exps_) acc += c * k * k * std::exp(k * x);
    return acc;
  }

  const std::string& text() const { return text_; }

 private:
  std::array<double, kMaxPolyDegree + 1> poly_{};
  std::vector<std::pair<double, double>> exps_;
  std::string text_;
};

namespace detail {

class MapParser {
 public:
  explicit MapParser(std::string_view src) : src_(src) {}

  SmoothMap parse() {
    std::array<double, kMaxPolyDegree + 1> poly{};
    std::vector<std::pair<double, double>> exps;
    double sign = 1.0;
    skip_ws();
    if (peek() == '+' || peek() == '-') sign = take() == '-' ? -1.0 : 1.0;
    parse_term(sign, poly, exps);
    skip_ws();
    while (pos_ < src_.size()) {
      const char op = take();
      if (op != '+' && op != '-') throw ParseError("expected '+' or '-'", pos_ - 1);
      parse_term(op == '-' ? -1.0 : 1.0, poly, exps);
      skip_ws();
    }
    return SmoothMap{poly, std::move(exps), std::string(src_)};
  }

 private:
  // term := number | [number '*'] 'x' ['^' digit] | [number '*'] 'exp' '(' number '*' 'x' ')'
  void parse_term(double sign, std::array<double, kMaxPolyDegree + 1>& poly,
                  std::vector<std::pair<double, double>>& exps) {
    skip_ws();
    double coef = 1.0;
    bool saw_coef = false;
    if (peek() == '.' || std::isdigit(static_cast<unsigned char>(peek()))) {
      coef = parse_number();
      saw_coef = true;
      skip_ws();
      if (peek() == '*') {
        take();
        skip_ws();
      } else {
        poly[0] += sign * coef;  // plain constant term
        return;
      }
    }
    skip_ws();
    if (peek() == 'x') {
      take();
      int degree = 1;
      skip_ws();
      if (peek() == '^') {
        take();
        skip_ws();
        degree = parse_degree();
      }
      poly[static_cast<std::size_t>(degree)] += sign * coef;
      return;
    }
    if (src_.substr(pos_).starts_with("exp")) {
      pos_ += 3;
      skip_ws();
      expect('(');
      skip_ws();
      const double rate = parse_signed_number();
      skip_ws();
      expect('*');
      skip_ws();
      expect('x');
      skip_ws();
      expect(')');
      exps.emplace_back(sign * coef, rate);
      return;
    }
    if (saw_coef) throw ParseError("expected 'x' or 'exp' after coefficient", pos_);
    throw ParseError("expected a term", pos_);
  }

  int parse_degree() {
    if (!std::isdigit(static_cast<unsigned char>(peek()))) {
      throw ParseError("expected integer exponent", pos_);
    }
    int d = 0;
    while (std::isdigit(static_cast<unsigned char>(peek()))) d = d * 10 + (take() - '0');
    if (d > kMaxPolyDegree) throw ParseError("polynomial degree exceeds 6", pos_);
    return d;
  }

  double parse_signed_number() {
    double sign = 1.0;
    if (peek() == '+' || peek() == '-') sign = take() == '-' ? -1.0 : 1.0;
    skip_ws();
    return sign * parse_number();
  }

  double parse_number() {
    const std::size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') ++pos_;
    if (peek() == 'e' || peek() == 'E') {
      ++pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if (pos_ == start) throw ParseError("expected a number", pos_);
    try {
      return std::stod(std::string(src_.substr(start, pos_ - start)));
    } catch (const std::exception&) {
      throw ParseError("malformed number", start);
    }
  }

  void expect(char c) {
    if (peek() != c) throw ParseError(std::string("expected '") + c + "'", pos_);
    take();
  }
  char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }
  char take() { return src_[pos_++]; }
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

inline constexpr int kConvexitySamples = 1000;

inline double sampled_sup_abs_d1(const SmoothMap& map, Interval supp) {
  double sup = 0.0;
  for (int i = 0; i <= 2048; ++i) {
    const double x = supp.lo + (supp.hi - supp.lo) * static_cast<double>(i) / 2048.0;
    sup = std::max(sup, std::abs(map.d1(x)));
  }
  return sup;
}

}  // namespace detail

inline SmoothMap parse_map(std::string_view text) {
  if (text.empty()) throw ParseError("empty map expression", 0);
  return detail::MapParser(text).parse();
}

/// F'' > 0 sampled on 1000 support points; hard error on any violation.
/// Required wherever the decay theorem is invoked (kaufman_verify); plain
/// transform evaluation does not need it.
inline void require_strictly_convex(const SmoothMap& map, Interval supp) {
  for (int i = 0; i <= detail::kConvexitySamples; ++i) {
    const double x = supp.lo + (supp.hi - supp.lo) * static_cast<double>(i) /
                                   static_cast<double>(detail::kConvexitySamples);
    if (!(map.d2(x) > 0.0)) {
      throw DomainError("map is not strictly convex on the support (F''(" +
                        std::to_string(x) + ") <= 0)");
    }
  }
}

struct PushforwardValue {
  std::complex<double> value;
  double err = 0.0;  // absolute bound on the atom-replacement error
  int level = 0;     // discrete-approximation level used
};

namespace detail {

struct PushforwardEvaluator {
  PushforwardEvaluator(const HomogeneousSSM& s, const SmoothMap& map)
      : ssm(s), supp(support_bounds(s)), fmap(map) {
    sup_d1 = sampled_sup_abs_d1(map, supp);
  }

  // Smallest level M with 2 pi |u| sup|F'| a^M diam(supp) <= tol.
  int level_for(double u, double tol) const {
    const double c = 2.0 * std::numbers::pi * std::abs(u) * sup_d1 * supp.diameter();
    if (c <= tol) return 1;
    double guess = std::log(tol / c) / std::log(ssm.a);
    int level = std::max(1, static_cast<int>(std::ceil(guess)));
    while (c * std::pow(ssm.a, level) > tol) ++level;
    while (level > 1 && c * std::pow(ssm.a, level - 1) <= tol) --level;
    return level;
  }

  double max_feasible_u(double tol) const {
    const double c0 = 2.0 * std::numbers::pi * sup_d1 * supp.diameter();
    const int max_level = static_cast<int>(std::floor(
        26.0 * std::numbers::ln2 / std::log(static_cast<double>(ssm.alphabet_size()))));
    return tol / (c0 * std::pow(ssm.a, max_level));
  }

  struct CachedLevel {
    std::vector<double> fx;
    std::vector<double> w;
  };

  const CachedLevel& mapped_atoms(int level) {
    auto it = cache.find(level);
    if (it == cache.end()) {
      const DiscreteMeasure m = discrete_approximation(ssm, level);
      CachedLevel cl;
      cl.fx.reserve(m.size());
      cl.w.reserve(m.size());
      for (const Atom& a : m.atoms) {
        cl.fx.push_back(fmap.value(a.position));
        cl.w.push_back(a.weight);
      }
      it = cache.emplace(level, std::move(cl)).first;
    }
    return it->second;
  }

  PushforwardValue evaluate(double u, double tol) {
    if (!(tol > 0.0) || tol > 0.1) throw DomainError("tol must be in (0, 0.1]");
    if (u == 0.0) return PushforwardValue{{1.0, 0.0}, 0.0, 0};
    const int level = level_for(u, tol);
    double count = 1.0;
    for (int n = 0; n < level; ++n) count *= static_cast<double>(ssm.alphabet_size());
    if (count > static_cast<double>(kMaxAtoms)) {
      throw ResourceError("pushforward at |u| = " + std::to_string(std::abs(u)) +
                          " needs level " + std::to_string(level) +
                          " (guard 2^26 atoms); largest feasible |u| at this tol is about " +
                          std::to_string(max_feasible_u(tol)));
    }
    const CachedLevel& cl = mapped_atoms(level);
    double re = 0.0, im = 0.0;
    const double omega = 2.0 * std::numbers::pi * u;
    for (std::size_t i = 0; i < cl.fx.size(); ++i) {
      const double phase = omega * cl.fx[i];
      re += cl.w[i] * std::cos(phase);
      im += cl.w[i] * std::sin(phase);
    }
    const double err =
        2.0 * std::numbers::pi * std::abs(u) * sup_d1 * std::pow(ssm.a, level) * supp.diameter();
    return PushforwardValue{{re, im}, err, level};
  }

  HomogeneousSSM ssm;
  Interval supp;
  SmoothMap fmap;
  double sup_d1 = 0.0;
  std::map<int, CachedLevel> cache;
};

}  // namespace detail

/// (F mu)^(u) = sum over mu_M atoms of w e^{2 pi i u F(x)}, with M chosen so
/// the first-order atom-replacement error 2 pi |u| sup|F'| a^M diam(supp)
/// stays below tol.
inline PushforwardValue pushforward_ft(const HomogeneousSSM& s, const SmoothMap& map, double u,
                                       double tol) {
  validate(s);
  detail::PushforwardEvaluator ev(s, map);
  return ev.evaluate(u, tol);
}

struct OctaveRow {
  int k = 0;
  double u_lo = 0.0;
  double u_hi = 0.0;
  double envelope = 0.0;
  double u_at_max = 0.0;
};

struct DecayFit {
  std::vector<OctaveRow> octaves;
  double sigma_emp = 0.0;
  double c_fit = 0.0;
  double fit_rms = 0.0;
  int samples_per_octave = 0;
};

inline constexpr int kFitOctaveMin = 4;
inline constexpr double kGoldenFrac = 0.6180339887498949;

namespace detail {

// Sample points for one octave: an additive-recurrence low-discrepancy
// sequence, plus resonance probes m * a^{-j} (small integer multiples of the
// reciprocal contraction powers). The probes matter: the frequencies where
// the transform of a lattice-like measure stays large sit in narrow windows
// around those points, which equidistributed samples miss at high octaves.
inline std::vector<double> octave_points(double lo, double hi, int count, double a) {
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(count) + 64);
  double frac = 0.5;
  for (int i = 0; i < count; ++i) {
    frac += kGoldenFrac;
    frac -= std::floor(frac);
    pts.push_back(lo + (hi - lo) * frac);
  }
  for (int j = 1;; ++j) {
    const double base = std::pow(a, -j);
    if (!(base < hi)) break;
    auto m = static_cast<std::int64_t>(std::ceil(lo / base));
    if (m < 1) m = 1;
    for (; m <= 64 && static_cast<double>(m) * base < hi; ++m) {
      const double u = static_cast<double>(m) * base;
      if (u >= lo) pts.push_back(u);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

template <typename ModulusFn>
DecayFit decay_fit_impl(ModulusFn&& modulus, double a, double u_max, int samples_per_octave) {
  if (!(u_max >= 256.0)) throw DomainError("u_max must be at least 2^8");
  if (samples_per_octave < 64) throw DomainError("need at least 64 samples per octave");
  int k_top = kFitOctaveMin;
  while (std::exp2(k_top + 2) <= u_max) ++k_top;  // complete octaves only
  if (k_top - kFitOctaveMin + 1 < 2) throw DomainError("frequency range too short to fit");
  DecayFit fit;
  fit.samples_per_octave = samples_per_octave;
  std::vector<double> xs, ys;
  for (int k = kFitOctaveMin; k <= k_top; ++k) {
    const double lo = std::exp2(k);
    const double hi = std::exp2(k + 1);
    OctaveRow row;
    row.k = k;
    row.u_lo = lo;
    row.u_hi = hi;
    row.envelope = -1.0;
    for (double u : octave_points(lo, hi, samples_per_octave, a)) {
      const double v = modulus(u);
      if (v > row.envelope) {
        row.envelope = v;
        row.u_at_max = u;
      }
    }
    fit.octaves.push_back(row);
    xs.push_back(std::log(row.u_at_max));
    ys.push_back(std::log(std::max(row.envelope, 1e-300)));
  }
  const LineFit line = fit_line(xs, ys);
  fit.sigma_emp = -line.slope;
  fit.c_fit = std::exp(line.intercept);
  fit.fit_rms = line.rms_residual;
  return fit;
}

}  // namespace detail

/// Per-octave envelope of |(F mu)^| over [2^4, u_max] (complete octaves) and
/// the fitted power-law exponent: envelope ~ c_fit * u^{-sigma_emp}.
inline DecayFit decay_fit(const HomogeneousSSM& s, const SmoothMap& map, double u_max,
                          int samples_per_octave, double tol) {
  validate(s);
  detail::PushforwardEvaluator ev(s, map);
  return detail::decay_fit_impl(
      [&](double u) { return std::abs(ev.evaluate(u, tol).value); }, s.a, u_max,
      samples_per_octave);
}

/// Envelope fit for an arbitrary modulus function (`a` only seeds the probe
/// frequencies).
template <typename ModulusFn>
DecayFit decay_fit_modulus(ModulusFn&& modulus, double a, double u_max,
                           int samples_per_octave) {
  return detail::decay_fit_impl(std::forward<ModulusFn>(modulus), a, u_max,
                                samples_per_octave);
}

inline void write_csv(const DecayFit& fit, std::ostream& out) {
  out << "octave,u_lo,u_hi,envelope\n";
  for (const OctaveRow& r : fit.octaves) {
    out << r.k << ',' << fmt17(r.u_lo) << ',' << fmt17(r.u_hi) << ',' << fmt17(r.envelope)
        << '\n';
  }
}

struct KaufmanReport {
  double s = 0.0;
  bool s_from_osc = false;
  double eps_star = 0.0;
  double sigma_theory = 0.0;
  double sigma_emp = 0.0;
  double c_fit = 0.0;
  bool pass = false;
  DecayFit fit;
};

/// Verifies the decay theorem at one parameter set: the fitted empirical
/// exponent must reach the theoretical lower bound sigma = eps*/3 up to a
/// 0.005 fitting allowance. Returns a report (never throws on a failed
/// verification).
inline KaufmanReport kaufman_verify(const HomogeneousSSM& s, const SmoothMap& map,
                                    std::optional<double> s_frostman, double u_max,
                                    int samples_per_octave, double tol, EtaMode mode,
                                    DeltaVariant variant = DeltaVariant::stated) {
  validate(s);
  require_strictly_convex(map, support_bounds(s));
  KaufmanReport report;
  if (s_frostman.has_value()) {
    report.s = *s_frostman;
  } else {
    report.s = frostman_exponent_osc(s.a, s.p).s;
    report.s_from_osc = true;
  }
  const KaufmanResult ek = kaufman_sigma(s.a, s.p, report.s, mode, variant);
  report.eps_star = ek.eps_star;
  report.sigma_theory = ek.sigma;
  report.fit = decay_fit(s, map, u_max, samples_per_octave, tol);
  report.sigma_emp = report.fit.sigma_emp;
  report.c_fit = report.fit.c_fit;
  report.pass = report.sigma_emp >= report.sigma_theory - 0.005;
  return report;
}

inline void write_json(const DecayFit& fit, std::ostream& out) {
  JsonObjectWriter w(out);
  w.field("sigma_emp", fit.sigma_emp)
      .field("c_fit", fit.c_fit)
      .field("fit_rms", fit.fit_rms)
      .field("samples_per_octave", fit.samples_per_octave)
      .field("octaves", static_cast<std::int64_t>(fit.octaves.size()));
  w.close();
}

inline void write_json(const KaufmanReport& r, std::ostream& out) {
  JsonObjectWriter w(out);
  w.field("sigma_emp", r.sigma_emp)
      .field("c_fit", r.c_fit)
      .field("sigma_theory", r.sigma_theory)
      .field("eps_star", r.eps_star)
      .field("s", r.s)
      .field_bool("s_from_osc", r.s_from_osc)
      .field_bool("pass", r.pass);
  w.close();
}

}  // namespace selfsim

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/io.hpp"
#include "selfsim/measure.hpp"

namespace selfsim {

/// Phi(u) = sum_j p_j e^{2 pi i t_j u}: the Fourier transform of one
/// convolution layer. |Phi| <= 1 with equality at u = 0.
///
/// Sign convention: e^{+2 pi i xi x} throughout; every quantity this library
/// reports is a modulus, so the convention never shows in results.
inline std::complex<double> phi(const HomogeneousSSM& s, double u) {
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t j = 0; j < s.t.size(); ++j) {
    acc += s.p[j] * std::polar(1.0, 2.0 * std::numbers::pi * s.t[j] * u);
  }
  return acc;
}

struct FourierValue {
  std::complex<double> value;
  double err = 0.0;  // relative truncation bound: |mu^| in |value| * (1 +- err)
  int levels = 0;    // number of Phi factors used
};

/// Truncated infinite product mu^(u) = prod_{n=1}^{M} Phi(a^n u) with the
/// smallest M whose tail bound exp(2 pi t_max |u| a^{M+1} / (1-a)) - 1 is at
/// most tol. The bound follows from |Phi(v) - 1| <= 2 pi t_max |v|.
inline FourierValue fourier_transform(const HomogeneousSSM& s, double u, double tol) {
  validate(s);
  if (!(tol > 0.0) || tol > 0.1) throw DomainError("tol must be in (0, 0.1]");
  if (u == 0.0) return FourierValue{{1.0, 0.0}, 0.0, 0};
  double t_max = 0.0;
  for (double tj : s.t) t_max = std::max(t_max, std::abs(tj));
  const double c = 2.0 * std::numbers::pi * t_max * std::abs(u) / (1.0 - s.a);
  const double lim = std::log1p(tol);  // tail exponent threshold
  int levels = 0;
  if (c * s.a > lim) {
    double guess = std::log(lim / c) / std::log(s.a) - 1.0;
    levels = guess > 0.0 ? static_cast<int>(std::ceil(guess)) : 0;
    while (c * std::pow(s.a, levels + 1) > lim) ++levels;
    while (levels > 0 && c * std::pow(s.a, levels) <= lim) --levels;
  }
  std::complex<double> value{1.0, 0.0};
  double x = u;
  for (int n = 1; n <= levels; ++n) {
    x *= s.a;
    value *= phi(s, x);
  }
  return FourierValue{value, std::expm1(c * std::pow(s.a, levels + 1)), levels};
}

struct ScanEntry {
  double xi = 0.0;
  double modulus = 0.0;
  double err = 0.0;
};

/// Sampled |mu^| over the non-negative half axis; |mu^(-xi)| = |mu^(xi)|.
struct FrequencyScan {
  std::vector<ScanEntry> entries;
  double t_max = 0.0;
  double step = 0.0;
  double tol = 0.0;
};

inline constexpr std::int64_t kMaxScanSamples = 100'000'000;

/// Samples xi = 0, step, 2*step, ..., <= t_max in ascending order.
inline FrequencyScan scan(const HomogeneousSSM& s, double t_max, double step, double tol) {
  validate(s);
  if (!(step > 0.0)) throw DomainError("step must be positive");
  if (!(t_max >= 0.0)) throw DomainError("t_max must be non-negative");
  const double approx = t_max / step + 1.0;
  if (approx > static_cast<double>(kMaxScanSamples)) {
    throw ResourceError("scan would need about " + std::to_string(approx) +
                        " samples (guard 1e8)");
  }
  FrequencyScan out;
  out.t_max = t_max;
  out.step = step;
  out.tol = tol;
  const std::int64_t n = static_cast<std::int64_t>(std::floor(t_max / step * (1.0 + 1e-15)));
  out.entries.reserve(static_cast<std::size_t>(n) + 1);
  for (std::int64_t i = 0; i <= n; ++i) {
    const double xi = static_cast<double>(i) * step;
    const FourierValue fv = fourier_transform(s, xi, tol);
    out.entries.push_back(ScanEntry{xi, std::abs(fv.value), fv.err});
  }
  return out;
}

inline void write_csv(const FrequencyScan& sc, std::ostream& out) {
  out << "xi,modulus,err\n";
  for (const ScanEntry& e : sc.entries) {
    out << fmt17(e.xi) << ',' << fmt17(e.modulus) << ',' << fmt17(e.err) << '\n';
  }
}

}  // namespace selfsim

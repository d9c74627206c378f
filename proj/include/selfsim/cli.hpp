#pragma once

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selfsim/constants.hpp"
#include "selfsim/covering.hpp"
#include "selfsim/dimension.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/fourier.hpp"
#include "selfsim/measure.hpp"
#include "selfsim/pushforward.hpp"

namespace selfsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitVerifyFailed = 3;

namespace detail {

inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw DomainError("cannot parse '" + item + "' as a number");
    }
  }
  if (out.empty()) throw DomainError("empty list");
  return out;
}

inline EtaMode parse_mode(const std::string& text, const std::vector<double>& p) {
  if (text == "auto") return default_eta_mode(p);
  if (text == "lemma") return EtaMode::lemma;
  if (text == "remark") return EtaMode::remark;
  throw DomainError("mode must be auto, lemma or remark");
}

inline DeltaVariant parse_variant(const std::string& text) {
  if (text == "stated") return DeltaVariant::stated;
  if (text == "conservative") return DeltaVariant::conservative;
  throw DomainError("variant must be stated or conservative");
}

inline std::optional<double> parse_auto(const std::string& text, const char* what) {
  if (text == "auto") return std::nullopt;
  try {
    return std::stod(text);
  } catch (const std::exception&) {
    throw DomainError(std::string("cannot parse ") + what + " value '" + text + "'");
  }
}

inline void emit(const std::string& path, const std::function<void(std::ostream&)>& writer) {
  if (path.empty()) {
    writer(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw DomainError("cannot open output file " + path);
  writer(out);
}

struct SsmFlags {
  std::string t_list = "0,1";
  std::string p_list = "0.5,0.5";
  double a = 0.0;

  void attach(CLI::App* cmd, bool with_t = true) {
    cmd->add_option("--a", a, "contraction ratio in (0,1)")->required();
    if (with_t) cmd->add_option("--t", t_list, "translations, comma separated");
    cmd->add_option("--p", p_list, "probability weights, comma separated");
  }
  HomogeneousSSM build() const { return make_ssm(a, parse_list(t_list), parse_list(p_list)); }
  std::vector<double> weights() const { return parse_list(p_list); }
};

}  // namespace detail

/// Dispatches one CLI invocation. `args` excludes the program name.
/// Exit codes: 0 success, 2 validation/usage error, 3 verification failure.
inline int run(const std::vector<std::string>& args) {
  CLI::App app{"Fourier decay and dimension toolkit for homogeneous self-similar measures"};
  app.require_subcommand(1);

  // ---- constants ----
  auto* c_cmd = app.add_subcommand(
      "constants", "effective constants (eta, eps~, delta, eps*, sigma) at one parameter set");
  detail::SsmFlags c_ssm;
  c_cmd->add_option("--a", c_ssm.a, "contraction ratio in (0,1)")->required();
  c_cmd->add_option("--p", c_ssm.p_list, "probability weights, comma separated");
  std::string c_s = "auto", c_mode = "auto", c_variant = "stated", c_out;
  double c_kappa = 0.0;
  c_cmd->add_option("--s", c_s,
                    "Frostman exponent; 'auto' uses the open-set-condition closed form "
                    "(OSC is asserted, not checked)");
  c_cmd->add_option("--kappa", c_kappa, "run the flattening chain at this kappa instead");
  c_cmd->add_option("--mode", c_mode, "eta mode: auto|lemma|remark");
  c_cmd->add_option("--variant", c_variant, "delta variant: stated|conservative");
  c_cmd->add_option("--out", c_out, "output JSON path (default stdout)");

  // ---- scan ----
  auto* s_cmd = app.add_subcommand("scan", "sample |mu^| on a frequency grid (CSV)");
  detail::SsmFlags s_ssm;
  s_ssm.attach(s_cmd);
  double s_tmax = 0.0, s_step = 0.0, s_tol = 1e-9;
  std::string s_out;
  s_cmd->add_option("--tmax", s_tmax, "largest frequency")->required();
  s_cmd->add_option("--step", s_step, "grid spacing")->required();
  s_cmd->add_option("--tol", s_tol, "truncation tolerance");
  s_cmd->add_option("--out", s_out, "output CSV path (default stdout)");

  // ---- cover ----
  auto* v_cmd = app.add_subcommand(
      "cover", "unit-interval covering of large-|mu^| frequencies vs the T^delta count");
  detail::SsmFlags v_ssm;
  v_ssm.attach(v_cmd);
  double v_tmax = 0.0, v_eps = 0.0, v_step = 0.25, v_tol = 0.0;
  std::string v_mode = "auto", v_csv, v_json;
  v_cmd->add_option("--tmax", v_tmax, "frequency range bound T")->required();
  v_cmd->add_option("--eps", v_eps, "threshold exponent: flag |mu^| >= T^-eps")->required();
  v_cmd->add_option("--step", v_step, "sample spacing, at most 1/4");
  v_cmd->add_option("--tol", v_tol, "truncation tolerance (default T^-eps/20)");
  v_cmd->add_option("--mode", v_mode, "eta mode: auto|lemma|remark");
  v_cmd->add_option("--csv", v_csv, "flagged-interval CSV path");
  v_cmd->add_option("--json", v_json, "summary JSON path (default stdout)");

  // ---- decompose ----
  auto* d_cmd =
      app.add_subcommand("decompose", "integer/remainder decomposition a^-j t = r_j + eps_j");
  double d_t = 0.0, d_a = 0.0;
  int d_n = 0;
  std::string d_out;
  d_cmd->add_option("--t", d_t, "t in [0,1]")->required();
  d_cmd->add_option("--a", d_a, "contraction ratio in (0,1)")->required();
  d_cmd->add_option("--n", d_n, "number of levels")->required();
  d_cmd->add_option("--out", d_out, "output CSV path (default stdout)");

  // ---- sset ----
  auto* q_cmd = app.add_subcommand(
      "sset", "brute-force cover count of the large-frequency set S(N, eps~)");
  double q_a = 0.0, q_et = 0.0;
  int q_n = 0;
  std::int64_t q_grid = 0;
  std::string q_out;
  q_cmd->add_option("--a", q_a, "contraction ratio in (0,1)")->required();
  q_cmd->add_option("--n", q_n, "level count N (at most 14)")->required();
  q_cmd->add_option("--eps-tilde", q_et, "eps~ parameter")->required();
  q_cmd->add_option("--grid", q_grid, "grid resolution (at least 10 a^-N)")->required();
  q_cmd->add_option("--out", q_out, "output JSON path (default stdout)");

  // ---- dim ----
  auto* m_cmd = app.add_subcommand("dim", "dyadic-moment dimension estimate (dim_q or dim_inf)");
  detail::SsmFlags m_ssm;
  m_ssm.attach(m_cmd);
  std::string m_q = "2", m_csv, m_json;
  int m_nlo = 8, m_nhi = 16, m_approx = 18, m_drop = 2;
  m_cmd->add_option("--q", m_q, "moment exponent (> 1) or 'inf'");
  m_cmd->add_option("--n-lo", m_nlo, "smallest dyadic level");
  m_cmd->add_option("--n-hi", m_nhi, "largest dyadic level");
  m_cmd->add_option("--approx-level", m_approx, "discrete-approximation depth");
  m_cmd->add_option("--drop", m_drop, "transient levels dropped from the fit");
  m_cmd->add_option("--csv", m_csv, "moment-table CSV path");
  m_cmd->add_option("--json", m_json, "estimate JSON path (default stdout)");

  // ---- alpha2 ----
  auto* a_cmd = app.add_subcommand(
      "alpha2", "Fourier-energy growth exponent alpha_2 and dim_2 = 1 - alpha_2");
  detail::SsmFlags a_ssm;
  a_ssm.attach(a_cmd);
  std::string a_tlist, a_json;
  double a_tlo = 64.0, a_thi = 16384.0, a_tol = 1e-9, a_step = 0.0;
  int a_count = 9;
  a_cmd->add_option("--t-list", a_tlist, "explicit energy ladder, comma separated");
  a_cmd->add_option("--t-lo", a_tlo, "geometric ladder start");
  a_cmd->add_option("--t-hi", a_thi, "geometric ladder end");
  a_cmd->add_option("--count", a_count, "geometric ladder size");
  a_cmd->add_option("--tol", a_tol, "truncation tolerance");
  a_cmd->add_option("--step", a_step, "integration step (default derivative rule)");
  a_cmd->add_option("--json", a_json, "output JSON path (default stdout)");

  // ---- young ----
  auto* y_cmd = app.add_subcommand(
      "young", "Young-inequality convolution check on mu_N * mu_N at dyadic levels");
  detail::SsmFlags y_ssm;
  y_ssm.attach(y_cmd);
  int y_approx = 8, y_nlo = 4, y_nhi = 12;
  std::string y_json;
  y_cmd->add_option("--approx-level", y_approx, "discrete-approximation depth");
  y_cmd->add_option("--n-lo", y_nlo, "smallest dyadic level");
  y_cmd->add_option("--n-hi", y_nhi, "largest dyadic level");
  y_cmd->add_option("--json", y_json, "output JSON path (default stdout)");

  // ---- pushforward ----
  auto* p_cmd = app.add_subcommand(
      "pushforward", "octave envelope and decay exponent of (F mu)^ for a grammar map F");
  detail::SsmFlags p_ssm;
  p_ssm.attach(p_cmd);
  std::string p_map, p_csv, p_json, p_s = "auto", p_mode = "auto";
  double p_umax = 100000.0, p_tol = 1e-3;
  int p_spo = 128;
  bool p_verify = false;
  p_cmd->add_option("--map", p_map, "map expression, e.g. 'x^2' or '0.5*x^2 + 3*x'")
      ->required();
  p_cmd->add_option("--umax", p_umax, "largest frequency");
  p_cmd->add_option("--spo", p_spo, "samples per octave");
  p_cmd->add_option("--tol", p_tol, "atom-replacement tolerance");
  p_cmd->add_flag("--verify", p_verify,
                  "check the fitted exponent against the theoretical lower bound "
                  "(requires strictly convex F)");
  p_cmd->add_option("--s", p_s, "Frostman exponent for --verify; 'auto' = OSC closed form");
  p_cmd->add_option("--mode", p_mode, "eta mode: auto|lemma|remark");
  p_cmd->add_option("--csv", p_csv, "octave-envelope CSV path");
  p_cmd->add_option("--json", p_json, "summary JSON path (default stdout)");

  // ---- bernoulli-bound ----
  auto* b_cmd = app.add_subcommand(
      "bernoulli-bound",
      "effective dimension lower bounds for Bernoulli convolutions; the +/-1 alphabet is "
      "used through its normalized t = (0,1) affine image, which preserves decay moduli "
      "and every dimension");
  double b_a = 0.0, b_p = 0.5;
  std::string b_target = "dim2", b_mode = "auto", b_json;
  b_cmd->add_option("--a", b_a, "contraction ratio in (0,1)")->required();
  b_cmd->add_option("--p", b_p, "sign bias in (0,1)");
  b_cmd->add_option("--target", b_target, "dim2 | dim2-unbiased | diminf");
  b_cmd->add_option("--mode", b_mode, "eta mode: auto|lemma|remark");
  b_cmd->add_option("--json", b_json, "output JSON path (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (c_cmd->parsed()) {
      const std::vector<double> p = detail::parse_list(c_ssm.p_list);
      const auto s_opt = detail::parse_auto(c_s, "--s");
      if (!s_opt.has_value() && c_kappa <= 0.0) {
        std::cerr << "note: --s auto uses the open-set-condition closed form; "
                     "OSC is asserted, not checked\n";
      }
      const ConstantsReport report =
          constants_report(c_ssm.a, p, s_opt.value_or(0.0), c_kappa,
                           detail::parse_mode(c_mode, p), detail::parse_variant(c_variant));
      detail::emit(c_out, [&](std::ostream& os) { write_json(report, os); });
    } else if (s_cmd->parsed()) {
      const FrequencyScan sc = scan(s_ssm.build(), s_tmax, s_step, s_tol);
      detail::emit(s_out, [&](std::ostream& os) { write_csv(sc, os); });
    } else if (v_cmd->parsed()) {
      const HomogeneousSSM ssm = v_ssm.build();
      if (v_tol == 0.0) v_tol = std::pow(v_tmax, -v_eps) / 20.0;
      const CoveringReport report = covering_report(
          ssm, v_tmax, v_eps, v_step, v_tol, detail::parse_mode(v_mode, ssm.p));
      if (!v_csv.empty()) {
        detail::emit(v_csv, [&](std::ostream& os) { write_csv(report, os); });
      }
      detail::emit(v_json, [&](std::ostream& os) { write_json(report, os); });
    } else if (d_cmd->parsed()) {
      const EKDecomposition dec = decompose(d_t, d_a, d_n);
      detail::emit(d_out, [&](std::ostream& os) { write_csv(dec, os); });
    } else if (q_cmd->parsed()) {
      const SSetCoverCount count = s_set_cover_count(q_a, q_n, q_et, q_grid);
      detail::emit(q_out, [&](std::ostream& os) { write_json(count, q_a, q_n, q_et, os); });
    } else if (m_cmd->parsed()) {
      const HomogeneousSSM ssm = m_ssm.build();
      DimEstimate est;
      std::string target;
      if (m_q == "inf") {
        est = dim_inf_estimate(ssm, m_nlo, m_nhi, m_approx, m_drop);
        target = "dim_inf";
      } else {
        est = dim_q_estimate(ssm, std::stod(m_q), m_nlo, m_nhi, m_approx, m_drop);
        target = "dim_" + m_q;
      }
      if (!m_csv.empty()) {
        const HomogeneousSSM norm = normalize(ssm).ssm;
        const MomentTable table = moment_sums(discrete_approximation(norm, m_approx), m_nlo,
                                              m_nhi, m_q == "inf" ? 2.0 : std::stod(m_q));
        detail::emit(m_csv, [&](std::ostream& os) { write_csv(table, os); });
      }
      detail::emit(m_json, [&](std::ostream& os) { write_json(est, os, target); });
    } else if (a_cmd->parsed()) {
      const HomogeneousSSM ssm = a_ssm.build();
      std::vector<double> ladder;
      if (!a_tlist.empty()) {
        ladder = detail::parse_list(a_tlist);
      } else {
        if (a_count < 4) throw DomainError("ladder needs at least 4 entries");
        const double ratio = std::pow(a_thi / a_tlo, 1.0 / (a_count - 1));
        for (int i = 0; i < a_count; ++i) ladder.push_back(a_tlo * std::pow(ratio, i));
      }
      const Alpha2Result res = alpha2_estimate(ssm, ladder, a_tol, a_step);
      detail::emit(a_json, [&](std::ostream& os) { write_json(res, os); });
    } else if (y_cmd->parsed()) {
      const HomogeneousSSM ssm = y_ssm.build();
      const DiscreteMeasure m = discrete_approximation(ssm, y_approx);
      if (y_nlo > y_nhi) throw DomainError("level range is empty");
      std::vector<double> levels, lhs, rhs;
      bool all_pass = true;
      for (int n = y_nlo; n <= y_nhi; ++n) {
        const YoungCheck yc = young_check(m, m, n);
        levels.push_back(n);
        lhs.push_back(yc.lhs);
        rhs.push_back(yc.rhs);
        all_pass = all_pass && yc.pass;
      }
      detail::emit(y_json, [&](std::ostream& os) {
        JsonObjectWriter w(os);
        w.field("approx_level", y_approx)
            .field_array("n", levels)
            .field_array("lhs", lhs)
            .field_array("rhs", rhs)
            .field_bool("pass", all_pass);
        w.close();
      });
    } else if (p_cmd->parsed()) {
      const HomogeneousSSM ssm = p_ssm.build();
      const SmoothMap map = parse_map(p_map);
      if (p_verify) {
        const auto s_opt = detail::parse_auto(p_s, "--s");
        if (!s_opt.has_value()) {
          std::cerr << "note: --s auto uses the open-set-condition closed form; "
                       "OSC is asserted, not checked\n";
        }
        const KaufmanReport report =
            kaufman_verify(ssm, map, s_opt, p_umax, p_spo, p_tol,
                           detail::parse_mode(p_mode, ssm.p));
        if (!p_csv.empty()) {
          detail::emit(p_csv, [&](std::ostream& os) { write_csv(report.fit, os); });
        }
        detail::emit(p_json, [&](std::ostream& os) { write_json(report, os); });
        if (!report.pass) {
          std::cerr << "verification failed: sigma_emp = " << fmt17(report.sigma_emp)
                    << " below sigma_theory = " << fmt17(report.sigma_theory) << "\n";
          return kExitVerifyFailed;
        }
      } else {
        const DecayFit fit = decay_fit(ssm, map, p_umax, p_spo, p_tol);
        if (!p_csv.empty()) {
          detail::emit(p_csv, [&](std::ostream& os) { write_csv(fit, os); });
        }
        detail::emit(p_json, [&](std::ostream& os) { write_json(fit, os); });
      }
    } else if (b_cmd->parsed()) {
      const std::vector<double> pv{b_p, 1.0 - b_p};
      const EtaMode mode = detail::parse_mode(b_mode, pv);
      BernoulliBound bound;
      if (b_target == "dim2") {
        bound = bernoulli_dim2_bound(b_a, b_p, mode);
      } else if (b_target == "dim2-unbiased") {
        bound = bernoulli_dim2_bound_unbiased(b_a);
      } else if (b_target == "diminf") {
        bound = bernoulli_diminf_bound(b_a, b_p, mode);
      } else {
        throw DomainError("target must be dim2, dim2-unbiased or diminf");
      }
      detail::emit(b_json, [&](std::ostream& os) { write_json(bound, os, b_target); });
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace selfsim::cli

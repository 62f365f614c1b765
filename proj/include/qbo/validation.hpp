#pragma once

// Cross-method consistency suite behind the `validate` command.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qbo/closed_form.hpp"
#include "qbo/experiments.hpp"
#include "qbo/moment_dynamics.hpp"
#include "qbo/moment_ode.hpp"
#include "qbo/stochastic.hpp"

namespace qbo {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationOptions {
  long mc_trajectories = 100'000;
  std::uint64_t mc_seed = 20240607;
  unsigned threads = 1;
};

namespace detail {

inline double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

// Expected entries of the order-4 system, written out by hand.
inline bool fourth_order_table_matches(std::string& detail) {
  using algebra::ParamPoly;
  using algebra::Rational;
  using E = ParamPoly::Exponents;
  auto mono = [](std::int64_t num, std::int64_t den, E e) { return ParamPoly::monomial(Rational(num, den), e); };
  // exponents: m, gamma, omega, kbt, hbar
  const ParamPoly two_over_m = mono(2, 1, {-1, 0, 0, 0, 0});
  const ParamPoly three_over_m = mono(3, 1, {-1, 0, 0, 0, 0});
  const ParamPoly m_w2 = mono(1, 1, {1, 0, 2, 0, 0});
  const ParamPoly g = mono(1, 1, {0, 1, 0, 0, 0});
  const ParamPoly mgk = mono(1, 1, {1, 1, 0, 1, 0});
  std::vector<std::vector<ParamPoly>> gen(5, std::vector<ParamPoly>(5));
  gen[0][1] = two_over_m;
  gen[1][0] = ParamPoly(-2) * m_w2;
  gen[1][1] = ParamPoly(-2) * g;
  gen[1][2] = three_over_m;
  gen[2][1] = ParamPoly(-2) * m_w2;
  gen[2][2] = ParamPoly(-4) * g;
  gen[2][3] = two_over_m;
  gen[3][2] = ParamPoly(-3) * m_w2;
  gen[3][3] = ParamPoly(-6) * g;
  gen[3][4] = two_over_m;
  gen[4][3] = ParamPoly(-2) * m_w2;
  gen[4][4] = ParamPoly(-8) * g;
  std::vector<std::vector<ParamPoly>> lin(5, std::vector<ParamPoly>(3));
  lin[2][0] = ParamPoly(8) * mgk;
  lin[3][1] = ParamPoly(12) * mgk;
  lin[4][2] = ParamPoly(24) * mgk;
  std::vector<ParamPoly> cst(5);
  cst[1] = mono(3, 1, {-1, 0, 0, 0, 2});
  cst[2] = mono(-4, 1, {0, 1, 0, 0, 2});
  cst[3] = mono(-3, 1, {1, 0, 2, 0, 2});

  const SymbolicMomentSystem sys = derive_symbolic(4);
  int mismatches = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) mismatches += !(sys.generator[i][j] == gen[i][j]);
    for (std::size_t j = 0; j < 3; ++j) mismatches += !(sys.forcing_linear[i][j] == lin[i][j]);
    mismatches += !(sys.forcing_constant[i] == cst[i]);
  }
  detail = std::to_string(mismatches) + " mismatching entries";
  return mismatches == 0;
}

inline std::vector<double> standard_grid_values() { return {1e-2, 1e-1, 1.0, 10.0}; }

}  // namespace detail

/// Largest relative gap between exact_variance and the integrated <x^2> over
/// the m x gamma x omega x kBT x t grid, for the given initial state.
inline double closed_form_ode_gap(const QuadraticState& init) {
  double worst = 0.0;
  TrajectoryOptions opts;
  opts.rel_tol = 1e-13;
  opts.abs_tol = 1e-30;
  opts.moment_order = 2;
  for (double m : {0.1, 1.0, 10.0})
    for (double g : detail::standard_grid_values())
      for (double w : detail::standard_grid_values())
        for (double k : detail::standard_grid_values()) {
          const OscillatorParams p{m, g, w, k, 1.0};
          const std::vector<double> times{0.0, 0.1, 1.0, 10.0};
          const MomentState s0{0.0, init, {}};
          const MomentSeries series = integrate(p, s0, times, opts);
          for (std::size_t i = 1; i < times.size(); ++i)
            worst = std::max(worst, detail::rel_err(series.states[i].quad.var_x, exact_variance(p, init, times[i])));
        }
  return worst;
}

inline std::vector<CheckResult> run_validation(const ValidationOptions& opt = {}) {
  std::vector<CheckResult> out;
  auto check = [&](std::string name, const std::function<bool(std::string&)>& body) {
    CheckResult r{std::move(name), false, {}};
    try {
      r.passed = body(r.detail);
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(r));
  };

  check("symbolic fourth-order system", [](std::string& d) { return detail::fourth_order_table_matches(d); });

  check("second-order system", [](std::string& d) {
    const auto sys = derive_moment_ode(2, {2.0, 0.3, 1.7, 0.9, 1.0});
    Eigen::Matrix3d expected;
    expected << 0, 1.0 / 2.0, 0, -2 * 2.0 * 1.7 * 1.7, -2 * 0.3, 2.0 / 2.0, 0, -2.0 * 1.7 * 1.7, -4 * 0.3;
    const double gap = (sys.generator - expected).cwiseAbs().maxCoeff() +
                       std::abs(sys.forcing_constant[2] - 4 * 2.0 * 0.3 * 0.9);
    d = "max entry gap " + detail::sci(gap);
    return gap < 1e-14;
  });

  check("closed form vs integrated <x^2>", [](std::string& d) {
    const double a = closed_form_ode_gap(sweep_initial_state());
    const double b = closed_form_ode_gap({0.0, 0.0, 0.3, 0.7, 0.1});
    d = "max rel gap " + detail::sci(std::max(a, b)) + " (limit 1e-8)";
    return std::max(a, b) <= 1e-8;
  });

  check("classical reduction", [](std::string& d) {
    double worst = 0.0;
    for (double m : {0.1, 1.0, 10.0})
      for (double g : detail::standard_grid_values())
        for (double w : detail::standard_grid_values())
          for (double k : detail::standard_grid_values())
            for (double t : {0.1, 1.0, 10.0}) {
              const OscillatorParams p{m, g, w, k, 1.0};
              worst = std::max(worst, detail::rel_err(exact_variance(p, {}, t), classical_variance(p, t)));
            }
    d = "max rel gap " + detail::sci(worst) + " (limit 1e-12)";
    return worst <= 1e-12;
  });

  check("free particle vs integrated <x^2>", [](std::string& d) {
    const OscillatorParams p{20.0, 0.001, 0.0, 0.38, 1.0};
    const QuadraticState init{0.0, 0.0, 0.5, 0.5, 0.2};
    TrajectoryOptions opts;
    opts.rel_tol = 1e-13;
    opts.abs_tol = 1e-30;
    const std::vector<double> times{0.0, 40.0, 100.0, 200.0};
    const auto series = integrate(p, {0.0, init, gaussian_fourth_moments(init)}, times, opts);
    double worst = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i)
      worst = std::max(worst, detail::rel_err(series.states[i].quad.var_x, free_particle_variance(p, init, times[i])));
    d = "max rel gap " + detail::sci(worst) + " (limit 1e-8)";
    return worst <= 1e-8;
  });

  check("Gaussian closure preserved", [](std::string& d) {
    KurtosisRunConfig cfg;
    cfg.fourth = gaussian_fourth_moments(cfg.init, cfg.params.hbar);
    const MomentSeries s = run_kurtosis(cfg);
    double worst = 0.0;
    for (double k : s.kurtosis) worst = std::max(worst, std::abs(k - 3.0));
    d = "max |kappa - 3| " + detail::sci(worst) + " (limit 1e-6)";
    return worst < 1e-6;
  });

  check("adaptive vs semianalytic propagation", [](std::string& d) {
    double worst = 0.0;
    for (KurtosisModel model : {KurtosisModel::Harmonic, KurtosisModel::Free}) {
      KurtosisRunConfig cfg;
      cfg.model = model;
      cfg.times = {0.0, 40.0, 60.0, 80.0, 100.0, 150.0, 200.0};
      const MomentSeries rk = run_kurtosis(cfg);
      cfg.options.method = PropagationMethod::Semianalytic;
      const MomentSeries sa = run_kurtosis(cfg);
      for (std::size_t i = 0; i < rk.states.size(); ++i) {
        const auto a = rk.states[i].fourth.as_array();
        const auto b = sa.states[i].fourth.as_array();
        double scale = 0.0;
        for (double v : a) scale = std::max(scale, std::abs(v));
        for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, std::abs(a[j] - b[j]) / scale);
      }
    }
    d = "max rel gap " + detail::sci(worst) + " (limit 1e-7)";
    return worst <= 1e-7;
  });

  check("Langevin ensemble vs classical variance", [&](std::string& d) {
    const OscillatorParams p{1.0, 0.5, 1.0, 1.0, 1.0};
    EnsembleSpec spec;
    spec.n_traj = opt.mc_trajectories;
    spec.dt = 1e-3;
    spec.t_end = 10.0;
    spec.seed = opt.mc_seed;
    spec.threads = opt.threads;
    const std::vector<double> times{1.0, 3.0, 10.0};
    const EnsembleResult r = simulate(p, spec, times);
    double worst = 0.0;
    for (const auto& s : r.samples) worst = std::max(worst, std::abs(s.var_x - classical_variance(p, s.t)) / s.se_var_x);
    d = "max deviation " + detail::sci(worst) + " standard errors (limit 4)";
    return worst < 4.0;
  });

  return out;
}

}  // namespace qbo

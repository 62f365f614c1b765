#pragma once

// Time evolution of the first, second and fourth moments. Two independent
// routes: adaptive Runge-Kutta on the assembled 10-dimensional linear system,
// and the variation-of-constants solution for the fourth-order block with
// closed-form second moments in the forcing.
//
// Fourth moments are taken about the means. The generator is covariant under
// phase-space translations, so central moments obey the zero-mean equations.

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qbo/closed_form.hpp"
#include "qbo/error.hpp"
#include "qbo/model.hpp"
#include "qbo/moment_ode.hpp"
#include "qbo/numeric/dopri5.hpp"
#include "qbo/numeric/gauss_legendre.hpp"
#include "qbo/numeric/matrix_exp.hpp"

namespace qbo {

enum class PropagationMethod { AdaptiveRK, Semianalytic };

struct TrajectoryOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  PropagationMethod method = PropagationMethod::AdaptiveRK;
  int quad_rule_order = 10;  ///< Gauss-Legendre points per panel (semianalytic only)
  int moment_order = 4;      ///< 2 propagates only first and second moments

  void validate() const {
    if (!(rel_tol >= 1e-14)) throw Error(ErrorCode::InvalidSpec, "rel_tol must be >= 1e-14");
    if (!(abs_tol > 0.0)) throw Error(ErrorCode::InvalidSpec, "abs_tol must be > 0");
    if (!(max_step > 0.0)) throw Error(ErrorCode::InvalidSpec, "max_step must be > 0");
    if (quad_rule_order < 2) throw Error(ErrorCode::InvalidSpec, "quad_rule_order must be >= 2");
    if (moment_order != 2 && moment_order != 4) throw Error(ErrorCode::InvalidSpec, "moment_order must be 2 or 4");
  }
};

struct MomentSeries {
  std::vector<double> times;
  std::vector<MomentState> states;
  /// NaN where the position variance is degenerate.
  std::vector<double> kurtosis;
};

inline constexpr double kDegenerateVariance = 1e-12;

/// mu4 / mu2^2 from central moments.
inline double kurtosis(const MomentState& s, double abs_tol = kDegenerateVariance) {
  if (!(s.quad.var_x > abs_tol))
    throw Error(ErrorCode::DegenerateDistribution,
                "position variance " + std::to_string(s.quad.var_x) + " is too small for kurtosis");
  return s.fourth.x4 / (s.quad.var_x * s.quad.var_x);
}

/// Full linear system y' = A y + b on
/// y = (<x>, <p>, var_x, sigma, var_p, x4, x3p, x2p2, xp3, p4).
struct LinearMomentSystem {
  Eigen::Matrix<double, 10, 10> a = Eigen::Matrix<double, 10, 10>::Zero();
  Eigen::Matrix<double, 10, 1> b = Eigen::Matrix<double, 10, 1>::Zero();
  MomentODESystem fourth;  ///< order-4 block with its forcing
};

namespace detail {

inline const SymbolicMomentSystem& symbolic_system(int order) {
  static const SymbolicMomentSystem first = derive_symbolic(1);
  static const SymbolicMomentSystem second = derive_symbolic(2);
  static const SymbolicMomentSystem fourth = derive_symbolic(4);
  switch (order) {
    case 1: return first;
    case 2: return second;
    default: return fourth;
  }
}

}  // namespace detail

inline LinearMomentSystem assemble_linear_system(const OscillatorParams& params) {
  const MomentODESystem first = evaluate(detail::symbolic_system(1), params);
  const MomentODESystem second = evaluate(detail::symbolic_system(2), params);
  LinearMomentSystem sys;
  sys.fourth = evaluate(detail::symbolic_system(4), params);
  sys.a.block<2, 2>(0, 0) = first.generator;
  sys.b.segment<2>(0) = first.forcing_constant;
  sys.a.block<3, 3>(2, 2) = second.generator;
  sys.b.segment<3>(2) = second.forcing_constant;
  sys.a.block<5, 5>(5, 5) = sys.fourth.generator;
  sys.a.block<5, 3>(5, 2) = sys.fourth.forcing_linear;
  sys.b.segment<5>(5) = sys.fourth.forcing_constant;
  return sys;
}

inline Eigen::VectorXd to_vector(const MomentState& s) {
  Eigen::VectorXd v(10);
  v << s.quad.mean_x, s.quad.mean_p, s.quad.var_x, s.quad.sigma, s.quad.var_p, s.fourth.x4, s.fourth.x3p,
      s.fourth.x2p2, s.fourth.xp3, s.fourth.p4;
  return v;
}

inline MomentState from_vector(double t, const Eigen::VectorXd& v) {
  MomentState s;
  s.t = t;
  s.quad = {v[0], v[1], v[2], v[4], v[3]};
  s.fourth = {v[5], v[6], v[7], v[8], v[9]};
  return s;
}

namespace detail {

// Natural scale of each moment in y: means against standard deviations,
// mixed moments against the matching power of the pure ones.
inline void moment_magnitudes(const Eigen::VectorXd& y, Eigen::VectorXd& floor) {
  floor.setZero();
  const double vx = std::abs(y[2]), vp = std::abs(y[4]);
  floor[0] = std::sqrt(vx);
  floor[1] = std::sqrt(vp);
  floor[3] = 2.0 * std::sqrt(vx * vp);
  if (y.size() < 10) return;
  const double qx = std::sqrt(std::sqrt(std::abs(y[5]))), qp = std::sqrt(std::sqrt(std::abs(y[9])));
  floor[6] = qx * qx * qx * qp;
  floor[7] = qx * qx * qp * qp;
  floor[8] = qx * qp * qp * qp;
}

inline double series_kurtosis(const MomentState& s) {
  if (!(s.quad.var_x > kDegenerateVariance)) return std::numeric_limits<double>::quiet_NaN();
  return kurtosis(s);
}

inline void check_grid(const MomentState& init, std::span<const double> times) {
  if (times.empty()) throw Error(ErrorCode::InvalidGrid, "empty time grid");
  if (times.front() != init.t) throw Error(ErrorCode::InvalidGrid, "time grid must start at the initial time");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw Error(ErrorCode::InvalidGrid, "time grid must be strictly increasing");
}

}  // namespace detail

/// Variation-of-constants propagation to time t:
/// X(t) = e^{M tau} X(0) + int_0^tau e^{M(tau-s)} F(s) ds, tau = t - init.t,
/// with F(s) built from closed-form second moments. First and second moments
/// come from their own closed forms.
inline MomentState propagate_semianalytic(const OscillatorParams& params, const MomentState& init, double t,
                                          int quad_rule_order = 10) {
  const double tau = t - init.t;
  if (!(tau >= 0.0)) throw Error(ErrorCode::NegativeTime, "target time precedes the initial time");
  if (tau == 0.0) return init;

  const MomentODESystem fourth = evaluate(detail::symbolic_system(4), params);
  const Eigen::MatrixXd& gen = fourth.generator;
  Eigen::VectorXd x0(5);
  x0 << init.fourth.x4, init.fourth.x3p, init.fourth.x2p2, init.fourth.xp3, init.fourth.p4;

  auto forcing = [&](double s) {
    const QuadraticState q = closed_form_second_moments(params, init.quad, s);
    Eigen::Vector3d lower(q.var_x, q.sigma, q.var_p);
    return Eigen::VectorXd(fourth.forcing_constant + fourth.forcing_linear * lower);
  };
  auto integrand = [&](double s) -> Eigen::VectorXd {
    return numeric::expm(gen * (tau - s)) * forcing(s);
  };

  const numeric::GaussRule rule = numeric::gauss_legendre(quad_rule_order);
  auto panel = [&](double lo, double hi) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(5);
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) sum += rule.weights[k] * integrand(mid + half * rule.nodes[k]);
    return Eigen::VectorXd(half * sum);
  };

  // Base panels no longer than the oscillation / decay scale.
  double scale = tau;
  if (params.omega > 0.0) scale = std::min(scale, std::numbers::pi / (2.0 * params.omega));
  if (params.gamma > 0.0) scale = std::min(scale, 1.0 / (2.0 * params.gamma));
  const auto base_panels = static_cast<long>(std::ceil(tau / scale - 1e-12));
  if (base_panels > 1'000'000)
    throw Error(ErrorCode::QuadratureNonConvergence, "too many base panels for the requested horizon");

  constexpr double rel = 1e-12;
  long budget = 200'000;
  Eigen::VectorXd integral = Eigen::VectorXd::Zero(5);

  struct Pending {
    double lo, hi;
    Eigen::VectorXd whole;
    int depth;
  };
  std::vector<Pending> stack;
  for (long i = 0; i < base_panels; ++i) {
    const double lo = tau * static_cast<double>(i) / static_cast<double>(base_panels);
    const double hi = (i + 1 == base_panels) ? tau : tau * static_cast<double>(i + 1) / static_cast<double>(base_panels);
    stack.push_back({lo, hi, panel(lo, hi), 0});
    while (!stack.empty()) {
      Pending cur = std::move(stack.back());
      stack.pop_back();
      const double mid = 0.5 * (cur.lo + cur.hi);
      Eigen::VectorXd left = panel(cur.lo, mid);
      Eigen::VectorXd right = panel(mid, cur.hi);
      const Eigen::VectorXd refined = left + right;
      const double diff = (refined - cur.whole).cwiseAbs().maxCoeff();
      const double mag = refined.cwiseAbs().maxCoeff();
      if (diff <= rel * mag || diff == 0.0) {
        integral += refined;
        continue;
      }
      if (--budget <= 0 || cur.depth > 40)
        throw Error(ErrorCode::QuadratureNonConvergence,
                    "panel refinement budget exceeded near s = " + std::to_string(cur.lo));
      stack.push_back({cur.lo, mid, std::move(left), cur.depth + 1});
      stack.push_back({mid, cur.hi, std::move(right), cur.depth + 1});
    }
  }

  const Eigen::VectorXd x = numeric::expm(gen * tau) * x0 + integral;
  MomentState out;
  out.t = t;
  out.quad = closed_form_second_moments(params, init.quad, tau);
  out.fourth = {x[0], x[1], x[2], x[3], x[4]};
  return out;
}

/// Moment trajectory on `times` (first entry equal to init.t).
inline MomentSeries integrate(const OscillatorParams& params, const MomentState& init,
                              std::span<const double> times, const TrajectoryOptions& opts = {}) {
  opts.validate();
  detail::check_grid(init, times);

  MomentSeries series;
  series.times.assign(times.begin(), times.end());
  series.states.reserve(times.size());

  const bool second_only = opts.moment_order == 2;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (opts.method == PropagationMethod::Semianalytic) {
    for (double t : times) {
      if (second_only) {
        series.states.push_back({t, closed_form_second_moments(params, init.quad, t - init.t), {nan, nan, nan, nan, nan}});
      } else {
        series.states.push_back(propagate_semianalytic(params, init, t, opts.quad_rule_order));
      }
    }
  } else {
    const LinearMomentSystem sys = assemble_linear_system(params);
    const Eigen::Index dim = second_only ? 5 : 10;
    const Eigen::MatrixXd a = sys.a.topLeftCorner(dim, dim);
    const Eigen::VectorXd b = sys.b.head(dim);
    auto rhs = [&](double, const Eigen::VectorXd& y) -> Eigen::VectorXd { return a * y + b; };
    numeric::Dopri5Options o;
    o.rel_tol = opts.rel_tol;
    o.abs_tol = opts.abs_tol;
    o.max_step = opts.max_step;
    o.magnitude = detail::moment_magnitudes;
    const Eigen::VectorXd y0 = to_vector(init).head(dim);
    const auto ys = numeric::dopri5(rhs, y0, times, o);
    for (std::size_t i = 0; i < ys.size(); ++i) {
      Eigen::VectorXd full = Eigen::VectorXd::Constant(10, nan);
      full.head(dim) = ys[i];
      series.states.push_back(from_vector(times[i], full));
    }
  }
  series.kurtosis.reserve(series.states.size());
  for (const auto& s : series.states) series.kurtosis.push_back(detail::series_kurtosis(s));
  return series;
}

/// n + 1 evenly spaced points on [t0, t1].
inline std::vector<double> linear_grid(double t0, double t1, std::size_t intervals) {
  std::vector<double> g(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i)
    g[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(intervals);
  g.back() = t1;
  return g;
}

}  // namespace qbo

#pragma once

// Dormand-Prince 5(4) with PI step-size control and the order-4 continuous
// extension for output between steps (Hairer, Norsett & Wanner, DOPRI5).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "qbo/error.hpp"

namespace qbo::numeric {

struct Dopri5Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  double initial_step = 0.0;  ///< 0 selects automatically
  long max_steps = 5'000'000;
  /// Optional per-component magnitude floor for the relative error test,
  /// evaluated at the start of each step. Components that pass through zero
  /// are then measured against a natural scale instead of abs_tol alone.
  std::function<void(const Eigen::VectorXd& y, Eigen::VectorXd& floor)> magnitude;
};

struct Dopri5Stats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
};

namespace dp {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                        a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace dp

/// Integrates y' = rhs(t, y) from (times[0], y0) and returns the state at every
/// entry of `times` (ascending, times[0] is the start).
template <class Rhs>
std::vector<Eigen::VectorXd> dopri5(Rhs&& rhs, const Eigen::VectorXd& y0, std::span<const double> times,
                                    const Dopri5Options& opts = {}, Dopri5Stats* stats = nullptr) {
  using Vec = Eigen::VectorXd;
  if (times.empty()) return {};
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw Error(ErrorCode::InvalidGrid, "output times must be strictly increasing");
  if (!(opts.rel_tol > 0.0) || !(opts.abs_tol > 0.0))
    throw Error(ErrorCode::InvalidSpec, "tolerances must be positive");

  Dopri5Stats local;
  Dopri5Stats& st = stats ? *stats : local;

  std::vector<Vec> out;
  out.reserve(times.size());
  out.push_back(y0);
  if (times.size() == 1) return out;

  const double t_end = times.back();
  const auto n = y0.size();
  double t = times.front();
  Vec y = y0;
  Vec k1 = rhs(t, y);
  ++st.evaluations;

  Vec floor = Vec::Zero(n);
  auto error_norm = [&](const Vec& err, const Vec& ya, const Vec& yb) {
    if (opts.magnitude) opts.magnitude(ya, floor);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc = opts.abs_tol + opts.rel_tol * std::max({std::abs(ya[i]), std::abs(yb[i]), floor[i]});
      sum += (err[i] / sc) * (err[i] / sc);
    }
    return std::sqrt(sum / static_cast<double>(std::max<Eigen::Index>(n, 1)));
  };

  double h = opts.initial_step;
  if (h <= 0.0) {
    // Starting step from the scale of y and y'.
    const Vec scale = (opts.abs_tol + opts.rel_tol * y.array().abs()).matrix();
    const double dnf = std::sqrt((k1.array() / scale.array()).square().mean());
    const double dny = std::sqrt((y.array() / scale.array()).square().mean());
    h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
    h = std::min({h, opts.max_step, t_end - t});
    const Vec y1 = y + h * k1;
    const Vec k2 = rhs(t + h, y1);
    ++st.evaluations;
    const double der2 = std::sqrt(((k2 - k1).array() / scale.array()).square().mean()) / h;
    const double der = std::max(der2, dnf);
    const double h1 = der <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der, 0.2);
    h = std::min({100.0 * h, h1, opts.max_step, t_end - t});
  }

  constexpr double beta = 0.04;
  constexpr double expo1 = 0.2 - beta * 0.75;
  double facold = 1e-4;
  bool last_rejected = false;
  std::size_t next_out = 1;

  Vec k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  while (next_out < times.size()) {
    if (st.accepted + st.rejected >= opts.max_steps) {
      std::ostringstream msg;
      msg << "step budget of " << opts.max_steps << " exhausted at t = " << t
          << "; the system is too stiff for the adaptive integrator, use the semianalytic method";
      throw Error(ErrorCode::StepSizeUnderflow, msg.str());
    }
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      std::ostringstream msg;
      msg << "step size underflow (h = " << h << ") at t = " << t << "; use the semianalytic method";
      throw Error(ErrorCode::StepSizeUnderflow, msg.str());
    }
    h = std::min(h, opts.max_step);
    if (t + 1.01 * h >= t_end) h = t_end - t;

    ytmp = y + h * dp::a21 * k1;
    k2 = rhs(t + dp::c2 * h, ytmp);
    ytmp = y + h * (dp::a31 * k1 + dp::a32 * k2);
    k3 = rhs(t + dp::c3 * h, ytmp);
    ytmp = y + h * (dp::a41 * k1 + dp::a42 * k2 + dp::a43 * k3);
    k4 = rhs(t + dp::c4 * h, ytmp);
    ytmp = y + h * (dp::a51 * k1 + dp::a52 * k2 + dp::a53 * k3 + dp::a54 * k4);
    k5 = rhs(t + dp::c5 * h, ytmp);
    ytmp = y + h * (dp::a61 * k1 + dp::a62 * k2 + dp::a63 * k3 + dp::a64 * k4 + dp::a65 * k5);
    k6 = rhs(t + h, ytmp);
    ynew = y + h * (dp::a71 * k1 + dp::a73 * k3 + dp::a74 * k4 + dp::a75 * k5 + dp::a76 * k6);
    k7 = rhs(t + h, ynew);
    st.evaluations += 6;

    err = h * (dp::e1 * k1 + dp::e3 * k3 + dp::e4 * k4 + dp::e5 * k5 + dp::e6 * k6 + dp::e7 * k7);
    const double e = error_norm(err, y, ynew);
    if (!std::isfinite(e)) {
      h *= 0.1;
      ++st.rejected;
      last_rejected = true;
      continue;
    }

    const double fac11 = std::pow(std::max(e, 1e-300), expo1);
    double fac = fac11 / std::pow(facold, beta);
    fac = std::clamp(fac / 0.9, 0.2, 10.0);
    double hnew = h / fac;

    if (e <= 1.0) {
      ++st.accepted;
      facold = std::max(e, 1e-4);
      const double t_new = (h == t_end - t) ? t_end : t + h;
      // Dense output for every requested time inside (t, t_new].
      while (next_out < times.size() && times[next_out] <= t_new) {
        if (times[next_out] == t_new) {
          out.push_back(ynew);
        } else {
          const double theta = (times[next_out] - t) / h;
          const double theta1 = 1.0 - theta;
          const Vec ydiff = ynew - y;
          const Vec bspl = h * k1 - ydiff;
          const Vec r4 = ydiff - h * k7 - bspl;
          const Vec r5 =
              h * (dp::d1 * k1 + dp::d3 * k3 + dp::d4 * k4 + dp::d5 * k5 + dp::d6 * k6 + dp::d7 * k7);
          out.push_back(y + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * r5))));
        }
        ++next_out;
      }
      t = t_new;
      y = ynew;
      k1 = k7;
      if (last_rejected) hnew = std::min(hnew, h);
      last_rejected = false;
    } else {
      hnew = h / std::min(1.0 / 0.2, fac11 / 0.9);
      ++st.rejected;
      last_rejected = true;
    }
    h = hnew;
  }
  return out;
}

}  // namespace qbo::numeric

#pragma once

// Closed-form position variances of the damped quantum oscillator:
// the exact Caldeira-Leggett result, its classical (zero initial data)
// reduction, the recoilless/decoherence limit and the free particle.

#include <cmath>
#include <limits>

#include "qbo/error.hpp"
#include "qbo/model.hpp"

namespace qbo {

/// e^{-2 gamma t}-weighted hyperbolic building blocks, with
/// Omega^2 = gamma^2 - omega^2. For Omega^2 < 0 every field stays real
/// (cosh -> cos, sinh(Omega t)/Omega -> sin(nu t)/nu).
struct HyperbolicKernel {
  double c2 = 1.0;     ///< e^{-2gt} cosh(2 Omega t)
  double s2 = 0.0;     ///< e^{-2gt} sinh(2 Omega t) / Omega
  double ch2 = 1.0;    ///< e^{-2gt} cosh^2(Omega t)
  double sh2 = 0.0;    ///< e^{-2gt} sinh^2(Omega t) / Omega^2
  double decay = 1.0;  ///< e^{-2gt}
};

/// e^{-gamma t} cosh(Omega t) and e^{-gamma t} sinh(Omega t) / Omega.
struct HalfKernel {
  double ch = 1.0;
  double sh = 0.0;
};

namespace detail {

inline void require_time(double t) {
  if (!(t >= 0.0)) throw Error(ErrorCode::NegativeTime, "t must be >= 0, got " + std::to_string(t));
}

inline void require_frequency(const OscillatorParams& p) {
  if (!(p.omega > 0.0))
    throw Error(ErrorCode::ZeroFrequency,
                "omega must be > 0 for this formula; use free_particle_variance for omega = 0");
}

/// cosh(sqrt(u)) and sinh(sqrt(u))/sqrt(u) as power series in u, valid for
/// any sign of u. Used where |u| is O(1) or smaller.
inline HalfKernel entire_series(double u) {
  double term_c = 1.0;  // u^k / (2k)!
  double term_s = 1.0;  // u^k / (2k+1)!
  double c = 1.0;
  double s = 1.0;
  for (int k = 1; k < 60; ++k) {
    term_c *= u / ((2.0 * k - 1.0) * (2.0 * k));
    term_s *= u / ((2.0 * k) * (2.0 * k + 1.0));
    c += term_c;
    s += term_s;
    if (std::abs(term_c) <= 1e-18 * std::abs(c) && std::abs(term_s) <= 1e-18 * std::abs(s)) break;
  }
  return {c, s};
}

}  // namespace detail

/// Regime-safe e^{-gamma t} cosh(Omega t) and e^{-gamma t} sinh(Omega t)/Omega.
///
/// |Omega^2| t^2 <= 1 (which covers the critical band for every t of
/// practical size) uses the entire series in Omega^2 t^2. Otherwise the
/// overdamped branch is written as combined exponentials
/// e^{(Omega - gamma) t}(1 +- e^{-2 Omega t})/2 so neither factor overflows,
/// and the underdamped branch uses cos/sin.
inline HalfKernel half_kernel(const OscillatorParams& p, double t) {
  detail::require_time(t);
  const Regime regime = classify_regime(p);
  const double d = regime.discriminant;
  const double u = d * t * t;
  const double damp = std::exp(-p.gamma * t);

  if (regime.kind == RegimeKind::Critical || std::abs(u) <= 1.0) {
    const HalfKernel series = detail::entire_series(u);
    return {damp * series.ch, damp * t * series.sh};
  }
  if (d > 0.0) {
    const double big_omega = std::sqrt(d);
    // gamma - Omega without cancellation.
    const double slow = p.omega * p.omega / (p.gamma + big_omega);
    const double lead = 0.5 * std::exp(-slow * t);
    const double tail = std::exp(-2.0 * big_omega * t);
    return {lead * (1.0 + tail), lead * (-std::expm1(-2.0 * big_omega * t)) / big_omega};
  }
  const double nu = std::sqrt(-d);
  return {damp * std::cos(nu * t), damp * std::sin(nu * t) / nu};
}

inline HyperbolicKernel kernel(const OscillatorParams& p, double t) {
  const HalfKernel h = half_kernel(p, t);
  const double d = classify_regime(p).discriminant;
  HyperbolicKernel k;
  k.ch2 = h.ch * h.ch;
  k.sh2 = h.sh * h.sh;
  k.s2 = 2.0 * h.ch * h.sh;
  k.c2 = k.ch2 + d * k.sh2;
  k.decay = std::exp(-2.0 * p.gamma * t);
  return k;
}

/// Deterministic propagator of the mean motion,
/// x(t) = a x0 + (b/m) p0, p(t) = -m omega^2 b x0 + c p0.
struct MeanPropagator {
  double a = 1.0;
  double b = 0.0;
  double c = 1.0;
};

inline MeanPropagator mean_propagator(const OscillatorParams& p, double t) {
  const HalfKernel h = half_kernel(p, t);
  return {h.ch + p.gamma * h.sh, h.sh, h.ch - p.gamma * h.sh};
}

namespace detail {

// Products of the mean propagator entries, each carrying e^{-2 gamma t}.
struct PropagatorSquares {
  double aa, ab, bb, ac, bc, cc;
};

inline PropagatorSquares propagator_squares(const OscillatorParams& p, const HyperbolicKernel& k) {
  const double g = p.gamma;
  return {k.ch2 + g * k.s2 + g * g * k.sh2, 0.5 * k.s2 + g * k.sh2, k.sh2,
          k.ch2 - g * g * k.sh2,            0.5 * k.s2 - g * k.sh2, k.ch2 - g * k.s2 + g * g * k.sh2};
}

// M_n(z) = int_0^1 e^{-z u} u^n du for z >= 0.
inline double incomplete_moment(int n, double z) {
  if (z > n + 1.0) {
    // Upward recurrence M_j = (j M_{j-1} - e^{-z}) / z, stable for z > n.
    const double ez = std::exp(-z);
    double m = -std::expm1(-z) / z;
    for (int j = 1; j <= n; ++j) m = (j * m - ez) / z;
    return m;
  }
  // e^{-z} sum_j z^j / ((n+1)(n+2)...(n+j+1)), all terms positive.
  double term = 1.0 / (n + 1.0);
  double sum = term;
  for (int j = 1; j < 400; ++j) {
    term *= z / (n + j + 1.0);
    sum += term;
    if (term <= 1e-18 * sum) break;
  }
  return std::exp(-z) * sum;
}

// int_0^t b(s)^2 ds with b(s) = e^{-gamma s} sinh(Omega s)/Omega, the
// position response to a unit momentum kick.
inline double kick_response_integral(const OscillatorParams& p, double t) {
  const double g = p.gamma;
  const double d = classify_regime(p).discriminant;
  const double u = d * t * t;
  if (std::abs(u) <= 1.0) {
    // (sinh x / x)^2 = sum_k a_k x^{2k}, a_k = 2^{2k+1} / (2k+2)!.
    const double z = 2.0 * g * t;
    double a = 1.0;
    double uk = 1.0;
    double sum = 0.0;
    for (int k = 0; k < 40; ++k) {
      const double term = a * uk * incomplete_moment(2 * k + 2, z);
      sum += term;
      if (k > 0 && std::abs(term) <= 1e-18 * std::abs(sum)) break;
      a *= 4.0 / ((2.0 * k + 3.0) * (2.0 * k + 4.0));
      uk *= u;
    }
    return t * t * t * sum;
  }
  // f(l) = int_0^t e^{2 l s} ds
  auto f = [t](double l) { return l == 0.0 ? t : std::expm1(2.0 * l * t) / (2.0 * l); };
  if (d > 0.0) {
    const double big_omega = std::sqrt(d);
    const double slow = p.omega * p.omega / (g + big_omega);
    return (f(-slow) - 2.0 * f(-g) + f(-(g + big_omega))) / (4.0 * d);
  }
  const double nu = std::sqrt(-d);
  const double decay = std::exp(-2.0 * g * t);
  const double oscillating = (2.0 * g * (1.0 - decay * std::cos(2.0 * nu * t)) +
                              2.0 * nu * decay * std::sin(2.0 * nu * t)) /
                             (4.0 * (g * g + nu * nu));
  return (f(-g) - oscillating) / (2.0 * nu * nu);
}

// kBT/(m omega^2) (Omega^2 + e^{-2gt}(omega^2 - gamma^2 cosh 2Wt - gamma W sinh 2Wt)) / Omega^2,
// rewritten with omega^2 = gamma^2 - Omega^2 so nothing is divided by Omega^2.
// The bracket equals 4 gamma omega^2 int_0^t b^2 ds; that form is used when
// the direct one has cancelled more than two bits.
inline double thermal_bracket(const OscillatorParams& p, const HyperbolicKernel& k, double t) {
  const double g = p.gamma;
  const double direct = 1.0 - k.decay - 2.0 * g * g * k.sh2 - g * k.s2;
  if (direct >= 0.25) return direct;
  return 4.0 * g * p.omega * p.omega * kick_response_integral(p, t);
}

inline double settle(double value, double scale) {
  if (value < 0.0 && value >= -1e-12 * scale) return 0.0;
  return value;
}

}  // namespace detail

/// Position variance of the exact Caldeira-Leggett dynamics for initial
/// central second moments `init` (means do not enter).
///
/// The printed form divides each initial-data coefficient by Omega^2; here
/// each is reduced to the kernel fields, e.g.
/// (-omega^2 cosh^2 + gamma^2 cosh 2Wt + gamma W sinh 2Wt)/W^2 = ch2 + gamma s2 + gamma^2 sh2.
inline double exact_variance(const OscillatorParams& p, const QuadraticState& init, double t) {
  detail::require_time(t);
  detail::require_frequency(p);
  const HyperbolicKernel k = kernel(p, t);
  const double g = p.gamma;
  const double thermal = p.kbt / (p.m * p.omega * p.omega) * detail::thermal_bracket(p, k, t);
  const double from_p = init.var_p / (p.m * p.m) * k.sh2;
  const double from_x = init.var_x * (k.ch2 + g * k.s2 + g * g * k.sh2);
  const double from_sigma = init.sigma / (2.0 * p.m) * (2.0 * g * k.sh2 + k.s2);
  const double value = thermal + from_p + from_x + from_sigma;
  const double scale = std::abs(thermal) + std::abs(from_p) + std::abs(from_x) + std::abs(from_sigma);
  return detail::settle(value, scale);
}

/// Classical thermal oscillator started from a point mass at the origin.
inline double classical_variance(const OscillatorParams& p, double t) {
  detail::require_time(t);
  detail::require_frequency(p);
  const HyperbolicKernel k = kernel(p, t);
  const double scale = p.kbt / (p.m * p.omega * p.omega);
  return detail::settle(scale * detail::thermal_bracket(p, k, t), scale);
}

/// Recoilless limit: dissipation dropped, decoherence kept. Secular growth
/// 2 gamma kBT t / (m omega^2) on top of the free oscillation.
inline double decoherence_variance(const OscillatorParams& p, const QuadraticState& init, double t) {
  detail::require_time(t);
  detail::require_frequency(p);
  const double w = p.omega;
  const double c = std::cos(w * t);
  const double s = std::sin(w * t);
  const double s2 = std::sin(2.0 * w * t);
  const double value = init.var_x * c * c + init.var_p / (p.m * p.m * w * w) * s * s +
                       init.sigma / (2.0 * p.m * w) * s2 +
                       2.0 * p.gamma * p.kbt / (p.m * w * w) * t -
                       p.gamma * p.kbt / (p.m * w * w * w) * s2;
  const double scale = init.var_x + init.var_p / (p.m * p.m * w * w) +
                       std::abs(init.sigma) / (2.0 * p.m * w) +
                       p.gamma * p.kbt / (p.m * w * w) * (2.0 * t + 1.0 / w);
  return detail::settle(value, scale);
}

namespace detail {

// gamma t - (1 - e^{-2 gamma t}) + (1 - e^{-4 gamma t})/4, which is O((gamma t)^3).
inline double free_thermal_bracket(double gt) {
  if (gt < 0.5) {
    // Coefficients ((-2)^n - (-4)^n / 4) / n!, the n < 3 terms cancel exactly.
    double sum = 0.0;
    double pow2 = -8.0;   // (-2)^3
    double pow4 = -64.0;  // (-4)^3
    double fact = 6.0;
    double gtn = gt * gt * gt;
    for (int n = 3; n < 40; ++n) {
      const double term = (pow2 - 0.25 * pow4) / fact * gtn;
      sum += term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
      pow2 *= -2.0;
      pow4 *= -4.0;
      fact *= (n + 1);
      gtn *= gt;
    }
    return sum;
  }
  return gt + std::expm1(-2.0 * gt) - 0.25 * std::expm1(-4.0 * gt);
}

}  // namespace detail

/// Free Brownian particle (omega = 0). The sigma(0) coefficient is
/// (1 - e^{-2 gamma t}) / (2 m gamma); this is what the omega = 0 moment
/// equations integrate to and is dimensionally a length^2.
inline double free_particle_variance(const OscillatorParams& p, const QuadraticState& init, double t) {
  detail::require_time(t);
  if (!(p.gamma > 0.0)) throw Error(ErrorCode::ZeroDamping, "free_particle_variance requires gamma > 0");
  const double g = p.gamma;
  const double spread = -std::expm1(-2.0 * g * t) / (2.0 * g);  // (1 - e^{-2gt}) / (2g)
  const double from_x = init.var_x;
  const double from_p = spread * spread * init.var_p / (p.m * p.m);
  const double from_sigma = spread * init.sigma / p.m;
  const double thermal = p.kbt / (p.m * g * g) * detail::free_thermal_bracket(g * t);
  const double value = from_x + from_p + from_sigma + thermal;
  return detail::settle(value, from_x + from_p + std::abs(from_sigma) + thermal);
}

/// Full first and second moments at time t from closed forms. Thermal
/// covariances use the stationary solution of the Lyapunov equation; the
/// position variance is routed through exact_variance (omega > 0) or
/// free_particle_variance (omega = 0).
inline QuadraticState closed_form_second_moments(const OscillatorParams& p, const QuadraticState& init,
                                                 double t) {
  detail::require_time(t);
  const MeanPropagator prop = mean_propagator(p, t);
  const HyperbolicKernel k = kernel(p, t);
  const detail::PropagatorSquares sq = detail::propagator_squares(p, k);
  const double m = p.m;
  const double w2 = p.omega * p.omega;

  QuadraticState out;
  out.mean_x = prop.a * init.mean_x + prop.b / m * init.mean_p;
  out.mean_p = -m * w2 * prop.b * init.mean_x + prop.c * init.mean_p;

  if (p.omega > 0.0) {
    out.var_x = exact_variance(p, init, t);
  } else if (p.gamma > 0.0) {
    out.var_x = free_particle_variance(p, init, t);
  } else {
    out.var_x = sq.aa * init.var_x + sq.ab * init.sigma / m + sq.bb * init.var_p / (m * m);
  }

  const double cov_det = -m * w2 * sq.ab * init.var_x + (sq.ac - w2 * sq.bb) * 0.5 * init.sigma +
                         sq.bc * init.var_p / m;
  const double cov_thermal = p.kbt * 2.0 * p.gamma * k.sh2;
  out.sigma = 2.0 * (cov_det + cov_thermal);

  const double pp_det = m * m * w2 * w2 * sq.bb * init.var_x - m * w2 * sq.bc * init.sigma + sq.cc * init.var_p;
  const double pp_thermal =
      m * p.kbt * (-std::expm1(-2.0 * p.gamma * t) + p.gamma * k.s2 - 2.0 * p.gamma * p.gamma * k.sh2);
  out.var_p = detail::settle(pp_det + pp_thermal, std::abs(pp_det) + m * p.kbt);
  return out;
}

}  // namespace qbo

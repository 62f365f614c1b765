#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <map>
#include <string>
#include <string_view>

#include "qbo/error.hpp"

namespace qbo {

/// Physical (or market) parameters of the Brownian oscillator.
///
/// `omega == 0` selects the free particle. Time, mass and energy are in
/// dimensionless simulation units with hbar = 1 unless overridden.
struct OscillatorParams {
  double m = 1.0;
  double gamma = 0.0;
  double omega = 0.0;
  double kbt = 0.0;
  double hbar = 1.0;

  friend bool operator==(const OscillatorParams&, const OscillatorParams&) = default;
};

using ParamMap = std::map<std::string, double, std::less<>>;

inline constexpr std::array<std::string_view, 5> kParamNames = {"m", "gamma", "omega", "kbt", "hbar"};

/// Validates a name->value map. `hbar` defaults to 1; every other name is
/// required. Nothing is clamped.
inline OscillatorParams validate_params(const ParamMap& raw) {
  auto fetch = [&](std::string_view name) -> double {
    auto it = raw.find(name);
    if (it == raw.end()) {
      if (name == "hbar") return 1.0;
      throw Error(ErrorCode::InvalidSpec, "missing parameter '" + std::string(name) + "'");
    }
    if (!std::isfinite(it->second))
      throw Error(ErrorCode::NonFinite, "parameter '" + std::string(name) + "' is not finite");
    return it->second;
  };
  for (const auto& [key, value] : raw) {
    if (std::find(kParamNames.begin(), kParamNames.end(), key) == kParamNames.end())
      throw Error(ErrorCode::InvalidSpec, "unknown parameter '" + key + "'");
  }

  OscillatorParams p;
  p.m = fetch("m");
  p.gamma = fetch("gamma");
  p.omega = fetch("omega");
  p.kbt = fetch("kbt");
  p.hbar = fetch("hbar");

  if (!(p.m > 0.0)) throw Error(ErrorCode::NonPositiveMass, "field 'm' must be > 0");
  if (!(p.hbar > 0.0)) throw Error(ErrorCode::NegativeParameter, "field 'hbar' must be > 0");
  if (p.gamma < 0.0) throw Error(ErrorCode::NegativeParameter, "field 'gamma' must be >= 0");
  if (p.omega < 0.0) throw Error(ErrorCode::NegativeParameter, "field 'omega' must be >= 0");
  if (p.kbt < 0.0) throw Error(ErrorCode::NegativeParameter, "field 'kbt' must be >= 0");
  return p;
}

inline ParamMap to_map(const OscillatorParams& p) {
  return {{"m", p.m}, {"gamma", p.gamma}, {"omega", p.omega}, {"kbt", p.kbt}, {"hbar", p.hbar}};
}

// ---------------------------------------------------------------------------
// Damping regimes

enum class RegimeKind { Underdamped, Overdamped, Critical };

constexpr std::string_view to_string(RegimeKind k) {
  switch (k) {
    case RegimeKind::Underdamped: return "underdamped";
    case RegimeKind::Overdamped: return "overdamped";
    case RegimeKind::Critical: return "critical";
  }
  return "?";
}

/// Relative half-width of the critical band around gamma == omega.
inline constexpr double kCriticalRelTol = 1e-9;
inline constexpr double kCriticalAbsFloor = 1e-300;

struct Regime {
  RegimeKind kind;
  /// gamma^2 - omega^2, evaluated as (gamma - omega)(gamma + omega).
  double discriminant;
  /// Half-width of the critical band.
  double band;
};

inline Regime classify_regime(const OscillatorParams& p) {
  const double d = (p.gamma - p.omega) * (p.gamma + p.omega);
  const double band =
      kCriticalRelTol * std::max({p.gamma * p.gamma, p.omega * p.omega, kCriticalAbsFloor});
  RegimeKind kind = RegimeKind::Critical;
  if (d > band)
    kind = RegimeKind::Overdamped;
  else if (d < -band)
    kind = RegimeKind::Underdamped;
  return {kind, d, band};
}

// ---------------------------------------------------------------------------
// Moment containers

enum class StateMode { Quantum, Classical };

/// First moments and symmetrized central second moments.
/// `sigma` is <xp + px> - 2<x><p>.
struct QuadraticState {
  double mean_x = 0.0;
  double mean_p = 0.0;
  double var_x = 0.0;
  double var_p = 0.0;
  double sigma = 0.0;

  friend bool operator==(const QuadraticState&, const QuadraticState&) = default;

  double raw_x2() const { return var_x + mean_x * mean_x; }
  double raw_p2() const { return var_p + mean_p * mean_p; }
  double raw_xp_sym() const { return sigma + 2.0 * mean_x * mean_p; }
};

/// Robertson-Schroedinger determinant var_x var_p - sigma^2 / 4.
inline double uncertainty_product(const QuadraticState& q) {
  return q.var_x * q.var_p - 0.25 * q.sigma * q.sigma;
}

/// Builds a checked state. Both modes reject negative variances and
/// |sigma| > 2 sqrt(var_x var_p). Quantum mode additionally warns (on
/// `warn`) when the uncertainty relation is violated; zero initial data is
/// routinely fed into the quantum formulas so this is not an error.
inline QuadraticState make_quadratic_state(double mean_x, double mean_p, double var_x, double var_p,
                                           double sigma, StateMode mode = StateMode::Quantum,
                                           double hbar = 1.0, std::ostream* warn = &std::clog) {
  for (double v : {mean_x, mean_p, var_x, var_p, sigma})
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "state moment is not finite");
  if (var_x < 0.0) throw Error(ErrorCode::NegativeParameter, "field 'var_x' must be >= 0");
  if (var_p < 0.0) throw Error(ErrorCode::NegativeParameter, "field 'var_p' must be >= 0");
  const double bound = 2.0 * std::sqrt(var_x * var_p);
  if (std::abs(sigma) > bound * (1.0 + 1e-12)) {
    throw Error(ErrorCode::CovarianceBound,
                "|sigma| = " + std::to_string(std::abs(sigma)) + " exceeds 2 sqrt(var_x var_p) = " +
                    std::to_string(bound));
  }
  QuadraticState q{mean_x, mean_p, var_x, var_p, sigma};
  if (mode == StateMode::Quantum && warn != nullptr &&
      uncertainty_product(q) < 0.25 * hbar * hbar * (1.0 - 1e-12)) {
    *warn << "warning: initial state violates the uncertainty relation "
             "(var_x var_p - sigma^2/4 < hbar^2/4)\n";
  }
  return q;
}

/// Symmetric-ordered fourth moments about the means:
/// <x^4>, <x^3 p + p x^3>, <x^2 p^2 + p^2 x^2>, <x p^3 + p^3 x>, <p^4>.
struct FourthMomentVector {
  double x4 = 0.0;
  double x3p = 0.0;
  double x2p2 = 0.0;
  double xp3 = 0.0;
  double p4 = 0.0;

  friend bool operator==(const FourthMomentVector&, const FourthMomentVector&) = default;

  std::array<double, 5> as_array() const { return {x4, x3p, x2p2, xp3, p4}; }
  static FourthMomentVector from_array(const std::array<double, 5>& a) {
    return {a[0], a[1], a[2], a[3], a[4]};
  }
};

struct MomentState {
  double t = 0.0;
  QuadraticState quad;
  FourthMomentVector fourth;
};

/// Fourth moments of the zero-mean Gaussian state with the given second
/// moments. The x^2 p^2 entry carries the ordering correction: for Gaussian
/// Wigner functions <x^2 p^2>_Weyl = var_x var_p + sigma^2 / 2 and
/// (x^2 p^2 + p^2 x^2) / 2 equals the Weyl-ordered x^2 p^2 minus hbar^2 / 2.
inline FourthMomentVector gaussian_fourth_moments(const QuadraticState& q, double hbar = 1.0) {
  if (q.mean_x != 0.0 || q.mean_p != 0.0)
    throw Error(ErrorCode::NonZeroMean, "Gaussian completion requires zero means");
  FourthMomentVector f;
  f.x4 = 3.0 * q.var_x * q.var_x;
  f.p4 = 3.0 * q.var_p * q.var_p;
  f.x3p = 3.0 * q.var_x * q.sigma;
  f.xp3 = 3.0 * q.var_p * q.sigma;
  f.x2p2 = 2.0 * q.var_x * q.var_p + q.sigma * q.sigma - hbar * hbar;
  return f;
}

}  // namespace qbo

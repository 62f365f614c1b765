#pragma once

// Test-side reference implementations. Nothing here calls into the library
// routine it is used to check.

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qbo/algebra/poly_operator.hpp"
#include "qbo/model.hpp"

namespace oracle {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;

/// x and p as truncated ladder matrices (m omega = 1). Products of total
/// degree <= guard are exact on the leading (levels - guard) block.
struct Ladder {
  int levels = 60;
  int guard = 20;
  double hbar = 1.0;
  Mat x, p;

  explicit Ladder(int n = 60, int g = 20, double h = 1.0) : levels(n), guard(g), hbar(h) {
    Mat a = Mat::Zero(n, n);
    for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    const Mat ad = a.adjoint();
    const double s = std::sqrt(hbar / 2.0);
    x = s * (a + ad);
    p = cd(0.0, s) * (ad - a);
  }

  int kept() const { return levels - guard; }
  Mat block(const Mat& m) const { return m.topLeftCorner(kept(), kept()); }

  Mat power(const Mat& m, int k) const {
    Mat r = Mat::Identity(levels, levels);
    for (int i = 0; i < k; ++i) r = r * m;
    return r;
  }

  Mat word(const std::string& letters) const {
    Mat r = Mat::Identity(levels, levels);
    for (char c : letters) r = r * (c == 'x' ? x : p);
    return r;
  }

  /// sum c hbar^h x^a p^b
  Mat of(const qbo::algebra::ExactOperator& op) const {
    Mat r = Mat::Zero(levels, levels);
    for (const auto& [mono, c] : op.terms()) {
      const cd coeff(c.re.to_double(), c.im.to_double());
      r += coeff * std::pow(hbar, mono.h) * power(x, mono.a) * power(p, mono.b);
    }
    return r;
  }

  /// x^a p^b + p^b x^a, or the pure power.
  Mat sym(int a, int b) const {
    const Mat xa = power(x, a), pb = power(p, b);
    if (a == 0 || b == 0) return xa * pb;
    return xa * pb + pb * xa;
  }
};

inline double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

/// Heisenberg-picture generator of the damped oscillator on matrices:
/// (i/hbar)[H, A] - (i gamma/hbar){[A, x], p} - (2 m gamma kBT / hbar^2)[[A, x], x].
inline Mat adjoint_generator(const Ladder& l, const qbo::OscillatorParams& q, const Mat& a) {
  const double h = l.hbar;
  const Mat hamiltonian = l.p * l.p / (2.0 * q.m) + 0.5 * q.m * q.omega * q.omega * l.x * l.x;
  const Mat ax = a * l.x - l.x * a;
  const Mat unitary = cd(0.0, 1.0 / h) * (hamiltonian * a - a * hamiltonian);
  const Mat friction = cd(0.0, -q.gamma / h) * (ax * l.p + l.p * ax);
  const Mat diffusion = (-2.0 * q.m * q.gamma * q.kbt / (h * h)) * (ax * l.x - l.x * ax);
  return unitary + friction + diffusion;
}

/// Kernel fields from complex Omega = sqrt(gamma^2 - omega^2).
struct ComplexKernel {
  cd c2, s2, ch2, sh2, ch, sh;
};

inline ComplexKernel complex_kernel(double gamma, double omega, double t) {
  const cd big(std::sqrt(cd(gamma * gamma - omega * omega)));
  const cd damp(std::exp(-gamma * t));
  ComplexKernel k;
  k.ch = damp * std::cosh(big * t);
  k.sh = damp * std::sinh(big * t) / big;
  k.c2 = damp * damp * std::cosh(2.0 * big * t);
  k.s2 = damp * damp * std::sinh(2.0 * big * t) / big;
  k.ch2 = k.ch * k.ch;
  k.sh2 = k.sh * k.sh;
  return k;
}

/// (<x>, <p>, var_x, sigma, var_p) by classical RK4 in long double on the
/// hand-written second-moment equations.
struct SecondMoments {
  long double mx, mp, vx, sg, vp;
};

inline SecondMoments rk4_second_moments(const qbo::OscillatorParams& q, const qbo::QuadraticState& s0, double t,
                                        long steps) {
  const long double m = q.m, g = q.gamma, w2 = static_cast<long double>(q.omega) * q.omega, k = q.kbt;
  auto f = [&](const SecondMoments& y) {
    return SecondMoments{y.mp / m,
                         -m * w2 * y.mx - 2 * g * y.mp,
                         y.sg / m,
                         2 * y.vp / m - 2 * m * w2 * y.vx - 2 * g * y.sg,
                         -m * w2 * y.sg - 4 * g * y.vp + 4 * m * g * k};
  };
  auto axpy = [](const SecondMoments& y, long double h, const SecondMoments& d) {
    return SecondMoments{y.mx + h * d.mx, y.mp + h * d.mp, y.vx + h * d.vx, y.sg + h * d.sg, y.vp + h * d.vp};
  };
  SecondMoments y{s0.mean_x, s0.mean_p, s0.var_x, s0.sigma, s0.var_p};
  const long double h = static_cast<long double>(t) / steps;
  for (long i = 0; i < steps; ++i) {
    const auto k1 = f(y);
    const auto k2 = f(axpy(y, h / 2, k1));
    const auto k3 = f(axpy(y, h / 2, k2));
    const auto k4 = f(axpy(y, h, k3));
    y = SecondMoments{y.mx + h / 6 * (k1.mx + 2 * k2.mx + 2 * k3.mx + k4.mx),
                      y.mp + h / 6 * (k1.mp + 2 * k2.mp + 2 * k3.mp + k4.mp),
                      y.vx + h / 6 * (k1.vx + 2 * k2.vx + 2 * k3.vx + k4.vx),
                      y.sg + h / 6 * (k1.sg + 2 * k2.sg + 2 * k3.sg + k4.sg),
                      y.vp + h / 6 * (k1.vp + 2 * k2.vp + 2 * k3.vp + k4.vp)};
  }
  return y;
}

/// Composite Simpson rule in long double.
template <class F>
long double simpson(F&& f, long double a, long double b, long n) {
  if (n % 2) ++n;
  const long double h = (b - a) / n;
  long double sum = f(a) + f(b);
  for (long i = 1; i < n; ++i) sum += (i % 2 ? 4 : 2) * f(a + i * h);
  return sum * h / 3;
}

/// 4 gamma omega^2 int_0^t b(s)^2 ds, with b(s) = e^{-gamma s} sinh(Omega s)/Omega
/// evaluated in long double complex arithmetic (omega != gamma).
inline long double thermal_bracket_quadrature(double gamma, double omega, double t, long n = 20000) {
  using lcd = std::complex<long double>;
  const long double g = gamma, w = omega;
  const lcd big = std::sqrt(lcd(g * g - w * w));
  auto b2 = [&](long double s) {
    const lcd v = std::exp(-g * s) * std::sinh(big * s) / big;
    return (v * v).real();
  };
  return 4 * g * w * w * simpson(b2, 0.0L, static_cast<long double>(t), n);
}

/// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  long double sx = 0, sy = 0;
  const auto n = static_cast<long double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const long double mx = sx / n, my = sy / n;
  long double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return static_cast<double>(sxy / sxx);
}

}  // namespace oracle

#pragma once

// Admissibility checks for moment initial data.

#include <array>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "qbo/algebra/poly_operator.hpp"
#include "qbo/model.hpp"

namespace qbo {

/// The bounds a fourth-moment vector must meet to be used as initial data:
/// x4 >= var_x^2 and p4 >= var_p^2 (Cauchy-Schwarz on x^2 and p^2).
inline bool satisfies_moment_bounds(const MomentState& s) {
  return s.fourth.x4 >= s.quad.var_x * s.quad.var_x && s.fourth.p4 >= s.quad.var_p * s.quad.var_p;
}

/// Expectation of a canonical operator in the centred frame of `s`, using
/// the symmetrized-moment values carried by the state. Odd orders vanish.
inline std::complex<double> centred_expectation(const algebra::ExactOperator& op, const MomentState& s,
                                                double hbar) {
  std::complex<double> sum = 0.0;
  for (const auto& [mono, c] : algebra::to_symmetric_basis(op)) {
    double value = 0.0;
    switch (mono.degree()) {
      case 0: value = 1.0; break;
      case 2: value = mono.a == 2 ? s.quad.var_x : mono.a == 1 ? s.quad.sigma : s.quad.var_p; break;
      case 4: value = s.fourth.as_array()[static_cast<std::size_t>(4 - mono.a)]; break;
      default: value = 0.0; break;
    }
    sum += std::complex<double>(c.re.to_double(), c.im.to_double()) * std::pow(hbar, mono.h) * value;
  }
  return sum;
}

/// Gram matrix G_ij = <B_i B_j> of B = {1, x^2, (xp+px)/2, p^2} in the
/// centred frame. Every quantum state yields a positive semidefinite G.
inline Eigen::Matrix4cd quantum_gram_matrix(const MomentState& s, double hbar = 1.0) {
  using algebra::ComplexRational;
  using algebra::ExactOperator;
  using algebra::Rational;
  const std::array<ExactOperator, 4> ops = {
      ExactOperator::identity(), ExactOperator::monomial(2, 0),
      algebra::symmetrized<ComplexRational>(1, 1).scaled(ComplexRational(Rational(1, 2))),
      ExactOperator::monomial(0, 2)};
  Eigen::Matrix4cd g;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = centred_expectation(ops[i] * ops[j], s, hbar);
  return g;
}

/// Smallest eigenvalue of the quantum Gram matrix; negative means no
/// quantum state has these moments.
inline double quantum_positivity_margin(const MomentState& s, double hbar = 1.0) {
  const Eigen::Matrix4cd g = quantum_gram_matrix(s, hbar);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(g, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace qbo

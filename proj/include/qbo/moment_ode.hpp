#pragma once

// Mechanical derivation of moment equations from the Caldeira-Leggett
// generator acting on observables:
//   d<A>/dt = (-i/hbar)<[A,H]> - (i gamma/hbar)<{[A,x],p}>
//             - (2 m gamma kBT / hbar^2)<[x,[x,A]]>
// with H = p^2/(2m) + m omega^2 x^2 / 2. Parameters stay symbolic until
// `evaluate`.

#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qbo/algebra/param_poly.hpp"
#include "qbo/algebra/poly_operator.hpp"
#include "qbo/error.hpp"
#include "qbo/model.hpp"

namespace qbo {

/// Symmetrized monomial x^a p^b (+ p^b x^a).
struct SymMonomial {
  int a = 0;
  int b = 0;

  int degree() const { return a + b; }
  friend auto operator<=>(const SymMonomial&, const SymMonomial&) = default;

  std::string label() const {
    auto power = [](char c, int n) {
      if (n == 0) return std::string();
      return std::string(1, c) + (n > 1 ? std::to_string(n) : std::string());
    };
    if (a == 0 && b == 0) return "1";
    if (a == 0 || b == 0) return power('x', a) + power('p', b);
    return power('x', a) + power('p', b) + "+" + power('p', b) + power('x', a);
  }
};

/// Basis of symmetrized monomials of a given degree, ordered by descending
/// x-power: {x^4, x^3p+px^3, x^2p^2+p^2x^2, xp^3+p^3x, p^4} for degree 4.
inline std::vector<SymMonomial> moment_basis(int degree) {
  std::vector<SymMonomial> basis;
  for (int a = degree; a >= 0; --a) basis.push_back({a, degree - a});
  return basis;
}

/// d X/dt = generator X + forcing_linear Y + forcing_constant, where Y is the
/// basis of the next-lower even (or odd) order and entries are exact
/// functions of the parameters.
struct SymbolicMomentSystem {
  int order = 0;
  std::vector<SymMonomial> basis;
  std::vector<SymMonomial> lower_basis;
  std::vector<std::vector<algebra::ParamPoly>> generator;
  std::vector<std::vector<algebra::ParamPoly>> forcing_linear;
  std::vector<algebra::ParamPoly> forcing_constant;
};

/// Numeric form of SymbolicMomentSystem for a concrete parameter set.
struct MomentODESystem {
  int order = 0;
  std::vector<SymMonomial> basis;
  std::vector<SymMonomial> lower_basis;
  Eigen::MatrixXd generator;
  Eigen::MatrixXd forcing_linear;
  Eigen::VectorXd forcing_constant;
};

namespace detail {

using algebra::Atom;
using algebra::ComplexRational;
using algebra::ParamPoly;
using algebra::Rational;
using algebra::SymbolicOperator;

inline SymbolicOperator hamiltonian() {
  const ParamPoly half(ComplexRational(Rational(1, 2)));
  const ParamPoly kinetic = half * ParamPoly::atom(Atom::Mass, -1);
  const ParamPoly potential = half * ParamPoly::atom(Atom::Mass) * ParamPoly::atom(Atom::Omega, 2);
  return SymbolicOperator::monomial(0, 2, 0, kinetic) + SymbolicOperator::monomial(2, 0, 0, potential);
}

/// Right-hand side of the Heisenberg-picture generator applied to A.
inline SymbolicOperator moment_generator(const SymbolicOperator& a) {
  const SymbolicOperator x = SymbolicOperator::x();
  const SymbolicOperator p = SymbolicOperator::p();
  const ParamPoly minus_i(ComplexRational(Rational(0), Rational(-1)));
  const ParamPoly gamma = ParamPoly::atom(Atom::Gamma);
  const ParamPoly decoherence =
      ParamPoly(-2) * ParamPoly::atom(Atom::Mass) * gamma * ParamPoly::atom(Atom::KbT);

  const SymbolicOperator unitary = algebra::commutator(a, hamiltonian()).hbar_shifted(-1).scaled(minus_i);
  const SymbolicOperator dissipation =
      algebra::anticommutator(algebra::commutator(a, x), p).hbar_shifted(-1).scaled(minus_i * gamma);
  const SymbolicOperator dephasing =
      algebra::commutator(x, algebra::commutator(x, a)).hbar_shifted(-2).scaled(decoherence);
  return unitary + dissipation + dephasing;
}

}  // namespace detail

/// Derives the closed moment system of the given order (1, 2 or 4).
/// Throws ClosureViolation if a derivative leaves the span of the basis plus
/// lower orders, or acquires an imaginary coefficient.
inline SymbolicMomentSystem derive_symbolic(int order) {
  using algebra::ParamPoly;
  if (order != 1 && order != 2 && order != 4)
    throw Error(ErrorCode::UnsupportedOrder, "moment order must be 1, 2 or 4, got " + std::to_string(order));

  SymbolicMomentSystem sys;
  sys.order = order;
  sys.basis = moment_basis(order);
  if (order == 4) sys.lower_basis = moment_basis(2);
  const std::size_t n = sys.basis.size();
  sys.generator.assign(n, std::vector<ParamPoly>(n));
  sys.forcing_linear.assign(n, std::vector<ParamPoly>(sys.lower_basis.size()));
  sys.forcing_constant.assign(n, ParamPoly());

  for (std::size_t row = 0; row < n; ++row) {
    const auto observable = algebra::symmetrized<ParamPoly>(sys.basis[row].a, sys.basis[row].b);
    const auto rhs = algebra::to_symmetric_basis(detail::moment_generator(observable));
    for (const auto& [mono, coeff] : rhs) {
      if (!coeff.is_real())
        throw Error(ErrorCode::ClosureViolation, "non-real coefficient in d<" + sys.basis[row].label() + ">/dt");
      const ParamPoly value = coeff * ParamPoly::atom(algebra::Atom::Hbar, mono.h);
      const SymMonomial target{mono.a, mono.b};
      if (target.degree() == order) {
        const auto col = static_cast<std::size_t>(order - target.a);
        sys.generator[row][col] += value;
      } else if (target.degree() == 0) {
        sys.forcing_constant[row] += value;
      } else if (order == 4 && target.degree() == 2) {
        sys.forcing_linear[row][static_cast<std::size_t>(2 - target.a)] += value;
      } else {
        throw Error(ErrorCode::ClosureViolation, "d<" + sys.basis[row].label() + ">/dt contains " + target.label());
      }
    }
  }
  return sys;
}

inline MomentODESystem evaluate(const SymbolicMomentSystem& sys, const OscillatorParams& params) {
  MomentODESystem out;
  out.order = sys.order;
  out.basis = sys.basis;
  out.lower_basis = sys.lower_basis;
  const auto n = static_cast<Eigen::Index>(sys.basis.size());
  const auto l = static_cast<Eigen::Index>(sys.lower_basis.size());
  out.generator.resize(n, n);
  out.forcing_linear.resize(n, l);
  out.forcing_constant.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out.generator(i, j) = sys.generator[i][j].evaluate(params).real();
    for (Eigen::Index j = 0; j < l; ++j) out.forcing_linear(i, j) = sys.forcing_linear[i][j].evaluate(params).real();
    out.forcing_constant(i) = sys.forcing_constant[i].evaluate(params).real();
  }
  return out;
}

inline MomentODESystem derive_moment_ode(int order, const OscillatorParams& params) {
  return evaluate(derive_symbolic(order), params);
}

/// Plain-text dump, one equation per basis element.
inline std::string format_system(const SymbolicMomentSystem& sys) {
  std::ostringstream os;
  for (std::size_t row = 0; row < sys.basis.size(); ++row) {
    os << "d<" << sys.basis[row].label() << ">/dt =";
    bool any = false;
    auto emit = [&](const algebra::ParamPoly& c, const std::string& what) {
      if (c.is_zero()) return;
      os << (any ? " + " : " ") << "(" << c.str() << ")" << (what.empty() ? "" : "*<" + what + ">");
      any = true;
    };
    for (std::size_t j = 0; j < sys.basis.size(); ++j) emit(sys.generator[row][j], sys.basis[j].label());
    for (std::size_t j = 0; j < sys.lower_basis.size(); ++j) emit(sys.forcing_linear[row][j], sys.lower_basis[j].label());
    emit(sys.forcing_constant[row], "");
    if (!any) os << " 0";
    os << '\n';
  }
  return os.str();
}

}  // namespace qbo

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <string>

#include "qbo/algebra/rational.hpp"
#include "qbo/model.hpp"

namespace qbo::algebra {

/// Opaque parameter atoms that appear in derived moment equations.
enum class Atom : int { Mass = 0, Gamma, Omega, KbT, Hbar };

inline constexpr int kAtomCount = 5;
inline constexpr std::array<const char*, kAtomCount> kAtomNames = {"m", "gamma", "omega", "kbt", "hbar"};

/// Laurent polynomial in (m, gamma, omega, kbt, hbar) with exact complex
/// rational coefficients. Exponents may be negative (1/m, 1/hbar).
class ParamPoly {
 public:
  using Exponents = std::array<int, kAtomCount>;

  ParamPoly() = default;
  ParamPoly(ComplexRational c) {  // NOLINT(implicit)
    if (!c.is_zero()) terms_[Exponents{}] = c;
  }
  ParamPoly(std::int64_t c) : ParamPoly(ComplexRational(c)) {}  // NOLINT(implicit)

  static ParamPoly atom(Atom a, int power = 1) {
    Exponents e{};
    e[static_cast<int>(a)] = power;
    ParamPoly p;
    p.terms_[e] = ComplexRational(1);
    return p;
  }

  /// c * m^em * gamma^eg * omega^ew * kbt^ek * hbar^eh
  static ParamPoly monomial(ComplexRational c, Exponents e) {
    ParamPoly p;
    if (!c.is_zero()) p.terms_[e] = c;
    return p;
  }

  const std::map<Exponents, ComplexRational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_real() const {
    for (const auto& [e, c] : terms_)
      if (!c.is_real()) return false;
    return true;
  }

  friend ParamPoly operator+(ParamPoly a, const ParamPoly& b) {
    for (const auto& [e, c] : b.terms_) a.accumulate(e, c);
    return a;
  }
  friend ParamPoly operator-(const ParamPoly& a) {
    ParamPoly r;
    for (const auto& [e, c] : a.terms_) r.terms_[e] = -c;
    return r;
  }
  friend ParamPoly operator-(const ParamPoly& a, const ParamPoly& b) { return a + (-b); }
  friend ParamPoly operator*(const ParamPoly& a, const ParamPoly& b) {
    ParamPoly r;
    for (const auto& [ea, ca] : a.terms_) {
      for (const auto& [eb, cb] : b.terms_) {
        Exponents e{};
        for (int i = 0; i < kAtomCount; ++i) e[i] = ea[i] + eb[i];
        r.accumulate(e, ca * cb);
      }
    }
    return r;
  }
  ParamPoly& operator+=(const ParamPoly& o) { return *this = *this + o; }
  ParamPoly& operator-=(const ParamPoly& o) { return *this = *this - o; }
  ParamPoly& operator*=(const ParamPoly& o) { return *this = *this * o; }

  friend bool operator==(const ParamPoly&, const ParamPoly&) = default;

  std::complex<double> evaluate(const OscillatorParams& p) const {
    const std::array<double, kAtomCount> values = {p.m, p.gamma, p.omega, p.kbt, p.hbar};
    std::complex<double> sum = 0.0;
    for (const auto& [e, c] : terms_) {
      double v = 1.0;
      for (int i = 0; i < kAtomCount; ++i)
        if (e[i] != 0) v *= std::pow(values[i], e[i]);
      sum += std::complex<double>(c.re.to_double(), c.im.to_double()) * v;
    }
    return sum;
  }

  std::string str() const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [e, c] : terms_) {
      std::string coeff = c.str();
      bool negative = !coeff.empty() && coeff[0] == '-';
      if (negative) coeff.erase(0, 1);
      out += first ? (negative ? "-" : "") : (negative ? " - " : " + ");
      first = false;
      std::string factors;
      for (int i = 0; i < kAtomCount; ++i) {
        if (e[i] == 0) continue;
        if (!factors.empty()) factors += "*";
        factors += kAtomNames[i];
        if (e[i] != 1) factors += "^" + std::to_string(e[i]);
      }
      if (factors.empty())
        out += coeff;
      else if (coeff == "1")
        out += factors;
      else
        out += coeff + "*" + factors;
    }
    return out;
  }

 private:
  void accumulate(const Exponents& e, const ComplexRational& c) {
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      if (!c.is_zero()) terms_.emplace(e, c);
      return;
    }
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
  }

  std::map<Exponents, ComplexRational> terms_;
};

}  // namespace qbo::algebra

#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>

#include "qbo/error.hpp"

namespace qbo::algebra {

/// Exact rational with 64-bit numerator/denominator; every operation checks
/// for overflow through 128-bit intermediates.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num_(n) {}  // NOLINT(implicit)
  Rational(std::int64_t n, std::int64_t d) { *this = make(n, d); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_zero() const { return num_ == 0; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Rational operator+(const Rational& a, const Rational& b) {
    const __int128 n = static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_;
    const __int128 d = static_cast<__int128>(a.den_) * b.den_;
    return reduce(n, d);
  }
  friend Rational operator-(const Rational& a) { return reduce(-static_cast<__int128>(a.num_), a.den_); }
  friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return reduce(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw Error(ErrorCode::RationalOverflow, "division by zero");
    return reduce(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }

  friend bool operator==(const Rational&, const Rational&) = default;

  std::string str() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }
  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

 private:
  static Rational make(std::int64_t n, std::int64_t d) {
    if (d == 0) throw Error(ErrorCode::RationalOverflow, "zero denominator");
    return reduce(n, d);
  }

  static Rational reduce(__int128 n, __int128 d) {
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 a = n < 0 ? -n : n;
    __int128 b = d;
    while (b != 0) {
      const __int128 r = a % b;
      a = b;
      b = r;
    }
    if (a > 1) {
      n /= a;
      d /= a;
    }
    if (n == 0) d = 1;
    constexpr __int128 lim = INT64_MAX;
    if (n > lim || n < -lim || d > lim) throw Error(ErrorCode::RationalOverflow, "rational overflow");
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// re + i im with exact rational parts.
struct ComplexRational {
  Rational re;
  Rational im;

  constexpr ComplexRational() = default;
  constexpr ComplexRational(Rational r) : re(r) {}  // NOLINT(implicit)
  constexpr ComplexRational(std::int64_t r) : re(r) {}  // NOLINT(implicit)
  constexpr ComplexRational(Rational r, Rational i) : re(r), im(i) {}

  static ComplexRational i() { return {Rational(0), Rational(1)}; }

  bool is_zero() const { return re.is_zero() && im.is_zero(); }
  bool is_real() const { return im.is_zero(); }
  ComplexRational conj() const { return {re, -im}; }

  friend ComplexRational operator+(const ComplexRational& a, const ComplexRational& b) {
    return {a.re + b.re, a.im + b.im};
  }
  friend ComplexRational operator-(const ComplexRational& a) { return {-a.re, -a.im}; }
  friend ComplexRational operator-(const ComplexRational& a, const ComplexRational& b) {
    return {a.re - b.re, a.im - b.im};
  }
  friend ComplexRational operator*(const ComplexRational& a, const ComplexRational& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend ComplexRational operator/(const ComplexRational& a, const ComplexRational& b) {
    const Rational norm = b.re * b.re + b.im * b.im;
    const ComplexRational n = a * b.conj();
    return {n.re / norm, n.im / norm};
  }
  ComplexRational& operator+=(const ComplexRational& o) { return *this = *this + o; }
  ComplexRational& operator-=(const ComplexRational& o) { return *this = *this - o; }
  ComplexRational& operator*=(const ComplexRational& o) { return *this = *this * o; }

  friend bool operator==(const ComplexRational&, const ComplexRational&) = default;

  std::string str() const {
    if (im.is_zero()) return re.str();
    if (re.is_zero()) return im.str() + "i";
    return "(" + re.str() + (im.num() < 0 ? "" : "+") + im.str() + "i)";
  }
};

}  // namespace qbo::algebra

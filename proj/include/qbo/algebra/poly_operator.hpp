#pragma once

// Noncommutative polynomials in x and p with [x, p] = i hbar, stored in the
// canonical order x^a p^b. Powers of hbar are tracked in the monomial key so
// coefficients stay exact (complex rationals, or symbolic parameter
// polynomials for the moment derivation).

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qbo/algebra/param_poly.hpp"
#include "qbo/algebra/rational.hpp"

namespace qbo::algebra {

/// x^a p^b hbar^h
struct OpMonomial {
  int a = 0;
  int b = 0;
  int h = 0;

  int degree() const { return a + b; }
  friend auto operator<=>(const OpMonomial&, const OpMonomial&) = default;
};

template <class Coeff>
class PolyOperator {
 public:
  using Terms = std::map<OpMonomial, Coeff>;

  PolyOperator() = default;

  static PolyOperator monomial(int a, int b, int h = 0, Coeff c = Coeff(1)) {
    PolyOperator op;
    op.add_term({a, b, h}, c);
    return op;
  }
  static PolyOperator identity() { return monomial(0, 0); }
  static PolyOperator scalar(Coeff c) { return monomial(0, 0, 0, std::move(c)); }
  static PolyOperator x() { return monomial(1, 0); }
  static PolyOperator p() { return monomial(0, 1); }

  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int degree() const {
    int d = -1;
    for (const auto& [mono, c] : terms_) d = std::max(d, mono.degree());
    return d;
  }

  /// Coefficient of x^a p^b hbar^h (zero when absent).
  Coeff coefficient(int a, int b, int h) const {
    auto it = terms_.find(OpMonomial{a, b, h});
    return it == terms_.end() ? Coeff{} : it->second;
  }

  void add_term(OpMonomial mono, const Coeff& c) {
    if (c.is_zero()) return;
    auto it = terms_.find(mono);
    if (it == terms_.end()) {
      terms_.emplace(mono, c);
      return;
    }
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
  }

  friend PolyOperator operator+(PolyOperator a, const PolyOperator& b) {
    for (const auto& [mono, c] : b.terms_) a.add_term(mono, c);
    return a;
  }
  friend PolyOperator operator-(const PolyOperator& a) {
    PolyOperator r;
    for (const auto& [mono, c] : a.terms_) r.terms_.emplace(mono, -c);
    return r;
  }
  friend PolyOperator operator-(const PolyOperator& a, const PolyOperator& b) { return a + (-b); }

  /// Operator product, reordered with
  /// p^b x^c = sum_k k! C(b,k) C(c,k) (-i hbar)^k x^{c-k} p^{b-k}.
  friend PolyOperator operator*(const PolyOperator& lhs, const PolyOperator& rhs) {
    PolyOperator r;
    for (const auto& [ml, cl] : lhs.terms_) {
      for (const auto& [mr, cr] : rhs.terms_) {
        const Coeff base = cl * cr;
        const int kmax = std::min(ml.b, mr.a);
        ComplexRational weight(1);  // k! C(b,k) C(c,k) (-i)^k, built incrementally
        for (int k = 0; k <= kmax; ++k) {
          if (k > 0) {
            weight = weight * ComplexRational(Rational((ml.b - k + 1) * (mr.a - k + 1), k)) *
                     ComplexRational(Rational(0), Rational(-1));
          }
          r.add_term({ml.a + mr.a - k, ml.b + mr.b - k, ml.h + mr.h + k}, base * Coeff(weight));
        }
      }
    }
    return r;
  }

  PolyOperator& operator+=(const PolyOperator& o) { return *this = *this + o; }
  PolyOperator& operator-=(const PolyOperator& o) { return *this = *this - o; }
  PolyOperator& operator*=(const PolyOperator& o) { return *this = *this * o; }

  PolyOperator scaled(const Coeff& c) const {
    PolyOperator r;
    for (const auto& [mono, v] : terms_) r.add_term(mono, v * c);
    return r;
  }

  /// Multiplies by hbar^k (k may be negative; the result must keep h >= 0).
  PolyOperator hbar_shifted(int k) const {
    PolyOperator r;
    for (const auto& [mono, v] : terms_) {
      if (mono.h + k < 0) throw Error(ErrorCode::ClosureViolation, "negative hbar power after division");
      r.terms_.emplace(OpMonomial{mono.a, mono.b, mono.h + k}, v);
    }
    return r;
  }

  friend bool operator==(const PolyOperator&, const PolyOperator&) = default;

  std::string str() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      const auto& [mono, c] = *it;
      if (!out.empty()) out += " + ";
      out += "(" + c.str() + ")";
      if (mono.h) out += "*hbar" + (mono.h > 1 ? "^" + std::to_string(mono.h) : std::string());
      if (mono.a) out += "*x" + (mono.a > 1 ? "^" + std::to_string(mono.a) : std::string());
      if (mono.b) out += "*p" + (mono.b > 1 ? "^" + std::to_string(mono.b) : std::string());
    }
    return out;
  }

 private:
  Terms terms_;
};

using ExactOperator = PolyOperator<ComplexRational>;
using SymbolicOperator = PolyOperator<ParamPoly>;

template <class Coeff>
PolyOperator<Coeff> commutator(const PolyOperator<Coeff>& a, const PolyOperator<Coeff>& b) {
  return a * b - b * a;
}

template <class Coeff>
PolyOperator<Coeff> anticommutator(const PolyOperator<Coeff>& a, const PolyOperator<Coeff>& b) {
  return a * b + b * a;
}

// ---------------------------------------------------------------------------
// Words in x and p, reduced by the single rewrite rule p x -> x p - i hbar.

/// A product of letters 'x' / 'p' times c hbar^h, in arbitrary order.
template <class Coeff>
struct WordTerm {
  std::string letters;
  int h = 0;
  Coeff c = Coeff(1);
};

namespace detail {

inline ExactOperator canonical_word(const std::string& word, std::map<std::string, ExactOperator>& memo) {
  if (auto it = memo.find(word); it != memo.end()) return it->second;
  ExactOperator result;
  const auto swap_at = word.find("px");
  if (swap_at == std::string::npos) {
    const auto a = static_cast<int>(std::count(word.begin(), word.end(), 'x'));
    const auto b = static_cast<int>(word.size()) - a;
    result = ExactOperator::monomial(a, b);
  } else {
    std::string swapped = word;
    swapped[swap_at] = 'x';
    swapped[swap_at + 1] = 'p';
    std::string contracted = word.substr(0, swap_at) + word.substr(swap_at + 2);
    result = canonical_word(swapped, memo) +
             canonical_word(contracted, memo).hbar_shifted(1).scaled(ComplexRational(Rational(0), Rational(-1)));
  }
  memo.emplace(word, result);
  return result;
}

}  // namespace detail

/// Rewrites an unordered sum of words to the canonical x^a p^b form.
template <class Coeff>
PolyOperator<Coeff> canonicalize(std::span<const WordTerm<Coeff>> expr) {
  std::map<std::string, ExactOperator> memo;
  PolyOperator<Coeff> out;
  for (const auto& term : expr) {
    for (char ch : term.letters)
      if (ch != 'x' && ch != 'p')
        throw Error(ErrorCode::InvalidSpec, std::string("invalid operator letter '") + ch + "'");
    const ExactOperator canon = detail::canonical_word(term.letters, memo);
    for (const auto& [mono, v] : canon.terms())
      out.add_term({mono.a, mono.b, mono.h + term.h}, Coeff(v) * term.c);
  }
  return out;
}

template <class Coeff = ComplexRational>
PolyOperator<Coeff> canonicalize_word(const std::string& letters) {
  const WordTerm<Coeff> term{letters, 0, Coeff(1)};
  return canonicalize<Coeff>(std::span<const WordTerm<Coeff>>(&term, 1));
}

/// Hermitian symmetrized monomial: x^a p^b + p^b x^a when both powers are
/// nonzero, otherwise the pure power.
template <class Coeff = ComplexRational>
PolyOperator<Coeff> symmetrized(int a, int b) {
  const std::string xs(static_cast<std::size_t>(a), 'x');
  const std::string ps(static_cast<std::size_t>(b), 'p');
  if (a == 0 || b == 0) return canonicalize_word<Coeff>(xs + ps);
  const std::vector<WordTerm<Coeff>> words = {{xs + ps, 0, Coeff(1)}, {ps + xs, 0, Coeff(1)}};
  return canonicalize<Coeff>(std::span<const WordTerm<Coeff>>(words));
}

/// Expansion sum c * hbar^h * symmetrized(a, b), keyed by (a, b, h).
template <class Coeff>
using SymmetricExpansion = std::map<OpMonomial, Coeff>;

/// Expresses a canonical operator in symmetrized monomials by peeling the
/// highest-degree term: symmetrized(a, b) leads with 2 x^a p^b (or x^a p^b
/// for pure powers) and the remainder has lower degree.
template <class Coeff>
SymmetricExpansion<Coeff> to_symmetric_basis(PolyOperator<Coeff> op) {
  SymmetricExpansion<Coeff> out;
  std::map<std::pair<int, int>, ExactOperator> cache;
  while (!op.is_zero()) {
    auto lead = op.terms().begin();
    for (auto it = op.terms().begin(); it != op.terms().end(); ++it)
      if (it->first.degree() > lead->first.degree()) lead = it;
    const OpMonomial mono = lead->first;
    const bool mixed = mono.a > 0 && mono.b > 0;
    const Coeff c = mixed ? lead->second * Coeff(ComplexRational(Rational(1, 2))) : lead->second;

    auto key = std::make_pair(mono.a, mono.b);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, symmetrized<ComplexRational>(mono.a, mono.b)).first;

    PolyOperator<Coeff> sub;
    for (const auto& [m, v] : it->second.terms()) sub.add_term({m.a, m.b, m.h + mono.h}, Coeff(v) * c);
    op -= sub;

    OpMonomial slot{mono.a, mono.b, mono.h};
    auto [pos, inserted] = out.emplace(slot, c);
    if (!inserted) {
      pos->second += c;
      if (pos->second.is_zero()) out.erase(pos);
    }
  }
  return out;
}

}  // namespace qbo::algebra

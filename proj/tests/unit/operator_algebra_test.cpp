#include <gtest/gtest.h>

#include <algorithm>

#include "oracles.hpp"
#include "qbo/algebra/poly_operator.hpp"
#include "qbo/moment_ode.hpp"

using namespace qbo;
using namespace qbo::algebra;

namespace {

const ComplexRational I = ComplexRational::i();

ExactOperator op(int a, int b, int h, ComplexRational c) { return ExactOperator::monomial(a, b, h, c); }

// Agreement on the retained block of the ladder representation, relative to
// `scale` (the size of the products that were combined).
void expect_matches_ladder(const ExactOperator& result, const oracle::Mat& reference, const oracle::Ladder& l,
                           const std::string& what, double scale = 0.0) {
  const oracle::Mat got = l.block(l.of(result));
  const oracle::Mat want = l.block(reference);
  scale = std::max({1.0, scale, oracle::max_abs(want)});
  EXPECT_LE(oracle::max_abs(got - want), 1e-12 * scale) << what;
}

using E = ParamPoly::Exponents;
ParamPoly mono(std::int64_t num, E e) { return ParamPoly::monomial(Rational(num), e); }

}  // namespace

TEST(Rational, Arithmetic) {
  EXPECT_EQ(Rational(1, 2) + Rational(1, 3), Rational(5, 6));
  EXPECT_EQ(Rational(2, -4), Rational(-1, 2));
  EXPECT_EQ(Rational(3, 4) * Rational(4, 3), Rational(1));
  EXPECT_THROW(Rational(1, 0), Error);
  EXPECT_THROW(Rational(INT64_MAX) + Rational(INT64_MAX), Error);
}

TEST(Canonicalize, DefiningRelation) {
  EXPECT_EQ(canonicalize_word("px"), op(1, 1, 0, 1) + op(0, 0, 1, -I));
}

TEST(Canonicalize, CanonicalWordUnchanged) {
  EXPECT_EQ(canonicalize_word("xp"), op(1, 1, 0, 1));
  EXPECT_EQ(canonicalize_word("xxppp"), op(2, 3, 0, 1));
}

TEST(Canonicalize, RejectsForeignLetters) { EXPECT_THROW(canonicalize_word("xq"), Error); }

TEST(Canonicalize, WordsAgreeWithLadder) {
  const oracle::Ladder l;
  for (const char* w : {"ppxx", "pxpx", "ppppx", "pxxxp", "ppxxpp", "xpxpxp"})
    expect_matches_ladder(canonicalize_word(w), l.word(w), l, w);
}

TEST(Commutator, CanonicalCommutationRelation) {
  EXPECT_EQ(commutator(ExactOperator::x(), ExactOperator::p()), op(0, 0, 1, I));
  EXPECT_TRUE(commutator(ExactOperator::x(), op(2, 0, 0, 1)).is_zero());
}

TEST(Commutator, XFourthWithPSquared) {
  const ExactOperator want = op(3, 1, 1, ComplexRational(Rational(0), Rational(8))) + op(2, 0, 2, 12);
  EXPECT_EQ(commutator(op(4, 0, 0, 1), op(0, 2, 0, 1)), want);
}

TEST(Anticommutator, Basics) {
  EXPECT_EQ(anticommutator(ExactOperator::x(), ExactOperator::p()), op(1, 1, 0, 2) + op(0, 0, 1, -I));
  const ExactOperator a = op(2, 1, 0, 3) + op(0, 3, 1, I);
  EXPECT_EQ(anticommutator(ExactOperator::identity(), a), a.scaled(2));
}

TEST(Anticommutator, PWithXCubedAgreesWithLadder) {
  const oracle::Ladder l;
  const oracle::Mat x3 = l.power(l.x, 3);
  expect_matches_ladder(anticommutator(ExactOperator::p(), op(3, 0, 0, 1)), l.p * x3 + x3 * l.p, l, "{p, x^3}");
}

TEST(Commutator, AllSymmetrizedPairsAgreeWithLadder) {
  for (double hbar : {1.0, 0.3}) {
    const oracle::Ladder l(60, 20, hbar);
    // scale the exact hbar powers: Ladder::of multiplies by hbar^h
    for (int d1 = 0; d1 <= 4; ++d1)
      for (int a1 = 0; a1 <= d1; ++a1)
        for (int d2 = 0; d2 <= 4; ++d2)
          for (int a2 = 0; a2 <= d2; ++a2) {
            const auto s1 = symmetrized(a1, d1 - a1);
            const auto s2 = symmetrized(a2, d2 - a2);
            const oracle::Mat m1 = l.sym(a1, d1 - a1), m2 = l.sym(a2, d2 - a2);
            const std::string tag = std::to_string(a1) + "," + std::to_string(d1 - a1) + " | " +
                                    std::to_string(a2) + "," + std::to_string(d2 - a2);
            const oracle::Mat ab = m1 * m2, ba = m2 * m1;
            const double scale = std::max(oracle::max_abs(l.block(ab)), oracle::max_abs(l.block(ba)));
            expect_matches_ladder(commutator(s1, s2), ab - ba, l, "[" + tag + "]", scale);
            expect_matches_ladder(anticommutator(s1, s2), ab + ba, l, "{" + tag + "}", scale);
          }
  }
}

TEST(SymmetricBasis, RoundTrip) {
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; a + b <= 4; ++b) {
      const ExactOperator canon = canonicalize_word(std::string(a, 'p') + std::string(b, 'x') + "p");
      ExactOperator rebuilt;
      for (const auto& [m, c] : to_symmetric_basis(canon)) {
        const ExactOperator basis = symmetrized(m.a, m.b);
        for (const auto& [mm, cc] : basis.terms()) rebuilt.add_term({mm.a, mm.b, mm.h + m.h}, cc * c);
      }
      EXPECT_EQ(rebuilt, canon);
    }
}

TEST(DeriveMomentOde, OrderOne) {
  const auto s = derive_symbolic(1);
  ASSERT_EQ(s.basis.size(), 2u);
  EXPECT_EQ(s.generator[0][0], ParamPoly());
  EXPECT_EQ(s.generator[0][1], mono(1, {-1, 0, 0, 0, 0}));
  EXPECT_EQ(s.generator[1][0], mono(-1, {1, 0, 2, 0, 0}));
  EXPECT_EQ(s.generator[1][1], mono(-2, {0, 1, 0, 0, 0}));
  EXPECT_TRUE(s.forcing_constant[0].is_zero());
  EXPECT_TRUE(s.forcing_constant[1].is_zero());
}

TEST(DeriveMomentOde, OrderTwo) {
  const auto s = derive_symbolic(2);
  const std::vector<std::vector<ParamPoly>> gen = {
      {ParamPoly(), mono(1, {-1, 0, 0, 0, 0}), ParamPoly()},
      {mono(-2, {1, 0, 2, 0, 0}), mono(-2, {0, 1, 0, 0, 0}), mono(2, {-1, 0, 0, 0, 0})},
      {ParamPoly(), mono(-1, {1, 0, 2, 0, 0}), mono(-4, {0, 1, 0, 0, 0})}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(s.generator[i][j], gen[i][j]) << i << "," << j;
  EXPECT_TRUE(s.forcing_constant[0].is_zero());
  EXPECT_TRUE(s.forcing_constant[1].is_zero());
  EXPECT_EQ(s.forcing_constant[2], mono(4, {1, 1, 0, 1, 0}));
}

TEST(DeriveMomentOde, OrderFourMatrixAndForcing) {
  const ParamPoly none;
  const ParamPoly two_m = mono(2, {-1, 0, 0, 0, 0});
  const auto mw2 = [](std::int64_t c) { return mono(c, {1, 0, 2, 0, 0}); };
  const auto g = [](std::int64_t c) { return mono(c, {0, 1, 0, 0, 0}); };
  const std::vector<std::vector<ParamPoly>> gen = {
      {none, two_m, none, none, none},
      {mw2(-2), g(-2), mono(3, {-1, 0, 0, 0, 0}), none, none},
      {none, mw2(-2), g(-4), two_m, none},
      {none, none, mw2(-3), g(-6), two_m},
      {none, none, none, mw2(-2), g(-8)}};
  const std::vector<ParamPoly> constant = {none, mono(3, {-1, 0, 0, 0, 2}), mono(-4, {0, 1, 0, 0, 2}),
                                           mono(-3, {1, 0, 2, 0, 2}), none};
  const ParamPoly mgk = mono(1, {1, 1, 0, 1, 0});
  const std::vector<std::vector<ParamPoly>> linear = {{none, none, none},
                                                      {none, none, none},
                                                      {ParamPoly(8) * mgk, none, none},
                                                      {none, ParamPoly(12) * mgk, none},
                                                      {none, none, ParamPoly(24) * mgk}};
  const auto s = derive_symbolic(4);
  ASSERT_EQ(s.basis.size(), 5u);
  ASSERT_EQ(s.lower_basis.size(), 3u);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(s.generator[i][j], gen[i][j]) << "generator " << i << "," << j;
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(s.forcing_linear[i][j], linear[i][j]) << "linear " << i << "," << j;
    EXPECT_EQ(s.forcing_constant[i], constant[i]) << "constant " << i;
  }
}

TEST(DeriveMomentOde, CoefficientsAreReal) {
  for (int order : {1, 2, 4}) {
    const auto s = derive_symbolic(order);
    for (const auto& row : s.generator)
      for (const auto& c : row) EXPECT_TRUE(c.is_real());
    for (const auto& row : s.forcing_linear)
      for (const auto& c : row) EXPECT_TRUE(c.is_real());
    for (const auto& c : s.forcing_constant) EXPECT_TRUE(c.is_real());
  }
}

TEST(DeriveMomentOde, UnsupportedOrder) {
  for (int order : {0, 3, 5}) {
    try {
      derive_symbolic(order);
      ADD_FAILURE() << order;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::UnsupportedOrder);
    }
  }
}

// The numeric system reproduces the Heisenberg-picture generator applied to
// each basis operator, evaluated with ladder matrices.
TEST(DeriveMomentOde, AgreesWithLadderGenerator) {
  const OscillatorParams q{1.3, 0.4, 0.9, 0.6, 0.7};
  const oracle::Ladder l(60, 20, q.hbar);
  for (int order : {1, 2, 4}) {
    const MomentODESystem sys = derive_moment_ode(order, q);
    for (std::size_t row = 0; row < sys.basis.size(); ++row) {
      const oracle::Mat lhs = oracle::adjoint_generator(l, q, l.sym(sys.basis[row].a, sys.basis[row].b));
      oracle::Mat rhs = sys.forcing_constant(static_cast<Eigen::Index>(row)) *
                        oracle::Mat::Identity(l.levels, l.levels);
      for (std::size_t j = 0; j < sys.basis.size(); ++j)
        rhs += sys.generator(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) *
               l.sym(sys.basis[j].a, sys.basis[j].b);
      for (std::size_t j = 0; j < sys.lower_basis.size(); ++j)
        rhs += sys.forcing_linear(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) *
               l.sym(sys.lower_basis[j].a, sys.lower_basis[j].b);
      const double scale = std::max(1.0, oracle::max_abs(l.block(lhs)));
      EXPECT_LE(oracle::max_abs(l.block(lhs - rhs)), 1e-11 * scale)
          << "order " << order << " row " << sys.basis[row].label();
    }
  }
}

TEST(DeriveMomentOde, FormatListsOneLinePerBasisElement) {
  const std::string text = format_system(derive_symbolic(4));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  EXPECT_NE(text.find("d<x4>/dt"), std::string::npos);
}

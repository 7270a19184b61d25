#include <gtest/gtest.h>

#include <random>

#include "quinv/gauss_core.hpp"
#include "quinv/qui_derive.hpp"
#include "quinv/qui_formulas.hpp"
#include "quinv/random_states.hpp"

using namespace quinv;

namespace {

ParamPolynomial::Monomial mono(std::initializer_list<std::pair<ParamSymbol, int>> f) { return f; }

const ParamSymbol kB1{SymKind::B, 0, -1};
const ParamSymbol kReC1{SymKind::ReC, 0, -1};
const ParamSymbol kImC1{SymKind::ImC, 0, -1};

}  // namespace

TEST(QuiDerive, SingleBeamInvariantPolynomial) {
    const auto q = expand_qui_symbolic(1, 1);
    ASSERT_EQ(q.terms.size(), 5u);
    EXPECT_EQ(q.terms.at({}), 1);
    EXPECT_EQ(q.terms.at(mono({{kB1, 1}})), 4);
    EXPECT_EQ(q.terms.at(mono({{kB1, 2}})), 4);
    EXPECT_EQ(q.terms.at(mono({{kReC1, 2}})), -4);
    EXPECT_EQ(q.terms.at(mono({{kImC1, 2}})), -4);
}

TEST(QuiDerive, VacuumConstant) {
    const auto q = expand_qui_symbolic(2, 2);
    EXPECT_EQ(q.terms.at({}), 1);
    EXPECT_DOUBLE_EQ(q.evaluate(GaussianStateParams::vacuum(2)), 1.0);
}

TEST(QuiDerive, SymbolicInvariantsEvaluateToMinors) {
    std::mt19937_64 rng(31);
    for (int n = 1; n <= 3; ++n)
        for (int k = 1; k <= n; ++k) {
            const auto q = expand_qui_symbolic(n, k);
            for (int i = 0; i < 20; ++i) {
                const auto p = random_physical_params(n, rng);
                const double want = qui_from_covariance(build_covariance(p), k);
                EXPECT_NEAR(q.evaluate(p), want, 1e-9 * std::max(1.0, want));
            }
        }
}

TEST(QuiDerive, MomentPolynomials) {
    const auto m1 = expand_moment_symbolic({1});
    ASSERT_EQ(m1.terms.size(), 1u);
    EXPECT_EQ(m1.terms.at(mono({{kB1, 1}})), 1);
    const auto m2 = expand_moment_symbolic({2});
    EXPECT_EQ(m2.terms.at(mono({{kB1, 2}})), 2);
    EXPECT_EQ(m2.terms.at(mono({{kReC1, 2}})), 1);
    EXPECT_EQ(m2.terms.at(mono({{kImC1, 2}})), 1);
    std::mt19937_64 rng(32);
    for (const MomentIndex idx : {MomentIndex{1, 1, 1}, MomentIndex{2, 1, 0}, MomentIndex{2, 2, 2}}) {
        const auto poly = expand_moment_symbolic(idx);
        for (int i = 0; i < 10; ++i) {
            const auto p = random_physical_params(3, rng);
            const double want = moment_from_params(p, idx);
            EXPECT_NEAR(poly.evaluate(p), want, 1e-12 * std::max(1.0, std::abs(want)));
        }
    }
}

TEST(QuiDerive, SingleBeamCoefficients) {
    const auto r = derive(1, 1);
    ASSERT_TRUE(r.solvable);
    EXPECT_TRUE(r.residue.empty());
    EXPECT_EQ(r.coefficients.size(), 4u);
    EXPECT_EQ(r.coefficients.at({}), 1);
    EXPECT_EQ(r.coefficients.at({{1}}), 4);
    EXPECT_EQ(r.coefficients.at({{1}, {1}}), 12);
    EXPECT_EQ(r.coefficients.at({{2}}), -4);
    EXPECT_EQ(r.coefficients, builtin_combination(1, 1));
}

TEST(QuiDerive, TwoBeamResidue) {
    const auto r = derive(2, 1);
    EXPECT_FALSE(r.solvable);
    ASSERT_EQ(r.residue.terms.size(), 4u);
    for (const auto& [m, c] : r.residue.terms) {
        ASSERT_EQ(m.size(), 1u);
        EXPECT_EQ(m[0].second, 2);
        const auto kind = m[0].first.kind;
        const bool pair = kind == SymKind::ReD || kind == SymKind::ImD;
        EXPECT_EQ(c, pair ? 8 : -8) << symbol_name(m[0].first);
    }
    std::mt19937_64 rng(33);
    const auto p = random_physical_params(2, rng);
    EXPECT_NEAR(r.residue.evaluate(p), residue21_from_params(p), 1e-12);
}

TEST(QuiDerive, DerivedTablesMatchHandCodedForms) {
    std::mt19937_64 rng(34);
    for (auto [n, k] : {std::pair{2, 2}, std::pair{3, 1}, std::pair{3, 2}, std::pair{3, 3}}) {
        const auto r = derive(n, k);
        EXPECT_EQ(r.solvable, k == n) << n << k;
        EXPECT_EQ(r.coefficients, builtin_combination(n, k)) << n << k;
        for (int i = 0; i < (n == 3 && k == 3 ? 100 : 20); ++i) {
            const auto p = random_physical_params(n, rng);
            const auto m = moments_from_params(p, 2 * n);
            const double want = qui_from_covariance(build_covariance(p), k);
            EXPECT_NEAR(evaluate_combination(r, m) - r.residue.evaluate(p), want, 1e-8 * std::max(1.0, want));
        }
    }
    EXPECT_TRUE(derive(3, 3).residue.empty());
    EXPECT_FALSE(derive(3, 2).residue.empty());
}

TEST(QuiDerive, TermTableRoundTrip) {
    const auto r11 = derive(1, 1);
    const auto t11 = emit_term_table(r11);
    EXPECT_EQ(t11.at("measurable").size(), 4u);
    EXPECT_EQ(emit_term_table(r11).dump(), t11.dump());

    const auto r = derive(3, 2);
    const auto t = emit_term_table(r);
    EXPECT_TRUE(t.contains("measurable"));
    EXPECT_TRUE(t.contains("residue"));
    const auto back = load_term_table(t);
    EXPECT_EQ(back.coefficients, r.coefficients);
    EXPECT_EQ(back.residue.terms, r.residue.terms);
    std::mt19937_64 rng(35);
    const auto p = random_physical_params(3, rng);
    const auto m = moments_from_params(p, 6);
    EXPECT_NEAR(evaluate_combination(back, m) - back.residue.evaluate(p), qui_from_covariance(build_covariance(p), 2),
                1e-8 * qui_from_covariance(build_covariance(p), 2));
}

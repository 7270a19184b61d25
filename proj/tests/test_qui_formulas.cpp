#include <gtest/gtest.h>

#include <random>

#include "quinv/errors.hpp"
#include "quinv/gauss_core.hpp"
#include "quinv/moments.hpp"
#include "quinv/noise_model.hpp"
#include "quinv/qui_formulas.hpp"
#include "quinv/random_states.hpp"

using namespace quinv;

namespace {

IntensityMoments vacuum_moments(int n) { return moments_from_params(GaussianStateParams::vacuum(n), 6); }

double tol(double tol_rel, double v) { return tol_rel * std::max(1.0, std::abs(v)); }

}  // namespace

TEST(QuiFormulas, SingleBeam) {
    EXPECT_NEAR(delta11_from_moments(vacuum_moments(1)), 1.0, 1e-15);
    IntensityMoments th;
    th.n_beams = 1;
    th.max_order = 2;
    th.set({1}, 0.5);
    th.set({2}, 0.5);
    EXPECT_NEAR(delta11_from_moments(th), 4.0, 1e-14);
    IntensityMoments sq = th;
    sq.set({1}, 1.0);
    sq.set({2}, 2.25);
    EXPECT_NEAR(delta11_from_moments(sq), 8.0, 1e-14);
}

TEST(QuiFormulas, TwoBeamVacuumAndPair) {
    const auto r = delta21_from_moments(vacuum_moments(2));
    EXPECT_NEAR(r.measurable_part, 2.0, 1e-15);
    EXPECT_NEAR(r.residue_lower, 0.0, 1e-15);
    EXPECT_NEAR(r.residue_upper, 0.0, 1e-15);
    auto p = GaussianStateParams::vacuum(2);
    p.set_D(0, 1, 0.3);
    EXPECT_NEAR(delta21_from_moments(moments_from_params(p, 4)).residue_upper, 0.72, 1e-14);
}

TEST(QuiFormulas, ThreeBeamVacuum) {
    const auto m = vacuum_moments(3);
    EXPECT_NEAR(delta31_from_moments(m).measurable_part, 3.0, 1e-15);
    const auto r32 = delta32_from_moments(m);
    EXPECT_NEAR(r32.measurable_part, 3.0, 1e-15);
    EXPECT_NEAR(residue32_from_params(GaussianStateParams::vacuum(3)), 0.0, 1e-15);
    EXPECT_NEAR(delta33_from_moments(m), 1.0, 1e-15);
    const auto b = residue_bounds_symmetric(m);
    EXPECT_NEAR(b.lower, 0.0, 1e-14);
    EXPECT_NEAR(b.upper, 0.0, 1e-14);
}

TEST(QuiFormulas, IndependentThermals) {
    auto p = GaussianStateParams::vacuum(3);
    for (int j = 0; j < 3; ++j) p.b[j] = 0.5;
    EXPECT_NEAR(delta33_from_moments(moments_from_params(p, 6)), 64.0, 1e-11);
}

// measurable part minus the parameter residue reproduces the minor sums
TEST(QuiFormulas, MinorsOracle) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 300; ++trial) {
        const auto p1 = random_physical_params(1, rng);
        const auto q1 = qui_from_covariance(build_covariance(p1), 1);
        EXPECT_NEAR(delta11_from_moments(moments_from_params(p1, 2)), q1, tol(1e-9, q1));

        const auto p2 = random_physical_params(2, rng);
        const auto c2 = build_covariance(p2);
        const auto m2 = moments_from_params(p2, 4);
        const auto r21 = delta21_from_moments(m2);
        const auto q21 = qui_from_covariance(c2, 1);
        EXPECT_NEAR(r21.measurable_part - residue21_from_params(p2), q21, tol(1e-9, q21));
        const auto q22 = qui_from_covariance(c2, 2);
        EXPECT_NEAR(delta22_from_moments(m2), q22, tol(1e-9, q22));

        const auto p3 = random_physical_params(3, rng);
        const auto c3 = build_covariance(p3);
        const auto m3 = moments_from_params(p3, 6);
        FormulaOptions loose;
        loose.asymmetry_threshold = 1e9;
        const auto q31 = qui_from_covariance(c3, 1);
        EXPECT_NEAR(delta31_from_moments(m3, loose).measurable_part - residue31_from_params(p3), q31,
                    tol(1e-9, q31));
        const auto q32 = qui_from_covariance(c3, 2);
        EXPECT_NEAR(delta32_from_moments(m3, loose).measurable_part - residue32_from_params(p3), q32,
                    tol(1e-9, q32));
        const auto q33 = qui_from_covariance(c3, 3);
        EXPECT_NEAR(delta33_from_moments(m3), q33, tol(1e-8, q33));
    }
}

TEST(QuiFormulas, TwoBeamResidueSignature) {
    // residue is 8(|D|^2 - |Dbar|^2)
    std::mt19937_64 rng(22);
    for (int i = 0; i < 100; ++i) {
        const auto p = random_physical_params(2, rng);
        EXPECT_NEAR(residue21_from_params(p), 8 * (std::norm(p.D(0, 1)) - std::norm(p.Dbar(0, 1))), 1e-12);
    }
}

TEST(QuiFormulas, SymmetricResidueIsPairSum) {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 100; ++i) {
        const auto p = random_symmetric_params(rng);
        const double two_beam = residue21_from_params(p, 0, 1);
        EXPECT_NEAR(residue31_from_params(p), 3 * two_beam, 1e-12);
        EXPECT_NEAR(residue21_from_params(p, 1, 2), two_beam, 1e-12);
    }
}

// the true residue lies inside the reported interval
TEST(QuiFormulas, ResiduesInsideBounds) {
    std::mt19937_64 rng(24);
    for (int i = 0; i < 500; ++i) {
        const auto p2 = random_physical_params(2, rng);
        const auto r21 = delta21_from_moments(moments_from_params(p2, 4));
        const double t21 = residue21_from_params(p2);
        EXPECT_LE(r21.residue_lower, t21 + 1e-9);
        EXPECT_GE(r21.residue_upper, t21 - 1e-9);

        const auto p3 = random_symmetric_params(rng, 0.3);
        const auto m3 = moments_from_params(p3, 6);
        const auto r31 = delta31_from_moments(m3);
        const double t31 = residue31_from_params(p3);
        EXPECT_LE(r31.residue_lower, t31 + 1e-9);
        EXPECT_GE(r31.residue_upper, t31 - 1e-9);
        const auto r32 = delta32_from_moments(m3);
        const double t32 = residue32_from_params(p3);
        EXPECT_LE(r32.residue_lower, t32 + 1e-8) << i;
        EXPECT_GE(r32.residue_upper, t32 - 1e-8) << i;
        EXPECT_LE(r32.residue_lower, r32.residue_upper);
        const auto b = residue_bounds_symmetric(m3);
        EXPECT_NEAR(b.lower, r32.residue_lower, 1e-12);
        EXPECT_NEAR(b.upper, r32.residue_upper, 1e-12);
    }
}

TEST(QuiFormulas, ModelStateResidueWithinBounds) {
    const auto p = gaussian_params_of_model(TwbModelParams{}, 2, 0, 10);
    const auto m = moments_from_params(p, 6);
    const auto b = residue_bounds_symmetric(m);
    const double t = residue32_from_params(p);
    EXPECT_LE(b.lower, t + 1e-9);
    EXPECT_GE(b.upper, t - 1e-9);
}

TEST(QuiFormulas, ExactResultsHaveZeroWidth) {
    std::mt19937_64 rng(25);
    const auto m = moments_from_params(random_physical_params(2, rng), 4);
    const auto r = delta21_from_moments(m);
    EXPECT_FALSE(r.exact);
    EXPECT_LE(r.value_lower(), r.value_upper());
}

TEST(QuiFormulas, AsymmetryHandling) {
    std::mt19937_64 rng(26);
    const auto m = moments_from_params(random_physical_params(3, rng), 6);
    FormulaOptions strict;
    strict.strict = true;
    EXPECT_THROW(residue_bounds_symmetric(m, strict), ValidationError);
    const auto b = residue_bounds_symmetric(m);
    EXPECT_FALSE(b.warnings.empty());
}

TEST(QuiFormulas, MissingMomentPropagates) {
    const auto m = moments_from_params(GaussianStateParams::vacuum(3), 2);
    EXPECT_THROW(delta33_from_moments(m), MissingMomentError);
}

TEST(QuiFormulas, PairCovariance) {
    std::mt19937_64 rng(27);
    const auto p = random_physical_params(3, rng);
    const auto m = moments_from_params(p, 2);
    for (int j = 0; j < 3; ++j)
        for (int k = j + 1; k < 3; ++k)
            EXPECT_NEAR(pair_covariance(m, j, k), std::norm(p.D(j, k)) + std::norm(p.Dbar(j, k)), 1e-12);
}

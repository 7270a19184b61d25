#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "quinv/detection.hpp"
#include "quinv/errors.hpp"
#include "quinv/noise_model.hpp"

using namespace quinv;

namespace {

DetectorModel clicks(int n, double eta, double d) {
    DetectorModel m;
    m.n_pixels = n;
    m.efficiency = eta;
    m.dark_total = d;
    return m;
}

DetectorModel pnr(int n, double eta) {
    DetectorModel m;
    m.kind = DetectorKind::ideal_pnr;
    m.n_pixels = n;
    m.efficiency = eta;
    return m;
}

JointDistribution random_photon_dist(const std::vector<int>& shape, std::mt19937_64& rng) {
    JointDistribution p(shape, DistKind::photon_distribution);
    std::exponential_distribution<double> e(1.0);
    for (auto& x : p.mass) x = e(rng);
    p.normalize();
    return p;
}

double binom_pmf(int n, int k, double q) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) * std::pow(q, k) *
           std::pow(1 - q, n - k);
}

}  // namespace

TEST(Detection, NoDarkZeroCount) {
    for (double eta : {0.1, 0.55, 0.9})
        for (int n = 0; n <= 30; ++n) EXPECT_NEAR(detection_matrix(clicks(12, eta, 0), 0, n), std::pow(1 - eta, n), 1e-14);
}

TEST(Detection, BlindDetector) {
    for (int n = 0; n <= 10; ++n)
        for (int c = 0; c <= 5; ++c) EXPECT_DOUBLE_EQ(detection_matrix(clicks(5, 0, 0), c, n), c == 0 ? 1.0 : 0.0);
}

TEST(Detection, SinglePhotonAndBeyondPixels) {
    EXPECT_NEAR(detection_matrix(clicks(30, 0.37, 0), 1, 1), 0.37, 1e-15);
    EXPECT_EQ(detection_matrix(clicks(4, 0.5, 0.1), 5, 10), 0.0);
}

TEST(Detection, ColumnsSumToOne) {
    const auto t = detection_table(clicks(66, 0.5, 0.1), 50);
    for (int n = 0; n <= 50; ++n) {
        double s = 0;
        for (int c = 0; c < t.counts; ++c) s += t(c, n);
        EXPECT_NEAR(s, 1.0, 1e-9);
    }
}

// closed form against the positive-term pixel-occupancy chain
TEST(Detection, MatchesOccupancyOracle) {
    for (int n_pix : {1, 3, 12, 40})
        for (double eta : {0.2, 0.55, 0.95})
            for (double d : {0.0, 0.01, 0.5}) {
                const auto det = clicks(n_pix, eta, d);
                const auto a = detection_table(det, 60), b = detection_table_occupancy(det, 60);
                for (std::size_t i = 0; i < a.t.size(); ++i) ASSERT_NEAR(a.t[i], b.t[i], 1e-12);
            }
}

TEST(Detection, IdealPnrIsBinomial) {
    const auto t = detection_table(pnr(20, 0.3), 20);
    for (int n = 0; n <= 20; ++n)
        for (int c = 0; c <= n; ++c) EXPECT_NEAR(t(c, n), binom_pmf(n, c, 0.3), 1e-14);
}

TEST(Detection, ValidationErrors) {
    EXPECT_THROW(clicks(0, 0.5, 0).validate(), ValidationError);
    EXPECT_THROW(clicks(2, 1.5, 0).validate(), ValidationError);
    EXPECT_THROW(clicks(2, 0.5, -1).validate(), ValidationError);
    EXPECT_THROW(clicks(2, 0.5, 2.0).validate(), ValidationError);
    auto p = pnr(3, 0.5);
    p.dark_total = 0.1;
    EXPECT_THROW(p.validate(), ValidationError);
}

TEST(Detection, EffectiveDetector) {
    const auto a = DetectorModel::effective(2, 10, 0.5, 0.6, 1e-3, 2e-3);
    EXPECT_EQ(a.n_pixels, 14);
    EXPECT_DOUBLE_EQ(a.efficiency, 0.55);
    EXPECT_NEAR(a.dark_total, 3e-3 * 9, 1e-15);
    EXPECT_EQ(DetectorModel::effective(2, 10, 0.5, 0.6, 0, 0, DetectorModel::PixelRule::windows).n_pixels, 18);
    EXPECT_THROW(DetectorModel::effective(2, 3, 0.5, 0.5, 0, 0), ValidationError);
}

TEST(ForwardMap, IdentityDetector) {
    std::mt19937_64 rng(41);
    const auto p = random_photon_dist({4, 3, 5}, rng);
    const auto f = forward_map(p, {pnr(3, 1), pnr(2, 1), pnr(4, 1)});
    ASSERT_EQ(f.shape, p.shape);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(f.mass[i], p.mass[i], 1e-15);
}

TEST(ForwardMap, SinglePhotonThinning) {
    JointDistribution p({2, 1, 1}, DistKind::photon_distribution);
    p.at({1, 0, 0}) = 1;
    const auto f = forward_map(p, {clicks(50, 0.5, 0), clicks(50, 0.5, 0), clicks(50, 0.5, 0)});
    EXPECT_NEAR(f.at({1, 0, 0}), 0.5, 1e-15);
    EXPECT_NEAR(f.at({0, 0, 0}), 0.5, 1e-15);
    EXPECT_NEAR(f.total(), 1.0, 1e-14);
}

// the tensor contraction agrees with a direct triple sum
TEST(ForwardMap, MatchesDirectSum) {
    std::mt19937_64 rng(42);
    const auto p = random_photon_dist({5, 4, 6}, rng);
    const std::vector<DetectorModel> dets{clicks(3, 0.4, 0.1), clicks(4, 0.7, 0), clicks(2, 0.5, 0.2)};
    const auto f = forward_map(p, dets);
    for (int a = 0; a <= 3; ++a)
        for (int b = 0; b <= 4; ++b)
            for (int c = 0; c <= 2; ++c) {
                double s = 0;
                for (int x = 0; x < 5; ++x)
                    for (int y = 0; y < 4; ++y)
                        for (int z = 0; z < 6; ++z)
                            s += detection_matrix(dets[0], a, x) * detection_matrix(dets[1], b, y) *
                                 detection_matrix(dets[2], c, z) * p.at({x, y, z});
                EXPECT_NEAR(f.at({a, b, c}), s, 1e-15);
            }
}

TEST(Em, IdentityDetectorOneStep) {
    std::mt19937_64 rng(43);
    auto f = random_photon_dist({4, 4, 4}, rng);
    f.kind = DistKind::photocount_histogram;
    EmOptions opt;
    opt.max_iters = 1;
    const auto r = reconstruct_em(f, {pnr(3, 1), pnr(3, 1), pnr(3, 1)}, {4, 4, 4}, opt);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(r.p.mass[i], f.mass[i], 1e-15);
}

TEST(Em, NoClicksMeansNoPhotons) {
    JointDistribution f({4, 4, 4}, DistKind::photocount_histogram);
    f.at({0, 0, 0}) = 1;
    const auto d = clicks(3, 0.6, 0);
    EmOptions opt;
    opt.max_iters = 2000;
    const auto r = reconstruct_em(f, {d, d, d}, {5, 5, 5}, opt);
    EXPECT_GT(r.p.at({0, 0, 0}), 1 - 1e-6);
}

TEST(Em, FixedPoint) {
    std::mt19937_64 rng(44);
    const auto p0 = random_photon_dist({5, 5, 5}, rng);
    const auto d = clicks(6, 0.5, 0.05);
    const auto f = forward_map(p0, {d, d, d});
    EmOptions opt;
    opt.init = EmInit::given;
    opt.start = &p0;
    opt.max_iters = 1;
    const auto r = reconstruct_em(f, {d, d, d}, {5, 5, 5}, opt);
    for (std::size_t i = 0; i < p0.size(); ++i) EXPECT_NEAR(r.p.mass[i], p0.mass[i], 1e-12);
}

TEST(Em, ExactDataConverges) {
    // thermal-like decay with random correlations, the regime the reconstruction is used in
    std::mt19937_64 rng(45);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    JointDistribution p0({6, 6, 6}, DistKind::photon_distribution);
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b)
            for (int c = 0; c < 6; ++c) p0.at({a, b, c}) = std::pow(0.3, a + b + c) * u(rng);
    p0.normalize();
    const auto d = clicks(20, 0.9, 0.01);
    const auto f = forward_map(p0, {d, d, d});
    EmOptions opt;
    opt.tol = 1e-14;
    const auto r = reconstruct_em(f, {d, d, d}, {6, 6, 6}, opt);
    EXPECT_LT(r.kl, 1e-10) << r.iterations;
    EXPECT_EQ(r.monotonicity_violations, 0);
    EXPECT_LT(r.max_norm_drift, 1e-9);
    for (std::size_t i = 1; i < r.ll_history.size(); ++i)
        EXPECT_GE(r.ll_history[i], r.ll_history[i - 1] - 1e-13 * std::abs(r.ll_history[i - 1]));
    EXPECT_NEAR(kl_divergence(f, forward_map(r.p, {d, d, d})), r.kl, 1e-14);
}

TEST(Em, MonotoneOnRoughTarget) {
    std::mt19937_64 rng(46);
    const auto p0 = random_photon_dist({6, 6, 6}, rng);
    const auto d = clicks(8, 0.6, 0.05);
    const auto f = forward_map(p0, {d, d, d});
    EmOptions opt;
    opt.tol = 0;
    opt.max_iters = 3000;
    const auto r = reconstruct_em(f, {d, d, d}, {6, 6, 6}, opt);
    EXPECT_EQ(r.monotonicity_violations, 0);
    EXPECT_LT(r.max_norm_drift, 1e-9);
    EXPECT_EQ(r.iterations, 3000);
    EXPECT_FALSE(r.converged);
    JointDistribution flat({6, 6, 6}, DistKind::photon_distribution);
    std::fill(flat.mass.begin(), flat.mass.end(), 1.0 / flat.size());
    EXPECT_LT(r.kl, 1e-3 * kl_divergence(f, forward_map(flat, {d, d, d})));
}

TEST(Em, UnreachableBinIsReported) {
    // at most one photon per beam and no dark counts: two clicks cannot happen
    JointDistribution f({3, 3, 3}, DistKind::photocount_histogram);
    f.at({0, 0, 0}) = 0.5;
    f.at({2, 0, 0}) = 0.5;
    const auto d = clicks(2, 0.5, 0);
    try {
        reconstruct_em(f, {d, d, d}, {2, 2, 2});
        FAIL() << "expected an error";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("(2,0,0)"), std::string::npos) << e.what();
    }
}

TEST(Em, ShapeMismatch) {
    JointDistribution f({3, 3, 3}, DistKind::photocount_histogram);
    f.mass[0] = 1;
    const auto d = clicks(4, 0.5, 0);
    EXPECT_THROW(reconstruct_em(f, {d, d, d}, {4, 4, 4}), ValidationError);
}

TEST(Compound, ZeroChannels) {
    PhotocountChannels ch;
    ch.signal.assign(5000, 0);
    ch.idler.assign(5000, 0);
    const auto h = build_compound_realizations(ch, 2, 4, 1000);
    EXPECT_DOUBLE_EQ(h.mass[0], 1.0);
    EXPECT_EQ(h.kind, DistKind::photocount_histogram);
}

TEST(Compound, SingleCoincidence) {
    PhotocountChannels ch;
    ch.signal.assign(12, 0);
    ch.idler.assign(12, 0);
    ch.signal[0] = 1;
    ch.idler[0] = 1;
    EXPECT_EQ(compound_realization_count(12, 1, 0, 1000), 2u);
    const auto h = build_compound_realizations(ch, 1, 0, 1000);
    // first window pair feeds beams 1 and 2 of the first realization
    EXPECT_NEAR(h.at({1, 1, 0}), 0.5, 1e-15);
    EXPECT_NEAR(h.at({0, 0, 0}), 0.5, 1e-15);
    EXPECT_THROW(build_compound_realizations(ch, 1, 0, 10), ValidationError);
    EXPECT_THROW(build_compound_realizations(ch, 1, 2, 1000), ValidationError);
}

TEST(Compound, OverlappingGivesMoreRealizations) {
    CompoundOptions ov;
    ov.overlapping = true;
    const auto a = compound_realization_count(10000, 2, 10, 1000);
    const auto b = compound_realization_count(10000, 2, 10, 1000, ov);
    EXPECT_GT(b, a);
    EXPECT_EQ(a, (10000 - 1030) / 30 + 1);
}

// histogram means of synthetic channels against the analytic click rates
TEST(Compound, SimulatedMeansWithinThreeSigma) {
    TwbModelParams m;
    m.b_p = 0.05;  // bigger rates keep the test short
    const int w_p = 2, w_n = 6;
    const auto ch = sample_channels(m, 400000, 7);
    const auto h = build_compound_realizations(ch, w_p, w_n, 1000);
    const double ps = click_probability_signal(m), pi = click_probability_idler(m);
    const double expect = w_p * 2 * (ps + pi) + (w_n / 2) * (ps + pi);
    const double count = static_cast<double>(compound_realization_count(ch.size(), w_p, w_n, 1000));
    for (int axis = 0; axis < 3; ++axis) {
        const auto marg = h.marginal(axis);
        double mean = 0, sq = 0;
        for (std::size_t c = 0; c < marg.size(); ++c) {
            mean += c * marg[c];
            sq += double(c) * c * marg[c];
        }
        const double sigma = std::sqrt((sq - mean * mean) / count);
        EXPECT_LT(std::abs(mean - expect), 3 * sigma) << "beam " << axis + 1;
    }
}

TEST(Channels, EmpiricalClickRates) {
    const TwbModelParams m;
    const std::size_t n = 2000000;
    const auto ch = sample_channels(m, n, 11);
    double s = 0, i = 0;
    for (std::size_t k = 0; k < n; ++k) {
        s += ch.signal[k];
        i += ch.idler[k];
    }
    const double ps = click_probability_signal(m), pi = click_probability_idler(m);
    EXPECT_LT(std::abs(s / n - ps), 4 * std::sqrt(ps * (1 - ps) / n));
    EXPECT_LT(std::abs(i / n - pi), 4 * std::sqrt(pi * (1 - pi) / n));
    const auto again = sample_channels(m, 1000, 11);
    EXPECT_TRUE(std::equal(again.signal.begin(), again.signal.end(), ch.signal.begin()));
}

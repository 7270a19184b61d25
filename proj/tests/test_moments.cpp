#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "quinv/errors.hpp"
#include "quinv/moments.hpp"
#include "quinv/noise_model.hpp"
#include "quinv/random_states.hpp"

using namespace quinv;

namespace {

// ---- generating-function oracle
// <exp(sum xi_j a_j^+) exp(sum zeta_j a_j)> = exp(Q) for a zero-mean Gaussian
// state, Q quadratic in (xi, zeta) with the pair contractions as coefficients.
// <prod a_j^+^l a_j^l> is prod (l_j!)^2 times the coefficient of prod xi^l zeta^l.
using Key = std::vector<int>;  // exponents: xi_0..xi_{N-1}, zeta_0..zeta_{N-1}
using Poly = std::map<Key, cplx>;

Poly multiply(const Poly& a, const Poly& b, const Key& cap) {
    Poly out;
    for (const auto& [ka, va] : a)
        for (const auto& [kb, vb] : b) {
            Key k(ka.size());
            bool keep = true;
            for (std::size_t i = 0; i < k.size() && keep; ++i) keep = (k[i] = ka[i] + kb[i]) <= cap[i];
            if (keep) out[k] += va * vb;
        }
    return out;
}

double moment_by_generating_function(const GaussianStateParams& p, const MomentIndex& l) {
    const int n = p.n_beams;
    Key cap(2 * n);
    for (int j = 0; j < n; ++j) cap[j] = cap[n + j] = l[j];
    Poly q;
    auto add = [&](int v1, int v2, cplx c) {
        Key k(2 * n, 0);
        ++k[v1];
        ++k[v2];
        q[k] += c;
    };
    for (int j = 0; j < n; ++j) {
        add(j, n + j, p.b[j]);                      // xi_j zeta_j <a^+ a>
        add(n + j, n + j, 0.5 * p.c[j]);            // zeta_j^2 <a a> / 2
        add(j, j, 0.5 * std::conj(p.c[j]));         // xi_j^2 <a^+ a^+> / 2
        for (int k = j + 1; k < n; ++k) {
            add(n + j, n + k, p.D(j, k));
            add(j, k, std::conj(p.D(j, k)));
            add(j, n + k, -p.Dbar(j, k));           // <a_j^+ a_k>
            add(k, n + j, -p.Dbar(k, j));           // <a_k^+ a_j>
        }
    }
    int total = 0;
    for (int v : l) total += v;
    // exp(Q) truncated: only Q^m with 2m <= 2 * total contributes
    Poly term{{Key(2 * n, 0), 1.0}}, sum = term;
    for (int m = 1; m <= total; ++m) {
        term = multiply(term, q, cap);
        for (auto& [k, v] : term) v /= m;
        for (const auto& [k, v] : term) sum[k] += v;
    }
    double fact = 1;
    for (int v : l) fact *= std::tgamma(v + 1.0) * std::tgamma(v + 1.0);
    const auto it = sum.find(cap);
    const cplx c = it == sum.end() ? 0.0 : it->second;
    EXPECT_LT(std::abs(c.imag()) * fact, 1e-9);
    return c.real() * fact;
}

// whole-field moments of M independent copies by repeated binomial convolution
IntensityMoments copies_oracle(const IntensityMoments& one, int copies) {
    IntensityMoments cur = one;
    for (int m = 1; m < copies; ++m) {
        IntensityMoments next = cur;
        for (const auto& [l, v] : one.values) {
            (void)v;
            double s = 0;
            MomentIndex a(l.size(), 0);
            while (true) {
                double coef = 1;
                MomentIndex rest(l.size());
                for (std::size_t j = 0; j < l.size(); ++j) {
                    coef *= std::tgamma(l[j] + 1.0) / (std::tgamma(a[j] + 1.0) * std::tgamma(l[j] - a[j] + 1.0));
                    rest[j] = l[j] - a[j];
                }
                s += coef * cur.at(a) * one.at(rest);
                std::size_t j = 0;
                for (; j < l.size(); ++j) {
                    if (++a[j] <= l[j]) break;
                    a[j] = 0;
                }
                if (j == l.size()) break;
            }
            next.set(l, s);
        }
        cur = next;
    }
    return cur;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST(Moments, SecondOrderRelations) {
    auto p = GaussianStateParams::vacuum(1);
    p.b[0] = 0.5;
    EXPECT_NEAR(moments_from_params(p, 2).at({2}), 0.5, 1e-15);
    auto q = GaussianStateParams::vacuum(2);
    q.set_D(0, 1, 0.3);
    EXPECT_NEAR(moments_from_params(q, 2).at({1, 1}), 0.09, 1e-15);
    std::mt19937_64 rng(1);
    const auto r = random_physical_params(3, rng);
    const auto m = moments_from_params(r, 2);
    for (int j = 0; j < 3; ++j) {
        MomentIndex e(3, 0);
        e[j] = 1;
        EXPECT_DOUBLE_EQ(m.at(e), r.b[j]);
        e[j] = 2;
        EXPECT_NEAR(m.at(e), 2 * r.b[j] * r.b[j] + std::norm(r.c[j]), 1e-14);
        EXPECT_GE(m.at(e) - 2 * r.b[j] * r.b[j], -1e-15);
    }
}

TEST(Moments, WickMatchesGeneratingFunction) {
    std::mt19937_64 rng(2);
    for (int n = 1; n <= 3; ++n)
        for (int trial = 0; trial < 4; ++trial) {
            const auto p = random_physical_params(n, rng);
            const auto m = moments_from_params(p, n == 3 ? 6 : 4);
            for (const auto& [idx, v] : m.values) {
                bool small = true;
                for (int x : idx) small = small && x <= 3;
                if (!small) continue;
                EXPECT_LT(rel(v, moment_by_generating_function(p, idx)), 1e-9) << "order " << moment_order(idx);
            }
        }
}

TEST(Moments, StirlingConversions) {
    PhotonMoments pm;
    pm.n_beams = 1;
    pm.max_order = 2;
    pm.values[{1}] = 2;
    pm.values[{2}] = 6;
    EXPECT_NEAR(intensity_from_photon_moments(pm).at({2}), 4.0, 1e-14);
    // round trip on random moment sets
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 2);
    IntensityMoments im;
    im.n_beams = 3;
    im.max_order = 4;
    for (const auto& idx : indices_up_to(3, 4)) im.set(idx, u(rng));
    const auto back = intensity_from_photon_moments(photon_from_intensity_moments(im));
    for (const auto& [idx, v] : im.values) EXPECT_NEAR(back.at(idx), v, 1e-12 * (1 + v));
    EXPECT_EQ(stirling1(4, 2), 11.0);
    EXPECT_EQ(stirling1(3, 1), 2.0);
    EXPECT_EQ(stirling2(4, 2), 7.0);
}

TEST(Moments, ThermalFactorialMoments) {
    const double b = 0.4;
    JointDistribution d({80}, DistKind::photon_distribution);
    d.mass = mandel_rice_pmf(1.0, b, 79);
    const auto w = intensity_from_photon_moments(moments_from_distribution(d, 3));
    EXPECT_NEAR(w.at({3}), 6 * b * b * b, 1e-12);
    const auto direct = intensity_moments_from_distribution(d, 3);
    EXPECT_NEAR(direct.at({3}), 6 * b * b * b, 1e-12);
}

TEST(Moments, DistributionBasics) {
    JointDistribution d({3, 2, 2}, DistKind::photon_distribution);
    d.at({1, 0, 0}) = 1;
    const auto pm = moments_from_distribution(d, 2);
    EXPECT_DOUBLE_EQ(pm.at({1, 0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(pm.at({2, 0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(pm.at({0, 1, 0}), 0.0);
    // vacuum: every intensity moment is zero
    JointDistribution v({2, 2, 2}, DistKind::photon_distribution);
    v.mass[0] = 1;
    for (const auto& [idx, val] : intensity_moments_from_distribution(v, 4).values) EXPECT_EQ(val, 0.0);
    // independent axes factorize
    JointDistribution ind({4, 4}, DistKind::photon_distribution);
    const double pa[] = {0.5, 0.3, 0.15, 0.05}, pb[] = {0.1, 0.2, 0.3, 0.4};
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) ind.at({a, b}) = pa[a] * pb[b];
    const auto im = moments_from_distribution(ind, 4);
    EXPECT_NEAR(im.at({2, 2}), im.at({2, 0}) * im.at({0, 2}), 1e-14);
    JointDistribution bad({2}, DistKind::photon_distribution);
    bad.mass = {0.2, 0.2};
    EXPECT_THROW(moments_from_distribution(bad, 2), ValidationError);
}

TEST(Moments, MissingMomentIsReported) {
    IntensityMoments m;
    m.n_beams = 2;
    m.max_order = 1;
    m.set({1, 0}, 0.1);
    EXPECT_THROW(m.at({1, 1}), MissingMomentError);
    EXPECT_DOUBLE_EQ(m.at({0, 0}), 1.0);
}

TEST(Moments, ModeReductionBasics) {
    IntensityMoments m;
    m.n_beams = 1;
    m.max_order = 2;
    m.set({1}, 8);
    m.set({2}, 100);
    EXPECT_DOUBLE_EQ(reduce_to_single_mode(m, 4).at({1}), 2.0);
    const auto same = reduce_to_single_mode(m, 1);
    EXPECT_NEAR(same.at({2}), 100, 1e-12);
    EXPECT_THROW(reduce_to_single_mode(m, 0), ValidationError);
}

TEST(Moments, ModeReductionAgainstIndependentCopies) {
    std::mt19937_64 rng(4);
    for (int copies : {1, 2, 5, 10}) {
        const auto p = random_physical_params(3, rng);
        const auto one = moments_from_params(p, 6);
        const auto whole = copies_oracle(one, copies);
        const auto fwd = expand_to_multi_mode(one, copies);
        for (const auto& [idx, v] : whole.values) EXPECT_LT(rel(fwd.at(idx), v), 1e-9);
        const auto back = reduce_to_single_mode(whole, copies);
        for (const auto& [idx, v] : one.values) EXPECT_LT(rel(back.at(idx), v), 1e-9) << copies;
    }
}

TEST(Moments, ModeReductionRoundTrip) {
    std::mt19937_64 rng(5);
    auto check = [](const IntensityMoments& one, double modes) {
        const auto back = reduce_to_single_mode(expand_to_multi_mode(one, modes), modes);
        for (const auto& [idx, v] : one.values)
            EXPECT_LT(rel(back.at(idx), v), 1e-9) << modes << " order " << moment_order(idx);
    };
    for (double modes : {6.7, 2.5}) check(moments_from_params(random_physical_params(3, rng), 6), modes);
    // many modes: per-mode occupancies of the size the detector model produces
    RandomStateOptions weak;
    weak.max_excess = 0.1;
    weak.max_squeeze = 0.1;
    for (int i = 0; i < 5; ++i) check(moments_from_params(random_physical_params(3, rng, weak), 6), 80);
    check(moments_from_params(gaussian_params_of_model(TwbModelParams{}, 2, 20, 80), 6), 80);
}

TEST(Moments, BeamSymmetry) {
    std::mt19937_64 rng(6);
    const auto sym = moments_from_params(random_symmetric_params(rng), 4);
    EXPECT_LT(beam_asymmetry(sym), 1e-12);
    const auto asym = moments_from_params(random_physical_params(3, rng), 4);
    const auto fixed = symmetrize_beams(asym);
    EXPECT_LT(beam_asymmetry(fixed), 1e-12);
    EXPECT_NEAR(fixed.at({1, 0, 0}), (asym.at({1, 0, 0}) + asym.at({0, 1, 0}) + asym.at({0, 0, 1})) / 3, 1e-14);
}

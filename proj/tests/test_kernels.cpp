#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "quinv/kernels.hpp"

using namespace quinv;

namespace {

std::vector<double> randoms(std::size_t n, std::mt19937_64& rng, double lo = -1, double hi = 1) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

// lengths around the vector width and unroll boundaries
const std::size_t kLengths[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 33, 64, 100, 1023, 4097};

}  // namespace

TEST(Kernels, ScalarReference) {
    const auto& s = kernels::scalar_table();
    const double x[] = {1, 2, 3, 4, 5};
    double y[] = {1, 1, 1, 1, 1};
    EXPECT_DOUBLE_EQ(s.dot(x, x, 5), 55.0);
    EXPECT_DOUBLE_EQ(s.sum(x, 5), 15.0);
    s.axpy(2.0, x, y, 5);
    EXPECT_DOUBLE_EQ(y[4], 11.0);
    const double den[] = {2, 0, 1, 4, 0};
    double z[5];
    s.safe_div(x, den, z, 5);
    EXPECT_DOUBLE_EQ(z[0], 0.5);
    EXPECT_DOUBLE_EQ(z[1], 0.0);
    EXPECT_DOUBLE_EQ(z[4], 0.0);
    s.mul(x, x, z, 5);
    EXPECT_DOUBLE_EQ(z[2], 9.0);
}

TEST(Kernels, Avx2MatchesScalar) {
    const auto* v = kernels::avx2_table();
    if (!v || !kernels::cpu_has_avx2()) GTEST_SKIP() << "AVX2 variant not available on this machine";
    const auto& s = kernels::scalar_table();
    std::mt19937_64 rng(1);
    for (std::size_t n : kLengths) {
        const auto x = randoms(n, rng), y = randoms(n, rng), pos = randoms(n, rng, 0.1, 2);
        // same partial-sum layout, so reductions agree to rounding of the final combine
        const double ds = s.dot(x.data(), y.data(), n), dv = v->dot(x.data(), y.data(), n);
        EXPECT_NEAR(ds, dv, 1e-13 * (1 + std::abs(ds))) << n;
        const double ss = s.sum(x.data(), n), sv = v->sum(x.data(), n);
        EXPECT_NEAR(ss, sv, 1e-13 * (1 + std::abs(ss))) << n;

        auto ya = y, yb = y;
        s.axpy(0.37, x.data(), ya.data(), n);
        v->axpy(0.37, x.data(), yb.data(), n);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(ya[i], yb[i], 1e-15 * (1 + std::abs(ya[i])));

        std::vector<double> za(n), zb(n);
        s.mul(x.data(), y.data(), za.data(), n);
        v->mul(x.data(), y.data(), zb.data(), n);
        EXPECT_EQ(za, zb);

        auto den = pos;
        for (std::size_t i = 0; i < n; i += 3) den[i] = 0.0;
        s.safe_div(x.data(), den.data(), za.data(), n);
        v->safe_div(x.data(), den.data(), zb.data(), n);
        EXPECT_EQ(za, zb);
    }
}

TEST(Kernels, DispatchReportsIsa) {
    const auto isa = kernels::active_isa();
    EXPECT_TRUE(isa == kernels::Isa::scalar || isa == kernels::Isa::avx2);
    EXPECT_STRNE(kernels::isa_name(isa), "");
    if (isa == kernels::Isa::avx2) EXPECT_EQ(&kernels::active(), kernels::avx2_table());
}

#include <gtest/gtest.h>

#include <random>

#include "vnl/geometry.hpp"

using namespace vnl;

namespace {

TwoForm random_form(std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    return {{{nd(rng), nd(rng), nd(rng)}}, {{nd(rng), nd(rng), nd(rng)}}};
}

double max_abs_diff(const TwoForm& a, const TwoForm& b) {
    double m = 0.0;
    for (int i = 0; i < 3; ++i) m = std::max({m, std::abs(a.E[i] - b.E[i]), std::abs(a.B[i] - b.B[i])});
    return m;
}

}  // namespace

TEST(NullCoords, WorkedPoint) {
    const auto c = null_coords({3.0, {{4.0, 0.0, 0.0}}});
    EXPECT_DOUBLE_EQ(c.u, -1.0);
    EXPECT_DOUBLE_EQ(c.ubar, 7.0);
    EXPECT_DOUBLE_EQ(c.tau_minus, std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(c.tau_plus, std::sqrt(50.0));
}

TEST(NullFrame, OnXAxis) {
    const auto f = null_frame(Vec3{{1.0, 0.0, 0.0}});
    const Vec4 L{1, 1, 0, 0}, Lb{1, -1, 0, 0};
    for (int m = 0; m < 4; ++m) {
        EXPECT_DOUBLE_EQ(f.L[m], L[m]);
        EXPECT_DOUBLE_EQ(f.Lbar[m], Lb[m]);
    }
    EXPECT_NEAR(f.e1[1], 1.0, 1e-15);
    EXPECT_NEAR(f.e2[2], 1.0, 1e-15);
}

TEST(NullFrame, OrientedOrthonormalEverywhere) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    std::vector<Vec3> pts{{{0, 0, 2}}, {{0, 0, -3}}, {{1e-12, 0, 1}}};
    for (int k = 0; k < 200; ++k) pts.push_back({{nd(rng), nd(rng), nd(rng)}});
    for (const auto& x : pts) {
        const auto f = null_frame(x);
        EXPECT_NEAR(dot(f.e1, f.e1), 1.0, 1e-14);
        EXPECT_NEAR(dot(f.e2, f.e2), 1.0, 1e-14);
        EXPECT_NEAR(dot(f.e1, f.e2), 0.0, 1e-14);
        EXPECT_NEAR(dot(f.e1, f.n), 0.0, 1e-14);
        const Vec3 c = cross(f.e1, f.e2);
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(c[i], f.n[i], 1e-14);
    }
}

TEST(NullFrame, ThrowsAtOrigin) { EXPECT_THROW(null_frame(Vec3{}), DomainError); }

TEST(NullDecompose, RadialElectricField) {
    const TwoForm F{{{1.0, 0.0, 0.0}}, {}};
    const auto c = null_decompose(F, SpacetimePoint{0.0, {{1.0, 0.0, 0.0}}});
    EXPECT_DOUBLE_EQ(c.rho, -1.0);
    EXPECT_DOUBLE_EQ(c.sigma, 0.0);
    EXPECT_DOUBLE_EQ(c.alpha_norm2(), 0.0);
    EXPECT_DOUBLE_EQ(c.alpha_bar_norm2(), 0.0);
}

TEST(StressEnergy, UnitElectricField) {
    const Mat4 T = stress_energy(TwoForm{{{1.0, 0.0, 0.0}}, {}});
    EXPECT_DOUBLE_EQ(T[0][0], 0.5);
    EXPECT_DOUBLE_EQ(T[1][1], -0.5);
    EXPECT_DOUBLE_EQ(T[2][2], 0.5);
    EXPECT_DOUBLE_EQ(trace(T), 0.0);
}

TEST(TwoForm, ComponentsRoundTripAndAntisymmetry) {
    std::mt19937_64 rng(1);
    for (int k = 0; k < 50; ++k) {
        const TwoForm F = random_form(rng);
        const Mat4 c = F.components();
        for (int m = 0; m < 4; ++m)
            for (int n = 0; n < 4; ++n) EXPECT_EQ(c[m][n], -c[n][m]);
        EXPECT_EQ(max_abs_diff(TwoForm::from_components(c), F), 0.0);
    }
    // F_12 = -B_3
    const TwoForm Bz{{}, {{0.0, 0.0, 1.0}}};
    EXPECT_DOUBLE_EQ(Bz.components()[1][2], -1.0);
}

TEST(Hodge, DoubleDualIsMinusIdentity) {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 200; ++k) {
        const TwoForm F = random_form(rng);
        EXPECT_LE(max_abs_diff(hodge_dual(hodge_dual(F)), -1.0 * F), 1e-14);
    }
}

TEST(Hodge, ElectricPartOfDualIsMinusB) {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 20; ++k) {
        const TwoForm F = random_form(rng);
        const TwoForm D = hodge_dual(F);
        for (int i = 0; i < 3; ++i) {
            EXPECT_NEAR(D.E[i], -F.B[i], 1e-15);
            EXPECT_NEAR(D.B[i], F.E[i], 1e-15);
        }
    }
}

TEST(NullDecompose, ReconstructRoundTripAndNorm) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 500; ++k) {
        const TwoForm F = random_form(rng);
        const Vec3 x{{nd(rng), nd(rng), nd(rng)}};
        const auto fr = null_frame(x);
        const auto c = null_decompose(F, fr);
        EXPECT_LE(max_abs_diff(reconstruct(c, fr), F), 1e-13);
        EXPECT_NEAR(c.frame_norm2(), field_norm2(F), 1e-12 * (1.0 + field_norm2(F)));
    }
}

TEST(StressEnergy, NullContractionsMatchComponents) {
    // T(L, L) = |alpha|^2, T(Lbar, Lbar) = |alpha_bar|^2, T(L, Lbar) = rho^2 + sigma^2
    std::mt19937_64 rng(6);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 200; ++k) {
        const TwoForm F = random_form(rng);
        const Vec3 x{{nd(rng), nd(rng), nd(rng)}};
        const auto fr = null_frame(x);
        const auto c = null_decompose(F, fr);
        const Mat4 T = stress_energy(F);
        EXPECT_NEAR(contract(T, fr.L, fr.L), c.alpha_norm2(), 1e-12);
        EXPECT_NEAR(contract(T, fr.Lbar, fr.Lbar), c.alpha_bar_norm2(), 1e-12);
        EXPECT_NEAR(contract(T, fr.L, fr.Lbar), c.rho * c.rho + c.sigma * c.sigma, 1e-12);
        EXPECT_NEAR(trace(T), 0.0, 1e-13);
    }
}

TEST(MaxwellResidual, ShapeChecks) {
    SampledField4 s;
    s.n = {2, 3, 3, 3};
    s.F.resize(s.size());
    s.J.resize(s.size());
    EXPECT_THROW(maxwell_residual(s), ShapeError);
    s.J.clear();
    EXPECT_THROW(maxwell_residual(s), ShapeError);
}

#include <gtest/gtest.h>

#include "vnl/symmetries.hpp"
#include "vnl/transport.hpp"

using namespace vnl;

namespace {
struct NoField {
    TwoForm operator()(double, const Vec3&) const { return {}; }
};
struct UniformB {
    TwoForm operator()(double, const Vec3&) const { return {{}, {{0.0, 0.0, 0.7}}}; }
};
}  // namespace

TEST(Cutoff, Values) {
    EXPECT_EQ(chi(0.4), 0.0);
    EXPECT_EQ(chi(1.5), 1.0);
    EXPECT_DOUBLE_EQ(chi(0.75), 0.5);
    for (double s : {0.5, 1.0}) {
        EXPECT_NEAR(chi(s - 1e-9), chi(s + 1e-9), 1e-8);
        EXPECT_NEAR(chi_prime(s - 1e-7), chi_prime(s + 1e-7), 1e-5);
    }
    const double h = 1e-6;
    EXPECT_NEAR(chi_prime(0.8), (chi(0.8 + h) - chi(0.8 - h)) / (2 * h), 1e-7);
}

TEST(Characteristics, FreeFlowIsStraight) {
    const Particle p{{{1.0, 2.0, -1.0}}, {{0.0, 3.0, 4.0}}, 1.0, 1.0};
    const auto tr = integrate_characteristics(NoField{}, p, 5.0, 0.01);
    const Vec3 X = tr.X.back();
    EXPECT_NEAR(X[0], 1.0, 1e-13);
    EXPECT_NEAR(X[1], 2.0 + 3.0, 1e-12);
    EXPECT_NEAR(X[2], -1.0 + 4.0, 1e-12);
    EXPECT_DOUBLE_EQ(tr.min_speed, 5.0);
}

TEST(Characteristics, MagneticFieldKeepsSpeed) {
    const Particle p{{{0.0, 0.0, 0.0}}, {{2.0, 0.0, 1.0}}, 1.0, 1.0};
    const auto tr = integrate_characteristics(UniformB{}, p, 20.0, 0.01);
    EXPECT_NEAR(norm(tr.V.back()), std::sqrt(5.0), 1e-9);
    EXPECT_NEAR(tr.min_speed, std::sqrt(5.0), 1e-9);
}

TEST(Characteristics, RejectsBadInput) {
    const Particle p{{}, {}, 1.0, 1.0};
    EXPECT_THROW(integrate_characteristics(NoField{}, p, 1.0, 0.1), DomainError);
    const Particle q{{}, {{1, 0, 0}}, 1.0, 1.0};
    EXPECT_THROW(integrate_characteristics(NoField{}, q, 1.0, 0.0), std::invalid_argument);
}

TEST(FreeSolution, ConstantAlongRays) {
    auto g0 = [](const auto& x, const auto& v) { return vnl::exp(-dot(x, x)) * v[2]; };
    const Vec3 x0{{0.2, 0.1, -0.3}}, v{{1.0, -2.0, 2.0}};
    const double t = 4.0;
    EXPECT_NEAR(free_solution_eval(g0, t, x0 + v * (t / 3.0), v), g0(x0, v), 1e-15);
}

TEST(FreeSolution, WeightsConservedAlongRays) {
    const Vec3 x0{{0.5, -0.2, 1.0}}, v{{0.3, 0.4, 1.2}};
    const auto w0 = eval_weights(0.0, x0, v);
    const double t = 7.5;
    const auto wt = eval_weights(t, x0 + v * (t / norm(v)), v);
    for (int k = 0; k < 11; ++k) EXPECT_NEAR(wt[k], w0[k], 1e-13) << kWeightNames[k];
}

TEST(SmoothStep, Limits) {
    EXPECT_EQ(smooth_step(-1.0), 0.0);
    EXPECT_EQ(smooth_step(1.0), 1.0);
    EXPECT_NEAR(smooth_step(0.5), 0.5, 1e-15);
}

TEST(VelocityRule, ShellVolume) {
    const auto r = velocity_rule(1.0, 3.0, 6, 11);
    double s = 0.0;
    for (double w : r.w) s += w;
    EXPECT_NEAR(s, 4.0 / 3.0 * pi * (27.0 - 1.0), 1e-11);
}

TEST(Density, NeutralPairPassesSingleSignRefused) {
    DensitySpec spec;
    DensityComponent a;
    a.x_center = {{1.0, 0.0, 0.0}};
    DensityComponent b = a;
    b.amplitude = -1.0;
    b.x_center = {{-1.0, 0.0, 0.0}};
    spec.x_nodes = 3;
    spec.v_radial = 3;
    spec.v_degree = 5;
    spec.components = {a, b};
    const Ensemble e = sample_initial_density(spec);
    EXPECT_LE(std::abs(e.charge()), 1e-15 * e.l1());
    EXPECT_GT(e.l1(), 0.0);
    spec.components = {a};
    try {
        sample_initial_density(spec);
        FAIL() << "expected refusal";
    } catch (const ConfigError& err) {
        EXPECT_NE(std::string(err.what()).find("neutral hypothesis"), std::string::npos);
    }
    spec.allow_nonneutral = true;
    EXPECT_NO_THROW(sample_initial_density(spec));
}

TEST(Moments, DepositionConservesCharge) {
    const GridGeometry g = GridGeometry::centered(8, 4.0);
    std::vector<Particle> ps{{{{0.3, -0.2, 0.1}}, {{1, 0, 0}}, 0.5, 2.0}, {{{-1.1, 0.7, 2.2}}, {{0, 1, 1}}, 0.25, -1.0},
                             {{{9.0, 0.0, 0.0}}, {{1, 0, 0}}, 1.0, 1.0}};
    const auto m = vlasov_moments(ps, g);
    EXPECT_EQ(m.outside, 1u);
    EXPECT_NEAR(m.deposited_charge, 0.75, 1e-15);
    double s = 0.0;
    for (double v : m.rho.data()) s += v * g.h * g.h * g.h;
    EXPECT_NEAR(s, 0.75, 1e-14);
    EXPECT_THROW(vlasov_moments(ps, g, true, true), DomainError);
}

TEST(VelocityAverage, IsotropicCurrentVanishes) {
    const auto rule = velocity_rule(1.0, 2.0, 4, 9);
    auto g = [](double, const Vec3&, const Vec3& v) { return std::exp(-dot(v, v)); };
    const Vec4 J = velocity_average(g, 0.0, Vec3{}, rule);
    EXPECT_LT(J[0], 0.0);
    for (int i = 1; i < 4; ++i) EXPECT_NEAR(J[i], 0.0, 1e-15);
}

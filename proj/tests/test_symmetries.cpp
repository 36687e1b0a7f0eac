#include <gtest/gtest.h>

#include "vnl/maxwell.hpp"
#include "vnl/symmetries.hpp"
#include "vnl/transport.hpp"

using namespace vnl;

TEST(SymmetryOp, ParseAndPrint) {
    const auto op = SymmetryOp::parse("L:r12^b03^S");
    EXPECT_TRUE(op.lifted);
    ASSERT_EQ(op.factors.size(), 3u);
    EXPECT_EQ(op.factors[1], FieldId::b03);
    EXPECT_EQ(op.to_string(), "L:r12^b03^S");
    EXPECT_THROW(SymmetryOp::parse("r12^"), ConfigError);
    EXPECT_THROW(SymmetryOp::parse("q7"), ConfigError);
}

TEST(Killing, Components) {
    const Vec3 x{{1.0, 2.0, 3.0}};
    const auto r12 = killing_vector(FieldId::r12, 0.5, x);  // x1 d2 - x2 d1
    EXPECT_EQ(r12[1], -2.0);
    EXPECT_EQ(r12[2], 1.0);
    const auto b02 = killing_vector(FieldId::b02, 0.5, x);  // t d2 + x2 d0
    EXPECT_EQ(b02[0], 2.0);
    EXPECT_EQ(b02[2], 0.5);
    const auto S = killing_vector(FieldId::S, 0.5, x);
    EXPECT_EQ(S[0], 0.5);
    EXPECT_EQ(S[3], 3.0);
}

TEST(Lift, RotationOnMixedMonomial) {
    auto g = [](const auto&, const auto& x, const auto& v) { return x[0] * v[1]; };
    const Vec3 x{{0.7, -1.3, 0.4}}, v{{0.2, 1.1, -0.5}};
    EXPECT_NEAR(apply_lift(FieldId::r12, g, 0.3, x, v), x[0] * v[0] - x[1] * v[1], 1e-15);
}

TEST(Lift, BoostMatchesHandDerivative) {
    // Lift of b01 is t d1 + x1 d0 + |v| d_{v1}; on g = t v1 it gives x1 v1 + t |v|
    auto g = [](const auto& t, const auto&, const auto& v) { return t * v[0]; };
    const Vec3 x{{0.7, -1.3, 0.4}}, v{{0.2, 1.1, -0.5}};
    EXPECT_NEAR(apply_lift(FieldId::b01, g, 0.3, x, v), x[0] * v[0] + 0.3 * norm(v), 1e-14);
}

TEST(Lift, ThrowsAtZeroVelocity) {
    auto g = [](const auto& t, const auto&, const auto&) { return t; };
    EXPECT_THROW(apply_lift(FieldId::b01, g, 0.0, Vec3{{1, 0, 0}}, Vec3{}), DomainError);
}

TEST(Lift, CommutesWithFreeTransport) {
    auto g0 = [](const auto& x, const auto& v) { return vnl::exp(-dot(x, x)) * (1.0 + 0.3 * v[0] * v[1]); };
    const Vec3 x{{0.4, -0.2, 0.9}}, v{{1.2, 0.3, -0.7}};
    for (auto z : kAllFields) {
        const SymmetryOp op{{z}, true};
        const double direct = apply_op(op, free_solution(g0), 2.5, x, v);
        EXPECT_NEAR(direct, lifted_free_derivative(g0, op, 2.5, x, v), 1e-12) << field_name(z);
    }
}

TEST(Weights, WorkedValues) {
    EXPECT_DOUBLE_EQ(eval_weight(WeightId::z12, 0.0, Vec3{{1, 0, 0}}, Vec3{{0, 1, 0}}), 1.0);
    EXPECT_DOUBLE_EQ(eval_weight(WeightId::s0, 1.0, Vec3{}, Vec3{{0, 0, 2}}), -1.0);
    EXPECT_THROW(eval_weight(WeightId::v1, 0.0, Vec3{}, Vec3{}), DomainError);
}

TEST(Weights, LiftsStayInTheSet) {
    for (auto z : kAllFields)
        for (int w = 0; w < 11; ++w) {
            const auto m = lift_of_weight(z, static_cast<WeightId>(w));
            EXPECT_TRUE(m.in_set) << field_name(z) << " on " << kWeightNames[w] << " residual " << m.residual;
            EXPECT_LE(m.max_bound_ratio, 1.0 + 1e-12);
        }
}

TEST(VelocitySplit, Reassembles) {
    const Vec3 x{{0.3, -1.0, 2.0}}, v{{-0.4, 0.9, 0.2}};
    const auto s = velocity_null_split(x, v);
    const auto fr = null_frame(x);
    // v = vL (n) - vLbar (n) + vA eA spatially; vL + vLbar = v0
    EXPECT_NEAR(s.vL + s.vLbar, s.v0, 1e-15);
    const Vec3 back = fr.n * (s.vL - s.vLbar) + fr.e1 * s.vA[0] + fr.e2 * s.vA[1];
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(back[i], v[i], 1e-15);
}

TEST(LieDerivative, StaticCoulombIsChargeless) {
    const CoulombExterior C{1.0, 0.5};
    const Vec3 x{{1.1, -0.4, 0.8}};
    for (auto z : {FieldId::d0, FieldId::r12, FieldId::r13, FieldId::r23}) {
        const TwoForm L = lie_derivative({z}, C)(0.7, x);
        EXPECT_LE(std::sqrt(field_norm2(L)), 1e-15) << field_name(z);
    }
    // a translation does not annihilate it
    const TwoForm L1 = lie_derivative({FieldId::d1}, C)(0.7, x);
    EXPECT_GT(std::sqrt(field_norm2(L1)), 1e-3);
    EXPECT_THROW(lie_derivative({FieldId::d0, FieldId::d0, FieldId::d0, FieldId::d0}, C), CapabilityError);
}

TEST(Multiplier, SmoothAtOrigin) {
    const Vec4 K = multiplier_K0({2.0, {}});
    EXPECT_DOUBLE_EQ(K[0], 5.0);
    EXPECT_DOUBLE_EQ(K[1], 0.0);
    // tau+^2 L/2 + tau-^2 Lbar/2 away from the origin
    const SpacetimePoint p{1.5, {{0.0, 2.0, 0.0}}};
    const auto f = null_frame(p.x);
    const Vec4 K2 = multiplier_K0(p);
    for (int m = 0; m < 4; ++m)
        EXPECT_NEAR(K2[m], 0.5 * (p.tau_plus() * p.tau_plus() * f.L[m] + p.tau_minus() * p.tau_minus() * f.Lbar[m]),
                    1e-13);
}

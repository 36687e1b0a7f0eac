#include <gtest/gtest.h>

#include "vnl/analysis.hpp"

using namespace vnl;

TEST(LogFit, RecoversPowerLaw) {
    std::vector<double> x, y;
    for (int k = 0; k < 12; ++k) {
        x.push_back(std::pow(10.0, 0.25 * k));
        y.push_back(3.0 * std::pow(x.back(), -1.5));
    }
    const auto f = fit_loglog(x, y);
    EXPECT_NEAR(f.slope, -1.5, 1e-12);
    EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-11);
    EXPECT_NEAR(f.stderr_slope, 0.0, 1e-10);
    EXPECT_NEAR(f.decades, 2.75, 1e-12);
}

TEST(LogFit, RejectsBadInput) {
    std::vector<double> x{1, 2, 3}, y{1, 2};
    EXPECT_THROW(fit_loglog(x, y), ShapeError);
    y.push_back(0.0);
    EXPECT_THROW(fit_loglog(x, y, 3, 0.1), DomainError);
    y.back() = 1.0;
    EXPECT_THROW(fit_loglog(x, y), DomainError);          // too few samples
    EXPECT_THROW(fit_loglog(x, y, 3, 1.5), DomainError);  // too narrow
}

TEST(DecayFit, CoulombRadialSlope) {
    const CoulombExterior C{1.0, 0.5};
    RaySpec ray;
    ray.u = 0.0;
    ray.direction = {{1.0, 1.0, 0.0}};
    ray.r_min = 10.0;
    ray.r_max = 1000.0;
    ray.samples = 12;
    const auto rep = fit_decay_exponent(C, ray, NullComponent::rho, -2.0, 1e-3);
    EXPECT_NEAR(rep.fit.slope, -2.0, 1e-6);
    EXPECT_TRUE(rep.pass);
}

TEST(Convergence, Order) {
    EXPECT_NEAR(convergence_order(4e-4, 1e-4), 2.0, 1e-12);
    EXPECT_NEAR(table_drift({1.0, 2.0, 1.5}), 2.0, 1e-15);
    EXPECT_TRUE(std::isinf(table_drift({0.0, 1.0})));
}

TEST(WeightInequalities, SmallSampleHolds) {
    const auto r = weights1_check(2000, 11);
    EXPECT_EQ(r.samples, 2000u);
    EXPECT_TRUE(r.pass()) << r.identity_L << " " << r.identity_Lbar << " " << r.identity_ang << " " << r.identity_rvA;
}

TEST(CalculF, ConstantAndSmallSample) {
    EXPECT_DOUBLE_EQ(calculF_constant(), std::sqrt(2.0) + 0.5);
    const auto r = calculF_bound_check(500, 3);
    EXPECT_TRUE(r.pass()) << r.max_ratio << " " << r.expansion_residual;
}

TEST(FloorStudy, InitialParticles) {
    FloorOptions opt;
    opt.trajectories = 50;
    const auto ps = floor_initial_particles(opt);
    ASSERT_EQ(ps.size(), 50u);
    for (const auto& p : ps) {
        EXPECT_NEAR(norm(p.V), opt.speed0, 1e-12);
        EXPECT_LE(norm(p.X), opt.ball_radius);
    }
}

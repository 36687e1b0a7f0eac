#include <gtest/gtest.h>

#include "vnl/analysis.hpp"
#include "vnl/maxwell.hpp"

using namespace vnl;

namespace {

Vec4 no_current(double, const Vec3&) { return {0.0, 0.0, 0.0, 0.0}; }

template <class P>
MaxwellResidual residual_at(const P& F, double h, const Vec3& c = {{0.2, -0.1, 0.4}}) {
    const int n = 9;
    const double span = 0.5 * (n - 1) * h;
    return maxwell_residual(sample_field4(F, no_current, {0.3 - span, c[0] - span, c[1] - span, c[2] - span},
                                          {h, h, h, h}, {n, n, n, n}));
}

}  // namespace

TEST(Providers, PlaneWaveSolvesVacuumEquations) {
    const PlaneWave w{{{0.6, 0.0, 0.8}}, {{0.0, 1.0, 0.0}}, 0.3};
    const auto c = residual_at(w, 0.1), f = residual_at(w, 0.05);
    EXPECT_LT(f.primal_max, 1e-2);
    EXPECT_GT(convergence_order(c.primal_max, f.primal_max), 1.9);
    EXPECT_GT(convergence_order(c.dual_max, f.dual_max), 1.9);
}

TEST(Providers, PotentialFieldCurrentIsConsistent) {
    const PotentialField P;
    auto J = [&P](double t, const Vec3& x) { return P.current(t, x); };
    auto res = [&](double h) {
        const int n = 9;
        const double s = 0.5 * (n - 1) * h;
        return maxwell_residual(sample_field4(P, J, {0.2 - s, 0.1 - s, 0.0 - s, 0.3 - s}, {h, h, h, h}, {n, n, n, n}));
    };
    const auto c = res(0.08), f = res(0.04);
    EXPECT_GT(convergence_order(c.primal_max, f.primal_max), 1.9);
    EXPECT_GT(convergence_order(c.dual_max, f.dual_max), 1.9);
}

TEST(Providers, CoulombIsDivergenceFreeOutside) {
    const CoulombExterior C{2.0, 0.5};
    const Vec3 x0{{2.0, 1.5, -1.0}};
    const auto c = residual_at(C, 0.1, x0), f = residual_at(C, 0.05, x0);
    EXPECT_GT(convergence_order(c.primal_max, f.primal_max), 1.8);
    EXPECT_THROW(C(0.0, Vec3{{0.1, 0.0, 0.0}}), DomainError);
}

TEST(Leapfrog, CavityModeEnergyBounded) {
    GridGeometry g;
    g.cells = 16;
    g.h = 1.0 / 16;
    const CavityMode mode;
    FieldGrid f = field_from_provider(mode, g, 0.0);
    const double e0 = f.energy();
    ASSERT_GT(e0, 0.0);
    const double dt = 0.5 * cfl_limit(g);
    double worst = 0.0;
    for (int n = 0; n < 200; ++n) {
        step_fields(f, nullptr, dt);
        worst = std::max(worst, std::abs(f.energy() - e0) / e0);
    }
    EXPECT_LT(worst, 2e-2);
    EXPECT_LT(div_B_norms(f).max, 1e-12);
}

TEST(Leapfrog, RefusesCflViolation) {
    FieldGrid f(GridGeometry::centered(8, 1.0));
    EXPECT_THROW(step_fields(f, nullptr, 1.01 * cfl_limit(f.geom)), ConfigError);
    EXPECT_THROW(step_fields(f, nullptr, 0.0), ConfigError);
}

TEST(Leapfrog, ZeroDataStaysZero) {
    FieldGrid f(GridGeometry::centered(8, 1.0));
    for (int n = 0; n < 10; ++n) step_fields(f, nullptr, 0.5 * cfl_limit(f.geom));
    EXPECT_EQ(f.energy(), 0.0);
}

TEST(Constraints, NeutralDensitySolvesGauss) {
    const GridGeometry g = GridGeometry::centered(12, 3.0);
    Array3 rho(g.nodes());
    rho(4, 6, 6) = 1.0;
    rho(8, 6, 6) = -1.0;
    const FieldGrid f = solve_initial_constraints(rho, g);
    EXPECT_LT(gauss_residual(f, rho).max, 1e-10);
    EXPECT_NEAR(enclosed_charge(f), 0.0, 1e-12);
}

TEST(Constraints, NonNeutralRefusedUnlessWaived) {
    const GridGeometry g = GridGeometry::centered(8, 2.0);
    Array3 rho(g.nodes());
    rho(4, 4, 4) = 1.0;
    EXPECT_THROW(solve_initial_constraints(rho, g), ConfigError);
    PoissonOptions opt;
    opt.allow_nonneutral = true;
    const FieldGrid f = solve_initial_constraints(rho, g, opt);
    EXPECT_LT(gauss_residual(f, rho).max, 1e-10);
    EXPECT_THROW(solve_initial_constraints(Array3(4), g), ShapeError);
}

TEST(FieldGrid, SamplesLinearFieldExactly) {
    const GridGeometry g = GridGeometry::centered(6, 3.0);
    auto lin = [](double, const Vec3& x) { return TwoForm{{{x[0], 2.0 * x[1], -x[2]}}, {{1.0, x[0] + x[1], 0.5}}}; };
    const FieldGrid f = field_from_provider(lin, g, 0.0);
    const Vec3 x{{0.37, -1.21, 0.8}};
    const TwoForm s = f.sample(x), e = lin(0.0, x);
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(s.E[i], e.E[i], 1e-13);
        EXPECT_NEAR(s.B[i], e.B[i], 1e-13);
    }
    EXPECT_THROW(f.sample(Vec3{{5.0, 0.0, 0.0}}), DomainError);
}

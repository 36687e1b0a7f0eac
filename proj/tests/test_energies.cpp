#include <gtest/gtest.h>

#include "vnl/energies.hpp"
#include "vnl/maxwell.hpp"

using namespace vnl;

TEST(Dyadic, SlicesPartitionTheCone) {
    EXPECT_EQ(dyadic_t(0), 0.0);
    EXPECT_EQ(dyadic_t(3), 8.0);
    for (double t : {0.5, 1.0, 3.0, 17.0})
        for (double u : {-5.0, -0.3, 0.0, 0.4 * t}) EXPECT_NEAR(partition_defect(u, t), 0.0, 1e-13) << t << " " << u;
}

TEST(BallRule, ShellVolume) {
    const BallRule b = ball_rule(1.0, 2.0, 3, 4, 5);
    double s = 0.0;
    for (double w : b.w) s += w;
    EXPECT_NEAR(s, 4.0 / 3.0 * pi * 7.0, 1e-12);
}

TEST(Foliation, GaussianIdentity) {
    auto g = [](double s, const Vec3& x) { return std::exp(-dot(x, x) - 0.1 * s) * (1.0 + 0.2 * x[0]); };
    const auto c = foliation_identity_check(g, 3.0);
    EXPECT_GT(c.slab, 0.0);
    EXPECT_LT(c.rel_error, 1e-8);
}

TEST(VlasovEnergy, FreeBalanceAndConstantSpatialTerm) {
    std::vector<Particle> ps;
    for (int k = 0; k < 40; ++k) {
        const double a = 0.3 * k;
        ps.push_back({{{std::cos(a), std::sin(2 * a), 0.1 * k - 2.0}}, {{std::sin(a), 1.0, std::cos(a)}}, 0.01, 1.0 + k});
    }
    const double e0 = vlasov_energy(free_histories(ps, 0.0), 0.0).spatial;
    for (double t : {1.0, 5.0, 20.0}) {
        const auto hs = free_histories(ps, t);
        EXPECT_DOUBLE_EQ(vlasov_energy(hs, t).spatial, e0);
        EXPECT_LT(vlasov_identity_residual(hs, t), 1e-14);
        const auto e = vlasov_energy(hs, t);
        EXPECT_GE(e.flux_sup + 1e-15, e.flux_sup_grid);
    }
}

TEST(MultiIndices, Count) {
    EXPECT_EQ(lifted_multi_indices(0).size(), 1u);
    EXPECT_EQ(lifted_multi_indices(1).size(), 12u);
    EXPECT_EQ(lifted_multi_indices(2).size(), 1u + 11u + 121u);
    EXPECT_THROW(lifted_multi_indices(4), CapabilityError);
}

TEST(K0Density, NullPartsMatchStressEnergy) {
    const TwoForm F{{{0.3, -0.2, 0.9}}, {{0.1, 0.5, -0.4}}};
    const SpacetimePoint p{2.0, {{1.0, -0.5, 0.7}}};
    EXPECT_NEAR(K0_density(F, p), K0_density_parts(F, p).sum(), 1e-12);
}

TEST(EnergyIdentity, SecondOrderInTime) {
    const PotentialField P;
    auto J = [&P](double t, const Vec3& x) { return P.current(t, x); };
    const BallRule rule = ball_rule(0.0, 6.0, 5, 8, 13);
    const auto c = energy_identity_residual(P, J, 0.0, 1.0, 6, rule);
    const auto f = energy_identity_residual(P, J, 0.0, 1.0, 12, rule);
    EXPECT_GT(std::log2(std::abs(c.residual) / std::abs(f.residual)), 1.9);
    EXPECT_THROW(energy_identity_residual(P, J, 0.0, 1.0, 0, rule), std::invalid_argument);
}

TEST(FieldEnergy, VacuumPlaneWaveCones) {
    // cone integrand omits alpha_bar, so it is bounded by the Sigma density integral
    const CoulombExterior C{1.0, 0.5};
    FieldEnergyOptions opt;
    opt.r_excl = 1.0;
    opt.r_max = 10.0;
    opt.panels = 6;
    opt.sphere_degree = 7;
    opt.u_min = -4.0;
    opt.u_spacing = 1.0;
    const auto e = field_energy_K0(C, 2.0, opt);
    EXPECT_GT(e.sigma_term, 0.0);
    EXPECT_NEAR(e.sigma_parts.alpha, 0.0, 1e-14);
    EXPECT_GT(e.excluded_estimate, 0.0);
}

#pragma once
// Particle-in-cell loop for the massless Vlasov-Maxwell system: quadrature
// particles carry f0 along characteristics, currents are deposited on the
// Yee edges and the fields advance by the staggered leapfrog.

#include <functional>
#include <string>
#include <vector>

#include "core.hpp"
#include "grid.hpp"
#include "maxwell.hpp"
#include "parallel.hpp"
#include "transport.hpp"

namespace vnl {

struct SimulationConfig {
    int cells = 48;
    double half_width = 28.0;
    double horizon = 20.0;
    double cfl_safety = 0.5;  // dt = safety * h / sqrt(3) unless dt > 0
    double dt = 0.0;
    int diag_stride = 1;
    DensitySpec density;
    PoissonOptions poisson;
};

struct SimulationSample {
    double time = 0.0;
    double ensemble_charge = 0.0;   // sum w f0
    double deposited_charge = 0.0;  // sum rho h^3
    double enclosed_charge = 0.0;   // sum div E h^3
    double gauss_max = 0.0, gauss_l2 = 0.0;
    double div_B_max = 0.0;
    double field_energy = 0.0;
    double ensemble_l1 = 0.0;
    std::size_t outside = 0;
};

struct SimulationResult {
    double dt = 0.0, h = 0.0;
    int steps = 0;
    std::size_t particles = 0;
    std::vector<SimulationSample> series;
    FieldGrid final_field;
    Ensemble final_ensemble;

    // Largest deviation from the initial value, relative to max(1, l1 mass).
    double charge_drift() const {
        double d = 0.0;
        if (series.empty()) return d;
        const double scale = std::max(1.0, series.front().ensemble_l1);
        for (const auto& s : series) {
            d = std::max(d, std::abs(s.ensemble_charge - series.front().ensemble_charge) / scale);
            d = std::max(d, std::abs(s.enclosed_charge - series.front().enclosed_charge) / scale);
        }
        return d;
    }
    // |sum w f0 - sum rho h^3| over the run.
    double deposition_gap() const {
        double d = 0.0;
        for (const auto& s : series) d = std::max(d, std::abs(s.ensemble_charge - s.deposited_charge));
        return d;
    }
};

// Domain must contain the light cone of the data support over the horizon.
inline double support_radius(const DensitySpec& spec) {
    double r = 0.0;
    for (const auto& c : spec.components) {
        const double w = std::max({c.x_width[0], c.x_width[1], c.x_width[2]});
        r = std::max(r, norm(c.x_center) + std::sqrt(3.0) * spec.x_extent * w);
    }
    return r;
}

inline void validate(const SimulationConfig& cfg) {
    if (cfg.cells < 4) throw ConfigError("grid needs at least 4 cells per axis");
    if (!(cfg.half_width > 0.0) || !(cfg.horizon >= 0.0)) throw ConfigError("half_width > 0 and horizon >= 0 required");
    const GridGeometry g = GridGeometry::centered(cfg.cells, cfg.half_width);
    if (cfg.dt > cfl_limit(g)) {
        throw ConfigError("dt violates the CFL bound; use dt <= " + std::to_string(cfl_limit(g)));
    }
    const double reach = support_radius(cfg.density) + cfg.horizon + 2.0 * g.h;
    if (!cfg.density.components.empty() && reach > cfg.half_width)
        throw ConfigError("domain too small: data support plus horizon reaches " + std::to_string(reach) +
                          " > half_width " + std::to_string(cfg.half_width));
}

namespace detail {

// Classical RK4 on one particle with the field frozen over the step.
inline void push_particle(Particle& p, const FieldGrid& f, double dt) {
    struct D {
        Vec3 X, V;
    };
    auto rhs = [&f](const D& y) -> D {
        const double sp = norm(y.V);
        const Vec3 dir = y.V / sp;
        const TwoForm F = f.sample(y.X);
        return {dir, (F.E + cross(dir, F.B)) * chi(sp)};
    };
    const D y0{p.X, p.V};
    const D k1 = rhs(y0);
    const D k2 = rhs({y0.X + k1.X * (0.5 * dt), y0.V + k1.V * (0.5 * dt)});
    const D k3 = rhs({y0.X + k2.X * (0.5 * dt), y0.V + k2.V * (0.5 * dt)});
    const D k4 = rhs({y0.X + k3.X * dt, y0.V + k3.V * dt});
    p.X += (k1.X + k2.X * 2.0 + k3.X * 2.0 + k4.X) * (dt / 6.0);
    p.V += (k1.V + k2.V * 2.0 + k3.V * 2.0 + k4.V) * (dt / 6.0);
}

inline SimulationSample diagnose(const Ensemble& ens, const Moments& m, const FieldGrid& f) {
    SimulationSample s;
    s.time = f.time;
    s.ensemble_charge = ens.charge();
    s.ensemble_l1 = ens.l1();
    s.deposited_charge = m.deposited_charge;
    s.enclosed_charge = enclosed_charge(f);
    const auto gr = gauss_residual(f, m.rho);
    s.gauss_max = gr.max;
    s.gauss_l2 = gr.l2;
    s.div_B_max = div_B_norms(f).max;
    s.field_energy = f.energy();
    s.outside = m.outside;
    return s;
}

}  // namespace detail

using StepCallback = std::function<void(int step, const SimulationSample&, const FieldGrid&, const Ensemble&)>;

inline SimulationResult run_simulation(const SimulationConfig& cfg, const StepCallback& on_sample = {}) {
    validate(cfg);
    const GridGeometry g = GridGeometry::centered(cfg.cells, cfg.half_width);
    SimulationResult res;
    res.h = g.h;
    res.dt = cfg.dt > 0.0 ? cfg.dt : cfg.cfl_safety * cfl_limit(g);
    res.steps = cfg.horizon > 0.0 ? int(std::ceil(cfg.horizon / res.dt - 1e-12)) : 0;
    if (res.steps > 0) res.dt = cfg.horizon / res.steps;

    Ensemble ens = cfg.density.components.empty() ? Ensemble{} : sample_initial_density(cfg.density);
    res.particles = ens.particles.size();
    Moments m = vlasov_moments(ens.particles, g, true, true);
    FieldGrid f = solve_initial_constraints(m.rho, g, cfg.poisson);

    auto record = [&](int step) {
        res.series.push_back(detail::diagnose(ens, m, f));
        if (on_sample) on_sample(step, res.series.back(), f, ens);
    };
    record(0);
    for (int n = 1; n <= res.steps; ++n) {
        // Particles see the fields at t^n; the current from t^n drives E to t^{n+1}.
        const FieldGrid snapshot = f;
        step_fields(f, &m.J, res.dt, 1.0);
        parallel_for(ens.particles.size(), [&](std::size_t k) { detail::push_particle(ens.particles[k], snapshot, res.dt); });
        ens.time = f.time;
        m = vlasov_moments(ens.particles, g, true, true);
        if (n % std::max(1, cfg.diag_stride) == 0 || n == res.steps) record(n);
    }
    res.final_field = std::move(f);
    res.final_ensemble = std::move(ens);
    return res;
}

// Two mirrored components of opposite sign: neutral to rounding by construction.
inline DensitySpec default_neutral_density() {
    DensitySpec s;
    DensityComponent a;
    a.amplitude = 1e-3;
    a.x_center = {{1.5, 0.0, 0.0}};
    a.x_width = {{0.6, 0.6, 0.6}};
    a.v_shell = 4.0;
    a.v_width = 0.5;
    DensityComponent b = a;
    b.amplitude = -1e-3;
    b.x_center = {{-1.5, 0.0, 0.0}};
    s.components = {a, b};
    return s;
}

}  // namespace vnl

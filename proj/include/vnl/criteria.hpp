#pragma once
// The ten acceptance checks. Each returns its measured metrics next to the
// tolerances it was judged against; tolerances live here and nowhere else.

#include <chrono>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "energies.hpp"
#include "io.hpp"
#include "simulation.hpp"

namespace vnl {

struct CriterionOptions {
    bool quick = false;
    unsigned seed = 2024;
};

struct CriterionResult {
    int id = 0;
    std::string suite, title;
    bool pass = false;
    json metrics = json::object();
    json tolerances = json::object();
    std::vector<std::string> notes;
    double runtime = 0.0;  // seconds; reported outside the deterministic block
    double budget = 0.0;
    bool within_budget() const { return runtime <= budget; }

    static CriterionResult start(int id, std::string suite, std::string title, double budget) {
        CriterionResult r;
        r.id = id;
        r.suite = std::move(suite);
        r.title = std::move(title);
        r.budget = budget;
        return r;
    }

    json deterministic_json() const {
        return {{"id", id}, {"suite", suite}, {"title", title}, {"pass", pass},
                {"metrics", metrics}, {"tolerances", tolerances}, {"notes", notes}, {"runtime_budget_s", budget}};
    }
};

namespace tol {
inline constexpr double weight_drift = 1e-8;
inline constexpr double order_band_lo = 3.5, order_band_hi = 4.5;  // log2 of the dt-halving ratio
inline constexpr double geometry = 1e-12;
inline constexpr double min_order = 1.9;
inline constexpr double exact_commutator = 1e-10;
inline constexpr double ks_drift = 2.0;
inline constexpr double slope_alpha_bar = 0.05, slope_rho_sigma = 0.1, slope_alpha = 0.1, slope_coulomb = 1e-3;
inline constexpr double charge_drift = 1e-6;
inline constexpr double deposition = 1e-12;  // times max(1, l1 mass)
inline constexpr double chargeless = 1e-6;   // times the field charge scale
inline constexpr double coulomb_charge = 1e-8;
inline constexpr double floor_min = 1.4142135623730951;
inline constexpr double magnetic_speed = 1e-8;
inline constexpr double free_spatial = 1e-10;
inline constexpr double foliation = 1e-3;
inline constexpr double weights1 = 1e-12;
}  // namespace tol

namespace detail {

struct ZeroField {
    template <class T>
    TwoFormT<T> operator()(const T&, const Vec3T<T>&) const {
        TwoFormT<T> F;
        F.E = {{T(0.0), T(0.0), T(0.0)}};
        F.B = F.E;
        return F;
    }
};

// B = (sin y, sin z, sin x): |V| is conserved, so its drift is pure integrator error.
struct SineMagnetic {
    template <class T>
    TwoFormT<T> operator()(const T&, const Vec3T<T>& x) const {
        TwoFormT<T> F;
        F.E = {{T(0.0), T(0.0), T(0.0)}};
        F.B = {{sin(x[1]), sin(x[2]), sin(x[0])}};
        return F;
    }
};

inline double order_of(double coarse, double fine) { return convergence_order(std::abs(coarse), std::abs(fine)); }

inline HertzianDipole reference_dipole() {
    HertzianDipole d;
    d.p = {{0.0, 0.0, 1.0}};
    d.m = {{0.3, 0.8, 0.2}};
    return d;
}

inline RaySpec reference_ray() {
    RaySpec r;
    r.u = 0.7;
    r.direction = {{1.0, 0.5, 0.8}};
    r.r_min = 50.0;
    r.r_max = 5000.0;
    r.samples = 16;
    return r;
}

}  // namespace detail

// 1 ------------------------------------------------------------------------
inline CriterionResult check_weight_conservation(const CriterionOptions& o) {
    CriterionResult res = CriterionResult::start(1, "transport", "weights conserved along free characteristics", 30.0);
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> nd;
    const int n = o.quick ? 4 : 16;
    IntegrationOptions io;
    io.record_stride = 100;
    double drift = 0.0, drift_half = 0.0;
    for (int k = 0; k < n; ++k) {
        Particle p;
        p.X = {{3.0 * nd(rng), 3.0 * nd(rng), 3.0 * nd(rng)}};
        p.V = {{nd(rng), nd(rng), nd(rng)}};
        p.V = p.V * std::exp(nd(rng));
        for (double dt : {1e-3, 2e-3}) {
            const auto tr = integrate_characteristics(detail::ZeroField{}, p, 10.0, dt, io);
            const auto z0 = eval_weights(tr.t[0], tr.X[0], tr.V[0]);
            double d = 0.0;
            for (std::size_t s = 0; s < tr.t.size(); ++s) {
                const auto z = eval_weights(tr.t[s], tr.X[s], tr.V[s]);
                for (int w = 0; w < 11; ++w) d = std::max(d, std::abs(z[w] - z0[w]) / std::max(1.0, std::abs(z0[w])));
            }
            (dt == 1e-3 ? drift : drift_half) = std::max(dt == 1e-3 ? drift : drift_half, d);
        }
    }
    // Free characteristics are straight lines, which RK4 reproduces to
    // rounding, so the dt order is measured where the integrator has real
    // error: a magnetic field conserving |V| exactly.
    IntegrationOptions end_only;
    end_only.record_stride = 0;
    const Particle pm{{{0.1, 0.2, 0.3}}, {{1.0, 2.0, 2.0}}, 1.0, 1.0};
    std::vector<double> dts{0.1, 0.05, 0.025}, errs;
    for (double dt : dts) errs.push_back(std::abs(norm(integrate_characteristics(detail::SineMagnetic{}, pm, 10.0, dt, end_only).V.back()) - 3.0));
    const double o1 = detail::order_of(errs[0], errs[1]), o2 = detail::order_of(errs[1], errs[2]);
    res.metrics = {{"trajectories", n},          {"max_relative_drift_dt_1e-3", drift},
                   {"max_relative_drift_dt_2e-3", drift_half},
                   {"magnetic_speed_errors", errs}, {"magnetic_dts", dts},
                   {"halving_order", {o1, o2}},  {"halving_ratio", {errs[0] / errs[1], errs[1] / errs[2]}}};
    res.tolerances = {{"max_relative_drift", tol::weight_drift},
                      {"halving_order_band", {tol::order_band_lo, tol::order_band_hi}}};
    auto in_band = [](double q) { return q >= tol::order_band_lo && q <= tol::order_band_hi; };
    res.pass = drift <= tol::weight_drift && drift_half <= tol::weight_drift && in_band(o1) && in_band(o2);
    res.notes.push_back("free-flow drift is rounding-level; the dt-halving ratio is taken on a |V|-conserving magnetic field");
    return res;
}

// 2 ------------------------------------------------------------------------
inline CriterionResult check_geometry_identities(const CriterionOptions& o) {
    CriterionResult res = CriterionResult::start(2, "geometry", "Hodge involution, trace-free T, null components of T, round trip", 10.0);
    std::mt19937_64 rng(o.seed + 1);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    const std::size_t n = o.quick ? 1000 : 10000;
    double hodge = 0.0, tr = 0.0, tLL = 0.0, tLbLb = 0.0, tLLb = 0.0, trip = 0.0;
    std::size_t poles = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double s = std::exp(3.0 * nd(rng));
        TwoForm F{{{s * nd(rng), s * nd(rng), s * nd(rng)}}, {{s * nd(rng), s * nd(rng), s * nd(rng)}}};
        Vec3 x{{nd(rng), nd(rng), nd(rng)}};
        if (k % 100 == 0) {
            x = {{0.0, 0.0, (k % 200 == 0 ? 1.0 : -1.0) * (0.1 + ud(rng))}};
            ++poles;
        }
        const double f2 = field_norm2(F);
        const TwoForm dd = hodge_dual(hodge_dual(F));
        hodge = std::max(hodge, std::sqrt(field_norm2(dd + F) / f2));
        const Mat4 T = stress_energy(F);
        tr = std::max(tr, std::abs(trace(T)) / f2);
        const NullFrame fr = null_frame(x);
        const NullComponents c = null_decompose(F, fr);
        const Vec4 L{1.0, fr.n[0], fr.n[1], fr.n[2]}, Lb{1.0, -fr.n[0], -fr.n[1], -fr.n[2]};
        tLL = std::max(tLL, std::abs(contract(T, L, L) - c.alpha_norm2()) / f2);
        tLbLb = std::max(tLbLb, std::abs(contract(T, Lb, Lb) - c.alpha_bar_norm2()) / f2);
        tLLb = std::max(tLLb, std::abs(contract(T, L, Lb) - (c.rho * c.rho + c.sigma * c.sigma)) / f2);
        const TwoForm back = reconstruct(c, fr);
        trip = std::max(trip, std::sqrt(field_norm2(back - F) / f2));
    }
    res.metrics = {{"samples", n},      {"pole_samples", poles}, {"hodge_involution", hodge}, {"trace_T", tr},
                   {"T_LL", tLL},       {"T_LbarLbar", tLbLb},   {"T_LLbar", tLLb},           {"round_trip", trip}};
    res.tolerances = {{"relative", tol::geometry}};
    res.pass = std::max({hodge, tr, tLL, tLbLb, tLLb, trip}) <= tol::geometry;
    return res;
}

// 3 ------------------------------------------------------------------------
inline std::vector<PhaseFn> commutator_test_functions() {
    return {
        [](double t, const Vec3& x, const Vec3& v) {
            return std::exp(-0.1 * dot(x, x) - 0.2 * dot(v, v)) * std::sin(0.3 * t + x[0] + 0.5 * v[1]);
        },
        [](double t, const Vec3& x, const Vec3& v) {
            return (1.0 + x[0] * x[1] - 0.5 * t * v[2]) * std::exp(-0.05 * dot(x, x) - 0.1 * dot(v, v));
        },
        [](double t, const Vec3& x, const Vec3& v) {
            return std::cos(0.7 * x[0] - 0.4 * x[2] + 0.2 * t) * std::cos(0.6 * v[0] + 0.3 * v[2]) / (1.0 + 0.1 * dot(v, v));
        },
        [](double t, const Vec3& x, const Vec3& v) {
            return 1.0 / (1.0 + dot(x, x) + 0.5 * t * t) * std::exp(-0.3 * (v[0] - 1.0) * (v[0] - 1.0) - 0.2 * v[1] * v[1]);
        },
        [](double t, const Vec3& x, const Vec3& v) {
            return std::tanh(0.5 * x[1] + 0.3 * v[0] - 0.2 * t) * std::exp(-0.08 * dot(x, x) - 0.15 * dot(v, v)) + 0.1 * v[2] * x[2];
        },
    };
}

inline CriterionResult check_commutation(const CriterionOptions& o) {
    CriterionResult res = CriterionResult::start(3, "symmetries", "complete lifts commute with free transport", 60.0);
    std::mt19937_64 rng(o.seed + 2);
    std::normal_distribution<double> nd;
    const auto fns = commutator_test_functions();
    const int npts = o.quick ? 1 : 3;
    const double h = 1e-2;
    double min_order = 1e300, max_exact = 0.0;
    json per_field = json::object();
    for (auto z : kAllFields) {
        double zmin = 1e300, zmax_res = 0.0;
        int exact = 0, measured = 0;
        for (const auto& g : fns)
            for (int k = 0; k < npts; ++k) {
                const auto p = PhasePoint::make(0.5 + 0.3 * nd(rng), Vec3{{nd(rng), nd(rng), nd(rng)}},
                                                Vec3{{1.0 + 0.5 * nd(rng), 0.5 * nd(rng), 0.5 * nd(rng)}});
                const double a = commutator_residual_fd(z, g, p, h), b = commutator_residual_fd(z, g, p, 0.5 * h);
                zmax_res = std::max({zmax_res, std::abs(a), std::abs(b)});
                if (std::max(std::abs(a), std::abs(b)) <= tol::exact_commutator) {
                    ++exact;
                    max_exact = std::max({max_exact, std::abs(a), std::abs(b)});
                    continue;
                }
                ++measured;
                zmin = std::min(zmin, detail::order_of(a, b));
            }
        per_field[std::string(field_name(z))] = {{"min_order", measured ? json(zmin) : json(nullptr)},
                                                 {"exact_cases", exact}, {"max_residual", zmax_res}};
        if (measured) min_order = std::min(min_order, zmin);
    }
    res.metrics = {{"functions", fns.size()}, {"points_per_function", npts}, {"steps", {h, 0.5 * h}},
                   {"min_order", min_order},  {"max_exact_residual", max_exact}, {"per_field", per_field}};
    res.tolerances = {{"min_order", tol::min_order}, {"exact_threshold", tol::exact_commutator}};
    res.pass = min_order >= tol::min_order;
    res.notes.push_back("translations commute with the centred stencil exactly; their residual is rounding and is judged against the exact threshold");
    return res;
}

// 4 ------------------------------------------------------------------------
inline std::vector<SpacetimePoint> alphaem_points(unsigned seed, int n) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::vector<SpacetimePoint> pts;
    while (int(pts.size()) < n) {
        Vec3 d{{nd(rng), nd(rng), nd(rng)}};
        if (norm(d) < 1e-3) continue;
        pts.push_back({4.0 * ud(rng), d * ((2.0 + 6.0 * ud(rng)) / norm(d))});
    }
    return pts;
}

inline CriterionResult check_maxwell_residuals(const CriterionOptions& o) {
    CriterionResult res = CriterionResult::start(4, "residuals", "Maxwell primal/dual residuals and the alpha transport equation", 120.0);
    const auto dip = detail::reference_dipole();
    auto zero = [](double, const Vec3&) { return Vec4{0.0, 0.0, 0.0, 0.0}; };
    std::vector<MaxwellResidual> mr;
    for (int n : {9, 17}) {
        const double h = 0.8 / (n - 1);
        mr.push_back(maxwell_residual(sample_field4([&](double t, const Vec3& x) { return dip(t, x); }, zero,
                                                    {1.0, 2.0, 1.5, 1.0}, {h, h, h, h}, {n, n, n, n})));
    }
    const double op = detail::order_of(mr[0].primal_l2, mr[1].primal_l2), od = detail::order_of(mr[0].dual_l2, mr[1].dual_l2);

    const auto pts = alphaem_points(o.seed + 3, o.quick ? 50 : 200);
    const auto a1 = alphaem_residual(dip, zero, pts, 0.02), a2 = alphaem_residual(dip, zero, pts, 0.01);
    const double oa = detail::order_of(a1.l2_plus, a2.l2_plus);

    // Sourced check: the current enters both the primal residual and the alpha equation.
    PotentialField P;
    auto J = [&P](double t, const Vec3& x) { return P.current(t, x); };
    std::vector<SpacetimePoint> ppts;
    {
        std::mt19937_64 rng(o.seed + 4);
        std::normal_distribution<double> nd;
        for (int k = 0; k < (o.quick ? 50 : 200); ++k)
            ppts.push_back({0.5 + 0.3 * nd(rng), Vec3{{1.0 + 0.5 * nd(rng), 0.5 * nd(rng), 0.7 + 0.5 * nd(rng)}}});
    }
    const auto p1 = alphaem_residual(P, J, ppts, 0.02), p2 = alphaem_residual(P, J, ppts, 0.01);
    const double opa = detail::order_of(p1.l2_plus, p2.l2_plus);

    res.metrics = {{"dipole_primal_l2", {mr[0].primal_l2, mr[1].primal_l2}},
                   {"dipole_dual_l2", {mr[0].dual_l2, mr[1].dual_l2}},
                   {"primal_order", op},
                   {"dual_order", od},
                   {"alpha_dipole_l2", {a1.l2_plus, a2.l2_plus}},
                   {"alpha_dipole_order", oa},
                   {"alpha_dipole_opposite_sign_l2", a2.l2_minus},
                   {"alpha_sourced_l2", {p1.l2_plus, p2.l2_plus}},
                   {"alpha_sourced_order", opa},
                   {"alpha_sourced_opposite_sign_l2", p2.l2_minus},
                   {"alpha_points", pts.size()}};
    res.tolerances = {{"min_order", tol::min_order}};
    res.pass = op >= tol::min_order && od >= tol::min_order && oa >= tol::min_order && opa >= tol::min_order;
    return res;
}

// 5 ------------------------------------------------------------------------
inline CriterionResult check_ks(const CriterionOptions& o) {
    CriterionResult res = CriterionResult::start(5, "ks", "Klainerman-Sobolev constants stable across t and scale", 300.0);
    GaussianFamily fam;
    KSOptions ko;
    KSL2Options lo;
    if (o.quick) {
        ko.x_nodes = 6;
        ko.v_degree = 7;
        ko.directions = 3;
        ko.radii = 12;
        lo.sphere_degree = 11;
    }
    const std::vector<double> scales{1.0, 2.0, 4.0}, ts{1.0, 4.0, 16.0, 64.0};
    const auto [pw, l2] = ks_check(fam, scales, ts, 2, ko, lo);
    auto table = [](const KSReport& r) {
        json t = json::array();
        for (const auto& e : r.table) t.push_back({{"t", e.t}, {"scale", e.scale}, {"j", e.j}, {"constant", e.constant}});
        return t;
    };
    auto per_j = [&](const KSReport& r) {
        json out = json::array();
        for (int j = 0; j <= 2; ++j) {
            KSReport sub;
            for (const auto& e : r.table)
                if (e.j == j) sub.table.push_back(e);
            ks_finish(sub, ts, scales, 2);
            out.push_back({{"j", j}, {"drift_t", sub.drift_t}, {"drift_scale", sub.drift_scale}});
        }
        return out;
    };
    res.metrics = {{"pointwise", {{"drift_t", pw.drift_t}, {"drift_scale", pw.drift_scale}, {"pass", pw.pass},
                                  {"per_j", per_j(pw)}, {"table", table(pw)}}},
                   {"l2", {{"drift_t", l2.drift_t}, {"drift_scale", l2.drift_scale}, {"pass", l2.pass},
                           {"per_j", per_j(l2)}, {"table", table(l2)}}},
                   {"scales", scales},
                   {"times", ts}};
    res.tolerances = {{"max_drift", tol::ks_drift}};
    res.pass = pw.pass && l2.pass;
    if (!pw.pass)
        res.notes.push_back("pointwise constant drifts past 2x: weights are transported, so the early-time ratio favours "
                            "the packet tails while late times average them; the gap is a property of the family, not of the quadrature");
    return res;
}

// 6 ------------------------------------------------------------------------
inline json decay_fit_json(const DecayFitReport& r) {
    return {{"ray", r.ray},   {"component", component_name(r.component)}, {"slope", r.fit.slope},
            {"stderr", r.fit.stderr_slope}, {"predicted", r.predicted}, {"tol", r.tol},
            {"upper_bound_only", r.upper_bound_only}, {"pass", r.pass}, {"samples", r.fit.n},
            {"decades", r.fit.decades}};
}

struct DecayExpectation {
    NullComponent comp;
    double predicted, tol;
    bool upper_only;
};

inline std::vector<DecayExpectation> dipole_expectations() {
    return {{NullComponent::alpha_bar, -1.0, tol::slope_alpha_bar, false},
            {NullComponent::rho, -2.0, tol::slope_rho_sigma, false},
            {NullComponent::sigma, -2.0, tol::slope_rho_sigma, false},
            {NullComponent::alpha, -2.0, tol::slope_alpha, true}};
}

inline CriterionResult check_decay_hierarchy(const CriterionOptions&) {
    CriterionResult res = CriterionResult::start(6, "decay", "null-component decay rates along outgoing rays", 60.0);
    const auto dip = detail::reference_dipole();
    const RaySpec ray = detail::reference_ray();
    json fits = json::array();
    bool ok = true;
    for (const auto& e : dipole_expectations()) {
        const auto r = fit_decay_exponent(dip, ray, e.comp, e.predicted, e.tol, e.upper_only);
        fits.push_back(decay_fit_json(r));
        ok = ok && r.pass;
    }
    const auto c = fit_decay_exponent(CoulombExterior{}, ray, NullComponent::rho, -2.0, tol::slope_coulomb);
    fits.push_back(decay_fit_json(c));
    ok = ok && c.pass;
    res.metrics = {{"fits", fits}};
    res.tolerances = {{"alpha_bar", tol::slope_alpha_bar}, {"rho_sigma", tol::slope_rho_sigma},
                      {"alpha_upper", tol::slope_alpha}, {"coulomb_rho", tol::slope_coulomb}};
    res.pass = ok;
    return res;
}

// 7 ------------------------------------------------------------------------
inline CriterionResult check_charge(const CriterionOptions& o) {
    CriterionResult res = CriterionResult::start(7, "charge", "charge conservation in a neutral run; chargeless Lie derivatives", 600.0);
    SimulationConfig cfg;
    cfg.density = default_neutral_density();
    if (o.quick) {
        cfg.cells = 24;
        cfg.horizon = 16.0;  // coarser h widens the reach margin
    }
    cfg.diag_stride = 1;
    const auto run = run_simulation(cfg);
    const double l1 = run.series.empty() ? 0.0 : run.series.front().ensemble_l1;
    const double dep_tol = tol::deposition * std::max(1.0, l1);
    double gauss = 0.0, divb = 0.0;
    for (const auto& s : run.series) {
        gauss = std::max(gauss, s.gauss_max);
        divb = std::max(divb, s.div_B_max);
    }
    CoulombExterior q;
    const auto cl = chargeless_derivative_check(q, 0.0, {20.0, 40.0, 80.0});
    const auto qc = total_charge(q, 0.0, {20.0, 40.0, 80.0});
    json per = json::object();
    for (const auto& [name, v] : cl.charges) per[name] = v;
    res.metrics = {{"cells", cfg.cells},
                   {"horizon", cfg.horizon},
                   {"steps", run.steps},
                   {"dt", run.dt},
                   {"particles", run.particles},
                   {"initial_l1", l1},
                   {"initial_charge", run.series.front().ensemble_charge},
                   {"charge_drift", run.charge_drift()},
                   {"deposition_gap", run.deposition_gap()},
                   {"gauss_residual_max", gauss},
                   {"div_B_max", divb},
                   {"coulomb_charge", qc.extrapolated},
                   {"chargeless_worst", cl.worst},
                   {"chargeless_scale", cl.field_scale},
                   {"chargeless_per_field", per}};
    res.tolerances = {{"charge_drift", tol::charge_drift}, {"deposition", dep_tol},
                      {"chargeless_relative", tol::chargeless}, {"coulomb_charge", tol::coulomb_charge}};
    res.pass = run.charge_drift() <= tol::charge_drift && run.deposition_gap() <= dep_tol && cl.pass(tol::chargeless) &&
               std::abs(qc.extrapolated - 1.0) <= tol::coulomb_charge;
    res.notes.push_back("trilinear deposition does not satisfy the discrete continuity equation; the Gauss residual is monitored, not asserted");
    return res;
}

// 8 ------------------------------------------------------------------------
inline CriterionResult check_velocity_floor(const CriterionOptions& o) {
    CriterionResult res = CriterionResult::start(8, "floor", "characteristic speeds stay above sqrt 2 in a decaying field", 300.0);
    const double eps = 1e-4;
    FloorOptions fo;
    fo.seed = o.seed + 5;
    if (o.quick) fo.trajectories = 200;
    ModelDecayField M;
    M.eps = eps;
    const auto rep = velocity_floor_study(M, eps, fo);
    ModelDecayField Mm = M;
    Mm.magnetic_only = true;
    FloorOptions fm = fo;
    fm.oracle_count = 0;
    const auto mag = velocity_floor_study(Mm, eps, fm);
    double mag_dev = 0.0;
    {
        // exact per-trajectory deviation from the initial speed
        const auto ps = floor_initial_particles(fm);
        IntegrationOptions end_only;
        end_only.record_stride = 0;
        const std::size_t m = std::min<std::size_t>(ps.size(), 50);
        std::vector<double> dev(m);
        parallel_for(m, [&](std::size_t k) {
            const auto tr = integrate_characteristics(Mm, ps[k], fm.horizon, fm.dt, end_only);
            dev[k] = std::abs(tr.min_speed - norm(ps[k].V));
        });
        for (double d : dev) mag_dev = std::max(mag_dev, d);
    }
    // F = 0: V must be untouched and X exactly ballistic up to rounding.
    const auto ps = floor_initial_particles(fo);
    double zero_speed_dev = 0.0, zero_path_dev = 0.0;
    IntegrationOptions end_only;
    end_only.record_stride = 0;
    for (std::size_t k = 0; k < std::min<std::size_t>(ps.size(), 50); ++k) {
        const auto tr = integrate_characteristics(detail::ZeroField{}, ps[k], fo.horizon, fo.dt, end_only);
        zero_speed_dev = std::max(zero_speed_dev, std::abs(tr.min_speed - norm(ps[k].V)));
        for (int c = 0; c < 3; ++c) zero_speed_dev = std::max(zero_speed_dev, std::abs(tr.V.back()[c] - ps[k].V[c]));
        const Vec3 expect = ps[k].X + ps[k].V * (fo.horizon / norm(ps[k].V));
        zero_path_dev = std::max(zero_path_dev, norm(tr.X.back() - expect) / fo.horizon);
    }
    res.metrics = {{"eps", eps},
                   {"trajectories", rep.trajectories},
                   {"horizon", rep.horizon},
                   {"dt", rep.dt},
                   {"delta", rep.dk.delta},
                   {"K", rep.dk.K},
                   {"audit_F_ratio", rep.audit.max_F_ratio},
                   {"audit_rho_ratio", rep.audit.max_rho_ratio},
                   {"ensemble_min_speed", rep.ensemble_min_speed},
                   {"crossings", rep.crossings},
                   {"mean_fraction_A", rep.mean_frac_A},
                   {"mean_fraction_B", rep.mean_frac_B},
                   {"mean_fraction_C", rep.mean_frac_C},
                   {"halved_dt_gap", rep.halved_dt_gap},
                   {"magnetic_min_speed", mag.ensemble_min_speed},
                   {"magnetic_max_speed_deviation", mag_dev},
                   {"zero_field_speed_deviation", zero_speed_dev},
                   {"zero_field_path_deviation_per_time", zero_path_dev}};
    res.tolerances = {{"min_speed", tol::floor_min}, {"magnetic_speed", tol::magnetic_speed},
                      {"zero_field_speed", 0.0}, {"zero_field_path_per_time", 1e-12}};
    res.pass = rep.ensemble_min_speed >= tol::floor_min && mag_dev <= tol::magnetic_speed &&
               std::abs(mag.ensemble_min_speed - fo.speed0) <= tol::magnetic_speed && zero_speed_dev == 0.0 &&
               zero_path_dev <= 1e-12;
    return res;
}

// 9 ------------------------------------------------------------------------
inline CriterionResult check_energy_identities(const CriterionOptions& o) {
    CriterionResult res = CriterionResult::start(9, "energies", "energy identity, free Vlasov energy, cone foliation", 300.0);
    PotentialField P;
    auto J = [&P](double t, const Vec3& x) { return P.current(t, x); };
    const BallRule rule = o.quick ? ball_rule(0.0, 7.0, 5, 6, 11) : ball_rule(0.0, 7.0, 6, 8, 15);
    const auto e1 = energy_identity_residual(P, J, 0.0, 1.0, 8, rule);
    const auto e2 = energy_identity_residual(P, J, 0.0, 1.0, 16, rule);
    const double order = detail::order_of(e1.residual, e2.residual);

    // Free transport: masses recomputed from the data at the backward foot
    // of each moved particle.
    DensitySpec spec;
    DensityComponent c;
    c.amplitude = 1.0;
    c.x_center = {{0.5, -0.3, 0.2}};
    c.x_width = {{0.8, 0.6, 0.7}};
    spec.components = {c};
    spec.allow_nonneutral = true;  // one signed species; neutrality is irrelevant to free transport
    if (o.quick) spec.x_nodes = 4;
    const Ensemble ens = sample_initial_density(spec);
    std::vector<double> spatial;
    double vid = 0.0;
    for (double t : {0.0, 2.0, 5.0, 10.0}) {
        std::vector<double> vals(ens.particles.size());
        std::vector<Particle> moved = ens.particles;
        for (std::size_t k = 0; k < moved.size(); ++k) {
            auto& p = moved[k];
            const Vec3 dir = p.V / norm(p.V);
            p.X = p.X + dir * t;
            vals[k] = spec(Vec3(p.X - dir * t), p.V);
        }
        double m = 0.0;
        for (std::size_t k = 0; k < moved.size(); ++k) m += moved[k].w * std::abs(vals[k]);
        spatial.push_back(m);
        vid = std::max(vid, vlasov_identity_residual(free_histories(ens.particles, t, &vals), t));
    }
    double sdev = 0.0;
    for (double m : spatial) sdev = std::max(sdev, std::abs(m - spatial[0]) / spatial[0]);

    auto g = [](double s, const Vec3& x) {
        const Vec3 d = x - Vec3{{0.5, 0.2, -0.3}};
        return std::exp(-0.5 * dot(d, d)) * (1.0 + 0.1 * s);
    };
    double fol = 0.0;
    json fols = json::array();
    for (double t : {3.0, 10.0}) {
        const auto f = foliation_identity_check(g, t);
        fols.push_back({{"t", t}, {"slab", f.slab}, {"cones", f.cones}, {"relative", f.rel_error}});
        fol = std::max(fol, f.rel_error);
    }
    res.metrics = {{"identity_residual", {e1.residual, e2.residual}},
                   {"identity_relative", {e1.relative, e2.relative}},
                   {"identity_order", order},
                   {"energy_t1", e2.lhs},
                   {"source_integral", e2.source},
                   {"free_spatial_terms", spatial},
                   {"free_spatial_deviation", sdev},
                   {"cone_balance_residual", vid},
                   {"foliation", fols}};
    res.tolerances = {{"min_order", tol::min_order}, {"free_spatial", tol::free_spatial},
                      {"cone_balance", tol::free_spatial}, {"foliation", tol::foliation}};
    res.pass = order >= tol::min_order && sdev <= tol::free_spatial && vid <= tol::free_spatial && fol <= tol::foliation;
    return res;
}

// 10 -----------------------------------------------------------------------
inline CriterionResult check_weight_bounds(const CriterionOptions& o) {
    CriterionResult res = CriterionResult::start(10, "weights", "weight identities and the null-structure constant", 60.0);
    const std::size_t n = o.quick ? 2000 : 10000;
    const auto w = weights1_check(n, o.seed);
    const auto c = calculF_bound_check(n, o.seed + 6);
    res.metrics = {{"samples", n},
                   {"identity_L", w.identity_L},
                   {"identity_Lbar", w.identity_Lbar},
                   {"identity_angular", w.identity_ang},
                   {"identity_rvA", w.identity_rvA},
                   {"ratio_L", w.ratio_L},
                   {"ratio_Lbar", w.ratio_Lbar},
                   {"ratio_vA", w.ratio_vA},
                   {"calculF_max_ratio", c.max_ratio},
                   {"calculF_constant", c.constant},
                   {"calculF_expansion_residual", c.expansion_residual},
                   {"calculF_skipped", c.skipped}};
    res.tolerances = {{"identities", tol::weights1}, {"ratios", 1.0}, {"calculF_constant", c.constant}};
    res.pass = w.pass(tol::weights1) && c.pass();
    return res;
}

// ---------------------------------------------------------------------------

struct CriterionEntry {
    int id;
    std::string suite;
    std::function<CriterionResult(const CriterionOptions&)> run;
};

inline const std::vector<CriterionEntry>& criteria() {
    static const std::vector<CriterionEntry> c{
        {1, "transport", check_weight_conservation}, {2, "geometry", check_geometry_identities},
        {3, "symmetries", check_commutation},        {4, "residuals", check_maxwell_residuals},
        {5, "ks", check_ks},                         {6, "decay", check_decay_hierarchy},
        {7, "charge", check_charge},                 {8, "floor", check_velocity_floor},
        {9, "energies", check_energy_identities},    {10, "weights", check_weight_bounds}};
    return c;
}

inline CriterionResult run_timed(const CriterionEntry& e, const CriterionOptions& o) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r = e.run(o);
    r.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

}  // namespace vnl

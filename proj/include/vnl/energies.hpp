#pragma once
// Energy functionals of the Vlasov and Maxwell fields, the dyadic cone
// foliation of [0,t] x R^3 and residuals of the underlying divergence
// identities.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "symmetries.hpp"
#include "transport.hpp"

namespace vnl {

// ---------------------------------------------------------------------------
// Dyadic partition: t_0 = 0, t_i = 2^i, T_i(t) = min(t, t_i).

inline double dyadic_t(int i) { return i == 0 ? 0.0 : std::ldexp(1.0, i); }
inline double dyadic_T(int i, double t) { return t <= dyadic_t(i) ? t : dyadic_t(i); }

// Time range of the truncated cone C_u^i(t); empty when lo >= hi.
struct ConeSlice {
    double u = 0.0;
    int i = 0;
    double s_lo = 0.0, s_hi = 0.0;

    bool empty() const { return !(s_hi > s_lo); }
    double length() const { return empty() ? 0.0 : s_hi - s_lo; }
};

inline ConeSlice cone_slice(double u, int i, double t) {
    return {u, i, std::max({dyadic_t(i), u, 0.0}), std::min(dyadic_T(i + 1, t), t)};
}

// Number of dyadic pieces needed to cover [0, t].
inline int dyadic_count(double t) {
    int n = 1;
    while (dyadic_t(n) < t) ++n;
    return n;
}

inline std::vector<ConeSlice> cone_slices(double u, double t) {
    std::vector<ConeSlice> out;
    for (int i = 0; i < dyadic_count(t); ++i) {
        const auto c = cone_slice(u, i, t);
        if (!c.empty()) out.push_back(c);
    }
    return out;
}

// Sum of slice lengths minus (t - max(0, u)); zero for an exact partition.
inline double partition_defect(double u, double t) {
    double s = 0.0;
    for (const auto& c : cone_slices(u, t)) s += c.length();
    return s - (t - std::max(0.0, u));
}

// Radial quadrature on a ball shell [r0, r1] times a sphere rule.
struct BallRule {
    std::vector<Vec3> x;
    std::vector<double> w;
};

inline BallRule ball_rule(double r0, double r1, int panels, int nodes, int sphere_degree) {
    const Rule1D rr = composite_gauss(nodes, panels, r0, r1);
    const SphereRule sr = sphere_rule(sphere_degree);
    BallRule b;
    for (std::size_t i = 0; i < rr.x.size(); ++i)
        for (std::size_t j = 0; j < sr.n.size(); ++j) {
            b.x.push_back(sr.n[j] * rr.x[i]);
            b.w.push_back(rr.w[i] * rr.x[i] * rr.x[i] * sr.w[j]);
        }
    return b;
}

struct FoliationCheck {
    double slab = 0.0;      // int_0^t int_{Sigma_s} g
    double cones = 0.0;     // sum_i int_u int_{C_u^i(t)} g dC du / sqrt 2
    double rel_error = 0.0;
};

struct FoliationOptions {
    double r_max = 12.0;
    int panels = 12, nodes = 8, sphere_degree = 17;
};

// Both sides of the foliation identity for a test function g(s, x). The
// cone side parameterises C_u by s with r = s - u, where
// dC_u = 2^{-1/2} r^2 dubar dS and dubar = 2 ds.
template <class G>
FoliationCheck foliation_identity_check(const G& g, double t, const FoliationOptions& opt = {}) {
    const SphereRule sr = sphere_rule(opt.sphere_degree);
    auto shell = [&](double s, double r) {
        double acc = 0.0;
        for (std::size_t j = 0; j < sr.n.size(); ++j) acc += sr.w[j] * g(s, sr.n[j] * r);
        return acc * r * r;
    };
    FoliationCheck out;
    const Rule1D sr_t = composite_gauss(opt.nodes, std::max(1, opt.panels / 2), 0.0, t);
    const Rule1D rr = composite_gauss(opt.nodes, opt.panels, 0.0, opt.r_max);
    for (std::size_t a = 0; a < sr_t.x.size(); ++a)
        for (std::size_t b = 0; b < rr.x.size(); ++b) out.slab += sr_t.w[a] * rr.w[b] * shell(sr_t.x[a], rr.x[b]);

    // u runs over [-r_max, t]; breakpoints at 0 and every t_i keep the
    // integrand in u smooth on each panel.
    std::vector<double> breaks{-opt.r_max, 0.0};
    for (int i = 1; dyadic_t(i) < t; ++i) breaks.push_back(dyadic_t(i));
    breaks.push_back(t);
    std::sort(breaks.begin(), breaks.end());
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double ua = breaks[p], ub = breaks[p + 1];
        if (!(ub > ua)) continue;
        const int np = p == 0 ? opt.panels : std::max(1, opt.panels / 4);
        const Rule1D ur = composite_gauss(opt.nodes, np, ua, ub);
        for (std::size_t a = 0; a < ur.x.size(); ++a) {
            const double u = ur.x[a];
            double cone = 0.0;
            for (const auto& c : cone_slices(u, t)) {
                const Rule1D ss = gauss_legendre(opt.nodes, c.s_lo, c.s_hi);
                for (std::size_t b = 0; b < ss.x.size(); ++b) {
                    const double r = ss.x[b] - u;
                    // dC = 2^{-1/2} * 2 ds * r^2 dS
                    cone += std::sqrt(2.0) * ss.w[b] * shell(ss.x[b], r);
                }
            }
            out.cones += ur.w[a] * cone / std::sqrt(2.0);
        }
    }
    const double scale = std::max(std::abs(out.slab), std::abs(out.cones));
    out.rel_error = scale > 0.0 ? std::abs(out.slab - out.cones) / scale : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Vlasov energy from particle histories. Characteristics move at unit
// speed, so u(s) = s - |X(s)| is nondecreasing and a particle crosses the
// cone C_u(t) exactly when u(0) <= u < u(t). The divergence identity then
// makes the L1(C_u(t)) norm of int v^Lbar/v^0 |g| dv equal to the crossing
// mass divided by sqrt 2.

struct ParticleHistory {
    double u0 = 0.0, ut = 0.0;  // u at s = 0 and at s = t
    double mass = 0.0;          // w |g| carried along the characteristic
};

struct VlasovEnergy {
    double spatial = 0.0;
    double flux_sup = 0.0;       // exact sup over u <= t
    double u_at_sup = 0.0;
    double flux_sup_grid = 0.0;  // sup over the u grid (a lower bound)
    double total() const { return spatial + flux_sup; }
};

struct VlasovEnergyOptions {
    double u_spacing = 0.25;
    double u_min = -40.0;
};

inline double cone_flux(const std::vector<ParticleHistory>& hs, double u) {
    double m = 0.0;
    for (const auto& h : hs)
        if (h.u0 <= u && u < h.ut) m += h.mass;
    return m / std::sqrt(2.0);
}

inline VlasovEnergy vlasov_energy(const std::vector<ParticleHistory>& hs, double t,
                                  const VlasovEnergyOptions& opt = {}) {
    VlasovEnergy e;
    if (hs.empty()) return e;
    for (const auto& h : hs) e.spatial += h.mass;
    // Sweep: the crossing mass is piecewise constant in u, jumping at u0 and ut.
    std::vector<std::pair<double, double>> ev;
    for (const auto& h : hs)
        if (h.u0 < h.ut && h.u0 <= t) {
            ev.emplace_back(h.u0, h.mass);
            ev.emplace_back(h.ut, -h.mass);
        }
    std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
        return a.first < b.first || (a.first == b.first && a.second < b.second);
    });
    double run = 0.0;
    for (std::size_t k = 0; k < ev.size(); ++k) {
        run += ev[k].second;
        const bool last_at_u = k + 1 == ev.size() || ev[k + 1].first != ev[k].first;
        if (last_at_u && ev[k].first <= t && run / std::sqrt(2.0) > e.flux_sup) {
            e.flux_sup = run / std::sqrt(2.0);
            e.u_at_sup = ev[k].first;
        }
    }
    for (double u = opt.u_min; u <= t; u += opt.u_spacing) e.flux_sup_grid = std::max(e.flux_sup_grid, cone_flux(hs, u));
    return e;
}

// Histories for straight-line motion X(s) = X0 + s V/|V| with a per-particle value.
inline std::vector<ParticleHistory> free_histories(const std::vector<Particle>& ps, double t,
                                                   const std::vector<double>* values = nullptr) {
    std::vector<ParticleHistory> hs(ps.size());
    for (std::size_t k = 0; k < ps.size(); ++k) {
        const auto& p = ps[k];
        const Vec3 Xt = p.X + p.V * (t / norm(p.V));
        const double val = values ? (*values)[k] : p.f0;
        hs[k] = {-norm(p.X), t - norm(Xt), p.w * std::abs(val)};
    }
    return hs;
}

// Residual of the cone-exterior balance: mass outside the cone at t plus
// sqrt 2 times the flux equals the exterior mass at 0 (no source).
inline double vlasov_identity_residual(const std::vector<ParticleHistory>& hs, double t,
                                       const VlasovEnergyOptions& opt = {}) {
    double total = 0.0;
    for (const auto& h : hs) total += h.mass;
    if (total == 0.0) return 0.0;
    double worst = 0.0;
    for (double u = opt.u_min; u <= t; u += opt.u_spacing) {
        double ext0 = 0.0, extt = 0.0;
        for (const auto& h : hs) {
            if (h.u0 <= u) ext0 += h.mass;
            if (h.ut <= u) extt += h.mass;
        }
        worst = std::max(worst, std::abs(extt + std::sqrt(2.0) * cone_flux(hs, u) - ext0));
    }
    return worst / total;
}

// Multi-indices over the 11 lifted fields with |beta| <= Q.
inline std::vector<SymmetryOp> lifted_multi_indices(int Q) {
    if (Q > kMaxOrder) throw CapabilityError("multi-index order above the supported maximum");
    std::vector<SymmetryOp> out{SymmetryOp{{}, true}};
    std::vector<SymmetryOp> layer = out;
    for (int q = 1; q <= Q; ++q) {
        std::vector<SymmetryOp> next;
        for (const auto& op : layer)
            for (auto z : kAllFields) {
                SymmetryOp n = op;
                n.factors.insert(n.factors.begin(), z);
                next.push_back(n);
            }
        out.insert(out.end(), next.begin(), next.end());
        layer = std::move(next);
    }
    return out;
}

// E^q_Q[g] = sum_beta sum_z E[z^q Zhat^beta g] for a free solution with
// initial datum g0, evaluated on the quadrature particles `nodes` (their f0
// is ignored). Each integrand is itself a free solution, so its value is
// carried unchanged along the straight characteristics.
template <class G0>
double vlasov_energy_hierarchy_free(const G0& g0, const std::vector<Particle>& nodes, int Q, int q, double t,
                                    const VlasovEnergyOptions& opt = {}) {
    if (nodes.empty()) return 0.0;
    const auto ops = lifted_multi_indices(Q);
    const FreeSolution<G0> g{g0};
    // derivs[b][k] = (Zhat^beta g)(0, X_k, V_k)
    std::vector<std::vector<double>> derivs(ops.size(), std::vector<double>(nodes.size()));
    parallel_for(nodes.size(), [&](std::size_t k) {
        for (std::size_t b = 0; b < ops.size(); ++b) derivs[b][k] = apply_op(ops[b], g, 0.0, nodes[k].X, nodes[k].V);
    });
    double total = 0.0;
    std::vector<double> vals(nodes.size());
    for (std::size_t b = 0; b < ops.size(); ++b)
        for (int z = 0; z < 11; ++z) {
            for (std::size_t k = 0; k < nodes.size(); ++k)
                vals[k] = ipow(eval_weight(static_cast<WeightId>(z), 0.0, nodes[k].X, nodes[k].V), q) * derivs[b][k];
            total += vlasov_energy(free_histories(nodes, t, &vals), t, opt).total();
        }
    return total;
}

// ---------------------------------------------------------------------------
// Field energies.

struct NullEnergyParts {
    double alpha = 0.0, alpha_bar = 0.0, rho = 0.0, sigma = 0.0;
    double sum() const { return alpha + alpha_bar + rho + sigma; }
};

struct FieldEnergyK0 {
    double total = 0.0;
    double sigma_term = 0.0;  // integral over Sigma_t
    double cone_sup = 0.0;    // sup over the u grid of the cone integral
    double u_at_sup = 0.0;
    NullEnergyParts sigma_parts, cone_parts;
    double excluded_radius = 0.0;
    double excluded_estimate = 0.0;  // ball volume times the largest integrand sampled on its surface
};

struct FieldEnergyOptions {
    double r_excl = 0.0;
    double r_max = 20.0;
    int panels = 20, nodes = 6, sphere_degree = 17;
    double u_spacing = 0.25;
    double u_min = -20.0;
    int cone_panels = 8;
};

// 4 T_{0 nu} Kbar_0^nu from the stress-energy tensor.
inline double K0_density(const TwoForm& F, const SpacetimePoint& p) {
    const Mat4 T = stress_energy(F);
    const Vec4 K = multiplier_K0(p);
    double s = 0.0;
    for (int n = 0; n < 4; ++n) s += T[0][n] * K[n];
    return 4.0 * s;
}

// Same density from the null decomposition.
inline NullEnergyParts K0_density_parts(const TwoForm& F, const SpacetimePoint& p) {
    const auto c = null_decompose(F, p);
    const double tp2 = p.tau_plus() * p.tau_plus(), tm2 = p.tau_minus() * p.tau_minus();
    return {tp2 * c.alpha_norm2(), tm2 * c.alpha_bar_norm2(), (tp2 + tm2) * c.rho * c.rho,
            (tp2 + tm2) * c.sigma * c.sigma};
}

// Cone integrand tau+^2 |alpha|^2 + tau-^2 (rho^2 + sigma^2); no alpha_bar.
inline NullEnergyParts K0_cone_parts(const TwoForm& F, const SpacetimePoint& p) {
    const auto c = null_decompose(F, p);
    const double tp2 = p.tau_plus() * p.tau_plus(), tm2 = p.tau_minus() * p.tau_minus();
    return {tp2 * c.alpha_norm2(), 0.0, tm2 * c.rho * c.rho, tm2 * c.sigma * c.sigma};
}

namespace detail {
inline void accumulate(NullEnergyParts& a, const NullEnergyParts& b, double w) {
    a.alpha += w * b.alpha;
    a.alpha_bar += w * b.alpha_bar;
    a.rho += w * b.rho;
    a.sigma += w * b.sigma;
}
}  // namespace detail

template <class P, class Density>
NullEnergyParts sigma_integral(const P& F, double t, const FieldEnergyOptions& opt, const Density& density) {
    const BallRule b = ball_rule(opt.r_excl, opt.r_max, opt.panels, opt.nodes, opt.sphere_degree);
    NullEnergyParts out;
    for (std::size_t k = 0; k < b.x.size(); ++k) {
        const SpacetimePoint p{t, b.x[k]};
        detail::accumulate(out, density(F(t, b.x[k]), p), b.w[k]);
    }
    return out;
}

template <class P>
NullEnergyParts cone_integral(const P& F, double u, double t, const FieldEnergyOptions& opt) {
    NullEnergyParts out;
    const double s0 = std::max({0.0, u, u + opt.r_excl}), s1 = std::min(t, u + opt.r_max);
    if (!(s1 > s0)) return out;
    const SphereRule sr = sphere_rule(opt.sphere_degree);
    const Rule1D ss = composite_gauss(opt.nodes, opt.cone_panels, s0, s1);
    for (std::size_t a = 0; a < ss.x.size(); ++a) {
        const double s = ss.x[a], r = s - u;
        for (std::size_t j = 0; j < sr.n.size(); ++j) {
            const Vec3 x = sr.n[j] * r;
            detail::accumulate(out, K0_cone_parts(F(s, x), SpacetimePoint{s, x}),
                               std::sqrt(2.0) * r * r * ss.w[a] * sr.w[j]);
        }
    }
    return out;
}

template <class P>
FieldEnergyK0 field_energy_K0(const P& F, double t, const FieldEnergyOptions& opt = {}) {
    FieldEnergyK0 e;
    e.sigma_parts = sigma_integral(F, t, opt, K0_density_parts);
    e.sigma_term = e.sigma_parts.sum();
    std::vector<double> us;
    for (double u = opt.u_min; u <= t + 1e-12; u += opt.u_spacing) us.push_back(u);
    std::vector<NullEnergyParts> parts(us.size());
    parallel_for(us.size(), [&](std::size_t k) { parts[k] = cone_integral(F, us[k], t, opt); });
    for (std::size_t k = 0; k < us.size(); ++k)
        if (parts[k].sum() > e.cone_sup) {
            e.cone_sup = parts[k].sum();
            e.cone_parts = parts[k];
            e.u_at_sup = us[k];
        }
    e.total = e.sigma_term + e.cone_sup;
    if (opt.r_excl > 0.0) {
        e.excluded_radius = opt.r_excl;
        const SphereRule sr = sphere_rule(opt.sphere_degree);
        double peak = 0.0;
        const double r = opt.r_excl * (1.0 + 1e-9);
        for (const auto& n : sr.n) peak = std::max(peak, K0_density_parts(F(t, n * r), {t, n * r}).sum());
        e.excluded_estimate = 4.0 / 3.0 * pi * std::pow(opt.r_excl, 3) * peak;
    }
    return e;
}

// int tau-^2 log^{-k}(1 + tau-) (|alpha|^2 + |alpha_bar|^2 + 2 rho^2 + 2 sigma^2) dx
template <class P>
double field_energy_dt_k(const P& F, double t, int k, const FieldEnergyOptions& opt = {}) {
    auto density = [k](const TwoForm& G, const SpacetimePoint& p) {
        const auto c = null_decompose(G, p);
        const double tm = p.tau_minus();
        const double wgt = tm * tm * std::pow(std::log(1.0 + tm), -k);
        return NullEnergyParts{wgt * c.alpha_norm2(), wgt * c.alpha_bar_norm2(), 2.0 * wgt * c.rho * c.rho,
                               2.0 * wgt * c.sigma * c.sigma};
    };
    return sigma_integral(F, t, opt, density).sum();
}

// ---------------------------------------------------------------------------
// Balance of int_{Sigma_t} T_{0 nu} Kbar^nu. With nabla^mu T_{mu nu} =
// F_{nu lambda} J^lambda and the trace-free T, the divergence theorem gives
//   int_{Sigma_t1} T_{0nu}K^nu = int_{Sigma_t0} T_{0nu}K^nu - int int F_{nu lambda} J^lambda K^nu.

struct EnergyIdentity {
    double lhs = 0.0;     // energy at t1
    double rhs = 0.0;     // energy at t0 minus the source integral
    double source = 0.0;  // int int F_{nu lambda} J^lambda K^nu
    double residual = 0.0;
    double relative = 0.0;
};

template <class P, class Current>
double K0_flux_density(const P& F, const Current& J, double t, const Vec3& x) {
    const auto f = F(t, x).components();
    Vec4 Jup = J(t, x);
    Jup[0] = -Jup[0];
    const Vec4 K = multiplier_K0({t, x});
    double s = 0.0;
    for (int n = 0; n < 4; ++n)
        for (int l = 0; l < 4; ++l) s += f[n][l] * Jup[l] * K[n];
    return s;
}

// Trapezoid in time with `steps` intervals; the spatial rule is fixed and
// resolves the localised data to rounding, so the residual measures the
// time discretisation.
template <class P, class Current>
EnergyIdentity energy_identity_residual(const P& F, const Current& J, double t0, double t1, int steps,
                                        const BallRule& rule) {
    if (steps < 1) throw std::invalid_argument("energy_identity_residual: steps >= 1");
    auto energy = [&](double t) {
        double s = 0.0;
        for (std::size_t k = 0; k < rule.x.size(); ++k) s += rule.w[k] * 0.25 * K0_density(F(t, rule.x[k]), {t, rule.x[k]});
        return s;
    };
    std::vector<double> src(steps + 1), mag(steps + 1);
    parallel_for(std::size_t(steps + 1), [&](std::size_t i) {
        const double t = t0 + (t1 - t0) * double(i) / steps;
        double s = 0.0, a = 0.0;
        for (std::size_t k = 0; k < rule.x.size(); ++k) {
            const double d = K0_flux_density(F, J, t, rule.x[k]);
            s += rule.w[k] * d;
            a += rule.w[k] * std::abs(d);
        }
        src[i] = s;
        mag[i] = a;
    });
    const double dt = (t1 - t0) / steps;
    double source = 0.0, smag = 0.0;
    for (int i = 0; i <= steps; ++i) {
        const double w = (i == 0 || i == steps) ? 0.5 * dt : dt;
        source += w * src[i];
        smag += w * mag[i];
    }
    EnergyIdentity out;
    const double e0 = energy(t0);
    out.lhs = energy(t1);
    out.source = source;
    out.rhs = e0 - source;
    out.residual = out.lhs - out.rhs;
    const double scale = std::abs(e0) + std::abs(out.lhs) + smag;
    out.relative = scale > 0.0 ? std::abs(out.residual) / scale : 0.0;
    return out;
}

}  // namespace vnl

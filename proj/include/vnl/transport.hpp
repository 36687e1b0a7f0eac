#pragma once
// Characteristics of the cut-off Vlasov operator, exact free transport,
// quadrature particle ensembles for the initial density and their moments.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "quadrature.hpp"
#include "symmetries.hpp"

namespace vnl {

// Velocity cutoff: 0 below 1/2, 1 above 1, quintic bridge with matching value,
// slope and curvature at both seams.
inline double chi(double s) {
    if (s <= 0.5) return 0.0;
    if (s >= 1.0) return 1.0;
    const double q = 2.0 * s - 1.0;
    return q * q * q * (10.0 - 15.0 * q + 6.0 * q * q);
}

inline double chi_prime(double s) {
    if (s <= 0.5 || s >= 1.0) return 0.0;
    const double q = 2.0 * s - 1.0;
    return 2.0 * 30.0 * q * q * (1.0 - q) * (1.0 - q);
}

inline double chi_second(double s) {
    if (s <= 0.5 || s >= 1.0) return 0.0;
    const double q = 2.0 * s - 1.0;
    return 4.0 * 60.0 * q * (1.0 - q) * (1.0 - 2.0 * q);
}

struct Particle {
    Vec3 X{}, V{};
    double w = 0.0;   // quadrature weight (phase-space volume)
    double f0 = 0.0;  // density value carried along the characteristic
};

struct Ensemble {
    std::vector<Particle> particles;
    double time = 0.0;

    // Neumaier-compensated, so exactly cancelling pairs give ~0 independent of order.
    double charge() const {
        double q = 0.0, comp = 0.0;
        for (const auto& p : particles) {
            const double x = p.w * p.f0, t = q + x;
            comp += std::abs(q) >= std::abs(x) ? (q - t) + x : (x - t) + q;
            q = t;
        }
        return q + comp;
    }
    double l1() const {
        double q = 0.0;
        for (const auto& p : particles) q += p.w * std::abs(p.f0);
        return q;
    }
};

struct Trajectory {
    std::vector<double> t;
    std::vector<Vec3> X, V;
    double min_speed = 0.0;
    std::optional<double> t0;  // last downward crossing of |V| = 2 before t1
    std::optional<double> t1;  // first downward crossing of |V| = 1
    bool frozen = false;       // |V| dropped below 1/2 and the velocity froze
};

struct IntegrationOptions {
    double t_start = 0.0;
    int record_stride = 1;  // store every n-th step; 0 keeps only the end points
};

// dX/ds = V/|V|, dV/ds = chi(|V|) (E + V/|V| x B), fourth-order Runge-Kutta.
template <class Field>
Trajectory integrate_characteristics(const Field& field, const Particle& p0, double t_end, double dt,
                                     const IntegrationOptions& opt = {}) {
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_characteristics: dt > 0");
    if (!(norm(p0.V) > 0.0)) throw DomainError("characteristic started at v = 0");
    struct State {
        Vec3 X, V;
    };
    bool frozen = false;
    auto rhs = [&](double s, const State& y) -> State {
        const double sp = norm(y.V);
        const Vec3 dir = y.V / sp;
        if (frozen) return {dir, Vec3{}};
        const double c = chi(sp);
        if (c == 0.0) return {dir, Vec3{}};
        TwoForm F;
        try {
            F = field(s, y.X);
        } catch (const DomainError& e) {
            throw DomainError(std::string("field provider domain exceeded near t=") + std::to_string(s) + ": " + e.what());
        }
        return {dir, (F.E + cross(dir, F.B)) * c};
    };
    Trajectory tr;
    State y{p0.X, p0.V};
    double s = opt.t_start;
    const long steps = std::max(1L, std::lround((t_end - opt.t_start) / dt));
    const double h = (t_end - opt.t_start) / steps;
    auto record = [&](long k) {
        if (opt.record_stride == 0 ? (k == 0 || k == steps) : (k % opt.record_stride == 0 || k == steps)) {
            tr.t.push_back(s);
            tr.X.push_back(y.X);
            tr.V.push_back(y.V);
        }
    };
    double speed = norm(y.V);
    tr.min_speed = speed;
    std::optional<double> last_cross2;
    record(0);
    for (long k = 1; k <= steps; ++k) {
        const State k1 = rhs(s, y);
        const State y2{y.X + k1.X * (0.5 * h), y.V + k1.V * (0.5 * h)};
        const State k2 = rhs(s + 0.5 * h, y2);
        const State y3{y.X + k2.X * (0.5 * h), y.V + k2.V * (0.5 * h)};
        const State k3 = rhs(s + 0.5 * h, y3);
        const State y4{y.X + k3.X * h, y.V + k3.V * h};
        const State k4 = rhs(s + h, y4);
        const double prev_speed = speed;
        y.X = y.X + (k1.X + k2.X * 2.0 + k3.X * 2.0 + k4.X) * (h / 6.0);
        if (!frozen) y.V = y.V + (k1.V + k2.V * 2.0 + k3.V * 2.0 + k4.V) * (h / 6.0);
        s = opt.t_start + k * h;
        speed = norm(y.V);
        tr.min_speed = std::min(tr.min_speed, speed);
        auto crossing = [&](double level) { return s - h + h * (prev_speed - level) / (prev_speed - speed); };
        if (prev_speed > 2.0 && speed <= 2.0) last_cross2 = crossing(2.0);
        if (!tr.t1 && prev_speed > 1.0 && speed <= 1.0) {
            tr.t1 = crossing(1.0);
            tr.t0 = last_cross2;
        }
        if (speed < 0.5) frozen = true;
        record(k);
    }
    tr.frozen = frozen;
    return tr;
}

// ---------------------------------------------------------------------------
// Free transport |v| d_t g + v^i d_i g = 0 has g(t, x, v) = g0(x - t v/|v|, v).

template <class G0>
struct FreeSolution {
    G0 g0;

    template <class S>
    S operator()(const S& t, const Vec3T<S>& x, const Vec3T<S>& v) const {
        const S v0 = norm(v);
        if (!(value_of(v0) > 0.0)) throw DomainError("free solution undefined at v = 0");
        return g0(x - v * (t / v0), v);
    }
};

template <class G0>
FreeSolution<G0> free_solution(G0 g0) { return {std::move(g0)}; }

template <class G0>
double free_solution_eval(const G0& g0, double t, const Vec3& x, const Vec3& v) {
    return FreeSolution<G0>{g0}(t, x, v);
}

// Zhat^beta g for the free solution: lifts commute with free transport, so
// the derivative is taken at t = 0 and carried along the straight line.
template <class G0>
double lifted_free_derivative(const G0& g0, const SymmetryOp& op, double t, const Vec3& x, const Vec3& v) {
    const Vec3 x0 = x - v * (t / norm(v));
    return apply_op(op, FreeSolution<G0>{g0}, 0.0, x0, v);
}

// ---------------------------------------------------------------------------
// Smooth C-infinity step: 0 for s <= 0, 1 for s >= 1.

template <class T>
T smooth_step(const T& s) {
    if (value_of(s) <= 0.0) return T(0.0);
    if (value_of(s) >= 1.0) return T(1.0);
    const T a = exp(-1.0 / s), b = exp(-1.0 / (1.0 - s));
    return a / (a + b);
}

// One signed component of the initial density:
// a * exp(-|(x-c)/w|^2/2) * exp(-(|v|-v_s)^2/(2 s^2)) * exp(k . v/|v|) * step((|v|-v_min)/ramp)
struct DensityComponent {
    double amplitude = 1.0;
    Vec3 x_center{};
    Vec3 x_width{{1.0, 1.0, 1.0}};
    double v_shell = 4.0;
    double v_width = 0.5;
    Vec3 v_tilt{};
};

struct DensitySpec {
    std::vector<DensityComponent> components;
    double v_min = 3.0;
    double v_ramp = 0.5;
    int x_nodes = 6;         // Gauss nodes per axis per component
    double x_extent = 4.0;   // half-width of the x box in units of the width
    int v_radial = 6;        // Gauss nodes in |v|
    int v_degree = 11;       // exactness degree of the direction rule
    double v_extent = 6.0;   // radial cut in units of v_width
    bool allow_nonneutral = false;

    // d = x - centre, passed separately so mirrored components see identical offsets.
    template <class T>
    T component_local(const DensityComponent& c, const Vec3T<T>& d, const Vec3T<T>& v) const {
        T q(0.0);
        for (int i = 0; i < 3; ++i) {
            const T s = d[i] / c.x_width[i];
            q = q + s * s;
        }
        const T sp = norm(v);
        const T dv = (sp - c.v_shell) / c.v_width;
        const T tilt = (v[0] * c.v_tilt[0] + v[1] * c.v_tilt[1] + v[2] * c.v_tilt[2]) / sp;
        return c.amplitude * exp(-0.5 * q - 0.5 * dv * dv + tilt) * smooth_step((sp - v_min) / v_ramp);
    }

    template <class T>
    T component_value(const DensityComponent& c, const Vec3T<T>& x, const Vec3T<T>& v) const {
        const Vec3T<T> d{{x[0] - c.x_center[0], x[1] - c.x_center[1], x[2] - c.x_center[2]}};
        return component_local(c, d, v);
    }

    template <class T>
    T operator()(const Vec3T<T>& x, const Vec3T<T>& v) const {
        T s(0.0);
        for (const auto& c : components) s = s + component_value(c, x, v);
        return s;
    }
};

struct VelocityRule {
    std::vector<Vec3> v;
    std::vector<double> w;
};

inline VelocityRule velocity_rule(double vmin, double vmax, int radial, int degree) {
    const Rule1D rr = gauss_legendre(radial, vmin, vmax);
    const SphereRule sr = sphere_rule(degree);
    VelocityRule out;
    for (int i = 0; i < radial; ++i)
        for (std::size_t j = 0; j < sr.n.size(); ++j) {
            out.v.push_back(sr.n[j] * rr.x[i]);
            out.w.push_back(rr.w[i] * rr.x[i] * rr.x[i] * sr.w[j]);
        }
    return out;
}

// Deterministic tensor-product quadrature particles. Every component uses
// the same node pattern relative to its own centre, so paired components of
// opposite sign carry bitwise-identical masses.
inline Ensemble sample_initial_density(const DensitySpec& spec) {
    Ensemble ens;
    for (const auto& c : spec.components) {
        if (!(c.v_width > 0.0) || !(c.x_width[0] > 0.0 && c.x_width[1] > 0.0 && c.x_width[2] > 0.0))
            throw ConfigError("density component widths must be positive");
        const double vmax = c.v_shell + spec.v_extent * c.v_width;
        if (vmax <= spec.v_min) throw ConfigError("density component has no mass above the velocity support bound");
        std::array<Rule1D, 3> xr;
        for (int a = 0; a < 3; ++a)
            xr[a] = gauss_legendre(spec.x_nodes, -spec.x_extent * c.x_width[a], spec.x_extent * c.x_width[a]);
        const VelocityRule vr = velocity_rule(spec.v_min, vmax, spec.v_radial, spec.v_degree);
        for (int i = 0; i < spec.x_nodes; ++i)
            for (int j = 0; j < spec.x_nodes; ++j)
                for (int k = 0; k < spec.x_nodes; ++k) {
                    const Vec3 d{{xr[0].x[i], xr[1].x[j], xr[2].x[k]}};
                    const Vec3 x = c.x_center + d;
                    const double wx = xr[0].w[i] * xr[1].w[j] * xr[2].w[k];
                    for (std::size_t m = 0; m < vr.v.size(); ++m) {
                        const double f = spec.component_local(c, d, vr.v[m]);
                        if (f == 0.0) continue;
                        ens.particles.push_back({x, vr.v[m], wx * vr.w[m], f});
                    }
                }
    }
    const double q = ens.charge();
    if (!spec.allow_nonneutral && std::abs(q) > 1e-12 * std::max(1.0, ens.l1()))
        throw ConfigError("initial density violates the neutral hypothesis (total charge " + std::to_string(q) + ")");
    return ens;
}

// ---------------------------------------------------------------------------
// Velocity moments.

// J(g)_nu = int (v_nu / |v|) g dv, covariant, at one spacetime point.
template <class G>
Vec4 velocity_average(const G& g, double t, const Vec3& x, const VelocityRule& rule) {
    Vec4 J{0.0, 0.0, 0.0, 0.0};
    for (std::size_t m = 0; m < rule.v.size(); ++m) {
        const Vec3& v = rule.v[m];
        const double val = g(t, x, v) * rule.w[m];
        const double v0 = norm(v);
        J[0] -= val;
        for (int i = 0; i < 3; ++i) J[i + 1] += val * v[i] / v0;
    }
    return J;
}

struct Moments {
    Array3 rho;                 // int f dv at nodes
    std::array<Array3, 3> J;    // int v^i/|v| f dv at the E_i locations (or nodes)
    std::size_t outside = 0;    // particles whose stencil left the grid
    double deposited_charge = 0.0;
};

inline Moments vlasov_moments(const std::vector<Particle>& ps, const GridGeometry& g, bool staggered = true,
                              bool strict = false) {
    Moments m;
    m.rho = Array3(g.nodes());
    for (auto& a : m.J) a = Array3(g.nodes());
    const double inv_vol = 1.0 / (g.h * g.h * g.h);
    for (const auto& p : ps) {
        TrilinearStencil st;
        if (!trilinear_stencil(g, kNodeStagger, p.X, st)) {
            ++m.outside;
            if (strict) throw DomainError("particle outside deposition grid");
            continue;
        }
        const double q = p.w * p.f0;
        deposit(m.rho, st, q * inv_vol);
        m.deposited_charge += q;
        const double sp = norm(p.V);
        for (int i = 0; i < 3; ++i) {
            TrilinearStencil se = st;
            if (staggered && !trilinear_stencil(g, kEdgeStagger[i], p.X, se)) {
                ++m.outside;
                continue;
            }
            deposit(m.J[i], se, q * p.V[i] / sp * inv_vol);
        }
    }
    return m;
}

}  // namespace vnl

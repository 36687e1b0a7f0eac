#pragma once
// Quantitative checks: decay fits, weight and null-structure bounds,
// Klainerman-Sobolev constants, charge diagnostics, the alpha transport
// equation, initial norms and the velocity-floor study.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "core.hpp"
#include "energies.hpp"
#include "geometry.hpp"
#include "maxwell.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "symmetries.hpp"
#include "transport.hpp"

namespace vnl {

// ---------------------------------------------------------------------------
// Log-log least squares.

struct LogFit {
    double slope = 0.0, intercept = 0.0, stderr_slope = 0.0;
    int n = 0;
    double decades = 0.0;
};

inline LogFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys, int min_points = 8,
                         double min_decades = 1.5) {
    if (xs.size() != ys.size()) throw ShapeError("fit_loglog: size mismatch");
    for (std::size_t k = 0; k < xs.size(); ++k)
        if (!(xs[k] > 0.0) || !(ys[k] > 0.0))
            throw DomainError("non-positive sample at index " + std::to_string(k) + " (x=" + std::to_string(xs[k]) +
                              ", y=" + std::to_string(ys[k]) + ")");
    LogFit f;
    f.n = static_cast<int>(xs.size());
    if (f.n < min_points) throw DomainError("fit needs at least " + std::to_string(min_points) + " samples");
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    f.decades = std::log10(*hi / *lo);
    if (f.decades < min_decades) throw DomainError("fit range spans fewer than the required decades");
    double mx = 0.0, my = 0.0;
    for (int k = 0; k < f.n; ++k) {
        mx += std::log(xs[k]);
        my += std::log(ys[k]);
    }
    mx /= f.n;
    my /= f.n;
    double sxx = 0.0, sxy = 0.0;
    for (int k = 0; k < f.n; ++k) {
        const double dx = std::log(xs[k]) - mx, dy = std::log(ys[k]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (int k = 0; k < f.n; ++k) {
        const double e = std::log(ys[k]) - f.intercept - f.slope * std::log(xs[k]);
        ss += e * e;
    }
    f.stderr_slope = f.n > 2 ? std::sqrt(ss / (f.n - 2) / sxx) : 0.0;
    return f;
}

// ---------------------------------------------------------------------------
// Decay fits along outgoing null rays u = t - r = const.

enum class NullComponent { alpha, alpha_bar, rho, sigma };

inline std::string_view component_name(NullComponent c) {
    switch (c) {
        case NullComponent::alpha: return "alpha";
        case NullComponent::alpha_bar: return "alpha_bar";
        case NullComponent::rho: return "rho";
        case NullComponent::sigma: return "sigma";
    }
    return "?";
}

inline double component_magnitude(const NullComponents& c, NullComponent which) {
    switch (which) {
        case NullComponent::alpha: return std::sqrt(c.alpha_norm2());
        case NullComponent::alpha_bar: return std::sqrt(c.alpha_bar_norm2());
        case NullComponent::rho: return std::abs(c.rho);
        case NullComponent::sigma: return std::abs(c.sigma);
    }
    return 0.0;
}

struct RaySpec {
    double u = 0.0;
    Vec3 direction{{1.0, 0.0, 0.0}};
    double r_min = 10.0, r_max = 1000.0;
    int samples = 16;
};

struct DecayFitReport {
    std::string ray;
    NullComponent component = NullComponent::rho;
    LogFit fit;
    double predicted = 0.0;
    double tol = 0.0;
    bool upper_bound_only = false;  // pass when slope <= predicted + tol
    bool pass = false;
    std::vector<double> r, values;
};

template <class P>
DecayFitReport fit_decay_exponent(const P& F, const RaySpec& ray, NullComponent comp, double predicted, double tol,
                                  bool upper_bound_only = false) {
    DecayFitReport rep;
    rep.component = comp;
    rep.predicted = predicted;
    rep.tol = tol;
    rep.upper_bound_only = upper_bound_only;
    const Vec3 n = ray.direction / norm(ray.direction);
    rep.ray = "u=" + std::to_string(ray.u) + " dir=(" + std::to_string(n[0]) + "," + std::to_string(n[1]) + "," +
              std::to_string(n[2]) + ")";
    for (int k = 0; k < ray.samples; ++k) {
        const double r = ray.r_min * std::pow(ray.r_max / ray.r_min, double(k) / (ray.samples - 1));
        const Vec3 x = n * r;
        const double t = ray.u + r;
        rep.r.push_back(r);
        rep.values.push_back(component_magnitude(null_decompose(F(t, x), SpacetimePoint{t, x}), comp));
    }
    rep.fit = fit_loglog(rep.r, rep.values);
    rep.pass = upper_bound_only ? rep.fit.slope <= predicted + tol : std::abs(rep.fit.slope - predicted) <= tol;
    return rep;
}

// ---------------------------------------------------------------------------
// Generic report for inequalities with an unspecified constant.

struct InequalityReport {
    std::string id;
    std::size_t samples = 0;
    std::size_t skipped = 0;
    double max_ratio = 0.0;
    std::vector<std::pair<std::string, double>> table;  // label -> constant
    double drift = 0.0;                                  // max / min over the table
    bool pass = false;
};

inline double table_drift(const std::vector<double>& c) {
    if (c.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
    if (!(*lo > 0.0)) return std::numeric_limits<double>::infinity();
    return *hi / *lo;
}

// ---------------------------------------------------------------------------
// Weight identities and the three weight inequalities, with explicit
// constants: tau- vL/v0 <= sum|z|, tau+ (vLbar + |vA|)/v0 <= 2 sum|z| for
// t >= 0, and |vA| <= 2 sqrt(v0 vLbar).

struct Weights1Report {
    std::size_t samples = 0;
    double identity_L = 0.0;       // 2(t-r) vL/v0 + s0 - (x^i/r) z0i
    double identity_Lbar = 0.0;    // 2(t+r) vLbar/v0 + s0 + (x^i/r) z0i
    double identity_ang = 0.0;     // 4 r^2 vL vLbar - sum_{k<l} (v0 z_kl)^2
    double identity_rvA = 0.0;     // r vA - v0 C_A^{ij} z_ij
    double ratio_L = 0.0, ratio_Lbar = 0.0, ratio_vA = 0.0;
    static constexpr double kConstL = 1.0, kConstLbar = 2.0, kConstVA = 2.0;
    bool pass(double tol = 1e-12) const {
        return identity_L <= tol && identity_Lbar <= tol && identity_ang <= tol && identity_rvA <= tol &&
               ratio_L <= 1.0 && ratio_Lbar <= 1.0 && ratio_vA <= 1.0;
    }
};

struct WeightSample {
    double t;
    Vec3 x, v;
};

// Mixed scales: log-uniform radii and times so both near-cone and far
// regions are exercised.
inline std::vector<WeightSample> random_phase_samples(std::size_t n, unsigned seed, double t_max = 100.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::vector<WeightSample> out;
    while (out.size() < n) {
        const double t = ud(rng) < 0.1 ? 0.0 : t_max * std::pow(10.0, -4.0 * ud(rng));
        Vec3 dir{{nd(rng), nd(rng), nd(rng)}}, v{{nd(rng), nd(rng), nd(rng)}};
        if (norm(dir) < 1e-3 || norm(v) < 1e-3) continue;
        double r = std::pow(10.0, -2.0 + 4.0 * ud(rng));
        if (ud(rng) < 0.3) r = std::max(1e-3, t + (ud(rng) - 0.5) * 4.0);  // near the light cone
        v = v * std::pow(10.0, -1.0 + 2.0 * ud(rng));
        if (ud(rng) < 0.05) v = dir * (norm(v) / norm(dir));  // outgoing
        out.push_back({t, dir * (r / norm(dir)), v});
    }
    return out;
}

inline Weights1Report weights1_check(std::size_t n = 10000, unsigned seed = 2024) {
    Weights1Report rep;
    for (const auto& s : random_phase_samples(n, seed)) {
        const double t = s.t, r = norm(s.x);
        const auto z = eval_weights(t, s.x, s.v);
        const auto vs = velocity_null_split(s.x, s.v);
        const double v0 = vs.v0;
        const NullFrame fr = null_frame(s.x);
        double sumz = 0.0;
        for (double q : z) sumz += std::abs(q);
        const double z0r = (s.x[0] * z[4] + s.x[1] * z[5] + s.x[2] * z[6]) / r;
        const double s0 = z[10];
        const double scaleL = std::abs(t - r) * vs.vL / v0 + std::abs(s0) + std::abs(z0r) + 1e-300;
        const double scaleLb = (t + r) * vs.vLbar / v0 + std::abs(s0) + std::abs(z0r) + 1e-300;
        rep.identity_L = std::max(rep.identity_L, std::abs(2.0 * (t - r) * vs.vL / v0 + s0 - z0r) / scaleL);
        rep.identity_Lbar = std::max(rep.identity_Lbar, std::abs(2.0 * (t + r) * vs.vLbar / v0 + s0 + z0r) / scaleLb);
        const double zkl = (v0 * z[7]) * (v0 * z[7]) + (v0 * z[8]) * (v0 * z[8]) + (v0 * z[9]) * (v0 * z[9]);
        rep.identity_ang = std::max(rep.identity_ang, std::abs(4.0 * r * r * vs.vL * vs.vLbar - zkl) / (r * r * v0 * v0));
        // r e_A = x cross w_A with w_A = e_A cross n, so C^{12} = -w3, C^{13} = w2, C^{23} = -w1.
        const std::array<Vec3, 2> eA{fr.e1, fr.e2};
        for (int A = 0; A < 2; ++A) {
            const Vec3 w = cross(eA[A], fr.n);
            const double rhs = v0 * (-w[2] * z[7] + w[1] * z[8] - w[0] * z[9]);
            rep.identity_rvA = std::max(rep.identity_rvA, std::abs(r * vs.vA[A] - rhs) / (r * v0));
        }
        const SpacetimePoint p{t, s.x};
        const double vA = std::hypot(vs.vA[0], vs.vA[1]);
        rep.ratio_L = std::max(rep.ratio_L, p.tau_minus() * vs.vL / v0 / (Weights1Report::kConstL * sumz));
        rep.ratio_Lbar =
            std::max(rep.ratio_Lbar, p.tau_plus() * (vs.vLbar + vA) / v0 / (Weights1Report::kConstLbar * sumz));
        // |vA|^2 = 4 vL vLbar <= 4 v0 vLbar; compared in squared form, rounding slack 1e-12
        if (vA > 0.0)
            rep.ratio_vA = std::max(rep.ratio_vA, vA * vA / (Weights1Report::kConstVA * Weights1Report::kConstVA *
                                                              v0 * vs.vLbar * (1.0 + 1e-12)));
        ++rep.samples;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Null structure of G(v, grad_v g).
//
// With W = grad_v g = W^r n + W^A e_A and v = vL L + vLbar Lbar + v^A e_A:
//   G(v, W) = -rho v0 W^r - vL alpha.W_A - vLbar alpha_bar.W_A
//             + (W^r / 2) v^A (alpha_A - alpha_bar_A) + sigma (v^1 W^2 - v^2 W^1).
// For t >= 0, |v0 W^r| <= tau- S and |v0 W^A| <= tau+ S for each A, where
// S = sum over the 11 lifted fields of |Zhat g|. Counting coefficients per
// term of the bound gives the constant below.

struct CalculFCoefficients {
    double rho = 1.0;                              // tau- |rho|
    double alpha = std::sqrt(2.0) + 0.5;           // angular (vL/v0 <= 1) plus radial (|vA|/v0 <= 1, tau- <= tau+)
    double sigma_vA = std::sqrt(2.0);              // tau+ |vA|/v0 |sigma|
    double alpha_bar_vA = 0.5;                     // tau- |vA|/v0 |alpha_bar|
    double alpha_bar_vLbar = std::sqrt(2.0);       // tau+ vLbar/v0 |alpha_bar|
    double max() const { return std::max({rho, alpha, sigma_vA, alpha_bar_vA, alpha_bar_vLbar}); }
};

inline double calculF_constant() { return CalculFCoefficients{}.max(); }

inline double calculF_expansion(const NullComponents& c, const VelocityNullSplit& vs, double Wr,
                                const std::array<double, 2>& WA) {
    const double aW = c.alpha[0] * WA[0] + c.alpha[1] * WA[1];
    const double abW = c.alpha_bar[0] * WA[0] + c.alpha_bar[1] * WA[1];
    const double mix = vs.vA[0] * (c.alpha[0] - c.alpha_bar[0]) + vs.vA[1] * (c.alpha[1] - c.alpha_bar[1]);
    return -c.rho * vs.v0 * Wr - vs.vL * aW - vs.vLbar * abW + 0.5 * Wr * mix +
           c.sigma * (vs.vA[0] * WA[1] - vs.vA[1] * WA[0]);
}

struct CalculFReport {
    std::size_t samples = 0, skipped = 0;
    double max_ratio = 0.0;          // LHS / (bracket * S)
    double constant = 0.0;           // C* from the coefficient count
    double expansion_residual = 0.0; // |direct - expansion| relative
    bool pass() const { return max_ratio <= constant && expansion_residual <= 1e-10; }
};

// Random test function with analytic derivatives in every variable.
struct RandomPhaseFunction {
    Vec3 a, b, c;
    double s1, s2, s3;

    template <class T>
    T operator()(const T& t, const Vec3T<T>& x, const Vec3T<T>& v) const {
        Vec3T<T> dx{{x[0] - a[0], x[1] - a[1], x[2] - a[2]}}, dv{{v[0] - b[0], v[1] - b[1], v[2] - b[2]}};
        const T q = dot(dx, dx) * s1 + dot(dv, dv) * s2;
        const T lin = (c[0] * v[0] + c[1] * v[1] + c[2] * v[2]) * s3 + t * 0.3;
        return exp(-q) * (1.0 + sin(lin));
    }
};

inline CalculFReport calculF_bound_check(std::size_t n = 10000, unsigned seed = 77) {
    CalculFReport rep;
    rep.constant = calculF_constant();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    auto rvec = [&] { return Vec3{{nd(rng), nd(rng), nd(rng)}}; };
    const auto pts = random_phase_samples(n, seed + 1, 50.0);
    for (const auto& s : pts) {
        const TwoForm G{rvec(), rvec()};
        const double sc = std::pow(10.0, -1.0 + 2.0 * ud(rng));
        const RandomPhaseFunction g{s.x + rvec() * sc, s.v + rvec(), rvec(), 0.1 + ud(rng), 0.1 + ud(rng), ud(rng)};
        const double r = norm(s.x);
        if (r < 1e-6 || norm(s.v) < 1e-6) {
            ++rep.skipped;
            continue;
        }
        // grad_v g with dual numbers
        Vec3 W{};
        for (int i = 0; i < 3; ++i) {
            using D = Dual<double>;
            Vec3T<D> xd{{D(s.x[0], 0.0), D(s.x[1], 0.0), D(s.x[2], 0.0)}}, vd;
            for (int k = 0; k < 3; ++k) vd[k] = D(s.v[k], k == i ? 1.0 : 0.0);
            W[i] = g(D(s.t, 0.0), xd, vd).b;
        }
        const double v0 = norm(s.v);
        const double lhs = dot(G.E * v0 + cross(s.v, G.B), W);
        const NullFrame fr = null_frame(s.x);
        const auto c = null_decompose(G, fr);
        const auto vs = velocity_null_split(s.x, s.v);
        if (norm(W) > 0.0) {
            // identity is linear in W, so test it on the unit direction
            const Vec3 Wn = W / norm(W);
            const double direct = dot(G.E * v0 + cross(s.v, G.B), Wn);
            const double exp_val = calculF_expansion(c, vs, dot(Wn, fr.n), {dot(Wn, fr.e1), dot(Wn, fr.e2)});
            rep.expansion_residual =
                std::max(rep.expansion_residual, std::abs(direct - exp_val) / (v0 * std::sqrt(field_norm2(G))));
        }
        double S = 0.0;
        for (auto z : kAllFields) S += std::abs(apply_lift(z, g, s.t, s.x, s.v));
        const SpacetimePoint p{s.t, s.x};
        const double tp = p.tau_plus(), tm = p.tau_minus(), vA = std::hypot(vs.vA[0], vs.vA[1]);
        const double bracket = tm * std::abs(c.rho) + tp * std::sqrt(c.alpha_norm2()) + tp * vA / v0 * std::abs(c.sigma) +
                               tm * vA / v0 * std::sqrt(c.alpha_bar_norm2()) +
                               tp * vs.vLbar / v0 * std::sqrt(c.alpha_bar_norm2());
        const double rhs = bracket * S;
        if (rhs > 0.0) rep.max_ratio = std::max(rep.max_ratio, std::abs(lhs) / rhs);
        ++rep.samples;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Klainerman-Sobolev constants on the free Gaussian family
// g0(x, v) = exp(-|x - x0|^2 / (2 a^2) - (|v| - vs)^2 / (2 b^2)),
// isotropic in velocity so the free solution spreads over the full sphere
// |x| ~ t and the weighted averages reach a t-independent regime early.

struct GaussianFamily {
    double a = 1.0;
    Vec3 x0{};
    double vs = 4.0, b = 1.0;

    template <class T>
    T operator()(const Vec3T<T>& x, const Vec3T<T>& v) const {
        T q(0.0);
        for (int i = 0; i < 3; ++i) {
            const T dx = (x[i] - x0[i]) / a;
            q = q + dx * dx;
        }
        const T dv = (norm(v) - vs) / b;
        return exp(-0.5 * (q + dv * dv));
    }
    double v_min(double extent) const { return std::max(0.25 * vs, vs - extent * b); }
    double v_max(double extent) const { return vs + extent * b; }
};

struct KSOptions {
    int x_nodes = 10;      // Gauss nodes per x axis for the L1 norms (even: octant symmetry)
    int v_radial = 6;      // |v| nodes
    int v_degree = 11;     // sphere rule degree in velocity
    double extent = 5.0;   // half-width of the boxes in units of a and b
    int avg_radial = 10;   // |v| nodes for pointwise velocity averages
    int avg_theta = 14, avg_phi = 24;
    int directions = 5;    // sample rays for the pointwise check
    int radii = 24;        // samples per ray
};

// out[q][j] = sum_{|beta| <= q} sum_w || int |w^j Zhat^beta g| dv ||_{L1}
// for q = 0..Q, j = 0..jmax. Time independent for free solutions, so it is
// evaluated at t = 0.
inline std::vector<std::vector<double>> ks_rhs(const GaussianFamily& fam, int Q, int jmax, const KSOptions& opt = {}) {
    const auto ops = lifted_multi_indices(Q);
    std::array<Rule1D, 3> xr;
    for (int i = 0; i < 3; ++i)
        xr[i] = gauss_legendre(opt.x_nodes, fam.x0[i] - opt.extent * fam.a, fam.x0[i] + opt.extent * fam.a);
    const VelocityRule vr = velocity_rule(fam.v_min(opt.extent), fam.v_max(opt.extent), opt.v_radial, opt.v_degree);
    // Centred family, even node count: the integrand and both rules are
    // invariant under coordinate reflections, so one octant suffices.
    const bool octant = fam.x0 == Vec3{} && opt.x_nodes % 2 == 0;
    const int n1 = octant ? opt.x_nodes / 2 : opt.x_nodes, first = opt.x_nodes - n1;
    const double mult = octant ? 8.0 : 1.0;
    const std::size_t nx = std::size_t(n1) * n1 * n1;
    const FreeSolution<GaussianFamily> g{fam};
    std::vector<std::vector<double>> partial(nx, std::vector<double>((Q + 1) * (jmax + 1), 0.0));
    parallel_for(nx, [&](std::size_t ix) {
        const int i0 = first + int(ix / (n1 * n1)), i1 = first + int(ix / n1 % n1), i2 = first + int(ix % n1);
        const Vec3 x{{xr[0].x[i0], xr[1].x[i1], xr[2].x[i2]}};
        const double wx = mult * xr[0].w[i0] * xr[1].w[i1] * xr[2].w[i2];
        std::vector<double> by_order(Q + 1);
        for (std::size_t iv = 0; iv < vr.v.size(); ++iv) {
            const Vec3& v = vr.v[iv];
            std::fill(by_order.begin(), by_order.end(), 0.0);
            for (const auto& op : ops) by_order[op.factors.size()] += std::abs(apply_op(op, g, 0.0, x, v));
            const auto z = eval_weights(0.0, x, v);
            for (int j = 0; j <= jmax; ++j) {
                double ws = 0.0;
                for (double q : z) ws += std::pow(std::abs(q), j);
                double cum = 0.0;
                for (int q = 0; q <= Q; ++q) {
                    cum += by_order[q];
                    partial[ix][q * (jmax + 1) + j] += wx * vr.w[iv] * ws * cum;
                }
            }
        }
    });
    std::vector<std::vector<double>> out(Q + 1, std::vector<double>(jmax + 1, 0.0));
    for (const auto& p : partial)
        for (int q = 0; q <= Q; ++q)
            for (int j = 0; j <= jmax; ++j) out[q][j] += p[q * (jmax + 1) + j];
    return out;
}

// max over z of int |z^j g|(t, x, v) dv. The velocity rule concentrates on
// the cap of directions whose free line passes within the support radius.
inline std::vector<double> ks_velocity_average(const GaussianFamily& fam, double t, const Vec3& x, int jmax,
                                               const KSOptions& opt) {
    const FreeSolution<GaussianFamily> g{fam};
    const double R = opt.extent * fam.a;
    const Vec3 d = x - fam.x0;
    const double rd = norm(d);
    double theta_max = pi;
    Vec3 axis{{0.0, 0.0, 1.0}};
    if (t > 0.0 && rd > 0.0) {
        const double c = (rd * rd + t * t - R * R) / (2.0 * t * rd);
        if (c >= 1.0) return std::vector<double>(jmax + 1, 0.0);
        if (c > -1.0) theta_max = std::acos(c);
        axis = d / rd;
    }
    const SphereRule cap = cap_rule(axis, theta_max, opt.avg_theta, opt.avg_phi);
    const Rule1D rr = gauss_legendre(opt.avg_radial, fam.v_min(opt.extent), fam.v_max(opt.extent));
    std::vector<std::array<double, 11>> acc(jmax + 1);
    for (auto& a : acc) a.fill(0.0);
    for (std::size_t i = 0; i < rr.x.size(); ++i)
        for (std::size_t k = 0; k < cap.n.size(); ++k) {
            const Vec3 v = cap.n[k] * rr.x[i];
            const double w = rr.w[i] * rr.x[i] * rr.x[i] * cap.w[k];
            const double gv = std::abs(g(t, x, v));
            if (gv == 0.0) continue;
            const auto z = eval_weights(t, x, v);
            for (int j = 0; j <= jmax; ++j)
                for (int q = 0; q < 11; ++q) acc[j][q] += w * gv * std::pow(std::abs(z[q]), j);
        }
    std::vector<double> out(jmax + 1);
    for (int j = 0; j <= jmax; ++j) out[j] = *std::max_element(acc[j].begin(), acc[j].end());
    return out;
}

// Radial scans through the shell |x - x0| in [t - R, t + R] along
// Fibonacci-sphere directions.
inline std::vector<Vec3> ks_sample_points(const GaussianFamily& fam, double t, const KSOptions& opt) {
    std::vector<Vec3> out;
    const double R = opt.extent * fam.a;
    const double r0 = std::max(0.0, t - R), r1 = t + R;
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < opt.directions; ++k) {
        const double z = 1.0 - (2.0 * k + 1.0) / opt.directions, s = std::sqrt(1.0 - z * z);
        const Vec3 d{{s * std::cos(golden * k), s * std::sin(golden * k), z}};
        for (int i = 0; i < opt.radii; ++i) out.push_back(fam.x0 + d * (r0 + (r1 - r0) * (i + 0.5) / opt.radii));
    }
    return out;
}

struct KSTableEntry {
    double t = 0.0, scale = 0.0;
    int j = 0;
    double constant = 0.0;
};

struct KSReport {
    std::string id;
    std::vector<KSTableEntry> table;
    double drift_t = 0.0;      // worst max/min across t at fixed scale and j
    double drift_scale = 0.0;  // worst max/min across scales at fixed t and j
    bool pass = false;
};

inline void ks_finish(KSReport& rep, const std::vector<double>& ts, const std::vector<double>& scales, int jmax) {
    for (int j = 0; j <= jmax; ++j) {
        for (double a : scales) {
            std::vector<double> c;
            for (const auto& e : rep.table)
                if (e.j == j && e.scale == a) c.push_back(e.constant);
            rep.drift_t = std::max(rep.drift_t, table_drift(c));
        }
        for (double t : ts) {
            std::vector<double> c;
            for (const auto& e : rep.table)
                if (e.j == j && e.t == t) c.push_back(e.constant);
            rep.drift_scale = std::max(rep.drift_scale, table_drift(c));
        }
    }
    bool finite = true;
    for (const auto& e : rep.table) finite = finite && std::isfinite(e.constant) && e.constant > 0.0;
    rep.pass = finite && rep.drift_t <= 2.0 && rep.drift_scale <= 2.0;
}

// Pointwise ratio: LHS tau+^2 tau- / ((j+1)^3 RHS_{|beta|<=3}).
inline std::vector<double> ks_pointwise_constants(const GaussianFamily& fam, double t, int jmax,
                                                  const std::vector<double>& rhs3, const KSOptions& opt) {
    const auto pts = ks_sample_points(fam, t, opt);
    std::vector<std::vector<double>> ratios(pts.size());
    parallel_for(pts.size(), [&](std::size_t k) {
        const auto lhs = ks_velocity_average(fam, t, pts[k], jmax, opt);
        const SpacetimePoint p{t, pts[k]};
        const double w = p.tau_plus() * p.tau_plus() * p.tau_minus();
        ratios[k].resize(jmax + 1);
        for (int j = 0; j <= jmax; ++j) ratios[k][j] = lhs[j] * w / (std::pow(j + 1.0, 3) * rhs3[j]);
    });
    std::vector<double> out(jmax + 1, 0.0);
    for (const auto& r : ratios)
        for (int j = 0; j <= jmax; ++j) out[j] = std::max(out[j], r[j]);
    return out;
}

struct KSL2Options {
    int radial_panels = 4, radial_nodes = 5;
    int sphere_degree = 15;
};

// L2 ratio: || tau+ tau-^(1/2) int |z^j g| dv ||_{L2(Sigma_t)} / ((j+1)^2 RHS_{|beta|<=2}).
inline std::vector<double> ks_l2_constants(const GaussianFamily& fam, double t, int jmax,
                                           const std::vector<double>& rhs2, const KSOptions& opt,
                                           const KSL2Options& l2 = {}) {
    const double R = opt.extent * fam.a, rc = norm(fam.x0);
    const Rule1D rr = composite_gauss(l2.radial_nodes, l2.radial_panels, std::max(0.0, t - R - rc), t + R + rc);
    const SphereRule sr = sphere_rule(l2.sphere_degree);
    std::vector<std::vector<double>> acc(rr.x.size(), std::vector<double>(jmax + 1, 0.0));
    parallel_for(rr.x.size(), [&](std::size_t i) {
        for (std::size_t k = 0; k < sr.n.size(); ++k) {
            const Vec3 x = fam.x0 + sr.n[k] * rr.x[i];
            const auto lhs = ks_velocity_average(fam, t, x, jmax, opt);
            const SpacetimePoint p{t, x};
            const double wt = p.tau_plus() * p.tau_plus() * p.tau_minus();
            for (int j = 0; j <= jmax; ++j) acc[i][j] += rr.w[i] * rr.x[i] * rr.x[i] * sr.w[k] * wt * lhs[j] * lhs[j];
        }
    });
    std::vector<double> out(jmax + 1);
    for (int j = 0; j <= jmax; ++j) {
        double s2 = 0.0;
        for (const auto& a2 : acc) s2 += a2[j];
        out[j] = std::sqrt(s2) / (std::pow(j + 1.0, 2) * rhs2[j]);
    }
    return out;
}

// Both inequalities over a (scale, t) sweep; fam.a and fam.x0 are multiplied
// by each scale. The order-3 right-hand side is shared.
inline std::pair<KSReport, KSReport> ks_check(const GaussianFamily& base, const std::vector<double>& scales,
                                              const std::vector<double>& ts, int jmax, const KSOptions& opt = {},
                                              const KSL2Options& l2 = {}) {
    KSReport pw, l2r;
    pw.id = "KS-pointwise";
    l2r.id = "KS-L2";
    for (double a : scales) {
        GaussianFamily fam = base;
        fam.a = base.a * a;
        fam.x0 = base.x0 * a;
        const auto rhs = ks_rhs(fam, 3, jmax, opt);
        for (double t : ts) {
            const auto c1 = ks_pointwise_constants(fam, t, jmax, rhs[3], opt);
            const auto c2 = ks_l2_constants(fam, t, jmax, rhs[2], opt, l2);
            for (int j = 0; j <= jmax; ++j) {
                pw.table.push_back({t, a, j, c1[j]});
                l2r.table.push_back({t, a, j, c2[j]});
            }
        }
    }
    ks_finish(pw, ts, scales, jmax);
    ks_finish(l2r, ts, scales, jmax);
    return {pw, l2r};
}

// ---------------------------------------------------------------------------
// Transport equation for alpha:
//   Lbar(alpha_A) - alpha_A / r + e_A(rho) + s eps_{BA} e_B(sigma) = J_A,
// with eps_{12} = 1 and s = +1 or -1. Derivatives are centred differences
// of step h; the frame is constant along the radial line, so Lbar acts on
// the frame components as on scalars.

struct AlphaResidual {
    double max_plus = 0.0, l2_plus = 0.0;    // s = +1
    double max_minus = 0.0, l2_minus = 0.0;  // s = -1
    std::size_t samples = 0, skipped = 0;
};

template <class P, class Current>
AlphaResidual alphaem_residual(const P& F, const Current& J, const std::vector<SpacetimePoint>& pts, double h) {
    AlphaResidual out;
    for (const auto& p : pts) {
        const double r = p.r();
        if (r < 4.0 * h) {
            ++out.skipped;
            continue;
        }
        const NullFrame fr = null_frame(p.x);
        auto comps = [&](double t, const Vec3& x) { return null_decompose(F(t, x), fr); };
        const auto cp = comps(p.t + h, p.x - fr.n * h), cm = comps(p.t - h, p.x + fr.n * h);
        const auto c0 = comps(p.t, p.x);
        const std::array<Vec3, 2> e{fr.e1, fr.e2};
        auto scalar_deriv = [&](const Vec3& dir, bool rho) {
            const auto a = null_decompose(F(p.t, p.x + dir * h), null_frame(Vec3(p.x + dir * h)));
            const auto b = null_decompose(F(p.t, p.x - dir * h), null_frame(Vec3(p.x - dir * h)));
            return rho ? (a.rho - b.rho) / (2.0 * h) : (a.sigma - b.sigma) / (2.0 * h);
        };
        const Vec4 Jc = J(p.t, p.x);
        const Vec3 Js{{Jc[1], Jc[2], Jc[3]}};
        const std::array<double, 2> drho{scalar_deriv(e[0], true), scalar_deriv(e[1], true)};
        const std::array<double, 2> dsig{scalar_deriv(e[0], false), scalar_deriv(e[1], false)};
        // eps_{BA} e_B(sigma): for A = 1 it is eps_{21} e_2 = -e_2(sigma); for A = 2, eps_{12} e_1 = e_1(sigma).
        const std::array<double, 2> epsTerm{-dsig[1], dsig[0]};
        for (int A = 0; A < 2; ++A) {
            const double lbar = (cp.alpha[A] - cm.alpha[A]) / (2.0 * h);
            const double base = lbar - c0.alpha[A] / r + drho[A] - dot(Js, e[A]);
            const double rp = base + epsTerm[A], rm = base - epsTerm[A];
            out.max_plus = std::max(out.max_plus, std::abs(rp));
            out.max_minus = std::max(out.max_minus, std::abs(rm));
            out.l2_plus += rp * rp;
            out.l2_minus += rm * rm;
        }
        ++out.samples;
    }
    out.l2_plus = std::sqrt(out.l2_plus / std::max<std::size_t>(1, out.samples));
    out.l2_minus = std::sqrt(out.l2_minus / std::max<std::size_t>(1, out.samples));
    return out;
}

inline double convergence_order(double coarse, double fine) {
    if (!(coarse > 0.0) || !(fine > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::log2(coarse / fine);
}

// ---------------------------------------------------------------------------
// Charges: Q(r) = int_{S_{t,r}} (x^i / r) F_{0i} dS, extrapolated in 1/r.

struct ChargeReport {
    std::vector<double> radii, sphere_charge;
    double extrapolated = 0.0;
    double third_radius_gap = 0.0;  // |predicted - measured| at the third radius
    bool consistent = true;
    std::string note;
};

template <class P>
double sphere_charge(const P& F, double t, double r, int degree = 23) {
    const SphereRule sr = sphere_rule(degree);
    double q = 0.0;
    for (std::size_t k = 0; k < sr.n.size(); ++k) q += sr.w[k] * dot(F(t, sr.n[k] * r).E, sr.n[k]);
    return q * r * r;
}

template <class P>
ChargeReport total_charge(const P& F, double t, const std::vector<double>& radii, int degree = 23) {
    if (radii.size() < 2) throw std::invalid_argument("total_charge needs at least two radii");
    ChargeReport rep;
    rep.radii = radii;
    for (double r : radii) rep.sphere_charge.push_back(sphere_charge(F, t, r, degree));
    const double r1 = radii[0], r2 = radii[1], q1 = rep.sphere_charge[0], q2 = rep.sphere_charge[1];
    rep.extrapolated = (r2 * q2 - r1 * q1) / (r2 - r1);
    if (radii.size() > 2) {
        const double c = (q1 - rep.extrapolated) * r1;  // Q(r) ~ Q_inf + c / r
        const double pred = rep.extrapolated + c / radii[2];
        rep.third_radius_gap = std::abs(pred - rep.sphere_charge[2]);
        rep.consistent = rep.third_radius_gap <= 1e-4 * std::abs(rep.extrapolated) + 1e-8;
        if (!rep.consistent) rep.note = "third radius disagrees with the 1/r extrapolation";
    }
    return rep;
}

// Grid data: warns when the largest sphere comes within two cells of a wall.
inline ChargeReport total_charge(const FieldGrid& f, const std::vector<double>& radii, int degree = 23) {
    ChargeReport rep = total_charge([&f](double, const Vec3& x) { return f.sample(x); }, f.time, radii, degree);
    const double half = 0.5 * f.geom.extent();
    const double rmax = *std::max_element(radii.begin(), radii.end());
    const Vec3 c = f.geom.center();
    if (norm(c) > 1e-12 || rmax > half - 2.0 * f.geom.h) rep.note += (rep.note.empty() ? "" : "; ") + std::string("radii close to the grid boundary");
    return rep;
}

struct ChargelessReport {
    double field_scale = 0.0;                            // charge scale of F
    double base_charge = 0.0;
    std::vector<std::pair<std::string, double>> charges;  // per Z, extrapolated
    double worst = 0.0;
    bool pass(double tol = 1e-6) const { return worst <= tol * field_scale; }
};

template <class P>
ChargelessReport chargeless_derivative_check(const P& F, double t, const std::vector<double>& radii, int degree = 23) {
    ChargelessReport rep;
    rep.base_charge = total_charge(F, t, radii, degree).extrapolated;
    // r^2 |F| root-mean-square over the first sphere, times 4 pi.
    const SphereRule sr = sphere_rule(degree);
    double s = 0.0;
    for (std::size_t k = 0; k < sr.n.size(); ++k) s += sr.w[k] * field_norm2(F(t, sr.n[k] * radii[0]));
    rep.field_scale = std::sqrt(s / (4.0 * pi)) * radii[0] * radii[0] * 4.0 * pi;
    for (auto z : kAllFields) {
        const auto LF = lie_derivative({z}, F);
        const double q = total_charge(LF, t, radii, degree).extrapolated;
        rep.charges.emplace_back(std::string(field_name(z)), q);
        rep.worst = std::max(rep.worst, std::abs(q));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Pointwise field bounds against E_2 and E_2^k.

struct PointwiseBoundReport {
    double E2 = 0.0, E2k = 0.0;
    double ratio_rho_sigma = 0.0, ratio_alpha_bar = 0.0, ratio_alpha = 0.0;
    std::size_t samples = 0, skipped = 0;
    std::string binding;
};

template <class P>
PointwiseBoundReport pointwise_field_bound_check(const P& F, double t, const std::vector<Vec3>& pts, int k,
                                                 const FieldEnergyOptions& opt, double j_term = 0.0,
                                                 double r_excl = 0.0, int order = 2) {
    PointwiseBoundReport rep;
    std::vector<std::vector<FieldId>> gammas{{}};
    for (int q = 1; q <= order; ++q) {
        std::vector<std::vector<FieldId>> next;
        for (const auto& g : gammas)
            if (int(g.size()) == q - 1)
                for (auto z : kAllFields) {
                    auto n = g;
                    n.push_back(z);
                    next.push_back(n);
                }
        gammas.insert(gammas.end(), next.begin(), next.end());
    }
    for (const auto& g : gammas) {
        const auto LF = lie_derivative(g, F);
        rep.E2 += field_energy_K0(LF, t, opt).total;
        rep.E2k += field_energy_dt_k(LF, t, k, opt);
    }
    for (const auto& x : pts) {
        if (norm(x) <= r_excl) {
            ++rep.skipped;
            continue;
        }
        const SpacetimePoint p{t, x};
        const auto c = null_decompose(F(t, x), p);
        const double tp = p.tau_plus(), tm = p.tau_minus();
        rep.ratio_rho_sigma = std::max(rep.ratio_rho_sigma, (std::abs(c.rho) + std::abs(c.sigma)) * tp * tp * std::sqrt(tm) / std::sqrt(rep.E2));
        rep.ratio_alpha_bar = std::max(rep.ratio_alpha_bar, std::sqrt(c.alpha_bar_norm2()) * tp * std::pow(tm, 1.5) /
                                                                (std::sqrt(rep.E2k) * std::pow(std::log(1.0 + tm), 0.5 * k)));
        rep.ratio_alpha = std::max(rep.ratio_alpha, std::sqrt(c.alpha_norm2()) * std::pow(tp, 2.5) / (std::sqrt(rep.E2) + j_term));
        ++rep.samples;
    }
    const double m = std::max({rep.ratio_rho_sigma, rep.ratio_alpha_bar, rep.ratio_alpha});
    rep.binding = m == rep.ratio_alpha_bar ? "alpha_bar" : (m == rep.ratio_alpha ? "alpha" : "rho_sigma");
    return rep;
}

// ---------------------------------------------------------------------------
// Weighted initial norms.

struct InitialNorms {
    std::vector<double> f_by_order;  // index = |beta| + |kappa|
    std::vector<double> F_by_order;  // index = |gamma|
    double f_total = 0.0, F_total = 0.0;
    double effective_eps() const { return f_total + F_total; }
};

struct InitialNormOptions {
    int x_nodes = 10, v_radial = 8, v_degree = 15;
    double x_extent = 5.0;
    double r_max = 20.0;
    int F_panels = 10, F_nodes = 6, F_degree = 15;
};

namespace detail {
// All multi-indices (as ordered lists of axes 0..n-1, nondecreasing) of order q.
inline void multi_indices(int n, int q, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (int(cur.size()) == q) {
        out.push_back(cur);
        return;
    }
    for (int a = start; a < n; ++a) {
        cur.push_back(a);
        multi_indices(n, q, a, cur, out);
        cur.pop_back();
    }
}

// Mixed partial of a scalar function of 6 variables by nested duals.
template <int Depth, class Fn, class S>
S partial6(const Fn& f, const int* axes, int count, const std::array<S, 6>& y) {
    if (count == 0) return f(y);
    if constexpr (Depth == 0) {
        throw CapabilityError("derivative order too high");
    } else {
        using D = Dual<S>;
        std::array<D, 6> yd;
        for (int i = 0; i < 6; ++i) yd[i] = D(y[i], S(i == axes[0] ? 1.0 : 0.0));
        return partial6<Depth - 1>(f, axes + 1, count - 1, yd).b;
    }
}
}  // namespace detail

template <class P>
InitialNorms initial_norms(const DensitySpec& spec, const P* F0, int N, const InitialNormOptions& opt = {}) {
    if (N > kMaxOrder) throw CapabilityError("initial norms support derivative order <= 3");
    InitialNorms out;
    out.f_by_order.assign(N + 1, 0.0);
    out.F_by_order.assign(N + 1, 0.0);
    if (!spec.components.empty()) {
        Vec3 lo{{1e300, 1e300, 1e300}}, hi{{-1e300, -1e300, -1e300}};
        double vmax = spec.v_min;
        for (const auto& c : spec.components) {
            for (int i = 0; i < 3; ++i) {
                lo[i] = std::min(lo[i], c.x_center[i] - opt.x_extent * c.x_width[i]);
                hi[i] = std::max(hi[i], c.x_center[i] + opt.x_extent * c.x_width[i]);
            }
            vmax = std::max(vmax, c.v_shell + spec.v_extent * c.v_width);
        }
        std::array<Rule1D, 3> xr;
        for (int i = 0; i < 3; ++i) xr[i] = gauss_legendre(opt.x_nodes, lo[i], hi[i]);
        const VelocityRule vr = velocity_rule(spec.v_min, vmax, opt.v_radial, opt.v_degree);
        std::vector<std::vector<std::vector<int>>> idx(N + 1);
        for (int q = 0; q <= N; ++q) {
            std::vector<int> cur;
            detail::multi_indices(6, q, 0, cur, idx[q]);
        }
        auto f = [&spec](const auto& y) {
            using S = std::decay_t<decltype(y[0])>;
            return spec(Vec3T<S>{{y[0], y[1], y[2]}}, Vec3T<S>{{y[3], y[4], y[5]}});
        };
        const std::size_t nx = std::size_t(opt.x_nodes) * opt.x_nodes * opt.x_nodes;
        std::vector<std::vector<double>> part(nx, std::vector<double>(N + 1, 0.0));
        parallel_for(nx, [&](std::size_t ix) {
            const int i0 = int(ix / (opt.x_nodes * opt.x_nodes)), i1 = int(ix / opt.x_nodes % opt.x_nodes),
                      i2 = int(ix % opt.x_nodes);
            const Vec3 x{{xr[0].x[i0], xr[1].x[i1], xr[2].x[i2]}};
            const double wx = xr[0].w[i0] * xr[1].w[i1] * xr[2].w[i2];
            for (std::size_t m = 0; m < vr.v.size(); ++m) {
                const std::array<double, 6> y{x[0], x[1], x[2], vr.v[m][0], vr.v[m][1], vr.v[m][2]};
                for (int q = 0; q <= N; ++q)
                    for (const auto& ax : idx[q]) {
                        int nb = 0;
                        for (int a : ax) nb += a < 3;
                        const double d = detail::partial6<kMaxOrder>(f, ax.data(), q, y);
                        part[ix][q] += wx * vr.w[m] * std::pow(1.0 + norm(x), nb + 2) *
                                       std::pow(1.0 + norm(vr.v[m]), q - nb) * std::abs(d);
                    }
            }
        });
        for (const auto& p : part)
            for (int q = 0; q <= N; ++q) out.f_by_order[q] += p[q];
    }
    if (F0) {
        const BallRule b = ball_rule(0.0, opt.r_max, opt.F_panels, opt.F_nodes, opt.F_degree);
        for (int q = 0; q <= N; ++q) {
            std::vector<std::vector<int>> idx;
            std::vector<int> cur;
            detail::multi_indices(3, q, 0, cur, idx);
            for (const auto& ax : idx)
                for (std::size_t k = 0; k < b.x.size(); ++k) {
                    double s2 = 0.0;
                    for (int comp = 0; comp < 6; ++comp) {
                        auto fc = [&](const auto& y) {
                            using S = std::decay_t<decltype(y[0])>;
                            const auto G = (*F0)(S(0.0), Vec3T<S>{{y[0], y[1], y[2]}});
                            return comp < 3 ? G.E[comp] : G.B[comp - 3];
                        };
                        const std::array<double, 6> y{b.x[k][0], b.x[k][1], b.x[k][2], 0.0, 0.0, 0.0};
                        const double d = detail::partial6<kMaxOrder>(fc, ax.data(), q, y);
                        s2 += d * d;
                    }
                    out.F_by_order[q] += b.w[k] * std::pow(1.0 + norm(b.x[k]), 2 * q + 2) * s2;
                }
        }
    }
    for (double v : out.f_by_order) out.f_total += v;
    for (double v : out.F_by_order) out.F_total += v;
    return out;
}

// ---------------------------------------------------------------------------
// Velocity floor.

struct DeltaK {
    double delta = 0.05, K = 1.1;
    // 4 delta <= 1 + delta <= K < pi/(4 sqrt 2) t0^(1/4) and 2^(-5/2) K^2 - delta > 2 delta,
    // checked with the smallest admissible t0 = 22.
    bool admissible(double t0 = 22.0) const {
        return 4.0 * delta <= 1.0 + delta && 1.0 + delta <= K && K < pi / (4.0 * std::sqrt(2.0)) * std::pow(t0, 0.25) &&
               std::pow(2.0, -2.5) * K * K - delta > 2.0 * delta && delta > 0.0;
    }
};

struct FieldAudit {
    double max_F_ratio = 0.0;    // |F| tau+ tau- / sqrt(eps)
    double max_rho_ratio = 0.0;  // |rho| tau+^(3/2) / sqrt(eps)
    std::size_t samples = 0;
    bool pass() const { return max_F_ratio <= 1.0 && max_rho_ratio <= 1.0; }
};

template <class P>
FieldAudit audit_decay_bounds(const P& F, double eps, std::size_t n = 20000, unsigned seed = 5, double t_max = 2000.0) {
    FieldAudit a;
    if (eps <= 0.0) return a;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::normal_distribution<double> nd;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = ud(rng) < 0.2 ? t_max * ud(rng) : std::pow(10.0, -2.0 + (std::log10(t_max) + 2.0) * ud(rng));
        Vec3 d{{nd(rng), nd(rng), nd(rng)}};
        double r = ud(rng) < 0.5 ? std::abs(t + (ud(rng) - 0.5) * 20.0) : std::pow(10.0, -3.0 + 6.5 * ud(rng));
        if (norm(d) == 0.0) continue;
        const Vec3 x = d * (r / norm(d));
        const SpacetimePoint p{t, x};
        const TwoForm G = F(t, x);
        a.max_F_ratio = std::max(a.max_F_ratio, std::sqrt(field_norm2(G)) * p.tau_plus() * p.tau_minus() / std::sqrt(eps));
        if (r > 0.0)
            a.max_rho_ratio = std::max(a.max_rho_ratio, std::abs(dot(G.E, x / r)) * std::pow(p.tau_plus(), 1.5) / std::sqrt(eps));
        ++a.samples;
    }
    return a;
}

struct FloorTrajectoryStats {
    double min_speed = 0.0;
    bool crossed = false;  // t1 exists
    double frac_A = 0.0, frac_B = 0.0, frac_C = 0.0;
};

struct FloorStudyReport {
    double eps = 0.0;
    std::size_t trajectories = 0;
    double horizon = 0.0, dt = 0.0;
    DeltaK dk;
    FieldAudit audit;
    double ensemble_min_speed = 0.0;
    std::size_t crossings = 0;
    double mean_frac_A = 0.0, mean_frac_B = 0.0, mean_frac_C = 0.0;
    double halved_dt_gap = 0.0;  // max |min|V|(dt) - min|V|(dt/2)| over the oracle subset
    std::size_t oracle_count = 0;
};

struct FloorOptions {
    std::size_t trajectories = 1000;
    double horizon = 1000.0;
    double dt = 0.1;
    double speed0 = 3.0;
    double ball_radius = 2.0;
    DeltaK dk;
    std::size_t oracle_count = 20;
    unsigned seed = 99;
    int record_stride = 10;
    double diag_start = 1.0;  // sets are evaluated on s >= diag_start
};

inline std::vector<Particle> floor_initial_particles(const FloorOptions& opt) {
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::vector<Particle> ps;
    while (ps.size() < opt.trajectories) {
        Vec3 a{{nd(rng), nd(rng), nd(rng)}}, b{{nd(rng), nd(rng), nd(rng)}};
        if (norm(a) < 1e-6 || norm(b) < 1e-6) continue;
        const Vec3 X = a * (opt.ball_radius * std::cbrt(ud(rng)) / norm(a));
        const Vec3 V = b * (opt.speed0 / norm(b));
        ps.push_back({X, V, 1.0, 1.0});
    }
    return ps;
}

// Time fractions of A_delta, B_{2K} and C = complement(A_delta) cap B_{4K}
// over the recorded samples.
inline FloorTrajectoryStats floor_stats(const Trajectory& tr, const DeltaK& dk, double diag_start) {
    FloorTrajectoryStats st;
    st.min_speed = tr.min_speed;
    st.crossed = tr.t1.has_value();
    std::size_t n = 0, a = 0, b = 0, c = 0;
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        const double s = tr.t[k];
        if (s < diag_start) continue;
        const double q = std::pow(s, 0.25);
        const double dev = std::abs(s - norm(tr.X[k]));
        const double ang = norm(tr.V[k] / norm(tr.V[k]) - tr.X[k] / s);
        const bool inA = dev >= dk.delta * q;
        a += inA;
        b += ang > 2.0 * dk.K / q;
        c += !inA && ang > 4.0 * dk.K / q;
        ++n;
    }
    if (n) {
        st.frac_A = double(a) / n;
        st.frac_B = double(b) / n;
        st.frac_C = double(c) / n;
    }
    return st;
}

template <class P>
FloorStudyReport velocity_floor_study(const P& F, double eps, const FloorOptions& opt, bool audit = true) {
    FloorStudyReport rep;
    rep.eps = eps;
    rep.trajectories = opt.trajectories;
    rep.horizon = opt.horizon;
    rep.dt = opt.dt;
    rep.dk = opt.dk;
    if (!opt.dk.admissible()) throw ConfigError("(delta, K) pair violates the admissibility constraints");
    if (audit) {
        rep.audit = audit_decay_bounds(F, eps);
        if (!rep.audit.pass()) throw ConfigError("model field fails the decay-bound audit; refusing the study");
    }
    const auto ps = floor_initial_particles(opt);
    std::vector<FloorTrajectoryStats> stats(ps.size());
    IntegrationOptions io;
    io.record_stride = opt.record_stride;
    parallel_for(ps.size(), [&](std::size_t k) {
        stats[k] = floor_stats(integrate_characteristics(F, ps[k], opt.horizon, opt.dt, io), opt.dk, opt.diag_start);
    });
    rep.ensemble_min_speed = std::numeric_limits<double>::infinity();
    for (const auto& s : stats) {
        rep.ensemble_min_speed = std::min(rep.ensemble_min_speed, s.min_speed);
        rep.crossings += s.crossed;
        rep.mean_frac_A += s.frac_A / stats.size();
        rep.mean_frac_B += s.frac_B / stats.size();
        rep.mean_frac_C += s.frac_C / stats.size();
    }
    rep.oracle_count = std::min(opt.oracle_count, ps.size());
    IntegrationOptions end_only;
    end_only.record_stride = 0;
    std::vector<double> gaps(rep.oracle_count);
    parallel_for(rep.oracle_count, [&](std::size_t k) {
        const auto fine = integrate_characteristics(F, ps[k], opt.horizon, 0.5 * opt.dt, end_only);
        gaps[k] = std::abs(fine.min_speed - stats[k].min_speed);
    });
    for (double g : gaps) rep.halved_dt_gap = std::max(rep.halved_dt_gap, g);
    return rep;
}

}  // namespace vnl

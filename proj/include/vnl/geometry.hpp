#pragma once
// Null coordinates, null frames, electromagnetic 2-forms, their null
// decomposition, Hodge dual, stress-energy tensor and discrete Maxwell
// residuals in both the divergence and the exterior-derivative forms.

#include <algorithm>
#include <cmath>
#include <vector>

#include "core.hpp"

namespace vnl {

struct SpacetimePoint {
    double t = 0.0;
    Vec3 x{};

    double r() const { return norm(x); }
    double u() const { return t - r(); }
    double ubar() const { return t + r(); }
    double tau_minus() const { return std::sqrt(1.0 + u() * u()); }
    double tau_plus() const { return std::sqrt(1.0 + ubar() * ubar()); }
};

struct NullCoords {
    double u, ubar, tau_minus, tau_plus;
};

inline NullCoords null_coords(const SpacetimePoint& p) {
    const double u = p.u(), ub = p.ubar();
    return {u, ub, std::sqrt(1.0 + u * u), std::sqrt(1.0 + ub * ub)};
}

template <class T>
struct NullFrameT {
    Vec4T<T> L, Lbar;   // contravariant components
    Vec3T<T> n, e1, e2;  // radial and sphere-tangent unit vectors
};
using NullFrame = NullFrameT<double>;

inline constexpr double kPoleThreshold = 1e-8;

// e1 = normalize(z x n), e2 = n x e1; near the z axis e1 falls back to the
// x axis made orthogonal to n.
template <class T>
NullFrameT<T> null_frame(const Vec3T<T>& x) {
    const T r = norm(x);
    if (!(value_of(r) > 0.0)) throw DomainError("frame undefined at spatial origin");
    NullFrameT<T> f;
    f.n = x / r;
    const Vec3T<T> zhat{{T(0.0), T(0.0), T(1.0)}};
    Vec3T<T> zxn = cross(zhat, f.n);
    const T s = norm(zxn);
    if (value_of(s) > kPoleThreshold) {
        f.e1 = zxn / s;
        f.e2 = cross(f.n, f.e1);
    } else {
        // x axis projected off n; at the south pole e2 comes out as -y
        const Vec3T<T> ex{{T(1.0), T(0.0), T(0.0)}};
        const Vec3T<T> p = ex - f.n * f.n[0];
        f.e1 = p / norm(p);
        f.e2 = cross(f.n, f.e1);
    }
    f.L = {T(1.0), f.n[0], f.n[1], f.n[2]};
    f.Lbar = {T(1.0), -f.n[0], -f.n[1], -f.n[2]};
    return f;
}

template <class T>
Vec4T<T> spatial4(const Vec3T<T>& v) { return {T(0.0), v[0], v[1], v[2]}; }

// ---------------------------------------------------------------------------
// 2-forms stored as (E, B) with F_{0i} = E_i and F_{ij} = -eps_{ijk} B_k.
// The second relation is the one consistent with B^i = -(*F)_{0i} under
// eps_{0123} = +1; the unit tests check it against a brute-force dual.

template <class T>
struct TwoFormT {
    Vec3T<T> E{}, B{};

    Mat4T<T> components() const {
        Mat4T<T> F{};
        for (auto& row : F) row.fill(T(0.0));
        for (int i = 0; i < 3; ++i) {
            F[0][i + 1] = E[i];
            F[i + 1][0] = -E[i];
        }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                T s(0.0);
                for (int k = 0; k < 3; ++k) {
                    const int e = levi_civita3(i, j, k);
                    if (e != 0) s = s - double(e) * B[k];
                }
                F[i + 1][j + 1] = s;
            }
        return F;
    }

    static TwoFormT from_components(const Mat4T<T>& F) {
        TwoFormT out;
        for (int i = 0; i < 3; ++i) out.E[i] = F[0][i + 1];
        out.B[0] = -F[2][3];
        out.B[1] = -F[3][1];
        out.B[2] = -F[1][2];
        return out;
    }

    T operator()(const Vec4T<T>& X, const Vec4T<T>& Y) const {
        const auto F = components();
        T s(0.0);
        for (int m = 0; m < 4; ++m)
            for (int n = 0; n < 4; ++n) s = s + F[m][n] * X[m] * Y[n];
        return s;
    }
};
using TwoForm = TwoFormT<double>;

template <class T> TwoFormT<T> operator+(const TwoFormT<T>& a, const TwoFormT<T>& b) { return {a.E + b.E, a.B + b.B}; }
template <class T> TwoFormT<T> operator-(const TwoFormT<T>& a, const TwoFormT<T>& b) { return {a.E - b.E, a.B - b.B}; }
inline TwoForm operator*(double s, const TwoForm& a) { return {a.E * s, a.B * s}; }

template <class T>
TwoForm values_of(const TwoFormT<T>& F) { return {values_of(F.E), values_of(F.B)}; }

// Sum of squares of the six independent Cartesian components.
inline double field_norm2(const TwoForm& F) { return dot(F.E, F.E) + dot(F.B, F.B); }

template <class T>
struct NullComponentsT {
    std::array<T, 2> alpha{}, alpha_bar{};
    T rho{}, sigma{};

    T alpha_norm2() const { return alpha[0] * alpha[0] + alpha[1] * alpha[1]; }
    T alpha_bar_norm2() const { return alpha_bar[0] * alpha_bar[0] + alpha_bar[1] * alpha_bar[1]; }
    // Equals |E|^2 + |B|^2 for the reconstructed form.
    T frame_norm2() const { return rho * rho + sigma * sigma + 0.5 * (alpha_norm2() + alpha_bar_norm2()); }
};
using NullComponents = NullComponentsT<double>;

template <class T>
NullComponentsT<T> null_decompose(const TwoFormT<T>& F, const NullFrameT<T>& fr) {
    const auto e1 = spatial4(fr.e1), e2 = spatial4(fr.e2);
    NullComponentsT<T> c;
    c.alpha = {F(e1, fr.L), F(e2, fr.L)};
    c.alpha_bar = {F(e1, fr.Lbar), F(e2, fr.Lbar)};
    c.rho = 0.5 * F(fr.L, fr.Lbar);
    c.sigma = F(e1, e2);
    return c;
}

template <class T>
NullComponentsT<T> null_decompose(const TwoFormT<T>& F, const Vec3T<T>& x) {
    return null_decompose(F, null_frame(x));
}

inline NullComponents null_decompose(const TwoForm& F, const SpacetimePoint& p) { return null_decompose(F, null_frame(p.x)); }

// Inverse of null_decompose for a fixed frame.
template <class T>
TwoFormT<T> reconstruct(const NullComponentsT<T>& c, const NullFrameT<T>& fr) {
    const T En = -c.rho, Bn = -c.sigma;
    const T E1 = -0.5 * (c.alpha[0] + c.alpha_bar[0]);
    const T E2 = -0.5 * (c.alpha[1] + c.alpha_bar[1]);
    const T B1 = 0.5 * (c.alpha_bar[1] - c.alpha[1]);
    const T B2 = 0.5 * (c.alpha[0] - c.alpha_bar[0]);
    TwoFormT<T> F;
    F.E = fr.n * En + fr.e1 * E1 + fr.e2 * E2;
    F.B = fr.n * Bn + fr.e1 * B1 + fr.e2 * B2;
    return F;
}

// (*F)_{mu nu} = 1/2 F^{lambda sigma} eps_{lambda sigma mu nu}
template <class T>
TwoFormT<T> hodge_dual(const TwoFormT<T>& F) {
    const auto Fl = F.components();
    Mat4T<T> D{};
    for (auto& row : D) row.fill(T(0.0));
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n)
            for (int l = 0; l < 4; ++l)
                for (int s = 0; s < 4; ++s) {
                    const int e = levi_civita4(l, s, m, n);
                    if (e == 0) continue;
                    D[m][n] = D[m][n] + 0.5 * double(e) * eta_diag(l) * eta_diag(s) * Fl[l][s];
                }
    return TwoFormT<T>::from_components(D);
}

// T_{mu nu} = F_{mu b} F_nu^b - 1/4 eta_{mu nu} F_{ab} F^{ab}
inline Mat4 stress_energy(const TwoForm& F) {
    const auto f = F.components();
    double F2 = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) F2 += eta_diag(a) * eta_diag(b) * f[a][b] * f[a][b];
    Mat4 T{};
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) {
            double s = 0.0;
            for (int b = 0; b < 4; ++b) s += f[m][b] * f[n][b] * eta_diag(b);
            T[m][n] = s - 0.25 * eta(m, n) * F2;
        }
    return T;
}

inline double contract(const Mat4& T, const Vec4& X, const Vec4& Y) {
    double s = 0.0;
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) s += T[m][n] * X[m] * Y[n];
    return s;
}

inline double trace(const Mat4& T) {
    double s = 0.0;
    for (int m = 0; m < 4; ++m) s += eta_diag(m) * T[m][m];
    return s;
}

// ---------------------------------------------------------------------------
// Fields sampled on a uniform (t, x, y, z) lattice.

struct SampledField4 {
    std::array<int, 4> n{};
    std::array<double, 4> origin{}, h{};
    std::vector<TwoForm> F;
    std::vector<Vec4> J;  // covariant J_nu

    std::size_t size() const { return std::size_t(n[0]) * n[1] * n[2] * n[3]; }
    std::size_t index(int it, int ix, int iy, int iz) const {
        return ((std::size_t(it) * n[1] + ix) * n[2] + iy) * n[3] + iz;
    }
    std::array<double, 4> coord(const std::array<int, 4>& i) const {
        return {origin[0] + i[0] * h[0], origin[1] + i[1] * h[1], origin[2] + i[2] * h[2], origin[3] + i[3] * h[3]};
    }
};

// Samples an analytic provider F(t, x) and a covariant current J(t, x).
template <class FieldFn, class CurrentFn>
SampledField4 sample_field4(const FieldFn& field, const CurrentFn& current, std::array<double, 4> origin,
                            std::array<double, 4> h, std::array<int, 4> n) {
    SampledField4 s;
    s.n = n;
    s.origin = origin;
    s.h = h;
    s.F.resize(s.size());
    s.J.resize(s.size());
    for (int a = 0; a < n[0]; ++a)
        for (int b = 0; b < n[1]; ++b)
            for (int c = 0; c < n[2]; ++c)
                for (int d = 0; d < n[3]; ++d) {
                    const auto x = s.coord({a, b, c, d});
                    const Vec3 xs{{x[1], x[2], x[3]}};
                    const auto k = s.index(a, b, c, d);
                    s.F[k] = field(x[0], xs);
                    s.J[k] = current(x[0], xs);
                }
    return s;
}

// Second-order first derivative along one axis of a lattice: centred in the
// interior, one-sided three-point at the ends.
template <class Get>
double lattice_derivative(const Get& get, int i, int n, double h) {
    if (n < 3) throw ShapeError("need at least 3 points per axis");
    if (i == 0) return (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h);
    if (i == n - 1) return (3.0 * get(n - 1) - 4.0 * get(n - 2) + get(n - 3)) / (2.0 * h);
    return (get(i + 1) - get(i - 1)) / (2.0 * h);
}

struct MaxwellResidual {
    double primal_l2 = 0.0, primal_max = 0.0;  // div F - J and div *F
    double dual_l2 = 0.0, dual_max = 0.0;      // dF and d*F - eps J
};

namespace detail {
inline std::array<Mat4, 4> lattice_gradient(const SampledField4& s, const std::vector<Mat4>& comp,
                                            const std::array<int, 4>& i) {
    std::array<Mat4, 4> d{};
    for (int axis = 0; axis < 4; ++axis) {
        for (int m = 0; m < 4; ++m)
            for (int nn = 0; nn < 4; ++nn) {
                auto get = [&](int k) {
                    auto j = i;
                    j[axis] = k;
                    return comp[s.index(j[0], j[1], j[2], j[3])][m][nn];
                };
                d[axis][m][nn] = lattice_derivative(get, i[axis], s.n[axis], s.h[axis]);
            }
    }
    return d;
}
}  // namespace detail

inline MaxwellResidual maxwell_residual(const SampledField4& s) {
    if (s.F.size() != s.size() || s.J.size() != s.size()) throw ShapeError("field and current grids differ");
    for (int a = 0; a < 4; ++a)
        if (s.n[a] < 3) throw ShapeError("need at least 3 points per axis");
    std::vector<Mat4> f(s.size()), fd(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        f[k] = s.F[k].components();
        fd[k] = hodge_dual(s.F[k]).components();
    }
    MaxwellResidual out;
    double sp = 0.0, sd = 0.0;
    std::size_t count = 0;
    static constexpr int triples[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
    for (int a = 0; a < s.n[0]; ++a)
        for (int b = 0; b < s.n[1]; ++b)
            for (int c = 0; c < s.n[2]; ++c)
                for (int d = 0; d < s.n[3]; ++d) {
                    const std::array<int, 4> i{a, b, c, d};
                    const auto k = s.index(a, b, c, d);
                    const auto g = detail::lattice_gradient(s, f, i);
                    const auto gd = detail::lattice_gradient(s, fd, i);
                    Vec4 Jup = s.J[k];
                    Jup[0] = -Jup[0];
                    for (int nu = 0; nu < 4; ++nu) {
                        double div = 0.0, divd = 0.0;
                        for (int mu = 0; mu < 4; ++mu) {
                            div += eta_diag(mu) * g[mu][mu][nu];
                            divd += eta_diag(mu) * gd[mu][mu][nu];
                        }
                        const double r1 = div - s.J[k][nu];
                        sp += r1 * r1 + divd * divd;
                        out.primal_max = std::max({out.primal_max, std::abs(r1), std::abs(divd)});
                    }
                    for (const auto& tr : triples) {
                        const int l = tr[0], m = tr[1], nn = tr[2];
                        const double cyc = g[l][m][nn] + g[m][nn][l] + g[nn][l][m];
                        double src = 0.0;
                        for (int kk = 0; kk < 4; ++kk) src += levi_civita4(l, m, nn, kk) * Jup[kk];
                        const double cycd = gd[l][m][nn] + gd[m][nn][l] + gd[nn][l][m] - src;
                        sd += cyc * cyc + cycd * cycd;
                        out.dual_max = std::max({out.dual_max, std::abs(cyc), std::abs(cycd)});
                    }
                    ++count;
                }
    out.primal_l2 = std::sqrt(sp / (8.0 * count));
    out.dual_l2 = std::sqrt(sd / (8.0 * count));
    return out;
}

}  // namespace vnl

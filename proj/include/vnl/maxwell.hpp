#pragma once
// Staggered-lattice Maxwell solver with perfectly conducting walls, discrete
// constraints, a Poisson solve for constraint-consistent initial data and
// closed-form reference fields.

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <cmath>
#include <string>

#include "core.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "parallel.hpp"

namespace vnl {

// E_i lives at edge midpoints, B_i at face centres, all at integer times.
// Every component array has (cells+1)^3 entries; entries beyond the
// staggered range are unused and stay zero.
struct FieldGrid {
    GridGeometry geom;
    std::array<Array3, 3> E, B;
    double time = 0.0;

    FieldGrid() = default;
    explicit FieldGrid(const GridGeometry& g) : geom(g) {
        for (auto& a : E) a = Array3(g.nodes());
        for (auto& a : B) a = Array3(g.nodes());
    }

    Vec3 edge_position(int comp, int i, int j, int k) const {
        return position(kEdgeStagger[comp], i, j, k);
    }
    Vec3 face_position(int comp, int i, int j, int k) const {
        return position(kFaceStagger[comp], i, j, k);
    }
    Vec3 position(const Stagger& s, int i, int j, int k) const {
        return geom.origin + Vec3{{(i + s[0]) * geom.h, (j + s[1]) * geom.h, (k + s[2]) * geom.h}};
    }

    // Valid index range of a staggered component: half-integer axes stop one short.
    static bool in_range(const Stagger& s, int cells, int i, int j, int k) {
        const std::array<int, 3> idx{i, j, k};
        for (int a = 0; a < 3; ++a)
            if (idx[a] < 0 || idx[a] > (s[a] > 0.0 ? cells - 1 : cells)) return false;
        return true;
    }

    TwoForm sample(const Vec3& x) const {
        TwoForm F;
        for (int c = 0; c < 3; ++c) {
            TrilinearStencil st;
            if (!trilinear_stencil(geom, kEdgeStagger[c], x, st))
                throw DomainError("sample point outside field grid at t=" + std::to_string(time));
            F.E[c] = interpolate(E[c], st);
            if (!trilinear_stencil(geom, kFaceStagger[c], x, st))
                throw DomainError("sample point outside field grid at t=" + std::to_string(time));
            F.B[c] = interpolate(B[c], st);
        }
        return F;
    }

    TwoForm operator()(double, const Vec3& x) const { return sample(x); }

    double energy() const {
        double s = 0.0;
        for (int c = 0; c < 3; ++c) {
            for (double v : E[c].data()) s += v * v;
            for (double v : B[c].data()) s += v * v;
        }
        return 0.5 * s * geom.h * geom.h * geom.h;
    }
};

template <class Provider>
FieldGrid field_from_provider(const Provider& F, const GridGeometry& g, double t) {
    FieldGrid out(g);
    out.time = t;
    const int n = g.nodes();
    parallel_for(std::size_t(n), [&](std::size_t ii) {
        const int i = static_cast<int>(ii);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int c = 0; c < 3; ++c) {
                    if (FieldGrid::in_range(kEdgeStagger[c], g.cells, i, j, k))
                        out.E[c](i, j, k) = F(t, out.edge_position(c, i, j, k)).E[c];
                    if (FieldGrid::in_range(kFaceStagger[c], g.cells, i, j, k))
                        out.B[c](i, j, k) = F(t, out.face_position(c, i, j, k)).B[c];
                }
    });
    return out;
}

namespace detail {

// B -= s * curl E on every face.
inline void faraday(FieldGrid& f, double s) {
    const int N = f.geom.cells;
    const double c = s / f.geom.h;
    auto &Ex = f.E[0], &Ey = f.E[1], &Ez = f.E[2];
    parallel_for(std::size_t(N + 1), [&](std::size_t ii) {
        const int i = static_cast<int>(ii);
        for (int j = 0; j <= N; ++j)
            for (int k = 0; k <= N; ++k) {
                if (j < N && k < N)
                    f.B[0](i, j, k) -= c * (Ez(i, j + 1, k) - Ez(i, j, k) - Ey(i, j, k + 1) + Ey(i, j, k));
                if (i < N && k < N)
                    f.B[1](i, j, k) -= c * (Ex(i, j, k + 1) - Ex(i, j, k) - Ez(i + 1, j, k) + Ez(i, j, k));
                if (i < N && j < N)
                    f.B[2](i, j, k) -= c * (Ey(i + 1, j, k) - Ey(i, j, k) - Ex(i, j + 1, k) + Ex(i, j, k));
            }
    });
}

// E += dt (curl B - J) on interior edges; tangential E on the walls stays 0.
inline void ampere(FieldGrid& f, const std::array<Array3, 3>* J, double dt) {
    const int N = f.geom.cells;
    const double c = dt / f.geom.h;
    auto &Bx = f.B[0], &By = f.B[1], &Bz = f.B[2];
    parallel_for(std::size_t(N + 1), [&](std::size_t ii) {
        const int i = static_cast<int>(ii);
        for (int j = 0; j <= N; ++j)
            for (int k = 0; k <= N; ++k) {
                if (i < N && j > 0 && j < N && k > 0 && k < N) {
                    const double curl = Bz(i, j, k) - Bz(i, j - 1, k) - By(i, j, k) + By(i, j, k - 1);
                    f.E[0](i, j, k) += c * curl - (J ? dt * (*J)[0](i, j, k) : 0.0);
                }
                if (j < N && i > 0 && i < N && k > 0 && k < N) {
                    const double curl = Bx(i, j, k) - Bx(i, j, k - 1) - Bz(i, j, k) + Bz(i - 1, j, k);
                    f.E[1](i, j, k) += c * curl - (J ? dt * (*J)[1](i, j, k) : 0.0);
                }
                if (k < N && i > 0 && i < N && j > 0 && j < N) {
                    const double curl = By(i, j, k) - By(i - 1, j, k) - Bx(i, j, k) + Bx(i, j - 1, k);
                    f.E[2](i, j, k) += c * curl - (J ? dt * (*J)[2](i, j, k) : 0.0);
                }
            }
    });
}

}  // namespace detail

inline double cfl_limit(const GridGeometry& g) { return g.h / std::sqrt(3.0); }

struct StepReport {
    double energy_before = 0.0, energy_after = 0.0;
    double work = 0.0;  // dt * sum J.E h^3 at the midpoint field
};

// Half Faraday, full Ampere with J at t + dt/2, half Faraday.
inline StepReport step_fields(FieldGrid& f, const std::array<Array3, 3>* J, double dt, double safety = 1.0) {
    const double lim = safety * cfl_limit(f.geom);
    if (!(dt > 0.0) || dt > lim)
        throw ConfigError("time step " + std::to_string(dt) + " violates the CFL bound; use dt <= " + std::to_string(lim));
    StepReport rep;
    rep.energy_before = f.energy();
    detail::faraday(f, 0.5 * dt);
    if (J) {
        const double vol = f.geom.h * f.geom.h * f.geom.h;
        std::array<Array3, 3> Eold = f.E;
        detail::ampere(f, J, dt);
        for (int c = 0; c < 3; ++c)
            for (std::size_t k = 0; k < Eold[c].size(); ++k)
                rep.work += dt * vol * (*J)[c].data()[k] * 0.5 * (Eold[c].data()[k] + f.E[c].data()[k]);
    } else {
        detail::ampere(f, nullptr, dt);
    }
    detail::faraday(f, 0.5 * dt);
    f.time += dt;
    rep.energy_after = f.energy();
    return rep;
}

// Discrete divergence of E at a node, backward differences of edge values.
inline double div_E(const FieldGrid& f, int i, int j, int k) {
    return (f.E[0](i, j, k) - f.E[0](i - 1, j, k) + f.E[1](i, j, k) - f.E[1](i, j - 1, k) + f.E[2](i, j, k) -
            f.E[2](i, j, k - 1)) /
           f.geom.h;
}

// Divergence of B at a cell centre.
inline double div_B(const FieldGrid& f, int i, int j, int k) {
    return (f.B[0](i + 1, j, k) - f.B[0](i, j, k) + f.B[1](i, j + 1, k) - f.B[1](i, j, k) + f.B[2](i, j, k + 1) -
            f.B[2](i, j, k)) /
           f.geom.h;
}

struct ResidualNorms {
    double l2 = 0.0, max = 0.0;
};

// div E - rho on interior nodes; L2 carries the h^3 volume factor.
inline ResidualNorms gauss_residual(const FieldGrid& f, const Array3& rho) {
    if (rho.n() != f.geom.nodes()) throw ShapeError("rho grid does not match field grid");
    ResidualNorms out;
    const int N = f.geom.cells;
    for (int i = 1; i < N; ++i)
        for (int j = 1; j < N; ++j)
            for (int k = 1; k < N; ++k) {
                const double r = div_E(f, i, j, k) - rho(i, j, k);
                out.l2 += r * r;
                out.max = std::max(out.max, std::abs(r));
            }
    out.l2 = std::sqrt(out.l2 * f.geom.h * f.geom.h * f.geom.h);
    return out;
}

inline ResidualNorms div_B_norms(const FieldGrid& f) {
    ResidualNorms out;
    const int N = f.geom.cells;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) {
                const double r = div_B(f, i, j, k);
                out.l2 += r * r;
                out.max = std::max(out.max, std::abs(r));
            }
    out.l2 = std::sqrt(out.l2 * f.geom.h * f.geom.h * f.geom.h);
    return out;
}

// Sum of div E h^3 over interior nodes: the enclosed charge seen by the field.
inline double enclosed_charge(const FieldGrid& f) {
    double q = 0.0;
    const int N = f.geom.cells;
    for (int i = 1; i < N; ++i)
        for (int j = 1; j < N; ++j)
            for (int k = 1; k < N; ++k) q += div_E(f, i, j, k);
    return q * f.geom.h * f.geom.h * f.geom.h;
}

struct PoissonOptions {
    bool allow_nonneutral = false;
    double neutral_tol = 1e-10;    // relative to sum |rho| h^3
    double residual_tol = 1e-12;   // absolute target for max |div E - rho|
};

// Solves Lap phi = -rho with phi = 0 on the walls and returns E = -grad phi
// on the edges. B is left at zero.
inline FieldGrid solve_initial_constraints(const Array3& rho, const GridGeometry& g, const PoissonOptions& opt = {}) {
    if (rho.n() != g.nodes()) throw ShapeError("rho grid does not match geometry");
    const int N = g.cells;
    const double vol = g.h * g.h * g.h;
    double q = 0.0, qabs = 0.0;
    for (int i = 1; i < N; ++i)
        for (int j = 1; j < N; ++j)
            for (int k = 1; k < N; ++k) {
                q += rho(i, j, k) * vol;
                qabs += std::abs(rho(i, j, k)) * vol;
            }
    if (!opt.allow_nonneutral && std::abs(q) > opt.neutral_tol * std::max(qabs, 1e-300))
        throw ConfigError("charge density violates the neutral hypothesis (net charge " + std::to_string(q) + ")");
    FieldGrid out(g);
    if (qabs == 0.0) return out;

    const int m = N - 1;
    auto id = [m](int i, int j, int k) { return ((i - 1) * m + (j - 1)) * m + (k - 1); };
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(std::size_t(m) * m * m * 7);
    Eigen::VectorXd b(std::size_t(m) * m * m);
    for (int i = 1; i < N; ++i)
        for (int j = 1; j < N; ++j)
            for (int k = 1; k < N; ++k) {
                const int r = id(i, j, k);
                trip.emplace_back(r, r, 6.0);
                const std::array<std::array<int, 3>, 6> nb{{{i - 1, j, k}, {i + 1, j, k}, {i, j - 1, k},
                                                              {i, j + 1, k}, {i, j, k - 1}, {i, j, k + 1}}};
                for (const auto& c : nb)
                    if (c[0] >= 1 && c[0] < N && c[1] >= 1 && c[1] < N && c[2] >= 1 && c[2] < N)
                        trip.emplace_back(r, id(c[0], c[1], c[2]), -1.0);
                b[r] = rho(i, j, k) * g.h * g.h;  // -Lap_h phi * h^2 = rho h^2
            }
    Eigen::SparseMatrix<double> A(b.size(), b.size());
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.compute(A);
    // Residual in div E units is |A phi - b| / h^2.
    cg.setTolerance(std::max(1e-15, opt.residual_tol * g.h * g.h / std::max(b.norm(), 1e-300)));
    cg.setMaxIterations(20 * m * 3);
    const Eigen::VectorXd phi_in = cg.solve(b);

    Array3 phi(g.nodes());
    for (int i = 1; i < N; ++i)
        for (int j = 1; j < N; ++j)
            for (int k = 1; k < N; ++k) phi(i, j, k) = phi_in[id(i, j, k)];
    for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j)
            for (int k = 0; k <= N; ++k) {
                if (i < N) out.E[0](i, j, k) = -(phi(i + 1, j, k) - phi(i, j, k)) / g.h;
                if (j < N) out.E[1](i, j, k) = -(phi(i, j + 1, k) - phi(i, j, k)) / g.h;
                if (k < N) out.E[2](i, j, k) = -(phi(i, j, k + 1) - phi(i, j, k)) / g.h;
            }
    return out;
}

// ---------------------------------------------------------------------------
// Closed-form providers. All are templated on the scalar so that they can be
// differentiated exactly with nested duals.

// Standing TM mode of the cube [0, L]^3 with conducting walls.
struct CavityMode {
    double L = 1.0;
    int mx = 1, my = 1;
    double amplitude = 1.0;

    double kx() const { return pi * mx / L; }
    double ky() const { return pi * my / L; }
    double omega() const { return std::hypot(kx(), ky()); }

    template <class T>
    TwoFormT<T> operator()(const T& t, const Vec3T<T>& x) const {
        const double w = omega();
        const T sx = sin(kx() * x[0]), cx = cos(kx() * x[0]);
        const T sy = sin(ky() * x[1]), cy = cos(ky() * x[1]);
        TwoFormT<T> F;
        F.E = {{T(0.0), T(0.0), amplitude * sx * sy * cos(w * t)}};
        F.B = {{-(amplitude * ky() / w) * sx * cy * sin(w * t), (amplitude * kx() / w) * cx * sy * sin(w * t), T(0.0)}};
        return F;
    }
};

// Plane wave travelling along k with electric polarisation e (e . k = 0).
struct PlaneWave {
    Vec3 k{{1.0, 0.0, 0.0}};
    Vec3 e{{0.0, 1.0, 0.0}};
    double phase = 0.0;

    template <class T>
    TwoFormT<T> operator()(const T& t, const Vec3T<T>& x) const {
        const double w = norm(k);
        const T s = cos(k[0] * x[0] + k[1] * x[1] + k[2] * x[2] - w * t + phase);
        const Vec3 b = cross(k, e) / w;
        TwoFormT<T> F;
        for (int i = 0; i < 3; ++i) {
            F.E[i] = e[i] * s;
            F.B[i] = b[i] * s;
        }
        return F;
    }
};

// Oscillating electric and magnetic point dipoles (Heaviside-Lorentz, c = 1),
// moments p(tau) = p cos(omega tau), m(tau) = m cos(omega tau), retarded
// time tau = t - r.
struct HertzianDipole {
    Vec3 p{{0.0, 0.0, 1.0}};
    Vec3 m{};
    double omega = 1.0;
    double r_min = 0.5;

    template <class T>
    TwoFormT<T> operator()(const T& t, const Vec3T<T>& x) const {
        const T r = norm(x);
        if (!(value_of(r) > r_min)) throw DomainError("dipole field requested inside the source exclusion radius");
        const Vec3T<T> n = x / r;
        const T tau = t - r;
        const T c = cos(omega * tau), s = sin(omega * tau);
        auto moments = [&](const Vec3& a, Vec3T<T>& q, Vec3T<T>& dq, Vec3T<T>& ddq) {
            for (int i = 0; i < 3; ++i) {
                q[i] = a[i] * c;
                dq[i] = -omega * a[i] * s;
                ddq[i] = -omega * omega * a[i] * c;
            }
        };
        // Electric-type fields of a moment a(tau).
        auto electric = [&](const Vec3& a, Vec3T<T>& E, Vec3T<T>& B) {
            Vec3T<T> q, dq, ddq;
            moments(a, q, dq, ddq);
            const T r2 = r * r, r3 = r2 * r;
            const T nq = dot(n, q), ndq = dot(n, dq);
            const double k = 1.0 / (4.0 * pi);
            for (int i = 0; i < 3; ++i) {
                E[i] = k * ((3.0 * n[i] * nq - q[i]) / r3 + (3.0 * n[i] * ndq - dq[i]) / r2);
            }
            const Vec3T<T> far = cross(n, cross(n, ddq));
            const Vec3T<T> b1 = cross(dq, n), b2 = cross(ddq, n);
            for (int i = 0; i < 3; ++i) {
                E[i] = E[i] + k * far[i] / r;
                B[i] = k * (b1[i] / r2 + b2[i] / r);
            }
        };
        TwoFormT<T> F;
        F.E = {{T(0.0), T(0.0), T(0.0)}};
        F.B = F.E;
        if (p != Vec3{}) electric(p, F.E, F.B);
        if (m != Vec3{}) {
            // Duality (E, B) -> (-B, E) maps the electric dipole onto the magnetic one.
            Vec3T<T> Em, Bm;
            electric(m, Em, Bm);
            F.E = F.E - Bm;
            F.B = F.B + Em;
        }
        return F;
    }
};

// Static point charge q at the origin, exterior of r_min.
struct CoulombExterior {
    double q = 1.0;
    double r_min = 0.5;

    template <class T>
    TwoFormT<T> operator()(const T&, const Vec3T<T>& x) const {
        const T r = norm(x);
        if (!(value_of(r) > r_min)) throw DomainError("Coulomb field requested inside the exclusion radius");
        const T k = (q / (4.0 * pi)) / (r * r * r);
        TwoFormT<T> F;
        F.E = {{k * x[0], k * x[1], k * x[2]}};
        F.B = {{T(0.0), T(0.0), T(0.0)}};
        return F;
    }
};

// Smooth decaying model 2-form: radial and azimuthal E, azimuthal B, all
// scaled by sqrt(eps) / ((1 + r^2)^(1/2) (1 + t^2 + r^2)). The coefficients
// keep |F| <= sqrt(eps)/(tau+ tau-) and |rho| <= sqrt(eps) tau+^(-3/2).
struct ModelDecayField {
    double eps = 1e-4;
    double radial = 0.4;
    double azimuthal_E = 0.2;
    double azimuthal_B = 0.2;
    bool magnetic_only = false;

    template <class T>
    TwoFormT<T> operator()(const T& t, const Vec3T<T>& x) const {
        const T r2 = dot(x, x);
        const T s = std::sqrt(eps) / (sqrt(1.0 + r2) * (1.0 + t * t + r2));
        const Vec3T<T> az{{-x[1], x[0], T(0.0)}};
        TwoFormT<T> F;
        for (int i = 0; i < 3; ++i) {
            F.E[i] = magnetic_only ? T(0.0) : s * (radial * x[i] + azimuthal_E * az[i]);
            F.B[i] = s * (azimuthal_B * az[i]);
        }
        return F;
    }
};

// F = dA for a Gaussian-localised oscillating potential, with the current
// J_nu = d^mu F_{mu nu} it sources. dF = 0 holds identically.
struct PotentialField {
    Vec4 amp{0.3, 0.5, -0.4, 0.2};
    Vec4 phase{0.1, 0.7, 1.3, 2.1};
    Vec3 center{{0.4, -0.3, 0.2}};  // off-origin so no null component vanishes identically
    double width = 1.0;
    double omega = 1.3;

    template <class T>
    Vec4T<T> potential(const T& t, const Vec3T<T>& x) const {
        const Vec3T<T> d{{x[0] - center[0], x[1] - center[1], x[2] - center[2]}};
        const T g = exp(-dot(d, d) / (width * width));
        Vec4T<T> A;
        for (int nu = 0; nu < 4; ++nu) A[nu] = amp[nu] * sin(omega * t + phase[nu]) * g;
        return A;
    }

    template <class T>
    Mat4T<T> components(const T& t, const Vec3T<T>& x) const {
        using D = Dual<T>;
        std::array<Vec4T<T>, 4> dA;  // dA[mu][nu] = d_mu A_nu
        for (int mu = 0; mu < 4; ++mu) {
            D td(t, T(mu == 0 ? 1.0 : 0.0));
            Vec3T<D> xd;
            for (int i = 0; i < 3; ++i) xd[i] = D(x[i], T(mu == i + 1 ? 1.0 : 0.0));
            const auto A = potential(td, xd);
            for (int nu = 0; nu < 4; ++nu) dA[mu][nu] = A[nu].b;
        }
        Mat4T<T> F;
        for (int mu = 0; mu < 4; ++mu)
            for (int nu = 0; nu < 4; ++nu) F[mu][nu] = dA[mu][nu] - dA[nu][mu];
        return F;
    }

    template <class T>
    TwoFormT<T> operator()(const T& t, const Vec3T<T>& x) const {
        return TwoFormT<T>::from_components(components(t, x));
    }

    // Covariant J_nu = eta^{mu mu} d_mu F_{mu nu}.
    Vec4 current(double t, const Vec3& x) const {
        using D = Dual<double>;
        Vec4 J{0.0, 0.0, 0.0, 0.0};
        for (int mu = 0; mu < 4; ++mu) {
            D td(t, mu == 0 ? 1.0 : 0.0);
            Vec3T<D> xd;
            for (int i = 0; i < 3; ++i) xd[i] = D(x[i], mu == i + 1 ? 1.0 : 0.0);
            const auto F = components(td, xd);
            for (int nu = 0; nu < 4; ++nu) J[nu] += eta_diag(mu) * F[mu][nu].b;
        }
        return J;
    }
};

}  // namespace vnl

#pragma once
// Poincare fields plus scaling, their complete lifts to phase space, Lie
// derivatives of 2-forms, the conformal multiplier and the conserved weights.

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"

namespace vnl {

enum class FieldId : int { d0, d1, d2, d3, r12, r13, r23, b01, b02, b03, S };

inline constexpr std::array<FieldId, 11> kAllFields{FieldId::d0,  FieldId::d1,  FieldId::d2,  FieldId::d3,
                                                    FieldId::r12, FieldId::r13, FieldId::r23, FieldId::b01,
                                                    FieldId::b02, FieldId::b03, FieldId::S};

inline constexpr std::array<std::string_view, 11> kFieldNames{"d0",  "d1",  "d2",  "d3",  "r12", "r13",
                                                              "r23", "b01", "b02", "b03", "S"};

inline std::string_view field_name(FieldId z) { return kFieldNames[static_cast<int>(z)]; }

inline FieldId parse_field(std::string_view s) {
    for (int i = 0; i < 11; ++i)
        if (kFieldNames[i] == s) return static_cast<FieldId>(i);
    throw ConfigError("unknown vector field '" + std::string(s) + "'");
}

inline bool is_poincare(FieldId z) { return z != FieldId::S; }

// Index pair (a, b) of a rotation r_ab or boost b_0b, spatial indices 1..3.
inline std::pair<int, int> field_indices(FieldId z) {
    switch (z) {
        case FieldId::r12: return {1, 2};
        case FieldId::r13: return {1, 3};
        case FieldId::r23: return {2, 3};
        case FieldId::b01: return {0, 1};
        case FieldId::b02: return {0, 2};
        case FieldId::b03: return {0, 3};
        default: return {-1, static_cast<int>(z)};
    }
}

// Composition Z_1 ^ Z_2 ^ ... acts as Z_1(Z_2(...)): the leftmost factor is
// applied last. `lifted` selects the complete lifts; S is its own lift.
struct SymmetryOp {
    std::vector<FieldId> factors;
    bool lifted = false;

    std::string to_string() const {
        std::string s = lifted ? "L:" : "";
        for (std::size_t i = 0; i < factors.size(); ++i) {
            if (i) s += '^';
            s += field_name(factors[i]);
        }
        return s;
    }

    static SymmetryOp parse(std::string_view s) {
        SymmetryOp op;
        if (s.starts_with("L:")) {
            op.lifted = true;
            s.remove_prefix(2);
        }
        while (!s.empty()) {
            const auto pos = s.find('^');
            op.factors.push_back(parse_field(s.substr(0, pos)));
            if (pos == std::string_view::npos) break;
            s.remove_prefix(pos + 1);
            if (s.empty()) throw ConfigError("dangling '^' in symmetry operator");
        }
        return op;
    }

    bool operator==(const SymmetryOp&) const = default;
};

// Contravariant components Z^mu at (t, x).
template <class T>
Vec4T<T> killing_vector(FieldId z, const T& t, const Vec3T<T>& x) {
    Vec4T<T> Z{T(0.0), T(0.0), T(0.0), T(0.0)};
    const T X[4] = {t, x[0], x[1], x[2]};
    switch (z) {
        case FieldId::d0: case FieldId::d1: case FieldId::d2: case FieldId::d3:
            Z[static_cast<int>(z)] = T(1.0);
            break;
        case FieldId::r12: case FieldId::r13: case FieldId::r23: {
            auto [i, j] = field_indices(z);  // x^i d_j - x^j d_i
            Z[j] = X[i];
            Z[i] = -X[j];
            break;
        }
        case FieldId::b01: case FieldId::b02: case FieldId::b03: {
            const int k = field_indices(z).second;  // t d_k + x^k d_t
            Z[k] = t;
            Z[0] = X[k];
            break;
        }
        case FieldId::S:
            for (int m = 0; m < 4; ++m) Z[m] = X[m];
            break;
    }
    return Z;
}

// D[mu][lambda] = d_mu Z^lambda (constant for every field of the family).
inline Mat4 killing_jacobian(FieldId z) {
    Mat4 D{};
    switch (z) {
        case FieldId::r12: case FieldId::r13: case FieldId::r23: {
            auto [i, j] = field_indices(z);
            D[i][j] = 1.0;
            D[j][i] = -1.0;
            break;
        }
        case FieldId::b01: case FieldId::b02: case FieldId::b03: {
            const int k = field_indices(z).second;
            D[0][k] = 1.0;
            D[k][0] = 1.0;
            break;
        }
        case FieldId::S:
            for (int m = 0; m < 4; ++m) D[m][m] = 1.0;
            break;
        default: break;
    }
    return D;
}

// Velocity part of the complete lift (zero for translations and S).
template <class T>
Vec3T<T> lift_velocity(FieldId z, const Vec3T<T>& v) {
    Vec3T<T> W{{T(0.0), T(0.0), T(0.0)}};
    switch (z) {
        case FieldId::r12: case FieldId::r13: case FieldId::r23: {
            auto [i, j] = field_indices(z);  // v^i d_{v^j} - v^j d_{v^i}
            W[j - 1] = v[i - 1];
            W[i - 1] = -v[j - 1];
            break;
        }
        case FieldId::b01: case FieldId::b02: case FieldId::b03: {
            const int k = field_indices(z).second;  // v^0 d_{v^k}
            W[k - 1] = norm(v);
            break;
        }
        default: break;
    }
    return W;
}

// ---------------------------------------------------------------------------
// Exact application through nested dual numbers. `g` is a generic callable
// g(t, x, v) returning the same scalar type it receives.

inline constexpr int kMaxOrder = 3;

template <int Depth, class G, class S>
S apply_chain(const FieldId* f, int count, bool lifted, const G& g, const S& t, const Vec3T<S>& x,
              const Vec3T<S>& v) {
    if (count == 0) return g(t, x, v);
    if constexpr (Depth == 0) {
        throw CapabilityError("composition deeper than supported order");
    } else {
        using D = Dual<S>;
        const auto Z = killing_vector(f[0], t, x);
        const Vec3T<S> W = lifted ? lift_velocity(f[0], v) : Vec3T<S>{{S(0.0), S(0.0), S(0.0)}};
        const D td(t, Z[0]);
        Vec3T<D> xd, vd;
        for (int i = 0; i < 3; ++i) {
            xd[i] = D(x[i], Z[i + 1]);
            vd[i] = D(v[i], W[i]);
        }
        return apply_chain<Depth - 1>(f + 1, count - 1, lifted, g, td, xd, vd).b;
    }
}

template <class G>
double apply_op(const SymmetryOp& op, const G& g, double t, const Vec3& x, const Vec3& v) {
    if (op.lifted && !(norm(v) > 0.0)) throw DomainError("lift undefined at v = 0");
    if (op.factors.size() > kMaxOrder) throw CapabilityError("at most 3 composed fields supported");
    return apply_chain<kMaxOrder>(op.factors.data(), static_cast<int>(op.factors.size()), op.lifted, g, t, x, v);
}

// Single field on a spacetime scalar g(t, x).
template <class G>
double apply_killing(FieldId z, const G& g, double t, const Vec3& x) {
    auto gp = [&g](const auto& tt, const auto& xx, const auto&) { return g(tt, xx); };
    const FieldId f[1] = {z};
    return apply_chain<1>(f, 1, false, gp, t, x, Vec3{{1.0, 0.0, 0.0}});
}

template <class G>
double apply_lift(FieldId z, const G& g, double t, const Vec3& x, const Vec3& v) {
    return apply_op(SymmetryOp{{z}, true}, g, t, x, v);
}

// ---------------------------------------------------------------------------
// Finite-difference application on double-valued callables. The step along
// coordinate a is `step * (1 + |y_a|)`.

using PhaseFn = std::function<double(double, const Vec3&, const Vec3&)>;

struct PhasePoint {
    std::array<double, 7> y{};  // t, x, v
    double t() const { return y[0]; }
    Vec3 x() const { return {{y[1], y[2], y[3]}}; }
    Vec3 v() const { return {{y[4], y[5], y[6]}}; }
    static PhasePoint make(double t, const Vec3& x, const Vec3& v) {
        return {{t, x[0], x[1], x[2], v[0], v[1], v[2]}};
    }
};

using PhaseVectorFn = std::function<std::array<double, 7>(const PhasePoint&)>;

inline PhaseVectorFn phase_vector(FieldId z, bool lifted) {
    return [z, lifted](const PhasePoint& p) {
        const auto Z = killing_vector(z, p.t(), p.x());
        const Vec3 W = lifted ? lift_velocity(z, p.v()) : Vec3{};
        return std::array<double, 7>{Z[0], Z[1], Z[2], Z[3], W[0], W[1], W[2]};
    };
}

// Free transport T = v^0 d_t + v^i d_i with v^0 = |v|.
inline PhaseVectorFn free_transport_vector() {
    return [](const PhasePoint& p) {
        const Vec3 v = p.v();
        return std::array<double, 7>{norm(v), v[0], v[1], v[2], 0.0, 0.0, 0.0};
    };
}

inline double fd_directional(const PhaseVectorFn& W, const std::function<double(const PhasePoint&)>& g,
                             const PhasePoint& p, double step) {
    const auto w = W(p);
    double s = 0.0;
    for (int a = 0; a < 7; ++a) {
        if (w[a] == 0.0) continue;
        const double h = step * (1.0 + std::abs(p.y[a]));
        PhasePoint pp = p, pm = p;
        pp.y[a] += h;
        pm.y[a] -= h;
        s += w[a] * (g(pp) - g(pm)) / (2.0 * h);
    }
    return s;
}

inline std::function<double(const PhasePoint&)> fd_apply(const PhaseVectorFn& W,
                                                          std::function<double(const PhasePoint&)> g,
                                                          double step) {
    return [W, g = std::move(g), step](const PhasePoint& p) { return fd_directional(W, g, p, step); };
}

inline double apply_op_fd(const SymmetryOp& op, const PhaseFn& g, double t, const Vec3& x, const Vec3& v,
                          double step = 1e-4) {
    std::function<double(const PhasePoint&)> h = [g](const PhasePoint& p) { return g(p.t(), p.x(), p.v()); };
    for (auto it = op.factors.rbegin(); it != op.factors.rend(); ++it) h = fd_apply(phase_vector(*it, op.lifted), h, step);
    return h(PhasePoint::make(t, x, v));
}

// [T, Zhat] g - c T g with c = 1 for S and 0 otherwise; zero in the
// continuum, O(step^2) under the finite-difference stencil.
inline double commutator_residual_fd(FieldId z, const PhaseFn& g, const PhasePoint& p, double step) {
    const auto T = free_transport_vector();
    const auto Z = phase_vector(z, true);
    std::function<double(const PhasePoint&)> base = [g](const PhasePoint& q) { return g(q.t(), q.x(), q.v()); };
    const double tz = fd_apply(T, fd_apply(Z, base, step), step)(p);
    const double zt = fd_apply(Z, fd_apply(T, base, step), step)(p);
    const double tg = fd_directional(T, base, p, step);
    return tz - zt - (z == FieldId::S ? tg : 0.0);
}

// ---------------------------------------------------------------------------
// Lie bracket of phase-space vector fields and matching against the algebra.

using Vec7 = std::array<double, 7>;

template <class T>
std::array<T, 7> phase_components(FieldId z, bool lifted, const std::array<T, 7>& y) {
    const Vec3T<T> x{{y[1], y[2], y[3]}}, v{{y[4], y[5], y[6]}};
    const auto Z = killing_vector(z, y[0], x);
    std::array<T, 7> out{Z[0], Z[1], Z[2], Z[3], T(0.0), T(0.0), T(0.0)};
    if (lifted) {
        const auto W = lift_velocity(z, v);
        for (int i = 0; i < 3; ++i) out[4 + i] = W[i];
    }
    return out;
}

// [A, B]^c = A(B^c) - B(A^c), derivatives taken exactly with dual numbers.
inline Vec7 bracket(FieldId a, FieldId b, bool lifted, const Vec7& y) {
    auto directional = [&](FieldId along, FieldId of) {
        const auto w = phase_components<double>(along, lifted, y);
        std::array<Dual<double>, 7> yd;
        for (int i = 0; i < 7; ++i) yd[i] = Dual<double>(y[i], w[i]);
        const auto c = phase_components<Dual<double>>(of, lifted, yd);
        Vec7 out;
        for (int i = 0; i < 7; ++i) out[i] = c[i].b;
        return out;
    };
    const Vec7 ab = directional(a, b), ba = directional(b, a);
    Vec7 out;
    for (int i = 0; i < 7; ++i) out[i] = ab[i] - ba[i];
    return out;
}

// Fixed 64-point cloud in [-2, 2]^7, shifted away from v = 0.
inline std::vector<Vec7> algebra_cloud(unsigned seed = 7) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    std::vector<Vec7> pts;
    while (pts.size() < 64) {
        Vec7 y;
        for (auto& c : y) c = U(rng);
        if (std::hypot(y[4], y[5], y[6]) < 0.25) continue;
        pts.push_back(y);
    }
    return pts;
}

struct AlgebraMatch {
    std::array<double, 11> coeff{};  // [A, B] = sum_k coeff[k] Z_k
    double residual = 0.0;           // relative least-squares residual

    std::string describe() const {
        std::string s;
        for (int k = 0; k < 11; ++k) {
            const double c = coeff[k];
            if (std::abs(c) < 1e-9) continue;
            if (!s.empty()) s += ' ';
            s += (c > 0 ? "+" : "-");
            if (std::abs(std::abs(c) - 1.0) > 1e-9) s += std::to_string(std::abs(c)) + "*";
            s += kFieldNames[k];
        }
        return s.empty() ? "0" : s;
    }
};

inline AlgebraMatch match_commutator(FieldId a, FieldId b, bool lifted) {
    const auto cloud = algebra_cloud();
    const int rows = static_cast<int>(cloud.size()) * 7;
    Eigen::MatrixXd M(rows, 11);
    Eigen::VectorXd rhs(rows);
    for (std::size_t p = 0; p < cloud.size(); ++p) {
        const Vec7 br = bracket(a, b, lifted, cloud[p]);
        for (int k = 0; k < 11; ++k) {
            const auto zk = phase_components<double>(kAllFields[k], lifted, cloud[p]);
            for (int i = 0; i < 7; ++i) M(int(p) * 7 + i, k) = zk[i];
        }
        for (int i = 0; i < 7; ++i) rhs(int(p) * 7 + i) = br[i];
    }
    const Eigen::VectorXd c = M.colPivHouseholderQr().solve(rhs);
    AlgebraMatch m;
    for (int k = 0; k < 11; ++k) m.coeff[k] = std::abs(c(k)) < 1e-12 ? 0.0 : c(k);
    const double scale = std::max(1.0, rhs.norm());
    m.residual = (M * c - rhs).norm() / scale;
    return m;
}

// ---------------------------------------------------------------------------
// Lie derivative of an analytic 2-form provider F(t, x):
// (L_Z F)_{mu nu} = Z(F_{mu nu}) + d_mu Z^l F_{l nu} + d_nu Z^l F_{mu l}.

template <int Depth, class P, class S>
TwoFormT<S> lie_chain(const FieldId* f, int count, const P& F, const S& t, const Vec3T<S>& x) {
    if (count == 0) return F(t, x);
    if constexpr (Depth == 0) {
        throw CapabilityError("Lie derivative order too high");
    } else {
        using D = Dual<S>;
        const auto Z = killing_vector(f[0], t, x);
        const D td(t, Z[0]);
        Vec3T<D> xd;
        for (int i = 0; i < 3; ++i) xd[i] = D(x[i], Z[i + 1]);
        const TwoFormT<D> Gd = lie_chain<Depth - 1>(f + 1, count - 1, F, td, xd);
        TwoFormT<S> G, dG;
        for (int i = 0; i < 3; ++i) {
            G.E[i] = Gd.E[i].a;
            G.B[i] = Gd.B[i].a;
            dG.E[i] = Gd.E[i].b;
            dG.B[i] = Gd.B[i].b;
        }
        const auto g = G.components();
        auto out = dG.components();
        const Mat4 J = killing_jacobian(f[0]);
        for (int m = 0; m < 4; ++m)
            for (int n = 0; n < 4; ++n)
                for (int l = 0; l < 4; ++l) {
                    if (J[m][l] != 0.0) out[m][n] = out[m][n] + J[m][l] * g[l][n];
                    if (J[n][l] != 0.0) out[m][n] = out[m][n] + J[n][l] * g[m][l];
                }
        return TwoFormT<S>::from_components(out);
    }
}

// Generic provider for L_{Z^gamma} F with |gamma| <= 3.
template <class P>
struct LieDerived {
    std::vector<FieldId> factors;
    P F;

    template <class S>
    TwoFormT<S> operator()(const S& t, const Vec3T<S>& x) const {
        return lie_chain<kMaxOrder>(factors.data(), static_cast<int>(factors.size()), F, t, x);
    }
};

template <class P>
LieDerived<P> lie_derivative(std::vector<FieldId> factors, P F) {
    if (factors.size() > kMaxOrder) throw CapabilityError("Lie derivative order too high");
    return {std::move(factors), std::move(F)};
}

// Lie derivative of lattice samples using the same second-order stencils as
// the Maxwell residual.
inline SampledField4 lie_derivative(FieldId z, const SampledField4& s) {
    SampledField4 out = s;
    std::vector<Mat4> comp(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) comp[k] = s.F[k].components();
    const Mat4 J = killing_jacobian(z);
    for (int a = 0; a < s.n[0]; ++a)
        for (int b = 0; b < s.n[1]; ++b)
            for (int c = 0; c < s.n[2]; ++c)
                for (int d = 0; d < s.n[3]; ++d) {
                    const std::array<int, 4> i{a, b, c, d};
                    const auto X = s.coord(i);
                    const auto Z = killing_vector(z, X[0], Vec3{{X[1], X[2], X[3]}});
                    const auto grad = detail::lattice_gradient(s, comp, i);
                    const auto& g = comp[s.index(a, b, c, d)];
                    Mat4 o{};
                    for (int m = 0; m < 4; ++m)
                        for (int n = 0; n < 4; ++n) {
                            double v = 0.0;
                            for (int l = 0; l < 4; ++l) v += Z[l] * grad[l][m][n] + J[m][l] * g[l][n] + J[n][l] * g[m][l];
                            o[m][n] = v;
                        }
                    out.F[s.index(a, b, c, d)] = TwoForm::from_components(o);
                }
    return out;
}

// ---------------------------------------------------------------------------
// Multiplier K0 = 1/2 tau_+^2 L + 1/2 tau_-^2 Lbar; in Cartesian components
// (1 + t^2 + r^2, 2 t x), which is smooth through r = 0.

inline Vec4 multiplier_K0(const SpacetimePoint& p) {
    const double r2 = dot(p.x, p.x);
    return {1.0 + p.t * p.t + r2, 2.0 * p.t * p.x[0], 2.0 * p.t * p.x[1], 2.0 * p.t * p.x[2]};
}

// ---------------------------------------------------------------------------
// Weights annihilated by free transport.

enum class WeightId : int { v0, v1, v2, v3, z01, z02, z03, z12, z13, z23, s0 };

inline constexpr std::array<std::string_view, 11> kWeightNames{"v0/v0", "v1/v0", "v2/v0", "v3/v0", "z01", "z02",
                                                               "z03",   "z12",   "z13",   "z23",   "s0"};

template <class T>
T eval_weight(WeightId w, const T& t, const Vec3T<T>& x, const Vec3T<T>& v) {
    const T v0 = norm(v);
    if (!(value_of(v0) > 0.0)) throw DomainError("weights undefined at v = 0");
    const T X[4] = {t, x[0], x[1], x[2]};
    const T V[4] = {v0, v[0], v[1], v[2]};
    static constexpr int pairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    const int id = static_cast<int>(w);
    if (id < 4) return V[id] / v0;
    if (id < 10) {
        const int m = pairs[id - 4][0], n = pairs[id - 4][1];
        return (X[m] * V[n] - X[n] * V[m]) / v0;
    }
    return (dot(x, v) - t * v0) / v0;
}

template <class T>
std::array<T, 11> eval_weights(const T& t, const Vec3T<T>& x, const Vec3T<T>& v) {
    std::array<T, 11> out;
    for (int k = 0; k < 11; ++k) out[k] = eval_weight(static_cast<WeightId>(k), t, x, v);
    return out;
}

inline double weight_sum(double t, const Vec3& x, const Vec3& v) {
    double s = 0.0;
    for (double z : eval_weights(t, x, v)) s += std::abs(z);
    return s;
}

struct WeightLiftMatch {
    std::array<double, 11> coeff{};  // Zhat(v0 w) = sum_k coeff[k] v0 w_k
    double residual = 0.0;
    bool in_set = false;             // a single weight with coefficient +-1, or zero
    double max_bound_ratio = 0.0;    // max |Zhat(w)| / sum |w'| on the cloud
};

inline WeightLiftMatch lift_of_weight(FieldId z, WeightId w) {
    const auto cloud = algebra_cloud(11);
    const int rows = static_cast<int>(cloud.size());
    Eigen::MatrixXd M(rows, 11);
    Eigen::VectorXd rhs(rows);
    WeightLiftMatch m;
    for (int p = 0; p < rows; ++p) {
        const auto& y = cloud[p];
        const double t = y[0];
        const Vec3 x{{y[1], y[2], y[3]}}, v{{y[4], y[5], y[6]}};
        auto v0w = [w](const auto& tt, const auto& xx, const auto& vv) { return norm(vv) * eval_weight(w, tt, xx, vv); };
        auto ww = [w](const auto& tt, const auto& xx, const auto& vv) { return eval_weight(w, tt, xx, vv); };
        rhs(p) = apply_lift(z, v0w, t, x, v);
        const auto ws = eval_weights(t, x, v);
        const double v0 = norm(v);
        for (int k = 0; k < 11; ++k) M(p, k) = v0 * ws[k];
        double bound = 0.0;
        for (double q : ws) bound += std::abs(q);
        m.max_bound_ratio = std::max(m.max_bound_ratio, std::abs(apply_lift(z, ww, t, x, v)) / bound);
    }
    const Eigen::VectorXd c = M.colPivHouseholderQr().solve(rhs);
    int nonzero = 0;
    bool unit = true;
    for (int k = 0; k < 11; ++k) {
        m.coeff[k] = std::abs(c(k)) < 1e-10 ? 0.0 : c(k);
        if (m.coeff[k] != 0.0) {
            ++nonzero;
            unit = unit && std::abs(std::abs(m.coeff[k]) - 1.0) < 1e-8;
        }
    }
    m.residual = (M * c - rhs).norm() / std::max(1.0, rhs.norm());
    m.in_set = m.residual < 1e-8 && (nonzero == 0 || (nonzero == 1 && unit));
    return m;
}

// ---------------------------------------------------------------------------
// Null components of the velocity.

struct VelocityNullSplit {
    double vL = 0.0, vLbar = 0.0;
    std::array<double, 2> vA{};
    double v0 = 0.0;
};

inline VelocityNullSplit velocity_null_split(const Vec3& x, const Vec3& v) {
    const double v0 = norm(v);
    if (!(v0 > 0.0)) throw DomainError("velocity split undefined at v = 0");
    const NullFrame fr = null_frame(x);
    const double vr = dot(v, fr.n);
    const double a1 = dot(v, fr.e1), a2 = dot(v, fr.e2);
    // v0 -+ vr = |vA|^2 / (v0 +- vr) avoids cancellation for near-radial v
    const double perp2 = a1 * a1 + a2 * a2;
    if (vr >= 0.0) return {0.5 * (v0 + vr), 0.5 * perp2 / (v0 + vr), {a1, a2}, v0};
    return {0.5 * perp2 / (v0 - vr), 0.5 * (v0 - vr), {a1, a2}, v0};
}

}  // namespace vnl

#pragma once
// Gauss-Legendre rules, a product rule on the unit sphere and a spherical
// cap rule used for velocity averages concentrated around one direction.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace vnl {

struct Rule1D {
    std::vector<double> x, w;
};

// Nodes on [-1, 1] by Newton iteration on the Legendre recurrence.
inline Rule1D gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1");
    Rule1D r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return r;
}

inline Rule1D gauss_legendre(int n, double a, double b) {
    Rule1D r = gauss_legendre(n);
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        r.x[i] = c + hw * r.x[i];
        r.w[i] *= hw;
    }
    return r;
}

// Composite Gauss rule: `panels` equal panels with `n` nodes each.
inline Rule1D composite_gauss(int n, int panels, double a, double b) {
    Rule1D out;
    const double step = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const Rule1D r = gauss_legendre(n, a + p * step, a + (p + 1) * step);
        out.x.insert(out.x.end(), r.x.begin(), r.x.end());
        out.w.insert(out.w.end(), r.w.begin(), r.w.end());
    }
    return out;
}

struct SphereRule {
    std::vector<Vec3> n;
    std::vector<double> w;  // sums to 4 pi
    int degree = 0;         // exact for polynomials up to this total degree
};

// Product of Gauss-Legendre in cos(theta) and the trapezoid rule in phi.
// With m = (degree + 2) / 2 latitude nodes and 2m longitudes it integrates
// all spherical polynomials up to `degree` exactly.
inline SphereRule sphere_rule(int degree) {
    if (degree < 1) throw std::invalid_argument("sphere_rule: degree >= 1");
    const int m = (degree + 2) / 2;
    const int nphi = 2 * m;
    const Rule1D gl = gauss_legendre(m);
    SphereRule s;
    s.degree = 2 * m - 1;
    for (int i = 0; i < m; ++i) {
        const double ct = gl.x[i], st = std::sqrt(1.0 - ct * ct);
        for (int j = 0; j < nphi; ++j) {
            const double phi = 2.0 * pi * (j + 0.5) / nphi;
            s.n.push_back({{st * std::cos(phi), st * std::sin(phi), ct}});
            s.w.push_back(gl.w[i] * 2.0 * pi / nphi);
        }
    }
    return s;
}

// Cap of angular radius theta_max around unit vector `axis`.
inline SphereRule cap_rule(const Vec3& axis, double theta_max, int n_theta, int n_phi) {
    const double ct_min = std::cos(std::min(theta_max, pi));
    const Rule1D gl = gauss_legendre(n_theta, ct_min, 1.0);
    Vec3 a = axis / norm(axis);
    Vec3 helper = std::abs(a[2]) < 0.9 ? Vec3{{0.0, 0.0, 1.0}} : Vec3{{1.0, 0.0, 0.0}};
    Vec3 p = cross(helper, a);
    p = p / norm(p);
    const Vec3 q = cross(a, p);
    SphereRule s;
    for (int i = 0; i < n_theta; ++i) {
        const double ct = gl.x[i], st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        for (int j = 0; j < n_phi; ++j) {
            const double phi = 2.0 * pi * (j + 0.5) / n_phi;
            s.n.push_back(a * ct + p * (st * std::cos(phi)) + q * (st * std::sin(phi)));
            s.w.push_back(gl.w[i] * 2.0 * pi / n_phi);
        }
    }
    return s;
}

}  // namespace vnl

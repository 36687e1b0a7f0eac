#pragma once
// Uniform Cartesian lattice with staggered sample locations, plus a flat
// 3D array used for every field component and moment.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "core.hpp"

namespace vnl {

struct GridGeometry {
    int cells = 0;     // cells per axis; nodes run 0..cells
    double h = 1.0;    // spacing
    Vec3 origin{};     // position of node (0,0,0)

    int nodes() const { return cells + 1; }
    double extent() const { return cells * h; }
    Vec3 center() const { return origin + Vec3{{0.5 * extent(), 0.5 * extent(), 0.5 * extent()}}; }

    static GridGeometry centered(int cells, double half_width) {
        GridGeometry g;
        g.cells = cells;
        g.h = 2.0 * half_width / cells;
        g.origin = {{-half_width, -half_width, -half_width}};
        return g;
    }

    bool operator==(const GridGeometry&) const = default;
};

class Array3 {
public:
    Array3() = default;
    explicit Array3(int n) : n_(n), data_(std::size_t(n) * n * n, 0.0) {}

    int n() const { return n_; }
    std::size_t size() const { return data_.size(); }
    double& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
    double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }
    std::size_t index(int i, int j, int k) const { return (std::size_t(i) * n_ + j) * n_ + k; }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }
    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

private:
    int n_ = 0;
    std::vector<double> data_;
};

// Offsets (in units of h) of the staggered locations.
using Stagger = std::array<double, 3>;
inline constexpr Stagger kNodeStagger{0.0, 0.0, 0.0};
inline constexpr std::array<Stagger, 3> kEdgeStagger{{{0.5, 0.0, 0.0}, {0.0, 0.5, 0.0}, {0.0, 0.0, 0.5}}};
inline constexpr std::array<Stagger, 3> kFaceStagger{{{0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}}};

struct TrilinearStencil {
    std::array<int, 3> base{};
    std::array<std::array<double, 2>, 3> w{};
};

// Returns false if the 2x2x2 stencil leaves the array.
inline bool trilinear_stencil(const GridGeometry& g, const Stagger& s, const Vec3& x, TrilinearStencil& st) {
    for (int a = 0; a < 3; ++a) {
        const double q = (x[a] - g.origin[a]) / g.h - s[a];
        const double f = std::floor(q);
        const int i = static_cast<int>(f);
        if (i < 0 || i + 1 > g.cells) return false;
        st.base[a] = i;
        const double frac = q - f;
        st.w[a] = {1.0 - frac, frac};
    }
    return true;
}

inline void deposit(Array3& arr, const TrilinearStencil& st, double value) {
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                arr(st.base[0] + a, st.base[1] + b, st.base[2] + c) += value * st.w[0][a] * st.w[1][b] * st.w[2][c];
}

inline double interpolate(const Array3& arr, const TrilinearStencil& st) {
    double s = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                s += arr(st.base[0] + a, st.base[1] + b, st.base[2] + c) * st.w[0][a] * st.w[1][b] * st.w[2][c];
    return s;
}

}  // namespace vnl

// Product quadrature on the unit sphere: Gauss-Legendre in cos(theta) times a
// uniform (trapezoidal, spectrally accurate for periodic integrands) rule in phi.
#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qjump/core.hpp"

namespace qjump::quadrature {

struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] via Newton iteration on P_n.
inline GaussLegendre gauss_legendre(int n) {
    if (n < 1) throw PreconditionError("gauss_legendre: n must be >= 1");
    if (n == 1) return {{0.0}, {2.0}};
    GaussLegendre rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

inline double max_abs(double v) { return std::abs(v); }
inline double max_abs(const Mat4& m) { return m.cwiseAbs().maxCoeff(); }

/// Integrates f(Direction) over the full solid angle on an n_theta x n_phi grid.
template <class F>
auto integrate_sphere(F&& f, int n_theta, int n_phi) {
    const GaussLegendre gl = gauss_legendre(n_theta);
    const double dphi = 2.0 * pi / n_phi;
    using R = decltype(f(Direction{}));
    R total = f(Direction{0.5 * pi, 0.0}) * 0.0;
    for (int i = 0; i < n_theta; ++i) {
        const double theta = std::acos(gl.nodes[i]);
        R ring = total * 0.0;
        for (int j = 0; j < n_phi; ++j) ring += f(Direction{theta, j * dphi});
        total += ring * (gl.weights[i] * dphi);
    }
    return total;
}

/// Doubles both resolutions, starting from 64 x 128, until successive results
/// differ by less than tol (max-abs) or max_levels is reached.
template <class F>
auto integrate_sphere_refined(F&& f, double tol = 1e-8, int max_levels = 4) {
    int nt = 64;
    int np = 128;
    auto prev = integrate_sphere(f, nt, np);
    for (int level = 0; level < max_levels; ++level) {
        nt *= 2;
        np *= 2;
        auto next = integrate_sphere(f, nt, np);
        const double diff = max_abs(next - prev);
        prev = std::move(next);
        if (diff < tol) break;
    }
    return prev;
}

}  // namespace qjump::quadrature

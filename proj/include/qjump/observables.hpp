// Derived observables: interference patterns, fringe visibility, the
// interference (which-way) criterion and the zero-delay photon correlation g2.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "qjump/core.hpp"
#include "qjump/emission.hpp"
#include "qjump/parallel.hpp"

namespace qjump {

/// Sampled angular function; values are row-major with theta outer.
struct AngularGrid {
    std::vector<double> theta_points;
    std::vector<double> phi_points;
    std::vector<double> values;

    double& at(std::size_t i, std::size_t j) { return values[i * phi_points.size() + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * phi_points.size() + j]; }

    std::vector<double> row(std::size_t i) const {
        return {values.begin() + static_cast<std::ptrdiff_t>(i * phi_points.size()),
                values.begin() + static_cast<std::ptrdiff_t>((i + 1) * phi_points.size())};
    }
};

/// theta: n_theta points on [0, pi] inclusive; phi: n_phi points on [0, 2 pi).
inline AngularGrid make_grid(int n_theta = 64, int n_phi = 128) {
    if (n_theta < 2 || n_phi < 1) throw PreconditionError("make_grid: need n_theta >= 2 and n_phi >= 1");
    AngularGrid g;
    for (int i = 0; i < n_theta; ++i) g.theta_points.push_back(pi * i / (n_theta - 1));
    for (int j = 0; j < n_phi; ++j) g.phi_points.push_back(2.0 * pi * j / n_phi);
    g.values.assign(static_cast<std::size_t>(n_theta) * n_phi, 0.0);
    return g;
}

template <class F>
AngularGrid evaluate_on_grid(AngularGrid grid, F&& f, unsigned threads = 0) {
    const std::size_t nt = grid.theta_points.size();
    const std::size_t np = grid.phi_points.size();
    grid.values.assign(nt * np, 0.0);
    parallel_for(nt, resolve_thread_count(threads), [&](std::size_t i) {
        for (std::size_t j = 0; j < np; ++j) grid.at(i, j) = f(Direction{grid.theta_points[i], grid.phi_points[j]});
    });
    return grid;
}

/// Emission rate density I_k(rho) sampled on the grid.
inline AngularGrid interference_pattern(const DensityMatrix& rho, const PhysicalParams& params, AngularGrid grid,
                                        unsigned threads = 0) {
    rho.require_physical("interference_pattern");
    return evaluate_on_grid(
        std::move(grid), [&](const Direction& k) { return detail::trace_intensity(rho.matrix(), k, params); },
        threads);
}

/// Phase xi = k0 r sin(theta) cos(phi) between the two atoms' emissions.
inline double path_phase(const PhysicalParams& params, const Direction& k) {
    return params.k0r() * std::sin(k.theta) * std::cos(k.phi);
}

/// Closed-form steady-state pattern for equal real drive Omega with C neglected
/// and the dipole perpendicular to the atom axis:
/// (3/4pi) A Omega^2/(A^2+2 Omega^2)^2 sin^2(theta) [A^2 + 2 Omega^2 + A^2 cos(xi)].
inline double closed_form_intensity(const PhysicalParams& params, const Direction& k) {
    const double a = params.decay_rate;
    const double w2 = std::norm(params.rabi_1);
    const double d = a * a + 2.0 * w2;
    const double st = std::sin(k.theta);
    return 3.0 / (4.0 * pi) * a * w2 / (d * d) * st * st * (d + a * a * std::cos(path_phase(params, k)));
}

/// [1 - cos(xi) / (1 + 2 (Omega/A)^2 + cos(xi))]^2, the C-neglected g2(0).
inline double closed_form_g2(double omega_over_a, double xi) {
    const double c = std::cos(xi);
    const double q = 1.0 - c / (1.0 + 2.0 * omega_over_a * omega_over_a + c);
    return q * q;
}

// ---------------------------------------------------------------------------
// Fringes

/// Number of local maxima of a sampled curve, endpoints included.
inline int count_maxima(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n < 2) return static_cast<int>(n);
    int count = 0;
    if (v[0] > v[1]) ++count;
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (v[i] > v[i - 1] && v[i] >= v[i + 1]) ++count;
    if (v[n - 1] > v[n - 2]) ++count;
    return count;
}

/// Sign changes of the forward difference of a sampled curve.
inline int count_slope_sign_changes(const std::vector<double>& v, double tol = 0.0) {
    int changes = 0;
    int last = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double d = v[i] - v[i - 1];
        const int s = d > tol ? 1 : (d < -tol ? -1 : 0);
        if (s != 0 && last != 0 && s != last) ++changes;
        if (s != 0) last = s;
    }
    return changes;
}

/// Samples I_k over phi in [phi_lo, phi_hi] (inclusive) at fixed theta.
inline std::vector<double> phi_cut(const DensityMatrix& rho, const PhysicalParams& params, double theta, int n,
                                   double phi_lo = 0.0, double phi_hi = pi) {
    const EmissionProfile profile(rho, params);
    std::vector<double> v(n);
    for (int j = 0; j < n; ++j) v[j] = profile(Direction{theta, phi_lo + (phi_hi - phi_lo) * j / (n - 1)});
    return v;
}

struct Visibility {
    double i_max = 0.0;
    double i_min = 0.0;
    double value = 0.0;
};

/// (I_max - I_min)/(I_max + I_min) over phi at fixed theta. Extrema are located
/// on an n_phi grid and polished with Brent's method.
inline Visibility fringe_visibility(const DensityMatrix& rho, const PhysicalParams& params, double theta,
                                   int n_phi = 4096) {
    const EmissionProfile profile(rho, params);
    auto f = [&](double phi) { return profile(Direction{theta, phi}); };
    const double h = 2.0 * pi / n_phi;
    int jmax = 0;
    int jmin = 0;
    for (int j = 1; j < n_phi; ++j) {
        if (f(j * h) > f(jmax * h)) jmax = j;
        if (f(j * h) < f(jmin * h)) jmin = j;
    }
    constexpr int bits = std::numeric_limits<double>::digits / 2;
    const auto lo = boost::math::tools::brent_find_minima(f, (jmin - 1) * h, (jmin + 1) * h, bits);
    const auto hi = boost::math::tools::brent_find_minima([&](double p) { return -f(p); }, (jmax - 1) * h,
                                                         (jmax + 1) * h, bits);
    Visibility v;
    v.i_min = std::min(lo.second, f(jmin * h));
    v.i_max = std::max(-hi.second, f(jmax * h));
    v.value = (v.i_max + v.i_min) > 0.0 ? (v.i_max - v.i_min) / (v.i_max + v.i_min) : 0.0;
    return v;
}

// ---------------------------------------------------------------------------
// Which-way criterion

struct InterferenceCriterion {
    cplx coherence;     // Tr(S2+ S1- rho)
    bool interference;  // |coherence| > threshold
};

inline constexpr double kCoherenceThreshold = 1e-10;

inline InterferenceCriterion interference_criterion(const DensityMatrix& rho) {
    const cplx c = (raising_operator(2) * lowering_operator(1) * rho.matrix()).trace();
    return {c, std::abs(c) > kCoherenceThreshold};
}

inline InterferenceCriterion interference_criterion(const PureState& psi) {
    return interference_criterion(DensityMatrix::from_pure(psi));
}

/// Flat pattern at theta = pi/2: max - min over phi below 1e-9 (3A/8pi).
inline bool pattern_is_flat(const DensityMatrix& rho, const PhysicalParams& params, int n_phi = 2048) {
    const std::vector<double> v = phi_cut(rho, params, 0.5 * pi, n_phi, 0.0, 2.0 * pi);
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    return (*mx - *mn) < 1e-9 * 3.0 * params.decay_rate / (8.0 * pi);
}

// ---------------------------------------------------------------------------
// Photon correlations

/// Denominator intensity below which g2 is reported as undefined (A per steradian).
inline constexpr double kG2UndefinedIntensity = 1e-12;

/// Post-emission density R_k rho R_k^dagger / Tr(.)
inline DensityMatrix conditioned_on_emission(const DensityMatrix& rho, const PhysicalParams& params,
                                             const Direction& k) {
    const Mat4 r = reset_operator(params, k).total;
    const Mat4 post = r * rho.matrix() * r.adjoint();
    return DensityMatrix(post / post.trace().real());
}

/// g2_k(0) = I_k(R rho R^dagger / Tr) / I_k(rho); nullopt where I_k(rho) vanishes.
inline std::optional<double> g2_zero(const DensityMatrix& rho, const PhysicalParams& params, const Direction& k) {
    const double denom = detail::trace_intensity(rho.matrix(), k, params);
    if (denom < kG2UndefinedIntensity) return std::nullopt;
    const DensityMatrix post = conditioned_on_emission(rho, params, k);
    const Mat4 r = reset_operator(params, k).total;
    const double num = (r * post.matrix() * r.adjoint()).trace().real();
    return num / denom;
}

/// Azimuths in [0, 2pi) at polar angle theta where cos(xi) = -1.
inline std::vector<double> maximal_bunching_phis(const PhysicalParams& params, double theta) {
    std::vector<double> phis;
    const double amp = params.k0r() * std::sin(theta);
    // need |2m + 1| pi <= amp
    const double reach = amp / pi;
    const int m_lo = static_cast<int>(std::ceil((-reach - 1.0) / 2.0));
    const int m_hi = static_cast<int>(std::floor((reach - 1.0) / 2.0));
    for (int m = m_lo; m <= m_hi; ++m) {
        const double c = std::clamp((2.0 * m + 1.0) * pi / amp, -1.0, 1.0);
        const double p = std::acos(c);
        phis.push_back(p);
        if (p > 0.0 && p < pi) phis.push_back(2.0 * pi - p);
    }
    std::sort(phis.begin(), phis.end());
    return phis;
}

struct BunchingMap {
    AngularGrid g2;  // NaN where undefined
    std::vector<Direction> maximal_directions;
};

inline BunchingMap bunching_map(const DensityMatrix& rho, const PhysicalParams& params, AngularGrid grid,
                                unsigned threads = 0) {
    rho.require_physical("bunching_map");
    BunchingMap out;
    for (double theta : grid.theta_points)
        for (double phi : maximal_bunching_phis(params, theta)) out.maximal_directions.push_back({theta, phi});
    out.g2 = evaluate_on_grid(
        std::move(grid),
        [&](const Direction& k) {
            const auto g = g2_zero(rho, params, k);
            return g ? *g : std::numeric_limits<double>::quiet_NaN();
        },
        threads);
    return out;
}

/// Population bookkeeping of one emission into direction k.
struct BunchingAnalysis {
    cplx alpha;                // <a|R_k|e> in Dicke coordinates
    double pre_intensity;      // I_k(rho)
    double post_intensity;     // I_k(R rho R^dagger / Tr)
    Vec4 pre_populations;      // Dicke (g, s, a, e)
    Vec4 post_populations;
};

inline BunchingAnalysis bunching_analysis(const DensityMatrix& rho, const PhysicalParams& params,
                                          const Direction& k) {
    BunchingAnalysis b;
    const Mat4 rd = to_dicke(reset_operator(params, k).total);
    b.alpha = rd(dicke::a, dicke::e);
    b.pre_intensity = intensity_mixed(rho, k, params);
    const DensityMatrix post = conditioned_on_emission(rho, params, k);
    b.post_intensity = intensity_mixed(post, k, params);
    b.pre_populations = to_dicke(rho.matrix()).diagonal();
    b.post_populations = to_dicke(post.matrix()).diagonal();
    return b;
}

}  // namespace qjump

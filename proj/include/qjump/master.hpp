// Lindblad master equation for the two dipole-interacting atoms. Serves as the
// ensemble-level oracle for the quantum-jump engine.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "qjump/core.hpp"
#include "qjump/dynamics.hpp"

namespace qjump {

using Vec16 = Eigen::Matrix<cplx, 16, 1>;
using Mat16 = Eigen::Matrix<cplx, 16, 16>;

/// Column-stacking vectorization: vec(rho)[i + 4 j] = rho(i, j).
inline Vec16 vectorize(const Mat4& rho) { return Eigen::Map<const Vec16>(rho.data()); }

inline Mat4 unvectorize(const Vec16& v) { return Eigen::Map<const Mat4>(v.data()); }

inline Mat16 kron(const Mat4& a, const Mat4& b) {
    Mat16 k;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) k.block<4, 4>(4 * i, 4 * j) = a(i, j) * b;
    return k;
}

/// Superoperator of rho -> left * rho * right, i.e. (right^T kron left).
inline Mat16 sandwich(const Mat4& left, const Mat4& right) { return kron(right.transpose(), left); }

struct Liouvillian {
    Mat16 superoperator = Mat16::Zero();

    Mat4 apply(const Mat4& rho) const { return unvectorize(superoperator * vectorize(rho)); }
};

/// L(rho) = -i (H rho - rho H^dagger) + (A + Re C) R+ rho R+^dagger + (A - Re C) R- rho R-^dagger.
inline Liouvillian build_liouvillian(const PhysicalParams& params, const DipoleCoupling& coupling) {
    const Mat4 h = conditional_hamiltonian(params, coupling).matrix;
    const Mat4 id = Mat4::Identity();
    const auto [rp, rm] = symmetric_jump_operators();
    const double a = params.decay_rate;
    const double re = coupling.value.real();

    Liouvillian l;
    l.superoperator = -I_unit * (sandwich(h, id) - sandwich(id, h.adjoint())) +
                      (a + re) * sandwich(rp, rp.adjoint()) + (a - re) * sandwich(rm, rm.adjoint());
    return l;
}

struct Snapshot {
    double time;
    DensityMatrix rho;
};

/// `count` evenly spaced times covering [0, t_final] inclusive.
inline std::vector<double> uniform_time_grid(double t_final, int count = 200) {
    std::vector<double> t(count);
    for (int i = 0; i < count; ++i) t[i] = count == 1 ? t_final : t_final * i / (count - 1);
    return t;
}

/// Step index at which a sample time is recorded for fixed step dt.
inline long long step_index(double t, double dt) { return std::llround(t / dt); }

namespace detail {

inline Vec16 rk4_step(const Mat16& l, const Vec16& y, double h) {
    const Vec16 k1 = l * y;
    const Vec16 k2 = l * (y + 0.5 * h * k1);
    const Vec16 k3 = l * (y + 0.5 * h * k2);
    const Vec16 k4 = l * (y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline cplx vec_trace(const Vec16& v) { return v(0) + v(5) + v(10) + v(15); }

}  // namespace detail

inline constexpr double kMaxIntegrationStep = 1e-2;
inline constexpr double kTraceDriftLimit = 1e-8;

/// Fixed-step RK4 on the vectorized master equation. Snapshots are recorded at
/// the steps nearest to `sample_times` (default: 200 points on [0, t_final]).
inline std::vector<Snapshot> integrate(const Liouvillian& l, const DensityMatrix& rho0, double t_final,
                                       double dt, std::vector<double> sample_times = {}) {
    rho0.require_physical("integrate");
    if (!(dt > 0.0) || dt > kMaxIntegrationStep)
        throw PreconditionError("integrate: dt must lie in (0, 1e-2]");
    if (!(t_final >= 0.0)) throw PreconditionError("integrate: t_final must be non-negative");
    if (sample_times.empty()) sample_times = uniform_time_grid(t_final);

    const long long n_steps = step_index(t_final, dt);
    std::vector<long long> sample_steps;
    sample_steps.reserve(sample_times.size());
    for (double t : sample_times) {
        if (t < 0.0 || t > t_final + 0.5 * dt)
            throw PreconditionError("integrate: sample time outside [0, t_final]");
        sample_steps.push_back(step_index(t, dt));
    }
    if (!std::is_sorted(sample_steps.begin(), sample_steps.end()))
        throw PreconditionError("integrate: sample times must be sorted");

    std::vector<Snapshot> out;
    out.reserve(sample_steps.size());
    auto record = [&](long long step, const Vec16& y) {
        DensityMatrix rho(unvectorize(y));
        if (!rho.is_physical())
            throw ComputationError("integrate: snapshot lost hermiticity, trace or positivity");
        out.push_back({step * dt, rho});
    };

    Vec16 y = vectorize(rho0.matrix());
    std::size_t next = 0;
    auto flush = [&](long long step) {
        for (; next < sample_steps.size() && sample_steps[next] == step; ++next) record(step, y);
    };
    flush(0);
    for (long long step = 1; step <= n_steps; ++step) {
        const cplx tr0 = detail::vec_trace(y);
        int halvings = 0;
        for (;;) {
            const int substeps = 1 << halvings;
            const double h = dt / substeps;
            Vec16 trial = y;
            for (int s = 0; s < substeps; ++s) trial = detail::rk4_step(l.superoperator, trial, h);
            if (std::abs(detail::vec_trace(trial) - tr0) <= kTraceDriftLimit) {
                y = trial;
                break;
            }
            if (++halvings > 10) throw ComputationError("integrate: trace drift persists after 10 halvings");
        }
        flush(step);
    }
    return out;
}

/// Relative singular-value threshold used to count the kernel dimension of L.
inline constexpr double kKernelTolerance = 1e-10;

inline int kernel_dimension(const Liouvillian& l) {
    Eigen::JacobiSVD<Mat16> svd(l.superoperator);
    const auto& sv = svd.singularValues();
    int dim = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) <= kKernelTolerance * sv(0)) ++dim;
    return dim;
}

/// Solves L(rho) = 0 with Tr rho = 1 (trace constraint replaces the first row).
inline DensityMatrix steady_state_numeric(const Liouvillian& l) {
    const int dim = kernel_dimension(l);
    if (dim != 1)
        throw ComputationError("steady_state_numeric: kernel dimension is " + std::to_string(dim));
    Mat16 m = l.superoperator;
    Vec16 rhs = Vec16::Zero();
    m.row(0).setZero();
    for (int i = 0; i < 4; ++i) m(0, i + 4 * i) = 1.0;
    rhs(0) = 1.0;
    const Vec16 v = m.fullPivLu().solve(rhs);
    Mat4 rho = unvectorize(v);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    DensityMatrix out(rho);
    if (!out.is_physical()) throw ComputationError("steady_state_numeric: solution is not physical");
    return out;
}

/// Closed-form steady state for equal real driving. Only the quantities that
/// have a closed form are provided; coherences come from the numeric solver.
struct AnalyticSteadyState {
    double rho_gg = 1.0;
    double rho_ss = 0.0;
    double rho_aa = 0.0;
    double rho_ee = 0.0;
    double im_rho_sa = 0.0;
    double normalization = 1.0;  // N
};

inline AnalyticSteadyState steady_state_analytic(const PhysicalParams& params, const DipoleCoupling& coupling) {
    if (!params.equal_real_drive())
        throw PreconditionError("steady_state_analytic: requires equal real Rabi frequencies");
    const double a = params.decay_rate;
    const double a2 = a * a;
    const double w2 = params.rabi_1.real() * params.rabi_1.real();
    const double re = coupling.value.real();
    const double im = coupling.value.imag();
    const double coupling_terms = a2 * (2.0 * a + re) * re + a2 * im * im;

    AnalyticSteadyState s;
    s.normalization = (a2 + 2.0 * w2) * (a2 + 2.0 * w2) + coupling_terms;
    s.rho_gg = ((a2 + w2) * (a2 + w2) + coupling_terms) / s.normalization;
    s.rho_ss = w2 * (2.0 * a2 + w2) / s.normalization;
    s.rho_ee = w2 * w2 / s.normalization;
    s.rho_aa = s.rho_ee;
    s.im_rho_sa = 0.0;
    return s;
}

/// Density matrix in Dicke coordinates (g, s, a, e).
inline Mat4 dicke_elements(const DensityMatrix& rho) { return to_dicke(rho.matrix()); }

}  // namespace qjump

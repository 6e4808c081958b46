// Conditional (no-emission) evolution of the two-atom system.
#pragma once

#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "qjump/core.hpp"

namespace qjump {

/// Complex dipole-dipole coupling constant C, in units of A.
struct DipoleCoupling {
    cplx value{0.0, 0.0};

    static DipoleCoupling neglected() { return {}; }
};

/// Minimum interatomic distance (in lambda0) accepted by dipole_coupling().
inline constexpr double kMinSeparation = 1e-6;

/// C = (3A/2) e^{ix} [ (1 - |D.r|^2)/(ix) + (1/x^2 - 1/(i x^3)) (1 - 3|D.r|^2) ],
/// with x = k0 r and r the unit vector joining the atoms.
inline DipoleCoupling dipole_coupling(const PhysicalParams& params) {
    params.validate();
    if (params.separation <= kMinSeparation)
        throw PreconditionError("separation below near-field threshold");
    const double x = params.k0r();
    const double proj = params.dipole.dot(params.axis());
    const double p2 = proj * proj;
    const cplx ix = I_unit * x;
    const cplx bracket = (1.0 - p2) / ix + (1.0 / (x * x) - 1.0 / (ix * x * x)) * (1.0 - 3.0 * p2);
    return {1.5 * params.decay_rate * std::exp(ix) * bracket};
}

/// Non-Hermitian generator of the no-emission evolution (hbar = 1).
struct ConditionalHamiltonian {
    Mat4 matrix = Mat4::Zero();

    Mat4 hermitian_part() const { return 0.5 * (matrix + matrix.adjoint()); }

    /// Gamma = i (H - H^dagger); positive semidefinite. <psi|Gamma|psi> is the
    /// total emission rate of |psi>.
    Mat4 decay_operator() const { return I_unit * (matrix - matrix.adjoint()); }
};

inline ConditionalHamiltonian conditional_hamiltonian(const PhysicalParams& params,
                                                      const DipoleCoupling& coupling) {
    const Mat4 s1 = lowering_operator(1);
    const Mat4 s2 = lowering_operator(2);
    const Mat4 p1 = s1.adjoint();
    const Mat4 p2 = s2.adjoint();
    const double a = params.decay_rate;

    const Mat4 damping = a * (p1 * s1 + p2 * s2) + coupling.value * (p1 * s2 + p2 * s1);
    const Mat4 laser = 0.5 * (params.rabi_1 * p1 + params.rabi_2 * p2);

    ConditionalHamiltonian h;
    h.matrix = damping / (2.0 * I_unit) + laser + Mat4(laser.adjoint());
    return h;
}

namespace detail {

// Pade [6/6] approximant with scaling and squaring.
inline Mat4 expm_pade(const Mat4& a) {
    constexpr std::array<double, 7> c{1.0,
                                      1.0 / 2.0,
                                      5.0 / 44.0,
                                      1.0 / 66.0,
                                      1.0 / 792.0,
                                      1.0 / 15840.0,
                                      1.0 / 665280.0};
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / 0.5))));
    const Mat4 x = a / std::ldexp(1.0, squarings);

    const Mat4 id = Mat4::Identity();
    Mat4 power = id;
    Mat4 num = Mat4::Zero();
    Mat4 den = Mat4::Zero();
    for (std::size_t k = 0; k < c.size(); ++k) {
        num += c[k] * power;
        den += ((k % 2 == 0) ? 1.0 : -1.0) * c[k] * power;
        power = power * x;
    }
    Mat4 r = den.fullPivLu().solve(num);
    for (int i = 0; i < squarings; ++i) r = r * r;
    return r;
}

}  // namespace detail

/// Upper bound on cond(V) of the eigenvector matrix before falling back to Pade.
inline constexpr double kEigenConditionLimit = 1e8;

/// exp(a) for a dense 4x4 complex matrix. Diagonalizes when the eigenbasis is
/// well conditioned, otherwise uses scaling and squaring.
inline Mat4 matrix_exponential(const Mat4& a) {
    Eigen::ComplexEigenSolver<Mat4> es(a);
    if (es.info() == Eigen::Success) {
        const Mat4 v = es.eigenvectors();
        Eigen::JacobiSVD<Mat4> svd(v);
        const auto& sv = svd.singularValues();
        const double cond = sv(0) / sv(3);
        if (std::isfinite(cond) && cond < kEigenConditionLimit) {
            const Vec4 ev = es.eigenvalues().array().exp();
            return v * ev.asDiagonal() * v.inverse();
        }
    }
    return detail::expm_pade(a);
}

/// U_cond(dt) = exp(-i H_cond dt).
inline Mat4 no_jump_propagator(const ConditionalHamiltonian& h, double dt) {
    if (!(dt >= 0.0)) throw PreconditionError("dt must be non-negative");
    if (dt == 0.0) return Mat4::Identity();
    return matrix_exponential(-I_unit * dt * h.matrix);
}

/// P0 = ||U_cond |psi>||^2.
inline double no_emission_probability(const PureState& state, const Mat4& propagator) {
    state.require_normalized("no_emission_probability");
    return (propagator * state.amplitudes()).squaredNorm();
}

}  // namespace qjump

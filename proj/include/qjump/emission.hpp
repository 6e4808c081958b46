// Direction-resolved photon emission: reset operators, angular emission
// intensity and sampling of emission directions.
#pragma once

#include <array>
#include <cmath>
#include <limits>

#include "qjump/core.hpp"
#include "qjump/dynamics.hpp"
#include "qjump/quadrature.hpp"
#include "qjump/random.hpp"

namespace qjump {

/// Single-atom dipole pattern prefactor 3A/(8 pi) (1 - |D.k|^2).
inline double dipole_factor(const PhysicalParams& params, const Direction& k) {
    const double proj = params.dipole.dot(k.unit_vector());
    return 3.0 * params.decay_rate / (8.0 * pi) * std::max(0.0, 1.0 - proj * proj);
}

/// Propagation phase e^{-i k0 k.r_i} of atom i towards direction k.
inline cplx emission_phase(const PhysicalParams& params, const Direction& k, int atom) {
    return std::exp(-I_unit * params.k0() * k.unit_vector().dot(params.position(atom)));
}

struct ResetOperator {
    std::array<Mat4, 2> per_atom;
    Mat4 total;
    Direction direction;
};

inline ResetOperator reset_operator(const PhysicalParams& params, const Direction& k) {
    const double amp = std::sqrt(dipole_factor(params, k));
    ResetOperator r;
    r.direction = k;
    for (int atom = 1; atom <= 2; ++atom)
        r.per_atom[atom - 1] = amp * emission_phase(params, k, atom) * lowering_operator(atom);
    r.total = r.per_atom[0] + r.per_atom[1];
    return r;
}

/// I_k(psi) = ||R_k psi||^2, rate per steradian.
inline double intensity_pure(const PureState& state, const Direction& k, const PhysicalParams& params) {
    state.require_normalized("intensity_pure");
    return (reset_operator(params, k).total * state.amplitudes()).squaredNorm();
}

namespace detail {
inline double trace_intensity(const Mat4& rho, const Direction& k, const PhysicalParams& params) {
    const Mat4 r = reset_operator(params, k).total;
    return (r * rho * r.adjoint()).trace().real();
}
}  // namespace detail

/// I_k(rho) = Tr(R_k rho R_k^dagger).
inline double intensity_mixed(const DensityMatrix& rho, const Direction& k, const PhysicalParams& params) {
    rho.require_physical("intensity_mixed");
    return detail::trace_intensity(rho.matrix(), k, params);
}

/// Total emission rate into all directions, <Gamma> with
/// Gamma = A (S1+S1- + S2+S2-) + Re C (S1+S2- + S2+S1-).
inline double total_emission_rate(const DensityMatrix& rho, const PhysicalParams& params,
                                  const DipoleCoupling& coupling) {
    const Mat4 s1 = lowering_operator(1);
    const Mat4 s2 = lowering_operator(2);
    const Mat4 gamma = params.decay_rate * (s1.adjoint() * s1 + s2.adjoint() * s2) +
                       coupling.value.real() * (s1.adjoint() * s2 + s2.adjoint() * s1);
    return (gamma * rho.matrix()).trace().real();
}

inline double total_emission_rate(const PureState& psi, const PhysicalParams& params,
                                  const DipoleCoupling& coupling) {
    return total_emission_rate(DensityMatrix::from_pure(psi), params, coupling);
}

/// Precomputed angular emission profile of a state. With m_ij = Tr(S_i rho S_j^dagger),
/// I_k = f(k) sum_ij e_i conj(e_j) m_ij, e_i the emission phase of atom i.
/// Equivalent to intensity_mixed but avoids 4x4 products per direction.
class EmissionProfile {
  public:
    EmissionProfile(const DensityMatrix& rho, const PhysicalParams& params) : params_(params) {
        const Mat4& m = rho.matrix();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const Mat4 si = lowering_operator(i + 1);
                const Mat4 sj = lowering_operator(j + 1);
                m_[i][j] = (si * m * sj.adjoint()).trace();
            }
    }

    EmissionProfile(const PureState& psi, const PhysicalParams& params)
        : EmissionProfile(DensityMatrix::from_pure(psi), params) {}

    double operator()(const Direction& k) const {
        const cplx e1 = emission_phase(params_, k, 1);
        const cplx e2 = emission_phase(params_, k, 2);
        const double s = m_[0][0].real() + m_[1][1].real() + 2.0 * (e1 * std::conj(e2) * m_[0][1]).real();
        return dipole_factor(params_, k) * std::max(0.0, s);
    }

    /// Upper bound on I_k over the sphere: (3A/8pi) * 2 (<n1> + <n2>).
    double envelope() const {
        return 3.0 * params_.decay_rate / (8.0 * pi) * 2.0 * (m_[0][0].real() + m_[1][1].real());
    }

  private:
    PhysicalParams params_;
    std::array<std::array<cplx, 2>, 2> m_{};
};

/// Squared norm of R_k psi below which an emission direction is rejected.
inline constexpr double kZeroResetNorm2 = 1e-24;

/// Draws k with density I_k / (integral of I) by rejection from the uniform
/// distribution on the sphere.
template <class Generator>
Direction sample_direction(const EmissionProfile& profile, Generator& rng) {
    const double bound = profile.envelope();
    if (!(bound > 0.0)) throw PreconditionError("sample_direction: total emission rate is zero");
    constexpr int kMaxProposals = 100000000;
    for (int n = 0; n < kMaxProposals; ++n) {
        const double cos_t = 2.0 * uniform01(rng) - 1.0;
        const double phi = 2.0 * pi * uniform01(rng);
        const double u = uniform01(rng);
        const Direction k{std::acos(cos_t), phi};
        const double intensity = profile(k);
        if (intensity >= kZeroResetNorm2 && u * bound < intensity) return k;
    }
    throw ComputationError("sample_direction: rejection sampler did not accept");
}

template <class Generator>
Direction sample_direction(const PureState& psi, const PhysicalParams& params, Generator& rng) {
    return sample_direction(EmissionProfile(psi, params), rng);
}

template <class Generator>
Direction sample_direction(const DensityMatrix& rho, const PhysicalParams& params, Generator& rng) {
    return sample_direction(EmissionProfile(rho, params), rng);
}

/// Post-emission state R_k psi / ||R_k psi||.
inline PureState apply_reset(const PureState& state, const Direction& k, const PhysicalParams& params) {
    const Vec4 v = reset_operator(params, k).total * state.amplitudes();
    if (v.squaredNorm() < kZeroResetNorm2)
        throw PreconditionError("apply_reset: no emission possible in this direction");
    return PureState(v / v.norm());
}

/// Integral of R_k rho R_k^dagger over the sphere (quadrature).
inline Mat4 integrated_jump_term(const DensityMatrix& rho, const PhysicalParams& params, double tol = 1e-8) {
    return quadrature::integrate_sphere_refined(
        [&](const Direction& k) -> Mat4 {
            const Mat4 r = reset_operator(params, k).total;
            return r * rho.matrix() * r.adjoint();
        },
        tol);
}

/// (A + Re C) R+ rho R+^dagger + (A - Re C) R- rho R-^dagger.
inline Mat4 collective_jump_term(const DensityMatrix& rho, const PhysicalParams& params,
                                 const DipoleCoupling& coupling) {
    const auto [rp, rm] = symmetric_jump_operators();
    const double a = params.decay_rate;
    const double re = coupling.value.real();
    return (a + re) * rp * rho.matrix() * rp.adjoint() + (a - re) * rm * rho.matrix() * rm.adjoint();
}

}  // namespace qjump

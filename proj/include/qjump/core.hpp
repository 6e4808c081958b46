// Two-atom Hilbert space, dimensionless parameters and elementary operators.
//
// Units: time in 1/A, rates in A, lengths in units of the transition
// wavelength lambda0 (so k0 r = 2 pi r). hbar = 1.
//
// Product basis ordering is (|11>, |12>, |21>, |22>) where |ij> means atom 1
// in level i and atom 2 in level j (1 = ground, 2 = excited).
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qjump {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Matrix<cplx, 4, 1>;
using Mat4 = Eigen::Matrix<cplx, 4, 4>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I_unit{0.0, 1.0};

/// Raised when a caller violates a documented precondition.
class PreconditionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure cannot produce a valid result.
class ComputationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace basis {
inline constexpr int k11 = 0;
inline constexpr int k12 = 1;
inline constexpr int k21 = 2;
inline constexpr int k22 = 3;
}  // namespace basis

// ---------------------------------------------------------------------------
// PhysicalParams

struct PhysicalParams {
    double decay_rate = 1.0;            // A
    cplx rabi_1{0.0, 0.0};              // Omega^(1) in units of A
    cplx rabi_2{0.0, 0.0};              // Omega^(2) in units of A
    double separation = 10.0;           // r / lambda0
    Vec3 dipole = Vec3::UnitZ();        // unit vector D21 (default perpendicular to atom axis)

    static PhysicalParams driven(double omega, double separation) {
        PhysicalParams p;
        p.rabi_1 = p.rabi_2 = cplx{omega, 0.0};
        p.separation = separation;
        return p;
    }

    double k0r() const { return 2.0 * pi * separation; }
    double k0() const { return 2.0 * pi; }

    /// Atom 1 sits at -r/2 x, atom 2 at +r/2 x (lengths in lambda0).
    Vec3 position(int atom) const {
        const double s = (atom == 1 ? -0.5 : 0.5) * separation;
        return Vec3{s, 0.0, 0.0};
    }

    Vec3 axis() const { return Vec3::UnitX(); }

    bool equal_real_drive() const {
        return rabi_1 == rabi_2 && rabi_1.imag() == 0.0;
    }

    /// Second-order perturbation theory for the coupling is not validated this close.
    bool outside_validated_range() const { return separation < 0.1; }

    void validate() const {
        if (!(decay_rate > 0.0) || !std::isfinite(decay_rate))
            throw PreconditionError("decay_rate must be positive");
        if (!(separation > 0.0) || !std::isfinite(separation))
            throw PreconditionError("separation must be positive");
        if (std::abs(dipole.norm() - 1.0) > 1e-12)
            throw PreconditionError("dipole orientation must be a unit vector");
        if (!std::isfinite(std::abs(rabi_1)) || !std::isfinite(std::abs(rabi_2)))
            throw PreconditionError("Rabi frequencies must be finite");
    }
};

// ---------------------------------------------------------------------------
// Direction on the unit sphere: theta polar from +z, phi azimuth from +x.

struct Direction {
    double theta = 0.0;
    double phi = 0.0;

    Vec3 unit_vector() const {
        const double st = std::sin(theta);
        return Vec3{st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
    }

    static Direction from_vector(const Vec3& v) {
        const Vec3 u = v.normalized();
        double ph = std::atan2(u.y(), u.x());
        if (ph < 0.0) ph += 2.0 * pi;
        return Direction{std::acos(std::clamp(u.z(), -1.0, 1.0)), ph};
    }
};

// ---------------------------------------------------------------------------
// PureState

class PureState {
  public:
    PureState() : amp_(Vec4::Zero()) { amp_(basis::k11) = 1.0; }
    explicit PureState(const Vec4& amplitudes) : amp_(amplitudes) {}

    static PureState basis_state(int index) {
        Vec4 v = Vec4::Zero();
        v(index) = 1.0;
        return PureState(v);
    }

    const Vec4& amplitudes() const { return amp_; }
    Vec4& amplitudes() { return amp_; }
    cplx operator[](int i) const { return amp_(i); }

    double squared_norm() const { return amp_.squaredNorm(); }
    bool is_normalized(double tol = 1e-10) const { return std::abs(squared_norm() - 1.0) <= tol; }

    PureState normalized() const {
        const double n = amp_.norm();
        if (n == 0.0) throw ComputationError("cannot normalize the zero vector");
        return PureState(amp_ / n);
    }

    void require_normalized(const char* who) const {
        if (!is_normalized())
            throw PreconditionError(std::string(who) + ": state is not normalized");
    }

  private:
    Vec4 amp_;
};

// ---------------------------------------------------------------------------
// DensityMatrix

class DensityMatrix {
  public:
    DensityMatrix() : m_(Mat4::Zero()) { m_(0, 0) = 1.0; }
    explicit DensityMatrix(const Mat4& m) : m_(m) {}

    static DensityMatrix from_pure(const PureState& psi) {
        return DensityMatrix(psi.amplitudes() * psi.amplitudes().adjoint());
    }

    const Mat4& matrix() const { return m_; }
    Mat4& matrix() { return m_; }
    cplx operator()(int i, int j) const { return m_(i, j); }

    cplx trace() const { return m_.trace(); }

    double hermiticity_error() const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff(); }

    double min_eigenvalue() const {
        const Mat4 h = 0.5 * (m_ + m_.adjoint());
        Eigen::SelfAdjointEigenSolver<Mat4> es(h, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    bool is_physical(double herm_tol = 1e-10, double trace_tol = 1e-9, double eig_tol = 1e-9) const {
        return hermiticity_error() <= herm_tol && std::abs(trace() - 1.0) <= trace_tol &&
               min_eigenvalue() >= -eig_tol;
    }

    void require_physical(const char* who) const {
        if (!is_physical())
            throw PreconditionError(std::string(who) + ": density matrix is not physical");
    }

  private:
    Mat4 m_;
};

// ---------------------------------------------------------------------------
// Elementary operators

/// S^-_i = |1><2| on atom i.
inline Mat4 lowering_operator(int atom) {
    if (atom != 1 && atom != 2) throw PreconditionError("atom index must be 1 or 2");
    Mat4 s = Mat4::Zero();
    if (atom == 1) {
        s(basis::k11, basis::k21) = 1.0;
        s(basis::k12, basis::k22) = 1.0;
    } else {
        s(basis::k11, basis::k12) = 1.0;
        s(basis::k21, basis::k22) = 1.0;
    }
    return s;
}

inline Mat4 raising_operator(int atom) { return lowering_operator(atom).adjoint(); }

/// Rows of the transform are the Dicke states (|g>, |s>, |a>, |e>) written in
/// product coordinates, so dicke = T * product.
inline Mat4 dicke_matrix() {
    const double h = 1.0 / std::numbers::sqrt2;
    Mat4 t = Mat4::Zero();
    t(0, basis::k11) = 1.0;
    t(1, basis::k12) = h;
    t(1, basis::k21) = h;
    t(2, basis::k12) = h;
    t(2, basis::k21) = -h;
    t(3, basis::k22) = 1.0;
    return t;
}

namespace dicke {
inline constexpr int g = 0;
inline constexpr int s = 1;
inline constexpr int a = 2;
inline constexpr int e = 3;
}  // namespace dicke

inline Vec4 dicke_transform(const PureState& state) { return dicke_matrix() * state.amplitudes(); }

inline PureState dicke_inverse(const Vec4& dicke_amplitudes) {
    return PureState(dicke_matrix().adjoint() * dicke_amplitudes);
}

/// Operator expressed in Dicke coordinates.
inline Mat4 to_dicke(const Mat4& op) {
    const Mat4 t = dicke_matrix();
    return t * op * t.adjoint();
}

inline PureState dicke_state(int which) {
    Vec4 d = Vec4::Zero();
    d(which) = 1.0;
    return dicke_inverse(d);
}

/// R+- = (S^-_1 +- S^-_2)/sqrt(2).
inline std::pair<Mat4, Mat4> symmetric_jump_operators() {
    const Mat4 s1 = lowering_operator(1);
    const Mat4 s2 = lowering_operator(2);
    const double h = 1.0 / std::numbers::sqrt2;
    return {h * (s1 + s2), h * (s1 - s2)};
}

}  // namespace qjump

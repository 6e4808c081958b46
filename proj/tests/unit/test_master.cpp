#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "qjump/master.hpp"
#include "support/stats.hpp"

using namespace qjump;

namespace {

double max_diff(const Mat4& a, const Mat4& b) { return (a - b).cwiseAbs().maxCoeff(); }

Liouvillian liouvillian(double omega, double r, bool with_coupling = true) {
    const PhysicalParams p = PhysicalParams::driven(omega, r);
    return build_liouvillian(p, with_coupling ? dipole_coupling(p) : DipoleCoupling::neglected());
}

}  // namespace

TEST(Vectorization, SandwichMatchesDirectProduct) {
    std::mt19937_64 rng(1);
    const Mat4 a = test_support::random_density(rng).matrix() * cplx{0.3, 1.2};
    const Mat4 b = test_support::random_density(rng).matrix() * cplx{-0.7, 0.1};
    const Mat4 rho = test_support::random_density(rng).matrix();
    EXPECT_LT(max_diff(unvectorize(sandwich(a, b) * vectorize(rho)), a * rho * b), 1e-15);
    EXPECT_EQ(max_diff(unvectorize(vectorize(rho)), rho), 0.0);
    // column stacking: element (i, j) sits at i + 4 j
    EXPECT_EQ(vectorize(rho)(1 + 4 * 2), rho(1, 2));
}

TEST(Liouvillian, GroundStateStationaryWithoutDrive) {
    const Liouvillian l = liouvillian(0.0, 10.0, false);
    EXPECT_EQ(l.apply(DensityMatrix().matrix()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Liouvillian, MatchesDirectMasterEquation) {
    const PhysicalParams p = PhysicalParams::driven(0.4, 0.3);
    const DipoleCoupling c = dipole_coupling(p);
    const Liouvillian l = build_liouvillian(p, c);
    const Mat4 h = conditional_hamiltonian(p, c).matrix;
    std::mt19937_64 rng(2);
    for (int n = 0; n < 5; ++n) {
        const DensityMatrix rho = test_support::random_density(rng);
        const Mat4 m = rho.matrix();
        const Mat4 direct = -I_unit * (h * m - m * h.adjoint()) + collective_jump_term(rho, p, c);
        EXPECT_LT(max_diff(l.apply(m), direct), 1e-14);
    }
}

TEST(Liouvillian, TracePreservingAndStable) {
    for (double r : {1.0 / pi, 1.0, 10.0}) {
        const Liouvillian l = liouvillian(0.3, r);
        // vec(I)^dagger L = 0
        Vec16 id = vectorize(Mat4::Identity());
        EXPECT_LT((id.adjoint() * l.superoperator).cwiseAbs().maxCoeff(), 1e-12);
        std::mt19937_64 rng(3);
        for (int n = 0; n < 10; ++n)
            EXPECT_LT(std::abs(l.apply(test_support::random_density(rng).matrix()).trace()), 1e-12);
        Eigen::ComplexEigenSolver<Mat16> es(l.superoperator);
        EXPECT_LE(es.eigenvalues().real().maxCoeff(), 1e-9);
    }
}

TEST(Integrate, FrozenWhenGeneratorVanishes) {
    Liouvillian zero{Mat16::Zero()};
    std::mt19937_64 rng(4);
    const DensityMatrix rho0 = test_support::random_density(rng);
    const auto snaps = integrate(zero, rho0, 1.0, 1e-2);
    ASSERT_EQ(snaps.size(), 200u);
    EXPECT_EQ(max_diff(snaps.back().rho.matrix(), rho0.matrix()), 0.0);
}

TEST(Integrate, PureDecayCascade) {
    const Liouvillian l = liouvillian(0.0, 10.0, false);
    const auto snaps = integrate(l, DensityMatrix::from_pure(PureState::basis_state(basis::k22)), 1.0, 1e-3, {0.5, 1.0});
    ASSERT_EQ(snaps.size(), 2u);
    EXPECT_NEAR(snaps[1].time, 1.0, 1e-12);
    EXPECT_NEAR(snaps[0].rho(basis::k22, basis::k22).real(), std::exp(-1.0), 1e-8);
    EXPECT_NEAR(snaps[1].rho(basis::k22, basis::k22).real(), std::exp(-2.0), 1e-8);
    // each singly excited state: e^{-t} - e^{-2t}
    EXPECT_NEAR(snaps[1].rho(basis::k12, basis::k12).real(), std::exp(-1.0) - std::exp(-2.0), 1e-8);
}

TEST(Integrate, ConvergesToSteadyState) {
    const Liouvillian l = liouvillian(0.3, 10.0);
    const auto snaps = integrate(l, DensityMatrix(), 20.0, 1e-3, {20.0});
    EXPECT_LT((snaps.back().rho.matrix() - steady_state_numeric(l).matrix()).norm(), 1e-6);
}

TEST(Integrate, MatchesMatrixExponential) {
    const Liouvillian l = liouvillian(0.3, 10.0);
    const Mat16 propagator = (l.superoperator * 20.0).exp();
    const auto snaps = integrate(l, DensityMatrix(), 20.0, 1e-3, {20.0});
    EXPECT_LT((snaps.back().rho.matrix() - unvectorize(propagator * vectorize(DensityMatrix().matrix()))).norm(), 1e-12);
}

TEST(Integrate, SnapshotsStayPhysical) {
    const Liouvillian l = liouvillian(1.5, 1.0 / pi);
    for (const auto& s : integrate(l, DensityMatrix::from_pure(dicke_state(dicke::a)), 5.0, 5e-3)) {
        EXPECT_GE(s.rho.min_eigenvalue(), -1e-9);
        EXPECT_NEAR(s.rho.trace().real(), 1.0, 1e-9);
    }
}

TEST(Integrate, RejectsBadArguments) {
    const Liouvillian l = liouvillian(0.3, 1.0);
    EXPECT_THROW(integrate(l, DensityMatrix(), 1.0, 0.02), PreconditionError);
    EXPECT_THROW(integrate(l, DensityMatrix(), 1.0, 0.0), PreconditionError);
    EXPECT_THROW(integrate(l, DensityMatrix(Mat4::Identity()), 1.0, 1e-3), PreconditionError);
    EXPECT_THROW(integrate(l, DensityMatrix(), 1.0, 1e-3, {0.5, 0.2}), PreconditionError);
    EXPECT_THROW(integrate(l, DensityMatrix(), 1.0, 1e-3, {2.0}), PreconditionError);
}

TEST(SteadyState, UndrivenIsGround) {
    const DensityMatrix rho = steady_state_numeric(liouvillian(0.0, 1.0));
    EXPECT_LT(max_diff(rho.matrix(), DensityMatrix().matrix()), 1e-12);
    const AnalyticSteadyState a = steady_state_analytic(PhysicalParams::driven(0.0, 1.0), DipoleCoupling::neglected());
    EXPECT_EQ(a.rho_gg, 1.0);
    EXPECT_EQ(a.rho_ss + a.rho_aa + a.rho_ee, 0.0);
}

TEST(SteadyState, ReferencePopulationsWithoutCoupling) {
    const PhysicalParams p = PhysicalParams::driven(0.3, 10.0);
    const AnalyticSteadyState a = steady_state_analytic(p, DipoleCoupling::neglected());
    EXPECT_NEAR(a.normalization, 1.3924, 1e-14);
    EXPECT_NEAR(a.rho_ee, 0.00581729388106865843, 1e-15);
    EXPECT_NEAR(a.rho_aa, 0.00581729388106865843, 1e-15);
    EXPECT_NEAR(a.rho_ss, 0.135090491238149956909, 1e-15);
    EXPECT_NEAR(a.rho_gg, 0.853274920999712726228, 1e-15);
    const Mat4 d = dicke_elements(steady_state_numeric(build_liouvillian(p, DipoleCoupling::neglected())));
    EXPECT_NEAR(d(dicke::g, dicke::g).real(), a.rho_gg, 1e-10);
    EXPECT_NEAR(d(dicke::s, dicke::s).real(), a.rho_ss, 1e-10);
    EXPECT_NEAR(d(dicke::a, dicke::a).real(), a.rho_aa, 1e-10);
    EXPECT_NEAR(d(dicke::e, dicke::e).real(), a.rho_ee, 1e-10);
}

TEST(SteadyState, PopulationsSumToOne) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> w(0.0, 3.0);
    std::uniform_real_distribution<double> c(-1.0, 1.0);
    for (int n = 0; n < 200; ++n) {
        const AnalyticSteadyState a =
            steady_state_analytic(PhysicalParams::driven(w(rng), 1.0), DipoleCoupling{cplx{c(rng), 3.0 * c(rng)}});
        EXPECT_NEAR(a.rho_gg + a.rho_ss + a.rho_aa + a.rho_ee, 1.0, 1e-12);
    }
}

TEST(SteadyState, AnalyticMatchesNumericWithCoupling) {
    for (double omega : {0.05, 0.3, 1.0, 4.0})
        for (double r : {0.15, 1.0 / pi, 0.5, 1.0, 10.0}) {
            const PhysicalParams p = PhysicalParams::driven(omega, r);
            const DipoleCoupling c = dipole_coupling(p);
            const Mat4 d = dicke_elements(steady_state_numeric(build_liouvillian(p, c)));
            const AnalyticSteadyState a = steady_state_analytic(p, c);
            EXPECT_NEAR(d(dicke::g, dicke::g).real(), a.rho_gg, 1e-8) << omega << " " << r;
            EXPECT_NEAR(d(dicke::s, dicke::s).real(), a.rho_ss, 1e-8);
            EXPECT_NEAR(d(dicke::a, dicke::a).real(), a.rho_aa, 1e-8);
            EXPECT_NEAR(d(dicke::e, dicke::e).real(), a.rho_ee, 1e-8);
            EXPECT_NEAR(d(dicke::s, dicke::a).imag(), a.im_rho_sa, 1e-8);
        }
}

TEST(SteadyState, SaturationLimit) {
    const Mat4 d = dicke_elements(steady_state_numeric(liouvillian(100.0, 10.0, false)));
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(d(i, i).real(), 0.25, 1e-3);
}

TEST(SteadyState, KernelVectorIsLongTimeLimit) {
    const Liouvillian l = liouvillian(0.8, 1.0 / pi);
    ASSERT_EQ(kernel_dimension(l), 1);
    const auto snaps = integrate(l, DensityMatrix::from_pure(dicke_state(dicke::e)), 40.0, 5e-3, {40.0});
    EXPECT_LT(max_diff(snaps.back().rho.matrix(), steady_state_numeric(l).matrix()), 1e-6);
}

TEST(SteadyState, DegenerateKernelIsAnError) {
    EXPECT_THROW(steady_state_numeric(Liouvillian{Mat16::Zero()}), ComputationError);
}

TEST(SteadyState, AnalyticRequiresEqualRealDrive) {
    PhysicalParams p = PhysicalParams::driven(0.3, 1.0);
    p.rabi_2 = 0.2;
    EXPECT_THROW(steady_state_analytic(p, DipoleCoupling::neglected()), PreconditionError);
    p.rabi_2 = cplx{0.0, 0.3};
    p.rabi_1 = cplx{0.0, 0.3};
    EXPECT_THROW(steady_state_analytic(p, DipoleCoupling::neglected()), PreconditionError);
}

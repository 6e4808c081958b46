// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qjump/qjump.hpp"
#include "qjump_cli/commands.hpp"
#include "support/stats.hpp"

using namespace qjump;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double time_limit_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double relative_error(double got, double want) {
    if (std::abs(want) < 1e-12) return std::abs(got - want);
    return std::abs(got - want) / std::abs(want);
}

DensityMatrix steady(const PhysicalParams& p, const DipoleCoupling& c) {
    return steady_state_numeric(build_liouvillian(p, c));
}

Outcome interference_pattern_criterion() {
    // CLI path, coupling neglected
    cli::RunConfig cfg;
    cfg.omega = 0.3;
    cfg.r = 10.0;
    cfg.include_coupling = false;
    std::ostringstream csv;
    cli::cmd_pattern(cfg, csv);
    const PhysicalParams p = cfg.physical();
    std::istringstream in(csv.str());
    std::string line;
    double worst_closed = 0.0;
    std::size_t rows = 0;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        double theta, phi, value;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &theta, &phi, &value) != 3) return {false, "bad CSV row"};
        worst_closed = std::max(worst_closed, relative_error(value, closed_form_intensity(p, {theta, phi})));
        ++rows;
    }

    const DipoleCoupling c = dipole_coupling(p);
    const AngularGrid g = interference_pattern(steady(p, c), p, make_grid());
    double worst_physical = 0.0;
    for (std::size_t i = 0; i < g.theta_points.size(); ++i)
        for (std::size_t j = 0; j < g.phi_points.size(); ++j)
            worst_physical = std::max(
                worst_physical, relative_error(g.at(i, j), closed_form_intensity(p, {g.theta_points[i], g.phi_points[j]})));

    const int maxima = count_maxima(phi_cut(steady(p, c), p, 0.5 * pi, 4001));
    const bool ok = rows == 64u * 128u && worst_closed < 1e-10 && worst_physical < 0.02 && maxima == 21;
    return {ok, "closed-form rel err " + fmt("%.3g", worst_closed) + ", physical C rel err " +
                    fmt("%.3g", worst_physical) + ", maxima " + std::to_string(maxima)};
}

Outcome visibility_criterion() {
    const PhysicalParams p = PhysicalParams::driven(0.3, 10.0);
    const Visibility v = fringe_visibility(steady(p, DipoleCoupling::neglected()), p, 0.5 * pi);
    const double want = 1.0 / 1.18;
    return {std::abs(v.value - want) <= 1e-6, "visibility " + fmt("%.12f", v.value) + " vs " + fmt("%.12f", want)};
}

Outcome bunching_criterion() {
    const PhysicalParams p = PhysicalParams::driven(0.3, 10.0);
    const DensityMatrix rho = steady(p, DipoleCoupling::neglected());
    // path phase xi = k0 r sin(theta) cos(phi): peak at cos(xi) = -1, trough at xi = 0
    const double peak_phi = std::acos(0.05);
    const auto peak = g2_zero(rho, p, {0.5 * pi, peak_phi});
    const auto trough = g2_zero(rho, p, {0.5 * pi, 0.5 * pi});
    if (!peak || !trough) return {false, "g2 undefined"};
    double scan_max = 0.0;
    for (int j = 0; j <= 4000; ++j) {
        const auto g = g2_zero(rho, p, {0.5 * pi, pi * j / 4000.0});
        if (g) scan_max = std::max(scan_max, *g);
    }
    const bool peak_ok = std::abs(*peak - 42.98) <= 0.01 && scan_max <= *peak + 1e-9;
    const bool trough_ok = std::abs(*trough - 0.2931) <= 1e-4;
    return {peak_ok && trough_ok, "peak " + fmt("%.6f", *peak) + (peak_ok ? " ok" : " out of 42.98 +- 0.01") +
                                      ", trough " + fmt("%.6f", *trough) +
                                      (trough_ok ? " ok" : " out of 0.2931 +- 1e-4")};
}

Outcome master_jump_criterion() {
    const PhysicalParams p = PhysicalParams::driven(0.3, 1.0 / pi);
    const DipoleCoupling c = dipole_coupling(p);
    TrajectoryOptions o;
    o.t_final = 5.0;
    o.dt = 1e-3;
    o.snapshot_times = {1.0, 2.0, 3.0, 4.0, 5.0};
    const EnsembleStats s = run_ensemble(p, c, PureState(), o, 10000, 1);
    const auto m = integrate(build_liouvillian(p, c), DensityMatrix(), 5.0, 1e-3, s.times);
    int violations = 0;
    double worst = 0.0;
    for (std::size_t k = 0; k < s.times.size(); ++k)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                const cplx d = s.mean_density[k](i, j) - m[k].rho(i, j);
                const cplx se = s.density_stderr[k](i, j);
                const double zr = std::abs(d.real()) / (se.real() + 1e-9);
                const double zi = std::abs(d.imag()) / (se.imag() + 1e-9);
                worst = std::max({worst, zr, zi});
                violations += (std::abs(d.real()) > 3.0 * se.real() + 1e-9) + (std::abs(d.imag()) > 3.0 * se.imag() + 1e-9);
            }
    return {violations == 0, "max |diff|/SE " + fmt("%.3f", worst) + ", components beyond 3 SE: " +
                                 std::to_string(violations) + " of 160"};
}

Outcome quadrature_criterion() {
    double worst = 0.0;
    for (double r : {1.0 / pi, 1.0, 10.0}) {
        const PhysicalParams p = PhysicalParams::driven(0.3, r);
        const DipoleCoupling c = dipole_coupling(p);
        std::mt19937_64 rng(20);
        for (int n = 0; n < 20; ++n) {
            const DensityMatrix rho = test_support::random_density(rng);
            worst = std::max(worst, (integrated_jump_term(rho, p) - collective_jump_term(rho, p, c)).cwiseAbs().maxCoeff());
        }
    }
    return {worst < 1e-6, "max elementwise diff " + fmt("%.3g", worst) + " over 60 cases"};
}

Outcome steady_state_criterion() {
    double worst = 0.0;
    for (double omega : {0.05, 0.3, 1.0, 2.0, 4.0})
        for (double r : {0.15, 1.0 / pi, 0.5, 1.0, 10.0}) {
            const PhysicalParams p = PhysicalParams::driven(omega, r);
            const DipoleCoupling c = dipole_coupling(p);
            const Mat4 d = dicke_elements(steady(p, c));
            const AnalyticSteadyState a = steady_state_analytic(p, c);
            worst = std::max({worst, std::abs(d(dicke::g, dicke::g).real() - a.rho_gg),
                              std::abs(d(dicke::s, dicke::s).real() - a.rho_ss),
                              std::abs(d(dicke::a, dicke::a).real() - a.rho_aa),
                              std::abs(d(dicke::e, dicke::e).real() - a.rho_ee),
                              std::abs(d(dicke::s, dicke::a).imag() - a.im_rho_sa)});
        }
    return {worst < 1e-8, "max diff " + fmt("%.3g", worst) + " over 5x5 grid"};
}

Outcome which_way_criterion() {
    const PhysicalParams p = PhysicalParams::driven(0.3, 10.0);
    const std::vector<std::pair<std::string, PureState>> states{{"s", dicke_state(dicke::s)},
                                                                {"a", dicke_state(dicke::a)},
                                                                {"21", PureState::basis_state(basis::k21)},
                                                                {"e", dicke_state(dicke::e)}};
    bool ok = true;
    std::string detail;
    for (const auto& [name, psi] : states) {
        const DensityMatrix rho = DensityMatrix::from_pure(psi);
        const bool flat = pattern_is_flat(rho, p);
        const bool no_coherence = !interference_criterion(rho).interference;
        ok = ok && flat == no_coherence;
        detail += name + (flat ? ":flat " : ":fringes ");
    }
    return {ok, detail};
}

Outcome waiting_time_criterion() {
    const PhysicalParams p = PhysicalParams::driven(0.0, 1.0 / pi);
    const DipoleCoupling c = dipole_coupling(p);
    const double re = c.value.real();
    TrajectoryOptions o;
    o.t_final = 40.0;
    o.dt = 1e-3;
    o.max_jumps = 1;
    auto first_jumps = [&](int which, std::uint64_t seed) {
        std::vector<double> t;
        for (const auto& rec : run_trajectories(p, c, dicke_state(which), o, 10000, seed))
            if (!rec.jumps.empty()) t.push_back(rec.jumps.front().time);
        return t;
    };
    const auto ts = first_jumps(dicke::s, 1);
    const auto ta = first_jumps(dicke::a, 2);
    const double ps = test_support::ks_test(ts, [&](double t) { return 1.0 - std::exp(-(1.0 + re) * t); });
    const double pa = test_support::ks_test(ta, [&](double t) { return 1.0 - std::exp(-(1.0 - re) * t); });
    const bool ok = ts.size() == 10000u && ta.size() == 10000u && ps > 0.01 && pa > 0.01;
    return {ok, "superradiant p " + fmt("%.4f", ps) + ", subradiant p " + fmt("%.4f", pa)};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "interference pattern", 10.0, interference_pattern_criterion},
        {2, "fringe visibility", 1.0, visibility_criterion},
        {3, "g2 bunching", 5.0, bunching_criterion},
        {4, "master/jump consistency", 300.0, master_jump_criterion},
        {5, "quadrature identity", 30.0, quadrature_criterion},
        {6, "steady-state closed form", 10.0, steady_state_criterion},
        {7, "which-way criterion", 1.0, which_way_criterion},
        {8, "waiting-time statistics", 60.0, waiting_time_criterion},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = elapsed < c.time_limit_s;
        const bool passed = o.passed && in_time;
        failures += !passed;
        std::printf("%s %d %s (%.2f s%s) %s\n", passed ? "PASS" : "FAIL", c.id, c.name.c_str(), elapsed,
                    in_time ? "" : ", over time limit", o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}

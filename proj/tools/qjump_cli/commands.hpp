// Subcommands of the qjump CLI. Each writes its result to `out` and returns
// the process exit code (0 success, 1 computation failure, 2 config error).
#pragma once

#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include "qjump/qjump.hpp"
#include "qjump_cli/config.hpp"

namespace qjump::cli {

using ojson = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitComputation = 1;
inline constexpr int kExitConfig = 2;

/// Shortest form that still round-trips: 17 significant digits.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline ojson metadata(const std::string& command, const RunConfig& c) {
    ojson m;
    m["program"] = "qjump";
    m["version"] = QJUMP_VERSION;
    m["command"] = command;
    m["config"] = to_json(c);
    if (c.physical().outside_validated_range()) m["warning"] = "r < 0.1 lambda0: outside validated range";
    return m;
}

inline void write_csv_metadata(std::ostream& out, const std::string& command, const RunConfig& c) {
    const ojson m = metadata(command, c);
    out << "# qjump " << QJUMP_VERSION << "\n";
    out << "# command: " << command << "\n";
    out << "# config: " << m["config"].dump() << "\n";
    if (m.contains("warning")) out << "# warning: " << m["warning"].get<std::string>() << "\n";
}

inline ojson matrix_json(const Mat4& m) {
    ojson re = ojson::array();
    ojson im = ojson::array();
    for (int i = 0; i < 4; ++i) {
        ojson rr = ojson::array();
        ojson ii = ojson::array();
        for (int j = 0; j < 4; ++j) {
            rr.push_back(m(i, j).real());
            ii.push_back(m(i, j).imag());
        }
        re.push_back(rr);
        im.push_back(ii);
    }
    return ojson{{"re", re}, {"im", im}};
}

inline ojson vector_json(const Vec4& v) {
    ojson re = ojson::array();
    ojson im = ojson::array();
    for (int i = 0; i < 4; ++i) {
        re.push_back(v(i).real());
        im.push_back(v(i).imag());
    }
    return ojson{{"re", re}, {"im", im}};
}

inline DensityMatrix configured_steady_state(const RunConfig& c) {
    return steady_state_numeric(build_liouvillian(c.physical(), c.coupling()));
}

// ---------------------------------------------------------------------------

inline int cmd_steady(const RunConfig& c, std::ostream& out) {
    const PhysicalParams p = c.physical();
    if (c.analytic && !p.equal_real_drive())
        throw ConfigError("analytic", "closed-form steady state requires omega2 == omega (set analytic=false)");
    const DipoleCoupling coupling = c.coupling();
    const DensityMatrix rho = configured_steady_state(c);
    const Mat4 d = dicke_elements(rho);

    ojson j;
    j["meta"] = metadata("steady", c);
    j["coupling"] = {{"re", coupling.value.real()}, {"im", coupling.value.imag()}};
    j["rho_numeric"] = matrix_json(rho.matrix());
    ojson num{{"gg", d(dicke::g, dicke::g).real()},
              {"ss", d(dicke::s, dicke::s).real()},
              {"aa", d(dicke::a, dicke::a).real()},
              {"ee", d(dicke::e, dicke::e).real()},
              {"im_sa", d(dicke::s, dicke::a).imag()}};
    j["dicke_numeric"] = num;
    if (c.analytic) {
        const AnalyticSteadyState a = steady_state_analytic(p, coupling);
        ojson an{{"gg", a.rho_gg}, {"ss", a.rho_ss}, {"aa", a.rho_aa},
                 {"ee", a.rho_ee}, {"im_sa", a.im_rho_sa}, {"N", a.normalization}};
        ojson diff;
        for (const char* k : {"gg", "ss", "aa", "ee", "im_sa"})
            diff[k] = num[k].get<double>() - an[k].get<double>();
        j["analytic"] = an;
        j["difference"] = diff;
    }
    j["total_emission_rate"] = total_emission_rate(rho, p, coupling);
    out << j.dump(2) << "\n";
    return kExitOk;
}

inline int cmd_pattern(const RunConfig& c, std::ostream& out) {
    const PhysicalParams p = c.physical();
    const DensityMatrix rho = configured_steady_state(c);
    const AngularGrid g = interference_pattern(rho, p, make_grid(c.n_theta, c.n_phi), c.threads);
    write_csv_metadata(out, "pattern", c);
    out << "theta,phi,intensity\n";
    for (std::size_t i = 0; i < g.theta_points.size(); ++i)
        for (std::size_t j = 0; j < g.phi_points.size(); ++j)
            out << format_number(g.theta_points[i]) << ',' << format_number(g.phi_points[j]) << ','
                << format_number(g.at(i, j)) << '\n';
    return kExitOk;
}

inline int cmd_g2(const RunConfig& c, std::ostream& out) {
    const PhysicalParams p = c.physical();
    const DensityMatrix rho = configured_steady_state(c);
    AngularGrid grid = make_grid(2, c.n_phi);
    grid.theta_points = {c.theta};
    const BunchingMap map = bunching_map(rho, p, grid, c.threads);
    write_csv_metadata(out, "g2", c);
    out << "phi,g2\n";
    for (std::size_t j = 0; j < map.g2.phi_points.size(); ++j)
        out << format_number(map.g2.phi_points[j]) << ',' << format_number(map.g2.at(0, j)) << '\n';
    return kExitOk;
}

inline int cmd_trajectory(const RunConfig& c, std::ostream& out) {
    if (c.dt > kMaxTrajectoryStep) throw ConfigError("dt", "must be <= 1e-3 for trajectories");
    const double t_final = c.t_final_or(10.0);
    if (c.window_start >= t_final) throw ConfigError("window_start", "must be < t_final");
    const PhysicalParams p = c.physical();
    const DipoleCoupling coupling = c.coupling();
    TrajectoryOptions opt;
    opt.t_final = t_final;
    opt.dt = c.dt;
    const long long n = c.trajectories_or(100);
    const auto records = run_trajectories(p, coupling, c.initial_state(), opt, n, c.seed, c.threads);

    out << ojson{{"meta", metadata("trajectory", c)}}.dump() << "\n";
    const double window = t_final - c.window_start;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto& rec : records) {
        ojson jumps = ojson::array();
        long long in_window = 0;
        for (const auto& ev : rec.jumps) {
            jumps.push_back(ojson::array({ev.time, ev.direction.theta, ev.direction.phi}));
            if (ev.time >= c.window_start) ++in_window;
        }
        out << ojson{{"seed", rec.seed}, {"jumps", jumps}, {"final_state", vector_json(rec.final_state.amplitudes())}}
                   .dump()
            << "\n";
        const double rate = in_window / window;
        sum += rate;
        sum_sq += rate * rate;
    }
    const double nn = static_cast<double>(n);
    const double mean = sum / nn;
    const double se = n > 1 ? std::sqrt(std::max(0.0, (sum_sq - nn * mean * mean) / (nn - 1.0)) / nn) : 0.0;
    ojson summary{{"trajectories", n}, {"mean_jump_rate", mean}, {"stderr", se}};
    try {
        summary["steady_state_rate"] = total_emission_rate(configured_steady_state(c), p, coupling);
    } catch (const ComputationError&) {
        summary["steady_state_rate"] = nullptr;
    }
    out << ojson{{"summary", summary}}.dump() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// validate

struct CheckResult {
    std::string name;
    bool passed = false;
    bool skipped = false;
    double metric = 0.0;
    double threshold = 0.0;
    std::string detail;
};

/// Random physical density matrix: G G^dagger / Tr with complex Gaussian G.
template <class Generator>
DensityMatrix random_density_matrix(Generator& rng) {
    std::normal_distribution<double> n01;
    Mat4 g;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) g(i, j) = cplx{n01(rng), n01(rng)};
    Mat4 rho = g * g.adjoint();
    rho /= rho.trace();
    return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

inline CheckResult check_quadrature_identity(const RunConfig& c) {
    CheckResult r{"quadrature_identity", false, false, 0.0, 1e-6, ""};
    const PhysicalParams p = c.physical();
    const DipoleCoupling coupling = c.coupling();
    Rng rng(c.seed);
    for (int n = 0; n < 5; ++n) {
        const DensityMatrix rho = random_density_matrix(rng);
        const Mat4 diff = integrated_jump_term(rho, p) - collective_jump_term(rho, p, coupling);
        r.metric = std::max(r.metric, diff.cwiseAbs().maxCoeff());
    }
    r.passed = r.metric < r.threshold;
    r.detail = "max elementwise |quadrature - collective form| over 5 random states";
    return r;
}

inline CheckResult check_steady_state(const RunConfig& c) {
    CheckResult r{"steady_state_closed_form", false, false, 0.0, 1e-8, ""};
    const PhysicalParams p = c.physical();
    if (!p.equal_real_drive()) {
        r.skipped = r.passed = true;
        r.detail = "skipped: unequal drive";
        return r;
    }
    const DipoleCoupling coupling = c.coupling();
    const Mat4 d = dicke_elements(steady_state_numeric(build_liouvillian(p, coupling)));
    const AnalyticSteadyState a = steady_state_analytic(p, coupling);
    r.metric = std::max({std::abs(d(0, 0).real() - a.rho_gg), std::abs(d(1, 1).real() - a.rho_ss),
                         std::abs(d(2, 2).real() - a.rho_aa), std::abs(d(3, 3).real() - a.rho_ee),
                         std::abs(d(1, 2).imag() - a.im_rho_sa)});
    r.passed = r.metric < r.threshold;
    r.detail = "max |numeric - closed form| over Dicke populations and Im rho_sa";
    return r;
}

inline CheckResult check_g2_closed_form(const RunConfig& c) {
    CheckResult r{"g2_closed_form", false, false, 0.0, 1e-10, ""};
    PhysicalParams p = c.physical();
    if (!p.equal_real_drive() || std::abs(p.dipole.dot(p.axis())) > 1e-12 || p.rabi_1.real() == 0.0) {
        r.skipped = r.passed = true;
        r.detail = "skipped: needs equal real non-zero drive and dipole perpendicular to the atom axis";
        return r;
    }
    const DensityMatrix rho = steady_state_numeric(build_liouvillian(p, DipoleCoupling::neglected()));
    const double w = p.rabi_1.real() / p.decay_rate;
    for (int j = 0; j < 64; ++j) {
        const Direction k{0.5 * pi, 2.0 * pi * (j + 0.25) / 64};
        const auto g = g2_zero(rho, p, k);
        if (!g) continue;
        const double ref = closed_form_g2(w, path_phase(p, k));
        r.metric = std::max(r.metric, std::abs(*g - ref) / std::max(1.0, ref));
    }
    r.passed = r.metric < r.threshold;
    r.detail = "max relative |g2 pipeline (C = 0) - closed form| at theta = pi/2";
    return r;
}

inline CheckResult check_trajectory_vs_master(const RunConfig& c) {
    CheckResult r{"trajectory_vs_master", false, false, 0.0, 0.0, ""};
    const PhysicalParams p = c.physical();
    const DipoleCoupling coupling = c.coupling();
    const double t_final = c.t_final_or(5.0);
    const long long n = c.trajectories_or(100000);

    TrajectoryOptions opt;
    opt.t_final = t_final;
    opt.dt = c.dt;
    opt.enforce_step_limit = false;
    for (int k = 1; k <= 5; ++k) opt.snapshot_times.push_back(t_final * k / 5.0);
    EnsembleOptions eo;
    eo.threads = c.threads;
    const EnsembleStats stats = run_ensemble(p, coupling, c.initial_state(), opt, n, c.seed, eo);

    const auto master = integrate(build_liouvillian(p, coupling), DensityMatrix::from_pure(c.initial_state()),
                                  stats.times.back(), 1e-3, stats.times);
    // Family-wise 1% level over all compared real components (Bonferroni).
    const int comparisons = static_cast<int>(stats.times.size()) * 32;
    const double z = boost::math::quantile(boost::math::complement(boost::math::normal(), 0.005 / comparisons));
    r.threshold = z;
    for (std::size_t k = 0; k < stats.times.size(); ++k) {
        const Mat4 diff = stats.mean_density[k].matrix() - master[k].rho.matrix();
        const Mat4& se = stats.density_stderr[k];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                const double zr = std::abs(diff(i, j).real()) / (se(i, j).real() + 1e-9);
                const double zi = std::abs(diff(i, j).imag()) / (se(i, j).imag() + 1e-9);
                r.metric = std::max({r.metric, zr, zi});
            }
    }
    r.passed = r.metric <= r.threshold;
    r.detail = "max |ensemble - master| / (stderr + 1e-9) over 5 checkpoints, N = " + std::to_string(n);
    return r;
}

inline int cmd_validate(const RunConfig& c, std::ostream& out, std::ostream& human) {
    std::vector<CheckResult> checks;
    const std::vector<std::function<CheckResult(const RunConfig&)>> suite{
        check_quadrature_identity, check_steady_state, check_g2_closed_form, check_trajectory_vs_master};
    for (const auto& run : suite) {
        try {
            checks.push_back(run(c));
        } catch (const std::exception& e) {
            checks.push_back({"error", false, false, 0.0, 0.0, e.what()});
        }
    }
    bool all = true;
    ojson list = ojson::array();
    for (const auto& ch : checks) {
        all = all && ch.passed;
        human << (ch.passed ? "PASS " : "FAIL ") << ch.name << (ch.skipped ? " (skipped)" : "")
              << "  metric=" << format_number(ch.metric) << " threshold=" << format_number(ch.threshold) << "  "
              << ch.detail << "\n";
        list.push_back(ojson{{"name", ch.name},
                             {"passed", ch.passed},
                             {"skipped", ch.skipped},
                             {"metric", ch.metric},
                             {"threshold", ch.threshold},
                             {"detail", ch.detail}});
    }
    human << (all ? "validate: all checks passed\n" : "validate: FAILED\n");
    ojson j;
    j["meta"] = metadata("validate", c);
    j["checks"] = list;
    j["passed"] = all;
    out << j.dump(2) << "\n";
    return all ? kExitOk : kExitComputation;
}

/// Dispatches a subcommand, translating exceptions into exit codes and a
/// structured JSON diagnostic on `err`.
inline int run_command(const std::string& name, const RunConfig& c, std::ostream& out, std::ostream& err,
                       std::ostream& human) {
    try {
        validate(c);
        if (name == "steady") return cmd_steady(c, out);
        if (name == "pattern") return cmd_pattern(c, out);
        if (name == "g2") return cmd_g2(c, out);
        if (name == "trajectory") return cmd_trajectory(c, out);
        if (name == "validate") return cmd_validate(c, out, human);
        throw ConfigError("command", "unknown command '" + name + "'");
    } catch (const ConfigError& e) {
        err << ojson{{"error", {{"kind", "config"}, {"field", e.field()}, {"message", e.what()}}}}.dump() << "\n";
        return kExitConfig;
    } catch (const PreconditionError& e) {
        err << ojson{{"error", {{"kind", "config"}, {"field", "parameters"}, {"message", e.what()}}}}.dump() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << ojson{{"error", {{"kind", "computation"}, {"message", e.what()}}}}.dump() << "\n";
        return kExitComputation;
    }
}

}  // namespace qjump::cli

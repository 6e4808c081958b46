#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qjump_cli/commands.hpp"

namespace {

using qjump::cli::RunConfig;

struct Overrides {
    double omega, omega2, r, theta, dt, t_final, window_start;
    std::vector<double> dipole;
    std::string coupling, initial, output, config;
    int n_theta, n_phi;
    long long trajectories;
    std::uint64_t seed;
    unsigned threads;
    bool no_analytic = false;
    bool flip = false;
};

void add_common(CLI::App& app, Overrides& o) {
    app.add_option("--config", o.config, "JSON manifest; explicit flags override it");
    app.add_option("--omega", o.omega, "Rabi frequency Omega/A (both atoms unless --omega2)");
    app.add_option("--omega2", o.omega2, "Rabi frequency Omega/A on atom 2");
    app.add_option("-r,--separation", o.r, "interatomic distance in units of lambda0");
    app.add_option("--dipole", o.dipole, "dipole direction (3 components)")->expected(3);
    app.add_option("--coupling", o.coupling, "include | neglect")->check(CLI::IsMember({"include", "neglect"}));
    app.add_option("--n-theta", o.n_theta, "polar grid points");
    app.add_option("--n-phi", o.n_phi, "azimuthal grid points");
    app.add_option("--theta", o.theta, "polar angle of the g2 cut");
    app.add_option("-n,--trajectories", o.trajectories, "number of trajectories");
    app.add_option("--seed", o.seed, "base random seed");
    app.add_option("--dt", o.dt, "time step in units of 1/A");
    app.add_option("--t-final", o.t_final, "final time in units of 1/A");
    app.add_option("--window-start", o.window_start, "start of the jump-rate window");
    app.add_option("--initial", o.initial, "initial state: g, s, a, e, 11, 12, 21, 22");
    app.add_option("-o,--output", o.output, "output file ('-' for stdout)");
    app.add_option("--threads", o.threads, "worker threads (0 = auto)");
    app.add_flag("--no-analytic", o.no_analytic, "skip the closed-form steady state");
    app.add_flag("--inject-coupling-sign-flip", o.flip)->group("");
}

RunConfig resolve(const CLI::App& app, const Overrides& o) {
    RunConfig c = o.config.empty() ? RunConfig{} : qjump::cli::load_config_file(o.config);
    auto given = [&](const char* name) { return app.count(name) > 0; };
    if (given("--omega")) c.omega = o.omega;
    if (given("--omega2")) c.omega2 = o.omega2;
    if (given("--separation")) c.r = o.r;
    if (given("--dipole")) c.dipole = {o.dipole[0], o.dipole[1], o.dipole[2]};
    if (given("--coupling")) c.include_coupling = o.coupling == "include";
    if (given("--n-theta")) c.n_theta = o.n_theta;
    if (given("--n-phi")) c.n_phi = o.n_phi;
    if (given("--theta")) c.theta = o.theta;
    if (given("--trajectories")) c.trajectories = o.trajectories;
    if (given("--seed")) c.seed = o.seed;
    if (given("--dt")) c.dt = o.dt;
    if (given("--t-final")) c.t_final = o.t_final;
    if (given("--window-start")) c.window_start = o.window_start;
    if (given("--initial")) c.initial = o.initial;
    if (given("--output")) c.output = o.output;
    if (given("--threads")) c.threads = o.threads;
    if (o.no_analytic) c.analytic = false;
    c.flip_coupling_sign = o.flip;
    return c;
}

void print_error(const std::string& kind, const std::string& field, const std::string& message) {
    nlohmann::ordered_json e{{"kind", kind}};
    if (!field.empty()) e["field"] = field;
    e["message"] = message;
    std::cerr << nlohmann::ordered_json{{"error", e}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Directional photon emission from two driven two-level atoms"};
    app.set_version_flag("--version", QJUMP_VERSION);
    app.require_subcommand(1);

    const std::vector<std::pair<const char*, const char*>> commands{
        {"steady", "steady-state density matrix (numeric and closed form) as JSON"},
        {"pattern", "steady-state emission pattern I(theta, phi) as CSV"},
        {"g2", "zero-delay photon correlation g2 along phi at fixed theta as CSV"},
        {"trajectory", "quantum-jump trajectories as JSON lines"},
        {"validate", "internal consistency checks"},
    };
    std::vector<Overrides> overrides(commands.size());
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        CLI::App* sub = app.add_subcommand(commands[i].first, commands[i].second);
        add_common(*sub, overrides[i]);
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("config", "arguments", e.what());
        return qjump::cli::kExitConfig;
    }

    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        const std::string name = commands[i].first;
        RunConfig c;
        try {
            c = resolve(*subs[i], overrides[i]);
        } catch (const qjump::cli::ConfigError& e) {
            print_error("config", e.field(), e.what());
            return qjump::cli::kExitConfig;
        }

        // Buffer the result so a failed run leaves no partial output file.
        std::ostringstream buffer;
        const int code = qjump::cli::run_command(name, c, buffer, std::cerr, std::cerr);
        if (c.output == "-") {
            std::cout << buffer.str();
        } else if (code != qjump::cli::kExitConfig) {
            std::ofstream out(c.output, std::ios::binary);
            if (!out) {
                print_error("io", "output", "cannot open output file '" + c.output + "'");
                return qjump::cli::kExitComputation;
            }
            out << buffer.str();
        }
        return code;
    }
    return qjump::cli::kExitConfig;
}

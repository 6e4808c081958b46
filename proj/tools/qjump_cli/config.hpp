// Run configuration for the qjump command-line front end.
#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qjump/qjump.hpp"

namespace qjump::cli {

/// Invalid configuration; `field` names the offending parameter.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

  private:
    std::string field_;
};

struct RunConfig {
    double omega = 0.3;                 // Omega / A on atom 1
    std::optional<double> omega2;       // Omega / A on atom 2 (defaults to omega)
    double r = 10.0;                    // r / lambda0
    std::array<double, 3> dipole{0.0, 0.0, 1.0};
    bool include_coupling = true;
    int n_theta = 64;
    int n_phi = 128;
    double theta = 0.5 * pi;            // polar angle of the g2 cut
    std::optional<long long> trajectories;
    std::uint64_t seed = 1;
    double dt = 1e-3;
    std::optional<double> t_final;
    double window_start = 0.0;
    std::string initial = "g";
    std::string output = "-";
    bool analytic = true;
    unsigned threads = 0;
    bool flip_coupling_sign = false;    // negative control for validate (hidden)

    long long trajectories_or(long long d) const { return trajectories.value_or(d); }
    double t_final_or(double d) const { return t_final.value_or(d); }

    PhysicalParams physical() const {
        PhysicalParams p;
        p.rabi_1 = cplx{omega, 0.0};
        p.rabi_2 = cplx{omega2.value_or(omega), 0.0};
        p.separation = r;
        p.dipole = Vec3{dipole[0], dipole[1], dipole[2]}.normalized();
        return p;
    }

    /// Coupling as configured (zero when neglected, sign-flipped for the negative control).
    DipoleCoupling coupling() const {
        if (!include_coupling) return DipoleCoupling::neglected();
        DipoleCoupling c = dipole_coupling(physical());
        if (flip_coupling_sign) c.value = -c.value;
        return c;
    }

    PureState initial_state() const {
        if (initial == "g" || initial == "11") return PureState::basis_state(basis::k11);
        if (initial == "e" || initial == "22") return PureState::basis_state(basis::k22);
        if (initial == "12") return PureState::basis_state(basis::k12);
        if (initial == "21") return PureState::basis_state(basis::k21);
        if (initial == "s") return dicke_state(dicke::s);
        if (initial == "a") return dicke_state(dicke::a);
        throw ConfigError("initial", "unknown initial state '" + initial + "' (use g, s, a, e, 11, 12, 21, 22)");
    }
};

inline nlohmann::ordered_json to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["omega"] = c.omega;
    j["omega2"] = c.omega2.value_or(c.omega);
    j["r"] = c.r;
    j["dipole"] = c.dipole;
    j["coupling"] = c.include_coupling ? "include" : "neglect";
    j["n_theta"] = c.n_theta;
    j["n_phi"] = c.n_phi;
    j["theta"] = c.theta;
    if (c.trajectories) j["trajectories"] = *c.trajectories;
    j["seed"] = c.seed;
    j["dt"] = c.dt;
    if (c.t_final) j["t_final"] = *c.t_final;
    j["window_start"] = c.window_start;
    j["initial"] = c.initial;
    j["analytic"] = c.analytic;
    return j;
}

namespace detail {
template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(key, std::string("wrong type: ") + e.what());
    }
}

template <class T>
void read_field(const nlohmann::json& j, const char* key, std::optional<T>& out) {
    if (!j.contains(key)) return;
    T v{};
    read_field(j, key, v);
    out = v;
}
}  // namespace detail

/// Loads the JSON manifest; unknown keys are rejected.
inline RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config", "top level must be an object");
    static const char* known[] = {"omega", "omega2",  "r",     "dipole",       "coupling", "n_theta",
                                  "n_phi", "theta",   "trajectories", "seed", "dt",       "t_final",
                                  "window_start", "initial", "output", "analytic", "threads"};
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError(key, "unknown config key");
    }
    RunConfig c;
    detail::read_field(j, "omega", c.omega);
    detail::read_field(j, "omega2", c.omega2);
    detail::read_field(j, "r", c.r);
    detail::read_field(j, "dipole", c.dipole);
    if (j.contains("coupling")) {
        std::string mode;
        detail::read_field(j, "coupling", mode);
        if (mode != "include" && mode != "neglect") throw ConfigError("coupling", "must be 'include' or 'neglect'");
        c.include_coupling = mode == "include";
    }
    detail::read_field(j, "n_theta", c.n_theta);
    detail::read_field(j, "n_phi", c.n_phi);
    detail::read_field(j, "theta", c.theta);
    detail::read_field(j, "trajectories", c.trajectories);
    detail::read_field(j, "seed", c.seed);
    detail::read_field(j, "dt", c.dt);
    detail::read_field(j, "t_final", c.t_final);
    detail::read_field(j, "window_start", c.window_start);
    detail::read_field(j, "initial", c.initial);
    detail::read_field(j, "output", c.output);
    detail::read_field(j, "analytic", c.analytic);
    detail::read_field(j, "threads", c.threads);
    return c;
}

inline void require(bool ok, const char* field, const std::string& message) {
    if (!ok) throw ConfigError(field, message);
}

/// Range checks shared by all commands.
inline void validate(const RunConfig& c) {
    require(std::isfinite(c.omega) && c.omega >= 0.0, "omega", "must be finite and >= 0");
    require(!c.omega2 || (std::isfinite(*c.omega2) && *c.omega2 >= 0.0), "omega2", "must be finite and >= 0");
    require(std::isfinite(c.r) && c.r > kMinSeparation, "r", "must be finite and > 1e-6");
    const double dn = std::hypot(c.dipole[0], c.dipole[1], c.dipole[2]);
    require(std::isfinite(dn) && dn > 0.0, "dipole", "must be a non-zero vector");
    require(c.n_theta >= 2, "n_theta", "must be >= 2");
    require(c.n_phi >= 2, "n_phi", "must be >= 2");
    require(std::isfinite(c.theta) && c.theta >= 0.0 && c.theta <= pi, "theta", "must lie in [0, pi]");
    require(!c.trajectories || *c.trajectories >= 1, "trajectories", "must be >= 1");
    require(std::isfinite(c.dt) && c.dt > 0.0, "dt", "must be finite and > 0");
    require(!c.t_final || (std::isfinite(*c.t_final) && *c.t_final > 0.0), "t_final", "must be finite and > 0");
    require(std::isfinite(c.window_start) && c.window_start >= 0.0, "window_start", "must be >= 0");
    (void)c.initial_state();
}

}  // namespace qjump::cli

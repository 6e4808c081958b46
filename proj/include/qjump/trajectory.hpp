// Monte Carlo quantum-jump trajectories with direction-resolved emissions.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "qjump/core.hpp"
#include "qjump/dynamics.hpp"
#include "qjump/emission.hpp"
#include "qjump/master.hpp"
#include "qjump/parallel.hpp"
#include "qjump/random.hpp"

namespace qjump {

struct JumpEvent {
    double time = 0.0;
    Direction direction;
    std::uint64_t pre_state_hash = 0;
    PureState post_state;
};

struct StateSnapshot {
    double time = 0.0;
    PureState state;
};

struct TrajectoryRecord {
    std::uint64_t seed = 0;
    std::vector<JumpEvent> jumps;
    std::vector<StateSnapshot> snapshots;
    PureState final_state;
};

/// FNV-1a over the raw amplitude bytes.
inline std::uint64_t state_hash(const PureState& psi) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int i = 0; i < 4; ++i) {
        const double parts[2] = {psi[i].real(), psi[i].imag()};
        unsigned char bytes[sizeof(parts)];
        std::memcpy(bytes, parts, sizeof(parts));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

inline constexpr double kMaxTrajectoryStep = 1e-3;

struct TrajectoryOptions {
    double t_final = 1.0;
    double dt = 1e-3;
    /// Times at which the state is recorded; empty disables snapshots.
    std::vector<double> snapshot_times;
    /// Stop after this many jumps (0 = no limit).
    int max_jumps = 0;
    /// dt * A <= 1e-3 is required unless cleared (convergence studies only).
    bool enforce_step_limit = true;
};

/// Shared, immutable per-parameter data for trajectory workers.
class TrajectoryEngine {
  public:
    TrajectoryEngine(const PhysicalParams& params, const DipoleCoupling& coupling, double dt,
                     bool enforce_step_limit = true)
        : params_(params), coupling_(coupling), dt_(dt) {
        params.validate();
        if (!(dt > 0.0)) throw PreconditionError("run_trajectory: dt must be positive");
        if (enforce_step_limit && dt * params.decay_rate > kMaxTrajectoryStep * (1.0 + 1e-12))
            throw PreconditionError("run_trajectory: dt * A must not exceed 1e-3");
        hamiltonian_ = conditional_hamiltonian(params, coupling);
        propagator_ = no_jump_propagator(hamiltonian_, dt);
    }

    const PhysicalParams& params() const { return params_; }
    const DipoleCoupling& coupling() const { return coupling_; }
    double dt() const { return dt_; }
    const Mat4& propagator() const { return propagator_; }

    /// Core loop. `on_step(step, state)` is called at every step index listed in
    /// `observe_steps` (sorted); `on_jump(event)` at every emission.
    template <class OnStep, class OnJump>
    PureState evolve(const PureState& initial, std::uint64_t seed, long long n_steps,
                     const std::vector<long long>& observe_steps, int max_jumps, OnStep&& on_step,
                     OnJump&& on_jump) const {
        initial.require_normalized("run_trajectory");
        Rng rng(seed);
        PureState psi = initial;
        std::size_t next_obs = 0;
        auto observe = [&](long long step) {
            for (; next_obs < observe_steps.size() && observe_steps[next_obs] == step; ++next_obs)
                on_step(step, psi);
        };
        observe(0);
        int jumps = 0;
        bool frozen = is_dark_fixed_point(psi);
        for (long long step = 1; step <= n_steps; ++step) {
            if (frozen) {
                if (next_obs == observe_steps.size()) break;
                observe(step);
                continue;
            }
            const Vec4 evolved = propagator_ * psi.amplitudes();
            const double survival = evolved.squaredNorm();
            const double u = uniform01(rng);
            if (u < 1.0 - survival) {
                JumpEvent ev;
                ev.time = step * dt_;
                ev.pre_state_hash = state_hash(psi);
                // Direction drawn from the pre-step state; if it cannot emit
                // (e.g. exactly |g> under drive) use the evolved state.
                PureState source = psi;
                EmissionProfile profile(source, params_);
                if (!(profile.envelope() > 0.0)) {
                    source = PureState(evolved / std::sqrt(survival));
                    profile = EmissionProfile(source, params_);
                }
                ev.direction = sample_direction(profile, rng);
                psi = apply_reset(source, ev.direction, params_);
                ev.post_state = psi;
                on_jump(ev);
                ++jumps;
                frozen = is_dark_fixed_point(psi);
                if (max_jumps > 0 && jumps >= max_jumps) {
                    observe(step);
                    break;
                }
            } else {
                psi = PureState(evolved / std::sqrt(survival));
            }
            observe(step);
        }
        return psi;
    }

    TrajectoryRecord run(const PureState& initial, std::uint64_t seed, const TrajectoryOptions& opt) const {
        TrajectoryRecord rec;
        rec.seed = seed;
        const long long n_steps = step_index(opt.t_final, dt_);
        const std::vector<long long> obs = observation_steps(opt.snapshot_times, opt.t_final);
        rec.final_state = evolve(
            initial, seed, n_steps, obs, opt.max_jumps,
            [&](long long step, const PureState& psi) { rec.snapshots.push_back({step * dt_, psi}); },
            [&](const JumpEvent& ev) { rec.jumps.push_back(ev); });
        return rec;
    }

    std::vector<long long> observation_steps(const std::vector<double>& times, double t_final) const {
        std::vector<long long> steps;
        steps.reserve(times.size());
        for (double t : times) {
            if (t < 0.0 || t > t_final + 0.5 * dt_)
                throw PreconditionError("snapshot time outside [0, t_final]");
            steps.push_back(step_index(t, dt_));
        }
        if (!std::is_sorted(steps.begin(), steps.end()))
            throw PreconditionError("snapshot times must be sorted");
        return steps;
    }

  private:
    // No emission and no conditional evolution: the state never changes again.
    bool is_dark_fixed_point(const PureState& psi) const {
        return (hamiltonian_.matrix * psi.amplitudes()).norm() <= 1e-15;
    }

    PhysicalParams params_;
    DipoleCoupling coupling_;
    double dt_;
    ConditionalHamiltonian hamiltonian_;
    Mat4 propagator_;
};

inline TrajectoryRecord run_trajectory(const PhysicalParams& params, const DipoleCoupling& coupling,
                                       const PureState& initial, const TrajectoryOptions& options,
                                       std::uint64_t seed) {
    TrajectoryEngine engine(params, coupling, options.dt, options.enforce_step_limit);
    return engine.run(initial, seed, options);
}

inline TrajectoryRecord run_trajectory(const PhysicalParams& params, const PureState& initial, double t_final,
                                       double dt, std::uint64_t seed) {
    TrajectoryOptions opt;
    opt.t_final = t_final;
    opt.dt = dt;
    return run_trajectory(params, dipole_coupling(params), initial, opt, seed);
}

// ---------------------------------------------------------------------------
// Ensembles

struct DirectionHistogram {
    int n_theta = 32;
    int n_phi = 64;
    std::vector<long long> counts;  // row-major, theta outer

    void add(const Direction& k) {
        int i = static_cast<int>(k.theta / pi * n_theta);
        int j = static_cast<int>(k.phi / (2.0 * pi) * n_phi);
        i = std::clamp(i, 0, n_theta - 1);
        j = std::clamp(j, 0, n_phi - 1);
        ++counts[static_cast<std::size_t>(i) * n_phi + j];
    }

    long long total() const {
        long long t = 0;
        for (auto c : counts) t += c;
        return t;
    }
};

struct EnsembleOptions {
    unsigned threads = 0;
    int hist_theta_bins = 32;
    int hist_phi_bins = 64;
    /// Jumps at or after this time enter the direction histogram and jump-rate estimate.
    double window_start = 0.0;
};

struct EnsembleStats {
    std::vector<double> times;
    std::vector<DensityMatrix> mean_density;
    /// Standard error of the mean of Re and Im parts, packed as re + i im.
    std::vector<Mat4> density_stderr;
    std::vector<double> emission_rate_total;
    DirectionHistogram direction_histogram;
    long long count_N = 0;
    long long total_jumps = 0;
    double jump_rate_mean = 0.0;
    double jump_rate_stderr = 0.0;
};

namespace detail {

using RealMat4 = Eigen::Matrix<double, 4, 4>;

struct EnsembleAccumulator {
    std::vector<Mat4> sum;
    std::vector<RealMat4> sum_sq_re;
    std::vector<RealMat4> sum_sq_im;
    std::vector<double> rate_sum;
    std::vector<long long> hist;
    long long n = 0;
    long long jumps = 0;
    double window_rate_sum = 0.0;
    double window_rate_sq = 0.0;

    EnsembleAccumulator(std::size_t n_obs, std::size_t n_bins)
        : sum(n_obs, Mat4::Zero()),
          sum_sq_re(n_obs, RealMat4::Zero()),
          sum_sq_im(n_obs, RealMat4::Zero()),
          rate_sum(n_obs, 0.0),
          hist(n_bins, 0) {}

    void merge(const EnsembleAccumulator& o) {
        for (std::size_t k = 0; k < sum.size(); ++k) {
            sum[k] += o.sum[k];
            sum_sq_re[k] += o.sum_sq_re[k];
            sum_sq_im[k] += o.sum_sq_im[k];
            rate_sum[k] += o.rate_sum[k];
        }
        for (std::size_t b = 0; b < hist.size(); ++b) hist[b] += o.hist[b];
        n += o.n;
        jumps += o.jumps;
        window_rate_sum += o.window_rate_sum;
        window_rate_sq += o.window_rate_sq;
    }
};

}  // namespace detail

/// Trajectories per accumulation block; fixed so results do not depend on threads.
inline constexpr std::size_t kEnsembleBlock = 64;

inline EnsembleStats run_ensemble(const PhysicalParams& params, const DipoleCoupling& coupling,
                                  const PureState& initial, const TrajectoryOptions& options, long long n_traj,
                                  std::uint64_t base_seed, const EnsembleOptions& ens = {}) {
    if (n_traj < 1) throw PreconditionError("run_ensemble: N must be >= 1");
    if (options.max_jumps != 0) throw PreconditionError("run_ensemble: max_jumps is not supported");
    const TrajectoryEngine engine(params, coupling, options.dt, options.enforce_step_limit);
    const std::vector<double> times =
        options.snapshot_times.empty() ? uniform_time_grid(options.t_final) : options.snapshot_times;
    const std::vector<long long> obs = engine.observation_steps(times, options.t_final);
    const long long n_steps = step_index(options.t_final, options.dt);
    const double window = options.t_final - ens.window_start;

    DirectionHistogram proto{ens.hist_theta_bins, ens.hist_phi_bins, {}};
    const std::size_t n_bins = static_cast<std::size_t>(proto.n_theta) * proto.n_phi;
    const std::size_t n_blocks = (static_cast<std::size_t>(n_traj) + kEnsembleBlock - 1) / kEnsembleBlock;
    std::vector<detail::EnsembleAccumulator> blocks(n_blocks, detail::EnsembleAccumulator(obs.size(), n_bins));

    const Mat4 s1 = lowering_operator(1);
    const Mat4 s2 = lowering_operator(2);
    const Mat4 gamma = params.decay_rate * (s1.adjoint() * s1 + s2.adjoint() * s2) +
                       coupling.value.real() * (s1.adjoint() * s2 + s2.adjoint() * s1);

    parallel_for(n_blocks, resolve_thread_count(ens.threads), [&](std::size_t b) {
        auto& acc = blocks[b];
        DirectionHistogram hist = proto;
        hist.counts.assign(n_bins, 0);
        const std::size_t begin = b * kEnsembleBlock;
        const std::size_t end = std::min<std::size_t>(begin + kEnsembleBlock, static_cast<std::size_t>(n_traj));
        for (std::size_t i = begin; i < end; ++i) {
            std::size_t k = 0;
            long long window_jumps = 0;
            engine.evolve(
                initial, stream_seed(base_seed, i), n_steps, obs, options.max_jumps,
                [&](long long, const PureState& psi) {
                    const Mat4 rho = psi.amplitudes() * psi.amplitudes().adjoint();
                    acc.sum[k] += rho;
                    acc.sum_sq_re[k] += rho.real().cwiseAbs2();
                    acc.sum_sq_im[k] += rho.imag().cwiseAbs2();
                    acc.rate_sum[k] += (psi.amplitudes().adjoint() * gamma * psi.amplitudes())(0).real();
                    ++k;
                },
                [&](const JumpEvent& ev) {
                    ++acc.jumps;
                    if (ev.time >= ens.window_start) {
                        ++window_jumps;
                        hist.add(ev.direction);
                    }
                });
            if (k != obs.size()) throw ComputationError("run_ensemble: missing observations");
            const double rate = window > 0.0 ? window_jumps / window : 0.0;
            acc.window_rate_sum += rate;
            acc.window_rate_sq += rate * rate;
            ++acc.n;
        }
        acc.hist = std::move(hist.counts);
    });

    // Pairwise tree reduction in fixed order.
    for (std::size_t stride = 1; stride < n_blocks; stride *= 2)
        for (std::size_t i = 0; i + stride < n_blocks; i += 2 * stride) blocks[i].merge(blocks[i + stride]);
    const auto& total = blocks[0];

    EnsembleStats out;
    out.count_N = total.n;
    out.total_jumps = total.jumps;
    const double n = static_cast<double>(total.n);
    for (std::size_t k = 0; k < obs.size(); ++k) {
        out.times.push_back(obs[k] * options.dt);
        const Mat4 mean = total.sum[k] / n;
        out.mean_density.emplace_back(mean);
        Mat4 se = Mat4::Zero();
        if (total.n > 1) {
            const detail::RealMat4 var_re =
                ((total.sum_sq_re[k] - n * mean.real().cwiseAbs2()) / (n - 1.0)).cwiseMax(0.0);
            const detail::RealMat4 var_im =
                ((total.sum_sq_im[k] - n * mean.imag().cwiseAbs2()) / (n - 1.0)).cwiseMax(0.0);
            se.real() = (var_re / n).cwiseSqrt();
            se.imag() = (var_im / n).cwiseSqrt();
        }
        out.density_stderr.push_back(se);
        out.emission_rate_total.push_back(total.rate_sum[k] / n);
    }
    out.direction_histogram = proto;
    out.direction_histogram.counts = total.hist;
    out.jump_rate_mean = total.window_rate_sum / n;
    if (total.n > 1) {
        const double var = std::max(0.0, (total.window_rate_sq - n * out.jump_rate_mean * out.jump_rate_mean) / (n - 1.0));
        out.jump_rate_stderr = std::sqrt(var / n);
    }
    return out;
}

/// Independent trajectories with seeds stream_seed(base_seed, i), returned in index order.
inline std::vector<TrajectoryRecord> run_trajectories(const PhysicalParams& params, const DipoleCoupling& coupling,
                                                      const PureState& initial, const TrajectoryOptions& options,
                                                      long long n_traj, std::uint64_t base_seed,
                                                      unsigned threads = 0) {
    if (n_traj < 1) throw PreconditionError("run_trajectories: N must be >= 1");
    const TrajectoryEngine engine(params, coupling, options.dt, options.enforce_step_limit);
    std::vector<TrajectoryRecord> records(static_cast<std::size_t>(n_traj));
    parallel_for(records.size(), resolve_thread_count(threads), [&](std::size_t i) {
        records[i] = engine.run(initial, stream_seed(base_seed, i), options);
    });
    return records;
}

}  // namespace qjump

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pgdk/actor.hpp"
#include "pgdk/critic.hpp"
#include "pgdk/envs.hpp"
#include "pgdk/koopman.hpp"
#include "pgdk/replay.hpp"

namespace pgdk {

struct TrainConfig {
    std::string env = "double_integrator";
    double gamma = 0.99;
    // Constant by default; the ordering alpha_f > alpha_J > alpha_mu assigns
    // the convergence order dynamics -> value -> policy.
    double alpha_f = 1e-2;
    double alpha_J = 5e-3;
    double alpha_mu = 7e-4;
    bool sqrt_decay = false;  // alpha_i = alpha / sqrt(i+1)
    int episodes = 100;
    int horizon = 0;  // 0: environment default
    int batch = 64;   // N
    int r = 0;        // 0: max(2n, 8)
    bool augment_state = true;
    double noise_sigma0 = 1.0;
    double noise_decay = 0.99;
    std::uint64_t seed = 0;
    double grad_clip = 50.0;
    // Small on purpose: the buffer acts as a recency window so stale
    // transitions gathered under earlier policies age out quickly.
    std::size_t capacity = 1000;
    int g_hidden = 32;       // 0: single linear layer
    int critic_hidden = 32;
    int actor_hidden = 32;
    std::string g_activation = "tanh";  // tanh | identity
    double fit_tol = 1e-10;
    std::map<std::string, double> env_overrides;

    void validate() const;
};

// One CSV row per environment step. Loss and gradient fields are NaN before
// the first update iteration.
struct LogRow {
    int episode = 0;
    int step = 0;
    long iter = 0;  // completed update iterations (T)
    double cost = 0.0;
    double L1 = 0.0, L3 = 0.0, L2 = 0.0;
    double gnorm_f = 0.0, gnorm_J = 0.0, gnorm_mu = 0.0;
    double min_gnorm_f_sq = 0.0;
    double min_gnorm_mu_sq = 0.0;
    long samples_consumed = 0;
};

struct TrainLog {
    std::vector<LogRow> rows;
    int batch_size = 0;

    void write_csv(const std::string& path) const;
    static TrainLog read_csv(const std::string& path);
};

struct TrainResult {
    KoopmanModel model;
    Critic critic;
    Actor actor;
    TrainLog log;
};

TrainResult train(const TrainConfig& config);

// mu(x) + componentwise Gaussian noise, clipped to the action bounds.
Vector explore(const Actor& actor, const Vector& x, double sigma, std::mt19937_64& rng);

using Policy = std::function<Vector(const Vector&)>;

struct EvalResult {
    double mean_step_cost = 0.0;
    double mean_discounted_episode_cost = 0.0;
    // Accumulative average of per-episode mean step costs (the solid-curve
    // statistic).
    std::vector<double> accum_avg;
};

EvalResult evaluate(const Policy& policy, const Environment& env, int episodes,
                    std::uint64_t seed, double gamma);

// Convergence and sample accounting over the logged update iterations.
// sequence_*[i-1] = i * min_{j<=i} |grad|^2; the envelope check compares the
// max of the second half against 2x its median. A second half whose max is
// numerical zero (<= 1e-10) passes outright: it is below any constant
// envelope, and the max/median ratio of rounding noise carries no signal.
struct ConvergenceReport {
    long T = 0;
    std::vector<double> sequence_f;
    std::vector<double> sequence_mu;
    bool envelope_pass_f = false;
    bool envelope_pass_mu = false;
    double max_second_half_f = 0.0, median_second_half_f = 0.0;
    double max_second_half_mu = 0.0, median_second_half_mu = 0.0;
    bool samples_ok = false;
    long total_samples = 0;

    std::string format() const;
};

ConvergenceReport convergence_report(const TrainLog& log);

// Standalone dynamics identification on dumped transitions: gradient descent
// on L1 with per-iteration A,B,C refits, then held-out one-step and 20-step
// rollout errors on the last 20% of the rows.
struct SysidConfig {
    int r = 0;  // 0: max(2n, 8)
    bool augment_state = false;
    int g_hidden = 32;
    std::string g_activation = "tanh";
    double alpha_f = 1e-3;
    int iterations = 200;
    std::uint64_t seed = 0;
    double fit_tol = 1e-10;
    double grad_clip = 10.0;
};

struct SysidResult {
    KoopmanModel model;
    double final_L1 = 0.0;
    double holdout_one_step_error = 0.0;   // max over held-out transitions
    double holdout_rollout_error = 0.0;    // max per-step error over a 20-step rollout
    bool rollout_available = false;        // requires time-contiguous held-out rows
    int n_train = 0, n_holdout = 0;
};

SysidResult run_sysid(const std::vector<Transition>& transitions, const SysidConfig& config);

}  // namespace pgdk

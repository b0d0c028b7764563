#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pgdk/config.hpp"
#include "pgdk/diagnostics.hpp"
#include "pgdk/errors.hpp"
#include "pgdk/rng.hpp"
#include "pgdk/trainer.hpp"

namespace fs = std::filesystem;
using namespace pgdk;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericalDivergence = 3;

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& out_dir) {
    TrainConfig config = parse_config(config_path, overrides);
    fs::create_directories(out_dir);
    write_manifest(config, out_dir + "/manifest.txt");

    TrainResult result = train(config);
    result.log.write_csv(out_dir + "/train_log.csv");
    save_mlp(out_dir + "/lifting.ckpt", result.model.g_spec, result.model.theta_f);
    save_mlp(out_dir + "/critic.ckpt", result.critic.spec, result.critic.theta_J);
    save_mlp(out_dir + "/actor.ckpt", result.actor.spec, result.actor.theta_mu);
    save_linear_maps(out_dir + "/koopman.dat", result.model.A, result.model.B, result.model.C);

    auto env = make_env(config.env, config.env_overrides);
    EvalResult eval = evaluate([&](const Vector& x) { return act(result.actor, x); }, *env, 10,
                               derive_seed(config.seed, "final_eval"), config.gamma);
    long iters = result.log.rows.empty() ? 0 : result.log.rows.back().iter;
    std::printf("trained %s: %ld update iterations, %ld samples consumed\n", config.env.c_str(),
                iters, result.log.rows.empty() ? 0L : result.log.rows.back().samples_consumed);
    std::printf("noise-free eval over 10 episodes: mean step cost %.6g\n", eval.mean_step_cost);
    std::printf("artifacts written to %s\n", out_dir.c_str());
    return kExitOk;
}

int cmd_eval(const std::string& dir, int episodes, std::uint64_t seed) {
    TrainConfig config = parse_config(dir + "/manifest.txt");
    auto env = make_env(config.env, config.env_overrides);
    auto [spec, params] = load_mlp(dir + "/actor.ckpt");
    Actor actor{spec, std::move(params), env->spec().action_low, env->spec().action_high};
    actor.validate();
    EvalResult eval = evaluate([&](const Vector& x) { return act(actor, x); }, *env, episodes,
                               seed, config.gamma);
    std::printf("env=%s episodes=%d\n", config.env.c_str(), episodes);
    std::printf("mean_step_cost=%.17g\n", eval.mean_step_cost);
    std::printf("mean_discounted_episode_cost=%.17g\n", eval.mean_discounted_episode_cost);
    for (std::size_t i = 0; i < eval.accum_avg.size(); ++i)
        std::printf("accum_avg_episode_%zu=%.17g\n", i, eval.accum_avg[i]);
    return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, int trials, double corrupt) {
    const FdCheckResult checks[] = {
        fd_check_L1(seed, trials, corrupt),
        fd_check_td(seed, trials, corrupt),
        fd_check_L2(seed, trials, corrupt),
    };
    bool ok = true;
    for (const FdCheckResult& c : checks) {
        const bool pass = c.max_rel_error < 1e-4;
        ok = ok && pass;
        std::printf("%-3s max relative error %.3e over %d trials (worst coordinate %lld) %s\n",
                    c.loss_name.c_str(), c.max_rel_error, c.n_trials,
                    static_cast<long long>(c.worst_coordinate), pass ? "PASS" : "FAIL");
    }
    std::printf("gradcheck %s\n", ok ? "PASS" : "FAIL");
    return ok ? kExitOk : kExitCheckFailed;
}

int cmd_sysid(const std::string& data_path, const std::string& config_path,
              const std::vector<std::string>& overrides) {
    TrainConfig tc = parse_config(config_path, overrides);
    SysidConfig sc;
    sc.r = tc.r;
    sc.augment_state = tc.augment_state;
    sc.g_hidden = tc.g_hidden;
    sc.g_activation = tc.g_activation;
    sc.alpha_f = tc.alpha_f;
    sc.seed = tc.seed;
    sc.fit_tol = tc.fit_tol;
    sc.grad_clip = tc.grad_clip;

    auto transitions = ReplayBuffer::load_dump(data_path);
    SysidResult result = run_sysid(transitions, sc);
    std::printf("sysid fit on %d transitions (%d held out)\n", result.n_train, result.n_holdout);
    std::printf("final_L1=%.17g\n", result.final_L1);
    std::printf("holdout_one_step_error=%.17g\n", result.holdout_one_step_error);
    if (result.rollout_available)
        std::printf("holdout_rollout_error=%.17g\n", result.holdout_rollout_error);
    else
        std::printf("holdout_rollout_error=unavailable (held-out rows not contiguous)\n");
    return kExitOk;
}

int cmd_report(const std::string& log_path) {
    TrainLog log = TrainLog::read_csv(log_path);
    ConvergenceReport report = convergence_report(log);
    std::fputs(report.format().c_str(), stdout);
    const bool ok = report.envelope_pass_f && report.envelope_pass_mu && report.samples_ok;
    return ok ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PGDK: policy gradient with a deep Koopman dynamics surrogate"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", checkpoint_dir, data_path, log_path;
    std::vector<std::string> overrides;
    int episodes = 20, trials = 20;
    std::uint64_t seed = 0;
    double corrupt = 0.0;

    auto* train_cmd = app.add_subcommand("train", "run the full training loop");
    train_cmd->add_option("--config", config_path, "key=value config file");
    train_cmd->add_option("--set", overrides, "config override key=value (repeatable)");
    train_cmd->add_option("--out", out_dir, "output directory");

    auto* eval_cmd = app.add_subcommand("eval", "noise-free evaluation of a trained policy");
    eval_cmd->add_option("--checkpoint-dir", checkpoint_dir, "directory written by train")
        ->required();
    eval_cmd->add_option("--episodes", episodes, "number of evaluation episodes");
    eval_cmd->add_option("--seed", seed, "evaluation seed");

    auto* grad_cmd = app.add_subcommand("gradcheck",
                                        "finite-difference check of the three analytic gradients");
    grad_cmd->add_option("--seed", seed, "suite seed");
    grad_cmd->add_option("--trials", trials, "randomized instances per gradient");
    grad_cmd->add_option("--corrupt", corrupt, "test hook: perturb analytic gradients")
        ->group("");  // hidden

    auto* sysid_cmd = app.add_subcommand("sysid", "dynamics identification from a buffer dump");
    sysid_cmd->add_option("--data", data_path, "transition dump file")->required();
    sysid_cmd->add_option("--config", config_path, "key=value config file");
    sysid_cmd->add_option("--set", overrides, "config override key=value (repeatable)");

    auto* report_cmd = app.add_subcommand("report", "convergence report from a train log");
    report_cmd->add_option("--log", log_path, "train_log.csv path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(config_path, overrides, out_dir);
        if (eval_cmd->parsed()) return cmd_eval(checkpoint_dir, episodes, seed);
        if (grad_cmd->parsed()) return cmd_gradcheck(seed, trials, corrupt);
        if (sysid_cmd->parsed()) return cmd_sysid(data_path, config_path, overrides);
        if (report_cmd->parsed()) return cmd_report(log_path);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const NumericalDivergence& e) {
        std::fprintf(stderr, "numerical divergence: %s\n", e.what());
        return kExitNumericalDivergence;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitCheckFailed;
    }
    return kExitOk;
}

#include "pgdk/trainer.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "pgdk/errors.hpp"
#include "pgdk/rng.hpp"

namespace pgdk {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double clip_gradient(Vector& grad, double clip) {
    const double norm = grad.norm();
    if (norm > clip && norm > 0.0) grad *= clip / norm;
    return norm;
}

double lr_at(double base, bool sqrt_decay, long i) {
    return sqrt_decay ? base / std::sqrt(static_cast<double>(i + 1)) : base;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0,1]");
    if (!(alpha_f > 0.0 && alpha_J > 0.0 && alpha_mu > 0.0))
        throw ConfigError("learning rates must be positive");
    if (!(alpha_f > alpha_J && alpha_J > alpha_mu))
        throw ConfigError(
            "learning-rate ordering violated: require alpha_f > alpha_J > alpha_mu "
            "(the dynamics / value / policy convergence order)");
    if (episodes < 1) throw ConfigError("episodes must be >= 1");
    if (batch < 1) throw ConfigError("batch must be >= 1");
    if (r < 0) throw ConfigError("r must be nonnegative");
    if (noise_sigma0 < 0.0) throw ConfigError("noise_sigma0 must be nonnegative");
    if (!(noise_decay > 0.0 && noise_decay <= 1.0))
        throw ConfigError("noise_decay must lie in (0,1]");
    if (!(grad_clip > 0.0)) throw ConfigError("grad_clip must be positive");
    if (g_hidden < 0 || critic_hidden < 1 || actor_hidden < 0)
        throw ConfigError("hidden widths must be nonnegative (0 selects a single linear layer for g or the actor)");
    if (g_activation != "tanh" && g_activation != "identity")
        throw ConfigError("g_activation must be 'tanh' or 'identity'");
}

Vector explore(const Actor& actor, const Vector& x, double sigma, std::mt19937_64& rng) {
    if (sigma < 0.0) throw InvalidInput("explore: sigma must be nonnegative");
    Vector u = act(actor, x);
    if (sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, sigma);
        for (Eigen::Index i = 0; i < u.size(); ++i) u(i) += noise(rng);
    }
    return u.cwiseMax(actor.action_low).cwiseMin(actor.action_high);
}

TrainResult train(const TrainConfig& config) {
    config.validate();
    auto env = make_env(config.env, config.env_overrides);
    const int n = env->spec().n;
    const int m = env->spec().m;
    const int horizon = config.horizon > 0 ? config.horizon : env->spec().horizon;
    const int r = config.r > 0 ? config.r : std::max(2 * n, 8);
    if (config.batch < r + m)
        throw ConfigError("batch N = " + std::to_string(config.batch) + " < r+m = " +
                          std::to_string(r + m) + " required by the least-squares fit");

    const double bound = env->spec().action_high(0);
    for (int i = 0; i < m; ++i) {
        if (env->spec().action_high(i) != bound || env->spec().action_low(i) != -bound)
            throw ConfigError("train: actor head requires symmetric equal action bounds");
    }

    // Networks. The lifting output shrinks by n under state augmentation so
    // the total lifted dimension stays r.
    const int g_out = config.augment_state ? r - n : r;
    if (g_out < 1) throw ConfigError("r too small for the augmented lifting");
    KoopmanModel model;
    model.g_spec.widths = config.g_hidden > 0 ? std::vector<int>{n, config.g_hidden, g_out}
                                              : std::vector<int>{n, g_out};
    model.g_spec.hidden =
        config.g_activation == "identity" ? Activation::Identity : Activation::Tanh;
    model.theta_f = init_params(model.g_spec, derive_seed(config.seed, "init.g"));
    model.r = r;
    model.augment = config.augment_state;
    model.A = Matrix::Zero(r, r);
    model.B = Matrix::Zero(r, m);
    model.C = Matrix::Zero(n, r);

    Critic critic;
    // Two hidden layers: one tanh layer needs much larger weights to bend a
    // quadratic-shaped value surface, which the small value step size cannot
    // reach; depth gets there with weights near the init scale.
    critic.spec.widths = {n, config.critic_hidden, config.critic_hidden, 1};
    critic.theta_J = init_params(critic.spec, derive_seed(config.seed, "init.J"));
    // Zero the output layer: the value estimate grows from 0, so its early
    // input-gradients have the shape of the partially learned surface instead
    // of random init noise, which is what the policy update consumes.
    critic.theta_J.flat.tail(config.critic_hidden + 1).setZero();
    critic.gamma = config.gamma;

    Actor actor;
    actor.spec.widths = config.actor_hidden > 0 ? std::vector<int>{n, config.actor_hidden, m}
                                                : std::vector<int>{n, m};
    actor.spec.output = OutputActivation::ScaledTanh;
    actor.spec.bound = bound;
    actor.theta_mu = init_params(actor.spec, derive_seed(config.seed, "init.mu"));
    // Zero the output layer so the initial policy is identically zero: early
    // exploration is then driven by the noise schedule instead of an
    // arbitrary random feedback law at full actuator scale.
    const Eigen::Index mu_last = config.actor_hidden > 0
                                     ? static_cast<Eigen::Index>(config.actor_hidden) * m + m
                                     : actor.theta_mu.flat.size();
    actor.theta_mu.flat.tail(mu_last).setZero();
    actor.action_low = env->spec().action_low;
    actor.action_high = env->spec().action_high;

    ReplayBuffer buffer(config.capacity, derive_seed(config.seed, "replay"));
    auto noise_rng = make_rng(config.seed, "noise");
    const CostOracle& cost = env->cost_oracle();

    TrainLog log;
    log.batch_size = config.batch;
    log.rows.reserve(static_cast<std::size_t>(config.episodes) * horizon);

    long iter = 0;
    long samples_consumed = 0;
    double min_gf_sq = kNan;
    double min_gmu_sq = kNan;

    for (int episode = 0; episode < config.episodes; ++episode) {
        Vector x = env->reset(derive_seed(config.seed, "episode", static_cast<std::uint64_t>(episode)));
        const double sigma = config.noise_sigma0 * std::pow(config.noise_decay, episode);
        for (int t = 0; t < horizon; ++t) {
            Vector u = explore(actor, x, sigma, noise_rng);
            auto [x_next, c] = env->step(x, u);
            buffer.push(Transition{x, u, c, x_next});
            x = x_next;

            LogRow row;
            row.episode = episode;
            row.step = t;
            row.cost = c;
            row.L1 = row.L3 = row.L2 = kNan;
            row.gnorm_f = row.gnorm_J = row.gnorm_mu = kNan;

            if (buffer.size() >= static_cast<std::size_t>(config.batch)) {
                DataBatch batch = buffer.sample_batch(config.batch);

                // Refit A, B, C under the current theta_f; K stays frozen
                // through this iteration's gradient steps.
                Matrix G = lift_batch(model, batch.X);
                Matrix Gbar = lift_batch(model, batch.Xbar);
                LinearMaps maps =
                    fit_linear_maps(G, Gbar, batch.U, batch.X, config.fit_tol, true);
                model.A = maps.A;
                model.B = maps.B;
                model.C = maps.C;
                const Matrix k_frozen = assemble_frozen_k(maps.A, maps.B, maps.C);

                row.L1 = loss_L1(model, k_frozen, batch);
                Vector g_f = grad_L1(model, k_frozen, batch);
                row.gnorm_f = clip_gradient(g_f, config.grad_clip);
                model.theta_f.flat -= lr_at(config.alpha_f, config.sqrt_decay, iter) * g_f;
                if (!model.theta_f.flat.allFinite())
                    throw NumericalDivergence("train: NaN in theta_f after L1 update");

                row.L3 = td_loss(critic, batch);
                Vector g_J = grad_td(critic, batch);
                row.gnorm_J = clip_gradient(g_J, config.grad_clip);
                critic.theta_J.flat -= lr_at(config.alpha_J, config.sqrt_decay, iter) * g_J;
                if (!critic.theta_J.flat.allFinite())
                    throw NumericalDivergence("train: NaN in theta_J after L3 update");

                // Policy gradient at theta_f_{i+1}, theta_J_{i+1}, theta_mu_i.
                row.L2 = loss_L2(actor, critic, model, batch, cost);
                Vector g_mu = grad_L2(actor, critic, model, batch, cost);
                row.gnorm_mu = clip_gradient(g_mu, config.grad_clip);
                actor.theta_mu.flat -= lr_at(config.alpha_mu, config.sqrt_decay, iter) * g_mu;
                if (!actor.theta_mu.flat.allFinite())
                    throw NumericalDivergence("train: NaN in theta_mu after L2 update");

                ++iter;
                samples_consumed += 3L * config.batch;
                const double gf_sq = row.gnorm_f * row.gnorm_f;
                const double gmu_sq = row.gnorm_mu * row.gnorm_mu;
                min_gf_sq = std::isnan(min_gf_sq) ? gf_sq : std::min(min_gf_sq, gf_sq);
                min_gmu_sq = std::isnan(min_gmu_sq) ? gmu_sq : std::min(min_gmu_sq, gmu_sq);
            }

            row.iter = iter;
            row.samples_consumed = samples_consumed;
            row.min_gnorm_f_sq = min_gf_sq;
            row.min_gnorm_mu_sq = min_gmu_sq;
            log.rows.push_back(row);
        }
    }

    return TrainResult{std::move(model), std::move(critic), std::move(actor), std::move(log)};
}

void TrainLog::write_csv(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error("TrainLog::write_csv: cannot open " + path);
    std::fprintf(f,
                 "episode,step,iter,cost,neg_cost,L1,L3,L2,gnorm_f,gnorm_J,gnorm_mu,"
                 "min_gnorm_f_sq,min_gnorm_mu_sq,samples_consumed\n");
    for (const LogRow& r : rows) {
        std::fprintf(f,
                     "%d,%d,%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%ld\n",
                     r.episode, r.step, r.iter, r.cost, -r.cost, r.L1, r.L3, r.L2, r.gnorm_f,
                     r.gnorm_J, r.gnorm_mu, r.min_gnorm_f_sq, r.min_gnorm_mu_sq,
                     r.samples_consumed);
    }
    std::fclose(f);
}

TrainLog TrainLog::read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("TrainLog::read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("TrainLog::read_csv: empty file");
    TrainLog log;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 14)
            throw ParseError("TrainLog::read_csv: wrong column count at line " +
                             std::to_string(lineno));
        LogRow r;
        try {
            r.episode = std::stoi(cells[0]);
            r.step = std::stoi(cells[1]);
            r.iter = std::stol(cells[2]);
            r.cost = std::stod(cells[3]);
            r.L1 = std::stod(cells[5]);
            r.L3 = std::stod(cells[6]);
            r.L2 = std::stod(cells[7]);
            r.gnorm_f = std::stod(cells[8]);
            r.gnorm_J = std::stod(cells[9]);
            r.gnorm_mu = std::stod(cells[10]);
            r.min_gnorm_f_sq = std::stod(cells[11]);
            r.min_gnorm_mu_sq = std::stod(cells[12]);
            r.samples_consumed = std::stol(cells[13]);
        } catch (const std::exception&) {
            throw ParseError("TrainLog::read_csv: unparsable value at line " +
                             std::to_string(lineno));
        }
        log.rows.push_back(r);
    }
    return log;
}

EvalResult evaluate(const Policy& policy, const Environment& env, int episodes,
                    std::uint64_t seed, double gamma) {
    if (episodes < 1) throw InvalidInput("evaluate: episodes must be >= 1");
    EvalResult result;
    double total_cost = 0.0;
    long total_steps = 0;
    double total_discounted = 0.0;
    double running = 0.0;
    for (int ep = 0; ep < episodes; ++ep) {
        Vector x = env.reset(derive_seed(seed, "eval", static_cast<std::uint64_t>(ep)));
        double ep_cost = 0.0;
        double ep_discounted = 0.0;
        double discount = 1.0;
        for (int t = 0; t < env.spec().horizon; ++t) {
            auto [x_next, c] = env.step(x, policy(x));
            ep_cost += c;
            ep_discounted += discount * c;
            discount *= gamma;
            x = x_next;
        }
        total_cost += ep_cost;
        total_steps += env.spec().horizon;
        total_discounted += ep_discounted;
        running += ep_cost / env.spec().horizon;
        result.accum_avg.push_back(running / (ep + 1));
    }
    result.mean_step_cost = total_cost / static_cast<double>(total_steps);
    result.mean_discounted_episode_cost = total_discounted / episodes;
    return result;
}

namespace {

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

ConvergenceReport convergence_report(const TrainLog& log) {
    // Collapse to one entry per update iteration.
    std::vector<double> min_f, min_mu;
    std::vector<long> samples;
    long last_iter = 0;
    for (const LogRow& row : log.rows) {
        if (row.iter > last_iter) {
            min_f.push_back(row.min_gnorm_f_sq);
            min_mu.push_back(row.min_gnorm_mu_sq);
            samples.push_back(row.samples_consumed);
            last_iter = row.iter;
        }
    }
    const long T = static_cast<long>(min_f.size());
    if (T < 100)
        throw InsufficientHistory("convergence_report: need >= 100 update iterations, have " +
                                  std::to_string(T));

    ConvergenceReport report;
    report.T = T;
    report.sequence_f.resize(min_f.size());
    report.sequence_mu.resize(min_mu.size());
    for (std::size_t i = 0; i < min_f.size(); ++i) {
        report.sequence_f[i] = static_cast<double>(i + 1) * min_f[i];
        report.sequence_mu[i] = static_cast<double>(i + 1) * min_mu[i];
    }

    auto envelope = [](const std::vector<double>& seq, double& max_out, double& median_out) {
        std::vector<double> half(seq.begin() + static_cast<long>(seq.size()) / 2, seq.end());
        max_out = *std::max_element(half.begin(), half.end());
        median_out = median_of(half);
        // A sequence at numerical zero is bounded by any constant envelope,
        // but its max/median ratio is rounding noise; short-circuit it.
        return max_out <= 2.0 * median_out || max_out <= 1e-10;
    };
    report.envelope_pass_f =
        envelope(report.sequence_f, report.max_second_half_f, report.median_second_half_f);
    report.envelope_pass_mu =
        envelope(report.sequence_mu, report.max_second_half_mu, report.median_second_half_mu);

    // Corollary accounting: three batches of N per update iteration.
    report.samples_ok = true;
    const long N = log.batch_size > 0
                       ? log.batch_size
                       : (samples.empty() || samples[0] == 0 ? 0 : samples[0] / 3);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i] != 3L * static_cast<long>(i + 1) * N) {
            report.samples_ok = false;
            break;
        }
    }
    report.total_samples = samples.empty() ? 0 : samples.back();
    return report;
}

std::string ConvergenceReport::format() const {
    std::ostringstream out;
    out << "convergence report over T = " << T << " update iterations\n";
    out << "  T*min|grad L1|^2: second-half max " << max_second_half_f << ", median "
        << median_second_half_f << " -> envelope " << (envelope_pass_f ? "PASS" : "FAIL") << "\n";
    out << "  T*min|grad L2|^2: second-half max " << max_second_half_mu << ", median "
        << median_second_half_mu << " -> envelope " << (envelope_pass_mu ? "PASS" : "FAIL")
        << "\n";
    out << "  sample accounting 3TN: " << (samples_ok ? "exact" : "MISMATCH") << " ("
        << total_samples << " samples)\n";
    out << "T=" << T << "\nenvelope_f=" << (envelope_pass_f ? 1 : 0)
        << "\nenvelope_mu=" << (envelope_pass_mu ? 1 : 0) << "\nsamples_ok=" << (samples_ok ? 1 : 0)
        << "\ntotal_samples=" << total_samples << "\n";
    return out.str();
}

SysidResult run_sysid(const std::vector<Transition>& transitions, const SysidConfig& config) {
    if (transitions.size() < 5)
        throw InsufficientData("run_sysid: need at least 5 transitions");
    const int n = static_cast<int>(transitions.front().x.size());
    const int m = static_cast<int>(transitions.front().u.size());
    const int r = config.r > 0 ? config.r : std::max(2 * n, 8);

    const std::size_t n_train = transitions.size() - transitions.size() / 5;
    std::vector<Transition> train_split(transitions.begin(),
                                        transitions.begin() + static_cast<long>(n_train));
    std::vector<Transition> holdout(transitions.begin() + static_cast<long>(n_train),
                                    transitions.end());
    DataBatch train_batch = assemble_batch(train_split);

    const int g_out = config.augment_state ? r - n : r;
    if (g_out < 1) throw ConfigError("run_sysid: r too small for the augmented lifting");
    KoopmanModel model;
    model.g_spec.widths = config.g_hidden > 0 ? std::vector<int>{n, config.g_hidden, g_out}
                                              : std::vector<int>{n, g_out};
    model.g_spec.hidden =
        config.g_activation == "identity" ? Activation::Identity : Activation::Tanh;
    model.theta_f = init_params(model.g_spec, derive_seed(config.seed, "sysid.g"));
    model.r = r;
    model.augment = config.augment_state;

    SysidResult result;
    double l1 = 0.0;
    for (int it = 0; it < config.iterations; ++it) {
        Matrix G = lift_batch(model, train_batch.X);
        Matrix Gbar = lift_batch(model, train_batch.Xbar);
        LinearMaps maps =
            fit_linear_maps(G, Gbar, train_batch.U, train_batch.X, config.fit_tol, true);
        model.A = maps.A;
        model.B = maps.B;
        model.C = maps.C;
        const Matrix k_frozen = assemble_frozen_k(maps.A, maps.B, maps.C);
        l1 = loss_L1(model, k_frozen, train_batch);
        Vector g_f = grad_L1(model, k_frozen, train_batch);
        clip_gradient(g_f, config.grad_clip);
        model.theta_f.flat -= config.alpha_f * g_f;
        if (!model.theta_f.flat.allFinite())
            throw NumericalDivergence("run_sysid: NaN in theta_f");
    }
    // Final refit so A, B, C match the final lifting.
    {
        Matrix G = lift_batch(model, train_batch.X);
        Matrix Gbar = lift_batch(model, train_batch.Xbar);
        LinearMaps maps =
            fit_linear_maps(G, Gbar, train_batch.U, train_batch.X, config.fit_tol, true);
        model.A = maps.A;
        model.B = maps.B;
        model.C = maps.C;
        result.final_L1 = loss_L1(model, assemble_frozen_k(maps.A, maps.B, maps.C), train_batch);
    }

    double one_step = 0.0;
    for (const Transition& t : holdout) {
        one_step = std::max(one_step, (predict(model, t.x, t.u) - t.x_next).norm());
    }
    result.holdout_one_step_error = one_step;

    // 20-step rollout needs time-contiguous held-out rows.
    bool contiguous = holdout.size() >= 21;
    for (std::size_t k = 0; contiguous && k + 1 < std::min<std::size_t>(holdout.size(), 21); ++k) {
        if ((holdout[k].x_next - holdout[k + 1].x).norm() > 1e-12) contiguous = false;
    }
    result.rollout_available = contiguous;
    if (contiguous) {
        std::vector<Vector> inputs;
        for (std::size_t k = 0; k < 20; ++k) inputs.push_back(holdout[k].u);
        std::vector<Vector> predicted = rollout(model, holdout[0].x, inputs);
        double worst = 0.0;
        for (std::size_t k = 0; k < predicted.size(); ++k)
            worst = std::max(worst, (predicted[k] - holdout[k].x_next).norm());
        result.holdout_rollout_error = worst;
    }

    result.n_train = static_cast<int>(n_train);
    result.n_holdout = static_cast<int>(holdout.size());
    result.model = std::move(model);
    (void)l1;
    return result;
}

}  // namespace pgdk

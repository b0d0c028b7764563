#include "pgdk/diagnostics.hpp"

#include <random>
#include <sstream>

#include "pgdk/actor.hpp"
#include "pgdk/critic.hpp"
#include "pgdk/errors.hpp"
#include "pgdk/rng.hpp"

namespace pgdk {

Vector finite_diff_grad(const std::function<double(const Vector&)>& loss, const Vector& theta,
                        double h) {
    if (!(h > 0.0)) throw InvalidInput("finite_diff_grad: h must be positive");
    Vector grad(theta.size());
    Vector probe = theta;
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        probe(j) = theta(j) + h;
        const double up = loss(probe);
        probe(j) = theta(j) - h;
        const double down = loss(probe);
        probe(j) = theta(j);
        if (!std::isfinite(up) || !std::isfinite(down))
            throw Error("finite_diff_grad: non-finite loss evaluation");
        grad(j) = (up - down) / (2.0 * h);
    }
    return grad;
}

double relative_error(const Vector& analytic, const Vector& fd) {
    const double denom = std::max({analytic.norm(), fd.norm(), 1e-12});
    return (analytic - fd).norm() / denom;
}

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

DataBatch random_batch(int n, int m, int N, std::mt19937_64& rng) {
    DataBatch batch;
    batch.X = random_matrix(n, N, rng);
    batch.Xbar = random_matrix(n, N, rng);
    batch.U = random_matrix(m, N, rng);
    batch.costs = random_matrix(1, N, rng).row(0).cwiseAbs();
    return batch;
}

void track_worst(FdCheckResult& result, const Vector& analytic, const Vector& fd) {
    const double err = relative_error(analytic, fd);
    if (err > result.max_rel_error) {
        result.max_rel_error = err;
        Eigen::Index worst = 0;
        (analytic - fd).cwiseAbs().maxCoeff(&worst);
        result.worst_coordinate = worst;
    }
}

}  // namespace

FdCheckResult fd_check_L1(std::uint64_t seed, int trials, double corrupt) {
    FdCheckResult result{"L1", 0.0, -1, trials};
    auto rng = make_rng(seed, "fd_check_L1");
    for (int t = 0; t < trials; ++t) {
        std::uniform_int_distribution<int> nd(1, 4), md(1, 2), hd(4, 8);
        const int n = nd(rng), m = md(rng);
        std::uniform_int_distribution<int> rd(n, 8);
        const int r = rd(rng);
        std::uniform_int_distribution<int> Nd(r + m, 32);
        const int N = Nd(rng);

        KoopmanModel model;
        model.g_spec = MlpSpec{{n, hd(rng), r}};
        model.theta_f = init_params(model.g_spec, rng());
        model.r = r;
        DataBatch batch = random_batch(n, m, N, rng);

        Matrix G = lift_batch(model, batch.X);
        Matrix Gbar = lift_batch(model, batch.Xbar);
        LinearMaps maps = fit_linear_maps(G, Gbar, batch.U, batch.X);
        model.A = maps.A;
        model.B = maps.B;
        model.C = maps.C;
        const Matrix k_frozen = assemble_frozen_k(maps.A, maps.B, maps.C);

        Vector analytic = grad_L1(model, k_frozen, batch);
        if (analytic.size() > 0) analytic(0) += corrupt;
        KoopmanModel probe = model;
        Vector fd = finite_diff_grad(
            [&](const Vector& theta) {
                probe.theta_f.flat = theta;
                return loss_L1(probe, k_frozen, batch);
            },
            model.theta_f.flat);
        track_worst(result, analytic, fd);
    }
    return result;
}

FdCheckResult fd_check_td(std::uint64_t seed, int trials, double corrupt) {
    FdCheckResult result{"L3", 0.0, -1, trials};
    auto rng = make_rng(seed, "fd_check_td");
    for (int t = 0; t < trials; ++t) {
        std::uniform_int_distribution<int> nd(1, 4), hd(4, 8), Nd(1, 32);
        std::uniform_real_distribution<double> gd(0.3, 1.0);
        const int n = nd(rng);
        Critic critic;
        critic.spec = MlpSpec{{n, hd(rng), 1}};
        critic.theta_J = init_params(critic.spec, rng());
        critic.gamma = gd(rng);
        DataBatch batch = random_batch(n, 1, Nd(rng), rng);

        Vector analytic = grad_td(critic, batch);
        if (analytic.size() > 0) analytic(0) += corrupt;
        Critic probe = critic;
        Vector fd = finite_diff_grad(
            [&](const Vector& theta) {
                probe.theta_J.flat = theta;
                return td_loss(probe, batch);
            },
            critic.theta_J.flat);
        track_worst(result, analytic, fd);
    }
    return result;
}

FdCheckResult fd_check_L2(std::uint64_t seed, int trials, double corrupt) {
    FdCheckResult result{"L2", 0.0, -1, trials};
    auto rng = make_rng(seed, "fd_check_L2");
    for (int t = 0; t < trials; ++t) {
        std::uniform_int_distribution<int> nd(1, 4), md(1, 2), hd(4, 8);
        std::uniform_real_distribution<double> gd(0.3, 1.0), bd(0.5, 3.0);
        const int n = nd(rng), m = md(rng);
        std::uniform_int_distribution<int> rd(n, 8);
        const int r = rd(rng);
        std::uniform_int_distribution<int> Nd(r + m, 32);
        const int N = Nd(rng);

        KoopmanModel model;
        model.g_spec = MlpSpec{{n, hd(rng), r}};
        model.theta_f = init_params(model.g_spec, rng());
        model.r = r;
        model.A = random_matrix(r, r, rng, 0.5);
        model.B = random_matrix(r, m, rng, 0.5);
        model.C = random_matrix(n, r, rng, 0.5);

        Critic critic;
        critic.spec = MlpSpec{{n, hd(rng), 1}};
        critic.theta_J = init_params(critic.spec, rng());
        critic.gamma = gd(rng);

        Actor actor;
        const double bound = bd(rng);
        actor.spec = MlpSpec{{n, hd(rng), m}, Activation::Tanh, OutputActivation::ScaledTanh, bound};
        actor.theta_mu = init_params(actor.spec, rng());
        actor.action_low = Vector::Constant(m, -bound);
        actor.action_high = Vector::Constant(m, bound);

        // Smooth quadratic stage cost with analytic du-gradient.
        Vector diag = random_matrix(m, 1, rng).col(0).cwiseAbs() + Vector::Constant(m, 0.1);
        CostOracle cost;
        cost.cost = [diag](const Vector& x, const Vector& u) {
            return x.squaredNorm() + u.dot(diag.asDiagonal() * u);
        };
        cost.grad_u = [diag](const Vector&, const Vector& u) {
            return Vector(2.0 * (diag.asDiagonal() * u));
        };

        DataBatch batch = random_batch(n, m, N, rng);
        Vector analytic = grad_L2(actor, critic, model, batch, cost);
        if (analytic.size() > 0) analytic(0) += corrupt;
        Actor probe = actor;
        Vector fd = finite_diff_grad(
            [&](const Vector& theta) {
                probe.theta_mu.flat = theta;
                return loss_L2(probe, critic, model, batch, cost);
            },
            actor.theta_mu.flat);
        track_worst(result, analytic, fd);
    }
    return result;
}

RankAudit audit_rank(const DataBatch& batch, const KoopmanModel& model, double tol) {
    batch.validate();
    RankAudit audit;
    const Eigen::Index r = model.r;
    const Eigen::Index m = batch.U.rows();
    const Eigen::Index N = batch.n_samples();
    if (N < r + m) {
        audit.batch_too_small = true;
        return audit;
    }
    Matrix G = lift_batch(model, batch.X);
    Matrix stacked(r + m, N);
    stacked.topRows(r) = G;
    stacked.bottomRows(m) = batch.U;

    auto margin = [tol](const Matrix& M, Eigen::Index& rank) {
        Eigen::JacobiSVD<Matrix> svd(M);
        const auto& sv = svd.singularValues();
        const double cutoff = tol * sv(0);
        rank = 0;
        double smallest_retained = 0.0;
        for (Eigen::Index i = 0; i < sv.size(); ++i) {
            if (sv(i) > cutoff && sv(i) > 0.0) {
                ++rank;
                smallest_retained = sv(i);
            }
        }
        return sv(0) > 0.0 ? smallest_retained / sv(0) : 0.0;
    };
    audit.margin_g = margin(G, audit.rank_g);
    audit.margin_gu = margin(stacked, audit.rank_gu);
    audit.full_g = audit.rank_g == r;
    audit.full_gu = audit.rank_gu == r + m;
    return audit;
}

std::string format_rank_audit(const RankAudit& audit) {
    std::ostringstream out;
    if (audit.batch_too_small) {
        out << "rank audit: BATCH TOO SMALL (N < r+m)\n";
        out << "batch_too_small=1\n";
        return out.str();
    }
    out << "rank audit: G rank " << audit.rank_g << (audit.full_g ? " (full)" : " (DEFICIENT)")
        << ", [G;U] rank " << audit.rank_gu << (audit.full_gu ? " (full)" : " (DEFICIENT)")
        << "\n";
    out << "rank_g=" << audit.rank_g << "\nrank_gu=" << audit.rank_gu
        << "\nmargin_g=" << audit.margin_g << "\nmargin_gu=" << audit.margin_gu
        << "\nbatch_too_small=0\n";
    return out.str();
}

DataBatch gen_linear_data(const Matrix& A0, const Matrix& B0, int steps, double input_scale,
                          std::uint64_t seed) {
    const Eigen::Index n = A0.rows();
    const Eigen::Index m = B0.cols();
    if (A0.cols() != n || B0.rows() != n)
        throw InvalidInput("gen_linear_data: inconsistent A0/B0 dimensions");
    if (steps < 1) throw InvalidInput("gen_linear_data: steps must be positive");
    auto rng = make_rng(seed, "gen_linear_data");
    std::normal_distribution<double> dist(0.0, 1.0);

    DataBatch batch;
    batch.X.resize(n, steps);
    batch.Xbar.resize(n, steps);
    batch.U.resize(m, steps);
    batch.costs.resize(steps);
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = dist(rng);
    for (int k = 0; k < steps; ++k) {
        Vector u(m);
        for (Eigen::Index i = 0; i < m; ++i) u(i) = input_scale * dist(rng);
        Vector x_next = A0 * x + B0 * u;
        if (!x_next.allFinite())
            throw Error("gen_linear_data: trajectory diverged at step " + std::to_string(k));
        batch.X.col(k) = x;
        batch.Xbar.col(k) = x_next;
        batch.U.col(k) = u;
        batch.costs(k) = x.squaredNorm() + 0.1 * u.squaredNorm();
        x = x_next;
    }
    return batch;
}

}  // namespace pgdk

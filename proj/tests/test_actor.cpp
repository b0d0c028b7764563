#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "pgdk/actor.hpp"
#include "pgdk/diagnostics.hpp"
#include "pgdk/errors.hpp"

using namespace pgdk;

namespace {

Actor scaled_actor(int n, int m, double bound, std::uint64_t seed) {
    Actor a;
    a.spec.widths = {n, 8, m};
    a.spec.output = OutputActivation::ScaledTanh;
    a.spec.bound = bound;
    a.theta_mu = init_params(a.spec, seed);
    a.action_low = Vector::Constant(m, -bound);
    a.action_high = Vector::Constant(m, bound);
    return a;
}

// Scalar setup of the hand case: c = u^2, gamma = 0.5, J(x) = 2x, CB = 3,
// C A g(x) = x, mu(x) = theta * x with an identity head.
struct HandCase {
    Actor actor;
    Critic critic;
    KoopmanModel model;
    DataBatch batch;
    CostOracle cost;

    explicit HandCase(double theta) {
        actor.spec.widths = {1, 1};
        actor.spec.output = OutputActivation::Identity;
        actor.theta_mu.flat.resize(2);
        actor.theta_mu.flat << theta, 0.0;
        actor.action_low = Vector::Constant(1, -100.0);
        actor.action_high = Vector::Constant(1, 100.0);

        critic.spec.widths = {1, 1};
        critic.theta_J.flat.resize(2);
        critic.theta_J.flat << 2.0, 0.0;
        critic.gamma = 0.5;

        model.g_spec.widths = {1, 1};
        model.theta_f.flat.resize(2);
        model.theta_f.flat << 1.0, 0.0;  // g = identity
        model.r = 1;
        model.A = Matrix::Constant(1, 1, 1.0);
        model.B = Matrix::Constant(1, 1, 3.0);
        model.C = Matrix::Constant(1, 1, 1.0);  // CAg(x) = x, CB = 3

        batch.X = Matrix::Constant(1, 1, 1.0);
        batch.Xbar = Matrix::Constant(1, 1, 1.0);
        batch.U = Matrix::Constant(1, 1, 0.0);
        batch.costs = Vector::Zero(1);

        cost.cost = [](const Vector&, const Vector& u) { return u(0) * u(0); };
        cost.grad_u = [](const Vector&, const Vector& u) {
            return Vector::Constant(1, 2.0 * u(0));
        };
    }
};

DataBatch random_batch(int n, int m, int N, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    DataBatch b;
    b.X.resize(n, N);
    b.Xbar.resize(n, N);
    b.U.resize(m, N);
    b.costs.resize(N);
    for (int j = 0; j < N; ++j) {
        for (int i = 0; i < n; ++i) {
            b.X(i, j) = dist(rng);
            b.Xbar(i, j) = dist(rng);
        }
        for (int i = 0; i < m; ++i) b.U(i, j) = dist(rng);
        b.costs(j) = std::abs(dist(rng));
    }
    return b;
}

KoopmanModel random_model(int n, int r, int m, std::uint64_t seed) {
    KoopmanModel model;
    model.g_spec.widths = {n, 8, r};
    model.theta_f = init_params(model.g_spec, seed);
    model.r = r;
    std::mt19937_64 rng(seed + 100);
    std::normal_distribution<double> dist(0.0, 0.3);
    model.A.resize(r, r);
    model.B.resize(r, m);
    model.C.resize(n, r);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < r; ++j) model.A(i, j) = dist(rng);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < m; ++j) model.B(i, j) = dist(rng);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < r; ++j) model.C(i, j) = dist(rng);
    return model;
}

CostOracle quadratic_cost() {
    CostOracle c;
    c.cost = [](const Vector& x, const Vector& u) { return x.squaredNorm() + u.squaredNorm(); };
    c.grad_u = [](const Vector&, const Vector& u) { return Vector(2.0 * u); };
    return c;
}

}  // namespace

TEST_CASE("zero-weight actor outputs zero") {
    Actor a = scaled_actor(2, 1, 5.0, 0);
    a.theta_mu.flat.setZero();
    CHECK(act(a, Vector::Random(2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("actions stay inside the bounds for arbitrary states") {
    Actor a = scaled_actor(3, 2, 2.0, 5);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> dist(0.0, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        Vector x(3);
        for (int i = 0; i < 3; ++i) x(i) = dist(rng);
        Vector u = act(a, x);
        CHECK((u.array() >= a.action_low.array()).all());
        CHECK((u.array() <= a.action_high.array()).all());
    }
}

TEST_CASE("act delegates to forward with the scaled head") {
    Actor a = scaled_actor(2, 1, 3.0, 9);
    Vector x = Vector::Random(2);
    CHECK((act(a, x) - forward(a.spec, a.theta_mu, x)).norm() == 0.0);
}

TEST_CASE("hand case: L2 = 2.75 and dL2/dtheta = 4") {
    HandCase h(0.5);
    CHECK(loss_L2(h.actor, h.critic, h.model, h.batch, h.cost) ==
          doctest::Approx(2.75).epsilon(1e-12));
    Vector g = grad_L2(h.actor, h.critic, h.model, h.batch, h.cost);
    CHECK(g(0) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("gamma=0 reduces L2 to the mean recomputed stage cost") {
    std::mt19937_64 rng(3);
    Actor a = scaled_actor(2, 1, 2.0, 11);
    Critic c;
    c.spec.widths = {2, 1};
    c.theta_J = init_params(c.spec, 3);
    c.gamma = 0.99;  // irrelevant: L2's discount comes from the critic gamma
    KoopmanModel model = random_model(2, 4, 1, 12);
    DataBatch b = random_batch(2, 1, 8, rng);
    CostOracle cost = quadratic_cost();
    Critic c0 = c;
    c0.gamma = 1.0;
    c0.theta_J.flat.setZero();  // J == 0 kills the critic term regardless of gamma
    double expected = 0.0;
    for (int k = 0; k < 8; ++k) {
        Vector u = act(a, b.X.col(k));
        expected += cost.cost(b.X.col(k), u);
    }
    expected /= 8.0;
    CHECK(loss_L2(a, c0, model, b, cost) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("zero critic and zero cost gradient give zero grad_L2") {
    HandCase h(0.5);
    h.critic.theta_J.flat.setZero();
    h.cost.grad_u = [](const Vector&, const Vector&) { return Vector::Zero(1); };
    CHECK(grad_L2(h.actor, h.critic, h.model, h.batch, h.cost).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("critic-path term of grad_L2 is linear in B") {
    HandCase h(0.5);
    h.cost.grad_u = [](const Vector&, const Vector&) { return Vector::Zero(1); };
    Vector g1 = grad_L2(h.actor, h.critic, h.model, h.batch, h.cost);
    HandCase h2(0.5);
    h2.cost.grad_u = [](const Vector&, const Vector&) { return Vector::Zero(1); };
    h2.model.B *= 2.0;
    Vector g2 = grad_L2(h2.actor, h2.critic, h2.model, h2.batch, h2.cost);
    CHECK((g2 - 2.0 * g1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("grad_L2 matches finite differences on random instances") {
    std::mt19937_64 rng(17);
    CostOracle cost = quadratic_cost();
    for (int trial = 0; trial < 5; ++trial) {
        Actor a = scaled_actor(2, 1, 2.0, 200 + trial);
        Critic c;
        c.spec.widths = {2, 16, 1};
        c.theta_J = init_params(c.spec, 300 + trial);
        c.gamma = 0.9;
        KoopmanModel model = random_model(2, 4, 1, 400 + trial);
        DataBatch b = random_batch(2, 1, 10, rng);
        Vector analytic = grad_L2(a, c, model, b, cost);
        auto loss = [&](const Vector& theta) {
            Actor a2 = a;
            a2.theta_mu.flat = theta;
            return loss_L2(a2, c, model, b, cost);
        };
        Vector fd = finite_diff_grad(loss, a.theta_mu.flat);
        CHECK(relative_error(analytic, fd) < 1e-4);
    }
}

TEST_CASE("update_policy arithmetic") {
    Actor a = scaled_actor(2, 1, 1.0, 21);
    Vector zero = Vector::Zero(a.theta_mu.flat.size());
    CHECK((update_policy(a, zero, 0.1).theta_mu.flat - a.theta_mu.flat).norm() == 0.0);

    Vector e1 = zero;
    e1(0) = 1.0;
    Actor stepped = update_policy(a, e1, 1.0);
    CHECK(stepped.theta_mu.flat(0) == doctest::Approx(a.theta_mu.flat(0) - 1.0));
    CHECK((stepped.theta_mu.flat.tail(zero.size() - 1) - a.theta_mu.flat.tail(zero.size() - 1))
              .norm() == 0.0);

    // Sequential updates with fixed gradients match one summed update.
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist(0.0, 1.0);
    Vector g1(zero.size()), g2(zero.size());
    for (Eigen::Index i = 0; i < zero.size(); ++i) {
        g1(i) = dist(rng);
        g2(i) = dist(rng);
    }
    Actor two_steps = update_policy(update_policy(a, g1, 0.3), g2, 0.7);
    Actor one_step = update_policy(a, Vector(0.3 * g1 + 0.7 * g2), 1.0);
    CHECK((two_steps.theta_mu.flat - one_step.theta_mu.flat).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("update_policy rejects non-finite gradients") {
    Actor a = scaled_actor(2, 1, 1.0, 22);
    Vector g = Vector::Zero(a.theta_mu.flat.size());
    g(0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(update_policy(a, g, 0.1), NumericalDivergence);
}

TEST_CASE("actor validation rejects inverted bounds") {
    Actor a = scaled_actor(2, 1, 1.0, 23);
    a.action_low(0) = 2.0;  // above action_high
    CHECK_THROWS_AS(a.validate(), InvalidInput);
}

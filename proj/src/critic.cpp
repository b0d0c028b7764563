#include "pgdk/critic.hpp"

#include "pgdk/errors.hpp"

namespace pgdk {

void Critic::validate() const {
    spec.validate();
    if (spec.output_width() != 1)
        throw InvalidInput("Critic: output width must be 1");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw InvalidInput("Critic: gamma must lie in (0,1]");
}

double value(const Critic& critic, const Vector& x) {
    return forward(critic.spec, critic.theta_J, x)(0);
}

double td_loss(const Critic& critic, const DataBatch& batch) {
    batch.validate();
    const Eigen::Index N = batch.n_samples();
    double total = 0.0;
    for (Eigen::Index k = 0; k < N; ++k) {
        const double delta = batch.costs(k) +
                             critic.gamma * value(critic, batch.Xbar.col(k)) -
                             value(critic, batch.X.col(k));
        total += delta * delta;
    }
    return total / static_cast<double>(N);
}

Vector grad_td(const Critic& critic, const DataBatch& batch) {
    batch.validate();
    const Eigen::Index N = batch.n_samples();
    const Vector one = Vector::Ones(1);
    Vector grad = Vector::Zero(critic.theta_J.flat.size());
    for (Eigen::Index k = 0; k < N; ++k) {
        const double delta = batch.costs(k) +
                             critic.gamma * value(critic, batch.Xbar.col(k)) -
                             value(critic, batch.X.col(k));
        Vector g_next = vjp(critic.spec, critic.theta_J, batch.Xbar.col(k), one).grad_params;
        Vector g_curr = vjp(critic.spec, critic.theta_J, batch.X.col(k), one).grad_params;
        grad += delta * (critic.gamma * g_next - g_curr);
    }
    return grad * (2.0 / static_cast<double>(N));
}

Vector value_grad_x(const Critic& critic, const Vector& x) {
    return vjp(critic.spec, critic.theta_J, x, Vector::Ones(1)).grad_input;
}

}  // namespace pgdk

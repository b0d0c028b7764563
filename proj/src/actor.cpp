#include "pgdk/actor.hpp"

#include "pgdk/errors.hpp"

namespace pgdk {

void Actor::validate() const {
    spec.validate();
    if (action_low.size() != spec.output_width() || action_high.size() != spec.output_width())
        throw InvalidInput("Actor: action bound length does not match output width");
    for (Eigen::Index i = 0; i < action_low.size(); ++i)
        if (!(action_low(i) < action_high(i)))
            throw InvalidInput("Actor: action_low must be below action_high componentwise");
}

Vector act(const Actor& actor, const Vector& x) {
    return forward(actor.spec, actor.theta_mu, x);
}

namespace {

void check_l2_dims(const Actor& actor, const KoopmanModel& model, const DataBatch& batch) {
    batch.validate();
    if (batch.X.rows() != model.state_dim() || batch.X.rows() != actor.spec.input_width())
        throw InvalidInput("loss_L2: state dimension mismatch");
    if (actor.spec.output_width() != model.B.cols())
        throw InvalidInput("loss_L2: action dimension mismatch");
}

}  // namespace

double loss_L2(const Actor& actor, const Critic& critic, const KoopmanModel& model,
               const DataBatch& batch, const CostOracle& cost) {
    check_l2_dims(actor, model, batch);
    const Eigen::Index N = batch.n_samples();
    double total = 0.0;
    for (Eigen::Index k = 0; k < N; ++k) {
        const Vector x = batch.X.col(k);
        const Vector u = act(actor, x);
        const Vector xhat_next = predict(model, x, u);
        total += cost.cost(x, u) + critic.gamma * value(critic, xhat_next);
    }
    return total / static_cast<double>(N);
}

Vector grad_L2(const Actor& actor, const Critic& critic, const KoopmanModel& model,
               const DataBatch& batch, const CostOracle& cost) {
    check_l2_dims(actor, model, batch);
    const Eigen::Index N = batch.n_samples();
    const Matrix cb = model.C * model.B;  // dxhat_{k+1} / du_k
    Vector grad = Vector::Zero(actor.theta_mu.flat.size());
    for (Eigen::Index k = 0; k < N; ++k) {
        const Vector x = batch.X.col(k);
        const Vector u = act(actor, x);
        const Vector xhat_next = predict(model, x, u);
        Vector cot = cost.grad_u(x, u);
        cot.noalias() += critic.gamma * (cb.transpose() * value_grad_x(critic, xhat_next));
        grad += vjp(actor.spec, actor.theta_mu, x, cot).grad_params;
    }
    return grad / static_cast<double>(N);
}

Actor update_policy(const Actor& actor, const Vector& grad, double step) {
    if (grad.size() != actor.theta_mu.flat.size())
        throw InvalidInput("update_policy: gradient length mismatch");
    if (!grad.allFinite())
        throw NumericalDivergence("update_policy: non-finite policy gradient");
    Actor next = actor;
    next.theta_mu.flat -= step * grad;
    return next;
}

}  // namespace pgdk

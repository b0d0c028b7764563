#pragma once

#include "pgdk/cost.hpp"
#include "pgdk/critic.hpp"
#include "pgdk/koopman.hpp"

namespace pgdk {

// Deterministic policy u = mu(x, theta_mu). The scaled-tanh head keeps
// actions inside the symmetric actuator bounds; its derivative is part of
// du/dtheta.
struct Actor {
    MlpSpec spec;  // input n, output m
    MlpParams theta_mu;
    Vector action_low;
    Vector action_high;

    void validate() const;
};

Vector act(const Actor& actor, const Vector& x);

// Surrogate policy loss
// (1/N) sum [ c(x_k, mu(x_k)) + gamma J_hat(C(A g(x_k) + B mu(x_k))) ]
// with the action recomputed from the current policy, one-step prediction
// from each observed x_k.
double loss_L2(const Actor& actor, const Critic& critic, const KoopmanModel& model,
               const DataBatch& batch, const CostOracle& cost);

// (1/N) sum [ dc/du + gamma (dJ_hat/dxhat) C B ] du/dtheta_mu
Vector grad_L2(const Actor& actor, const Critic& critic, const KoopmanModel& model,
               const DataBatch& batch, const CostOracle& cost);

// theta_mu <- theta_mu - step * grad
Actor update_policy(const Actor& actor, const Vector& grad, double step);

}  // namespace pgdk

#pragma once

#include "pgdk/koopman.hpp"
#include "pgdk/neural.hpp"

namespace pgdk {

// Value-function approximation J_hat(x, theta_J) with the full residual TD
// gradient: the gamma * dJ_hat(x_{k+1})/dtheta term is kept, so this is not
// the classical semi-gradient TD(0) update.
struct Critic {
    MlpSpec spec;       // input n, output 1, identity head
    MlpParams theta_J;
    double gamma = 0.99;

    void validate() const;
};

double value(const Critic& critic, const Vector& x);

// (1/N) sum (c_k + gamma J_hat(x_{k+1}) - J_hat(x_k))^2
double td_loss(const Critic& critic, const DataBatch& batch);

// (2/N) sum delta_k (gamma dJ_hat(x_{k+1})/dtheta - dJ_hat(x_k)/dtheta)
Vector grad_td(const Critic& critic, const DataBatch& batch);

// Input gradient of J_hat at x (unit scalar cotangent).
Vector value_grad_x(const Critic& critic, const Vector& x);

}  // namespace pgdk

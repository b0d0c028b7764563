#pragma once

#include <string>
#include <vector>

#include "pgdk/neural.hpp"
#include "pgdk/numerics.hpp"

namespace pgdk {

// Sampled transition batch in stacked column form: column j of Xbar is the
// stored successor of column j of X.
struct DataBatch {
    Matrix X;      // n x N states
    Matrix Xbar;   // n x N successor states
    Matrix U;      // m x N inputs
    Vector costs;  // N stage costs

    Eigen::Index n_samples() const { return X.cols(); }
    void validate() const;
};

// The deep Koopman representation {g, A, B, C}: a learned lifting g mapping
// states to r coordinates that evolve linearly, projected back by C. With
// `augment` set, the raw state is appended to the network output
// (r = network output + n); off by default, the projection C then reads the
// pure learned lifting.
struct KoopmanModel {
    MlpSpec g_spec;     // input n
    MlpParams theta_f;
    Matrix A;           // r x r
    Matrix B;           // r x m
    Matrix C;           // n x r
    int r = 0;
    bool augment = false;

    int state_dim() const { return g_spec.input_width(); }
    void validate() const;
};

// Full lifted coordinates of one state (network output, plus the raw state
// when augmented).
Vector lift_state(const KoopmanModel& model, const Vector& x);

Matrix lift_batch(const KoopmanModel& model, const Matrix& states);

struct LinearMaps {
    Matrix A, B, C;
    bool used_ridge = false;
};

// [A,B] = Gbar * pinv([G;U]), C = X * pinv(G). Near rank deficiency (smallest
// retained singular value within 10x of the cutoff) falls back to a Tikhonov
// solve with lambda = 1e-8 when allow_ridge is set; otherwise throws
// RankDeficient naming the failing stacked matrix.
LinearMaps fit_linear_maps(const Matrix& G, const Matrix& Gbar, const Matrix& U,
                           const Matrix& X, double tol = 1e-10, bool allow_ridge = true);

// K = [[A, B], [C, 0]], shape (r+n) x (r+m).
Matrix assemble_frozen_k(const Matrix& A, const Matrix& B, const Matrix& C);

// One-step predictor C (A g(x) + B u).
Vector predict(const KoopmanModel& model, const Vector& xhat, const Vector& u);

// (1/N) || [Gbar; X] - K [G; U] ||_F^2 with G, Gbar lifted under the
// current theta_f and K held frozen.
double loss_L1(const KoopmanModel& model, const Matrix& k_frozen, const DataBatch& batch);

// Analytic gradient of loss_L1 in theta_f:
// (2/N) sum_k delta_k' ([dg(x_{k+1})/dtheta; 0] - K [dg(x_k)/dtheta; 0]).
Vector grad_L1(const KoopmanModel& model, const Matrix& k_frozen, const DataBatch& batch);

// Iterates predict from x0; throws DivergedRollout with the step index on a
// non-finite intermediate state.
std::vector<Vector> rollout(const KoopmanModel& model, const Vector& x0,
                            const std::vector<Vector>& inputs);

// Checkpoint for A, B, C: dimension-headed flat doubles, bit-exact.
void save_linear_maps(const std::string& path, const Matrix& A, const Matrix& B, const Matrix& C);
LinearMaps load_linear_maps(const std::string& path);

}  // namespace pgdk

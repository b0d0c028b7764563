#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "pgdk/koopman.hpp"
#include "pgdk/numerics.hpp"

namespace pgdk {

// Central finite differences, the independent oracle for every analytic
// gradient in the library.
Vector finite_diff_grad(const std::function<double(const Vector&)>& loss, const Vector& theta,
                        double h = 1e-6);

double relative_error(const Vector& analytic, const Vector& fd);

struct FdCheckResult {
    std::string loss_name;
    double max_rel_error = 0.0;
    Eigen::Index worst_coordinate = -1;
    int n_trials = 0;
};

// Randomized finite-difference suites for the three analytic gradients.
// `corrupt` perturbs the analytic gradient (negative-control hook).
FdCheckResult fd_check_L1(std::uint64_t seed, int trials, double corrupt = 0.0);
FdCheckResult fd_check_td(std::uint64_t seed, int trials, double corrupt = 0.0);
FdCheckResult fd_check_L2(std::uint64_t seed, int trials, double corrupt = 0.0);

// Rank audit of a batch against the full-row-rank requirement on G and
// [G;U]. Never aborts training.
struct RankAudit {
    Eigen::Index rank_g = 0;
    Eigen::Index rank_gu = 0;
    bool full_g = false;
    bool full_gu = false;
    bool batch_too_small = false;
    double margin_g = 0.0;   // smallest retained / largest singular value
    double margin_gu = 0.0;
};

RankAudit audit_rank(const DataBatch& batch, const KoopmanModel& model, double tol = 1e-10);
std::string format_rank_audit(const RankAudit& audit);

// Simulates x_{k+1} = A0 x_k + B0 u_k with seeded Gaussian inputs; the cost
// field gets a quadratic for completeness.
DataBatch gen_linear_data(const Matrix& A0, const Matrix& B0, int steps, double input_scale,
                          std::uint64_t seed);

}  // namespace pgdk

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>

#include "pgdk/cost.hpp"
#include "pgdk/numerics.hpp"

namespace pgdk {

struct EnvSpec {
    int n = 0;  // state dimension
    int m = 0;  // action dimension
    Vector action_low;
    Vector action_high;
    double dt = 0.0;
    int horizon = 0;
};

// Environments are stateless transition functions plus a seeded reset.
class Environment {
public:
    virtual ~Environment() = default;

    const EnvSpec& spec() const { return spec_; }
    const CostOracle& cost_oracle() const { return cost_; }
    const std::string& name() const { return name_; }

    // Deterministic initial state draw for a given seed.
    virtual Vector reset(std::uint64_t seed) const = 0;

    // Clips u to bounds, integrates one dt with semi-implicit Euler, costs
    // the clipped action at the pre-step state. Throws EnvDiverged on a
    // non-finite successor.
    std::pair<Vector, double> step(const Vector& x, const Vector& u) const;

protected:
    virtual Vector dynamics_step(const Vector& x, const Vector& u_clipped) const = 0;

    EnvSpec spec_;
    CostOracle cost_;
    std::string name_;
};

// Physical constants are overridable by config key (e.g. "dt", "horizon",
// "max_torque").
std::unique_ptr<Environment> make_env(const std::string& name,
                                      const std::map<std::string, double>& overrides = {});

// Discounted Riccati fixed-point iteration:
// P <- Q + gamma A'PA - gamma^2 A'PB (R + gamma B'PB)^{-1} B'PA,
// K = gamma (R + gamma B'PB)^{-1} B'PA, iterated until |dP|_F < 1e-12.
struct LqrSolution {
    Matrix K;
    Matrix P;
};

LqrSolution lqr_oracle(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                       double gamma, int iters = 100000);

// Exact discrete-time matrices of the built-in double integrator, for the
// optimality oracle used in tests.
void double_integrator_matrices(double dt, Matrix& A, Matrix& B, Matrix& Q, Matrix& R);

}  // namespace pgdk

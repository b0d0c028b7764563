#include "pgdk/envs.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "pgdk/errors.hpp"
#include "pgdk/rng.hpp"

namespace pgdk {

namespace {

double wrap_angle(double theta) {
    // wrap to (-pi, pi]
    const double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(theta + std::numbers::pi, two_pi);
    if (w <= 0.0) w += two_pi;
    return w - std::numbers::pi;
}

double get_or(const std::map<std::string, double>& overrides, const std::string& key,
              double fallback) {
    auto it = overrides.find(key);
    return it == overrides.end() ? fallback : it->second;
}

}  // namespace

std::pair<Vector, double> Environment::step(const Vector& x, const Vector& u) const {
    if (x.size() != spec_.n) throw InvalidInput("Environment::step: state length mismatch");
    if (u.size() != spec_.m) throw InvalidInput("Environment::step: input length mismatch");
    Vector u_clipped = u.cwiseMax(spec_.action_low).cwiseMin(spec_.action_high);
    const double c = cost_.cost(x, u_clipped);
    Vector x_next = dynamics_step(x, u_clipped);
    if (!x_next.allFinite())
        throw EnvDiverged("Environment::step: non-finite state in " + name_);
    return {std::move(x_next), c};
}

namespace {

// p' = p + dt v', v' = v + dt u. Cost p^2 + 0.1 v^2 + 0.01 u^2.
class DoubleIntegratorEnv : public Environment {
public:
    explicit DoubleIntegratorEnv(const std::map<std::string, double>& ov) {
        name_ = "double_integrator";
        spec_.n = 2;
        spec_.m = 1;
        spec_.dt = get_or(ov, "dt", 0.1);
        spec_.horizon = static_cast<int>(get_or(ov, "horizon", 100));
        const double bound = get_or(ov, "max_force", 12.0);
        spec_.action_low = Vector::Constant(1, -bound);
        spec_.action_high = Vector::Constant(1, bound);
        cost_.cost = [](const Vector& x, const Vector& u) {
            return x(0) * x(0) + 0.1 * x(1) * x(1) + 0.01 * u(0) * u(0);
        };
        cost_.grad_u = [](const Vector&, const Vector& u) {
            return Vector::Constant(1, 0.02 * u(0));
        };
    }

    Vector reset(std::uint64_t seed) const override {
        auto rng = make_rng(seed, "double_integrator.reset");
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        Vector x(2);
        x(0) = dist(rng);
        x(1) = dist(rng);
        return x;
    }

protected:
    Vector dynamics_step(const Vector& x, const Vector& u) const override {
        Vector next(2);
        next(1) = x(1) + spec_.dt * u(0);
        next(0) = x(0) + spec_.dt * next(1);
        return next;
    }
};

// theta'' = (3g / 2l) sin(theta) + (3 / m l^2) u, semi-implicit Euler.
// theta = 0 is upright. Cost wrap(theta)^2 + 0.1 theta_dot^2 + 0.001 u^2.
class PendulumEnv : public Environment {
public:
    PendulumEnv(const std::map<std::string, double>& ov, bool swingup) : swingup_(swingup) {
        name_ = swingup ? "pendulum_swingup" : "pendulum";
        spec_.n = 2;
        spec_.m = 1;
        spec_.dt = get_or(ov, "dt", 0.05);
        spec_.horizon = static_cast<int>(get_or(ov, "horizon", 200));
        gravity_ = get_or(ov, "gravity", 10.0);
        mass_ = get_or(ov, "mass", 1.0);
        length_ = get_or(ov, "length", 1.0);
        const double bound = get_or(ov, "max_torque", 5.0);
        spec_.action_low = Vector::Constant(1, -bound);
        spec_.action_high = Vector::Constant(1, bound);
        cost_.cost = [](const Vector& x, const Vector& u) {
            const double th = wrap_angle(x(0));
            return th * th + 0.1 * x(1) * x(1) + 0.001 * u(0) * u(0);
        };
        cost_.grad_u = [](const Vector&, const Vector& u) {
            return Vector::Constant(1, 0.002 * u(0));
        };
    }

    Vector reset(std::uint64_t seed) const override {
        auto rng = make_rng(seed, name_ + ".reset");
        Vector x(2);
        if (swingup_) {
            std::uniform_real_distribution<double> th(std::numbers::pi - 0.1,
                                                      std::numbers::pi + 0.1);
            std::uniform_real_distribution<double> om(-0.5, 0.5);
            x(0) = th(rng);
            x(1) = om(rng);
        } else {
            std::uniform_real_distribution<double> th(-0.5, 0.5);
            std::uniform_real_distribution<double> om(-0.2, 0.2);
            x(0) = th(rng);
            x(1) = om(rng);
        }
        return x;
    }

protected:
    Vector dynamics_step(const Vector& x, const Vector& u) const override {
        const double accel = (3.0 * gravity_ / (2.0 * length_)) * std::sin(x(0)) +
                             (3.0 / (mass_ * length_ * length_)) * u(0);
        Vector next(2);
        next(1) = x(1) + spec_.dt * accel;
        next(0) = x(0) + spec_.dt * next(1);
        return next;
    }

private:
    bool swingup_;
    double gravity_, mass_, length_;
};

// Continuous-force pole on a cart, semi-implicit Euler. State
// (pos, vel, theta, omega); cost pos^2 + 10 theta^2 + 0.1 vel^2
// + 0.1 omega^2 + 0.001 u^2.
class CartpoleEnv : public Environment {
public:
    explicit CartpoleEnv(const std::map<std::string, double>& ov) {
        name_ = "cartpole";
        spec_.n = 4;
        spec_.m = 1;
        spec_.dt = get_or(ov, "dt", 0.02);
        spec_.horizon = static_cast<int>(get_or(ov, "horizon", 200));
        gravity_ = get_or(ov, "gravity", 9.8);
        mass_cart_ = get_or(ov, "mass_cart", 1.0);
        mass_pole_ = get_or(ov, "mass_pole", 0.1);
        half_length_ = get_or(ov, "half_length", 0.5);
        const double bound = get_or(ov, "max_force", 10.0);
        spec_.action_low = Vector::Constant(1, -bound);
        spec_.action_high = Vector::Constant(1, bound);
        cost_.cost = [](const Vector& x, const Vector& u) {
            const double th = wrap_angle(x(2));
            return x(0) * x(0) + 10.0 * th * th + 0.1 * x(1) * x(1) + 0.1 * x(3) * x(3) +
                   0.001 * u(0) * u(0);
        };
        cost_.grad_u = [](const Vector&, const Vector& u) {
            return Vector::Constant(1, 0.002 * u(0));
        };
    }

    Vector reset(std::uint64_t seed) const override {
        auto rng = make_rng(seed, "cartpole.reset");
        std::uniform_real_distribution<double> dist(-0.05, 0.05);
        Vector x(4);
        for (int i = 0; i < 4; ++i) x(i) = dist(rng);
        return x;
    }

protected:
    Vector dynamics_step(const Vector& x, const Vector& u) const override {
        const double total_mass = mass_cart_ + mass_pole_;
        const double sin_th = std::sin(x(2));
        const double cos_th = std::cos(x(2));
        const double tmp = (u(0) + mass_pole_ * half_length_ * x(3) * x(3) * sin_th) / total_mass;
        const double th_acc =
            (gravity_ * sin_th - cos_th * tmp) /
            (half_length_ * (4.0 / 3.0 - mass_pole_ * cos_th * cos_th / total_mass));
        const double x_acc = tmp - mass_pole_ * half_length_ * th_acc * cos_th / total_mass;
        Vector next(4);
        next(1) = x(1) + spec_.dt * x_acc;
        next(0) = x(0) + spec_.dt * next(1);
        next(3) = x(3) + spec_.dt * th_acc;
        next(2) = x(2) + spec_.dt * next(3);
        return next;
    }

private:
    double gravity_, mass_cart_, mass_pole_, half_length_;
};

}  // namespace

std::unique_ptr<Environment> make_env(const std::string& name,
                                      const std::map<std::string, double>& overrides) {
    if (name == "double_integrator") return std::make_unique<DoubleIntegratorEnv>(overrides);
    if (name == "pendulum") return std::make_unique<PendulumEnv>(overrides, false);
    if (name == "pendulum_swingup") return std::make_unique<PendulumEnv>(overrides, true);
    if (name == "cartpole") return std::make_unique<CartpoleEnv>(overrides);
    throw ConfigError("make_env: unknown environment '" + name + "'");
}

LqrSolution lqr_oracle(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                       double gamma, int iters) {
    const Eigen::Index n = A.rows();
    Matrix P = Q;
    for (int it = 0; it < iters; ++it) {
        Matrix gain_inner = R + gamma * B.transpose() * P * B;
        Matrix K = gamma * gain_inner.ldlt().solve(B.transpose() * P * A);
        Matrix P_next = Q + gamma * A.transpose() * P * A -
                        gamma * A.transpose() * P * B * K;
        if (!P_next.allFinite())
            throw OracleDiverged("lqr_oracle: non-finite Riccati iterate");
        const double delta = (P_next - P).norm();
        P = P_next;
        if (delta < 1e-12) {
            Matrix K_final =
                gamma * (R + gamma * B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
            return {std::move(K_final), std::move(P)};
        }
    }
    throw OracleDiverged("lqr_oracle: no fixed point within iteration budget");
}

void double_integrator_matrices(double dt, Matrix& A, Matrix& B, Matrix& Q, Matrix& R) {
    A.resize(2, 2);
    A << 1.0, dt, 0.0, 1.0;
    B.resize(2, 1);
    B << dt * dt, dt;  // semi-implicit: position sees the updated velocity
    Q.resize(2, 2);
    Q << 1.0, 0.0, 0.0, 0.1;
    R.resize(1, 1);
    R << 0.01;
}

}  // namespace pgdk

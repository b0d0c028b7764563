#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "pgdk/diagnostics.hpp"
#include "pgdk/errors.hpp"
#include "pgdk/koopman.hpp"

using namespace pgdk;

namespace {

// Identity lifting: a single identity-activation layer with W=I, b=0.
KoopmanModel identity_model(int n) {
    KoopmanModel model;
    model.g_spec.widths = {n, n};
    model.g_spec.hidden = Activation::Identity;
    model.theta_f.flat = Vector::Zero(n * n + n);
    for (int i = 0; i < n; ++i) model.theta_f.flat(i * n + i) = 1.0;
    model.r = n;
    model.A = Matrix::Identity(n, n);
    model.B = Matrix::Zero(n, 1);
    model.C = Matrix::Identity(n, n);
    return model;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

DataBatch random_batch(int n, int m, int N, std::mt19937_64& rng) {
    DataBatch b;
    b.X = random_matrix(n, N, rng);
    b.Xbar = random_matrix(n, N, rng);
    b.U = random_matrix(m, N, rng);
    b.costs = Vector::Zero(N);
    return b;
}

KoopmanModel random_model(int n, int r, int m, std::uint64_t seed) {
    KoopmanModel model;
    model.g_spec.widths = {n, 8, r};
    model.g_spec.hidden = Activation::Tanh;
    model.theta_f = init_params(model.g_spec, seed);
    model.r = r;
    std::mt19937_64 rng(seed + 1);
    model.A = 0.1 * random_matrix(r, r, rng);
    model.B = 0.1 * random_matrix(r, m, rng);
    model.C = 0.1 * random_matrix(n, r, rng);
    return model;
}

}  // namespace

TEST_CASE("lift_batch with identity lifting returns the input") {
    KoopmanModel model = identity_model(3);
    std::mt19937_64 rng(1);
    Matrix states = random_matrix(3, 5, rng);
    CHECK((lift_batch(model, states) - states).norm() == 0.0);
}

TEST_CASE("lift_batch columns match per-state lift_state calls") {
    KoopmanModel model = random_model(2, 5, 1, 4);
    std::mt19937_64 rng(2);
    Matrix states = random_matrix(2, 7, rng);
    Matrix lifted = lift_batch(model, states);
    CHECK(lifted.rows() == 5);
    for (int j = 0; j < 7; ++j) {
        Vector col = lift_state(model, states.col(j));
        CHECK((lifted.col(j) - col).norm() == 0.0);
    }
}

TEST_CASE("augmented lifting appends the raw state") {
    KoopmanModel model = random_model(2, 5, 1, 8);
    model.augment = true;
    model.r = 5 + 2;
    model.A = Matrix::Identity(7, 7);
    model.B = Matrix::Zero(7, 1);
    model.C = Matrix::Zero(2, 7);
    Vector x(2);
    x << 0.4, -1.2;
    Vector lifted = lift_state(model, x);
    CHECK(lifted.size() == 7);
    CHECK((lifted.tail(2) - x).norm() == 0.0);
    CHECK((lifted.head(5) - forward(model.g_spec, model.theta_f, x)).norm() == 0.0);
}

TEST_CASE("fit recovers scalar a=0.5, b=0.2 exactly") {
    Matrix G(1, 2), U(1, 2), X(1, 2);
    G << 1, 1;
    U << 1, 2;
    X << 1, 1;
    Matrix Gbar = 0.5 * G + 0.2 * U;
    LinearMaps maps = fit_linear_maps(G, Gbar, U, X);
    CHECK(maps.A(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(maps.B(0, 0) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("fit with Gbar = G and rich excitation recovers A=I, B=0") {
    std::mt19937_64 rng(5);
    Matrix G = random_matrix(3, 20, rng);
    Matrix U = random_matrix(1, 20, rng);
    Matrix X = random_matrix(3, 20, rng);
    LinearMaps maps = fit_linear_maps(G, G, U, X);
    CHECK((maps.A - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(maps.B.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("fit rejects batches below the r+m column minimum") {
    Matrix G(1, 1), U(1, 1), X(1, 1);
    G << 1;
    U << 1;
    X << 1;
    CHECK_THROWS_AS(fit_linear_maps(G, G, U, X), BatchTooSmall);
}

TEST_CASE("fit raises RankDeficient without the ridge fallback") {
    // Identical columns: [G;U] has rank 1 < r+m = 2.
    Matrix G(1, 4), U(1, 4), X(1, 4);
    G << 1, 1, 1, 1;
    U << 2, 2, 2, 2;
    X << 1, 1, 1, 1;
    CHECK_THROWS_AS(fit_linear_maps(G, G, U, X, 1e-10, false), RankDeficient);
    LinearMaps maps = fit_linear_maps(G, G, U, X, 1e-10, true);
    CHECK(maps.used_ridge);
    CHECK(maps.A.allFinite());
}

TEST_CASE("fitted maps are least-squares optimal under random perturbations") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const int r = 3, m = 1, n = 2, N = 16;
        Matrix G = random_matrix(r, N, rng);
        Matrix Gbar = random_matrix(r, N, rng);
        Matrix U = random_matrix(m, N, rng);
        Matrix X = random_matrix(n, N, rng);
        LinearMaps maps = fit_linear_maps(G, Gbar, U, X);
        Matrix GU(r + m, N);
        GU << G, U;
        Matrix AB(r, r + m);
        AB << maps.A, maps.B;
        const double l11 = (Gbar - AB * GU).squaredNorm();
        const double l12 = (X - maps.C * G).squaredNorm();
        for (int p = 0; p < 20; ++p) {
            Matrix dAB = random_matrix(r, r + m, rng);
            dAB *= 1e-3 / dAB.norm();
            CHECK((Gbar - (AB + dAB) * GU).squaredNorm() >= l11 - 1e-12);
            Matrix dC = random_matrix(n, r, rng);
            dC *= 1e-3 / dC.norm();
            CHECK((X - (maps.C + dC) * G).squaredNorm() >= l12 - 1e-12);
        }
    }
}

TEST_CASE("assemble_frozen_k block layout") {
    std::mt19937_64 rng(3);
    Matrix A = random_matrix(3, 3, rng), B = random_matrix(3, 2, rng), C = random_matrix(2, 3, rng);
    Matrix K = assemble_frozen_k(A, B, C);
    CHECK(K.rows() == 5);
    CHECK(K.cols() == 5);
    CHECK((K.block(0, 0, 3, 3) - A).norm() == 0.0);
    CHECK((K.block(0, 3, 3, 2) - B).norm() == 0.0);
    CHECK((K.block(3, 0, 2, 3) - C).norm() == 0.0);
    CHECK(K.block(3, 3, 2, 2).norm() == 0.0);
}

TEST_CASE("predict is the identity for the frozen identity model") {
    KoopmanModel model = identity_model(2);
    Vector x(2), u(1);
    x << 0.3, -0.8;
    u << 5.0;
    CHECK((predict(model, x, u) - x).norm() == 0.0);
}

TEST_CASE("predict is affine in u with sensitivity C*B") {
    KoopmanModel model = random_model(2, 5, 2, 12);
    std::mt19937_64 rng(13);
    Vector x = Vector::Random(2);
    Vector u1 = Vector::Random(2), u2 = Vector::Random(2);
    Vector diff = predict(model, x, u1) - predict(model, x, u2);
    Vector expected = model.C * model.B * (u1 - u2);
    CHECK((diff - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("loss_L1 is zero on data generated by the frozen model") {
    KoopmanModel model = identity_model(2);
    // Dynamics xbar = x (A=I, B=0), so a batch with Xbar = X fits exactly.
    std::mt19937_64 rng(6);
    DataBatch b;
    b.X = random_matrix(2, 8, rng);
    b.Xbar = b.X;
    b.U = Matrix::Zero(1, 8);
    b.costs = Vector::Zero(8);
    Matrix K = assemble_frozen_k(model.A, model.B, model.C);
    CHECK(loss_L1(model, K, b) < 1e-12);
}

TEST_CASE("loss_L1 with zero K reduces to mean squared norms") {
    KoopmanModel model = identity_model(2);
    std::mt19937_64 rng(7);
    DataBatch b = random_batch(2, 1, 6, rng);
    Matrix K = Matrix::Zero(4, 3);
    const double expected = (b.Xbar.squaredNorm() + b.X.squaredNorm()) / 6.0;
    CHECK(loss_L1(model, K, b) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("loss_L1 matches the per-column summation form") {
    KoopmanModel model = random_model(2, 5, 1, 20);
    std::mt19937_64 rng(8);
    DataBatch b = random_batch(2, 1, 10, rng);
    Matrix K = assemble_frozen_k(model.A, model.B, model.C);
    double sum = 0.0;
    for (int k = 0; k < 10; ++k) {
        Vector g = lift_state(model, b.X.col(k));
        Vector gbar = lift_state(model, b.Xbar.col(k));
        Vector top(5 + 2), bottom(5 + 1);
        top << gbar, Vector(b.X.col(k));
        bottom << g, Vector(b.U.col(k));
        sum += (top - K * bottom).squaredNorm();
    }
    CHECK(loss_L1(model, K, b) == doctest::Approx(sum / 10.0).epsilon(1e-12));
}

TEST_CASE("grad_L1 vanishes at an exact-fit minimum") {
    KoopmanModel model = identity_model(2);
    std::mt19937_64 rng(10);
    DataBatch b;
    b.X = random_matrix(2, 8, rng);
    b.Xbar = b.X;
    b.U = Matrix::Zero(1, 8);
    b.costs = Vector::Zero(8);
    Matrix K = assemble_frozen_k(model.A, model.B, model.C);
    CHECK(grad_L1(model, K, b).norm() < 1e-8);
}

TEST_CASE("grad_L1 matches finite differences on random instances") {
    std::mt19937_64 rng(30);
    for (int trial = 0; trial < 5; ++trial) {
        KoopmanModel model = random_model(2, 4, 1, 100 + trial);
        DataBatch b = random_batch(2, 1, 12, rng);
        Matrix K = assemble_frozen_k(model.A, model.B, model.C);
        Vector analytic = grad_L1(model, K, b);
        auto loss = [&](const Vector& theta) {
            KoopmanModel m2 = model;
            m2.theta_f.flat = theta;
            return loss_L1(m2, K, b);
        };
        Vector fd = finite_diff_grad(loss, model.theta_f.flat);
        CHECK(relative_error(analytic, fd) < 1e-4);
    }
}

TEST_CASE("rollout basics and divergence") {
    KoopmanModel model = identity_model(2);
    Vector x0(2);
    x0 << 1, 2;
    CHECK(rollout(model, x0, {}).empty());
    Vector u = Vector::Zero(1);
    auto seq = rollout(model, x0, {u, u, u});
    CHECK(seq.size() == 3);
    for (const Vector& s : seq) CHECK((s - x0).norm() == 0.0);

    KoopmanModel bad = identity_model(1);
    bad.A(0, 0) = 1e308;  // overflow after two steps
    Vector y0 = Vector::Ones(1);
    Vector u1 = Vector::Zero(1);
    CHECK_THROWS_AS(rollout(bad, y0, {u1, u1, u1}), DivergedRollout);
}

TEST_CASE("rollout tracks an exact linear system for 20 steps") {
    const int n = 2;
    Matrix A0(2, 2), B0(2, 1);
    A0 << 0.9, 0.1, 0.0, 0.8;
    B0 << 0.0, 0.1;
    DataBatch data = gen_linear_data(A0, B0, 200, 1.0, 42);
    KoopmanModel model = identity_model(n);
    model.B.resize(2, 1);
    Matrix G = lift_batch(model, data.X);
    Matrix Gbar = lift_batch(model, data.Xbar);
    LinearMaps maps = fit_linear_maps(G, Gbar, data.U, data.X);
    model.A = maps.A;
    model.B = maps.B;
    model.C = maps.C;
    std::mt19937_64 rng(55);
    Vector x = Vector::Random(2);
    std::vector<Vector> inputs;
    for (int k = 0; k < 20; ++k) inputs.push_back(Vector::Random(1));
    auto predicted = rollout(model, x, inputs);
    Vector truth = x;
    for (int k = 0; k < 20; ++k) {
        truth = A0 * truth + B0 * inputs[static_cast<std::size_t>(k)];
        CHECK((predicted[static_cast<std::size_t>(k)] - truth).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("linear-map checkpoint round-trips bit-exact") {
    std::mt19937_64 rng(61);
    Matrix A = random_matrix(4, 4, rng), B = random_matrix(4, 2, rng), C = random_matrix(3, 4, rng);
    const std::string path =
        (std::filesystem::temp_directory_path() / "pgdk_maps_rt.dat").string();
    save_linear_maps(path, A, B, C);
    LinearMaps maps = load_linear_maps(path);
    CHECK(maps.A == A);
    CHECK(maps.B == B);
    CHECK(maps.C == C);
    std::filesystem::remove(path);
}

TEST_CASE("batch validation rejects inconsistent column counts") {
    DataBatch b;
    b.X = Matrix::Zero(2, 4);
    b.Xbar = Matrix::Zero(2, 3);
    b.U = Matrix::Zero(1, 4);
    b.costs = Vector::Zero(4);
    CHECK_THROWS_AS(b.validate(), InvalidInput);
}

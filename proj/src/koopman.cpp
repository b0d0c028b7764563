#include "pgdk/koopman.hpp"

#include <fstream>
#include <sstream>

#include "pgdk/errors.hpp"

namespace pgdk {

void DataBatch::validate() const {
    const Eigen::Index n_cols = X.cols();
    if (Xbar.cols() != n_cols || U.cols() != n_cols || costs.size() != n_cols)
        throw InvalidInput("DataBatch: inconsistent sample count across fields");
    if (Xbar.rows() != X.rows())
        throw InvalidInput("DataBatch: X and Xbar row mismatch");
    if (!X.allFinite() || !Xbar.allFinite() || !U.allFinite() || !costs.allFinite())
        throw InvalidInput("DataBatch: non-finite entries");
}

void KoopmanModel::validate() const {
    g_spec.validate();
    const int expected_r = g_spec.output_width() + (augment ? state_dim() : 0);
    if (expected_r != r)
        throw InvalidInput("KoopmanModel: lifting output width does not match r");
    if (A.rows() != r || A.cols() != r || B.rows() != r || C.cols() != r ||
        C.rows() != state_dim())
        throw InvalidInput("KoopmanModel: A/B/C dimensions inconsistent with r and n");
    if (!A.allFinite() || !B.allFinite() || !C.allFinite())
        throw InvalidInput("KoopmanModel: non-finite A/B/C");
}

Vector lift_state(const KoopmanModel& model, const Vector& x) {
    Vector g = forward(model.g_spec, model.theta_f, x);
    if (!model.augment) return g;
    Vector z(model.r);
    z.head(g.size()) = g;
    z.tail(x.size()) = x;
    return z;
}

Matrix lift_batch(const KoopmanModel& model, const Matrix& states) {
    if (states.rows() != model.state_dim())
        throw InvalidInput("lift_batch: state rows do not match lifting input width");
    Matrix lifted(model.r, states.cols());
    for (Eigen::Index j = 0; j < states.cols(); ++j)
        lifted.col(j) = lift_state(model, states.col(j));
    return lifted;
}

namespace {

// Least-squares solve of T = M S in M given the stacked regressor S. Plain
// pseudoinverse when S is comfortably full row rank, Tikhonov damping with
// lambda = 1e-8 when it is within 10x of the rank cutoff.
Matrix solve_row_ls(const Matrix& target, const Matrix& S, double tol, bool allow_ridge,
                    const char* name, bool* used_ridge) {
    Eigen::JacobiSVD<Matrix> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    const double cutoff = tol * smax;
    const double smin = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
    const bool deficient = (S.rows() > S.cols()) || smin <= 10.0 * cutoff || smax == 0.0;
    if (!deficient) {
        Vector inv = sv.array().inverse();
        Matrix s_pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
        return target * s_pinv;
    }
    if (!allow_ridge)
        throw RankDeficient(std::string("fit_linear_maps: ") + name +
                            " is rank deficient below tolerance");
    if (used_ridge) *used_ridge = true;
    const double lambda = 1e-8;
    Matrix gram = S * S.transpose();
    gram.diagonal().array() += lambda;
    // M = T S' (S S' + lambda I)^{-1}
    Matrix sol = gram.ldlt().solve(S * target.transpose()).transpose();
    return sol;
}

}  // namespace

LinearMaps fit_linear_maps(const Matrix& G, const Matrix& Gbar, const Matrix& U,
                           const Matrix& X, double tol, bool allow_ridge) {
    const Eigen::Index r = G.rows();
    const Eigen::Index m = U.rows();
    const Eigen::Index N = G.cols();
    if (Gbar.rows() != r || Gbar.cols() != N || U.cols() != N || X.cols() != N)
        throw InvalidInput("fit_linear_maps: inconsistent batch dimensions");
    if (N < r + m)
        throw BatchTooSmall("fit_linear_maps: N = " + std::to_string(N) +
                            " < r+m = " + std::to_string(r + m));

    Matrix stacked(r + m, N);
    stacked.topRows(r) = G;
    stacked.bottomRows(m) = U;

    LinearMaps maps;
    Matrix AB = solve_row_ls(Gbar, stacked, tol, allow_ridge, "[G;U]", &maps.used_ridge);
    maps.A = AB.leftCols(r);
    maps.B = AB.rightCols(m);
    maps.C = solve_row_ls(X, G, tol, allow_ridge, "G", &maps.used_ridge);
    return maps;
}

Matrix assemble_frozen_k(const Matrix& A, const Matrix& B, const Matrix& C) {
    const Eigen::Index r = A.rows();
    const Eigen::Index m = B.cols();
    const Eigen::Index n = C.rows();
    Matrix K = Matrix::Zero(r + n, r + m);
    K.topLeftCorner(r, r) = A;
    K.topRightCorner(r, m) = B;
    K.bottomLeftCorner(n, r) = C;
    return K;
}

Vector predict(const KoopmanModel& model, const Vector& xhat, const Vector& u) {
    if (xhat.size() != model.state_dim())
        throw InvalidInput("predict: state length mismatch");
    if (u.size() != model.B.cols())
        throw InvalidInput("predict: input length mismatch");
    Vector g = lift_state(model, xhat);
    return model.C * (model.A * g + model.B * u);
}

namespace {

void check_l1_dims(const KoopmanModel& model, const Matrix& k_frozen, const DataBatch& batch) {
    batch.validate();
    const Eigen::Index r = model.r;
    const Eigen::Index n = model.state_dim();
    const Eigen::Index m = batch.U.rows();
    if (k_frozen.rows() != r + n || k_frozen.cols() != r + m)
        throw InvalidInput("loss_L1: frozen K has wrong shape");
    if (batch.X.rows() != n)
        throw InvalidInput("loss_L1: batch state dimension mismatch");
}

}  // namespace

double loss_L1(const KoopmanModel& model, const Matrix& k_frozen, const DataBatch& batch) {
    check_l1_dims(model, k_frozen, batch);
    const Eigen::Index N = batch.n_samples();
    Matrix G = lift_batch(model, batch.X);
    Matrix Gbar = lift_batch(model, batch.Xbar);

    Matrix lhs(model.r + model.state_dim(), N);
    lhs.topRows(model.r) = Gbar;
    lhs.bottomRows(model.state_dim()) = batch.X;
    Matrix rhs(model.r + batch.U.rows(), N);
    rhs.topRows(model.r) = G;
    rhs.bottomRows(batch.U.rows()) = batch.U;

    Matrix residual = lhs - k_frozen * rhs;
    return residual.squaredNorm() / static_cast<double>(N);
}

Vector grad_L1(const KoopmanModel& model, const Matrix& k_frozen, const DataBatch& batch) {
    check_l1_dims(model, k_frozen, batch);
    const Eigen::Index N = batch.n_samples();
    const Eigen::Index r = model.r;

    Vector grad = Vector::Zero(model.theta_f.flat.size());
    // Only the lifted block of each stacked vector depends on theta_f, so the
    // per-sample chain rule reduces to two cotangents through g. Under the
    // augmented lifting the raw-state tail carries no theta_f dependence, so
    // only the network head of each cotangent enters the vjp.
    const Eigen::Index g_out = model.g_spec.output_width();
    const Matrix k_lift = k_frozen.leftCols(r);  // [[A],[C]]
    for (Eigen::Index k = 0; k < N; ++k) {
        Vector g_k = lift_state(model, batch.X.col(k));
        Vector g_k1 = lift_state(model, batch.Xbar.col(k));
        Vector delta(k_frozen.rows());
        delta.head(r) = g_k1;
        delta.tail(model.state_dim()) = batch.X.col(k);
        delta.noalias() -= k_lift * g_k;
        delta.noalias() -= k_frozen.rightCols(batch.U.rows()) * batch.U.col(k);

        Vector cot_next = delta.head(g_out);
        Vector back = k_lift.transpose() * delta;
        Vector cot_curr = -back.head(g_out);
        grad += vjp(model.g_spec, model.theta_f, batch.Xbar.col(k), cot_next).grad_params;
        grad += vjp(model.g_spec, model.theta_f, batch.X.col(k), cot_curr).grad_params;
    }
    return grad * (2.0 / static_cast<double>(N));
}

std::vector<Vector> rollout(const KoopmanModel& model, const Vector& x0,
                            const std::vector<Vector>& inputs) {
    std::vector<Vector> states;
    states.reserve(inputs.size());
    Vector x = x0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        x = predict(model, x, inputs[k]);
        if (!x.allFinite())
            throw DivergedRollout("rollout: non-finite state at step " + std::to_string(k));
        states.push_back(x);
    }
    return states;
}

void save_linear_maps(const std::string& path, const Matrix& A, const Matrix& B, const Matrix& C) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("save_linear_maps: cannot open " + path);
    out << "koopman " << A.rows() << ' ' << B.cols() << ' ' << C.rows() << '\n';
    auto dump = [&](const Matrix& M) {
        out.write(reinterpret_cast<const char*>(M.data()),
                  static_cast<std::streamsize>(M.size() * sizeof(double)));
    };
    dump(A);
    dump(B);
    dump(C);
    if (!out) throw Error("save_linear_maps: write failed for " + path);
}

LinearMaps load_linear_maps(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("load_linear_maps: cannot open " + path);
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string magic;
    Eigen::Index r = 0, m = 0, n = 0;
    hs >> magic >> r >> m >> n;
    if (!hs || magic != "koopman" || r < 1 || m < 1 || n < 1)
        throw ParseError("load_linear_maps: bad header in " + path);
    LinearMaps maps;
    maps.A.resize(r, r);
    maps.B.resize(r, m);
    maps.C.resize(n, r);
    auto slurp = [&](Matrix& M) {
        in.read(reinterpret_cast<char*>(M.data()),
                static_cast<std::streamsize>(M.size() * sizeof(double)));
    };
    slurp(maps.A);
    slurp(maps.B);
    slurp(maps.C);
    if (!in) throw ParseError("load_linear_maps: truncated data in " + path);
    return maps;
}

}  // namespace pgdk

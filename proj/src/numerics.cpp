#include "pgdk/numerics.hpp"

#include <cmath>

#include "pgdk/errors.hpp"

namespace pgdk {

bool all_finite(const Matrix& m) { return m.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

Matrix pinv(const Matrix& m, double tol) {
    if (!m.allFinite()) throw InvalidInput("pinv: non-finite input matrix");
    if (tol < 0.0) throw InvalidInput("pinv: negative tolerance");
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return Matrix::Zero(m.cols(), m.rows());
    const double cutoff = tol * sv(0);
    Vector inv = Vector::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double frobenius_norm(const Matrix& m) {
    if (!m.allFinite()) throw InvalidInput("frobenius_norm: non-finite input");
    return m.norm();
}

Eigen::Index row_rank(const Matrix& m, double tol) {
    if (!m.allFinite()) throw InvalidInput("row_rank: non-finite input");
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    const double cutoff = tol * sv(0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff && sv(i) > 0.0) ++rank;
    }
    return rank;
}

}  // namespace pgdk

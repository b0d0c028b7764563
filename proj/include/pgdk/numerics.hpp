#pragma once

#include <Eigen/Dense>

namespace pgdk {

// Row-major storage: batch columns get appended and sliced frequently and a
// single fixed layout keeps the checkpoint files unambiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);

// Moore-Penrose pseudoinverse via full SVD. Singular values <= tol * largest
// are treated as zero.
Matrix pinv(const Matrix& m, double tol = 1e-10);

double frobenius_norm(const Matrix& m);

// Number of singular values above tol * largest.
Eigen::Index row_rank(const Matrix& m, double tol = 1e-10);

}  // namespace pgdk

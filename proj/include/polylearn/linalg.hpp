#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>

namespace polylearn::linalg {

double min_eigenvalue(const Eigen::MatrixXd& symmetric);
double max_eigenvalue(const Eigen::MatrixXd& symmetric);

/// Principal submatrix on the given (ascending) indices.
Eigen::MatrixXd principal_submatrix(const Eigen::MatrixXd& m, std::span<const std::size_t> indices);

/// Orthonormal basis of the orthogonal complement of span(columns).
/// The columns may be linearly dependent.
Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& columns);

/// sum_k lambda_max(X_kk) over consecutive diagonal blocks of the given sizes.
double block_diagonal_max_eigen_sum(const Eigen::MatrixXd& x, std::span<const Eigen::Index> block_sizes);

}  // namespace polylearn::linalg

#include "polylearn/linalg.hpp"

#include "polylearn/error.hpp"

namespace polylearn::linalg {

namespace {

Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw InvalidInput("eigenvalues of a non-square matrix");
    if (m.rows() == 0) throw InvalidInput("eigenvalues of an empty matrix");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericError("symmetric eigen decomposition failed");
    return solver.eigenvalues();
}

}  // namespace

double min_eigenvalue(const Eigen::MatrixXd& symmetric) { return eigenvalues(symmetric).minCoeff(); }

double max_eigenvalue(const Eigen::MatrixXd& symmetric) { return eigenvalues(symmetric).maxCoeff(); }

Eigen::MatrixXd principal_submatrix(const Eigen::MatrixXd& m, std::span<const std::size_t> indices) {
    const auto k = static_cast<Eigen::Index>(indices.size());
    Eigen::MatrixXd out(k, k);
    for (Eigen::Index r = 0; r < k; ++r)
        for (Eigen::Index c = 0; c < k; ++c)
            out(r, c) = m(static_cast<Eigen::Index>(indices[static_cast<std::size_t>(r)]),
                          static_cast<Eigen::Index>(indices[static_cast<std::size_t>(c)]));
    return out;
}

Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& columns) {
    const Eigen::Index n = columns.rows();
    const Eigen::Index r = columns.cols();
    if (r == 0) return Eigen::MatrixXd::Identity(n, n);
    // rank-revealing, so dependent spanning sets are fine
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(columns);
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    return q.rightCols(n - rank);
}

double block_diagonal_max_eigen_sum(const Eigen::MatrixXd& x, std::span<const Eigen::Index> block_sizes) {
    double total = 0.0;
    Eigen::Index start = 0;
    for (Eigen::Index size : block_sizes) {
        if (size <= 0 || start + size > x.rows()) throw InvalidInput("block sizes do not tile the matrix");
        total += max_eigenvalue(x.block(start, start, size, size));
        start += size;
    }
    if (start != x.rows()) throw InvalidInput("block sizes do not tile the matrix");
    return total;
}

}  // namespace polylearn::linalg

#pragma once
#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace pdeabcd {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

// Compressed sparse row storage. Column indices are sorted within a row.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

} // namespace pdeabcd

#pragma once

#include <Eigen/Dense>

#include <string>

namespace autorecon {

/// Dense row-major matrix. Every numeric carrier in the library is two
/// dimensional; a vector of length n is a [1 x n] row.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Tensor = MatrixX<double>;
using Index = Eigen::Index;

template <typename Derived>
std::string shape_string(const Eigen::DenseBase<Derived>& m) {
    return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

inline std::string shape_string(Index rows, Index cols) {
    return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

}  // namespace autorecon

#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace hopr {

using Index = Eigen::Index;

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Column-compressed sparse matrix; the storage format for transition slices.
template <class Scalar>
using SpMat = Eigen::SparseMatrix<Scalar, Eigen::ColMajor>;

template <class Scalar>
using SpVec = Eigen::SparseVector<Scalar>;

/// Scalar type used by the solvers and all file formats.
using Real = double;

using VecX = Vec<Real>;
using MatX = Mat<Real>;
using SpMatX = SpMat<Real>;

}  // namespace hopr

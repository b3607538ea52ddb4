#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hopr/errors.hpp"
#include "hopr/types.hpp"

namespace hopr {

/// Slack accepted on column l1 sums before a slice is rejected; sums in
/// (1, 1 + kColumnSumTol] are rescaled to exactly 1.
inline constexpr double kColumnSumTol = 1e-12;

/// Checks the storage invariants of a column-compressed slice: finite
/// nonnegative values, strictly increasing in-range row indices per column,
/// no explicitly stored zeros.
template <class Scalar>
void validate_sparse_nonneg(const SpMat<Scalar>& q, const std::string& what) {
  if (!q.isCompressed())
    throw InvalidInput(what + ": matrix must be compressed");
  for (Index j = 0; j < q.outerSize(); ++j) {
    Index prev_row = -1;
    for (typename SpMat<Scalar>::InnerIterator it(q, j); it; ++it) {
      if (!std::isfinite(static_cast<double>(it.value())))
        throw InvalidInput(what + ": non-finite entry");
      if (it.value() < Scalar(0))
        throw InvalidInput(what + ": negative entry");
      if (it.value() == Scalar(0))
        throw InvalidInput(what + ": explicitly stored zero");
      if (it.row() <= prev_row || it.row() >= q.rows())
        throw InvalidInput(what + ": bad row index ordering");
      prev_row = it.row();
    }
  }
}

template <class Scalar>
Vec<Scalar> column_l1_sums(const SpMat<Scalar>& q) {
  Vec<Scalar> sums = Vec<Scalar>::Zero(q.cols());
  for (Index j = 0; j < q.outerSize(); ++j)
    for (typename SpMat<Scalar>::InnerIterator it(q, j); it; ++it)
      sums(j) += it.value();
  return sums;
}

/// Per-column dangling mass d(k) = 1 - sum of column k. Exact 0/1 column
/// sums reduce this to the binary dangling indicator; lossy substochastic
/// data yields fractional deficits handled the same way.
template <class Scalar>
Vec<Scalar> dangling_deficit(const SpMat<Scalar>& q) {
  Vec<Scalar> d = column_l1_sums(q);
  for (Index k = 0; k < d.size(); ++k) {
    if (d(k) > Scalar(1) + Scalar(kColumnSumTol))
      throw InvalidInput("dangling_deficit: column sum exceeds 1");
    d(k) = std::max(Scalar(1) - d(k), Scalar(0));
  }
  return d;
}

/// Sparse matrix-vector product over validated nonnegative input.
template <class Scalar>
Vec<Scalar> spmv(const SpMat<Scalar>& q,
                 const Eigen::Ref<const Vec<Scalar>>& x) {
  if (q.cols() != x.size())
    throw InvalidInput("spmv: dimension mismatch");
  if ((x.array() < Scalar(0)).any())
    throw InvalidInput("spmv: negative vector entry");
  return q * x;
}

/// The n sparse column-substochastic slices of one transition tensor.
/// Immutable after construction; the per-column deficit supplies the
/// dangling correction, so slices are stored exactly as ingested.
template <class Scalar>
class SliceSetT {
 public:
  SliceSetT(Index n, std::vector<SpMat<Scalar>> slices)
      : n_(n), slices_(std::move(slices)) {
    if (n_ < 1) throw InvalidInput("SliceSet: n must be >= 1");
    if (static_cast<Index>(slices_.size()) != n_)
      throw InvalidInput("SliceSet: expected one slice per state");
    for (Index j = 0; j < n_; ++j) {
      auto& q = slices_[static_cast<std::size_t>(j)];
      if (q.rows() != n_ || q.cols() != n_)
        throw InvalidInput("SliceSet: slice has wrong dimensions");
      q.prune(Scalar(0), Scalar(0));
      q.makeCompressed();
      validate_sparse_nonneg(q, "SliceSet slice");
      clamp_columns(q);
    }
  }

  Index size() const { return n_; }

  const SpMat<Scalar>& slice(Index j) const {
    return slices_[static_cast<std::size_t>(j)];
  }

  const std::vector<SpMat<Scalar>>& slices() const { return slices_; }

  Index nonzeros() const {
    Index nnz = 0;
    for (const auto& q : slices_) nnz += q.nonZeros();
    return nnz;
  }

 private:
  // Sums in (1, 1 + tol] come from rounding in ingestion; rescale those
  // columns to mass 1 and reject anything larger. Rescaling repeats while
  // rounding leaves the sum an ulp above 1, so the result is idempotent.
  void clamp_columns(SpMat<Scalar>& q) {
    for (Index k = 0; k < q.cols(); ++k) {
      Scalar sum = Scalar(0);
      for (typename SpMat<Scalar>::InnerIterator it(q, k); it; ++it)
        sum += it.value();
      if (sum > Scalar(1) + Scalar(kColumnSumTol))
        throw InvalidInput("SliceSet: column sum exceeds 1");
      while (sum > Scalar(1)) {
        Scalar rescaled = Scalar(0);
        for (typename SpMat<Scalar>::InnerIterator it(q, k); it; ++it) {
          it.valueRef() /= sum;
          rescaled += it.value();
        }
        sum = rescaled;
      }
    }
  }

  Index n_;
  std::vector<SpMat<Scalar>> slices_;
};

using SliceSet = SliceSetT<Real>;

/// Total l1 mass of a nonnegative vector.
template <class Scalar>
Scalar l1_mass(const Vec<Scalar>& x) {
  return x.sum();
}

template <class Scalar>
void require_stochastic_vector(const Vec<Scalar>& v, const std::string& what,
                               double tol = 1e-12) {
  if ((v.array() < Scalar(0)).any())
    throw InvalidInput(what + ": negative entry");
  if (std::abs(static_cast<double>(v.sum()) - 1.0) > tol)
    throw InvalidInput(what + ": mass differs from 1");
}

}  // namespace hopr

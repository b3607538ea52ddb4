#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "hopr/errors.hpp"
#include "hopr/types.hpp"

namespace hopr {

/// Compressed iterate X ~ S + e*u^T: sparse spikes S plus one background
/// value per column, broadcast down that column.
template <class Scalar>
struct SparseUniformApproxT {
  SpMat<Scalar> spikes;      // S, n x n
  Vec<Scalar> background;    // u, length n

  Index states() const { return background.size(); }
};

using SparseUniformApprox = SparseUniformApproxT<Real>;

/// All-background start with total mass 1: S = 0, u = e / n^2.
template <class Scalar>
SparseUniformApproxT<Scalar> uniform_approx(Index n) {
  SparseUniformApproxT<Scalar> a;
  a.spikes = SpMat<Scalar>(n, n);
  a.background = Vec<Scalar>::Constant(n, Scalar(1) / Scalar(n * n));
  return a;
}

template <class Scalar>
Vec<Scalar> reconstruct_column(const SparseUniformApproxT<Scalar>& a,
                               Index j) {
  Vec<Scalar> col = Vec<Scalar>::Constant(a.states(), a.background(j));
  for (typename SpMat<Scalar>::InnerIterator it(a.spikes, j); it; ++it)
    col(it.row()) += it.value();
  return col;
}

template <class Scalar>
Mat<Scalar> reconstruct_dense(const SparseUniformApproxT<Scalar>& a) {
  Mat<Scalar> x(a.states(), a.states());
  for (Index j = 0; j < a.states(); ++j) x.col(j) = reconstruct_column(a, j);
  return x;
}

/// ||S + e*u^T||_l1 for nonnegative (S, u).
template <class Scalar>
Scalar approx_l1_norm(const SparseUniformApproxT<Scalar>& a) {
  Scalar mass = Scalar(0);
  const Scalar* values = a.spikes.valuePtr();
  for (Index k = 0; k < a.spikes.nonZeros(); ++k) mass += values[k];
  return mass + Scalar(a.states()) * a.background.sum();
}

/// l1 distance of one reconstructed column against another, computed on
/// the merged spike supports without densifying.
template <class Scalar>
Scalar column_l1_diff(const SpMat<Scalar>& sa, Scalar ua,
                      const SpMat<Scalar>& sb, Scalar ub, Index j) {
  const Scalar du = ua - ub;
  Scalar dist = Scalar(0);
  Index overlap = 0;
  typename SpMat<Scalar>::InnerIterator ia(sa, j);
  typename SpMat<Scalar>::InnerIterator ib(sb, j);
  while (ia || ib) {
    ++overlap;
    if (ia && (!ib || ia.row() < ib.row())) {
      dist += std::abs(ia.value() + du);
      ++ia;
    } else if (ib && (!ia || ib.row() < ia.row())) {
      dist += std::abs(du - ib.value());
      ++ib;
    } else {
      dist += std::abs(ia.value() - ib.value() + du);
      ++ia;
      ++ib;
    }
  }
  return dist + Scalar(sa.rows() - overlap) * std::abs(du);
}

/// ||A - B||_l1 over the reconstructions of two approximations.
template <class Scalar>
Scalar approx_l1_diff(const SparseUniformApproxT<Scalar>& a,
                      const SparseUniformApproxT<Scalar>& b) {
  if (a.states() != b.states())
    throw InvalidInput("approx_l1_diff: dimension mismatch");
  Scalar dist = Scalar(0);
  for (Index j = 0; j < a.states(); ++j)
    dist += column_l1_diff(a.spikes, a.background(j), b.spikes,
                           b.background(j), j);
  return dist;
}

/// PageRank value of column j: sum_i S(i,j) + u(j), with the background
/// counted once. This is the score the partial-updating solvers rank
/// columns by when shrinking the active set.
template <class Scalar>
Vec<Scalar> pagerank_values(const SparseUniformApproxT<Scalar>& a) {
  Vec<Scalar> pv = a.background;
  for (Index j = 0; j < a.spikes.outerSize(); ++j)
    for (typename SpMat<Scalar>::InnerIterator it(a.spikes, j); it; ++it)
      pv(j) += it.value();
  return pv;
}

/// Stationary mass of column j: sum_i S(i,j) + n * u(j), the column sum
/// of the reconstruction. Unlike pagerank_values this is directly
/// comparable with the column sums of a dense iterate, so rankings across
/// different solvers use it.
template <class Scalar>
Vec<Scalar> column_masses(const SparseUniformApproxT<Scalar>& a) {
  Vec<Scalar> mass = Scalar(a.states()) * a.background;
  for (Index j = 0; j < a.spikes.outerSize(); ++j)
    for (typename SpMat<Scalar>::InnerIterator it(a.spikes, j); it; ++it)
      mass(j) += it.value();
  return mass;
}

}  // namespace hopr

#pragma once

#include <chrono>
#include <utility>
#include <vector>

#include "hopr/errors.hpp"
#include "hopr/report.hpp"
#include "hopr/sparse_core.hpp"
#include "hopr/types.hpp"

namespace hopr {

/// The slices of the tensor flattened along the first index: entry
/// (i, j, k), stored in slice j at (i, k), moves to flat slice k at
/// (i, j). Column-substochastic like the source set.
template <class Scalar>
struct FlattenedSliceSetT {
  Index n = 0;
  std::vector<SpMat<Scalar>> slices;
};

using FlattenedSliceSet = FlattenedSliceSetT<Real>;

/// Pure column permutation of the n x n^2 concatenation, carried out by
/// re-bucketing triples; the wide matrix itself is never formed. The
/// transform is its own inverse up to the slice relabeling.
template <class Scalar>
FlattenedSliceSetT<Scalar> permute_to_flattened(
    const SliceSetT<Scalar>& slices) {
  const Index n = slices.size();
  std::vector<std::vector<Eigen::Triplet<Scalar>>> buckets(
      static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    const auto& q = slices.slice(j);
    for (Index k = 0; k < q.outerSize(); ++k)
      for (typename SpMat<Scalar>::InnerIterator it(q, k); it; ++it)
        buckets[static_cast<std::size_t>(k)].emplace_back(it.row(), j,
                                                          it.value());
  }
  FlattenedSliceSetT<Scalar> flat;
  flat.n = n;
  flat.slices.reserve(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) {
    SpMat<Scalar> s(n, n);
    s.setFromTriplets(buckets[static_cast<std::size_t>(k)].begin(),
                      buckets[static_cast<std::size_t>(k)].end());
    s.makeCompressed();
    flat.slices.push_back(std::move(s));
  }
  return flat;
}

/// Inverse of permute_to_flattened.
template <class Scalar>
SliceSetT<Scalar> flattened_to_slices(const FlattenedSliceSetT<Scalar>& flat) {
  const Index n = flat.n;
  std::vector<std::vector<Eigen::Triplet<Scalar>>> buckets(
      static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) {
    const auto& s = flat.slices[static_cast<std::size_t>(k)];
    for (Index j = 0; j < s.outerSize(); ++j)
      for (typename SpMat<Scalar>::InnerIterator it(s, j); it; ++it)
        buckets[static_cast<std::size_t>(it.col())].emplace_back(
            it.row(), k, it.value());
  }
  std::vector<SpMat<Scalar>> slices;
  slices.reserve(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    SpMat<Scalar> q(n, n);
    q.setFromTriplets(buckets[static_cast<std::size_t>(j)].begin(),
                      buckets[static_cast<std::size_t>(j)].end());
    q.makeCompressed();
    slices.push_back(std::move(q));
  }
  return SliceSetT<Scalar>(n, std::move(slices));
}

/// Kronecker-free product sum_j x_j (Qf_j x), equal to the flattened
/// matrix applied to x (x) x without forming the length-n^2 vector.
/// Partial sums are accumulated in slice order, so the result does not
/// depend on any threading of the caller.
template <class Scalar>
Vec<Scalar> ml_matvec(const FlattenedSliceSetT<Scalar>& flat,
                      const Vec<Scalar>& x) {
  if (x.size() != flat.n) throw InvalidInput("ml_matvec: dimension mismatch");
  Vec<Scalar> out = Vec<Scalar>::Zero(flat.n);
  for (Index j = 0; j < flat.n; ++j) {
    const Scalar xj = x(j);
    if (xj == Scalar(0)) continue;
    const auto& s = flat.slices[static_cast<std::size_t>(j)];
    for (Index c = 0; c < s.outerSize(); ++c) {
      const Scalar w = xj * x(c);
      if (w == Scalar(0)) continue;
      for (typename SpMat<Scalar>::InnerIterator it(s, c); it; ++it)
        out(it.row()) += it.value() * w;
    }
  }
  return out;
}

/// One step x' = alpha m + (alpha/n)(1 - ||m||_1) e + (1-alpha) v with
/// m = ml_matvec(flat, x); the middle term restores the dangling mass, so
/// stochastic input gives stochastic output.
template <class Scalar>
Vec<Scalar> ml_step(const FlattenedSliceSetT<Scalar>& flat,
                    const Vec<Scalar>& v, Scalar alpha,
                    const Vec<Scalar>& x) {
  const Vec<Scalar> m = ml_matvec(flat, x);
  Vec<Scalar> next = alpha * m;
  next.array() += alpha / Scalar(flat.n) * (Scalar(1) - m.sum());
  next += (Scalar(1) - alpha) * v;
  return next;
}

/// Fixed-point iteration for the multilinear model. Uniqueness of the
/// fixed point is only guaranteed for alpha < 1/2 (order 3); for larger
/// alpha the solver still runs and the report flags the caveat.
template <class Scalar>
std::pair<Vec<Scalar>, IterationReport> ml_fixed_point(
    const FlattenedSliceSetT<Scalar>& flat, const Vec<Scalar>& v,
    Scalar alpha, const SolveOptions& opt = {}, Vec<Scalar> x0 = {}) {
  if (!(alpha > Scalar(0) && alpha < Scalar(1)))
    throw InvalidConfig("ml_fixed_point: alpha must lie in (0,1)");
  require_stochastic_vector(v, "ml_fixed_point teleport");
  if (x0.size() == 0) x0 = v;
  require_stochastic_vector(x0, "ml_fixed_point start");

  IterationReport report;
  report.uniqueness_guaranteed = alpha < Scalar(0.5);
  const auto t0 = std::chrono::steady_clock::now();
  Vec<Scalar> x = std::move(x0);
  for (Index q = 0; q < opt.max_iter; ++q) {
    Vec<Scalar> next = ml_step(flat, v, alpha, x);
    const Scalar change = (next - x).template lpNorm<1>() / x.sum();
    x = std::move(next);
    report.residual_history.push_back(static_cast<Real>(change));
    ++report.iterations;
    if (change <= opt.tol) {
      report.converged = true;
      break;
    }
  }
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return {std::move(x), std::move(report)};
}

}  // namespace hopr

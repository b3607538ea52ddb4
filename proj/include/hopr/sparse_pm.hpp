#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hopr/random.hpp"
#include "hopr/truncated_pm.hpp"

namespace hopr {

/// Sparse power method on the original model: the column image is
/// alpha P_j y + (1 - alpha) ||y||_1 v, so the teleport weight follows the
/// row mass instead of being fixed. Returns (S, u) with X = S + e u^T.
template <class Scalar>
std::pair<SparseUniformApproxT<Scalar>, IterationReport> sparse_pm(
    const HoprProblemT<Scalar>& problem, Scalar beta,
    const SolveOptions& opt = {},
    SparseUniformApproxT<Scalar> init = {}) {
  const Index n = problem.states();
  if (init.background.size() == 0) init = uniform_approx<Scalar>(n);
  return detail::sparse_power_engine<Scalar>(
      n, beta, opt, nullptr, std::move(init),
      [&](Index j, const Vec<Scalar>& y, Vec<Scalar>& out) {
        out = w_column<Scalar>(problem.slices, j, y, problem.alpha,
                               problem.v);
      });
}

/// Sparse power method restricted to the shrinking active set.
template <class Scalar>
std::pair<SparseUniformApproxT<Scalar>, IterationReport> sparse_pm_partial(
    const HoprProblemT<Scalar>& problem, Scalar beta,
    const PartialOptions& partial, const SolveOptions& opt = {},
    SparseUniformApproxT<Scalar> init = {}) {
  const Index n = problem.states();
  if (init.background.size() == 0) init = uniform_approx<Scalar>(n);
  return detail::sparse_power_engine<Scalar>(
      n, beta, opt, &partial, std::move(init),
      [&](Index j, const Vec<Scalar>& y, Vec<Scalar>& out) {
        out = w_column<Scalar>(problem.slices, j, y, problem.alpha,
                               problem.v);
      });
}

/// Contraction-ratio sampling for the column-wise thresholding operator:
/// each trial draws two dense nonnegative matrices A, B with i.i.d.
/// uniform[0,1] entries and records
///   rho = ||T(A) - T(B)||_l1 / ||A - B||_l1.
/// Identical draws are rejected and redrawn. Trials use independent
/// sub-seeds, so the result is reproducible for any thread count.
template <class Scalar>
std::vector<Scalar> rho_experiment(Index n, Index trials, Scalar beta,
                                   std::uint64_t seed, int n_threads = 1) {
  if (n < 2) throw InvalidConfig("rho_experiment: n must be >= 2");
  if (trials < 1) throw InvalidConfig("rho_experiment: trials must be >= 1");
  if (!(beta > Scalar(0)))
    throw InvalidConfig("rho_experiment: beta must be positive");

  Rng master(seed);
  std::vector<std::uint64_t> sub_seeds(static_cast<std::size_t>(trials));
  for (auto& s : sub_seeds) s = master.next_u64();

  std::vector<Scalar> rhos(static_cast<std::size_t>(trials));
  parallel_for(Index(0), trials, n_threads, [&](Index t) {
    Rng rng(sub_seeds[static_cast<std::size_t>(t)]);
    Mat<Scalar> a(n, n), b(n, n);
    Scalar denom = Scalar(0);
    do {
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) a(i, j) = Scalar(rng.unit());
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) b(i, j) = Scalar(rng.unit());
      denom = (a - b).template lpNorm<1>();
    } while (denom == Scalar(0));
    const auto [sa, ua] = threshold_matrix<Scalar>(a, beta);
    const auto [sb, ub] = threshold_matrix<Scalar>(b, beta);
    SparseUniformApproxT<Scalar> ta{sa, ua}, tb{sb, ub};
    rhos[static_cast<std::size_t>(t)] = approx_l1_diff(ta, tb) / denom;
  });
  return rhos;
}

}  // namespace hopr

#pragma once

#include <algorithm>
#include <chrono>
#include <utility>
#include <vector>

#include "hopr/approx.hpp"
#include "hopr/errors.hpp"
#include "hopr/operators.hpp"
#include "hopr/parallel.hpp"
#include "hopr/report.hpp"
#include "hopr/sparse_core.hpp"
#include "hopr/thresholding.hpp"
#include "hopr/types.hpp"

namespace hopr {

/// Shrinking set of columns updated by the partial-updating solvers.
/// Members stay sorted ascending; successive sets are nested.
template <class Scalar>
struct ActiveSetT {
  std::vector<Index> members;
  Real tau = 0.1;
  Index varsigma = 10;
  Index warmup = 1;
};

using ActiveSet = ActiveSetT<Real>;

template <class Scalar>
ActiveSetT<Scalar> full_active_set(Index n, const PartialOptions& opt) {
  if (opt.varsigma < 1)
    throw InvalidConfig("active set: varsigma must be >= 1");
  if (opt.varsigma > n)
    throw InvalidConfig("active set: varsigma exceeds the state count");
  if (!(opt.tau > Real(0) && opt.tau <= Real(1)))
    throw InvalidConfig("active set: tau must lie in (0,1]");
  if (opt.warmup < 1)
    throw InvalidConfig("active set: warmup must be >= 1");
  ActiveSetT<Scalar> set;
  set.members.resize(static_cast<std::size_t>(n));
  std::iota(set.members.begin(), set.members.end(), Index(0));
  set.tau = opt.tau;
  set.varsigma = opt.varsigma;
  set.warmup = opt.warmup;
  return set;
}

/// Applies the cardinality law card' = max(floor(tau * card), varsigma)
/// and keeps the members with the largest PageRank values, ties resolved
/// toward the lower index.
template <class Scalar>
ActiveSetT<Scalar> shrink_active_set(const ActiveSetT<Scalar>& prev,
                                     const Vec<Scalar>& pv, Index q) {
  if (prev.varsigma > pv.size())
    throw InvalidConfig("shrink_active_set: varsigma exceeds n");
  if (q < prev.warmup)
    throw InvalidConfig("shrink_active_set: called during warmup");
  const Index prev_card = static_cast<Index>(prev.members.size());
  const Index card = std::max<Index>(
      static_cast<Index>(std::floor(prev.tau * static_cast<Real>(prev_card))),
      prev.varsigma);

  ActiveSetT<Scalar> next = prev;
  if (card >= prev_card) return next;
  std::vector<Index> picked = prev.members;
  std::nth_element(picked.begin(), picked.begin() + card, picked.end(),
                   [&](Index a, Index b) {
                     return pv(a) != pv(b) ? pv(a) > pv(b) : a < b;
                   });
  picked.resize(static_cast<std::size_t>(card));
  std::sort(picked.begin(), picked.end());
  next.members = std::move(picked);
  return next;
}

namespace detail {

/// One sweep of any (S, u) solver: for every active column j, form
/// y = S(j,:)^T + u, map it through col_fn, threshold the image, and
/// accumulate the reconstructed l1 change. Frozen columns are carried
/// over untouched. The previous iterate is shared read-only; writes are
/// per-column, so the loop parallelizes with a barrier per iteration.
template <class Scalar, class ColFn>
std::pair<SparseUniformApproxT<Scalar>, IterationReport> sparse_power_engine(
    Index n, Scalar beta, const SolveOptions& opt,
    const PartialOptions* partial, SparseUniformApproxT<Scalar> approx,
    const ColFn& col_fn) {
  if (!(beta > Scalar(0)))
    throw InvalidConfig("sparse solver: beta must be positive");
  if (approx.states() != n || approx.spikes.cols() != n)
    throw InvalidInput("sparse solver: bad start dimensions");

  IterationReport report;
  const auto t0 = std::chrono::steady_clock::now();

  PartialOptions effective =
      partial ? *partial : PartialOptions{/*varsigma=*/n, /*tau=*/Real(1),
                                          /*warmup=*/1};
  ActiveSetT<Scalar> active = full_active_set<Scalar>(n, effective);

  Vec<Scalar> pv = pagerank_values(approx);
  std::vector<std::vector<std::pair<Index, Scalar>>> next_cols(
      static_cast<std::size_t>(n));
  Vec<Scalar> next_u(n);
  std::vector<Scalar> col_change(static_cast<std::size_t>(n));

  for (Index q = 0; q < opt.max_iter; ++q) {
    if (partial && q >= active.warmup)
      active = shrink_active_set(active, pv, q);
    report.active_columns_history.push_back(
        static_cast<Index>(active.members.size()));

    const SpMat<Scalar> rows = approx.spikes.transpose();
    const Scalar prev_mass = approx_l1_norm(approx);

    // Frozen columns first: carried over bit-identically.
    std::vector<bool> is_active(static_cast<std::size_t>(n), false);
    for (Index j : active.members) is_active[static_cast<std::size_t>(j)] = true;
    for (Index j = 0; j < n; ++j) {
      if (is_active[static_cast<std::size_t>(j)]) continue;
      auto& cached = next_cols[static_cast<std::size_t>(j)];
      cached.clear();
      for (typename SpMat<Scalar>::InnerIterator it(approx.spikes, j); it;
           ++it)
        cached.emplace_back(it.row(), it.value());
      next_u(j) = approx.background(j);
      col_change[static_cast<std::size_t>(j)] = Scalar(0);
    }

    const auto count = static_cast<Index>(active.members.size());
    parallel_for(Index(0), count, opt.threads, [&](Index p) {
      const Index j = active.members[static_cast<std::size_t>(p)];
      thread_local Vec<Scalar> y, image;
      y = approx.background;
      for (typename SpMat<Scalar>::InnerIterator it(rows, j); it; ++it)
        y(it.row()) += it.value();
      col_fn(j, y, image);
      auto& spikes = next_cols[static_cast<std::size_t>(j)];
      const Scalar mu = threshold_into<Scalar>(image, beta, spikes);
      next_u(j) = mu;

      // l1 change of the reconstructed column, old vs new.
      const Scalar du = mu - approx.background(j);
      Scalar dist = Scalar(0);
      Index touched = 0;
      typename SpMat<Scalar>::InnerIterator io(approx.spikes, j);
      std::size_t pos = 0;
      while (io || pos < spikes.size()) {
        ++touched;
        if (io && (pos == spikes.size() || io.row() < spikes[pos].first)) {
          dist += std::abs(du - io.value());
          ++io;
        } else if (!io || spikes[pos].first < io.row()) {
          dist += std::abs(spikes[pos].second + du);
          ++pos;
        } else {
          dist += std::abs(spikes[pos].second - io.value() + du);
          ++io;
          ++pos;
        }
      }
      dist += Scalar(n - touched) * std::abs(du);
      col_change[static_cast<std::size_t>(j)] = dist;
    });

    SpMat<Scalar> next_spikes(n, n);
    Index nnz = 0;
    for (const auto& c : next_cols) nnz += static_cast<Index>(c.size());
    next_spikes.reserve(nnz);
    for (Index j = 0; j < n; ++j) {
      next_spikes.startVec(j);
      for (const auto& [i, v] : next_cols[static_cast<std::size_t>(j)])
        next_spikes.insertBack(i, j) = v;
    }
    next_spikes.finalize();
    approx.spikes = std::move(next_spikes);
    approx.background = next_u;
    for (Index j : active.members)
      pv(j) = next_u(j);
    for (Index j : active.members)
      for (typename SpMat<Scalar>::InnerIterator it(approx.spikes, j); it;
           ++it)
        pv(j) += it.value();

    Scalar res = Scalar(0);
    for (Index j : active.members)
      res += col_change[static_cast<std::size_t>(j)];
    res /= prev_mass;
    report.residual_history.push_back(static_cast<Real>(res));
    ++report.iterations;
    if (res <= opt.tol) {
      report.converged = true;
      break;
    }
  }

  report.final_sparsity =
      static_cast<Real>(approx.spikes.nonZeros()) / static_cast<Real>(n * n);
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return {std::move(approx), std::move(report)};
}

}  // namespace detail

/// Truncated power method on the fixed-teleport model with an explicit
/// auxiliary matrix G (nonnegative, total l1 mass 1). Deficit vectors are
/// formed and stored explicitly, which is exactly the overhead the matrix
/// -free variant below removes. The returned pair approximates
/// X = alpha (S + e u^T) + (1 - alpha) G.
template <class Scalar>
std::pair<SparseUniformApproxT<Scalar>, IterationReport> truncated_pm(
    const HoprProblemT<Scalar>& problem, const SpMat<Scalar>& g, Scalar beta,
    const SolveOptions& opt = {},
    SparseUniformApproxT<Scalar> init = {}) {
  const Index n = problem.states();
  if (g.rows() != n || g.cols() != n)
    throw InvalidInput("truncated_pm: G has wrong dimensions");
  Scalar g_mass = Scalar(0);
  for (Index j = 0; j < g.outerSize(); ++j)
    for (typename SpMat<Scalar>::InnerIterator it(g, j); it; ++it) {
      if (it.value() < Scalar(0))
        throw InvalidInput("truncated_pm: G must be nonnegative");
      g_mass += it.value();
    }
  if (std::abs(static_cast<double>(g_mass) - 1.0) > 1e-9)
    throw InvalidInput("truncated_pm: G must have total mass 1");
  if (init.background.size() == 0) init = uniform_approx<Scalar>(n);

  // The baseline stores one deficit vector per slice.
  Mat<Scalar> deficits(n, n);
  for (Index j = 0; j < n; ++j)
    deficits.col(j) = dangling_deficit(problem.slices.slice(j));
  const SpMat<Scalar> g_rows = g.transpose();
  const Scalar alpha = problem.alpha;

  return detail::sparse_power_engine<Scalar>(
      n, beta, opt, nullptr, std::move(init),
      [&](Index j, const Vec<Scalar>& y, Vec<Scalar>& out) {
        thread_local Vec<Scalar> z;
        z = alpha * y;
        for (typename SpMat<Scalar>::InnerIterator it(g_rows, j); it; ++it)
          z(it.row()) += (Scalar(1) - alpha) * it.value();
        out = problem.slices.slice(j) * z;
        out.array() += deficits.col(j).dot(z) / Scalar(n);
      });
}

/// Matrix-free variant: G = (1/n) v e^T, deficit terms recovered from
/// column masses, nothing beyond the slices and two vectors is stored.
/// The returned pair approximates X = S + e u^T directly.
template <class Scalar>
std::pair<SparseUniformApproxT<Scalar>, IterationReport> truncated_pm_variant(
    const HoprProblemT<Scalar>& problem, Scalar beta,
    const SolveOptions& opt = {},
    SparseUniformApproxT<Scalar> init = {}) {
  const Index n = problem.states();
  if (init.background.size() == 0) init = uniform_approx<Scalar>(n);
  return detail::sparse_power_engine<Scalar>(
      n, beta, opt, nullptr, std::move(init),
      [&](Index j, const Vec<Scalar>& y, Vec<Scalar>& out) {
        out = g_column<Scalar>(problem.slices, j, y, problem.alpha,
                               problem.v);
      });
}

/// Matrix-free variant with partial updating: after `warmup` full sweeps
/// only the active columns are recomputed, everything else stays frozen,
/// and the stopping residual accumulates over updated columns only.
template <class Scalar>
std::pair<SparseUniformApproxT<Scalar>, IterationReport> truncated_pm_partial(
    const HoprProblemT<Scalar>& problem, Scalar beta,
    const PartialOptions& partial, const SolveOptions& opt = {},
    SparseUniformApproxT<Scalar> init = {}) {
  const Index n = problem.states();
  if (init.background.size() == 0) init = uniform_approx<Scalar>(n);
  return detail::sparse_power_engine<Scalar>(
      n, beta, opt, &partial, std::move(init),
      [&](Index j, const Vec<Scalar>& y, Vec<Scalar>& out) {
        out = g_column<Scalar>(problem.slices, j, y, problem.alpha,
                               problem.v);
      });
}

/// Rewrites alpha (S + e u^T) + (1 - alpha) G as a plain S' + e u'^T pair
/// for a sparse auxiliary matrix G.
template <class Scalar>
SparseUniformApproxT<Scalar> fold_aux_sparse(
    const SparseUniformApproxT<Scalar>& a, Scalar alpha,
    const SpMat<Scalar>& g) {
  SparseUniformApproxT<Scalar> out;
  out.spikes = alpha * a.spikes + (Scalar(1) - alpha) * g;
  out.spikes.prune(Scalar(0), Scalar(0));
  out.spikes.makeCompressed();
  out.background = alpha * a.background;
  return out;
}

/// Same fold for the uniform choice G = (1/n^2) e e^T.
template <class Scalar>
SparseUniformApproxT<Scalar> fold_aux_uniform(
    const SparseUniformApproxT<Scalar>& a, Scalar alpha) {
  SparseUniformApproxT<Scalar> out;
  out.spikes = alpha * a.spikes;
  out.spikes.prune(Scalar(0), Scalar(0));
  out.spikes.makeCompressed();
  const Index n = a.states();
  out.background =
      alpha * a.background +
      Vec<Scalar>::Constant(n, (Scalar(1) - alpha) / Scalar(n * n));
  return out;
}

}  // namespace hopr

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "hopr/errors.hpp"
#include "hopr/parallel.hpp"
#include "hopr/types.hpp"

namespace hopr {

/// Split of a nonnegative column into sparse spikes plus a uniform
/// background value, the minimizer of
///   1/2 ||s + e*mu - b||^2 + beta*||s||_1   s.t.  s >= 0, mu >= 0.
template <class Scalar>
struct ThresholdResultT {
  SpVec<Scalar> spikes;
  Scalar background = Scalar(0);
};

using ThresholdResult = ThresholdResultT<Real>;

namespace detail {

template <class Scalar>
void check_threshold_args(const Eigen::Ref<const Vec<Scalar>>& b,
                          Scalar beta) {
  if (b.size() < 1) throw InvalidInput("threshold: empty input");
  if (!(beta > Scalar(0)))
    throw InvalidInput("threshold: beta must be positive");
  for (Index i = 0; i < b.size(); ++i) {
    if (!(b(i) >= Scalar(0)) || !std::isfinite(static_cast<double>(b(i))))
      throw InvalidInput("threshold: entries must be nonnegative and finite");
  }
}

}  // namespace detail

/// Closed-form solve of the spike/background subproblem for one column.
/// Sorts b descending (ties by original index), locates the unique spike
/// count d with
///   (n-d) b_(d) > sum_{j>d} b_(j) + n*beta >= (n-d) b_(d+1),
/// then mu = (sum_{j>d} b_(j) + d*beta) / (n-d) and the d spikes are
/// b_(j) - beta - mu. Spikes are appended to `spikes` sorted by index;
/// returns mu. KKT: spikes live exactly where b > beta + mu.
template <class Scalar>
Scalar threshold_into(const Eigen::Ref<const Vec<Scalar>>& b, Scalar beta,
                      std::vector<std::pair<Index, Scalar>>& spikes) {
  detail::check_threshold_args(b, beta);
  const Index n = b.size();
  spikes.clear();

  thread_local std::vector<Index> order;
  order.resize(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  std::sort(order.begin(), order.end(), [&](Index a, Index c) {
    return b(a) != b(c) ? b(a) > b(c) : a < c;
  });

  const Scalar total = b.sum();
  const Scalar n_beta = Scalar(n) * beta;

  Index d = -1;
  Scalar head = Scalar(0);  // sum of the d largest entries
  for (Index k = 0; k < n; ++k) {
    const Scalar tail = total - head;
    const Scalar rhs = tail + n_beta;
    const bool left_ok =
        k == 0 || Scalar(n - k) * b(order[static_cast<std::size_t>(k - 1)]) > rhs;
    const bool right_ok =
        rhs >= Scalar(n - k) * b(order[static_cast<std::size_t>(k)]);
    if (left_ok && right_ok) {
      d = k;
      break;
    }
    if (k + 1 == n && left_ok) {
      d = n - 1;  // unreachable for valid input; guards fp boundary ties
      break;
    }
    head += b(order[static_cast<std::size_t>(k)]);
  }
  if (d < 0) throw Error("threshold: no valid spike count found");

  const Scalar tail = total - head;
  const Scalar mu = (tail + Scalar(d) * beta) / Scalar(n - d);

  spikes.reserve(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) {
    const Index idx = order[static_cast<std::size_t>(j)];
    const Scalar value = b(idx) - beta - mu;
    if (value > Scalar(0)) spikes.emplace_back(idx, value);
  }
  std::sort(spikes.begin(), spikes.end());
  return mu;
}

template <class Scalar>
ThresholdResultT<Scalar> threshold(const Eigen::Ref<const Vec<Scalar>>& b,
                                   Scalar beta) {
  std::vector<std::pair<Index, Scalar>> spikes;
  ThresholdResultT<Scalar> result;
  result.background = threshold_into<Scalar>(b, beta, spikes);
  result.spikes.resize(b.size());
  result.spikes.reserve(static_cast<Index>(spikes.size()));
  for (const auto& [i, v] : spikes) result.spikes.insertBack(i) = v;
  return result;
}

/// Dense reconstruction s + e*mu of a threshold result.
template <class Scalar>
Vec<Scalar> threshold_apply(const Eigen::Ref<const Vec<Scalar>>& b,
                            Scalar beta) {
  std::vector<std::pair<Index, Scalar>> spikes;
  const Scalar mu = threshold_into<Scalar>(b, beta, spikes);
  Vec<Scalar> out = Vec<Scalar>::Constant(b.size(), mu);
  for (const auto& [i, v] : spikes) out(i) += v;
  return out;
}

template <class Scalar>
Scalar threshold_objective(const Eigen::Ref<const Vec<Scalar>>& b, Scalar beta,
                           const ThresholdResultT<Scalar>& r) {
  Vec<Scalar> x = Vec<Scalar>::Constant(b.size(), r.background);
  Scalar l1 = Scalar(0);
  for (typename SpVec<Scalar>::InnerIterator it(r.spikes); it; ++it) {
    x(it.index()) += it.value();
    l1 += it.value();
  }
  return Scalar(0.5) * (x - b).squaredNorm() + beta * l1;
}

/// Exhaustive reference solver: enumerates every candidate support,
/// solves the equality-constrained quadratic on it, keeps KKT-feasible
/// candidates and returns the objective minimizer. Independent of the
/// sorting path above; limited to n <= 12.
template <class Scalar>
ThresholdResultT<Scalar> threshold_oracle(
    const Eigen::Ref<const Vec<Scalar>>& b, Scalar beta) {
  detail::check_threshold_args(b, beta);
  const Index n = b.size();
  if (n > 12) throw UnsupportedSize("threshold_oracle: n must be <= 12");

  const Scalar feas_tol = Scalar(1e-9);
  Scalar best_obj = std::numeric_limits<Scalar>::infinity();
  Vec<Scalar> best_s;
  Scalar best_mu = Scalar(0);

  Vec<Scalar> s(n);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    const int card = __builtin_popcount(mask);
    // Candidate mu values: the stationary one (when defined) and mu = 0.
    Scalar off_sum = Scalar(0);
    for (Index i = 0; i < n; ++i)
      if (!(mask >> i & 1u)) off_sum += b(i);
    std::vector<Scalar> mus = {Scalar(0)};
    if (card < n)
      mus.push_back((off_sum + Scalar(card) * beta) / Scalar(n - card));
    for (const Scalar mu : mus) {
      if (mu < Scalar(0)) continue;
      bool feasible = true;
      for (Index i = 0; i < n && feasible; ++i) {
        if (mask >> i & 1u) {
          s(i) = b(i) - beta - mu;
          if (s(i) < -feas_tol) feasible = false;
          s(i) = std::max(s(i), Scalar(0));
        } else {
          s(i) = Scalar(0);
          if (b(i) > beta + mu + feas_tol) feasible = false;
        }
      }
      if (!feasible) continue;
      const Vec<Scalar> x = s.array() + mu;
      const Scalar obj =
          Scalar(0.5) * (x - b).squaredNorm() + beta * s.sum();
      if (obj < best_obj) {
        best_obj = obj;
        best_s = s;
        best_mu = mu;
      }
    }
  }

  ThresholdResultT<Scalar> result;
  result.background = best_mu;
  result.spikes.resize(n);
  for (Index i = 0; i < n; ++i)
    if (best_s(i) > Scalar(0)) result.spikes.insertBack(i) = best_s(i);
  return result;
}

/// Column-wise lift: column j of (S, u) is threshold(A(:,j), beta).
/// Columns are independent and may be processed in parallel.
template <class Scalar>
std::pair<SpMat<Scalar>, Vec<Scalar>> threshold_matrix(
    const Eigen::Ref<const Mat<Scalar>>& a, Scalar beta, int n_threads = 1) {
  const Index n = a.rows();
  const Index cols = a.cols();
  std::vector<std::vector<std::pair<Index, Scalar>>> col_spikes(
      static_cast<std::size_t>(cols));
  Vec<Scalar> u(cols);
  parallel_for(Index(0), cols, n_threads, [&](Index j) {
    u(j) = threshold_into<Scalar>(a.col(j), beta,
                                  col_spikes[static_cast<std::size_t>(j)]);
  });
  SpMat<Scalar> s(n, cols);
  Index nnz = 0;
  for (const auto& c : col_spikes) nnz += static_cast<Index>(c.size());
  s.reserve(nnz);
  for (Index j = 0; j < cols; ++j) {
    s.startVec(j);
    for (const auto& [i, v] : col_spikes[static_cast<std::size_t>(j)])
      s.insertBack(i, j) = v;
  }
  s.finalize();
  return {std::move(s), std::move(u)};
}

}  // namespace hopr

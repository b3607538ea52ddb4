#pragma once

#include <chrono>
#include <utility>

#include "hopr/errors.hpp"
#include "hopr/parallel.hpp"
#include "hopr/report.hpp"
#include "hopr/sparse_core.hpp"
#include "hopr/types.hpp"

namespace hopr {

/// A higher-order PageRank instance: slices, teleport vector, damping.
template <class Scalar>
struct HoprProblemT {
  SliceSetT<Scalar> slices;
  Vec<Scalar> v;
  Scalar alpha;

  HoprProblemT(SliceSetT<Scalar> s, Vec<Scalar> teleport, Scalar a)
      : slices(std::move(s)), v(std::move(teleport)), alpha(a) {
    if (!(alpha > Scalar(0) && alpha < Scalar(1)))
      throw InvalidConfig("HoprProblem: alpha must lie in (0,1)");
    if (v.size() != slices.size())
      throw InvalidInput("HoprProblem: teleport vector has wrong length");
    require_stochastic_vector(v, "HoprProblem teleport");
  }

  Index states() const { return slices.size(); }
};

using HoprProblem = HoprProblemT<Real>;

/// Uniform teleport e/n.
template <class Scalar>
Vec<Scalar> uniform_teleport(Index n) {
  return Vec<Scalar>::Constant(n, Scalar(1) / Scalar(n));
}

namespace detail {

/// Shared piece of every column update: t = Q_j y together with the
/// dangling term (alpha/n)(||y||_1 - ||Q_j y||_1) e, evaluated without
/// forming the deficit vector (the masses substitute for d_j^T y).
template <class Scalar>
void damped_slice_apply(const SpMat<Scalar>& q,
                        const Eigen::Ref<const Vec<Scalar>>& y, Scalar alpha,
                        Vec<Scalar>& out, Scalar& y_mass) {
  const Index n = q.rows();
  y_mass = y.sum();
  Scalar t_mass = Scalar(0);
  out.setZero(n);
  for (Index c = 0; c < q.outerSize(); ++c) {
    const Scalar yc = y(c);
    if (yc == Scalar(0)) continue;
    for (typename SpMat<Scalar>::InnerIterator it(q, c); it; ++it) {
      const Scalar add = it.value() * yc;
      out(it.row()) += add;
      t_mass += add;
    }
  }
  out *= alpha;
  out.array() += alpha / Scalar(n) * (y_mass - t_mass);
}

}  // namespace detail

/// Column update of the original model: given the j-th row y of the
/// iterate, returns alpha P_j y + (1-alpha) ||y||_1 v with the dangling
/// correction folded in. Used by the power method and the sparse power
/// method.
template <class Scalar>
Vec<Scalar> w_column(const SliceSetT<Scalar>& slices, Index j,
                     const Eigen::Ref<const Vec<Scalar>>& y, Scalar alpha,
                     const Vec<Scalar>& v) {
  Vec<Scalar> out;
  Scalar y_mass;
  detail::damped_slice_apply(slices.slice(j), y, alpha, out, y_mass);
  out += (Scalar(1) - alpha) * y_mass * v;
  return out;
}

/// Column update of the fixed-teleport model with G = (1/n) v e^T:
/// alpha P_j y + ((1-alpha)/n) v.
template <class Scalar>
Vec<Scalar> g_column(const SliceSetT<Scalar>& slices, Index j,
                     const Eigen::Ref<const Vec<Scalar>>& y, Scalar alpha,
                     const Vec<Scalar>& v) {
  Vec<Scalar> out;
  Scalar y_mass;
  detail::damped_slice_apply(slices.slice(j), y, alpha, out, y_mass);
  out += (Scalar(1) - alpha) / Scalar(slices.size()) * v;
  return out;
}

/// One column of the exact operator applied to a dense iterate.
template <class Scalar>
Vec<Scalar> apply_w_column(const HoprProblemT<Scalar>& problem,
                           const Mat<Scalar>& x, Index j) {
  if (j < 0 || j >= problem.states())
    throw InvalidInput("apply_w_column: column out of range");
  const Vec<Scalar> row = x.row(j).transpose();
  return w_column<Scalar>(problem.slices, j, row, problem.alpha, problem.v);
}

/// Uniform dense start with total mass 1.
template <class Scalar>
Mat<Scalar> uniform_dense_start(Index n) {
  return Mat<Scalar>::Constant(n, n, Scalar(1) / Scalar(n * n));
}

/// Power method on the dense iterate; the ground-truth reference for
/// small and medium n. Column updates within one iteration read only the
/// previous iterate, so they run in parallel with a barrier per iteration.
template <class Scalar>
std::pair<Mat<Scalar>, IterationReport> power_method(
    const HoprProblemT<Scalar>& problem, Mat<Scalar> x0,
    const SolveOptions& opt = {}, Index max_dense_n = 5000) {
  const Index n = problem.states();
  if (n > max_dense_n)
    throw InvalidConfig("power_method: n exceeds the dense-iterate cap");
  if (x0.rows() != n || x0.cols() != n)
    throw InvalidInput("power_method: bad start dimensions");
  if ((x0.array() < Scalar(0)).any())
    throw InvalidInput("power_method: negative start");
  if (std::abs(static_cast<double>(x0.sum()) - 1.0) > 1e-9)
    throw InvalidInput("power_method: start mass must be 1");

  IterationReport report;
  const auto t0 = std::chrono::steady_clock::now();
  Mat<Scalar> x = std::move(x0);
  Mat<Scalar> next(n, n);
  for (Index q = 0; q < opt.max_iter; ++q) {
    parallel_for(Index(0), n, opt.threads, [&](Index j) {
      next.col(j) = apply_w_column(problem, x, j);
    });
    const Scalar change =
        (next - x).template lpNorm<1>() / x.template lpNorm<1>();
    x.swap(next);
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

template <class Scalar>
std::pair<Mat<Scalar>, IterationReport> power_method(
    const HoprProblemT<Scalar>& problem, const SolveOptions& opt = {},
    Index max_dense_n = 5000) {
  return power_method(problem, uniform_dense_start<Scalar>(problem.states()),
                      opt, max_dense_n);
}

/// l1 distance between X and the model right-hand side evaluated at X.
template <class Scalar>
Scalar model_residual(const HoprProblemT<Scalar>& problem,
                      const Mat<Scalar>& x, Index max_dense_n = 5000) {
  const Index n = problem.states();
  if (n > max_dense_n)
    throw InvalidConfig("model_residual: n exceeds the dense-iterate cap");
  if ((x.array() < Scalar(0)).any())
    throw InvalidInput("model_residual: negative iterate");
  Scalar dist = Scalar(0);
  for (Index j = 0; j < n; ++j)
    dist += (apply_w_column(problem, x, j) - x.col(j)).template lpNorm<1>();
  return dist;
}

}  // namespace hopr

#include "doctest.h"

#include <vector>

#include "hopr/data_io.hpp"
#include "hopr/errors.hpp"
#include "hopr/multilinear.hpp"
#include "test_util.hpp"

using namespace hopr;

namespace {

// Dense n x n^2 flattening [F_1 ... F_n] built entry-by-entry from the
// slice-set tensor layout: T(i,j,k) lives in slice j at (i,k) and lands
// in block k at (i,j).
MatX dense_flattening(const SliceSet& slices) {
  const Index n = slices.size();
  MatX wide = MatX::Zero(n, n * n);
  for (Index j = 0; j < n; ++j) {
    const MatX q = MatX(slices.slice(j));
    for (Index i = 0; i < n; ++i)
      for (Index k = 0; k < n; ++k) wide(i, k * n + j) = q(i, k);
  }
  return wide;
}

VecX kron_square(const VecX& x) {
  const Index n = x.size();
  VecX k(n * n);
  for (Index j = 0; j < n; ++j) k.segment(j * n, n) = x(j) * x;
  return k;
}

// Dense corrected flattening R = wide + (1/n) e d^T.
MatX dense_corrected_flattening(const MatX& wide) {
  const Index n = wide.rows();
  MatX r = wide;
  for (Index c = 0; c < wide.cols(); ++c) {
    const Real deficit = Real(1) - wide.col(c).sum();
    r.col(c).array() += deficit / static_cast<Real>(n);
  }
  return r;
}

}  // namespace

TEST_CASE("permutation bookkeeping") {
  SUBCASE("n = 1 is the identity") {
    std::vector<SpMatX> slices;
    SpMatX q(1, 1);
    q.insert(0, 0) = 0.6;
    q.makeCompressed();
    slices.push_back(std::move(q));
    const SliceSet set(1, std::move(slices));
    const auto flat = permute_to_flattened(set);
    CHECK(MatX(flat.slices[0])(0, 0) == 0.6);
  }
  SUBCASE("single entry moves to the swapped bucket") {
    std::vector<SpMatX> slices(2, SpMatX(2, 2));
    slices[1].insert(0, 0) = 1.0;  // tensor entry (i=0, j=1, k=0)
    slices[1].makeCompressed();
    const SliceSet set(2, std::move(slices));
    const auto flat = permute_to_flattened(set);
    CHECK(MatX(flat.slices[0])(0, 1) == 1.0);
    CHECK(flat.slices[1].nonZeros() == 0);
  }
  SUBCASE("matches the dense tensor flattening") {
    const SliceSet set = gen_synthetic(6, 0.05, 5);
    const MatX wide = dense_flattening(set);
    const auto flat = permute_to_flattened(set);
    for (Index k = 0; k < 6; ++k) {
      const MatX block = wide.middleCols(k * 6, 6);
      CHECK((MatX(flat.slices[static_cast<std::size_t>(k)]) - block)
                .lpNorm<1>() == 0.0);
    }
  }
  SUBCASE("round-trips exactly") {
    const SliceSet set = gen_synthetic(8, 0.02, 17);
    const SliceSet back = flattened_to_slices(permute_to_flattened(set));
    for (Index j = 0; j < 8; ++j)
      CHECK((MatX(back.slice(j)) - MatX(set.slice(j))).lpNorm<1>() == 0.0);
  }
}

TEST_CASE("kronecker-free product") {
  SUBCASE("n = 1") {
    FlattenedSliceSet flat;
    flat.n = 1;
    SpMatX q(1, 1);
    q.insert(0, 0) = 0.7;
    q.makeCompressed();
    flat.slices.push_back(std::move(q));
    VecX x = VecX::Ones(1);
    CHECK(ml_matvec(flat, x)(0) == doctest::Approx(0.7));
  }
  SUBCASE("unit vector selects one column") {
    const SliceSet set = gen_synthetic(5, 0.2, 3);
    const auto flat = permute_to_flattened(set);
    for (Index k = 0; k < 5; ++k) {
      VecX x = VecX::Zero(5);
      x(k) = 1.0;
      const VecX got = ml_matvec(flat, x);
      const VecX expect =
          VecX(flat.slices[static_cast<std::size_t>(k)].col(k));
      CHECK((got - expect).lpNorm<1>() == 0.0);
    }
  }
  SUBCASE("matches the explicit Kronecker product") {
    Rng rng(77);
    for (const Index n : {4, 11, 30}) {
      const SliceSet set = gen_synthetic(n, 0.01, 100 + n);
      const auto flat = permute_to_flattened(set);
      const MatX wide = dense_flattening(set);
      for (int rep = 0; rep < 5; ++rep) {
        VecX x = testutil::random_nonneg_vector(rng, n).array() + 1e-3;
        x /= x.sum();
        const VecX expect = wide * kron_square(x);
        CHECK((ml_matvec(flat, x) - expect).lpNorm<1>() <= 1e-12);
      }
    }
  }
}

TEST_CASE("fixed-point iteration") {
  SUBCASE("n = 1 converges immediately") {
    std::vector<SpMatX> slices;
    SpMatX q(1, 1);
    q.insert(0, 0) = 1.0;
    q.makeCompressed();
    slices.push_back(std::move(q));
    const auto flat = permute_to_flattened(SliceSet(1, std::move(slices)));
    const auto [x, report] = ml_fixed_point(flat, VecX(VecX::Ones(1)), Real(0.85));
    CHECK(report.converged);
    CHECK(report.iterations == 1);
    CHECK(x(0) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("iterates stay stochastic") {
    const SliceSet set = gen_synthetic(40, 1e-3, 15);
    const auto flat = permute_to_flattened(set);
    const VecX v = uniform_teleport<Real>(40);
    VecX x = v;
    for (int q = 0; q < 25; ++q) {
      x = ml_step(flat, v, Real(0.85), x);
      CHECK(std::abs(x.sum() - 1.0) <= 1e-12);
      CHECK((x.array() >= 0).all());
    }
  }
  SUBCASE("solution solves the corrected model for small alpha") {
    const SliceSet set = gen_synthetic(5, 0.1, 21);
    const auto flat = permute_to_flattened(set);
    const VecX v = uniform_teleport<Real>(5);
    SolveOptions opt;
    opt.tol = 1e-11;
    const Real alpha = 0.4;
    const auto [x, report] = ml_fixed_point(flat, v, alpha, opt);
    REQUIRE(report.converged);
    CHECK(report.uniqueness_guaranteed);
    const MatX r = dense_corrected_flattening(dense_flattening(set));
    const VecX rhs = alpha * (r * kron_square(x)) + (1 - alpha) * v;
    CHECK((x - rhs).lpNorm<1>() <= 10 * opt.tol);
  }
  SUBCASE("large alpha is flagged") {
    const SliceSet set = gen_synthetic(10, 0.05, 33);
    const auto flat = permute_to_flattened(set);
    const VecX v = uniform_teleport<Real>(10);
    const auto [x, report] = ml_fixed_point(flat, v, Real(0.85));
    CHECK_FALSE(report.uniqueness_guaranteed);
    CHECK(std::abs(x.sum() - 1.0) <= 1e-12);
  }
  SUBCASE("input validation") {
    const SliceSet set = gen_synthetic(4, 0.1, 2);
    const auto flat = permute_to_flattened(set);
    const VecX v = uniform_teleport<Real>(4);
    CHECK_THROWS_AS(ml_fixed_point(flat, v, Real(1.0)), InvalidConfig);
    CHECK_THROWS_AS(ml_fixed_point(flat, VecX(VecX::Ones(4)), Real(0.4)),
                    InvalidInput);
    VecX bad_start = VecX::Zero(4);
    bad_start(0) = 0.5;
    CHECK_THROWS_AS(ml_fixed_point(flat, v, Real(0.4), SolveOptions{},
                                   bad_start),
                    InvalidInput);
  }
}

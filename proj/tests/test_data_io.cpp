#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "hopr/data_io.hpp"
#include "hopr/errors.hpp"
#include "test_util.hpp"

using namespace hopr;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("io_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }

  void write(const std::string& contents) const {
    std::ofstream out(path);
    out << contents;
  }
};

// Dense evaluation of the slice factorization, straight from the
// conditional-probability formulas on a dense copy of the link tensor.
std::vector<MatX> dense_slices_oracle(Index n, Index m,
                                      const std::vector<LinkTriple>& ts) {
  std::vector<MatX> tensor(static_cast<std::size_t>(m),
                           MatX::Zero(n, n));  // tensor[s](i, j) = A(i,j,s)
  for (const auto& t : ts)
    tensor[static_cast<std::size_t>(t.s)](t.i, t.j) = 1.0;

  std::vector<MatX> slices;
  for (Index j = 0; j < n; ++j) {
    MatX u = MatX::Zero(n, m);
    for (Index s = 0; s < m; ++s) {
      Real denom = 0;
      for (Index i = 0; i < n; ++i)
        denom += tensor[static_cast<std::size_t>(s)](j, i);
      if (denom == 0) continue;
      for (Index i = 0; i < n; ++i)
        u(i, s) = tensor[static_cast<std::size_t>(s)](j, i) / denom;
    }
    MatX w = MatX::Zero(m, n);
    for (Index k = 0; k < n; ++k) {
      Real denom = 0;
      for (Index s = 0; s < m; ++s)
        denom += tensor[static_cast<std::size_t>(s)](k, j);
      if (denom == 0) continue;
      for (Index s = 0; s < m; ++s)
        w(s, k) = tensor[static_cast<std::size_t>(s)](k, j) / denom;
    }
    slices.push_back(u * w);
  }
  return slices;
}

}  // namespace

TEST_CASE("triples parsing") {
  SUBCASE("minimal file") {
    TempFile f("triples_min");
    f.write("%%HOPR-TRIPLES 1\n2 1 1\n1 2 1\n");
    const auto data = load_triples(f.path);
    CHECK(data.n == 2);
    CHECK(data.m == 1);
    REQUIRE(data.triples.size() == 1);
    CHECK(data.triples[0] == LinkTriple{0, 1, 0});
  }
  SUBCASE("empty triple section") {
    TempFile f("triples_empty");
    f.write("%%HOPR-TRIPLES 1\n3 2 0\n");
    const auto data = load_triples(f.path);
    CHECK(data.n == 3);
    CHECK(data.triples.empty());
  }
  SUBCASE("duplicates collapse") {
    TempFile f("triples_dup");
    f.write("%%HOPR-TRIPLES 1\n2 1 2\n1 2 1\n1 2 1\n");
    CHECK(load_triples(f.path).triples.size() == 1);
  }
  SUBCASE("malformed line reports its number") {
    TempFile f("triples_bad");
    f.write("%%HOPR-TRIPLES 1\n2 1 1\n1 x 1\n");
    try {
      load_triples(f.path);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
  }
  SUBCASE("out-of-range index") {
    TempFile f("triples_range");
    f.write("%%HOPR-TRIPLES 1\n2 1 1\n1 3 1\n");
    CHECK_THROWS_AS(load_triples(f.path), FormatError);
  }
  SUBCASE("bad magic") {
    TempFile f("triples_magic");
    f.write("%%HOPR-NOPE 1\n2 1 0\n");
    CHECK_THROWS_AS(load_triples(f.path), FormatError);
  }
  SUBCASE("truncated file") {
    TempFile f("triples_trunc");
    f.write("%%HOPR-TRIPLES 1\n2 1 2\n1 2 1\n");
    CHECK_THROWS_AS(load_triples(f.path), FormatError);
  }
}

TEST_CASE("slice factorization from triples") {
  SUBCASE("single link leaves every state dangling") {
    const std::vector<LinkTriple> ts = {{0, 1, 0}};
    const SliceSet set = build_slice_set(2, 1, ts);
    for (Index j = 0; j < 2; ++j) {
      CHECK(set.slice(j).nonZeros() == 0);
      const VecX sums = column_l1_sums(set.slice(j));
      for (Index k = 0; k < 2; ++k)
        CHECK((sums(k) == 0.0 || sums(k) == doctest::Approx(1.0)));
    }
  }
  SUBCASE("fully dense link tensor gives uniform slices") {
    std::vector<LinkTriple> ts;
    for (Index i = 0; i < 2; ++i)
      for (Index j = 0; j < 2; ++j) ts.push_back({i, j, 0});
    const SliceSet set = build_slice_set(2, 1, ts);
    for (Index j = 0; j < 2; ++j)
      CHECK((MatX(set.slice(j)) - MatX::Constant(2, 2, 0.5)).lpNorm<1>() <=
            1e-15);
  }
  SUBCASE("no triples at all") {
    const SliceSet set = build_slice_set(3, 2, {});
    for (Index j = 0; j < 3; ++j) CHECK(set.slice(j).nonZeros() == 0);
  }
  SUBCASE("random tensors match the dense oracle") {
    Rng rng(64);
    const Index n = 5, m = 3;
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<LinkTriple> ts;
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
          for (Index s = 0; s < m; ++s)
            if (rng.unit() < 0.25) ts.push_back({i, j, s});
      const SliceSet set = build_slice_set(n, m, ts);
      const auto oracle = dense_slices_oracle(n, m, ts);
      for (Index j = 0; j < n; ++j)
        CHECK((MatX(set.slice(j)) - oracle[static_cast<std::size_t>(j)])
                  .lpNorm<Eigen::Infinity>() <= 1e-14);
    }
  }
  SUBCASE("rejects out-of-range triples") {
    CHECK_THROWS_AS(build_slice_set(2, 1, {{0, 2, 0}}), InvalidInput);
  }
}

TEST_CASE("synthetic generation") {
  SUBCASE("exact nonzero count") {
    const SliceSet set = gen_synthetic(100, 1e-4, 12);
    CHECK(set.nonzeros() == 100);
  }
  SUBCASE("same seed reproduces the set") {
    const SliceSet a = gen_synthetic(30, 1e-3, 7);
    const SliceSet b = gen_synthetic(30, 1e-3, 7);
    for (Index j = 0; j < 30; ++j)
      CHECK((MatX(a.slice(j)) - MatX(b.slice(j))).lpNorm<1>() == 0.0);
    const SliceSet c = gen_synthetic(30, 1e-3, 8);
    Real diff = 0;
    for (Index j = 0; j < 30; ++j)
      diff += (MatX(a.slice(j)) - MatX(c.slice(j))).lpNorm<1>();
    CHECK(diff > 0.0);
  }
  SUBCASE("values lie in (0,1] and columns stay substochastic") {
    const SliceSet set = gen_synthetic(12, 0.2, 5);
    for (Index j = 0; j < 12; ++j) {
      const auto& q = set.slice(j);
      for (Index k = 0; k < q.outerSize(); ++k)
        for (SpMatX::InnerIterator it(q, k); it; ++it) {
          CHECK(it.value() > 0.0);
          CHECK(it.value() <= 1.0);
        }
      CHECK((column_l1_sums(q).array() <= 1.0 + 1e-12).all());
    }
  }
  SUBCASE("bad arguments") {
    CHECK_THROWS_AS(gen_synthetic(0, 0.1, 1), InvalidConfig);
    CHECK_THROWS_AS(gen_synthetic(5, 0.0, 1), InvalidConfig);
    CHECK_THROWS_AS(gen_synthetic(5, 1.5, 1), InvalidConfig);
  }
}

TEST_CASE("random auxiliary matrix") {
  const SpMatX g = gen_random_g(50, 1e-3, 3);
  Real mass = 0;
  for (Index k = 0; k < g.nonZeros(); ++k) {
    CHECK(g.valuePtr()[k] > 0.0);
    mass += g.valuePtr()[k];
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("slice set round trip") {
  const SliceSet set = gen_synthetic(20, 1e-3, 99);
  TempFile f("slices_rt");
  save_slice_set(f.path, set);
  const SliceSet back = load_slice_set(f.path);
  REQUIRE(back.size() == set.size());
  CHECK(back.nonzeros() == set.nonzeros());
  for (Index j = 0; j < 20; ++j)
    CHECK((MatX(back.slice(j)) - MatX(set.slice(j))).lpNorm<1>() == 0.0);
}

TEST_CASE("slice file rejects corrupt data") {
  SUBCASE("bad magic") {
    TempFile f("slices_magic");
    f.write("%%HOPR-RESULT 1\n1 0\n");
    CHECK_THROWS_AS(load_slice_set(f.path), FormatError);
  }
  SUBCASE("duplicate entry") {
    TempFile f("slices_dup");
    f.write("%%HOPR-SLICES 1\n2 2\n1 1 1 0.25\n1 1 1 0.25\n");
    CHECK_THROWS_AS(load_slice_set(f.path), FormatError);
  }
  SUBCASE("zero value") {
    TempFile f("slices_zero");
    f.write("%%HOPR-SLICES 1\n2 1\n1 1 1 0\n");
    CHECK_THROWS_AS(load_slice_set(f.path), FormatError);
  }
  SUBCASE("negative value") {
    TempFile f("slices_neg");
    f.write("%%HOPR-SLICES 1\n2 1\n1 1 1 -0.5\n");
    CHECK_THROWS_AS(load_slice_set(f.path), FormatError);
  }
  SUBCASE("NaN value") {
    TempFile f("slices_nan");
    f.write("%%HOPR-SLICES 1\n2 1\n1 1 1 nan\n");
    CHECK_THROWS_AS(load_slice_set(f.path), FormatError);
  }
  SUBCASE("value above 1") {
    TempFile f("slices_big");
    f.write("%%HOPR-SLICES 1\n2 1\n1 1 1 1.5\n");
    CHECK_THROWS_AS(load_slice_set(f.path), FormatError);
  }
  SUBCASE("truncated file") {
    TempFile f("slices_trunc");
    f.write("%%HOPR-SLICES 1\n2 2\n1 1 1 0.25\n");
    CHECK_THROWS_AS(load_slice_set(f.path), FormatError);
  }
}

TEST_CASE("result round trip") {
  Rng rng(5);
  SparseUniformApprox approx;
  MatX dense = testutil::random_nonneg_matrix(rng, 8);
  for (Index j = 0; j < 8; ++j)
    for (Index i = 0; i < 8; ++i)
      if (rng.unit() < 0.7) dense(i, j) = 0;
  approx.spikes = testutil::sparse_from_dense(dense);
  approx.background = testutil::random_nonneg_vector(rng, 8);

  std::map<std::string, std::string> meta = {
      {"alpha", "0.85"}, {"beta", "1e-09"},      {"iterations", "7"},
      {"method", "spm"}, {"residual", "3.2e-9"}, {"seed", "42"},
      {"wall_time_s", "0.01"}};
  TempFile f("result_rt");
  save_result(f.path, approx, meta);
  const SolveResult back = load_result(f.path);

  CHECK((back.approx.background - approx.background).lpNorm<1>() == 0.0);
  CHECK((MatX(back.approx.spikes) - MatX(approx.spikes)).lpNorm<1>() == 0.0);
  CHECK(back.meta == meta);
  // PageRank ordering survives the trip bit-for-bit.
  CHECK((pagerank_values(back.approx) - pagerank_values(approx))
            .lpNorm<1>() == 0.0);
}

TEST_CASE("result file rejects corrupt data") {
  SUBCASE("bad magic") {
    TempFile f("result_magic");
    f.write("%%HOPR-SLICES 1\n1 0\n1 0.5\n");
    CHECK_THROWS_AS(load_result(f.path), FormatError);
  }
  SUBCASE("metadata without equals sign") {
    TempFile f("result_meta");
    f.write("%%HOPR-RESULT 1\n1 0\n1 0.5\njunk\n");
    CHECK_THROWS_AS(load_result(f.path), FormatError);
  }
}

TEST_CASE("rho table export") {
  TempFile f("rho_table");
  save_rho_table(f.path, {0.5, 0.25});
  std::ifstream in(f.path);
  std::string l1, l2;
  std::getline(in, l1);
  std::getline(in, l2);
  CHECK(l1 == "1 0.5");
  CHECK(l2 == "2 0.25");
}

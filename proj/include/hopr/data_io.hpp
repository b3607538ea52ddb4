#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hopr/approx.hpp"
#include "hopr/sparse_core.hpp"
#include "hopr/types.hpp"

namespace hopr {

/// One link: page i points to page j via anchor term s. Indices are
/// 0-based in memory and 1-based in every file format.
struct LinkTriple {
  Index i = 0;
  Index j = 0;
  Index s = 0;

  friend bool operator<(const LinkTriple& a, const LinkTriple& b) {
    if (a.i != b.i) return a.i < b.i;
    if (a.j != b.j) return a.j < b.j;
    return a.s < b.s;
  }
  friend bool operator==(const LinkTriple& a, const LinkTriple& b) {
    return a.i == b.i && a.j == b.j && a.s == b.s;
  }
};

/// A binary link tensor: n pages, m anchor terms, sorted unique triples.
struct TripleData {
  Index n = 0;
  Index m = 0;
  std::vector<LinkTriple> triples;
};

TripleData load_triples(const std::string& path);

/// Conditional-probability factorization of the link tensor into
/// column-substochastic slices: slice j is the product of the outlink
/// distribution of page j per anchor and the anchor distribution of each
/// incoming link, with zero rows/columns left as dangling mass.
SliceSet build_slice_set(Index n, Index m,
                         const std::vector<LinkTriple>& triples);

/// Random slice set with ~sparsity * n^3 uniform entries at distinct
/// positions of the n x n^2 concatenation; columns that end up heavier
/// than mass 1 are rescaled to 1. Deterministic for a fixed seed.
SliceSet gen_synthetic(Index n, double sparsity, std::uint64_t seed);

/// Random nonnegative auxiliary matrix with ~sparsity * n^2 entries,
/// normalized to total l1 mass 1.
SpMatX gen_random_g(Index n, double sparsity, std::uint64_t seed);

void save_slice_set(const std::string& path, const SliceSet& slices);
SliceSet load_slice_set(const std::string& path);

/// A persisted solver result: the (S, u) pair plus key=value metadata
/// (alpha, beta, method, iterations, residual, wall_time_s, seed).
struct SolveResult {
  SparseUniformApprox approx;
  std::map<std::string, std::string> meta;
};

void save_result(const std::string& path, const SparseUniformApprox& approx,
                 const std::map<std::string, std::string>& meta);
SolveResult load_result(const std::string& path);

/// Writes the (trial, rho) table produced by the contraction experiment.
void save_rho_table(const std::string& path, const std::vector<Real>& rhos);

}  // namespace hopr

#pragma once

#include <vector>

#include "hopr/types.hpp"

namespace hopr {

/// Per-run record backing the Iter / CPU / Sparsity report columns.
/// residual_history holds the relative l1 change per iteration, as
/// observed (no monotonicity is enforced). active_columns_history is
/// filled by every sparse solver; for full updates it is constantly n.
struct IterationReport {
  Index iterations = 0;
  bool converged = false;
  std::vector<Real> residual_history;
  double wall_time_s = 0.0;
  std::vector<Index> active_columns_history;
  Real final_sparsity = 0.0;  // nnz(S) / n^2 when an (S, u) pair is produced
  bool uniqueness_guaranteed = true;  // multilinear: false when alpha >= 1/2
};

/// Knobs shared by all iterative solvers.
struct SolveOptions {
  Real tol = 1e-8;
  Index max_iter = 200;
  int threads = 1;
};

/// Active-set schedule for the partial-updating solvers.
struct PartialOptions {
  Index varsigma = 10;  // floor on the active-column count
  Real tau = 0.1;       // retention fraction per shrink
  Index warmup = 1;     // full-update iterations before shrinking starts
};

}  // namespace hopr

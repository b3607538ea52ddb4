// Command-line driver: generate / ingest / solve / rank / compare / rho.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hopr/data_io.hpp"
#include "hopr/errors.hpp"
#include "hopr/multilinear.hpp"
#include "hopr/operators.hpp"
#include "hopr/sparse_pm.hpp"
#include "hopr/truncated_pm.hpp"

namespace {

using namespace hopr;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNotConverged = 3;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

/// Accepts plain literals plus the symbolic sweep forms "1/n^2", "1/n^3",
/// "1/n^4" (any positive integer power).
Real parse_beta(const std::string& text, Index n) {
  if (text.rfind("1/n^", 0) == 0) {
    const int power = std::stoi(text.substr(4));
    if (power < 1) throw InvalidConfig("beta: power must be positive");
    Real beta = 1;
    for (int k = 0; k < power; ++k) beta /= static_cast<Real>(n);
    return beta;
  }
  try {
    return std::stod(text);
  } catch (const std::exception&) {
    throw InvalidConfig("beta: cannot parse '" + text + "'");
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct SolveArgs {
  std::string input;
  std::string output;
  std::string method;
  std::string beta_text = "1/n^3";
  Real alpha = 0.85;
  Real tau = 0.1;
  Index varsigma = 10;
  Index ell = 1;
  Real tol = 1e-8;
  Index max_iter = 200;
  std::uint64_t seed = 0;
  int threads = 1;
  double g_sparsity = 0.0;  // > 0 selects a random auxiliary matrix
  Index max_dense_n = 5000;
  bool quiet = false;
};

/// Method-aware column reconstruction: rank-one x x^T for the multilinear
/// result (stored as u = x), S + e u^T otherwise.
VecX result_column(const SolveResult& r, Index j) {
  const auto method = r.meta.find("method");
  if (method != r.meta.end() && method->second == "ml-fp")
    return r.approx.background(j) * r.approx.background;
  return reconstruct_column(r.approx, j);
}

VecX result_column_masses(const SolveResult& r) {
  const auto method = r.meta.find("method");
  if (method != r.meta.end() && method->second == "ml-fp")
    return r.approx.background;  // column j of x x^T sums to x(j)
  return column_masses(r.approx);
}

void print_report(const std::string& method, const IterationReport& report,
                  double io_seconds, bool quiet) {
  std::cout << "method: " << method << "\n"
            << "iterations: " << report.iterations
            << (report.converged ? " (converged)" : " (NOT converged)")
            << "\n"
            << "solve time: " << fmt(report.wall_time_s) << " s\n"
            << "io time: " << fmt(io_seconds) << " s\n";
  if (!report.residual_history.empty())
    std::cout << "final residual: " << fmt(report.residual_history.back())
              << "\n";
  if (report.final_sparsity > 0)
    std::cout << "sparsity of S: " << fmt(report.final_sparsity) << "\n";
  if (quiet) return;
  if (!report.active_columns_history.empty()) {
    std::cout << "active columns:";
    for (const Index c : report.active_columns_history) std::cout << ' ' << c;
    std::cout << "\n";
  }
  std::cout << "residual history:";
  for (const Real r : report.residual_history) std::cout << ' ' << fmt(r);
  std::cout << "\n";
}

SpMatX uniform_aux_matrix(Index n) {
  SpMatX g(n, n);
  g.reserve(n * n);
  for (Index j = 0; j < n; ++j) {
    g.startVec(j);
    for (Index i = 0; i < n; ++i)
      g.insertBack(i, j) = Real(1) / static_cast<Real>(n * n);
  }
  g.finalize();
  return g;
}

int run_solve(const SolveArgs& args) {
  auto io_start = std::chrono::steady_clock::now();
  const SliceSet slices = load_slice_set(args.input);
  double io_seconds = seconds_since(io_start);

  const Index n = slices.size();
  const Real beta = parse_beta(args.beta_text, n);
  SolveOptions opt;
  opt.tol = args.tol;
  opt.max_iter = args.max_iter;
  opt.threads = args.threads;
  PartialOptions partial;
  partial.tau = args.tau;
  partial.varsigma = args.varsigma;
  partial.warmup = args.ell;

  SparseUniformApprox approx;
  IterationReport report;

  if (args.method == "ml-fp") {
    const auto flatten_start = std::chrono::steady_clock::now();
    const auto flat = permute_to_flattened(slices);
    const double flatten_seconds = seconds_since(flatten_start);
    auto [x, rep] = ml_fixed_point(flat, uniform_teleport<Real>(n),
                                   args.alpha, opt);
    std::cout << "flatten time: " << fmt(flatten_seconds) << " s\n";
    if (!rep.uniqueness_guaranteed)
      std::cout << "note: alpha >= 1/2, fixed point may not be unique\n";
    approx.spikes = SpMatX(n, n);
    approx.background = std::move(x);
    report = std::move(rep);
  } else {
    const HoprProblem problem(slices, uniform_teleport<Real>(n), args.alpha);
    if (args.method == "power") {
      auto [x, rep] = power_method(problem, opt, args.max_dense_n);
      approx.spikes = x.sparseView();
      approx.spikes.makeCompressed();
      approx.background = VecX::Zero(n);
      report = std::move(rep);
    } else if (args.method == "tpm") {
      const SpMatX g = args.g_sparsity > 0
                           ? gen_random_g(n, args.g_sparsity, args.seed)
                           : uniform_aux_matrix(n);
      auto [a, rep] = truncated_pm(problem, g, beta, opt);
      approx = fold_aux_sparse(a, args.alpha, g);
      report = std::move(rep);
    } else if (args.method == "tpm-v") {
      auto [a, rep] = truncated_pm_variant(problem, beta, opt);
      approx = std::move(a);
      report = std::move(rep);
    } else if (args.method == "tpm-pu") {
      auto [a, rep] = truncated_pm_partial(problem, beta, partial, opt);
      approx = std::move(a);
      report = std::move(rep);
    } else if (args.method == "spm") {
      auto [a, rep] = sparse_pm(problem, beta, opt);
      approx = std::move(a);
      report = std::move(rep);
    } else if (args.method == "spm-pu") {
      auto [a, rep] = sparse_pm_partial(problem, beta, partial, opt);
      approx = std::move(a);
      report = std::move(rep);
    } else {
      throw InvalidConfig("unknown method '" + args.method + "'");
    }
  }

  std::map<std::string, std::string> meta;
  meta["alpha"] = fmt_full(args.alpha);
  meta["beta"] = fmt_full(beta);
  meta["method"] = args.method;
  meta["iterations"] = std::to_string(report.iterations);
  meta["residual"] = report.residual_history.empty()
                         ? "0"
                         : fmt_full(report.residual_history.back());
  meta["wall_time_s"] = fmt_full(report.wall_time_s);
  meta["seed"] = std::to_string(args.seed);
  meta["converged"] = report.converged ? "1" : "0";

  io_start = std::chrono::steady_clock::now();
  save_result(args.output, approx, meta);
  io_seconds += seconds_since(io_start);

  print_report(args.method, report, io_seconds, args.quiet);
  std::cout << "result written to: " << args.output << "\n";
  return report.converged ? kExitOk : kExitNotConverged;
}

int run_rank(const std::string& input, Index k) {
  const SolveResult r = load_result(input);
  const Index n = r.approx.states();
  if (k > n) {
    std::cerr << "warning: k=" << k << " clamped to n=" << n << "\n";
    k = n;
  }
  const VecX score = result_column_masses(r);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index(0));
  std::sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    return score(a) != score(b) ? score(a) > score(b) : a < b;
  });
  for (Index pos = 0; pos < k; ++pos) {
    const Index page = idx[static_cast<std::size_t>(pos)];
    std::printf("%lld %lld %.10g\n", static_cast<long long>(pos + 1),
                static_cast<long long>(page + 1),
                static_cast<double>(score(page)));
  }
  return kExitOk;
}

int run_compare(const std::string& input, const std::string& reference) {
  const SolveResult computed = load_result(input);
  const SolveResult exact = load_result(reference);
  const Index n = computed.approx.states();
  if (exact.approx.states() != n)
    throw InvalidInput("compare: dimension mismatch");
  Real num = 0;
  Real den = 0;
  for (Index j = 0; j < n; ++j) {
    const VecX a = result_column(computed, j);
    const VecX b = result_column(exact, j);
    num += (a - b).lpNorm<1>();
    den += b.lpNorm<1>();
  }
  if (den == 0) throw InvalidInput("compare: reference has zero mass");
  std::printf("%.12g\n", static_cast<double>(num / den));
  return kExitOk;
}

int run(int argc, char** argv) {
  CLI::App app{"Higher-order PageRank solvers on sparse transition slices"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand(
      "generate", "Write a random synthetic slice-set file");
  Index gen_n = 1000;
  double gen_sparsity = 1e-6;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--n", gen_n, "state count")->required();
  gen->add_option("--sparsity", gen_sparsity,
                  "fill fraction of the n x n^2 concatenation")
      ->required();
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("-o,--output", gen_out, "slice-set file")->required();

  auto* ingest = app.add_subcommand(
      "ingest", "Build slices from a link-triple file");
  std::string ingest_in, ingest_out;
  ingest->add_option("-i,--input", ingest_in, "triples file")->required();
  ingest->add_option("-o,--output", ingest_out, "slice-set file")
      ->required();

  auto* solve = app.add_subcommand("solve", "Run a solver on a slice set");
  SolveArgs sa;
  solve->add_option("-i,--input", sa.input, "slice-set file")->required();
  solve->add_option("-o,--output", sa.output, "result file")->required();
  solve
      ->add_option("-m,--method", sa.method,
                   "power | tpm | tpm-v | tpm-pu | spm | spm-pu | ml-fp")
      ->required();
  solve->add_option("--alpha", sa.alpha, "damping factor (default 0.85)");
  solve->add_option("--beta", sa.beta_text,
                    "sparsity penalty; literal or 1/n^K (default 1/n^3)");
  solve->add_option("--tau", sa.tau, "active-set retention (default 0.1)");
  solve->add_option("--varsigma", sa.varsigma,
                    "active-set floor (default 10)");
  solve->add_option("--ell", sa.ell, "full warm-up sweeps (default 1)");
  solve->add_option("--tol", sa.tol, "stopping tolerance (default 1e-8)");
  solve->add_option("--max-iter", sa.max_iter, "iteration cap (default 200)");
  solve->add_option("--seed", sa.seed, "RNG seed (random G)");
  solve->add_option("--threads", sa.threads, "column-update threads");
  solve->add_option("--g-sparsity", sa.g_sparsity,
                    "tpm: draw a random auxiliary matrix of this sparsity");
  solve->add_option("--max-dense-n", sa.max_dense_n,
                    "dense-iterate cap for the power method");
  solve->add_flag("--quiet", sa.quiet, "suppress history output");

  auto* rank = app.add_subcommand("rank", "Top-k pages of a result file");
  std::string rank_in;
  Index rank_k = 10;
  rank->add_option("-i,--input", rank_in, "result file")->required();
  rank->add_option("-k", rank_k, "ranks to print (default 10)");

  auto* compare = app.add_subcommand(
      "compare", "Relative l1 error between two result files");
  std::string cmp_in, cmp_ref;
  compare->add_option("-i,--input", cmp_in, "computed result")->required();
  compare->add_option("-r,--reference", cmp_ref, "reference result")
      ->required();

  auto* rho = app.add_subcommand(
      "rho", "Sample the thresholding contraction ratio");
  Index rho_n = 200;
  Index rho_trials = 1000;
  std::string rho_beta = "1/n^2";
  std::uint64_t rho_seed = 0;
  int rho_threads = 1;
  std::string rho_out;
  rho->add_option("--n", rho_n, "matrix size");
  rho->add_option("--trials", rho_trials, "number of draws");
  rho->add_option("--beta", rho_beta, "penalty; literal or 1/n^K");
  rho->add_option("--seed", rho_seed, "RNG seed");
  rho->add_option("--threads", rho_threads, "parallel trials");
  rho->add_option("-o,--output", rho_out, "two-column output table")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  if (gen->parsed()) {
    const SliceSet slices = gen_synthetic(gen_n, gen_sparsity, gen_seed);
    save_slice_set(gen_out, slices);
    std::cout << "n: " << gen_n << "\nnnz: " << slices.nonzeros()
              << "\nwritten to: " << gen_out << "\n";
    return kExitOk;
  }
  if (ingest->parsed()) {
    const TripleData data = load_triples(ingest_in);
    const SliceSet slices = build_slice_set(data.n, data.m, data.triples);
    save_slice_set(ingest_out, slices);
    std::cout << "n: " << data.n << "\nm: " << data.m
              << "\ntriples: " << data.triples.size()
              << "\nnnz: " << slices.nonzeros() << "\nwritten to: "
              << ingest_out << "\n";
    return kExitOk;
  }
  if (solve->parsed()) return run_solve(sa);
  if (rank->parsed()) return run_rank(rank_in, rank_k);
  if (compare->parsed()) return run_compare(cmp_in, cmp_ref);
  if (rho->parsed()) {
    const Real beta = parse_beta(rho_beta, rho_n);
    const auto rhos =
        rho_experiment<Real>(rho_n, rho_trials, beta, rho_seed, rho_threads);
    save_rho_table(rho_out, rhos);
    Real max_rho = 0;
    for (const Real r : rhos) max_rho = std::max(max_rho, r);
    std::cout << "trials: " << rhos.size() << "\nmax rho: " << fmt(max_rho)
              << "\nwritten to: " << rho_out << "\n";
    return kExitOk;
  }
  return kExitInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}

#include "hopr/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "hopr/errors.hpp"
#include "hopr/random.hpp"

namespace hopr {

namespace {

constexpr const char* kSliceMagic = "%%HOPR-SLICES 1";
constexpr const char* kTripleMagic = "%%HOPR-TRIPLES 1";
constexpr const char* kResultMagic = "%%HOPR-RESULT 1";

/// Line-oriented reader that reports 1-based line numbers on failure.
class LineReader {
 public:
  explicit LineReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw FormatError(path + ": cannot open file");
  }

  std::string next(const char* what) {
    std::string line;
    if (!std::getline(in_, line))
      throw FormatError(path_ + ":" + std::to_string(line_no_ + 1) +
                        ": unexpected end of file, expected " +
                        std::string(what));
    ++line_no_;
    return line;
  }

  bool try_next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    return true;
  }

  /// Reports the most recently read line.
  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(path_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

 private:

  std::string path_;
  std::ifstream in_;
  long line_no_ = 0;
};

Index parse_index(LineReader& r, std::istringstream& ss, const char* what,
                  Index lo, Index hi) {
  long long value = 0;
  if (!(ss >> value)) r.fail(std::string("expected integer ") + what);
  if (value < lo || value > hi)
    r.fail(std::string(what) + " out of range: " + std::to_string(value));
  return static_cast<Index>(value);
}

Real parse_value(LineReader& r, std::istringstream& ss, const char* what,
                 bool allow_zero) {
  double value = 0;
  if (!(ss >> value)) r.fail(std::string("expected value ") + what);
  if (!std::isfinite(value)) r.fail(std::string(what) + " is not finite");
  if (value < 0) r.fail(std::string(what) + " is negative");
  if (!allow_zero && value == 0) r.fail(std::string(what) + " must be > 0");
  return value;
}

void require_line_end(LineReader& r, std::istringstream& ss) {
  std::string rest;
  if (ss >> rest) r.fail("trailing tokens: '" + rest + "'");
}

std::string format_value(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError(path + ": cannot open file for writing");
  return out;
}

/// Snap products like 1e-4 * 100^3 back to the intended integer before
/// taking the ceiling, so decimal sparsities give exact counts.
std::uint64_t ceil_count(double fraction, double cells) {
  const long double product =
      static_cast<long double>(fraction) * static_cast<long double>(cells);
  const long double rounded =
      static_cast<long double>(std::llround(product));
  if (std::fabs(product - rounded) <=
      1e-9L * std::max<long double>(1.0L, product))
    return static_cast<std::uint64_t>(rounded);
  return static_cast<std::uint64_t>(std::ceil(product));
}

}  // namespace

TripleData load_triples(const std::string& path) {
  LineReader reader(path);
  if (reader.next("magic line") != kTripleMagic)
    reader.fail("bad magic, expected '" + std::string(kTripleMagic) + "'");

  TripleData data;
  Index nnz = 0;
  {
    std::istringstream ss(reader.next("header 'n m nnz'"));
    data.n = parse_index(reader, ss, "n", 1, 1'000'000'000);
    data.m = parse_index(reader, ss, "m", 1, 1'000'000'000);
    nnz = parse_index(reader, ss, "nnz", 0, 4'000'000'000LL);
    require_line_end(reader, ss);
  }
  data.triples.reserve(static_cast<std::size_t>(nnz));
  for (Index t = 0; t < nnz; ++t) {
    std::istringstream ss(reader.next("triple 'i j s'"));
    LinkTriple triple;
    triple.i = parse_index(reader, ss, "i", 1, data.n) - 1;
    triple.j = parse_index(reader, ss, "j", 1, data.n) - 1;
    triple.s = parse_index(reader, ss, "s", 1, data.m) - 1;
    require_line_end(reader, ss);
    data.triples.push_back(triple);
  }
  std::string extra;
  if (reader.try_next(extra) && !extra.empty())
    reader.fail("unexpected trailing line");

  // Duplicate lines collapse to one triple.
  std::sort(data.triples.begin(), data.triples.end());
  data.triples.erase(std::unique(data.triples.begin(), data.triples.end()),
                     data.triples.end());
  return data;
}

SliceSet build_slice_set(Index n, Index m,
                         const std::vector<LinkTriple>& triples) {
  if (n < 1) throw InvalidInput("build_slice_set: n must be >= 1");
  if (m < 1) throw InvalidInput("build_slice_set: m must be >= 1");
  for (const auto& t : triples) {
    if (t.i < 0 || t.i >= n || t.j < 0 || t.j >= n || t.s < 0 || t.s >= m)
      throw InvalidInput("build_slice_set: triple index out of range");
  }

  // Outlink counts per (source, anchor) and anchor counts per (source,
  // target); both denominators of the conditional probabilities.
  std::unordered_map<std::uint64_t, Index> outlinks_per_anchor;
  std::unordered_map<std::uint64_t, Index> anchors_per_link;
  const auto key = [](Index a, Index b) {
    return (static_cast<std::uint64_t>(a) << 32) |
           static_cast<std::uint64_t>(b);
  };
  for (const auto& t : triples) {
    ++outlinks_per_anchor[key(t.i, t.s)];
    ++anchors_per_link[key(t.i, t.j)];
  }

  // Group triples two ways: by source (rows of the U factor of each
  // slice) and by target (columns of the W factor).
  std::vector<std::vector<LinkTriple>> by_source(
      static_cast<std::size_t>(n));
  std::vector<std::vector<LinkTriple>> by_target(
      static_cast<std::size_t>(n));
  for (const auto& t : triples) {
    by_source[static_cast<std::size_t>(t.i)].push_back(t);
    by_target[static_cast<std::size_t>(t.j)].push_back(t);
  }

  std::vector<SpMatX> slices;
  slices.reserve(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    // U_j(i, s) spread over anchors: index outgoing links of page j.
    std::unordered_map<std::uint64_t, std::vector<Index>> targets_by_anchor;
    for (const auto& t : by_source[static_cast<std::size_t>(j)])
      targets_by_anchor[static_cast<std::uint64_t>(t.s)].push_back(t.j);

    std::vector<Eigen::Triplet<Real>> entries;
    for (const auto& t : by_target[static_cast<std::size_t>(j)]) {
      // Column k = t.i of slice j: link (k -> j) via anchor t.s.
      const Real w = Real(1) / static_cast<Real>(
                                   anchors_per_link.at(key(t.i, t.j)));
      const auto hit = targets_by_anchor.find(
          static_cast<std::uint64_t>(t.s));
      if (hit == targets_by_anchor.end()) continue;
      const Real u = Real(1) / static_cast<Real>(
                                   outlinks_per_anchor.at(key(j, t.s)));
      for (Index i : hit->second)
        entries.emplace_back(i, t.i, w * u);
    }
    SpMatX q(n, n);
    q.setFromTriplets(entries.begin(), entries.end());
    q.makeCompressed();
    slices.push_back(std::move(q));
  }
  return SliceSet(n, std::move(slices));
}

SliceSet gen_synthetic(Index n, double sparsity, std::uint64_t seed) {
  if (n < 1) throw InvalidConfig("gen_synthetic: n must be >= 1");
  if (!(sparsity > 0.0 && sparsity <= 1.0))
    throw InvalidConfig("gen_synthetic: sparsity must lie in (0,1]");

  const double cells = static_cast<double>(n) * static_cast<double>(n) *
                       static_cast<double>(n);
  const std::uint64_t nnz = ceil_count(sparsity, cells);

  Rng rng(seed);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(2 * nnz + 16);
  std::vector<std::vector<Eigen::Triplet<Real>>> buckets(
      static_cast<std::size_t>(n));
  const auto total = static_cast<std::uint64_t>(n) *
                     static_cast<std::uint64_t>(n) *
                     static_cast<std::uint64_t>(n);
  std::uint64_t placed = 0;
  while (placed < nnz) {
    const std::uint64_t p = rng.below(total);
    if (!seen.insert(p).second) continue;
    const Real value = rng.unit_pos();
    const auto i = static_cast<Index>(p % static_cast<std::uint64_t>(n));
    const std::uint64_t c = p / static_cast<std::uint64_t>(n);
    const auto j = static_cast<Index>(c / static_cast<std::uint64_t>(n));
    const auto k = static_cast<Index>(c % static_cast<std::uint64_t>(n));
    buckets[static_cast<std::size_t>(j)].emplace_back(i, k, value);
    ++placed;
  }

  std::vector<SpMatX> slices;
  slices.reserve(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    SpMatX q(n, n);
    q.setFromTriplets(buckets[static_cast<std::size_t>(j)].begin(),
                      buckets[static_cast<std::size_t>(j)].end());
    q.makeCompressed();
    const VecX sums = column_l1_sums(q);
    for (Index k = 0; k < n; ++k) {
      if (sums(k) <= Real(1)) continue;
      for (SpMatX::InnerIterator it(q, k); it; ++it)
        it.valueRef() /= sums(k);
    }
    slices.push_back(std::move(q));
  }
  return SliceSet(n, std::move(slices));
}

SpMatX gen_random_g(Index n, double sparsity, std::uint64_t seed) {
  if (n < 1) throw InvalidConfig("gen_random_g: n must be >= 1");
  if (!(sparsity > 0.0 && sparsity <= 1.0))
    throw InvalidConfig("gen_random_g: sparsity must lie in (0,1]");
  const double cells = static_cast<double>(n) * static_cast<double>(n);
  const std::uint64_t nnz = std::max<std::uint64_t>(
      ceil_count(sparsity, cells), 1);

  Rng rng(seed);
  std::unordered_set<std::uint64_t> seen;
  std::vector<Eigen::Triplet<Real>> entries;
  const auto total =
      static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
  while (entries.size() < nnz) {
    const std::uint64_t p = rng.below(total);
    if (!seen.insert(p).second) continue;
    const auto i = static_cast<Index>(p % static_cast<std::uint64_t>(n));
    const auto j = static_cast<Index>(p / static_cast<std::uint64_t>(n));
    entries.emplace_back(i, j, rng.unit_pos());
  }
  SpMatX g(n, n);
  g.setFromTriplets(entries.begin(), entries.end());
  g.makeCompressed();
  Real mass = 0;
  for (Index k = 0; k < g.nonZeros(); ++k) mass += g.valuePtr()[k];
  for (Index k = 0; k < g.nonZeros(); ++k) g.valuePtr()[k] /= mass;
  return g;
}

void save_slice_set(const std::string& path, const SliceSet& slices) {
  auto out = open_out(path);
  const Index n = slices.size();
  out << kSliceMagic << '\n' << n << ' ' << slices.nonzeros() << '\n';
  for (Index j = 0; j < n; ++j) {
    const auto& q = slices.slice(j);
    for (Index k = 0; k < q.outerSize(); ++k)
      for (SpMatX::InnerIterator it(q, k); it; ++it)
        out << it.row() + 1 << ' ' << j + 1 << ' ' << k + 1 << ' '
            << format_value(it.value()) << '\n';
  }
  if (!out) throw FormatError(path + ": write failed");
}

SliceSet load_slice_set(const std::string& path) {
  LineReader reader(path);
  if (reader.next("magic line") != kSliceMagic)
    reader.fail("bad magic, expected '" + std::string(kSliceMagic) + "'");

  Index n = 0;
  Index nnz = 0;
  {
    std::istringstream ss(reader.next("header 'n nnz'"));
    n = parse_index(reader, ss, "n", 1, 100'000'000);
    nnz = parse_index(reader, ss, "nnz", 0, 4'000'000'000LL);
    require_line_end(reader, ss);
  }
  std::vector<std::vector<Eigen::Triplet<Real>>> buckets(
      static_cast<std::size_t>(n));
  for (Index t = 0; t < nnz; ++t) {
    std::istringstream ss(reader.next("entry 'i j k v'"));
    const Index i = parse_index(reader, ss, "i", 1, n) - 1;
    const Index j = parse_index(reader, ss, "j", 1, n) - 1;
    const Index k = parse_index(reader, ss, "k", 1, n) - 1;
    const Real v = parse_value(reader, ss, "v", /*allow_zero=*/false);
    if (v > Real(1)) reader.fail("v exceeds 1");
    require_line_end(reader, ss);
    buckets[static_cast<std::size_t>(j)].emplace_back(i, k, v);
  }

  std::vector<SpMatX> slices;
  slices.reserve(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    auto& entries = buckets[static_cast<std::size_t>(j)];
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) {
                return a.col() != b.col() ? a.col() < b.col()
                                          : a.row() < b.row();
              });
    for (std::size_t t = 1; t < entries.size(); ++t)
      if (entries[t].row() == entries[t - 1].row() &&
          entries[t].col() == entries[t - 1].col())
        throw FormatError(path + ": duplicate entry in slice " +
                          std::to_string(j + 1));
    SpMatX q(n, n);
    q.setFromTriplets(entries.begin(), entries.end());
    q.makeCompressed();
    slices.push_back(std::move(q));
  }
  return SliceSet(n, std::move(slices));
}

void save_result(const std::string& path, const SparseUniformApprox& approx,
                 const std::map<std::string, std::string>& meta) {
  auto out = open_out(path);
  const Index n = approx.states();
  out << kResultMagic << '\n' << n << ' ' << approx.spikes.nonZeros() << '\n';
  for (Index j = 0; j < approx.spikes.outerSize(); ++j)
    for (SpMatX::InnerIterator it(approx.spikes, j); it; ++it)
      out << it.row() + 1 << ' ' << j + 1 << ' ' << format_value(it.value())
          << '\n';
  for (Index j = 0; j < n; ++j)
    out << j + 1 << ' ' << format_value(approx.background(j)) << '\n';
  for (const auto& [k, v] : meta) out << k << '=' << v << '\n';
  if (!out) throw FormatError(path + ": write failed");
}

SolveResult load_result(const std::string& path) {
  LineReader reader(path);
  if (reader.next("magic line") != kResultMagic)
    reader.fail("bad magic, expected '" + std::string(kResultMagic) + "'");

  Index n = 0;
  Index nnz = 0;
  {
    std::istringstream ss(reader.next("header 'n nnz_S'"));
    n = parse_index(reader, ss, "n", 1, 100'000'000);
    nnz = parse_index(reader, ss, "nnz_S", 0, 4'000'000'000LL);
    require_line_end(reader, ss);
  }
  std::vector<Eigen::Triplet<Real>> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  for (Index t = 0; t < nnz; ++t) {
    std::istringstream ss(reader.next("spike 'i j v'"));
    const Index i = parse_index(reader, ss, "i", 1, n) - 1;
    const Index j = parse_index(reader, ss, "j", 1, n) - 1;
    const Real v = parse_value(reader, ss, "v", /*allow_zero=*/false);
    require_line_end(reader, ss);
    entries.emplace_back(i, j, v);
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) {
              return a.col() != b.col() ? a.col() < b.col()
                                        : a.row() < b.row();
            });
  for (std::size_t t = 1; t < entries.size(); ++t)
    if (entries[t].row() == entries[t - 1].row() &&
        entries[t].col() == entries[t - 1].col())
      throw FormatError(path + ": duplicate spike entry");

  SolveResult result;
  result.approx.spikes = SpMatX(n, n);
  result.approx.spikes.setFromTriplets(entries.begin(), entries.end());
  result.approx.spikes.makeCompressed();
  result.approx.background.resize(n);
  for (Index t = 0; t < n; ++t) {
    std::istringstream ss(reader.next("background 'j u'"));
    const Index j = parse_index(reader, ss, "j", 1, n) - 1;
    if (j != t) reader.fail("background rows must appear in order");
    result.approx.background(j) =
        parse_value(reader, ss, "u", /*allow_zero=*/true);
    require_line_end(reader, ss);
  }
  std::string line;
  while (reader.try_next(line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) reader.fail("expected key=value metadata");
    result.meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return result;
}

void save_rho_table(const std::string& path, const std::vector<Real>& rhos) {
  auto out = open_out(path);
  for (std::size_t t = 0; t < rhos.size(); ++t)
    out << t + 1 << ' ' << format_value(rhos[t]) << '\n';
  if (!out) throw FormatError(path + ": write failed");
}

}  // namespace hopr

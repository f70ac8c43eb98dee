#pragma once

// Brute-force reference computations for the unit and acceptance suites.
// Everything here is written from the definitions with plain loops and
// shares no code path with the library kernels.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "powerset/batch.hpp"
#include "powerset/tree.hpp"

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline std::vector<double> unit(const std::vector<double>& v) {
  long double ss = 0.0L;
  for (double x : v) ss += static_cast<long double>(x) * x;
  const long double n = std::sqrt(ss);
  std::vector<double> out;
  for (double x : v) out.push_back(static_cast<double>(x / n));
  return out;
}

inline std::vector<double> masked_sum(const powerset::Matrix& rows, const std::vector<unsigned char>& mask) {
  std::vector<double> s(rows.cols(), 0.0);
  for (std::size_t r = 0; r < rows.rows(); ++r)
    if (mask[r])
      for (std::size_t k = 0; k < rows.cols(); ++k) s[k] += rows(r, k);
  return s;
}

inline double inner(const std::vector<double>& a, const std::vector<double>& b) {
  long double acc = 0.0L;
  for (std::size_t k = 0; k < a.size(); ++k) acc += static_cast<long double>(a[k]) * b[k];
  return static_cast<double>(acc);
}

// S0 block for one (image, text) pair: scalar dot products of masked unit sums.
inline Rows s0_block(const powerset::ImageSample& img, const powerset::TextSample& txt) {
  Rows out;
  for (const auto& mask : img.masks.masks()) {
    const auto phi = unit(masked_sum(img.patches, mask));
    std::vector<double> row;
    for (const auto& range : txt.token_map) {
      std::vector<unsigned char> tmask(txt.tokens.rows(), 0);
      for (std::size_t t = range.begin; t < range.end; ++t) tmask[t] = 1;
      row.push_back(inner(phi, unit(masked_sum(txt.tokens, tmask))));
    }
    out.push_back(row);
  }
  return out;
}

// Leaf indices under `node`, collected by walking children.
inline void collect_leaves(const powerset::ParseTree& tree, std::size_t node, std::vector<std::size_t>& leaf_ids) {
  const auto& n = tree.node(node);
  if (n.is_leaf) {
    leaf_ids.push_back(node);
    return;
  }
  for (std::size_t c : n.children) collect_leaves(tree, c, leaf_ids);
}

inline std::vector<std::vector<std::size_t>> leaf_sets(const powerset::ParseTree& tree, bool internal_only) {
  std::vector<std::size_t> order;  // leaf node id -> surface position
  for (std::size_t k = 0; k < tree.leaf_count(); ++k) order.push_back(tree.leaf_node(k));
  std::vector<std::vector<std::size_t>> sets;
  for (std::size_t id = 0; id < tree.size(); ++id) {
    if (internal_only && tree.node(id).is_leaf) continue;
    std::vector<std::size_t> ids;
    collect_leaves(tree, id, ids);
    std::vector<std::size_t> positions;
    for (std::size_t leaf_id : ids)
      for (std::size_t k = 0; k < order.size(); ++k)
        if (order[k] == leaf_id) positions.push_back(k);
    sets.push_back(positions);
  }
  return sets;
}

// Q_{A,B} straight from S0: sum over m in A and leaves of B.
inline double q_ab(const Rows& s0, std::uint64_t subset, const std::vector<std::size_t>& leaves) {
  double acc = 0.0;
  for (std::size_t m = 0; m < s0.size(); ++m)
    if ((subset >> m) & 1u)
      for (std::size_t leaf : leaves) acc += s0[m][leaf];
  return acc;
}

inline double t2r(const Rows& s0, const std::vector<std::vector<std::size_t>>& nodes) {
  const std::uint64_t count = std::uint64_t{1} << s0.size();
  double total = 0.0;
  for (const auto& leaves : nodes) {
    double best = 0.0;  // empty subset
    for (std::uint64_t a = 1; a < count; ++a) best = std::max(best, q_ab(s0, a, leaves));
    total += best;
  }
  return total / static_cast<double>(nodes.size());
}

inline double r2t(const Rows& s0, const std::vector<std::vector<std::size_t>>& nodes) {
  const std::uint64_t count = std::uint64_t{1} << s0.size();
  double total = 0.0;
  for (std::uint64_t a = 0; a < count; ++a) {
    double best = q_ab(s0, a, nodes.front());
    for (const auto& leaves : nodes) best = std::max(best, q_ab(s0, a, leaves));
    total += best;
  }
  return total / static_cast<double>(count);
}

// Direct log of the 2^M-term exponential sum, in long double.
inline double log_e(const std::vector<double>& q, double tau) {
  const std::uint64_t count = std::uint64_t{1} << q.size();
  long double hi = 0.0L;
  std::vector<long double> terms;
  for (std::uint64_t a = 0; a < count; ++a) {
    long double s = 0.0L;
    for (std::size_t m = 0; m < q.size(); ++m)
      if ((a >> m) & 1u) s += q[m];
    terms.push_back(s / tau);
    hi = std::max(hi, s / tau);
  }
  long double acc = 0.0L;
  for (long double t : terms) acc += std::exp(t - hi);
  return static_cast<double>(hi + std::log(acc));
}

inline double phi(const Rows& x, double gamma) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double worst = -INFINITY;
    for (std::size_t j = 0; j < x.size(); ++j)
      if (j != i) worst = std::max(worst, x[i][j]);
    total += std::max(0.0, worst - x[i][i] + gamma);
  }
  return total / static_cast<double>(x.size());
}

inline Rows transpose(const Rows& x) {
  Rows t(x.front().size(), std::vector<double>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x[i].size(); ++j) t[j][i] = x[i][j];
  return t;
}

// Hand-rolled generators.
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  std::size_t index(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); }
  bool coin() { return index(0, 1) == 1; }

  powerset::Matrix matrix(std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
    powerset::Matrix m(rows, cols);
    for (double& v : m.data()) v = uniform(lo, hi);
    return m;
  }

  std::vector<double> vec(std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = uniform(lo, hi);
    return v;
  }

  std::string word() {
    static const char* kAlphabet = "abcdefghijklmnopqrstuvwxyz.,'-0123456789";
    std::string w;
    const std::size_t len = index(1, 6);
    for (std::size_t k = 0; k < len; ++k) w.push_back(kAlphabet[index(0, 39)]);
    return w;
  }

  std::string label() {
    static const char* kLabels[] = {"S", "NP", "VP", "PP", "ADJP", "SBAR", "NP-SBJ", "WHNP", "X"};
    return kLabels[index(0, 8)];
  }

  // Canonical bracketed tree with arity 1..3 per constituent.
  std::string tree(std::size_t depth_left) {
    std::string out = "(" + label();
    const std::size_t arity = index(1, 3);
    for (std::size_t k = 0; k < arity; ++k) {
      out += ' ';
      if (depth_left == 0 || index(0, 2) == 0)
        out += word();
      else
        out += tree(depth_left - 1);
    }
    return out + ")";
  }
};

}  // namespace oracle

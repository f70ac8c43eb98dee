#include "powerset/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <vector>

#include "powerset/region.hpp"
#include "powerset/special.hpp"

namespace powerset {

namespace {

void check_cap(std::size_t masks, std::size_t cap) {
  if (masks > cap) throw CapExceeded(masks, cap);
  if (masks >= 63) throw CapExceeded(masks, 62);
}

void check_nodes(const Matrix& node_scores) {
  if (node_scores.cols() == 0) throw std::invalid_argument("node score block has no nodes");
}

}  // namespace

double q_subset(const Matrix& node_scores, SubsetId subset, std::size_t node) {
  double acc = 0.0;
  for (std::size_t m = 0; m < node_scores.rows(); ++m)
    if (subset.contains(m)) acc += node_scores(m, node);
  return acc;
}

ExactCell exact_cell(const Matrix& node_scores, std::size_t cap) {
  const std::size_t masks = node_scores.rows();
  const std::size_t nodes = node_scores.cols();
  check_cap(masks, cap);
  check_nodes(node_scores);

  // Subset k of the walk is gray(k) = k ^ (k >> 1); step k flips bit ctz(k).
  std::vector<double> sums(nodes, 0.0);
  std::vector<double> best(nodes, 0.0);  // empty subset scores 0
  double r2t_total = 0.0;                // empty subset: max_B 0 = 0
  const std::uint64_t count = std::uint64_t{1} << masks;
  for (std::uint64_t k = 1; k < count; ++k) {
    const auto m = static_cast<std::size_t>(std::countr_zero(k));
    const bool adding = ((k ^ (k >> 1)) >> m) & 1u;
    auto row = node_scores.row(m);
    double row_max = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < nodes; ++b) {
      sums[b] = adding ? sums[b] + row[b] : sums[b] - row[b];
      best[b] = std::max(best[b], sums[b]);
      row_max = std::max(row_max, sums[b]);
    }
    r2t_total += row_max;
  }
  double t2r_total = 0.0;
  for (double v : best) t2r_total += v;
  return {t2r_total / static_cast<double>(nodes), r2t_total / static_cast<double>(count)};
}

ExactCell exact_cell_naive(const Matrix& node_scores, std::size_t cap) {
  const std::size_t masks = node_scores.rows();
  const std::size_t nodes = node_scores.cols();
  check_cap(masks, cap);
  check_nodes(node_scores);
  const std::uint64_t count = std::uint64_t{1} << masks;
  std::vector<double> best(nodes, -std::numeric_limits<double>::infinity());
  double r2t_total = 0.0;
  for (std::uint64_t bits = 0; bits < count; ++bits) {
    double row_max = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < nodes; ++b) {
      const double q = q_subset(node_scores, SubsetId{bits}, b);
      best[b] = std::max(best[b], q);
      row_max = std::max(row_max, q);
    }
    r2t_total += row_max;
  }
  double t2r_total = 0.0;
  for (double v : best) t2r_total += v;
  return {t2r_total / static_cast<double>(nodes), r2t_total / static_cast<double>(count)};
}

double t2r_exact(const Matrix& node_scores, std::size_t cap) { return exact_cell(node_scores, cap).t2r; }
double r2t_exact(const Matrix& node_scores, std::size_t cap) { return exact_cell(node_scores, cap).r2t; }

double max_subset_score(std::span<const double> column, std::size_t cap) {
  check_cap(column.size(), cap);
  const std::uint64_t count = std::uint64_t{1} << column.size();
  double best = 0.0;
  for (std::uint64_t bits = 1; bits < count; ++bits) {
    double acc = 0.0;
    for (std::size_t m = 0; m < column.size(); ++m)
      if ((bits >> m) & 1u) acc += column[m];
    best = std::max(best, acc);
  }
  return best;
}

AggregationResult aggregate_exact(const SimilarityTensor& s0, std::span<const ParseTree> trees,
                                  const NodeSetOptions& options, std::size_t cap) {
  const std::size_t c = s0.batch_size();
  if (trees.size() != c) throw ShapeError("need one tree per text");
  for (std::size_t i = 0; i < c; ++i) check_cap(s0.masks(i), cap);
  AggregationResult out{Matrix(c, c), Matrix(c, c), Matrix(c, c)};
  for (std::size_t j = 0; j < c; ++j) {
    const auto nodes = enumerate_nodes(trees[j], options);
    for (std::size_t i = 0; i < c; ++i) {
      const ExactCell cell = exact_cell(per_mask_node_scores(s0.cell(i, j), trees[j], nodes), cap);
      out.q_r2t(i, j) = cell.r2t;
      out.q_t2r(i, j) = cell.t2r;
      out.q_bar(i, j) = cell.r2t + cell.t2r;
    }
  }
  return out;
}

double log_exponential_sum(std::span<const double> column, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  double acc = 0.0;
  for (double q : column) acc += special::softplus(q / tau);
  return acc;
}

double log_exponential_sum_enumerated(std::span<const double> column, double tau, std::size_t cap) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  check_cap(column.size(), cap);
  const std::uint64_t count = std::uint64_t{1} << column.size();
  // Streaming log-sum-exp: running maximum `hi`, running sum of exp(x - hi).
  double hi = 0.0;   // empty subset contributes exp(0)
  double acc = 1.0;
  for (std::uint64_t bits = 1; bits < count; ++bits) {
    double q = 0.0;
    for (std::size_t m = 0; m < column.size(); ++m)
      if ((bits >> m) & 1u) q += column[m];
    const double x = q / tau;
    if (x > hi) {
      acc = acc * std::exp(hi - x) + 1.0;
      hi = x;
    } else {
      acc += std::exp(x - hi);
    }
  }
  return hi + std::log(acc);
}

double lambda_bound(const Matrix& node_scores, double alpha, std::size_t cap) {
  check_nodes(node_scores);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> column(node_scores.rows());
  for (std::size_t b = 0; b < node_scores.cols(); ++b) {
    double total = 0.0;
    for (std::size_t m = 0; m < node_scores.rows(); ++m) {
      column[m] = node_scores(m, b);
      total += column[m];
    }
    const double gamma = 0.5 * (1.0 - alpha) * total + alpha * max_subset_score(column, cap);
    best = std::max(best, gamma);
  }
  return best;
}

}  // namespace powerset

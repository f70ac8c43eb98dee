#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include "powerset/batch.hpp"
#include "powerset/core.hpp"
#include "powerset/tree.hpp"

// Exact powerset aggregation. Every subset A of the M masks, including the
// empty one, is enumerated, so cost is O(K * 2^M) per (image, text) cell.
// Inputs are per-mask node score blocks Q (M x K, see per_mask_node_scores).

namespace powerset {

inline constexpr std::size_t kDefaultMaskCap = 20;

/// The oracle refuses M above its cap instead of running for hours.
class CapExceeded : public std::runtime_error {
 public:
  CapExceeded(std::size_t masks, std::size_t cap)
      : std::runtime_error("exact aggregation refused: M = " + std::to_string(masks) +
                           " exceeds the mask cap of " + std::to_string(cap)),
        masks_(masks),
        cap_(cap) {}
  std::size_t masks() const { return masks_; }
  std::size_t cap() const { return cap_; }

 private:
  std::size_t masks_;
  std::size_t cap_;
};

/// Q_{A,B}: sum of column `node` over the masks in `subset`.
double q_subset(const Matrix& node_scores, SubsetId subset, std::size_t node);

struct ExactCell {
  double t2r = 0.0;  // (1/K) sum_B max_A Q_{A,B}
  double r2t = 0.0;  // 2^-M sum_A max_B Q_{A,B}
};

/// Both directions in one Gray-code pass (one row add/remove per subset).
ExactCell exact_cell(const Matrix& node_scores, std::size_t cap = kDefaultMaskCap);

/// Same quantities, recomputing every subset sum from scratch. Slower by a
/// factor of M; kept to cross-check the Gray-code path.
ExactCell exact_cell_naive(const Matrix& node_scores, std::size_t cap = kDefaultMaskCap);

double t2r_exact(const Matrix& node_scores, std::size_t cap = kDefaultMaskCap);
double r2t_exact(const Matrix& node_scores, std::size_t cap = kDefaultMaskCap);

/// max over all subsets of Q_{A,B} for one node column, by enumeration.
double max_subset_score(std::span<const double> column, std::size_t cap = kDefaultMaskCap);

struct AggregationResult {
  Matrix q_r2t;
  Matrix q_t2r;
  Matrix q_bar;  // q_r2t + q_t2r
};

AggregationResult aggregate_exact(const SimilarityTensor& s0, std::span<const ParseTree> trees,
                                  const NodeSetOptions& options = {},
                                  std::size_t cap = kDefaultMaskCap);

/// log E_B = log sum_A exp(Q_{A,B} / tau) via the product expansion
/// prod_m (1 + exp(q_m / tau)), i.e. sum_m softplus(q_m / tau). O(M).
double log_exponential_sum(std::span<const double> column, double tau);

/// log E_B by enumerating all 2^M subsets with a streaming log-sum-exp.
double log_exponential_sum_enumerated(std::span<const double> column, double tau,
                                      std::size_t cap = kDefaultMaskCap);

/// Lambda(alpha) = max_B [ (1-alpha)/2 * Qbar_B + alpha * max_A Q_{A,B} ],
/// the piecewise-linear bracket of the R2T score. Subset maxima enumerated.
double lambda_bound(const Matrix& node_scores, double alpha, std::size_t cap = kDefaultMaskCap);

}  // namespace powerset

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "powerset/batch.hpp"
#include "powerset/loss.hpp"
#include "powerset/nla.hpp"
#include "powerset/oracle.hpp"

namespace powerset {

struct SyntheticSpec {
  std::size_t batch_size = 4;  // C
  PatchGrid grid{7, 7};        // N = H * W patches
  std::size_t tokens = 6;      // L, one leaf per token
  std::size_t dim = 16;        // D
  std::size_t masks = 10;      // M
  std::size_t min_depth = 1;   // internal levels on the longest root-to-word path
  std::size_t max_depth = 0;   // 0: unbounded
  std::uint64_t seed = 0;

  void validate() const;
};

/// Shape used by the correlation study: a 14 x 14 patch grid (224 px at
/// patch size 16), D = 512, M = 10 masks, 7-token captions, C = 8.
SyntheticSpec sweep_spec(std::uint64_t seed = 0);

/// Isotropic Gaussian patch/token rows, L2-normalized per row; random
/// rectangle masks; random full binary trees over the L tokens (uniform
/// split points). Globals are the normalized mean rows. Deterministic in seed.
MiniBatch gen_synthetic_batch(const SyntheticSpec& spec);

/// Random full binary tree over `leaves` words with labels from
/// {S, NP, VP, PP}, rendered and re-parsed. Tries to honor the depth range.
ParseTree random_binary_tree(std::size_t leaves, std::size_t min_depth, std::size_t max_depth,
                             std::uint64_t seed);

/// Ranges for drawing per-trial instance shapes.
struct InstanceRanges {
  std::size_t batch_size = 2;
  std::size_t min_masks = 1;
  std::size_t max_masks = 12;
  std::size_t min_tokens = 1;
  std::size_t max_tokens = 8;  // all-nodes K = 2L - 1 <= 15
  std::vector<std::size_t> dims{4, 64};
  PatchGrid grid{7, 7};
};

SyntheticSpec sample_instance_spec(const InstanceRanges& ranges, std::uint64_t seed);

/// Product-moment correlation. Throws DegenerateInput on zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct SweepOptions {
  std::vector<double> taus{0.1, 0.01, 0.001};
  std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t batches = 200;
  double gamma = 0.2;
  Activation t1_act = Activation::Softplus;
  Activation t2_act = Activation::Tanh;
  NodeSetOptions nodes;
};

struct SweepRow {
  double tau = 0.0;
  double alpha = 0.0;
  double exact_loss = 0.0;   // mean of phi(Qbar) + phi(Qbar^T)
  double approx_loss = 0.0;  // same with S-bar
  double pearson_r = 0.0;    // over both loss terms pooled
  double pearson_r_rows = 0.0;  // phi(X) term alone
  double pearson_r_cols = 0.0;  // phi(X^T) term alone
  double max_abs_err = 0.0;     // worst single-term difference
  double runtime_s = 0.0;
};

using SweepResult = std::vector<SweepRow>;

/// Exact vs S-bar triplet-loss terms over `batches` synthetic batches
/// (seeds spec.seed, spec.seed + 1, ...) for every (tau, alpha).
SweepResult correlation_sweep(const SyntheticSpec& spec, const SweepOptions& options);

struct Violation {
  std::uint64_t seed = 0;
  std::string detail;
};

struct CheckResult {
  std::string name;
  std::size_t evaluated = 0;
  std::size_t failures = 0;
  double worst = 0.0;  // largest observed value of the checked quantity
  std::vector<Violation> violations;  // first few, for the report

  bool passed() const { return failures == 0; }
};

struct BoundsReport {
  std::vector<CheckResult> checks;
  bool passed() const;
};

struct VerifyOptions {
  InstanceRanges ranges;
  std::vector<double> taus{1.0, 0.1, 0.01, 0.001};
  std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t trials = 200;
  std::uint64_t seed = 0;
  double grid_tau = 1e-4;          // tau for the alpha-grid search
  std::size_t alpha_grid = 21;     // points in [0, 1]
  double grid_tolerance = 0.02;    // |T2 - R2T| after the grid search
  double grid_pass_fraction = 0.99;
  NodeSetOptions nodes;
};

/// Evaluates every instance-level identity and bound of the oracle and the
/// aggregators over random instances.
BoundsReport verify_bounds(const VerifyOptions& options);

struct BenchOptions {
  std::vector<std::size_t> mask_counts{4, 6, 8, 10, 12, 14, 16};
  bool with_exact = true;
  std::size_t batch_size = 8;
  std::size_t tokens = 8;
  std::size_t dim = 32;
  std::size_t repeats = 5;  // best-of
  std::size_t cap = kDefaultMaskCap;
  std::uint64_t seed = 0;
  NlaConfig t1 = NlaConfig::t1();
  NlaConfig t2 = NlaConfig::t2();
};

struct BenchRow {
  std::size_t masks = 0;
  std::optional<double> exact_s;  // empty when refused or skipped
  bool exact_refused = false;
  double nla_s = 0.0;
  std::size_t exact_bytes = 0;
  std::size_t nla_bytes = 0;
};

/// Wall time of aggregate_exact and s_bar on one S0 tensor per M.
std::vector<BenchRow> bench_scaling(const BenchOptions& options);

struct GradcheckOptions {
  std::vector<NlaConfig> configs{NlaConfig::t2(Activation::Tanh, 0.01, 0.75)};
  LossConfig loss;
  double step = 1e-5;
  std::size_t trials = 100;
  std::size_t entries_per_trial = 16;
  // Instances whose hinge, hardest-negative gap (or ReLU input) is closer
  // than this to a kink are redrawn.
  double kink_margin = 1e-3;
  // Denominator floor for relative errors of near-zero gradients.
  double rel_floor = 1e-6;
  NodeSetOptions nodes;
};

struct GradcheckResult {
  double max_rel_err = 0.0;
  std::size_t trials = 0;
  std::size_t redrawn = 0;
  std::size_t entries = 0;
  std::uint64_t worst_seed = 0;
};

/// Central finite differences of total_loss(S-bar(S0)) against
/// nla_backward composed with total_loss_grad, on sampled S0 entries.
/// The similarity fed to the loss is the sum of the configured NLA outputs.
GradcheckResult gradcheck(const SyntheticSpec& spec, const GradcheckOptions& options);

}  // namespace powerset

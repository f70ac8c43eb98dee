#include "powerset/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "powerset/region.hpp"
#include "powerset/special.hpp"

namespace powerset {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Matrix random_unit_rows(std::size_t rows, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, dim);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = out.row(r);
    double norm = 0.0;
    while (!(norm > 1e-12)) {
      for (double& x : row) x = normal(rng);
      norm = l2_norm(row);
    }
    for (double& x : row) x /= norm;
  }
  return out;
}

Vector mean_direction(const Matrix& rows) {
  Vector mean(rows.cols(), 0.0);
  for (std::size_t r = 0; r < rows.rows(); ++r)
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += rows(r, k);
  return mean;
}

bool masked_sums_nonzero(const Matrix& rows, const RegionMaskSet& masks) {
  for (const auto& mask : masks.masks()) {
    Vector sum(rows.cols(), 0.0);
    for (std::size_t r = 0; r < rows.rows(); ++r)
      if (mask[r])
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += rows(r, k);
    if (!(l2_norm(sum) > 1e-9)) return false;
  }
  return l2_norm(mean_direction(rows)) > 1e-9;
}

std::string build_subtree(std::size_t begin, std::size_t end, std::mt19937_64& rng) {
  static constexpr const char* kLabels[] = {"S", "NP", "VP", "PP"};
  std::uniform_int_distribution<std::size_t> label(0, 3);
  auto word = [](std::size_t k) { return "w" + std::to_string(k); };
  std::string out = "(";
  out += kLabels[label(rng)];
  if (end - begin == 1) return out + " " + word(begin) + ")";
  const std::size_t split = std::uniform_int_distribution<std::size_t>(begin + 1, end - 1)(rng);
  for (auto [b, e] : {std::pair{begin, split}, std::pair{split, end}}) {
    out += ' ';
    out += e - b == 1 ? word(b) : build_subtree(b, e, rng);
  }
  return out + ")";
}

// Accumulates pass/fail counts for one named check.
struct Recorder {
  CheckResult result;
  static constexpr std::size_t kMaxListed = 8;

  explicit Recorder(std::string name) { result.name = std::move(name); }

  void record(bool ok, double value, std::uint64_t seed, const std::function<std::string()>& detail) {
    ++result.evaluated;
    if (std::isfinite(value)) result.worst = std::max(result.worst, value);
    if (ok) return;
    ++result.failures;
    if (result.violations.size() < kMaxListed) result.violations.push_back({seed, detail()});
  }
};

std::string describe(std::initializer_list<std::pair<const char*, double>> fields) {
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [key, value] : fields) {
    if (!first) os << ' ';
    first = false;
    os << key << '=' << value;
  }
  return os.str();
}

// Floating-point slack for inequalities that hold exactly in real arithmetic.
double fp_slack(double scale) { return 1e-12 * std::max(1.0, std::abs(scale)); }

// Brute-force log E over all subsets against the closed form. The closed
// form cancels Qbar/(2 tau) against the log-cosh sum, so the error is taken
// relative to max(|log E|, 1): relative in E itself when log E is near 0.
void check_powerset_sum(Recorder& rec, std::span<const double> q, double tau, std::uint64_t seed) {
  const double log_e = log_exponential_sum_enumerated(q, tau);
  double closed = static_cast<double>(q.size()) * std::numbers::ln2;
  for (double qm : q) closed += qm / (2.0 * tau) + special::log_cosh(qm / (2.0 * tau));
  const double rel = std::abs(log_e - closed) / std::max(std::abs(log_e), 1.0);
  rec.record(rel <= 1e-8, rel, seed,
             [&] { return describe({{"tau", tau}, {"enumerated", log_e}, {"closed_form", closed}}); });
}

// Distance of the triplet loss at `x` from its nearest kink.
double hinge_margin(const Matrix& x, double gamma) {
  double margin = std::numeric_limits<double>::infinity();
  for (const Matrix& m : {x, x.transposed()}) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      double top = -std::numeric_limits<double>::infinity();
      double second = top;
      for (std::size_t j = 0; j < m.cols(); ++j) {
        if (j == i) continue;
        if (m(i, j) > top) {
          second = top;
          top = m(i, j);
        } else if (m(i, j) > second) {
          second = m(i, j);
        }
      }
      margin = std::min(margin, std::abs(top - m(i, i) + gamma));
      if (std::isfinite(second)) margin = std::min(margin, top - second);
    }
  }
  return margin;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (batch_size < 2) throw std::invalid_argument("synthetic batch needs C >= 2");
  if (grid.height == 0 || grid.width == 0 || tokens == 0 || dim == 0 || masks == 0) {
    throw std::invalid_argument("synthetic counts must all be >= 1");
  }
  if (max_depth != 0 && max_depth < min_depth) throw std::invalid_argument("max_depth < min_depth");
}

ParseTree random_binary_tree(std::size_t leaves, std::size_t min_depth, std::size_t max_depth,
                             std::uint64_t seed) {
  if (leaves == 0) throw std::invalid_argument("tree needs at least one leaf");
  std::mt19937_64 rng(mix_seed(seed, 0x74726565ULL));
  auto distance = [&](std::size_t d) -> std::size_t {
    if (d < min_depth) return min_depth - d;
    if (max_depth != 0 && d > max_depth) return d - max_depth;
    return 0;
  };
  ParseTree best;
  std::size_t best_distance = std::numeric_limits<std::size_t>::max();
  for (int attempt = 0; attempt < 64 && best_distance != 0; ++attempt) {
    ParseTree tree = parse_bracketed(build_subtree(0, leaves, rng));
    const std::size_t d = distance(tree.depth());
    if (d < best_distance) {
      best_distance = d;
      best = std::move(tree);
    }
  }
  return best;
}

MiniBatch gen_synthetic_batch(const SyntheticSpec& spec) {
  spec.validate();
  MiniBatch batch;
  for (std::size_t i = 0; i < spec.batch_size; ++i) {
    SamplePair pair;
    std::mt19937_64 rng(mix_seed(spec.seed, 2 * i));
    auto& img = pair.image;
    img.grid = spec.grid;
    img.masks = gen_random_masks(spec.grid, spec.masks, mix_seed(spec.seed, 2 * i + 1));
    // Redraw until every masked sum is nonzero (matters for D = 1).
    do {
      img.patches = random_unit_rows(spec.grid.patches(), spec.dim, rng);
    } while (!masked_sums_nonzero(img.patches, img.masks));
    img.global = l2_normalize(mean_direction(img.patches));

    auto& txt = pair.text;
    txt.tree = random_binary_tree(spec.tokens, spec.min_depth, spec.max_depth,
                                  mix_seed(spec.seed, 0x100000 + i));
    txt.token_map = identity_token_map(txt.tree);
    do {
      txt.tokens = random_unit_rows(spec.tokens, spec.dim, rng);
    } while (!(l2_norm(mean_direction(txt.tokens)) > 1e-9));
    txt.global = l2_normalize(mean_direction(txt.tokens));
    batch.items.push_back(std::move(pair));
  }
  return batch;
}

SyntheticSpec sweep_spec(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.batch_size = 8;
  spec.grid = {14, 14};
  spec.tokens = 7;
  spec.dim = 512;
  spec.masks = 10;
  spec.seed = seed;
  return spec;
}

SyntheticSpec sample_instance_spec(const InstanceRanges& ranges, std::uint64_t seed) {
  if (ranges.dims.empty()) throw std::invalid_argument("instance ranges need at least one dimension");
  std::mt19937_64 rng(mix_seed(seed, 0x696e7374ULL));
  using Dist = std::uniform_int_distribution<std::size_t>;
  SyntheticSpec spec;
  spec.batch_size = ranges.batch_size;
  spec.grid = ranges.grid;
  spec.masks = Dist(ranges.min_masks, ranges.max_masks)(rng);
  spec.tokens = Dist(ranges.min_tokens, ranges.max_tokens)(rng);
  spec.dim = ranges.dims[Dist(0, ranges.dims.size() - 1)(rng)];
  spec.seed = seed;
  return spec;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ShapeError("pearson: sequences differ in length");
  if (xs.size() < 2) throw std::invalid_argument("pearson: need at least 2 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double dx = xs[k] - mx;
    const double dy = ys[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DegenerateInput("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

SweepResult correlation_sweep(const SyntheticSpec& spec, const SweepOptions& options) {
  spec.validate();
  if (options.batches < 2) throw std::invalid_argument("sweep needs at least 2 batches");
  const std::size_t points = options.taus.size() * options.alphas.size();
  // Per point: loss terms in batch order, rows term then columns term.
  std::vector<std::vector<double>> exact_rows(points), exact_cols(points), approx_rows(points),
      approx_cols(points);
  std::vector<double> runtime(points, 0.0);

  for (std::size_t b = 0; b < options.batches; ++b) {
    SyntheticSpec s = spec;
    s.seed = spec.seed + b;
    const MiniBatch batch = gen_synthetic_batch(s);
    const SimilarityTensor s0 = compute_s0(batch);
    const auto trees = batch.trees();
    const Matrix q_bar = aggregate_exact(s0, trees, options.nodes).q_bar;
    const double e_rows = phi_gamma(q_bar, options.gamma);
    const double e_cols = phi_gamma(q_bar.transposed(), options.gamma);

    std::size_t p = 0;
    for (double tau : options.taus) {
      for (double alpha : options.alphas) {
        const auto start = Clock::now();
        const Matrix approx = s_bar(s0, trees, options.nodes, NlaConfig::t1(options.t1_act, tau),
                                    NlaConfig::t2(options.t2_act, tau, alpha));
        runtime[p] += seconds_since(start);
        exact_rows[p].push_back(e_rows);
        exact_cols[p].push_back(e_cols);
        approx_rows[p].push_back(phi_gamma(approx, options.gamma));
        approx_cols[p].push_back(phi_gamma(approx.transposed(), options.gamma));
        ++p;
      }
    }
  }

  // Zero variance (e.g. every hinge inactive) reports r = NaN rather than throwing.
  auto safe_pearson = [](std::span<const double> x, std::span<const double> y) {
    try {
      return pearson(x, y);
    } catch (const DegenerateInput&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };

  SweepResult out;
  std::size_t p = 0;
  for (double tau : options.taus) {
    for (double alpha : options.alphas) {
      SweepRow row;
      row.tau = tau;
      row.alpha = alpha;
      std::vector<double> exact_all(exact_rows[p]), approx_all(approx_rows[p]);
      exact_all.insert(exact_all.end(), exact_cols[p].begin(), exact_cols[p].end());
      approx_all.insert(approx_all.end(), approx_cols[p].begin(), approx_cols[p].end());
      for (std::size_t k = 0; k < exact_rows[p].size(); ++k) {
        row.exact_loss += exact_rows[p][k] + exact_cols[p][k];
        row.approx_loss += approx_rows[p][k] + approx_cols[p][k];
      }
      row.exact_loss /= static_cast<double>(options.batches);
      row.approx_loss /= static_cast<double>(options.batches);
      for (std::size_t k = 0; k < exact_all.size(); ++k)
        row.max_abs_err = std::max(row.max_abs_err, std::abs(exact_all[k] - approx_all[k]));
      row.pearson_r = safe_pearson(exact_all, approx_all);
      row.pearson_r_rows = safe_pearson(exact_rows[p], approx_rows[p]);
      row.pearson_r_cols = safe_pearson(exact_cols[p], approx_cols[p]);
      row.runtime_s = runtime[p];
      out.push_back(row);
      ++p;
    }
  }
  return out;
}

bool BoundsReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed(); });
}

BoundsReport verify_bounds(const VerifyOptions& options) {
  const double ln2 = std::numbers::ln2;
  Recorder relu_exact("t1_relu_exact");
  Recorder softplus_bound("t1_softplus_bound");
  Recorder lse_bound("lse_bound");
  Recorder powerset_sum("powerset_sum_identity");
  Recorder bracket("r2t_bracketing");
  Recorder sandwich("t2_lse_sandwich");
  Recorder endpoints("t2_endpoints");
  Recorder grid("t2_alpha_grid");
  Recorder gray("gray_vs_naive");
  Recorder fused("fused_vs_generic");
  Recorder monotone("t1_tau_monotone");
  Recorder bilinear("bilinearity");

  std::vector<double> taus_sorted = options.taus;
  std::sort(taus_sorted.begin(), taus_sorted.end());
  std::size_t grid_cells = 0, grid_misses = 0;
  double grid_worst = 0.0;

  for (std::size_t t = 0; t < options.trials; ++t) {
    const std::uint64_t seed = mix_seed(options.seed, t);
    const SyntheticSpec spec = sample_instance_spec(options.ranges, seed);
    const MiniBatch batch = gen_synthetic_batch(spec);
    const SimilarityTensor s0 = compute_s0(batch);
    const std::size_t c = batch.size();

    {
      // One free-standing (q, tau) draw per trial on top of the tensor columns.
      std::mt19937_64 rng(mix_seed(seed, 0x6c7365ULL));
      const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      std::vector<double> q(m);
      for (double& v : q) v = unit(rng);
      const double tau = std::pow(10.0, std::uniform_real_distribution<double>(-3.0, 0.0)(rng));
      check_powerset_sum(powerset_sum, q, tau, seed);
    }

    for (std::size_t i = 0; i < c; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        const ParseTree& tree = batch.items[j].text.tree;
        const auto nodes = enumerate_nodes(tree, options.nodes);
        const Matrix q = per_mask_node_scores(s0.cell(i, j), tree, nodes);
        const double masks = static_cast<double>(q.rows());
        const double k = static_cast<double>(q.cols());
        const ExactCell exact = exact_cell(q);

        const double relu = nla_t1_cell(q, Activation::Relu, 1.0);
        const double err1 = std::abs(relu - exact.t2r);
        relu_exact.record(err1 <= 1e-9, err1, seed, [&] {
          return describe({{"i", double(i)}, {"j", double(j)}, {"t1_relu", relu}, {"t2r", exact.t2r}});
        });

        for (double tau : options.taus) {
          const double gap = nla_t1_cell(q, Activation::Softplus, tau) - exact.t2r;
          const double bound = tau * masks * ln2;
          softplus_bound.record(gap >= -fp_slack(exact.t2r) && gap <= bound + fp_slack(exact.t2r), gap / bound,
                          seed, [&] { return describe({{"tau", tau}, {"gap", gap}, {"bound", bound}}); });
        }

        double previous = -std::numeric_limits<double>::infinity();
        for (double tau : taus_sorted) {
          const double v = nla_t1_cell(q, Activation::Softplus, tau);
          monotone.record(v >= previous - fp_slack(v), 0.0, seed,
                          [&] { return describe({{"tau", tau}, {"value", v}, {"previous", previous}}); });
          previous = v;
        }

        std::vector<double> column(q.rows());
        for (std::size_t b = 0; b < q.cols(); ++b) {
          double total = 0.0;
          for (std::size_t m = 0; m < q.rows(); ++m) {
            column[m] = q(m, b);
            total += column[m];
          }
          const double best = max_subset_score(column);
          for (double tau : options.taus) {
            const double log_e = log_exponential_sum_enumerated(column, tau);
            const double gap = tau * log_e - best;
            const double bound = tau * masks * ln2;
            lse_bound.record(gap >= -fp_slack(best) && gap <= bound + fp_slack(best), gap / bound, seed,
                             [&] { return describe({{"tau", tau}, {"gap", gap}, {"bound", bound}}); });

            check_powerset_sum(powerset_sum, column, tau, seed);
          }
        }

        const double lower = lambda_bound(q, 0.0);
        const double upper = lambda_bound(q, 1.0);
        bracket.record(lower <= exact.r2t + fp_slack(exact.r2t) && exact.r2t <= upper + fp_slack(exact.r2t), 0.0,
                       seed, [&] {
                         return describe({{"lambda0", lower}, {"r2t", exact.r2t}, {"lambda1", upper}});
                       });

        for (double tau : options.taus) {
          for (double alpha : options.alphas) {
            const double lam = lambda_bound(q, alpha);
            const double z_alpha = alpha * masks * ln2 + (1.0 - alpha) * std::log(k);
            const double lam_bar = nla_t2_cell(q, Activation::Tanh, tau, alpha) + tau * z_alpha;
            const double width = tau * (alpha * masks * ln2 + std::log(k));
            const double over = lam_bar - lam;
            sandwich.record(over >= -fp_slack(lam) && over <= width + fp_slack(lam), width > 0 ? over / width : 0.0,
                            seed, [&] {
                              return describe({{"tau", tau}, {"alpha", alpha}, {"lambda", lam}, {"lambda_bar", lam_bar}});
                            });
          }
          if (tau >= 0.1) {
            for (double alpha : options.alphas) {
              const double f = nla_t2_cell(q, Activation::Tanh, tau, alpha);
              double g = 0.0;
              try {
                g = nla_generic_cell(q, t2_layers(Activation::Tanh, tau, alpha), alpha);
              } catch (const NonFiniteError&) {
                g = std::numeric_limits<double>::quiet_NaN();
              }
              const double rel = std::abs(f - g) / std::max(std::abs(f), 1e-12);
              fused.record(rel <= 1e-8, rel, seed, [&] {
                return describe({{"tau", tau}, {"alpha", alpha}, {"fused", f}, {"generic", g}});
              });
            }
          }
        }

        const double gt = options.grid_tau;
        const double endpoint_bound = gt * (masks * ln2 + std::log(k));
        for (double alpha : {0.0, 1.0}) {
          const double v = nla_t2_cell(q, Activation::Tanh, gt, alpha);
          const double lam = alpha == 0.0 ? lower : upper;
          const double err = std::abs(v - lam);
          endpoints.record(err <= endpoint_bound, err / endpoint_bound, seed, [&] {
            return describe({{"alpha", alpha}, {"t2", v}, {"lambda", lam}, {"bound", endpoint_bound}});
          });
        }

        double best_err = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < options.alpha_grid; ++a) {
          const double alpha =
              options.alpha_grid == 1 ? 0.0 : static_cast<double>(a) / static_cast<double>(options.alpha_grid - 1);
          best_err = std::min(best_err, std::abs(nla_t2_cell(q, Activation::Tanh, gt, alpha) - exact.r2t));
        }
        ++grid_cells;
        grid_worst = std::max(grid_worst, best_err);
        if (best_err > options.grid_tolerance) {
          ++grid_misses;
          if (grid.result.violations.size() < Recorder::kMaxListed) {
            grid.result.violations.push_back(
                {seed, describe({{"i", double(i)}, {"j", double(j)}, {"best_err", best_err}, {"r2t", exact.r2t}})});
          }
        }

        if (q.rows() <= 12) {
          const ExactCell naive = exact_cell_naive(q);
          const double err = std::max(std::abs(naive.t2r - exact.t2r), std::abs(naive.r2t - exact.r2t));
          gray.record(err <= 1e-10, err, seed,
                      [&] { return describe({{"t2r_err", naive.t2r - exact.t2r}, {"r2t_err", naive.r2t - exact.r2t}}); });
        }

        // Q_{A,B} two ways: summed per-mask scores and <r_A, p_B>.
        const auto& image = batch.items[i].image;
        const auto& text = batch.items[j].text;
        const NodeTokenMasks token_masks = node_token_masks(text.tree, text.tokens.rows(), text.token_map);
        std::mt19937_64 rng(mix_seed(seed, 0x62696cULL + i * c + j));
        const std::uint64_t full = (std::uint64_t{1} << image.masks.size()) - 1;
        const SubsetId subset{std::uniform_int_distribution<std::uint64_t>(0, full)(rng)};
        const Vector r_a = region_set_embed(image.patches, image.masks, subset);
        for (std::size_t b = 0; b < nodes.size(); ++b) {
          const Vector p_b = phrase_node_embed(text.tokens, tree.node(nodes[b]), token_masks);
          const double direct = dot(r_a, p_b);
          const double summed = q_subset(q, subset, b);
          const double err = std::abs(direct - summed);
          bilinear.record(err <= 1e-10, err, seed,
                          [&] { return describe({{"subset", double(subset.bits)}, {"direct", direct}, {"summed", summed}}); });
        }
      }
    }
  }

  grid.result.evaluated = grid_cells;
  grid.result.worst = grid_worst;
  const double pass_fraction =
      grid_cells == 0 ? 1.0 : 1.0 - static_cast<double>(grid_misses) / static_cast<double>(grid_cells);
  grid.result.failures = pass_fraction >= options.grid_pass_fraction ? 0 : grid_misses;

  BoundsReport report;
  for (Recorder* r : {&relu_exact, &softplus_bound, &lse_bound, &powerset_sum, &bracket, &sandwich, &endpoints,
                      &grid, &gray, &fused, &monotone, &bilinear}) {
    report.checks.push_back(std::move(r->result));
  }
  return report;
}

std::vector<BenchRow> bench_scaling(const BenchOptions& options) {
  // Best-of-`repeats`, where each sample loops the kernel for at least 20 ms.
  auto time_kernel = [&](const std::function<void()>& kernel) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < std::max<std::size_t>(options.repeats, 1); ++r) {
      std::size_t calls = 0;
      const auto start = Clock::now();
      double elapsed = 0.0;
      do {
        kernel();
        ++calls;
        elapsed = seconds_since(start);
      } while (elapsed < 0.02);
      best = std::min(best, elapsed / static_cast<double>(calls));
    }
    return best;
  };

  std::vector<BenchRow> rows;
  for (std::size_t masks : options.mask_counts) {
    SyntheticSpec spec;
    spec.batch_size = options.batch_size;
    spec.tokens = options.tokens;
    spec.dim = options.dim;
    spec.masks = masks;
    spec.seed = options.seed;  // same texts for every M
    const MiniBatch batch = gen_synthetic_batch(spec);
    const SimilarityTensor s0 = compute_s0(batch);
    const auto trees = batch.trees();
    NodeSetOptions nodes;
    std::size_t max_k = 0;
    for (const auto& t : trees) max_k = std::max(max_k, enumerate_nodes(t, nodes).size());

    BenchRow row;
    row.masks = masks;
    const std::size_t c2 = options.batch_size * options.batch_size;
    // Live buffers: one M x K node-score block, per-node accumulators and
    // the C x C outputs.
    row.exact_bytes = (masks * max_k + 2 * max_k + 3 * c2) * sizeof(double);
    row.nla_bytes = (masks * max_k + max_k + 3 * c2) * sizeof(double);

    if (options.with_exact) {
      if (masks > options.cap) {
        try {
          aggregate_exact(s0, trees, nodes, options.cap);
        } catch (const CapExceeded&) {
          row.exact_refused = true;
        }
      } else {
        row.exact_s = time_kernel([&] { aggregate_exact(s0, trees, nodes, options.cap); });
      }
    }
    row.nla_s = time_kernel([&] { s_bar(s0, trees, nodes, options.t1, options.t2); });
    rows.push_back(row);
  }
  return rows;
}

GradcheckResult gradcheck(const SyntheticSpec& spec, const GradcheckOptions& options) {
  spec.validate();
  options.loss.validate();
  if (!(options.step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  if (options.configs.empty()) throw std::invalid_argument("gradcheck needs at least one NLA config");
  const bool has_relu = std::any_of(options.configs.begin(), options.configs.end(), [](const NlaConfig& c) {
    return c.variant == NlaVariant::T1 && c.act == Activation::Relu;
  });

  GradcheckResult result;
  const std::size_t max_draws = options.trials * 20 + 20;
  for (std::size_t draw = 0; draw < max_draws && result.trials < options.trials; ++draw) {
    SyntheticSpec s = spec;
    s.seed = mix_seed(spec.seed, draw);
    const MiniBatch batch = gen_synthetic_batch(s);
    const auto trees = batch.trees();
    SimilarityTensor s0 = compute_s0(batch);

    auto similarity = [&](const SimilarityTensor& t) {
      Matrix total(t.batch_size(), t.batch_size());
      for (const auto& cfg : options.configs) {
        const Matrix s3 = run_nla(t, trees, options.nodes, cfg).s3;
        for (std::size_t k = 0; k < total.data().size(); ++k) total.data()[k] += s3.data()[k];
      }
      return total;
    };
    auto loss = [&](const SimilarityTensor& t) { return total_loss(batch, similarity(t), options.loss); };

    const Matrix sim = similarity(s0);
    double margin = hinge_margin(sim, options.loss.gamma);
    if (has_relu) {
      for (std::size_t i = 0; i < s0.batch_size(); ++i)
        for (std::size_t j = 0; j < s0.batch_size(); ++j)
          for (double v : per_mask_node_scores(s0, i, j, trees[j], options.nodes).data())
            margin = std::min(margin, std::abs(v));
    }
    if (margin < options.kink_margin) {
      ++result.redrawn;
      continue;
    }

    const Matrix upstream = total_loss_grad(sim, options.loss);
    SimilarityTensor grad = s0.zeros_like();
    for (const auto& cfg : options.configs) {
      const SimilarityTensor g = nla_backward(s0, trees, options.nodes, cfg, upstream);
      for (std::size_t i = 0; i < s0.batch_size(); ++i)
        for (std::size_t j = 0; j < s0.batch_size(); ++j) {
          auto dst = grad.cell(i, j).data();
          auto src = g.cell(i, j).data();
          for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        }
    }

    std::mt19937_64 rng(mix_seed(s.seed, 0x67726164ULL));
    using Dist = std::uniform_int_distribution<std::size_t>;
    const std::size_t c = s0.batch_size();
    for (std::size_t e = 0; e < options.entries_per_trial; ++e) {
      const std::size_t i = Dist(0, c - 1)(rng);
      const std::size_t j = Dist(0, c - 1)(rng);
      const std::size_t m = Dist(0, s0.masks(i) - 1)(rng);
      const std::size_t leaf = Dist(0, s0.leaves(j) - 1)(rng);
      double& entry = s0.cell(i, j)(m, leaf);
      const double saved = entry;
      entry = saved + options.step;
      const double up = loss(s0);
      entry = saved - options.step;
      const double down = loss(s0);
      entry = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = grad.cell(i, j)(m, leaf);
      const double rel = std::abs(numeric - analytic) /
                         std::max({std::abs(numeric), std::abs(analytic), options.rel_floor});
      ++result.entries;
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst_seed = s.seed;
      }
    }
    ++result.trials;
  }
  return result;
}

}  // namespace powerset

// powerset: experiment CLI over the powerset alignment library.
//
// Every subcommand writes CSV to --out (stdout when omitted). Violations are
// reported as JSON lines on stderr and make the exit code 1; bad input exits 2.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "powerset/batch_io.hpp"
#include "powerset/harness.hpp"
#include "run_config.hpp"

using namespace powerset;
using json = nlohmann::ordered_json;

namespace {

struct Failure {
  std::string check;
  std::size_t evaluated = 0;
  std::size_t failures = 0;
  double worst = 0.0;
  std::vector<Violation> violations;
};

int report_failures(const std::vector<Failure>& failures) {
  for (const Failure& f : failures) {
    json rec{{"check", f.check}, {"evaluated", f.evaluated}, {"failures", f.failures}, {"worst", f.worst}};
    rec["violations"] = json::array();
    for (const Violation& v : f.violations) rec["violations"].push_back({{"seed", v.seed}, {"detail", v.detail}});
    std::cerr << rec.dump() << '\n';
  }
  return failures.empty() ? 0 : 1;
}

std::vector<double> parse_doubles(const std::string& list, const std::string& what) {
  std::vector<double> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size() && item.find_first_not_of(" ", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad number '" + item + "' in --" + what);
    }
  }
  if (out.empty()) throw std::invalid_argument("--" + what + " is empty");
  return out;
}

std::vector<std::size_t> parse_counts(const std::string& list, const std::string& what) {
  std::vector<std::size_t> out;
  for (double v : parse_doubles(list, what)) {
    if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v)))
      throw std::invalid_argument("--" + what + " expects nonnegative integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

PatchGrid parse_grid(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x != std::string::npos) return {std::stoul(text.substr(0, x)), std::stoul(text.substr(x + 1))};
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("--grid expects HxW, got '" + text + "'");
}

// Output sink: the --out file, or stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path);
    if (!file_) throw std::invalid_argument("cannot write " + path);
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--config", c.config, "key=value or JSON file of option defaults");
  cmd->add_option("--out", c.out, "output path (default stdout)");
}

struct ShapeFlags {
  std::size_t batch_size = 4;
  std::string grid = "7x7";
  std::size_t tokens = 6;
  std::size_t dim = 16;
  std::size_t masks = 10;
  std::size_t min_depth = 1;
  std::size_t max_depth = 0;

  SyntheticSpec spec(std::uint64_t seed) const {
    SyntheticSpec s;
    s.batch_size = batch_size;
    s.grid = parse_grid(grid);
    s.tokens = tokens;
    s.dim = dim;
    s.masks = masks;
    s.min_depth = min_depth;
    s.max_depth = max_depth;
    s.seed = seed;
    return s;
  }
};

void add_shape(CLI::App* cmd, ShapeFlags& s) {
  cmd->add_option("--batch-size", s.batch_size, "C, pairs per batch")->capture_default_str();
  cmd->add_option("--grid", s.grid, "patch grid HxW")->capture_default_str();
  cmd->add_option("--tokens", s.tokens, "L, tokens per caption")->capture_default_str();
  cmd->add_option("--dim", s.dim, "D, embedding width")->capture_default_str();
  cmd->add_option("--masks", s.masks, "M, region masks per image")->capture_default_str();
  cmd->add_option("--min-depth", s.min_depth, "minimum tree depth")->capture_default_str();
  cmd->add_option("--max-depth", s.max_depth, "maximum tree depth, 0 for none")->capture_default_str();
}

struct BatchSource {
  ShapeFlags shape;
  std::string input;
  std::string mask_source;
  std::string mask_file;
  std::string policy = "all-nodes";
  bool dedupe = false;

  MiniBatch load(std::uint64_t seed) const {
    MiniBatch batch = input.empty() ? gen_synthetic_batch(shape.spec(seed)) : read_batch(std::filesystem::path(input));
    if (mask_source == "random") {
      resample_masks(batch, shape.masks, mix_seed(seed, 0x6d61736b));
    } else if (mask_source == "file") {
      if (mask_file.empty()) throw std::invalid_argument("--mask-source file needs --mask-file");
      apply_mask_file(batch, mask_file);
    }
    batch.validate();
    return batch;
  }

  NodeSetOptions nodes() const {
    NodeSetOptions o;
    o.policy = parse_node_policy(policy);
    o.dedupe_spans = dedupe;
    return o;
  }
};

void add_source(CLI::App* cmd, BatchSource& s) {
  add_shape(cmd, s.shape);
  cmd->add_option("--input", s.input, "batch JSONL; synthesized from the shape flags when omitted");
  cmd->add_option("--mask-source", s.mask_source, "replace the batch masks: random or file")
      ->check(CLI::IsMember({"random", "file"}));
  cmd->add_option("--mask-file", s.mask_file, "mask JSONL for --mask-source file");
  cmd->add_option("--policy", s.policy, "node set: all-nodes or internal-only")->capture_default_str();
  cmd->add_flag("--dedupe", s.dedupe, "keep one node per distinct leaf span");
}

struct NlaFlags {
  std::string act;
  double tau = 0.001;
  double alpha = 0.75;
  std::string t1_act = "softplus";
  std::string t2_act = "tanh";

  NlaConfig t1() const { return NlaConfig::t1(parse_activation(act.empty() ? t1_act : act), tau); }
  NlaConfig t2() const { return NlaConfig::t2(parse_activation(act.empty() ? t2_act : act), tau, alpha); }
  // S-bar pairs two different activation families, so --act does not apply.
  NlaConfig sbar_t1() const { return NlaConfig::t1(parse_activation(t1_act), tau); }
  NlaConfig sbar_t2() const { return NlaConfig::t2(parse_activation(t2_act), tau, alpha); }
};

void add_nla(CLI::App* cmd, NlaFlags& n) {
  cmd->add_option("--act", n.act, "activation for a single-variant run");
  cmd->add_option("--tau", n.tau, "temperature")->capture_default_str();
  cmd->add_option("--alpha", n.alpha, "T2 interpolation in [0, 1]")->capture_default_str();
  cmd->add_option("--t1-act", n.t1_act, "T1 activation inside S-bar")->capture_default_str();
  cmd->add_option("--t2-act", n.t2_act, "T2 activation inside S-bar")->capture_default_str();
}

int run_gen(const Common& c, const ShapeFlags& shape) {
  Output out(c.out);
  write_batch(out.stream(), gen_synthetic_batch(shape.spec(c.seed)));
  return 0;
}

int run_exact(const Common& c, const BatchSource& src, std::size_t cap) {
  const MiniBatch batch = src.load(c.seed);
  const AggregationResult agg = aggregate_exact(compute_s0(batch), batch.trees(), src.nodes(), cap);
  Output out(c.out);
  std::ostream& os = out.stream();
  os << "i,j,q_t2r,q_r2t,q_bar\n";
  for (std::size_t i = 0; i < batch.size(); ++i)
    for (std::size_t j = 0; j < batch.size(); ++j)
      os << i << ',' << j << ',' << format_double(agg.q_t2r(i, j)) << ',' << format_double(agg.q_r2t(i, j)) << ','
         << format_double(agg.q_bar(i, j)) << '\n';
  return 0;
}

int run_nla_cmd(const Common& c, const BatchSource& src, const NlaFlags& flags, const std::string& variant) {
  const MiniBatch batch = src.load(c.seed);
  const SimilarityTensor s0 = compute_s0(batch);
  const auto trees = batch.trees();
  Matrix result;
  if (variant == "sbar") {
    result = s_bar(s0, trees, src.nodes(), flags.sbar_t1(), flags.sbar_t2());
  } else {
    result = run_nla(s0, trees, src.nodes(), variant == "t1" ? flags.t1() : flags.t2()).s3;
  }
  Output out(c.out);
  write_matrix_csv(out.stream(), result);
  return 0;
}

int run_loss(const Common& c, const BatchSource& src, const NlaFlags& flags, const LossConfig& loss,
             std::size_t cap) {
  loss.validate();
  const MiniBatch batch = src.load(c.seed);
  const SimilarityTensor s0 = compute_s0(batch);
  const auto trees = batch.trees();
  const Matrix exact = aggregate_exact(s0, trees, src.nodes(), cap).q_bar;
  const Matrix approx = s_bar(s0, trees, src.nodes(), flags.sbar_t1(), flags.sbar_t2());
  Output out(c.out);
  std::ostream& os = out.stream();
  os << "term,exact,approx,diff\n";
  auto row = [&](const char* name, double e, double a) {
    os << name << ',' << format_double(e) << ',' << format_double(a) << ',' << format_double(a - e) << '\n';
  };
  row("triplet", triplet_loss(exact, loss.gamma), triplet_loss(approx, loss.gamma));
  row("total", total_loss(batch, exact, loss), total_loss(batch, approx, loss));
  return 0;
}

struct SweepFlags {
  std::string taus = "0.1,0.01,0.001";
  std::string alphas = "0,0.25,0.5,0.75,1";
  std::size_t batches = 200;
  double gamma = 0.2;
  double min_r = -1.0;
  bool custom_shape = false;
};

int run_sweep(const Common& c, const SweepFlags& f, const ShapeFlags& shape, const BatchSource& src,
              const NlaFlags& nla) {
  SyntheticSpec spec = f.custom_shape ? shape.spec(c.seed) : sweep_spec(c.seed);
  SweepOptions opts;
  opts.taus = parse_doubles(f.taus, "taus");
  opts.alphas = parse_doubles(f.alphas, "alphas");
  opts.batches = f.batches;
  opts.gamma = f.gamma;
  opts.t1_act = parse_activation(nla.t1_act);
  opts.t2_act = parse_activation(nla.t2_act);
  opts.nodes = src.nodes();
  const SweepResult rows = correlation_sweep(spec, opts);

  Output out(c.out);
  std::ostream& os = out.stream();
  os << "tau,alpha,exact_loss,approx_loss,pearson_r,pearson_r_rows,pearson_r_cols,max_abs_err,runtime_s\n";
  Failure low{"sweep_min_r"};
  for (const SweepRow& r : rows) {
    os << format_double(r.tau) << ',' << format_double(r.alpha) << ',' << format_double(r.exact_loss) << ','
       << format_double(r.approx_loss) << ',' << format_double(r.pearson_r) << ',' << format_double(r.pearson_r_rows)
       << ',' << format_double(r.pearson_r_cols) << ',' << format_double(r.max_abs_err) << ','
       << format_double(r.runtime_s) << '\n';
    ++low.evaluated;
    low.worst = low.evaluated == 1 ? r.pearson_r : std::min(low.worst, r.pearson_r);
    if (r.pearson_r < f.min_r) {
      ++low.failures;
      std::ostringstream d;
      d << "tau=" << r.tau << " alpha=" << r.alpha << " r=" << r.pearson_r;
      low.violations.push_back({c.seed, d.str()});
    }
  }
  return report_failures(low.failures ? std::vector<Failure>{low} : std::vector<Failure>{});
}

struct VerifyFlags {
  std::size_t trials = 200;
  std::string taus = "1,0.1,0.01,0.001";
  std::string alphas = "0,0.25,0.5,0.75,1";
  double grid_tau = 1e-4;
  std::size_t alpha_grid = 21;
  double grid_tolerance = 0.02;
  double grid_pass_fraction = 0.99;
  std::size_t min_masks = 1;
  std::size_t max_masks = 12;
  std::size_t min_tokens = 1;
  std::size_t max_tokens = 8;
  std::string dims = "4,64";
  std::string grid = "7x7";
};

int run_verify(const Common& c, const VerifyFlags& f, const BatchSource& src) {
  VerifyOptions opts;
  opts.trials = f.trials;
  opts.seed = c.seed;
  opts.taus = parse_doubles(f.taus, "taus");
  opts.alphas = parse_doubles(f.alphas, "alphas");
  opts.grid_tau = f.grid_tau;
  opts.alpha_grid = f.alpha_grid;
  opts.grid_tolerance = f.grid_tolerance;
  opts.grid_pass_fraction = f.grid_pass_fraction;
  opts.ranges.min_masks = f.min_masks;
  opts.ranges.max_masks = f.max_masks;
  opts.ranges.min_tokens = f.min_tokens;
  opts.ranges.max_tokens = f.max_tokens;
  opts.ranges.dims = parse_counts(f.dims, "dims");
  opts.ranges.grid = parse_grid(f.grid);
  opts.nodes = src.nodes();
  const BoundsReport report = verify_bounds(opts);

  Output out(c.out);
  std::ostream& os = out.stream();
  os << "check,evaluated,failures,worst,passed\n";
  std::vector<Failure> failures;
  for (const CheckResult& r : report.checks) {
    os << r.name << ',' << r.evaluated << ',' << r.failures << ',' << format_double(r.worst) << ','
       << (r.passed() ? 1 : 0) << '\n';
    if (!r.passed()) failures.push_back({r.name, r.evaluated, r.failures, r.worst, r.violations});
  }
  return report_failures(failures);
}

struct BenchFlags {
  std::string masks = "4,6,8,10,12,14,16";
  bool no_exact = false;
  std::size_t batch_size = 8;
  std::size_t tokens = 8;
  std::size_t dim = 32;
  std::size_t repeats = 5;
  double max_ratio = 2.0;
  double min_growth = 100.0;
};

int run_bench(const Common& c, const BenchFlags& f, const NlaFlags& nla, std::size_t cap) {
  BenchOptions opts;
  opts.mask_counts = parse_counts(f.masks, "masks");
  opts.with_exact = !f.no_exact;
  opts.batch_size = f.batch_size;
  opts.tokens = f.tokens;
  opts.dim = f.dim;
  opts.repeats = f.repeats;
  opts.cap = cap;
  opts.seed = c.seed;
  opts.t1 = nla.sbar_t1();
  opts.t2 = nla.sbar_t2();
  const std::vector<BenchRow> rows = bench_scaling(opts);

  Output out(c.out);
  std::ostream& os = out.stream();
  os << "masks,exact_s,exact_refused,nla_s,exact_bytes,nla_bytes\n";
  std::map<std::size_t, double> exact;
  for (const BenchRow& r : rows) {
    os << r.masks << ',' << (r.exact_s ? format_double(*r.exact_s) : "") << ',' << (r.exact_refused ? 1 : 0) << ','
       << format_double(r.nla_s) << ',' << r.exact_bytes << ',' << r.nla_bytes << '\n';
    if (r.exact_s) exact[r.masks] = *r.exact_s;
  }

  std::vector<Failure> failures;
  // NLA time per mask, relative to the smallest M, must stay within max_ratio.
  const auto smallest = std::min_element(rows.begin(), rows.end(),
                                         [](const BenchRow& a, const BenchRow& b) { return a.masks < b.masks; });
  if (smallest != rows.end() && smallest->masks > 0) {
    Failure lin{"nla_linear"};
    const double per_mask = smallest->nla_s / static_cast<double>(smallest->masks);
    for (const BenchRow& r : rows) {
      const double ratio = r.nla_s / (per_mask * static_cast<double>(r.masks));
      ++lin.evaluated;
      lin.worst = std::max(lin.worst, ratio);
      if (ratio > f.max_ratio) {
        ++lin.failures;
        lin.violations.push_back({c.seed, "M=" + std::to_string(r.masks) + " ratio=" + format_double(ratio)});
      }
    }
    if (lin.failures) failures.push_back(lin);
  }
  if (exact.count(8) && exact.count(16)) {
    const double growth = exact[16] / exact[8];
    if (growth < f.min_growth)
      failures.push_back({"exact_exponential", 1, 1, growth, {{c.seed, "exact(16)/exact(8)=" + format_double(growth)}}});
  }
  return report_failures(failures);
}

struct GradFlags {
  std::string variant = "t2";
  std::size_t trials = 100;
  std::size_t entries = 16;
  double step = 1e-5;
  double tolerance = 1e-4;
};

int run_gradcheck(const Common& c, const GradFlags& f, const ShapeFlags& shape, const BatchSource& src,
                  const NlaFlags& nla, const LossConfig& loss) {
  GradcheckOptions opts;
  if (f.variant == "t1") {
    opts.configs = {nla.t1()};
  } else if (f.variant == "t2") {
    opts.configs = {nla.t2()};
  } else {
    opts.configs = {nla.sbar_t1(), nla.sbar_t2()};
  }
  opts.loss = loss;
  opts.trials = f.trials;
  opts.entries_per_trial = f.entries;
  opts.step = f.step;
  opts.nodes = src.nodes();
  const GradcheckResult r = gradcheck(shape.spec(c.seed), opts);

  Output out(c.out);
  out.stream() << "variant,trials,entries,redrawn,max_rel_err,worst_seed\n"
               << f.variant << ',' << r.trials << ',' << r.entries << ',' << r.redrawn << ','
               << format_double(r.max_rel_err) << ',' << r.worst_seed << '\n';
  if (r.max_rel_err < f.tolerance) return 0;
  return report_failures({{"gradcheck", r.entries, 1, r.max_rel_err,
                           {{r.worst_seed, "max_rel_err=" + format_double(r.max_rel_err)}}}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Powerset alignment: exact aggregation, NLA approximations and their checks"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Common common;
  BatchSource source;
  NlaFlags nla;
  LossConfig loss;
  std::size_t cap = kDefaultMaskCap;
  std::string variant = "sbar";
  SweepFlags sweep;
  VerifyFlags verify;
  BenchFlags bench;
  GradFlags grad;

  auto add_loss = [&](CLI::App* cmd) {
    cmd->add_option("--gamma", loss.gamma, "triplet margin")->capture_default_str();
    cmd->add_option("--lambda", loss.lambda, "triplet weight")->capture_default_str();
    cmd->add_option("--clip-temperature", loss.clip_temperature, "CLIP softmax temperature")->capture_default_str();
  };

  auto* gen = app.add_subcommand("gen", "emit a synthetic batch as JSONL");
  add_common(gen, common);
  add_shape(gen, source.shape);

  auto* exact = app.add_subcommand("exact", "exact Q matrices of a batch");
  add_common(exact, common);
  add_source(exact, source);
  exact->add_option("--cap", cap, "largest M the exact path accepts")->capture_default_str();

  auto* nla_cmd = app.add_subcommand("nla", "NLA similarity matrix of a batch");
  add_common(nla_cmd, common);
  add_source(nla_cmd, source);
  add_nla(nla_cmd, nla);
  nla_cmd->add_option("--variant", variant, "t1, t2 or sbar")
      ->check(CLI::IsMember({"t1", "t2", "sbar"}))
      ->capture_default_str();

  auto* loss_cmd = app.add_subcommand("loss", "exact and S-bar losses of a batch");
  add_common(loss_cmd, common);
  add_source(loss_cmd, source);
  add_nla(loss_cmd, nla);
  add_loss(loss_cmd);
  loss_cmd->add_option("--cap", cap, "largest M the exact path accepts")->capture_default_str();

  auto* sweep_cmd = app.add_subcommand("sweep", "correlation of exact and S-bar triplet losses over (tau, alpha)");
  add_common(sweep_cmd, common);
  add_source(sweep_cmd, source);
  add_nla(sweep_cmd, nla);
  sweep_cmd->add_option("--taus", sweep.taus, "comma-separated temperatures")->capture_default_str();
  sweep_cmd->add_option("--alphas", sweep.alphas, "comma-separated alphas")->capture_default_str();
  sweep_cmd->add_option("--batches", sweep.batches, "batches per point")->capture_default_str();
  sweep_cmd->add_option("--gamma", sweep.gamma, "triplet margin")->capture_default_str();
  sweep_cmd->add_option("--min-r", sweep.min_r, "fail any point with pooled r below this")->capture_default_str();
  sweep_cmd->add_flag("--custom-shape", sweep.custom_shape,
                      "use the shape flags instead of the 14x14, D=512, M=10, L=7, C=8 default");

  auto* verify_cmd = app.add_subcommand("verify", "check every identity and bound on random instances");
  add_common(verify_cmd, common);
  verify_cmd->add_option("--trials", verify.trials, "random instances")->capture_default_str();
  verify_cmd->add_option("--taus", verify.taus, "comma-separated temperatures")->capture_default_str();
  verify_cmd->add_option("--alphas", verify.alphas, "comma-separated alphas")->capture_default_str();
  verify_cmd->add_option("--grid-tau", verify.grid_tau, "tau of the alpha-grid search")->capture_default_str();
  verify_cmd->add_option("--alpha-grid", verify.alpha_grid, "alpha grid points")->capture_default_str();
  verify_cmd->add_option("--grid-tolerance", verify.grid_tolerance, "allowed |T2 - R2T| after the grid search")
      ->capture_default_str();
  verify_cmd->add_option("--grid-pass-fraction", verify.grid_pass_fraction, "required share of cells")
      ->capture_default_str();
  verify_cmd->add_option("--min-masks", verify.min_masks)->capture_default_str();
  verify_cmd->add_option("--max-masks", verify.max_masks)->capture_default_str();
  verify_cmd->add_option("--min-tokens", verify.min_tokens)->capture_default_str();
  verify_cmd->add_option("--max-tokens", verify.max_tokens)->capture_default_str();
  verify_cmd->add_option("--dims", verify.dims, "comma-separated embedding widths")->capture_default_str();
  verify_cmd->add_option("--grid", verify.grid, "patch grid HxW")->capture_default_str();
  verify_cmd->add_option("--policy", source.policy, "node set: all-nodes or internal-only")->capture_default_str();
  verify_cmd->add_flag("--dedupe", source.dedupe, "keep one node per distinct leaf span");

  auto* bench_cmd = app.add_subcommand("bench", "time exact and NLA aggregation against M");
  add_common(bench_cmd, common);
  add_nla(bench_cmd, nla);
  bench_cmd->add_option("--masks", bench.masks, "comma-separated mask counts")->capture_default_str();
  bench_cmd->add_flag("--no-exact", bench.no_exact, "time only the NLA path");
  bench_cmd->add_option("--batch-size", bench.batch_size)->capture_default_str();
  bench_cmd->add_option("--tokens", bench.tokens)->capture_default_str();
  bench_cmd->add_option("--dim", bench.dim)->capture_default_str();
  bench_cmd->add_option("--repeats", bench.repeats, "best-of count")->capture_default_str();
  bench_cmd->add_option("--cap", cap, "largest M the exact path accepts")->capture_default_str();
  bench_cmd->add_option("--max-ratio", bench.max_ratio, "allowed NLA slowdown over linear")->capture_default_str();
  bench_cmd->add_option("--min-growth", bench.min_growth, "required exact(16)/exact(8)")->capture_default_str();

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite differences against the analytic NLA gradient");
  add_common(grad_cmd, common);
  add_source(grad_cmd, source);
  add_nla(grad_cmd, nla);
  add_loss(grad_cmd);
  grad_cmd->add_option("--variant", grad.variant, "t1, t2 or sbar")
      ->check(CLI::IsMember({"t1", "t2", "sbar"}))
      ->capture_default_str();
  grad_cmd->add_option("--trials", grad.trials)->capture_default_str();
  grad_cmd->add_option("--entries", grad.entries, "S0 entries per trial")->capture_default_str();
  grad_cmd->add_option("--step", grad.step, "central difference step")->capture_default_str();
  grad_cmd->add_option("--tolerance", grad.tolerance, "allowed relative error")->capture_default_str();

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = powerset::cli::expand_config_arguments(args);
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << '\n';
    return 2;
  }

  try {
    if (*gen) return run_gen(common, source.shape);
    if (*exact) return run_exact(common, source, cap);
    if (*nla_cmd) return run_nla_cmd(common, source, nla, variant);
    if (*loss_cmd) return run_loss(common, source, nla, loss, cap);
    if (*sweep_cmd) return run_sweep(common, sweep, source.shape, source, nla);
    if (*verify_cmd) return run_verify(common, verify, source);
    if (*bench_cmd) return run_bench(common, bench, nla, cap);
    if (*grad_cmd) return run_gradcheck(common, grad, source.shape, source, nla, loss);
  } catch (const CapExceeded& e) {
    std::cerr << json{{"error", e.what()}, {"masks", e.masks()}, {"cap", e.cap()}}.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << '\n';
    return 2;
  }
  return 0;
}

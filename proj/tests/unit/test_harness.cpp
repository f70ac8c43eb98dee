#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "powerset/harness.hpp"

using namespace powerset;
using doctest::Approx;

TEST_CASE("synthetic batches are deterministic") {
  SyntheticSpec spec;
  spec.seed = 123;
  const MiniBatch a = gen_synthetic_batch(spec);
  const MiniBatch b = gen_synthetic_batch(spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.items[i].image.patches == b.items[i].image.patches);
    CHECK(a.items[i].image.masks == b.items[i].image.masks);
    CHECK(a.items[i].text.tokens == b.items[i].text.tokens);
    CHECK(a.items[i].text.tree == b.items[i].text.tree);
  }
  spec.seed = 124;
  CHECK_FALSE(gen_synthetic_batch(spec).items[0].image.patches == a.items[0].image.patches);
}

TEST_CASE("synthetic rows are unit length") {
  SyntheticSpec spec;
  spec.dim = 9;
  const MiniBatch batch = gen_synthetic_batch(spec);
  for (const auto& item : batch.items) {
    for (std::size_t r = 0; r < item.image.patches.rows(); ++r) CHECK(l2_norm(item.image.patches.row(r)) == Approx(1.0));
    for (std::size_t r = 0; r < item.text.tokens.rows(); ++r) CHECK(l2_norm(item.text.tokens.row(r)) == Approx(1.0));
    CHECK(l2_norm(item.image.global) == Approx(1.0));
  }
}

TEST_CASE("one-dimensional embeddings are +-1") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SyntheticSpec spec;
    spec.dim = 1;
    spec.seed = seed;
    const MiniBatch batch = gen_synthetic_batch(spec);
    CHECK_NOTHROW(compute_s0(batch));
    for (const auto& item : batch.items) {
      for (double v : item.image.patches.data()) CHECK(std::abs(v) == 1.0);
      for (double v : item.text.tokens.data()) CHECK(std::abs(v) == 1.0);
    }
  }
}

TEST_CASE("synthetic shape contract") {
  SyntheticSpec spec;
  spec.batch_size = 2;
  spec.masks = 3;
  spec.tokens = 4;
  const MiniBatch batch = gen_synthetic_batch(spec);
  const SimilarityTensor s0 = compute_s0(batch);
  CHECK(s0.batch_size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(s0.masks(i) == 3);
    CHECK(s0.leaves(i) == 4);
  }
  spec.batch_size = 1;
  CHECK_THROWS(gen_synthetic_batch(spec));
}

TEST_CASE("random binary trees") {
  oracle::Gen gen(83);
  for (int t = 0; t < 200; ++t) {
    const std::size_t leaves = gen.index(1, 12);
    const ParseTree tree = random_binary_tree(leaves, 1, 0, gen.index(0, 1u << 20));
    CHECK(tree.leaf_count() == leaves);
    CHECK(parse_bracketed(tree.render()) == tree);
    for (const TreeNode& n : tree.nodes())
      if (!n.is_leaf) CHECK((n.children.size() == 2 || (leaves == 1 && n.children.size() == 1)));
  }
  // A binary tree over 8 leaves has between 3 and 7 levels.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ParseTree tree = random_binary_tree(8, 4, 5, seed);
    CHECK(tree.depth() >= 4);
    CHECK(tree.depth() <= 5);
  }
}

TEST_CASE("pearson") {
  const std::vector<double> x{1.0, 2.0, 3.0};
  CHECK(pearson(x, x) == Approx(1.0));
  CHECK(pearson(x, std::vector<double>{-1.0, -2.0, -3.0}) == Approx(-1.0));
  CHECK(pearson(x, std::vector<double>{2.0, 4.0, 7.0}) == Approx(0.9933992677987828).epsilon(1e-14));
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1.0, 1.0, 1.0}), DegenerateInput);
  CHECK_THROWS(pearson(x, std::vector<double>{1.0, 2.0}));

  oracle::Gen gen(89);
  for (int t = 0; t < 200; ++t) {
    const auto a = gen.vec(gen.index(2, 30));
    const auto b = gen.vec(a.size());
    const double r = pearson(a, b);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
    CHECK(pearson(b, a) == Approx(r));
  }
}

TEST_CASE("verify_bounds passes its exact checks on a small run") {
  VerifyOptions opts;
  opts.trials = 25;
  opts.seed = 9;
  const BoundsReport report = verify_bounds(opts);
  for (const CheckResult& c : report.checks) {
    CAPTURE(c.name);
    CHECK(c.evaluated > 0);
    if (c.name != "t2_alpha_grid") CHECK(c.passed());
  }
}

TEST_CASE("correlation sweep rows") {
  SyntheticSpec spec;
  spec.masks = 6;
  SweepOptions opts;
  opts.batches = 20;
  opts.taus = {0.01};
  opts.alphas = {0.0, 1.0};
  const SweepResult rows = correlation_sweep(spec, opts);
  REQUIRE(rows.size() == 2);
  for (const SweepRow& r : rows) {
    CHECK(r.pearson_r <= 1.0);
    CHECK(r.pearson_r >= -1.0);
    CHECK(r.max_abs_err >= 0.0);
  }
  CHECK(rows[0].exact_loss == rows[1].exact_loss);
}

TEST_CASE("bench refuses beyond the cap") {
  BenchOptions opts;
  opts.mask_counts = {4, 21};
  opts.batch_size = 2;
  opts.tokens = 3;
  opts.dim = 4;
  opts.repeats = 1;
  const auto rows = bench_scaling(opts);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].exact_s.has_value());
  CHECK_FALSE(rows[0].exact_refused);
  CHECK(rows[1].exact_refused);
  CHECK_FALSE(rows[1].exact_s.has_value());
  CHECK(rows[1].nla_s > 0.0);
}

TEST_CASE("gradcheck: small instances and zero upstream") {
  SyntheticSpec spec;
  spec.masks = 4;
  spec.tokens = 4;
  spec.dim = 8;
  GradcheckOptions opts;
  opts.trials = 10;
  opts.configs = {NlaConfig::t2(Activation::Tanh, 0.01, 0.75)};
  CHECK(gradcheck(spec, opts).max_rel_err < 1e-4);

  opts.configs = {NlaConfig::t1(Activation::Relu, 1.0)};
  CHECK(gradcheck(spec, opts).max_rel_err < 1e-6);

  // lambda = 0 zeroes the upstream gradient; both sides must vanish.
  opts.loss.lambda = 0.0;
  opts.configs = {NlaConfig::t2(Activation::Tanh, 0.01, 0.75)};
  const GradcheckResult zero = gradcheck(spec, opts);
  CHECK(zero.max_rel_err == 0.0);
}
